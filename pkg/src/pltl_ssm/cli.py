"""Command-line front end.

Exit status: 0 on success, 1 when a verification finds a mismatch, 2 on usage,
parse or compile errors.  ``--config FILE`` reads ``key = value`` lines that
stand for ``--key value`` flags; flags given on the command line win.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from . import corpus, semantics
from .compiler import CompileError, compile
from .formula import (
    FormulaError, atoms, lower_to_crasp, nesting_depth, normalize_mod_lcm, parse, pretty,
    sequential_decomposition,
)
from .numerics import Fixed, ModeError, parse_mode
from .semantics import (
    BudgetExceeded, TraceError, all_letters, enumerate_language, format_trace, parse_trace,
    singleton_letters,
)
from .ssm import ExecutionError, GatePolicy, accepts, from_json, run, to_json
from .verify import StabilizationFailure, aa_star_demo, check_equivalence, monotonicity_experiment


class UsageError(Exception):
    pass


def _read_formula(text: str):
    if text is None:
        raise UsageError("--formula is required")
    if os.path.isfile(text):
        with open(text, encoding="utf-8") as fh:
            text = fh.read()
    return parse(text)


def _props(args, f=None) -> list[str]:
    declared = [p.strip() for p in (args.alphabet or "").split(",") if p.strip()]
    extra = atoms(f) if f is not None else set()
    return sorted(set(declared) | extra)


def _model(args, trace=()):
    """Load ``--model`` or compile ``--formula``; returns (model, formula or None).

    When compiling, propositions mentioned in ``trace`` join the universe.
    """
    if getattr(args, "model", None):
        with open(args.model, encoding="utf-8") as fh:
            model = from_json(fh.read())
        return model, model.formula
    f = _read_formula(args.formula)
    mode = parse_mode(args.mode) if getattr(args, "mode", None) else None
    props = sorted(set(_props(args, f)).union(*trace))
    return compile(f, args.policy or "diagonal", mode_hint=mode, props=props), f


def _emit(args, text: str):
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        print(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True)


# --- subcommands ---------------------------------------------------------------

def cmd_parse(args):
    f = _read_formula(args.formula)
    levels = sequential_decomposition(f)
    if args.json:
        _emit(args, _dump({"formula": pretty(f), "nesting_depth": nesting_depth(f),
                           "levels": [sorted(pretty(g) for g in lv) for lv in levels]}))
        return 0
    lines = [pretty(f), f"nesting depth {nesting_depth(f)}"]
    for k, lv in enumerate(levels):
        lines.append(f"  M{k}: " + ", ".join(sorted(pretty(g) for g in lv)))
    _emit(args, "\n".join(lines))
    return 0


def cmd_eval(args):
    f = _read_formula(args.formula)
    if args.trace is None:
        raise UsageError("--trace is required")
    trace = parse_trace(args.trace)
    _emit(args, "true" if semantics.eval(f, trace) else "false")
    return 0


def cmd_compile(args):
    model, _ = _model(args)
    for w in model.warnings:
        print(f"warning: {w}", file=sys.stderr)
    _emit(args, to_json(model))
    return 0


def _trace_arg(args):
    if args.trace is None:
        raise UsageError("--trace is required")
    trace = parse_trace(args.trace)
    if not trace:
        raise UsageError("the model has no output on the empty trace")
    return trace


def cmd_run(args):
    trace = _trace_arg(args)
    model, _ = _model(args, trace)
    mode = parse_mode(args.mode or "exact")
    res = run(model, trace, mode)
    outputs = [str(v) for v in res.output]
    if args.json:
        _emit(args, _dump({"mode": str(res.mode), "trace": format_trace(trace),
                           "outputs": outputs, "accepted": res.output[-1] == 1}))
        return 0
    lines = [f"mode {res.mode}"]
    for t, (letter, y) in enumerate(zip(trace, outputs), start=1):
        lines.append(f"{t:>4}  {format_trace((letter,)):<10} y={y}")
    lines.append("accepted" if res.output[-1] == 1 else "rejected")
    _emit(args, "\n".join(lines))
    return 0


def cmd_accepts(args):
    trace = _trace_arg(args)
    model, _ = _model(args, trace)
    _emit(args, "true" if accepts(model, trace, parse_mode(args.mode or "exact")) else "false")
    return 0


def cmd_enumerate(args):
    f = _read_formula(args.formula)
    props = _props(args, f)
    letters = singleton_letters(props) if args.singleton else all_letters(props)
    words = enumerate_language(f, props, args.max_len, letters=letters, budget=args.budget)
    order = {x: i for i, x in enumerate(letters)}
    words = sorted(words, key=lambda w: (len(w), [order[x] for x in w]))
    shown = [format_trace(w) or "(empty)" for w in words]
    _emit(args, _dump(shown) if args.json else "\n".join(shown))
    return 0


def cmd_check(args):
    f = _read_formula(args.formula)
    mode = parse_mode(args.mode or "exact")
    rep = check_equivalence(f, args.policy or "diagonal", mode, props=_props(args, f),
                            max_len=args.max_len, singleton=bool(args.singleton),
                            budget=args.budget)
    _emit(args, _dump(rep.to_dict()) if args.json else rep.table())
    return 0 if rep.equivalent else 1


def cmd_monotone(args):
    model, _ = _model(args)
    mode = parse_mode(args.mode or "fixed:12:4")
    if not isinstance(mode, Fixed):
        raise UsageError("monotone needs a fixed:I:F mode")
    if not args.symbol:
        raise UsageError("--symbol is required")
    letter = parse_trace(args.symbol)
    if len(letter) != 1:
        raise UsageError("--symbol must be a single letter")
    rep = monotonicity_experiment(model, letter[0], mode, args.window)
    if args.json:
        _emit(args, _dump(rep.to_dict()))
    else:
        d = rep.to_dict()
        _emit(args, "\n".join([
            f"formula    {d['formula']}",
            f"symbol     {d['symbol']}",
            f"mode       {d['mode']}",
            f"stable at  N={d['stabilization_point']} (window {d['window']}, cap {d['cap']})",
            f"output     {', '.join(d['stable_output'])}",
            f"verdicts   {d['verdicts']}",
        ]))
    return 0


def cmd_demo_aastar(args):
    mode = parse_mode(args.mode or "fixed:12:4")
    if not isinstance(mode, Fixed):
        raise UsageError("demo-aastar needs a fixed:I:F mode")
    models = None
    if args.model:
        with open(args.model, encoding="utf-8") as fh:
            models = [from_json(fh.read())]
    rep = aa_star_demo(mode, models, args.window, args.max_len)
    _emit(args, _dump(rep.to_dict()) if args.json else rep.table())
    return 0 if rep.ok else 1


def cmd_lower_crasp(args):
    _emit(args, pretty(lower_to_crasp(_read_formula(args.formula))))
    return 0


def cmd_normalize_mod(args):
    _emit(args, pretty(normalize_mod_lcm(_read_formula(args.formula))))
    return 0


def cmd_corpus(args):
    names = [args.corpus] if args.corpus else sorted(corpus.CORPORA)
    out = {}
    for name in names:
        if name not in corpus.CORPORA:
            raise UsageError(f"unknown corpus {name!r}; choose from {', '.join(sorted(corpus.CORPORA))}")
        out[name] = corpus.CORPORA[name]
    if args.json:
        _emit(args, _dump(out))
    else:
        _emit(args, "\n".join(f"{n}\t{f}" for n, fs in out.items() for f in fs))
    return 0


# --- argument parsing ----------------------------------------------------------

def _add(p, *flags):
    options = {
        "formula": dict(help="formula text, or a path to a file holding it"),
        "policy": dict(help="diagonal | timeinv | mixed | diagti (default diagonal)"),
        "mode": dict(help="exact | fixed:I:F | logp:F[:H|auto]"),
        "out": dict(help="write the result to this file instead of stdout"),
        "trace": dict(help="trace such as 'a;{};{a,b}'"),
        "alphabet": dict(help="comma-separated propositions added to the formula's atoms"),
        "singleton": dict(action="store_true", help="use one-proposition letters only"),
        "max-len": dict(type=int, default=6, help="longest word length (default 6)"),
        "budget": dict(type=int, default=semantics.DEFAULT_WORD_BUDGET,
                       help="refuse to enumerate more words than this"),
        "model": dict(help="compiled model JSON (overrides --formula)"),
        "symbol": dict(help="the repeated letter, e.g. a or {a,b}"),
        "window": dict(type=int, default=50, help="confirmation window (default 50)"),
        "json": dict(action="store_true", help="emit JSON instead of a table"),
        "corpus": dict(help="corpus name"),
    }
    for name in flags:
        p.add_argument(f"--{name}", **options[name])


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pltl-ssm",
                                 description="Compile past-time temporal formulas into state space models.")
    ap.add_argument("--config", help="key = value file supplying default flags")
    sub = ap.add_subparsers(dest="command", required=True)
    table = [
        ("parse", cmd_parse, "print the normalised formula and its depth levels",
         ("formula", "json", "out")),
        ("eval", cmd_eval, "evaluate a formula on a trace", ("formula", "trace", "out")),
        ("compile", cmd_compile, "compile a formula to model JSON",
         ("formula", "policy", "mode", "alphabet", "out")),
        ("run", cmd_run, "run a model and print the output per position",
         ("formula", "model", "policy", "mode", "alphabet", "trace", "json", "out")),
        ("accepts", cmd_accepts, "print whether a model accepts a trace",
         ("formula", "model", "policy", "mode", "alphabet", "trace", "out")),
        ("enumerate", cmd_enumerate, "list the words of length <= N satisfying a formula",
         ("formula", "alphabet", "singleton", "max-len", "budget", "json", "out")),
        ("check", cmd_check, "exhaustively compare a compiled model with the evaluator",
         ("formula", "policy", "mode", "alphabet", "singleton", "max-len", "budget", "json", "out")),
        ("monotone", cmd_monotone, "repeat one letter until a diagonal model's output stabilises",
         ("formula", "model", "policy", "mode", "alphabet", "symbol", "window", "json", "out")),
        ("demo-aastar", cmd_demo_aastar, "fixed-precision diagonal models versus the MOD model on a^n",
         ("mode", "model", "window", "max-len", "json", "out")),
        ("lower-crasp", cmd_lower_crasp, "rewrite P g into #[g] >= 1", ("formula", "out")),
        ("normalize-mod", cmd_normalize_mod, "rewrite MOD atoms over the lcm of their moduli",
         ("formula", "out")),
        ("corpus", cmd_corpus, "print the built-in formula sets", ("corpus", "json", "out")),
    ]
    for name, fn, text, flags in table:
        p = sub.add_parser(name, help=text, description=text)
        _add(p, *flags)
        p.set_defaults(func=fn)
        if name == "demo-aastar":
            p.set_defaults(max_len=100)
    return ap


def _config_argv(path: str) -> list[str]:
    argv = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            flag = "--" + key.replace("_", "-")
            if value.lower() in ("true", "yes", "on"):
                argv.append(flag)
            elif value.lower() in ("false", "no", "off"):
                continue
            else:
                argv += [flag, value]
    return argv


def _expand_config(argv: list[str]) -> list[str]:
    """Splice config flags in right after the subcommand so explicit flags override them."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    if not known.config:
        return argv
    extra = _config_argv(known.config)
    for i, tok in enumerate(rest):
        if not tok.startswith("-"):
            return rest[:i + 1] + extra + rest[i + 1:]
    return rest + extra


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _expand_config(argv)
    except (OSError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (UsageError, FormulaError, CompileError, ModeError, TraceError, ExecutionError,
            BudgetExceeded, StabilizationFailure, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
