"""Checks of compiled models against the semantic evaluator, plus the
stabilisation and (aa)* experiments for diagonal fixed-precision models.

Exhaustive checks walk the tree of words depth first, so every word costs a
single recurrence step on top of its parent prefix.  Log-precision runs are
grouped by the integer width the word length implies, since a word and its
prefixes may need different widths.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from . import semantics
from .compiler import compile
from .formula import Formula, atoms, parse, pretty
from .numerics import EXACT, Fixed, LogPrecision
from .semantics import (
    DEFAULT_WORD_BUDGET, BudgetExceeded, all_letters, format_trace,
    singleton_letters, word_count,
)
from .ssm import ConstantMatrix, GatePolicy, Ssm, concrete_mode

__all__ = [
    "EquivalenceReport", "StabilizationReport", "StabilizationFailure", "AaStarReport",
    "check_equivalence", "check_words", "monotonicity_experiment", "aa_star_demo",
    "parity_candidate", "interleaved_words", "walk_words",
]


def _shortlex(word, letters):
    order = {letter: i for i, letter in enumerate(letters)}
    return len(word), [order.get(x, len(order)) for x in word]


@dataclass
class EquivalenceReport:
    formula: str
    policy: str
    mode: str
    alphabet: list[str]
    max_len: int
    words_checked: int
    accepted: int
    mismatches: list[tuple[str, bool, bool]]
    elapsed: float = field(default=0.0, compare=False)

    @property
    def equivalent(self) -> bool:
        return not self.mismatches

    @property
    def verdict(self) -> str:
        return "equivalent" if self.equivalent else "NOT equivalent"

    def to_dict(self, timing: bool = False) -> dict:
        out = {
            "formula": self.formula,
            "policy": self.policy,
            "mode": self.mode,
            "alphabet": self.alphabet,
            "max_len": self.max_len,
            "words_checked": self.words_checked,
            "accepted": self.accepted,
            "verdict": self.verdict,
            "mismatches": [{"word": w, "ssm": s, "oracle": o} for w, s, o in self.mismatches],
        }
        if timing:
            out["elapsed_s"] = round(self.elapsed, 3)
        return out

    def table(self, limit: int = 20) -> str:
        lines = [
            f"formula    {self.formula}",
            f"policy     {self.policy}",
            f"mode       {self.mode}",
            f"alphabet   {', '.join(self.alphabet)}",
            f"lengths    1..{self.max_len}",
            f"words      {self.words_checked} ({self.accepted} accepted by the oracle)",
            f"verdict    {self.verdict}",
        ]
        if self.mismatches:
            lines.append(f"{'word':<30} {'ssm':<6} oracle")
            for w, s, o in self.mismatches[:limit]:
                lines.append(f"{w:<30} {str(s):<6} {o}")
            if len(self.mismatches) > limit:
                lines.append(f"... {len(self.mismatches) - limit} more")
        return "\n".join(lines)


def walk_words(model: Ssm, letters: Sequence[frozenset], mode, min_len: int, max_len: int):
    """Yield ``(word, accepted)`` for every word of length ``min_len..max_len``.

    Depth-first over the word tree; each prefix is executed once.
    """
    if isinstance(mode, LogPrecision):
        groups: list[tuple[int, int, Fixed]] = []
        for n in range(min_len, max_len + 1):
            m = concrete_mode(model, mode, n)
            if groups and groups[-1][2] == m:
                groups[-1] = (groups[-1][0], n, m)
            else:
                groups.append((n, n, m))
    else:
        groups = [(min_len, max_len, mode)]
    for lo, hi, m in groups:
        yield from _walk(model.executor(m), letters, lo, hi)


def _walk(ex, letters, lo, hi):
    one = ex.mode.one
    stack = [(ex.initial_state(), ())]
    while stack:
        state, word = stack.pop()
        depth = len(word) + 1
        children = []
        for letter in letters:
            new_state, _, y = ex.step(state, letter)
            w = word + (letter,)
            if depth >= lo:
                yield w, y == one
            if depth < hi:
                children.append((new_state, w))
        stack.extend(reversed(children))


def _alphabet(props, singleton: bool, letters):
    if letters is not None:
        return [frozenset(x) for x in letters]
    return singleton_letters(props) if singleton else all_letters(props)


def _mode_name(mode) -> str:
    return str(mode)


def check_equivalence(f: Formula | str, policy=GatePolicy.DIAGONAL, mode=EXACT, props=None,
                      max_len: int = 6, singleton: bool = False, letters=None,
                      budget: int = DEFAULT_WORD_BUDGET, model: Ssm | None = None
                      ) -> EquivalenceReport:
    """Run every word of length 1..max_len through the compiled model and the oracle."""
    if isinstance(f, str):
        f = parse(f)
    policy = GatePolicy.parse(policy)
    props = sorted(set(props or ()) | atoms(f))
    letters = _alphabet(props, singleton, letters)
    total = word_count(len(letters), max_len, 1)
    if total > budget:
        raise BudgetExceeded(f"{total} words exceed the budget of {budget}")
    start = time.perf_counter()
    letter_props = sorted(set().union(*letters)) if letters else []
    if model is None:
        model = compile(f, policy, mode_hint=mode, props=sorted(set(props) | set(letter_props)))
    mismatches = []
    checked = accepted = 0
    for word, got in walk_words(model, letters, mode, 1, max_len):
        want = semantics.eval(f, word)
        checked += 1
        accepted += want
        if got != want:
            mismatches.append((word, got, want))
    mismatches.sort(key=lambda m: _shortlex(m[0], letters))
    singles = all(len(x) == 1 for x in letters)
    return EquivalenceReport(
        formula=pretty(f),
        policy=policy.value,
        mode=_mode_name(mode),
        alphabet=[format_trace((x,), singleton=singles) for x in letters],
        max_len=max_len,
        words_checked=checked,
        accepted=accepted,
        mismatches=[(format_trace(w, singles), g, o) for w, g, o in mismatches],
        elapsed=time.perf_counter() - start,
    )


def check_words(f: Formula, model: Ssm, words, mode=EXACT) -> list[tuple[tuple, bool, bool]]:
    """Compare model and oracle on explicit words; returns the disagreements."""
    from .ssm import accepts

    bad = []
    for w in words:
        got, want = accepts(model, w, mode), semantics.eval(f, w)
        if got != want:
            bad.append((tuple(w), got, want))
    return bad


# --- stabilisation -------------------------------------------------------------

class StabilizationFailure(RuntimeError):
    """The output kept changing past the cap; this would contradict monotonicity."""


@dataclass
class StabilizationReport:
    formula: str | None
    symbol: str
    mode: str
    point: int            # N: first length from which the output no longer changes
    window: int           # K: confirmation length
    cap: int
    outputs: list         # final-layer vector plus y, per length 1..N+K, as Fractions
    verdicts: list[bool]  # acceptance per length 1..N+K

    @property
    def stabilized(self) -> bool:
        n = self.point
        return (len(self.outputs) >= n + self.window
                and all(v == self.outputs[n - 1] for v in self.outputs[n - 1:n + self.window]))

    def verdict_at(self, n: int) -> bool:
        return self.verdicts[n - 1]

    def to_dict(self) -> dict:
        return {
            "formula": self.formula,
            "symbol": self.symbol,
            "mode": self.mode,
            "stabilization_point": self.point,
            "window": self.window,
            "cap": self.cap,
            "stabilized": self.stabilized,
            "stable_output": [str(v) for v in self.outputs[self.point - 1]],
            "verdicts": "".join("1" if v else "0" for v in self.verdicts),
        }


def _is_diagonal(model: Ssm) -> bool:
    for layer in model.layers:
        if isinstance(layer.gate, ConstantMatrix):
            A = layer.gate.A
            if any(A[i][j] for i in range(len(A)) for j in range(len(A)) if i != j):
                return False
    return True


def monotonicity_experiment(model: Ssm, symbol, mode: Fixed = Fixed(12, 4), window: int = 50
                            ) -> StabilizationReport:
    """Feed ``symbol`` repeatedly until the final output vector is constant for ``window`` steps."""
    if not isinstance(mode, Fixed):
        raise ValueError("the stabilisation experiment needs a constant-width mode")
    if not _is_diagonal(model):
        raise ValueError("the stabilisation experiment applies to diagonal models only")
    if window < 1:
        raise ValueError("window must be positive")
    letter = frozenset([symbol]) if isinstance(symbol, str) else frozenset(symbol)
    cap = 2 ** (mode.int_bits + mode.frac_bits + 4) * model.dim * max(1, len(model.layers))
    ex = model.executor(mode)
    state = ex.initial_state()
    outputs, verdicts = [], []
    point = 1
    n = 0
    while True:
        n += 1
        if n > cap:
            raise StabilizationFailure(
                f"output still changing after {cap} repetitions of {sorted(letter)}")
        state, z, y = ex.step(state, letter)
        vec = tuple(z) + (y,)
        if outputs and vec != outputs[-1]:
            point = n
        outputs.append(vec)
        verdicts.append(y == mode.one)
        if n - point >= window:
            break
    decoded = [tuple(mode.decode(v) for v in vec) for vec in outputs]
    return StabilizationReport(
        formula=None if model.formula is None else pretty(model.formula),
        symbol=format_trace((letter,)),
        mode=str(mode),
        point=point,
        window=window,
        cap=cap,
        outputs=decoded,
        verdicts=verdicts,
    )


# --- (aa)* ---------------------------------------------------------------------

def parity_candidate(k: int) -> Formula:
    """A star-free formula agreeing with (aa)* on all-a words up to length 2k."""
    if k < 1:
        raise ValueError("k must be positive")
    at = [("Y " * (2 * j - 1)) + "!Y true" for j in range(1, k + 1)]
    return parse("H a & (" + " | ".join(f"({x})" for x in at) + ")")


@dataclass
class AaStarReport:
    mode: str
    diagonal: list[dict]
    mixed_formula: str
    mixed_max_len: int
    mixed_errors: list[int]

    @property
    def ok(self) -> bool:
        return not self.mixed_errors and all(
            d["stabilized"] and d["same_verdict"] for d in self.diagonal)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "diagonal": self.diagonal,
            "mixed": {"formula": self.mixed_formula, "max_len": self.mixed_max_len,
                      "misclassified_lengths": self.mixed_errors},
            "ok": self.ok,
        }

    def table(self) -> str:
        lines = [f"diagonal models under {self.mode}:"]
        for d in self.diagonal:
            wrong = d["misclassified"]
            lines.append(
                f"  {d['formula']}\n    stabilises at N={d['N']}; a^N -> {d['verdict_N']}, "
                f"a^(N+1) -> {d['verdict_N1']}; misclassified: a^{wrong}")
        lines.append(f"mixed model {self.mixed_formula}: "
                     f"{'recognises (aa)*' if not self.mixed_errors else 'errors at ' + str(self.mixed_errors)}"
                     f" on a^n, n <= {self.mixed_max_len}")
        return "\n".join(lines)


def aa_star_demo(mode: Fixed = Fixed(12, 4), models: Sequence[Ssm] | None = None,
                 window: int = 50, max_len: int = 100) -> AaStarReport:
    """Diagonal fixed-precision models freeze on a^n; the mixed MOD model does not."""
    if models is None:
        models = [compile(parity_candidate(k), GatePolicy.DIAGONAL, props=["a"]) for k in (1, 2, 3)]
    diag = []
    for model in models:
        rep = monotonicity_experiment(model, "a", mode, window)
        n = rep.point
        v0, v1 = rep.verdict_at(n), rep.verdict_at(n + 1)
        wrong = n if v0 != (n % 2 == 0) else n + 1
        diag.append({
            "formula": rep.formula,
            "N": n,
            "stabilized": rep.stabilized,
            "verdict_N": v0,
            "verdict_N1": v1,
            "same_verdict": v0 == v1,
            "misclassified": wrong,
        })
    target = parse("H a & MOD[0,2]")
    mixed = compile(target, GatePolicy.MIXED, props=["a"])
    errors = set()
    letter = frozenset("a")
    for m in (mode, EXACT):
        ex = mixed.executor(m)
        state = ex.initial_state()
        for n in range(1, max_len + 1):
            state, _, y = ex.step(state, letter)
            if (y == m.one) != (n % 2 == 0):
                errors.add(n)
    return AaStarReport(str(mode), diag, pretty(target), max_len, sorted(errors))


def interleaved_words(n: int, m: int) -> tuple[tuple, tuple]:
    """``a^n (c a^n b a^n)^m`` and ``a^n (b a^n c a^n)^m`` as singleton-letter traces."""
    a, b, c = frozenset("a"), frozenset("b"), frozenset("c")
    run = (a,) * n
    first = run + ((c,) + run + (b,) + run) * m
    second = run + ((b,) + run + (c,) + run) * m
    return first, second
