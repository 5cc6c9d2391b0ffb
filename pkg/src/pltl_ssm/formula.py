"""Pure-past LTL formulas with counting terms and modular predicates.

The core AST has one node type per construct the compiler handles.  Derived
operators (``|``, ``->``, ``H``) are accepted by :func:`parse` but never
survive it: they are rewritten into ``!``/``&``/``P`` on the spot.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache, reduce

__all__ = [
    "Formula", "Atom", "TrueF", "FalseF", "Mod", "Not", "And", "Yesterday",
    "Previously", "Since", "Count", "COMPARATORS",
    "FormulaError", "FormulaSyntaxError", "CraspLoweringError",
    "parse", "pretty", "negate", "or_", "implies", "historically", "disjunction",
    "children", "subformulas", "atoms", "moduli", "nesting_depth",
    "sequential_decomposition", "normalize_mod_lcm", "lower_to_crasp",
    "SubformulaIndex", "build_index", "has_node",
]

COMPARATORS = ("<", "<=", "=", ">=", ">")
DEFAULT_MODULUS_CAP = 4096


class FormulaError(ValueError):
    pass


class FormulaSyntaxError(FormulaError):
    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} at position {pos}")
        self.pos = pos


class CraspLoweringError(FormulaError):
    pass


class Formula:
    """Base class of all AST nodes.  Nodes are immutable and hashable."""

    __slots__ = ()

    def __str__(self) -> str:
        return pretty(self)


@dataclass(frozen=True)
class Atom(Formula):
    name: str


@dataclass(frozen=True)
class TrueF(Formula):
    pass


@dataclass(frozen=True)
class FalseF(Formula):
    pass


@dataclass(frozen=True)
class Mod(Formula):
    """Holds at 1-based position ``i`` iff ``i % modulus == remainder``."""

    remainder: int
    modulus: int

    def __post_init__(self):
        if self.modulus < 2:
            raise FormulaError(f"MOD modulus must be >= 2, got {self.modulus}")
        if not 0 <= self.remainder < self.modulus:
            raise FormulaError(
                f"MOD remainder must lie in [0, {self.modulus}), got {self.remainder}")


@dataclass(frozen=True)
class Not(Formula):
    child: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Yesterday(Formula):
    child: Formula


@dataclass(frozen=True)
class Previously(Formula):
    child: Formula


@dataclass(frozen=True)
class Since(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Count(Formula):
    """``sum_j coeff_j * #[f_j]  cmp  threshold`` over positions up to now."""

    terms: tuple[tuple[int, Formula], ...]
    comparator: str
    threshold: int

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple((int(a), f) for a, f in self.terms))
        if not self.terms:
            raise FormulaError("counting formula needs at least one term")
        if any(a == 0 for a, _ in self.terms):
            raise FormulaError("counting coefficients must be nonzero")
        if self.comparator not in COMPARATORS:
            raise FormulaError(f"unknown comparator {self.comparator!r}")
        if self.threshold < 0:
            raise FormulaError("counting threshold must be nonnegative")


def _cached_hash(self) -> int:
    h = self.__dict__.get("_hash")
    if h is None:
        h = hash((type(self).__name__,) + tuple(getattr(self, n) for n in self.__dataclass_fields__))
        object.__setattr__(self, "_hash", h)
    return h


for _cls in (Atom, TrueF, FalseF, Mod, Not, And, Yesterday, Previously, Since, Count):
    _cls.__hash__ = _cached_hash


def negate(a: Formula) -> Formula:
    """``!a``, cancelling a leading negation instead of stacking a second one."""
    return a.child if isinstance(a, Not) else Not(a)


def or_(a: Formula, b: Formula) -> Formula:
    return Not(And(negate(a), negate(b)))


def implies(a: Formula, b: Formula) -> Formula:
    return Not(And(a, negate(b)))


def historically(a: Formula) -> Formula:
    return Not(Previously(negate(a)))


def disjunction(items) -> Formula:
    items = list(items)
    if not items:
        return FalseF()
    return reduce(or_, items)


# --- structure ---------------------------------------------------------------

def children(f: Formula) -> tuple[Formula, ...]:
    if isinstance(f, (Not, Yesterday, Previously)):
        return (f.child,)
    if isinstance(f, (And, Since)):
        return (f.left, f.right)
    if isinstance(f, Count):
        return tuple(g for _, g in f.terms)
    return ()


def _postorder(f: Formula, seen: set, out: list):
    if f in seen:
        return
    for c in children(f):
        _postorder(c, seen, out)
    seen.add(f)
    out.append(f)


@lru_cache(maxsize=4096)
def _subformulas(f: Formula) -> tuple[Formula, ...]:
    out: list[Formula] = []
    _postorder(f, set(), out)
    return tuple(out)


def subformulas(f: Formula) -> list[Formula]:
    """Distinct subformulas of ``f`` (including ``f``), children before parents."""
    return list(_subformulas(f))


def atoms(f: Formula) -> set[str]:
    return {g.name for g in subformulas(f) if isinstance(g, Atom)}


def moduli(f: Formula) -> set[int]:
    return {g.modulus for g in subformulas(f) if isinstance(g, Mod)}


def has_node(f: Formula, kind) -> bool:
    return any(isinstance(g, kind) for g in subformulas(f))


def nesting_depth(f: Formula, _memo: dict | None = None) -> int:
    memo = {} if _memo is None else _memo
    for g in subformulas(f):
        kids = children(g)
        memo[g] = 1 + max(memo[c] for c in kids) if kids else 0
    return memo[f]


def _depths(f: Formula) -> dict[Formula, int]:
    memo: dict[Formula, int] = {}
    nesting_depth(f, memo)
    return memo


def sequential_decomposition(f: Formula) -> list[frozenset]:
    """Sets ``M_0 .. M_nd(f)``; ``M_i`` holds the subformulas of depth ``i``."""
    depth = _depths(f)
    levels: list[set] = [set() for _ in range(depth[f] + 1)]
    for g, k in depth.items():
        levels[k].add(g)
    return [frozenset(s) for s in levels]


# --- printing ----------------------------------------------------------------

def _term_text(coeff: int, body: str, first: bool) -> str:
    mag = abs(coeff)
    core = f"#[{body}]" if mag == 1 else f"{mag}*#[{body}]"
    if first:
        return core if coeff > 0 else f"-{core}"
    return f" + {core}" if coeff > 0 else f" - {core}"


def pretty(f: Formula) -> str:
    """Fully parenthesised text that :func:`parse` maps back to ``f``."""
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, TrueF):
        return "true"
    if isinstance(f, FalseF):
        return "false"
    if isinstance(f, Mod):
        return f"MOD[{f.remainder},{f.modulus}]"
    if isinstance(f, Not):
        return "!" + pretty(f.child)
    if isinstance(f, Yesterday):
        return "Y " + pretty(f.child)
    if isinstance(f, Previously):
        return "P " + pretty(f.child)
    if isinstance(f, And):
        return f"({pretty(f.left)} & {pretty(f.right)})"
    if isinstance(f, Since):
        return f"({pretty(f.left)} S {pretty(f.right)})"
    if isinstance(f, Count):
        body = "".join(_term_text(a, pretty(g), i == 0) for i, (a, g) in enumerate(f.terms))
        return f"({body} {f.comparator} {f.threshold})"
    raise TypeError(f"not a formula: {f!r}")


# --- parsing -----------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<int>\d+)
  | (?P<ident>[a-z][a-z0-9_]*)
  | (?P<kw>MOD|Y|P|H|S)(?![A-Za-z0-9_])
  | (?P<op><=|>=|->|[!&|()\[\],#*+\-<=>])
""", re.VERBOSE)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            val = m.group(kind)
            toks.append(("op" if kind == "kw" else kind, val, pos))
        pos = m.end()
    toks.append(("eof", "", len(text)))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self, offset=0):
        return self.toks[min(self.i + offset, len(self.toks) - 1)]

    def next(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def at(self, *values) -> bool:
        kind, val, _ = self.peek()
        return kind in ("op", "ident") and val in values

    def expect(self, value):
        kind, val, pos = self.next()
        if val != value or kind not in ("op", "ident"):
            raise FormulaSyntaxError(f"expected {value!r}, found {val or 'end of input'!r}", pos)

    def integer(self) -> int:
        kind, val, pos = self.next()
        if kind != "int":
            raise FormulaSyntaxError(f"expected integer, found {val or 'end of input'!r}", pos)
        return int(val)

    def parse(self) -> Formula:
        f = self.since()
        kind, val, pos = self.peek()
        if kind != "eof":
            raise FormulaSyntaxError(f"unexpected {val!r}", pos)
        return f

    # precedence, loosest first: S, ->, |, &, prefix
    def since(self):
        f = self.implication()
        while self.at("S"):
            self.next()
            f = Since(f, self.implication())
        return f

    def implication(self):
        f = self.disj()
        while self.at("->"):
            self.next()
            f = implies(f, self.disj())
        return f

    def disj(self):
        f = self.conj()
        while self.at("|"):
            self.next()
            f = or_(f, self.conj())
        return f

    def conj(self):
        f = self.unary()
        while self.at("&"):
            self.next()
            f = And(f, self.unary())
        return f

    def unary(self):
        kind, val, _ = self.peek()
        if kind == "op" and val in ("!", "Y", "P", "H"):
            self.next()
            child = self.unary()
            return {"!": Not, "Y": Yesterday, "P": Previously, "H": historically}[val](child)
        return self.primary()

    def primary(self):
        kind, val, pos = self.peek()
        if kind == "ident":
            self.next()
            if val == "true":
                return TrueF()
            if val == "false":
                return FalseF()
            return Atom(val)
        if kind == "op" and val == "MOD":
            self.next()
            self.expect("[")
            r = self.integer()
            self.expect(",")
            m = self.integer()
            self.expect("]")
            try:
                return Mod(r, m)
            except FormulaError as exc:
                raise FormulaSyntaxError(str(exc), pos) from None
        if kind == "op" and val == "(":
            self.next()
            f = self.since()
            self.expect(")")
            return f
        if kind == "int" or (kind == "op" and val in ("#", "-")):
            return self.count()
        raise FormulaSyntaxError(f"unexpected {val or 'end of input'!r}", pos)

    def term(self, sign: int):
        kind, val, pos = self.peek()
        coeff = 1
        if kind == "int":
            coeff = self.integer()
            self.expect("*")
        if coeff == 0:
            raise FormulaSyntaxError("counting coefficients must be nonzero", pos)
        self.expect("#")
        self.expect("[")
        body = self.since()
        self.expect("]")
        return sign * coeff, body

    def count(self):
        _, _, start = self.peek()
        sign = 1
        if self.at("-"):
            self.next()
            sign = -1
        terms = [self.term(sign)]
        while self.at("+", "-"):
            _, op, _ = self.next()
            terms.append(self.term(1 if op == "+" else -1))
        kind, cmp, pos = self.next()
        if cmp not in COMPARATORS:
            raise FormulaSyntaxError(f"expected comparator, found {cmp or 'end of input'!r}", pos)
        k = self.integer()
        try:
            return Count(tuple(terms), cmp, k)
        except FormulaError as exc:
            raise FormulaSyntaxError(str(exc), start) from None


def parse(text: str) -> Formula:
    """Parse formula text into the core AST.

    Atoms are lowercase identifiers; ``true``/``false``; ``MOD[r,m]``; prefix
    ``! Y P H``; infix ``& | -> S`` binding in that order, all left associative.
    Counting atoms look like ``2*#[a] - #[b] >= 1``.
    """
    return _Parser(text).parse()


# --- rewrites ----------------------------------------------------------------

def _rebuild(f: Formula, leaf, memo: dict) -> Formula:
    """Bottom-up map: ``leaf(g, rebuilt_children)`` returns the replacement of ``g``."""
    for g in subformulas(f):
        if g in memo:
            continue
        if isinstance(g, (Not, Yesterday, Previously)):
            new = type(g)(memo[g.child])
        elif isinstance(g, (And, Since)):
            new = type(g)(memo[g.left], memo[g.right])
        elif isinstance(g, Count):
            new = Count(tuple((a, memo[h]) for a, h in g.terms), g.comparator, g.threshold)
        else:
            new = g
        memo[g] = leaf(g, new)
    return memo[f]


def normalize_mod_lcm(f: Formula, cap: int = DEFAULT_MODULUS_CAP) -> Formula:
    """Rewrite every ``MOD[r,m]`` over the least common multiple of all moduli.

    Each ``MOD[r,m]`` becomes ``MOD[r,L] | MOD[r+m,L] | ...``.  Formulas with at
    most one distinct modulus are returned unchanged.
    """
    mods = moduli(f)
    if len(mods) <= 1:
        return f
    lcm = reduce(math.lcm, mods)
    if lcm > cap:
        raise FormulaError(f"lcm of moduli {sorted(mods)} is {lcm}, above the cap {cap}")

    def leaf(old, new):
        if isinstance(new, Mod) and new.modulus != lcm:
            return disjunction(Mod(r, lcm) for r in range(new.remainder, lcm, new.modulus))
        return new

    return _rebuild(f, leaf, {})


def lower_to_crasp(f: Formula) -> Formula:
    """Replace every ``P g`` by ``#[g] >= 1``.

    Only Yesterday- and Since-free formulas have a counting-only equivalent.
    """
    for g in subformulas(f):
        if isinstance(g, (Yesterday, Since)):
            op = "yesterday" if isinstance(g, Yesterday) else "since"
            raise CraspLoweringError(
                f"yesterday/since not expressible in C-RASP: {op} in {pretty(g)}")

    def leaf(old, new):
        if isinstance(new, Previously):
            return Count(((1, new.child),), ">=", 1)
        return new

    return _rebuild(f, leaf, {})


# --- dimension assignment ----------------------------------------------------

@dataclass(frozen=True)
class SubformulaIndex:
    """Injective assignment of vector positions (0-based).

    Layout: propositions ``0..|P|-1``, then the MOD block (if any), then the
    remaining subformulas ordered by depth and text, and the constant-one
    dimension last.
    """

    props: tuple[str, ...]
    formulas: tuple[Formula, ...]
    modulus: int | None = None

    @property
    def mod_start(self) -> int | None:
        return None if self.modulus is None else len(self.props)

    @property
    def dim(self) -> int:
        return len(self.props) + (self.modulus or 0) + len(self.formulas) + 1

    @property
    def const(self) -> int:
        return self.dim - 1

    def mod_dim(self, remainder: int) -> int:
        if self.modulus is None:
            raise KeyError("index has no MOD block")
        return len(self.props) + remainder

    def __getitem__(self, f: Formula) -> int:
        return self._positions[f]

    def __contains__(self, f: Formula) -> bool:
        return f in self._positions

    @property
    def _positions(self) -> dict:
        cache = self.__dict__.get("_pos_cache")
        if cache is None:
            cache = {Atom(p): i for i, p in enumerate(self.props)}
            off = len(self.props) + (self.modulus or 0)
            for k, f in enumerate(self.formulas):
                cache[f] = off + k
            object.__setattr__(self, "_pos_cache", cache)
        return cache

    def labels(self) -> list[str]:
        """Human-readable name of every dimension, in order."""
        out = list(self.props)
        if self.modulus is not None:
            out += [f"<MOD[{r},{self.modulus}] block>" for r in range(self.modulus)]
        out += [pretty(f) for f in self.formulas]
        out.append("<1>")
        return out


def build_index(f: Formula, with_mod_block: bool = False, props=None) -> SubformulaIndex:
    depth = _depths(f)
    names = sorted(atoms(f) | set(props or ()))
    rest = sorted((g for g in depth if not isinstance(g, Atom)),
                  key=lambda g: (depth[g], pretty(g)))
    modulus = None
    if with_mod_block:
        mods = moduli(f)
        if len(mods) > 1:
            raise FormulaError(
                f"MOD block needs a single modulus, found {sorted(mods)}; normalize first")
        if not mods:
            raise FormulaError("MOD block requested but formula has no MOD atom")
        modulus = mods.pop()
    return SubformulaIndex(tuple(names), tuple(rest), modulus)
