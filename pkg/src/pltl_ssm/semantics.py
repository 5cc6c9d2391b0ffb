"""Direct evaluation of formulas over finite traces.

This is the reference every compiled model is checked against.  Evaluation is
a bottom-up table over (subformula, position); counting atoms use running
prefix sums, so a whole trace costs O(|Sub(f)| * n).
"""
from __future__ import annotations

import itertools
from typing import Iterable, Sequence

from .formula import (
    And, Atom, Count, FalseF, Formula, Mod, Not, Previously, Since, TrueF,
    Yesterday, atoms, subformulas,
)

Letter = frozenset
Trace = tuple  # tuple of frozensets of proposition names

DEFAULT_WORD_BUDGET = 10**6

_CMP = {
    "<": lambda x, c: x < c,
    "<=": lambda x, c: x <= c,
    "=": lambda x, c: x == c,
    ">=": lambda x, c: x >= c,
    ">": lambda x, c: x > c,
}


class TraceError(ValueError):
    pass


class BudgetExceeded(RuntimeError):
    pass


def compare(value, comparator: str, threshold) -> bool:
    return _CMP[comparator](value, threshold)


def make_trace(letters: Iterable[Iterable[str]]) -> Trace:
    return tuple(frozenset(x) for x in letters)


def parse_trace(text: str) -> Trace:
    """``a;{};{a,b}`` -> trace.  Empty text is the empty trace."""
    text = text.strip()
    if not text:
        return ()
    out = []
    for raw in text.split(";"):
        raw = raw.strip()
        if raw.startswith("{"):
            if not raw.endswith("}"):
                raise TraceError(f"unterminated letter {raw!r}")
            inner = raw[1:-1].strip()
            names = [p.strip() for p in inner.split(",")] if inner else []
        else:
            names = [raw]
        for p in names:
            if not p.isidentifier() or not p[0].islower():
                raise TraceError(f"bad proposition name {p!r}")
        out.append(frozenset(names))
    return tuple(out)


def format_trace(trace: Sequence[frozenset], singleton: bool = True) -> str:
    parts = []
    for letter in trace:
        if singleton and len(letter) == 1:
            parts.append(next(iter(letter)))
        else:
            parts.append("{" + ",".join(sorted(letter)) + "}")
    return ";".join(parts)


def evaluate_all(f: Formula, trace: Sequence[frozenset]) -> dict[Formula, list[bool]]:
    """Truth value of every subformula at every position.

    Lists are 0-based: entry ``t`` is position ``t + 1``.
    """
    n = len(trace)
    table: dict[Formula, list[bool]] = {}
    for g in subformulas(f):
        if isinstance(g, Atom):
            col = [g.name in letter for letter in trace]
        elif isinstance(g, TrueF):
            col = [True] * n
        elif isinstance(g, FalseF):
            col = [False] * n
        elif isinstance(g, Mod):
            col = [(t + 1) % g.modulus == g.remainder for t in range(n)]
        elif isinstance(g, Not):
            col = [not v for v in table[g.child]]
        elif isinstance(g, And):
            col = [x and y for x, y in zip(table[g.left], table[g.right])]
        elif isinstance(g, Yesterday):
            col = [False] + table[g.child][:-1] if n else []
        elif isinstance(g, Previously):
            col = list(itertools.accumulate(table[g.child], lambda acc, v: acc or v))
        elif isinstance(g, Since):
            col, prev = [], False
            for lhs, rhs in zip(table[g.left], table[g.right]):
                prev = rhs or (lhs and prev)
                col.append(prev)
        elif isinstance(g, Count):
            col, total = [], 0
            for t in range(n):
                total += sum(a for a, h in g.terms if table[h][t])
                col.append(compare(total, g.comparator, g.threshold))
        else:
            raise TypeError(f"not a formula: {g!r}")
        table[g] = col
    return table


def eval_at(f: Formula, trace: Sequence[frozenset], i: int) -> bool:
    """Truth of ``f`` at 1-based position ``i``."""
    if not 1 <= i <= len(trace):
        raise IndexError(f"position {i} outside 1..{len(trace)}")
    return evaluate_all(f, trace[:i])[f][i - 1]


def _eval_empty(f: Formula) -> bool:
    # Empty trace: atoms, MOD and temporal operators are false, counts are 0.
    val: dict[Formula, bool] = {}
    for g in subformulas(f):
        if isinstance(g, TrueF):
            v = True
        elif isinstance(g, Not):
            v = not val[g.child]
        elif isinstance(g, And):
            v = val[g.left] and val[g.right]
        elif isinstance(g, Count):
            v = compare(0, g.comparator, g.threshold)
        else:
            v = False
        val[g] = v
    return val[f]


def eval(f: Formula, trace: Sequence[frozenset]) -> bool:  # noqa: A001
    """Membership of ``trace`` in L(f); the empty trace uses the zero-count convention."""
    if not trace:
        return _eval_empty(f)
    return evaluate_all(f, trace)[f][-1]


def all_letters(props: Iterable[str]) -> list[frozenset]:
    """Every subset of ``props``, smallest first, in a fixed order."""
    props = sorted(set(props))
    out = []
    for k in range(len(props) + 1):
        out.extend(frozenset(c) for c in itertools.combinations(props, k))
    return out


def singleton_letters(props: Iterable[str]) -> list[frozenset]:
    return [frozenset([p]) for p in sorted(set(props))]


def word_count(n_letters: int, max_len: int, min_len: int = 0) -> int:
    return sum(n_letters**k for k in range(min_len, max_len + 1))


def enumerate_words(letters: Sequence[frozenset], max_len: int, min_len: int = 0,
                    budget: int = DEFAULT_WORD_BUDGET):
    """Yield all words of length ``min_len..max_len``, shortest first, then by letter order."""
    total = word_count(len(letters), max_len, min_len)
    if total > budget:
        raise BudgetExceeded(f"{total} words exceed the budget of {budget}")
    for k in range(min_len, max_len + 1):
        for word in itertools.product(letters, repeat=k):
            yield tuple(word)


def enumerate_language(f: Formula, props: Iterable[str], max_len: int,
                       letters: Sequence[frozenset] | None = None,
                       budget: int = DEFAULT_WORD_BUDGET) -> set[Trace]:
    """All traces of length <= ``max_len`` (the empty one included) that satisfy ``f``."""
    props = set(props)
    missing = atoms(f) - props
    if missing:
        raise TraceError(f"formula uses propositions outside the universe: {sorted(missing)}")
    if letters is None:
        letters = all_letters(props)
    return {w for w in enumerate_words(letters, max_len, 0, budget) if eval(f, w)}


def evaluate_batch(f: Formula, words, letters: Sequence[frozenset], every: bool = False):
    """Vectorised truth table of ``f`` over many equal-length words.

    ``words`` is an integer array of shape ``(W, n)`` indexing into ``letters``.
    Returns a boolean array of the same shape; column ``t`` is the verdict on
    the length-``t + 1`` prefix, so one call covers every prefix of every word.
    With ``every`` the result is a dict holding such an array per subformula.
    """
    import numpy as np

    words = np.asarray(words, dtype=np.intp)
    w, n = words.shape
    positions = np.arange(1, n + 1)
    col: dict[Formula, np.ndarray] = {}
    for g in subformulas(f):
        if isinstance(g, Atom):
            hit = np.array([g.name in x for x in letters], dtype=bool)
            v = hit[words]
        elif isinstance(g, TrueF):
            v = np.ones((w, n), dtype=bool)
        elif isinstance(g, FalseF):
            v = np.zeros((w, n), dtype=bool)
        elif isinstance(g, Mod):
            v = np.broadcast_to(positions % g.modulus == g.remainder, (w, n))
        elif isinstance(g, Not):
            v = ~col[g.child]
        elif isinstance(g, And):
            v = col[g.left] & col[g.right]
        elif isinstance(g, Yesterday):
            v = np.zeros((w, n), dtype=bool)
            v[:, 1:] = col[g.child][:, :-1]
        elif isinstance(g, Previously):
            v = np.logical_or.accumulate(col[g.child], axis=1)
        elif isinstance(g, Since):
            lhs, rhs = col[g.left], col[g.right]
            v = np.empty((w, n), dtype=bool)
            prev = np.zeros(w, dtype=bool)
            for t in range(n):
                prev = rhs[:, t] | (lhs[:, t] & prev)
                v[:, t] = prev
        elif isinstance(g, Count):
            total = np.zeros((w, n), dtype=np.int64)
            for a, h in g.terms:
                total += a * col[h]
            v = _CMP[g.comparator](np.cumsum(total, axis=1), g.threshold)
        else:
            raise TypeError(f"not a formula: {g!r}")
        col[g] = v
    if every:
        return {g: np.asarray(v) for g, v in col.items()}
    return np.asarray(col[f])


def all_words_array(n_letters: int, length: int):
    """Every word of exactly ``length`` letters as rows of letter indices (shortlex)."""
    import numpy as np

    codes = np.arange(n_letters**length)
    digits = [(codes // n_letters**k) % n_letters for k in range(length - 1, -1, -1)]
    return np.stack(digits, axis=1) if digits else np.zeros((1, 0), dtype=np.intp)
