"""Formula -> SSM compilation.

Every subformula gets its own dimension.  Subformulas of equal nesting depth
are evaluated together in one layer: their gate and increment contributions
touch disjoint rows, so they can simply be summed, and their output gadgets
each write a single dimension.  Atoms are handled by the embedding; MOD atoms
by an extra constant-gate layer holding a one-hot counter modulo ``m``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction

from .formula import (
    And, Atom, Count, FalseF, Formula, Mod, Not, Previously, Since, TrueF,
    Yesterday, build_index, has_node, nesting_depth, normalize_mod_lcm, pretty,
    sequential_decomposition, subformulas, SubformulaIndex,
)
from .numerics import Fixed
from .ssm import (
    ConstantMatrix, Fnn, GatePolicy, InputDiagonal, Node, Ssm, SsmLayer,
)

__all__ = [
    "CompileError", "CopyMatrix", "Fragment", "make_comparator_gadget",
    "make_clamp01_gadget", "make_prev_decoder", "PREV_DECODER_INTERVALS",
    "compile_layer", "make_mod_layer", "compile", "log_headroom",
]

ONE = Fraction(1)
QUARTER = Fraction(1, 4)

# (a_t, a_{t-1}) -> interval the 1/4-encoder lands in, with 3-bit boundaries.
PREV_DECODER_INTERVALS = {
    (0, 0): (Fraction(0), Fraction(1, 8)),
    (0, 1): (Fraction(1, 4), Fraction(1, 2)),
    (1, 0): (Fraction(1), Fraction(9, 8)),
    (1, 1): (Fraction(5, 4), Fraction(3, 2)),
}


class CompileError(ValueError):
    def __init__(self, message: str, subformula: Formula | None = None):
        if subformula is not None:
            message = f"{message} (offending subformula: {pretty(subformula)})"
        super().__init__(message)
        self.subformula = subformula


@dataclass(frozen=True)
class CopyMatrix:
    """``weight * e_target e_source^T``."""

    target: int
    source: int
    weight: Fraction = ONE

    def dense(self, d: int):
        m = [[Fraction(0)] * d for _ in range(d)]
        m[self.target][self.source] = Fraction(self.weight)
        return m


# --- gadgets -------------------------------------------------------------------

def _net(first: list[tuple[Fraction, Fraction]], combine: list) -> Fnn:
    """Two-layer scalar network: relu(sum_k c_k * relu(w_k x + b_k))."""
    hidden = tuple(Node((w,), b) for w, b in first)
    return Fnn((hidden, (Node(tuple(combine)),)))


def make_comparator_gadget(cmp: str, b: int) -> Fnn:
    """Network returning 1 on integers ``x`` with ``x cmp b`` and 0 on the others."""
    if cmp == "<":
        cmp, b = "<=", b - 1
    elif cmp == ">":
        cmp, b = ">=", b + 1
    if cmp == "=":
        return _net([(ONE, Fraction(-(b - 1))), (ONE, Fraction(-b))], [1, -2])
    if cmp == "<=":
        return _net([(-ONE, Fraction(b + 1)), (-ONE, Fraction(b))], [1, -1])
    if cmp == ">=":
        return _net([(ONE, Fraction(-(b - 1))), (ONE, Fraction(-b))], [1, -1])
    raise ValueError(f"unknown comparator {cmp!r}")


def make_clamp01_gadget() -> Fnn:
    """min(1, x) for x >= 0, as relu(x) - relu(x - 1)."""
    return _net([(ONE, Fraction(0)), (ONE, -ONE)], [1, -1])


def make_prev_decoder() -> Fnn:
    """Recover the previous bit from the 1/4-encoder value.

    Piecewise linear: 0 on [0, 1/8], 1 on [1/4, 1/2], 0 on [1, 9/8], 1 from
    5/4 on, linear in between.  Breakpoints need 3 fraction bits.
    """
    knots = [Fraction(1, 8), Fraction(1, 4), Fraction(1, 2), ONE, Fraction(9, 8), Fraction(5, 4)]
    slopes = [8, -8, -2, 2, 8, -8]
    return _net([(ONE, -k) for k in knots], slopes)


# --- per-subformula fragments -----------------------------------------------

@dataclass(frozen=True)
class Fragment:
    """One subformula's share of a layer.

    ``gate`` entries are summed into A (or, for constant gates, into its
    diagonal); ``inc`` entries are added on top of the identity in B.
    """

    subformula: Formula
    gate: tuple[CopyMatrix, ...]
    inc: tuple[CopyMatrix, ...]
    gadgets: tuple[tuple[int, Fnn], ...]

    def dense_gate(self, d: int):
        m = [[Fraction(0)] * d for _ in range(d)]
        for c in self.gate:
            m[c.target][c.source] += c.weight
        return m

    def dense_inc(self, d: int):
        m = [[Fraction(int(i == j)) for j in range(d)] for i in range(d)]
        for c in self.inc:
            m[c.target][c.source] += c.weight
        return m


def compile_layer(psi: Formula, index: SubformulaIndex, policy=GatePolicy.DIAGONAL) -> Fragment:
    policy = GatePolicy.parse(policy)
    d = index.dim
    me, one = index[psi], index.const

    def gadget(net: Fnn):
        return ((me, net.lift(me, d)),)

    if isinstance(psi, Not):
        return Fragment(psi, (), (CopyMatrix(me, one), CopyMatrix(me, index[psi.child], -ONE)), ())
    if isinstance(psi, And):
        inc = (CopyMatrix(me, index[psi.left]), CopyMatrix(me, index[psi.right]),
               CopyMatrix(me, one, -ONE))
        return Fragment(psi, (), inc, gadget(make_comparator_gadget(">=", 1)))
    if isinstance(psi, Previously):
        return Fragment(psi, (CopyMatrix(me, one),), (CopyMatrix(me, index[psi.child]),),
                        gadget(make_comparator_gadget(">=", 1)))
    if isinstance(psi, Count):
        inc = tuple(CopyMatrix(me, index[g], Fraction(a)) for a, g in psi.terms)
        return Fragment(psi, (CopyMatrix(me, one),), inc,
                        gadget(make_comparator_gadget(psi.comparator, psi.threshold)))
    if isinstance(psi, Since):
        if policy in (GatePolicy.TIME_INVARIANT, GatePolicy.DIAGONAL_TIME_INVARIANT):
            raise CompileError("since requires input-dependent gate", psi)
        return Fragment(psi, (CopyMatrix(me, index[psi.left]),), (CopyMatrix(me, index[psi.right]),),
                        gadget(make_clamp01_gadget()))
    if isinstance(psi, Yesterday):
        return Fragment(psi, (CopyMatrix(me, one, QUARTER),), (CopyMatrix(me, index[psi.child]),),
                        gadget(make_prev_decoder()))
    raise CompileError("atomic formulas are evaluated by the embedding, not by a layer", psi)


def _relu_copy(source: int, d: int) -> Fnn:
    w = [Fraction(0)] * d
    w[source] = ONE
    return Fnn(((Node(tuple(w)),),))


def make_mod_layer(m: int, index: SubformulaIndex) -> SsmLayer:
    """Constant-gate layer cycling a one-hot vector through the MOD block."""
    if index.modulus != m:
        raise CompileError(f"index has no MOD block of width {m}")
    d, start = index.dim, index.mod_start
    A = [[Fraction(0)] * d for _ in range(d)]
    for r in range(m):
        A[start + (r + 1) % m][start + r] = ONE
    B = [[Fraction(int(i == j)) for j in range(d)] for i in range(d)]
    for r in range(m):
        B[start + r][start + r] = Fraction(0)
    h0 = [Fraction(0)] * d
    h0[start] = ONE
    return SsmLayer(tuple(h0), ConstantMatrix(tuple(map(tuple, A))), tuple(map(tuple, B)))


def log_headroom(f: Formula) -> int:
    """Integer-bit headroom so counters and gadget intermediates never saturate.

    With ``I(n) = ceil(log2(n + 2)) + H`` every counter stays below
    ``n * sum|a_j|``; the extra bits cover the comparator gadgets (which double
    their input) and the weight 8 of the previous-bit decoder.
    """
    counts = [g for g in subformulas(f) if isinstance(g, Count)]
    weight = sum(abs(a) for g in counts for a, _ in g.terms)
    top = max((g.threshold for g in counts), default=0)
    return math.ceil(math.log2(1 + weight + top)) + 3


def _check_policy(f: Formula, policy: GatePolicy):
    if policy in (GatePolicy.DIAGONAL, GatePolicy.DIAGONAL_TIME_INVARIANT):
        for g in subformulas(f):
            if isinstance(g, Mod):
                raise CompileError(f"MOD predicates need a constant permutation gate; "
                                   f"not available under policy {policy.value}", g)
    if policy in (GatePolicy.TIME_INVARIANT, GatePolicy.DIAGONAL_TIME_INVARIANT):
        for g in subformulas(f):
            if isinstance(g, Since):
                raise CompileError("since requires input-dependent gate", g)


def _warnings(f: Formula, mode_hint) -> list[str]:
    out = []
    if isinstance(mode_hint, Fixed):
        for g in subformulas(f):
            if isinstance(g, Count) and any(a < 0 for a, _ in g.terms):
                out.append(f"precision-unsound: {pretty(g)} has a negative coefficient; "
                           f"fixed-width counters can saturate")
        if mode_hint.frac_bits < 3 and has_node(f, Yesterday):
            out.append("precision-unsound: yesterday decoding needs at least 3 fraction bits")
    return out


def compile(f: Formula, policy=GatePolicy.DIAGONAL, mode_hint=None, props=None) -> Ssm:  # noqa: A001
    """Build an SSM accepting exactly the nonempty traces satisfying ``f``.

    ``props`` widens the proposition universe beyond the atoms of ``f``.
    """
    policy = GatePolicy.parse(policy)
    _check_policy(f, policy)
    source = f
    with_mod = has_node(f, Mod)
    if with_mod:
        f = normalize_mod_lcm(f)
    index = build_index(f, with_mod_block=with_mod, props=props)
    d = index.dim
    layers: list[SsmLayer] = []

    if with_mod:
        mod_layer = make_mod_layer(index.modulus, index)
        copies = tuple(sorted((index[g], _relu_copy(index.mod_dim(g.remainder), d))
                              for g in index.formulas if isinstance(g, Mod)))
        layers.append(replace(mod_layer, output=copies))

    constant = policy in (GatePolicy.TIME_INVARIANT, GatePolicy.DIAGONAL_TIME_INVARIANT)
    for level in sequential_decomposition(f)[1:]:
        frags = [compile_layer(psi, index, policy) for psi in sorted(level, key=index.__getitem__)]
        A = [[Fraction(0)] * d for _ in range(d)]
        B = [[Fraction(int(i == j)) for j in range(d)] for i in range(d)]
        gadgets = []
        for frag in frags:
            for c in frag.gate:
                A[c.target][c.source] += c.weight
            for c in frag.inc:
                B[c.target][c.source] += c.weight
            gadgets.extend(frag.gadgets)
        if constant:
            G = [[Fraction(0)] * d for _ in range(d)]
            for i in range(d):
                for j in range(d):
                    if A[i][j] and j != index.const:
                        raise CompileError("gate reads a non-constant input", index.formulas[0])
                G[i][i] = A[i][index.const]
            gate = ConstantMatrix(tuple(map(tuple, G)))
        else:
            gate = InputDiagonal(tuple(map(tuple, A)))
        layers.append(SsmLayer(tuple([Fraction(0)] * d), gate, tuple(map(tuple, B)),
                               tuple(sorted(gadgets, key=lambda g: g[0]))))

    out = make_comparator_gadget("=", 1).lift(index[f], d)
    return Ssm(props=index.props, index=index, layers=tuple(layers), out=out, policy=policy,
               formula=source, log_headroom=log_headroom(f),
               warnings=tuple(_warnings(f, mode_hint)))
