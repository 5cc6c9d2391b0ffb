"""Generalised state space models and their execution.

A layer maps an input sequence ``x_1..x_n`` to ``z_1..z_n`` via

    h_t = gate(x_t) . h_{t-1} + B x_t,        z_t = phi(h_t)

where ``gate`` is either ``diag(A x_t)`` (input-dependent, diagonal) or a
constant matrix, and ``phi`` is the identity except on the dimensions that
carry an output gadget.  All weights are exact rationals; an execution mode
decides how they are rounded.

Evaluation order is fixed: positions left to right, dot products in index
order, weights before bias.  Saturating arithmetic is not associative, so this
order is part of the model's meaning.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .formula import FalseF, Formula, SubformulaIndex, TrueF, parse, pretty
from .numerics import EXACT, Exact, Fixed, LogPrecision, Numeric

__all__ = [
    "Node", "Fnn", "InputDiagonal", "ConstantMatrix", "SsmLayer", "Ssm",
    "GatePolicy", "RunTrace", "Executor", "ExecutionError",
    "eval_fnn", "run_layer", "run", "accepts", "concrete_mode",
    "to_json", "from_json", "to_dict", "from_dict",
]


class ExecutionError(ValueError):
    pass


class GatePolicy(str, enum.Enum):
    DIAGONAL = "diagonal"
    TIME_INVARIANT = "timeinv"
    MIXED = "mixed"
    DIAGONAL_TIME_INVARIANT = "diagti"

    @classmethod
    def parse(cls, text) -> "GatePolicy":
        if isinstance(text, cls):
            return text
        aliases = {"diag": "diagonal", "time-invariant": "timeinv", "timeinvariant": "timeinv",
                   "diagonal-time-invariant": "diagti"}
        text = aliases.get(str(text).lower(), str(text).lower())
        try:
            return cls(text)
        except ValueError:
            raise ValueError(
                f"unknown policy {text!r}; expected diagonal, timeinv, mixed or diagti") from None


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass(frozen=True)
class Node:
    weights: tuple[Fraction, ...]
    bias: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(_frac(w) for w in self.weights))
        object.__setattr__(self, "bias", _frac(self.bias))


@dataclass(frozen=True)
class Fnn:
    """ReLU network; every node is ``relu(w . x + b)``."""

    layers: tuple[tuple[Node, ...], ...]

    def __post_init__(self):
        layers = tuple(tuple(layer) for layer in self.layers)
        object.__setattr__(self, "layers", layers)
        if not layers or any(not layer for layer in layers):
            raise ValueError("an FNN needs at least one nonempty layer")
        width = len(layers[0][0].weights)
        for k, layer in enumerate(layers):
            for node in layer:
                if len(node.weights) != width:
                    raise ValueError(f"layer {k}: node expects {len(node.weights)} inputs, "
                                     f"previous layer provides {width}")
            width = len(layer)

    @property
    def in_dim(self) -> int:
        return len(self.layers[0][0].weights)

    @property
    def out_dim(self) -> int:
        return len(self.layers[-1])

    def lift(self, source: int, dim: int) -> "Fnn":
        """Turn a scalar network into one reading coordinate ``source`` of a ``dim``-vector."""
        if self.in_dim != 1:
            raise ValueError("only scalar-input networks can be lifted")
        first = []
        for node in self.layers[0]:
            w = [Fraction(0)] * dim
            w[source] = node.weights[0]
            first.append(Node(tuple(w), node.bias))
        return Fnn((tuple(first),) + self.layers[1:])

    @classmethod
    def identity(cls, dim: int) -> "Fnn":
        """Identity on nonnegative inputs."""
        return cls(((tuple(Node(tuple(int(i == j) for j in range(dim))) for i in range(dim))),))


@dataclass(frozen=True)
class InputDiagonal:
    """gate(x) = diag(A x)."""

    A: tuple[tuple[Fraction, ...], ...]
    kind = "input_diagonal"


@dataclass(frozen=True)
class ConstantMatrix:
    """gate(x) = A for every x."""

    A: tuple[tuple[Fraction, ...], ...]
    kind = "constant"


@dataclass(frozen=True)
class SsmLayer:
    h0: tuple[Fraction, ...]
    gate: InputDiagonal | ConstantMatrix
    B: tuple[tuple[Fraction, ...], ...]
    output: tuple[tuple[int, Fnn], ...] = ()

    def __post_init__(self):
        d = len(self.h0)
        for name, mat in (("gate", self.gate.A), ("B", self.B)):
            if len(mat) != d or any(len(row) != d for row in mat):
                raise ValueError(f"{name} matrix is not {d}x{d}")
        dims = [i for i, _ in self.output]
        if len(dims) != len(set(dims)):
            raise ValueError("an output dimension carries more than one gadget")
        for i, net in self.output:
            if not 0 <= i < d:
                raise ValueError(f"gadget target {i} outside 0..{d - 1}")
            if net.in_dim != d or net.out_dim != 1:
                raise ValueError(f"gadget at {i} must map {d} inputs to 1 output")

    @property
    def dim(self) -> int:
        return len(self.h0)


@dataclass
class Ssm:
    props: tuple[str, ...]
    index: SubformulaIndex
    layers: tuple[SsmLayer, ...]
    out: Fnn
    policy: GatePolicy
    formula: Formula | None = None
    log_headroom: int = 0
    warnings: tuple[str, ...] = ()
    _executors: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.props = tuple(self.props)
        self.layers = tuple(self.layers)
        self.policy = GatePolicy.parse(self.policy)
        d = self.index.dim
        for k, layer in enumerate(self.layers):
            if layer.dim != d:
                raise ValueError(f"layer {k} has dimension {layer.dim}, index has {d}")
            if self.policy is GatePolicy.DIAGONAL and not isinstance(layer.gate, InputDiagonal):
                raise ValueError("diagonal policy requires input-diagonal gates")
            if self.policy in (GatePolicy.TIME_INVARIANT, GatePolicy.DIAGONAL_TIME_INVARIANT) \
                    and not isinstance(layer.gate, ConstantMatrix):
                raise ValueError("time-invariant policy requires constant gates")
        if self.out.in_dim != d:
            raise ValueError("output network does not read the model dimension")

    @property
    def dim(self) -> int:
        return self.index.dim

    def executor(self, mode) -> "Executor":
        ex = self._executors.get(mode)
        if ex is None:
            ex = self._executors[mode] = Executor(self, mode)
        return ex


def concrete_mode(ssm: Ssm, mode, n: int):
    """Resolve a log-precision mode for an input of length ``n``."""
    if isinstance(mode, LogPrecision):
        return mode.at_length(n, ssm.log_headroom)
    return mode


# --- prepared (mode-specific) forms -----------------------------------------

def _sparse_rows(mat, mode):
    rows = []
    for row in mat:
        rows.append(tuple((j, mode.encode(w)) for j, w in enumerate(row) if w != 0))
    return tuple(rows)


class _PreparedFnn:
    __slots__ = ("mode", "layers")

    def __init__(self, net: Fnn, mode):
        self.mode = mode
        self.layers = tuple(
            tuple((tuple((j, mode.encode(w)) for j, w in enumerate(node.weights) if w != 0),
                   mode.encode(node.bias)) for node in layer)
            for layer in net.layers)

    def __call__(self, xs):
        add, mul, one = self.mode.add, self.mode.mul, self.mode.one
        for layer in self.layers:
            ys = []
            for row, bias in layer:
                acc = 0
                for j, w in row:
                    acc = add(acc, xs[j] if w == one else mul(w, xs[j]))
                acc = add(acc, bias)
                ys.append(acc if acc > 0 else 0)
            xs = ys
        return xs


class _PreparedLayer:
    __slots__ = ("mode", "constant", "h0", "gate_rows", "b_rows", "gadgets", "dim", "active")

    def __init__(self, layer: SsmLayer, mode):
        self.mode = mode
        self.dim = layer.dim
        self.constant = isinstance(layer.gate, ConstantMatrix)
        self.h0 = tuple(mode.encode(v) for v in layer.h0)
        self.gate_rows = _sparse_rows(layer.gate.A, mode)
        self.b_rows = _sparse_rows(layer.B, mode)
        self.gadgets = tuple((i, _PreparedFnn(net, mode)) for i, net in layer.output)
        # rows that are not a plain copy of the input
        one = mode.one
        self.active = tuple(i for i in range(self.dim)
                            if self.gate_rows[i] or self.b_rows[i] != ((i, one),))

    def step(self, h_prev, x):
        """One recurrence step; returns ``(h_t, z_t)``."""
        add, mul, one = self.mode.add, self.mode.mul, self.mode.one
        h = list(x)
        for i in self.active:
            bx = 0
            for j, w in self.b_rows[i]:
                bx = add(bx, x[j] if w == one else mul(w, x[j]))
            grow = self.gate_rows[i]
            if grow:
                src = h_prev if self.constant else x
                g = 0
                for j, w in grow:
                    g = add(g, src[j] if w == one else mul(w, src[j]))
                if self.constant:
                    bx = add(g, bx)
                else:
                    bx = add(mul(g, h_prev[i]), bx)
            h[i] = bx
        if not self.gadgets:
            return h, h
        z = list(h)
        for i, net in self.gadgets:
            z[i] = net(h)[0]
        return h, z

    def realized_gate(self, x):
        """Diagonal of ``diag(A x)`` for an input-diagonal layer."""
        add, mul = self.mode.add, self.mode.mul
        out = []
        for row in self.gate_rows:
            g = 0
            for j, w in row:
                g = add(g, mul(w, x[j]))
            out.append(g)
        return out


class Executor:
    """A model specialised to one concrete mode (Exact or Fixed)."""

    def __init__(self, ssm: Ssm, mode):
        if isinstance(mode, LogPrecision):
            raise ExecutionError("resolve log precision with concrete_mode() first")
        self.ssm = ssm
        self.mode = mode
        self.layers = tuple(_PreparedLayer(layer, mode) for layer in ssm.layers)
        self.out = _PreparedFnn(ssm.out, mode)
        index = ssm.index
        self.prop_dims = {p: index.props.index(p) for p in index.props}
        base = [0] * index.dim
        base[index.const] = mode.one
        for f in index.formulas:
            if isinstance(f, TrueF):
                base[index[f]] = mode.one
            elif isinstance(f, FalseF):
                base[index[f]] = 0
        self._base = base
        self._embed_cache: dict = {}

    def initial_state(self):
        return tuple(layer.h0 for layer in self.layers)

    def embed(self, letter) -> list:
        key = frozenset(letter)
        x = self._embed_cache.get(key)
        if x is None:
            x = list(self._base)
            one = self.mode.one
            for p in key:
                try:
                    x[self.prop_dims[p]] = one
                except KeyError:
                    raise ExecutionError(f"unknown proposition {p!r}") from None
            self._embed_cache[key] = x
        return x

    def step(self, state, letter):
        """Advance every layer by one letter; returns ``(state, z_last, y)``."""
        x = self.embed(letter)
        new = []
        for layer, h_prev in zip(self.layers, state):
            h, x = layer.step(h_prev, x)
            new.append(h)
        return tuple(new), x, self.out(x)[0]

    def step_full(self, state, letter):
        x = self.embed(letter)
        hs, zs = [], []
        for layer, h_prev in zip(self.layers, state):
            h, x = layer.step(h_prev, x)
            hs.append(h)
            zs.append(x)
        return hs, zs, self.out(x)[0]


# --- public execution API ----------------------------------------------------

def _coerce_vec(xs, mode):
    out = []
    for v in xs:
        if isinstance(v, Numeric):
            if v.mode != mode:
                raise ExecutionError(f"value in mode {v.mode}, expected {mode}")
            out.append(v.raw)
        else:
            out.append(mode.encode(Fraction(v)))
    return out


def eval_fnn(net: Fnn, xs: Sequence, mode=EXACT) -> list[Numeric]:
    if isinstance(mode, LogPrecision):
        raise ExecutionError("resolve log precision to a fixed width first")
    if len(xs) != net.in_dim:
        raise ExecutionError(f"network expects {net.in_dim} inputs, got {len(xs)}")
    raw = _PreparedFnn(net, mode)(_coerce_vec(xs, mode))
    return [Numeric(v, mode, raw=True) for v in raw]


def run_layer(layer: SsmLayer, inputs: Sequence[Sequence], mode=EXACT):
    """Run one layer over a vector sequence; returns ``(hs, zs)`` as Numeric lists."""
    if isinstance(mode, LogPrecision):
        raise ExecutionError("resolve log precision to a fixed width first")
    if not inputs:
        raise ExecutionError("layer input sequence is empty")
    prep = _PreparedLayer(layer, mode)
    h = prep.h0
    hs, zs = [], []
    for x in inputs:
        if len(x) != layer.dim:
            raise ExecutionError(f"input of dimension {len(x)}, layer has {layer.dim}")
        h, z = prep.step(h, _coerce_vec(x, mode))
        hs.append([Numeric(v, mode, raw=True) for v in h])
        zs.append([Numeric(v, mode, raw=True) for v in z])
    return hs, zs


@dataclass
class RunTrace:
    """Raw values of one execution; decode with :meth:`value`.

    ``hs[l][t]`` and ``zs[l][t]`` are layer ``l``'s vectors at 0-based step ``t``.
    """

    mode: Exact | Fixed
    hs: list
    zs: list
    ys: list

    def value(self, raw) -> Fraction:
        return self.mode.decode(raw)

    def final_z(self, t: int) -> list:
        if self.zs:
            return self.zs[-1][t]
        raise IndexError("model has no layers")

    @property
    def output(self) -> list[Fraction]:
        return [self.value(y) for y in self.ys]


def run(ssm: Ssm, trace: Sequence[frozenset], mode=EXACT) -> RunTrace:
    if not trace:
        raise ExecutionError("SSM output is undefined on the empty trace")
    cmode = concrete_mode(ssm, mode, len(trace))
    ex = ssm.executor(cmode)
    state = ex.initial_state()
    hs = [[] for _ in ssm.layers]
    zs = [[] for _ in ssm.layers]
    ys = []
    for letter in trace:
        h_t, z_t, y = ex.step_full(state, letter)
        state = tuple(h_t)
        for k in range(len(ssm.layers)):
            hs[k].append(h_t[k])
            zs[k].append(z_t[k])
        ys.append(y)
    return RunTrace(cmode, hs, zs, ys)


def accepts(ssm: Ssm, trace: Sequence[frozenset], mode=EXACT) -> bool:
    """True iff the final output equals 1 exactly."""
    if not trace:
        raise ExecutionError("SSM output is undefined on the empty trace")
    cmode = concrete_mode(ssm, mode, len(trace))
    ex = ssm.executor(cmode)
    state = ex.initial_state()
    y = 0
    for letter in trace:
        state, _, y = ex.step(state, letter)
    return y == cmode.one


# --- serialisation -------------------------------------------------------------

def _q(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def _unq(s) -> Fraction:
    return Fraction(s)


def _mat(m):
    return [[_q(v) for v in row] for row in m]


def _unmat(m):
    return tuple(tuple(_unq(v) for v in row) for row in m)


def _fnn_dict(net: Fnn):
    return [[{"w": [_q(w) for w in node.weights], "b": _q(node.bias)} for node in layer]
            for layer in net.layers]


def _fnn_from(data) -> Fnn:
    return Fnn(tuple(tuple(Node(tuple(_unq(w) for w in n["w"]), _unq(n["b"])) for n in layer)
                     for layer in data))


def to_dict(ssm: Ssm) -> dict:
    idx = ssm.index
    return {
        "format": "pltl-ssm/1",
        "formula": None if ssm.formula is None else pretty(ssm.formula),
        "policy": ssm.policy.value,
        "dimension": idx.dim,
        "props": list(ssm.props),
        "index": {
            "props": list(idx.props),
            "formulas": [pretty(f) for f in idx.formulas],
            "modulus": idx.modulus,
            "map": {label: i for i, label in enumerate(idx.labels())},
        },
        "log_headroom": ssm.log_headroom,
        "warnings": list(ssm.warnings),
        "layers": [
            {
                "h0": [_q(v) for v in layer.h0],
                "gate": layer.gate.kind,
                "A": _mat(layer.gate.A),
                "B": _mat(layer.B),
                "output": [{"dim": i, "fnn": _fnn_dict(net)} for i, net in layer.output],
            }
            for layer in ssm.layers
        ],
        "out": _fnn_dict(ssm.out),
    }


def from_dict(data: dict) -> Ssm:
    ix = data["index"]
    index = SubformulaIndex(tuple(ix["props"]), tuple(parse(s) for s in ix["formulas"]),
                            ix.get("modulus"))
    if index.dim != data["dimension"]:
        raise ValueError(f"index describes {index.dim} dimensions, model claims {data['dimension']}")
    layers = []
    for ld in data["layers"]:
        gate_cls = {"input_diagonal": InputDiagonal, "constant": ConstantMatrix}[ld["gate"]]
        layers.append(SsmLayer(
            h0=tuple(_unq(v) for v in ld["h0"]),
            gate=gate_cls(_unmat(ld["A"])),
            B=_unmat(ld["B"]),
            output=tuple((g["dim"], _fnn_from(g["fnn"])) for g in ld["output"]),
        ))
    return Ssm(
        props=tuple(data["props"]),
        index=index,
        layers=tuple(layers),
        out=_fnn_from(data["out"]),
        policy=GatePolicy.parse(data["policy"]),
        formula=None if data.get("formula") is None else parse(data["formula"]),
        log_headroom=data.get("log_headroom", 0),
        warnings=tuple(data.get("warnings", ())),
    )


def to_json(ssm: Ssm, indent: int | None = 1) -> str:
    return json.dumps(to_dict(ssm), indent=indent, sort_keys=False)


def from_json(text: str) -> Ssm:
    return from_dict(json.loads(text))
