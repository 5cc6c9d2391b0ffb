"""Arithmetic regimes for model execution.

``Exact`` computes over unbounded rationals.  ``Fixed(I, F)`` stores integers
scaled by ``2**-F`` in ``[-2**I, 2**I - 2**-F]`` and saturates at both ends;
products are rounded half-to-even onto the grid.  ``LogPrecision(F, H)`` is a
``Fixed`` whose integer width grows with the input: ``ceil(log2(n + 2)) + H``.

Modes expose their operations on *raw* values (``Fraction``/``int`` for Exact,
scaled ``int`` for Fixed) so the executor can run without per-value wrappers.
:class:`Numeric` is the tagged, user-facing value.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

__all__ = [
    "Exact", "Fixed", "LogPrecision", "EXACT", "Numeric", "ModeError",
    "add", "mul", "relu", "parse_mode", "format_mode", "log_int_bits",
]


class ModeError(ValueError):
    pass


def _as_fraction(x) -> Fraction:
    if isinstance(x, Numeric):
        return x.to_fraction()
    if isinstance(x, float):
        return Fraction(x).limit_denominator(1 << 30)
    return Fraction(x)


@dataclass(frozen=True)
class Exact:
    zero = 0
    one = 1

    def encode(self, q):
        q = Fraction(q)
        return q.numerator if q.denominator == 1 else q

    def decode(self, raw) -> Fraction:
        return Fraction(raw)

    @staticmethod
    def add(a, b):
        return a + b

    @staticmethod
    def mul(a, b):
        return a * b

    @staticmethod
    def relu(a):
        return a if a > 0 else 0

    def __str__(self):
        return "exact"


EXACT = Exact()


@dataclass(frozen=True)
class Fixed:
    int_bits: int
    frac_bits: int

    def __post_init__(self):
        if self.int_bits < 1 or self.frac_bits < 0:
            raise ModeError(f"bad fixed-point widths I={self.int_bits}, F={self.frac_bits}")
        # raw-grid constants, cached outside the dataclass fields
        object.__setattr__(self, "one", 1 << self.frac_bits)
        object.__setattr__(self, "lo", -(1 << (self.int_bits + self.frac_bits)))
        object.__setattr__(self, "hi", (1 << (self.int_bits + self.frac_bits)) - 1)

    zero = 0

    @property
    def step(self) -> Fraction:
        return Fraction(1, 1 << self.frac_bits)

    def saturate(self, raw: int) -> int:
        lo, hi = self.lo, self.hi
        return lo if raw < lo else hi if raw > hi else raw

    def encode(self, q) -> int:
        # Fraction.__round__ rounds half to even.
        return self.saturate(round(Fraction(q) * self.one))

    def decode(self, raw: int) -> Fraction:
        return Fraction(raw, self.one)

    def add(self, a: int, b: int) -> int:
        s = a + b
        if s > self.hi:
            return self.hi
        return self.lo if s < self.lo else s

    def mul(self, a: int, b: int) -> int:
        p = a * b
        if self.frac_bits:
            q, r = divmod(p, self.one)
            twice = 2 * r
            if twice > self.one or (twice == self.one and q & 1):
                q += 1
            p = q
        return self.lo if p < self.lo else self.hi if p > self.hi else p

    @staticmethod
    def relu(a: int) -> int:
        return a if a > 0 else 0

    def grid(self):
        """Every representable raw value, ascending."""
        return range(self.lo, self.hi + 1)

    def __str__(self):
        return f"fixed:{self.int_bits}:{self.frac_bits}"


def log_int_bits(n: int, headroom: int) -> int:
    return math.ceil(math.log2(n + 2)) + headroom


@dataclass(frozen=True)
class LogPrecision:
    """Fixed-point whose integer width depends on the input length.

    ``headroom=None`` means "take the headroom the compiled model asks for".
    """

    frac_bits: int = 4
    headroom: int | None = None

    def at_length(self, n: int, headroom: int | None = None) -> Fixed:
        h = self.headroom if self.headroom is not None else headroom
        if h is None:
            raise ModeError("log-precision headroom is 'auto' but no model headroom was given")
        return Fixed(log_int_bits(n, h), self.frac_bits)

    def __str__(self):
        return f"logp:{self.frac_bits}:{'auto' if self.headroom is None else self.headroom}"


def parse_mode(text: str):
    """``exact`` | ``fixed:I:F`` | ``logp:F[:H|auto]``."""
    parts = text.strip().lower().split(":")
    try:
        if parts == ["exact"]:
            return EXACT
        if parts[0] == "fixed" and len(parts) == 3:
            return Fixed(int(parts[1]), int(parts[2]))
        if parts[0] == "logp" and len(parts) in (2, 3):
            head = None if len(parts) == 2 or parts[2] == "auto" else int(parts[2])
            if head is not None and head < 0:
                raise ModeError("headroom must be nonnegative")
            frac = int(parts[1])
            if frac < 0:
                raise ModeError("fraction bits must be nonnegative")
            return LogPrecision(frac, head)
    except ValueError as exc:
        raise ModeError(f"bad mode {text!r}: {exc}") from None
    raise ModeError(f"bad mode {text!r}; expected exact, fixed:I:F or logp:F[:H|auto]")


def format_mode(mode) -> str:
    return str(mode)


class Numeric:
    """A value tagged with the concrete mode it lives in."""

    __slots__ = ("mode", "raw")

    def __init__(self, value, mode=EXACT, *, raw: bool = False):
        if isinstance(mode, LogPrecision):
            raise ModeError("resolve a log-precision mode with at_length() first")
        self.mode = mode
        self.raw = value if raw else mode.encode(_as_fraction(value))

    def to_fraction(self) -> Fraction:
        return self.mode.decode(self.raw)

    def _check(self, other: "Numeric"):
        if not isinstance(other, Numeric):
            raise TypeError(f"expected Numeric, got {type(other).__name__}")
        if other.mode != self.mode:
            raise ModeError(f"mode mismatch: {self.mode} vs {other.mode}")

    def __add__(self, other):
        self._check(other)
        return Numeric(self.mode.add(self.raw, other.raw), self.mode, raw=True)

    def __mul__(self, other):
        self._check(other)
        return Numeric(self.mode.mul(self.raw, other.raw), self.mode, raw=True)

    def relu(self):
        return Numeric(self.mode.relu(self.raw), self.mode, raw=True)

    def __eq__(self, other):
        if isinstance(other, Numeric):
            return self.mode == other.mode and self.raw == other.raw
        try:
            return self.to_fraction() == Fraction(other)
        except (TypeError, ValueError):
            return NotImplemented

    def __hash__(self):
        return hash(self.to_fraction())

    def __lt__(self, other):
        return self.to_fraction() < _as_fraction(other)

    def __le__(self, other):
        return self.to_fraction() <= _as_fraction(other)

    def __gt__(self, other):
        return self.to_fraction() > _as_fraction(other)

    def __ge__(self, other):
        return self.to_fraction() >= _as_fraction(other)

    def __repr__(self):
        return f"Numeric({self.to_fraction()}, {self.mode})"


def add(a: Numeric, b: Numeric) -> Numeric:
    return a + b


def mul(a: Numeric, b: Numeric) -> Numeric:
    return a * b


def relu(a: Numeric) -> Numeric:
    return a.relu()
