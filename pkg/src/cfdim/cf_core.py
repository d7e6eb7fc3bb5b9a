"""Exact continued-fraction arithmetic.

Everything touching cylinder geometry is done with Python integers and
``fractions.Fraction``; floating point never enters here.  Inexact inputs
(floats, ``mpmath.mpf``) are dyadic rationals, so they are converted exactly
and the precision they carry only enters through the digit budget in
:func:`digits_of`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

import mpmath

from .errors import (
    EmptyWord,
    InvalidDigit,
    PrecisionExhausted,
    RationalTermination,
    UndefinedAtZero,
)

# guard bits kept back from the input precision before a digit is certified
PRECISION_GUARD_BITS = 32

Number = Union[Fraction, int, float, "mpmath.mpf"]


class DigitWord(tuple):
    """Finite word of continued-fraction digits; the empty word denotes all of X."""

    __slots__ = ()

    def __new__(cls, digits: Iterable[int] = ()):
        digits = tuple(int(a) for a in digits)
        for a in digits:
            if a < 1:
                raise InvalidDigit(f"continued-fraction digits must be >= 1, got {a}")
        return super().__new__(cls, digits)

    def __add__(self, other):
        return DigitWord(tuple(self) + tuple(other))

    def __getitem__(self, item):
        out = super().__getitem__(item)
        if isinstance(item, slice):
            return DigitWord(out)
        return out

    def __repr__(self) -> str:
        return f"DigitWord({list(self)})"


def as_word(w: Sequence[int] | DigitWord) -> DigitWord:
    return w if isinstance(w, DigitWord) else DigitWord(w)


@dataclass(frozen=True)
class ContinuantPair:
    p_prev: int
    p_cur: int
    q_prev: int
    q_cur: int

    @property
    def determinant(self) -> int:
        return self.p_cur * self.q_prev - self.p_prev * self.q_cur


@dataclass(frozen=True)
class CylinderInterval:
    low: Fraction
    high: Fraction
    word: DigitWord

    @property
    def depth(self) -> int:
        return len(self.word)

    @property
    def length(self) -> Fraction:
        return self.high - self.low

    @property
    def midpoint(self) -> Fraction:
        return (self.low + self.high) / 2

    def contains(self, x) -> bool:
        return self.low < x < self.high


@dataclass(frozen=True)
class RealPoint:
    """A point of (0, 1): an exact rational, or a dyadic value with a declared precision.

    ``precision`` is ``None`` for exact rationals.
    """

    value: Fraction
    precision: int | None = None

    def __post_init__(self):
        if not (0 < self.value < 1):
            raise ValueError(f"point must lie in (0, 1), got {self.value}")


def to_point(x, precision: int | None = None) -> RealPoint:
    """Convert ``x`` to a :class:`RealPoint`.

    Fractions and ints are exact.  Floats carry 53 bits, ``mpmath.mpf`` values
    carry the current ``mpmath.mp.prec`` unless ``precision`` is given.
    """
    if isinstance(x, RealPoint):
        return x
    if isinstance(x, (Fraction, int)):
        return RealPoint(Fraction(x), precision)
    if isinstance(x, float):
        return RealPoint(Fraction(x), 53 if precision is None else precision)
    if isinstance(x, mpmath.mpf):
        man, exp = x.man_exp
        value = Fraction(int(man)) * (Fraction(2) ** int(exp))
        return RealPoint(value, mpmath.mp.prec if precision is None else precision)
    raise TypeError(f"cannot interpret {type(x).__name__} as a point of (0, 1)")


def continuants(w: Sequence[int]) -> ContinuantPair:
    w = as_word(w)
    p_prev, p_cur = 1, 0
    q_prev, q_cur = 0, 1
    for a in w:
        p_prev, p_cur = p_cur, a * p_cur + p_prev
        q_prev, q_cur = q_cur, a * q_cur + q_prev
    return ContinuantPair(p_prev, p_cur, q_prev, q_cur)


def eval_finite_cf(w: Sequence[int]) -> Fraction:
    """Value of the finite continued fraction 1/(a_1 + 1/(a_2 + ... + 1/a_m))."""
    w = as_word(w)
    if len(w) == 0:
        raise EmptyWord("a finite continued fraction needs at least one digit")
    value = Fraction(0)
    for a in reversed(w):
        value = 1 / (a + value)
    return value


def cylinder(w: Sequence[int]) -> CylinderInterval:
    w = as_word(w)
    c = continuants(w)
    a = Fraction(c.p_cur, c.q_cur)
    b = Fraction(c.p_cur + c.p_prev, c.q_cur + c.q_prev)
    low, high = (a, b) if a < b else (b, a)
    return CylinderInterval(low, high, w)


def cylinder_length(w: Sequence[int]) -> Fraction:
    c = continuants(w)
    return Fraction(1, c.q_cur * (c.q_cur + c.q_prev))


def gauss_map(x):
    """Fractional part of 1/x; exact for rationals, returns 0 when the orbit terminates."""
    if isinstance(x, RealPoint):
        x = x.value
    if isinstance(x, (int, Fraction)):
        x = Fraction(x)
        if x == 0:
            raise UndefinedAtZero("the Gauss map is undefined at 0")
        y = 1 / x
        return y - math.floor(y)
    if x == 0:
        raise UndefinedAtZero("the Gauss map is undefined at 0")
    if isinstance(x, mpmath.mpf):
        y = 1 / x
        return y - mpmath.floor(y)
    y = 1.0 / x
    return y - math.floor(y)


def digits_of(x, n: int, precision: int | None = None) -> DigitWord:
    """First ``n`` continued-fraction digits of ``x``.

    For inexact inputs digit ``j`` is only emitted while the cylinder of the
    first ``j`` digits is longer than ``2**(32 - P)``, ``P`` being the input
    precision in bits.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    pt = to_point(x, precision)
    floor_len = None
    if pt.precision is not None:
        floor_len = Fraction(2) ** (PRECISION_GUARD_BITS - pt.precision)

    t = pt.value
    digits: list[int] = []
    p_prev, p_cur, q_prev, q_cur = 1, 0, 0, 1
    for j in range(n):
        if t == 0:
            raise RationalTermination(
                f"{pt.value} is rational; expansion stops after {j} digits",
                digits=DigitWord(digits),
            )
        y = 1 / t
        a = math.floor(y)
        p_prev, p_cur = p_cur, a * p_cur + p_prev
        q_prev, q_cur = q_cur, a * q_cur + q_prev
        if floor_len is not None and Fraction(1, q_cur * (q_cur + q_prev)) <= floor_len:
            raise PrecisionExhausted(
                f"{pt.precision}-bit input cannot certify digit {j + 1}",
                digits=DigitWord(digits),
            )
        digits.append(a)
        t = y - a
    return DigitWord(digits)


def cf_expansion(x: Fraction) -> DigitWord:
    """Complete (terminating) expansion of a rational in (0, 1)."""
    x = Fraction(x)
    digits = []
    while x != 0:
        y = 1 / x
        a = math.floor(y)
        digits.append(a)
        x = y - a
    return DigitWord(digits)


def fibonacci(n: int) -> int:
    a, b = 0, 1
    for _ in range(n):
        a, b = b, a + b
    return a
