"""The Gauss measure on cylinders, exact digit sampling, and Markov-defect witnesses."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np

from .cf_core import DigitWord, as_word, continuants, cylinder
from .errors import DomainError, NoWitnessFound
from .kernel import sample_gauss_block
from .streams import map_blocks

LN2 = math.log(2.0)
# defects below this are indistinguishable from rounding in float64 closed forms
DEFECT_FLOOR = 1e-13


def _log1p_fraction(z: Fraction, prec: int | None):
    if prec is None:
        return math.log1p(float(z)) if z > 1e-300 else float(z)
    with mpmath.workprec(prec):
        return mpmath.log1p(mpmath.mpf(z.numerator) / z.denominator)


def mu_g_interval(low, high, prec: int | None = None):
    """Gauss mass log2((1 + high) / (1 + low)).

    Float64 by default; with ``prec`` (bits) an ``mpmath.mpf`` at that precision.
    """
    low, high = Fraction(low), Fraction(high)
    if not (0 <= low <= high <= 1):
        raise DomainError(f"need 0 <= low <= high <= 1, got ({low}, {high})")
    z = (high - low) / (1 + low)
    if prec is None:
        return _log1p_fraction(z, None) / LN2
    with mpmath.workprec(prec):
        return _log1p_fraction(z, prec) / mpmath.log(2)


def mu_g_cylinder(w: Sequence[int], prec: int | None = None):
    w = as_word(w)
    if not w:
        return 1.0 if prec is None else mpmath.mpf(1)
    cyl = cylinder(w)
    return mu_g_interval(cyl.low, cyl.high, prec)


def log_mu_g_cylinder(w: Sequence[int]) -> float:
    """Natural log of the Gauss mass; stays finite for arbitrarily deep words."""
    w = as_word(w)
    if not w:
        return 0.0
    cyl = cylinder(w)
    z = cyl.length / (1 + cyl.low)
    if z > 1e-8:
        return math.log(math.log1p(float(z)) / LN2)
    # log1p(z) = z (1 - z/2 + ...); ln z from exact integer logs
    ln_z = math.log(z.numerator) - math.log(z.denominator)
    return ln_z + math.log1p(-float(z) / 2) - math.log(LN2)


def digit_tail_interval(w: Sequence[int], cap: int) -> tuple[Fraction, Fraction]:
    """The interval {x in I_w : next digit <= cap}, from the Mobius action at t = 1/(cap+1)."""
    c = continuants(w)
    a = Fraction(c.p_cur + c.p_prev, c.q_cur + c.q_prev)
    b = Fraction((cap + 1) * c.p_cur + c.p_prev, (cap + 1) * c.q_cur + c.q_prev)
    return (a, b) if a < b else (b, a)


# ---------------------------------------------------------------- sampling


def _gauss_block(rng, count, n):
    return sample_gauss_block(rng.random((count, n)))


def sample_mu_g_digits(n: int, seed: int, samples: int = 1, workers: int = 1) -> np.ndarray:
    """``samples`` independent mu_G digit words of length ``n`` (rows of an int64 array)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return map_blocks(_gauss_block, samples, seed, "mu_g", workers, n=n)


def next_digit_tail_exact(w: Sequence[int], c: int, prec: int = 200):
    """P(next digit >= c | prefix w) under mu_G, from exact cylinder endpoints."""
    w = as_word(w)
    if c <= 1:
        return mpmath.mpf(1)
    lo, hi = digit_tail_interval(w, c - 1)
    with mpmath.workprec(prec):
        return 1 - mu_g_interval(lo, hi, prec) / mu_g_cylinder(w, prec)


def sample_mu_g_digits_exact(uniforms: Sequence[float], prec: int = 200) -> DigitWord:
    """Reference sampler: big-integer continuants, high-precision logs, bisection on c.

    Uses the same inverse-CDF convention as the vectorised sampler (digit c iff
    P(next > c) < u <= P(next >= c)), so equal uniforms give equal digits.
    """
    digits: list[int] = []
    for u in uniforms:
        u = mpmath.mpf(u)
        lo, hi = 1, 2
        while next_digit_tail_exact(digits, hi, prec) >= u:
            lo, hi = hi, hi * 2
        # invariant: tail(lo) >= u > tail(hi)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if next_digit_tail_exact(digits, mid, prec) >= u:
                lo = mid
            else:
                hi = mid
        digits.append(lo)
    return DigitWord(digits)


# ------------------------------------------------------- ratios and defects


def quasi_independence_ratio(u: Sequence[int], v: Sequence[int]) -> float:
    u, v = as_word(u), as_word(v)
    if not u or not v:
        raise DomainError("both words must be nonempty")
    return math.exp(log_mu_g_cylinder(u + v) - log_mu_g_cylinder(u) - log_mu_g_cylinder(v))


@dataclass(frozen=True)
class MarkovDefectWitness:
    b: DigitWord
    a: DigitWord
    c: int
    defect: float

    @property
    def m(self) -> int:
        return len(self.b)

    def to_dict(self) -> dict:
        return {"b": list(self.b), "a": list(self.a), "c": self.c, "defect": self.defect}


def markov_defect(b: Sequence[int], a: Sequence[int], c: int, prec: int | None = None) -> MarkovDefectWitness:
    """|mu(I_bac) - mu(I_ac) mu(I_ba) / mu(I_a)|; ``a`` may be empty (then I_a = X)."""
    b, a = as_word(b), as_word(a)
    mu = lambda w: mu_g_cylinder(w, prec)  # noqa: E731
    defect = abs(mu(b + a + [c]) - mu(a + [c]) * mu(b + a) / mu(a))
    return MarkovDefectWitness(b, a, int(c), float(defect))


def find_markov_witness(k: int, max_digit: int, max_m: int, prec: int | None = None) -> MarkovDefectWitness:
    """Exhaustive lexicographic scan for the largest defect; first maximum wins ties."""
    if k < 0 or max_digit < 1 or max_m < 1:
        raise DomainError("need k >= 0, max_digit >= 1, max_m >= 1")
    alphabet = range(1, max_digit + 1)
    best = None
    for m in range(1, max_m + 1):
        for b in itertools.product(alphabet, repeat=m):
            for a in itertools.product(alphabet, repeat=k):
                for c in alphabet:
                    w = markov_defect(b, a, c, prec)
                    if best is None or w.defect > best.defect:
                        best = w
    if best is None or best.defect < DEFECT_FLOOR:
        raise NoWitnessFound(f"no defect above {DEFECT_FLOOR} for k={k}, D={max_digit}, m<={max_m}")
    return best
