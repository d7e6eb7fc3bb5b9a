"""f-expansions: digits, cylinders, the shift map, Ulam densities and the linearity test.

A scheme is given by a strictly monotone f with its inverse.  Digits are
a_i = floor(f^{-1}(r_{i-1})) with r_i the fractional part of f^{-1}(r_{i-1}),
and the map is Tx = f^{-1}(x) - floor(f^{-1}(x)).  The inverse branch of T on
digit a is y -> f(a + y), which is what the Ulam matrix and the cylinder
brackets are built from.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import mpmath
import numpy as np

from .cf_core import PRECISION_GUARD_BITS, to_point
from .errors import (
    BranchOutOfRange,
    ConditionViolated,
    ConfigError,
    DensityNotPositive,
    DomainError,
    InvalidDigit,
    NotConverged,
    OrbitHitsZero,
    PrecisionExhausted,
    UndefinedAtBranchEnd,
)

INF = math.inf


@dataclass(frozen=True)
class ExpansionScheme:
    """f-expansion with ``M`` branches (``math.inf`` allowed).

    ``f`` and ``f_inverse`` must accept floats and numpy arrays; when
    ``exact`` is set they must also map Fractions to Fractions exactly.
    ``branch_cap`` limits the branches used numerically when M is infinite.
    ``e91`` records whether the summability condition on |T'|^{-t} is known
    to hold; it is metadata only.
    """

    name: str
    direction: str
    M: float
    f: Callable
    f_inverse: Callable
    exact: bool = False
    branch_cap: int = 4096
    e91: bool | None = None

    def __post_init__(self):
        if self.direction not in ("increasing", "decreasing"):
            raise ConfigError("direction must be 'increasing' or 'decreasing'")
        if not (self.M == INF or (float(self.M).is_integer() and self.M >= 2)):
            raise ConfigError("M must be an integer >= 2 or infinite")

    @property
    def finite(self) -> bool:
        return self.M != INF

    @property
    def first_digit(self) -> int:
        return 1 if self.direction == "decreasing" else 0

    @property
    def last_digit(self) -> float:
        """Largest digit, or inf."""
        if not self.finite:
            return INF
        return int(self.M) if self.direction == "decreasing" else int(self.M) - 1

    def alphabet(self, cap: int | None = None) -> list[int]:
        top = self.last_digit
        if top == INF:
            top = self.branch_cap if cap is None else cap
        elif cap is not None:
            top = min(top, cap)
        return list(range(self.first_digit, int(top) + 1))

    def in_alphabet(self, a: int) -> bool:
        return self.first_digit <= a <= self.last_digit

    def branch_interval(self, a: int) -> tuple[float, float]:
        """Sorted endpoints of f(a, a + 1)."""
        if not self.in_alphabet(a):
            raise BranchOutOfRange(f"{a} is not a digit of {self.name}")
        u, v = self.f(a), self.f(a + 1)
        return (u, v) if u < v else (v, u)

    def branch_T(self, a: int, x):
        """T restricted to the closure of branch a (no floor taken)."""
        return self.f_inverse(x) - a

    def to_dict(self) -> dict:
        if self.name == "cf":
            return {"kind": "cf"}
        if self.name.startswith("base-"):
            return {"kind": "base-m", "M": int(self.M)}
        raise ConfigError("custom schemes are supplied programmatically, not as JSON")


def cf_scheme(branch_cap: int = 4096) -> ExpansionScheme:
    return ExpansionScheme("cf", "decreasing", INF, lambda t: 1 / t, lambda y: 1 / y,
                           exact=True, branch_cap=branch_cap, e91=True)


def base_scheme(M: int) -> ExpansionScheme:
    M = int(M)
    return ExpansionScheme(f"base-{M}", "increasing", M, lambda t: t / M, lambda y: M * y,
                           exact=True, e91=True)


def scheme_from_dict(doc: dict) -> ExpansionScheme:
    kind = doc.get("kind")
    if kind == "cf":
        return cf_scheme(int(doc.get("branch_cap", 4096)))
    if kind in ("base-m", "base"):
        return base_scheme(int(doc["M"]))
    raise ConfigError(f"unknown scheme kind {kind!r}")


# ------------------------------------------------------- digits and cylinders


def _floor(y):
    return math.floor(y) if isinstance(y, (Fraction, int, float)) else int(mpmath.floor(y))


def reconstruct_f(scheme: ExpansionScheme, word: Sequence[int], prec: int | None = None):
    """Bracket [low, high] of all x whose first digits are ``word``.

    Exact Fractions for exact schemes, else ``mpmath`` at ``prec`` bits.
    """
    for a in word:
        if not scheme.in_alphabet(a):
            raise InvalidDigit(f"{a} is not a digit of {scheme.name}")
    ends = []
    for t in (0, 1):
        if scheme.exact:
            v = Fraction(t)
            for a in reversed(word):
                v = scheme.f(a + v)
        else:
            with mpmath.workprec(prec or 128):
                v = mpmath.mpf(t)
                for a in reversed(word):
                    v = scheme.f(a + v)
        ends.append(v)
    return (ends[0], ends[1]) if ends[0] < ends[1] else (ends[1], ends[0])


def digits_f(scheme: ExpansionScheme, x, n: int, precision: int | None = None) -> list[int]:
    """First ``n`` digits of the f-expansion of ``x``.

    Inexact inputs obey the same budget as continued-fraction digits: digit j
    is emitted only while its cylinder is longer than 2**(32 - P).
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    if scheme.exact:
        pt = to_point(x, precision)
        r, prec = pt.value, pt.precision
    else:
        prec = precision or (mpmath.mp.prec if isinstance(x, mpmath.mpf) else 53)
        r = mpmath.mpf(x) if not isinstance(x, Fraction) else mpmath.mpf(x.numerator) / x.denominator
    floor_len = None if prec is None else 2.0 ** (PRECISION_GUARD_BITS - prec)
    out: list[int] = []
    with mpmath.workprec(prec or 53):
        for j in range(n):
            if r == 0:
                raise OrbitHitsZero(f"orbit reaches 0 after {j} digits", digits=tuple(out))
            y = scheme.f_inverse(r)
            a = _floor(y)
            if floor_len is not None:
                lo, hi = reconstruct_f(scheme, out + [a], prec)
                if float(hi - lo) <= floor_len:
                    raise PrecisionExhausted(f"{prec}-bit input cannot certify digit {j + 1}",
                                             digits=tuple(out))
            out.append(a)
            r = y - a
    return out


def t_map_f(scheme: ExpansionScheme, x):
    """Tx = f^{-1}(x) mod 1; raises on the countable set of branch endpoints."""
    if not (0 < x < 1):
        raise DomainError("x must lie in (0, 1)")
    y = scheme.f_inverse(x)
    t = y - _floor(y)
    if t == 0:
        raise UndefinedAtBranchEnd(f"{x} is a branch endpoint of {scheme.name}")
    return t


def t_map_array(scheme: ExpansionScheme, x: np.ndarray) -> np.ndarray:
    y = scheme.f_inverse(np.asarray(x, dtype=float))
    return y - np.floor(y)


# ------------------------------------------------------------- conditions


@dataclass
class ConditionReport:
    c2_ok: list
    ell: int | None
    beta: float
    q_estimate: float
    grid: int
    branches: int
    branch_cap: int | None
    betas: list = field(default_factory=list)

    @property
    def q_constant(self) -> float:
        """A valid distortion constant respecting 1 <= Q."""
        return max(1.0, self.q_estimate)

    @property
    def passed(self) -> bool:
        return all(self.c2_ok) and self.ell is not None and math.isfinite(self.q_estimate)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["q_constant"] = self.q_constant
        out["passed"] = self.passed
        return out


def _branch_grid(scheme, a, grid):
    lo, hi = scheme.branch_interval(a)
    if scheme.exact:
        lo, hi = Fraction(lo), Fraction(hi)
        return [lo + (hi - lo) * Fraction(i, grid) for i in range(grid + 1)], hi - lo
    return [lo + (hi - lo) * i / grid for i in range(grid + 1)], hi - lo


def _derivs(scheme, a, xs, h, lo, hi):
    """First and second derivatives of the branch map, one-sided at the ends."""
    T = lambda x: scheme.branch_T(a, x)  # noqa: E731
    d1, d2 = [], []
    for x in xs:
        if x - 2 * h < lo:
            f0, f1, f2, f3 = T(x), T(x + h), T(x + 2 * h), T(x + 3 * h)
            d1.append(float((-3 * f0 + 4 * f1 - f2) / (2 * h)))
            d2.append(float((2 * f0 - 5 * f1 + 4 * f2 - f3) / (h * h)))
        elif x + 2 * h > hi:
            f0, f1, f2, f3 = T(x), T(x - h), T(x - 2 * h), T(x - 3 * h)
            d1.append(float((3 * f0 - 4 * f1 + f2) / (2 * h)))
            d2.append(float((2 * f0 - 5 * f1 + 4 * f2 - f3) / (h * h)))
        else:
            fm, f0, fp = T(x - h), T(x), T(x + h)
            d1.append(float((fp - fm) / (2 * h)))
            d2.append(float((fp - 2 * f0 + fm) / (h * h)))
    return np.array(d1), np.array(d2)


def check_conditions(scheme: ExpansionScheme, grid: int = 64, ell_max: int = 3, branch_cap: int = 32,
                     strict: bool = True) -> ConditionReport:
    """Finite-difference check of smoothness, eventual expansion and bounded distortion.

    Branches of infinite-M schemes are checked up to ``branch_cap`` (reported).
    The C^2 check is a heuristic: second differences at step h and h/2 must agree.
    Expansion looks for the first ell <= ell_max with inf |(T^ell)'| > 1 over
    the grid, branch endpoints included.
    """
    digits = scheme.alphabet(cap=branch_cap)
    c2_ok, q_est = [], 0.0
    pts, slopes = [], []
    for a in digits:
        xs, width = _branch_grid(scheme, a, grid)
        lo, hi = xs[0], xs[-1]
        h = width / (16 * grid)
        d1, d2 = _derivs(scheme, a, xs, h, lo, hi)
        _, d2_half = _derivs(scheme, a, xs, h / 2, lo, hi)
        ok = bool(np.all(np.isfinite(d2)) and np.all(np.abs(d2 - d2_half) <= 1e-3 * (1 + np.abs(d2))))
        c2_ok.append(ok)
        min_slope = float(np.min(np.abs(d1)))
        q_est = max(q_est, float(np.max(np.abs(d2))) / min_slope**2 if min_slope > 0 else INF)
        pts.extend(float(x) for x in xs)
        slopes.extend(np.abs(d1).tolist())

    pts_arr = np.array(pts)
    slope1 = np.array(slopes)
    betas = []
    ell_found, beta = None, 0.0
    for ell in range(1, ell_max + 1):
        prod = slope1.copy()
        x = np.array([float(scheme.branch_T(a, xx)) for a, xx in _branch_labels(scheme, digits, grid, pts_arr)])
        for _ in range(ell - 1):
            prod *= _abs_slope(scheme, x)
            x = _safe_T(scheme, x)
        b = float(np.min(prod))
        betas.append(b)
        if ell_found is None and b > 1.0:
            ell_found, beta = ell, b
    report = ConditionReport(c2_ok, ell_found, beta, q_est, grid, len(digits),
                             None if scheme.finite else branch_cap, betas)
    if strict and not report.passed:
        failing = "C2" if not all(c2_ok) else ("expansion" if ell_found is None else "distortion")
        raise ConditionViolated(f"condition {failing} fails for {scheme.name}", condition=failing,
                                report=report.to_dict())
    return report


def _branch_labels(scheme, digits, grid, pts):
    labels = np.repeat(digits, grid + 1)
    return zip(labels.tolist(), pts.tolist())


def _abs_slope(scheme, x):
    """|T'(x)| by central differences at interior points (inf at 0)."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = 1e-7 * np.maximum(x, 1e-12)
        y1 = scheme.f_inverse(x + h)
        y0 = scheme.f_inverse(np.maximum(x - h, 0.0))
        s = np.abs((y1 - y0) / (x + h - np.maximum(x - h, 0.0)))
    return np.where((x <= 0) | ~np.isfinite(s), INF, s)


def _safe_T(scheme, x):
    with np.errstate(divide="ignore", invalid="ignore"):
        y = scheme.f_inverse(np.asarray(x, dtype=float))
        t = y - np.floor(y)
    return np.where(np.isfinite(t), t, 0.0)


# ---------------------------------------------------------- densities


class LebesgueDensity:
    """Uniform density: F is the identity."""

    min_value = 1.0

    def cdf(self, x):
        return np.asarray(x, dtype=float)

    def inverse_cdf(self, y):
        return np.asarray(y, dtype=float)

    def value(self, x):
        return np.ones_like(np.asarray(x, dtype=float))


class GaussDensity:
    """1/((1+x) ln 2) with F(x) = log2(1+x)."""

    min_value = 1 / (2 * math.log(2))

    def cdf(self, x):
        return np.log2(1.0 + np.asarray(x, dtype=float))

    def inverse_cdf(self, y):
        return np.exp2(np.asarray(y, dtype=float)) - 1.0

    def value(self, x):
        return 1.0 / ((1.0 + np.asarray(x, dtype=float)) * math.log(2))


@dataclass
class InvariantDensity:
    """Piecewise-constant density on ``bins`` equal bins of [0, 1]."""

    bins: int
    values: np.ndarray
    l1_residual: float
    iterations: int
    converged: bool
    tail_mass: float = 0.0

    def __post_init__(self):
        self._edges = np.linspace(0.0, 1.0, self.bins + 1)
        self._cum = np.concatenate([[0.0], np.cumsum(self.values) / self.bins])

    @property
    def min_value(self) -> float:
        return float(np.min(self.values))

    def integral(self) -> float:
        return float(np.sum(self.values) / self.bins)

    def value(self, x):
        i = np.clip((np.asarray(x, dtype=float) * self.bins).astype(int), 0, self.bins - 1)
        return self.values[i]

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        i = np.clip((x * self.bins).astype(int), 0, self.bins - 1)
        return self._cum[i] + self.values[i] * (x - self._edges[i])

    def inverse_cdf(self, y):
        y = np.asarray(y, dtype=float)
        i = np.clip(np.searchsorted(self._cum, y, side="right") - 1, 0, self.bins - 1)
        return self._edges[i] + (y - self._cum[i]) / self.values[i]

    def l1_distance(self, density: Callable, sub: int = 64) -> float:
        """L1 distance to a reference density, midpoint rule with ``sub`` points per bin."""
        x = (np.arange(self.bins * sub) + 0.5) / (self.bins * sub)
        return float(np.mean(np.abs(self.value(x) - density(x))))

    def to_dict(self) -> dict:
        return {"bins": self.bins, "values": self.values.tolist(), "l1_residual": self.l1_residual,
                "iterations": self.iterations, "converged": self.converged, "tail_mass": self.tail_mass}


def _accumulate_overlaps(P, lo, hi, targets, N):
    """Add |[lo, hi] cap B_i| to P[i, target] for every source bin i."""
    i0 = np.clip(np.floor(lo * N).astype(np.int64), 0, N - 1)
    i1 = np.clip(np.floor(hi * N).astype(np.int64), 0, N - 1)
    for off in range(int(np.max(i1 - i0)) + 1):
        i = i0 + off
        m = i <= i1
        if not m.any():
            break
        ii = i[m]
        ov = np.minimum(hi[m], (ii + 1) / N) - np.maximum(lo[m], ii / N)
        np.add.at(P, (ii, targets[m]), np.maximum(ov, 0.0))


def transfer_matrix(scheme: ExpansionScheme, bins: int, branch_cap: int | None = None, chunk: int = 256):
    """Row-stochastic Ulam matrix P[i, j] = |B_i cap T^{-1} B_j| / |B_i|, plus the capped tail mass.

    Preimages are exact images of bin edges under the inverse branches
    y -> f(a + y).  For infinite M the x-region of branches beyond the cap is
    sent uniformly to all bins, which keeps every row stochastic.
    """
    N = bins
    P = np.zeros((N, N))
    y = np.linspace(0.0, 1.0, N + 1)
    digits = scheme.alphabet(cap=branch_cap if branch_cap is not None else scheme.branch_cap)
    targets_row = np.arange(N)
    for start in range(0, len(digits), chunk):
        a = np.array(digits[start:start + chunk], dtype=float)[:, None]
        X = np.asarray(scheme.f(a + y[None, :]), dtype=float)
        lo = np.minimum(X[:, :-1], X[:, 1:]).ravel()
        hi = np.maximum(X[:, :-1], X[:, 1:]).ravel()
        tg = np.broadcast_to(targets_row, (a.shape[0], N)).ravel()
        _accumulate_overlaps(P, lo, hi, tg, N)
    tail = 0.0
    if not scheme.finite:
        edge = float(scheme.f(digits[-1] + 1.0))
        lo_r, hi_r = (0.0, edge) if scheme.direction == "decreasing" else (edge, 1.0)
        tail = hi_r - lo_r
        src = np.arange(N)
        ov = np.maximum(np.minimum(hi_r, (src + 1) / N) - np.maximum(lo_r, src / N), 0.0)
        P += ov[:, None] / N
    P *= N
    return P, tail


def ulam_invariant_density(scheme: ExpansionScheme, bins: int = 512, max_iters: int = 10_000, tol: float = 1e-12,
                           branch_cap: int | None = None, strict: bool = False) -> InvariantDensity:
    """Fixed density of the Ulam discretisation by power iteration.

    Returns the last iterate with ``converged=False`` when ``max_iters`` is
    hit; with ``strict=True`` raises :class:`NotConverged` instead.
    """
    if bins < 16:
        raise DomainError("need at least 16 bins")
    P, tail = transfer_matrix(scheme, bins, branch_cap)
    v = np.full(bins, 1.0 / bins)
    resid, it = math.inf, 0
    for it in range(1, max_iters + 1):
        w = v @ P
        w /= w.sum()
        resid = float(np.abs(w - v).sum())
        v = w
        if resid < tol:
            break
    dens = InvariantDensity(bins, v * bins, resid, it, resid < tol, tail)
    if strict and not dens.converged:
        raise NotConverged(f"Ulam iteration stopped at residual {resid:.3g}", density=dens.to_dict())
    return dens


# ---------------------------------------------------- conjugated map and test


def _check_density(density):
    if density.min_value <= 0:
        raise DensityNotPositive("the density must be strictly positive to invert F")


def conjugated_map_S(scheme: ExpansionScheme, density, x):
    """S = F o T o F^{-1}, with F the cumulative of ``density``."""
    _check_density(density)
    return density.cdf(t_map_array(scheme, density.inverse_cdf(x)))


def markov_obstruction_defect(scheme: ExpansionScheme, density, a: int, probes: int = 33) -> float:
    """Nonlinearity of S on F(branch a): max residual of the best affine fit.

    The residual is divided by the length of the branch image under S; it is
    zero exactly when S is affine there at the probed resolution.
    """
    if probes < 3:
        raise DomainError("need at least 3 probes")
    if not scheme.in_alphabet(a):
        raise BranchOutOfRange(f"{a} is not a digit of {scheme.name}")
    _check_density(density)
    lo, hi = scheme.branch_interval(a)
    f_lo, f_hi = float(density.cdf(float(lo))), float(density.cdf(float(hi)))
    # cell midpoints of an even partition of F(branch a)
    xs = f_lo + (f_hi - f_lo) * (np.arange(probes) + 0.5) / probes
    xb = density.inverse_cdf(xs)
    # the branch formula keeps probes on the right sheet near the endpoints
    s_vals = density.cdf(scheme.branch_T(a, xb))
    img = abs(float(density.cdf(float(scheme.branch_T(a, float(hi)))))
              - float(density.cdf(float(scheme.branch_T(a, float(lo))))))
    coef = np.polyfit(xs, s_vals, 1)
    resid = s_vals - np.polyval(coef, xs)
    return float(np.max(np.abs(resid)) / img)
