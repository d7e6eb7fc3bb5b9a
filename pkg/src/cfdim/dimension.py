"""Entropy, Lyapunov exponent and dimension of digit measures.

All logarithms are natural, so entropies and Lyapunov exponents are in nats
and their ratio is base-free.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .digit_process import (
    DigitLaw,
    GaussMarkovSpec,
    GaussSpec,
    IIDSpec,
    ProcessSpec,
    build_gauss_markov,
    log_process_masses,
    sample_paths,
)
from .errors import DomainError, InfiniteEntropy, InfiniteLogMoment, ZeroMassEncountered
from .gauss_measure import sample_mu_g_digits
from .kernel import log1p_ratio, birkhoff_log_orbit, log_cylinder_lengths, state_of_words
from .streams import mean_and_stderr

GAUSS_LYAPUNOV = math.pi**2 / (6 * math.log(2))
# h(mu_G) = gamma(mu_G) since mu_G has dimension 1
GAUSS_ENTROPY = GAUSS_LYAPUNOV


@dataclass
class DimensionEstimate:
    entropy: float
    lyapunov: float
    dim: float
    stderr_h: float
    stderr_gamma: float
    method: str
    samples: int = 0
    n: int = 0

    @property
    def dim_stderr(self) -> float:
        g = self.lyapunov
        return self.stderr_h / g + self.stderr_gamma * self.entropy / g**2

    def to_dict(self) -> dict:
        out = asdict(self)
        out["dim_stderr"] = self.dim_stderr
        return out


@dataclass
class EntropyResult:
    h: float
    stderr: float
    tail_bound: float
    samples: int
    cap: int

    @property
    def uncertainty(self) -> float:
        return self.stderr + self.tail_bound


@dataclass
class LyapunovResult:
    gamma: float
    stderr: float
    gamma_birkhoff: float
    stderr_birkhoff: float
    n: int
    samples: int

    @property
    def agree(self) -> bool:
        # the two estimators differ exactly by ln(1 + q_{n-1}/q_n)/n <= ln 2 / n
        joint = math.hypot(self.stderr, self.stderr_birkhoff)
        return abs(self.gamma - self.gamma_birkhoff) <= 3 * joint + math.log(2) / self.n


def lyapunov_gauss_exact() -> float:
    return GAUSS_LYAPUNOV


def sample_source(spec, n, samples, seed, workers):
    if isinstance(spec, GaussSpec):
        return sample_mu_g_digits(n, seed, samples, workers)
    return sample_paths(spec, n, samples, seed, workers)


def lyapunov_mc(spec: ProcessSpec, n: int, samples: int, seed: int, workers: int = 1) -> LyapunovResult:
    """Cylinder-length and Birkhoff estimates of -2 E[ln x] along sampled paths."""
    if n < 100:
        raise DomainError("lyapunov_mc needs n >= 100")
    paths = sample_source(spec, n, samples, seed, workers)
    g1, s1 = mean_and_stderr(-log_cylinder_lengths(paths) / n)
    g2, s2 = mean_and_stderr(birkhoff_log_orbit(paths) / n)
    return LyapunovResult(g1, s1, g2, s2, n, samples)


def entropy_smb_mc(spec: ProcessSpec, n: int, samples: int, seed: int, workers: int = 1) -> tuple[float, float]:
    """Shannon-McMillan-Breiman estimate -(1/n) ln nu(J_n) averaged over sampled paths."""
    paths = sample_source(spec, n, samples, seed, workers)
    logm = log_process_masses(spec, paths)
    if not np.isfinite(logm).all():
        raise ZeroMassEncountered("a sampled path has zero mass under its own process")
    return mean_and_stderr(-logm / n)


def local_dimension(spec: ProcessSpec, n: int, samples: int, seed: int, workers: int = 1) -> tuple[float, float]:
    """Pointwise estimate ln nu(J_n) / ln |J_n| averaged over sampled paths."""
    paths = sample_source(spec, n, samples, seed, workers)
    logm = log_process_masses(spec, paths)
    if not np.isfinite(logm).all():
        raise ZeroMassEncountered("a sampled path has zero mass under its own process")
    return mean_and_stderr(logm / log_cylinder_lengths(paths))


def _conditional_entropy_block(states_words: np.ndarray, cap: int, chunk: int = 64):
    """Truncated inner entropies and their tail bounds, one per state row."""
    st = state_of_words(states_words)
    rows = states_words.shape[0]
    h = np.empty(rows)
    c = np.arange(1, cap + 1, dtype=float)[None, :]
    for start in range(0, rows, chunk):
        sl = slice(start, start + chunk)
        s, r, d = st.s[sl, None], st.r[sl, None], st.d[sl, None]
        g1 = log1p_ratio(d[:, 0], 1.0 / (1.0 + s[:, 0]))[:, None]
        p = log1p_ratio(d, 1.0 / ((c + s) * (c + 1.0 + r))) / g1
        h[sl] = -np.sum(p * np.log(p), axis=1)
    # p_c <= kappa / c**2 with kappa = 1/G(1); -p ln p is increasing below 1/e
    kappa = 1.0 / st.total()
    tail = kappa * (2.0 * np.log(cap) + 2.0 - np.log(kappa)) / cap
    return h, tail


def entropy_gauss_markov(k: int, outer_samples: int, cap: int, seed: int, workers: int = 1) -> EntropyResult:
    """h(nu_k) = -sum_a p_a sum_c p_{a,c} ln p_{a,c}.

    The outer expectation over states a ~ mu_G(I_a) is Monte Carlo; the inner
    sum over c <= cap is exact and the omitted c > cap are covered by a
    reported upper bound, never added silently.
    """
    if k < 1:
        raise DomainError("k must be >= 1")
    if cap < 16:
        raise DomainError("cap must be >= 16")
    states = sample_mu_g_digits(k, seed, outer_samples, workers)
    h, tail = _conditional_entropy_block(states, cap)
    mean, se = mean_and_stderr(h)
    return EntropyResult(mean, se, float(np.mean(tail)), outer_samples, cap)


def _law_log_moment(law: DigitLaw) -> float:
    c = np.arange(1, law.cap + 1)
    m = float(np.sum(np.asarray(law.masses) * np.log(c)))
    t = law.tail_mass
    if t > 0:
        # E[ln(D + 1 + J)] for geometric J, summed until the terms vanish
        j = np.arange(0, 20000)
        w = (1 - law.theta) * law.theta ** j
        m += t * float(np.sum(w * np.log(law.cap + 1 + j)))
    return m


def kinney_pitcher_dim(law: DigitLaw, n: int, samples: int, seed: int, workers: int = 1) -> DimensionEstimate:
    """H(A_1) / (-integral of ln x^2) for i.i.d. digits with law ``law``."""
    h = law.entropy()
    if not math.isfinite(h):
        raise InfiniteEntropy("digit law has infinite entropy")
    if not math.isfinite(_law_log_moment(law)):
        raise InfiniteLogMoment("digit law has infinite log moment")
    spec = IIDSpec.identical(law)
    paths = sample_paths(spec, n, samples, seed, workers)
    gamma, se = mean_and_stderr(birkhoff_log_orbit(paths) / n)
    if gamma <= 0:
        raise DomainError("degenerate Lyapunov estimate")
    return DimensionEstimate(h, gamma, h / gamma, 0.0, se, "kinney_pitcher", samples, n)


@dataclass
class GapBudgets:
    outer_samples: int = 10_000
    cap: int = 10_000
    lyap_n: int = 2000
    lyap_samples: int = 300


@dataclass
class GapReport:
    k: int
    dim_estimate: float
    dim_stderr: float
    bound: float
    entropy: float
    entropy_uncertainty: float
    entropy_check: bool
    lyapunov: float
    lyapunov_stderr: float
    lyapunov_gap: float
    lyapunov_gap_bound: float
    dim_check: bool = False
    lyapunov_check: bool = False
    passed: bool = field(default=False)

    def to_dict(self) -> dict:
        return asdict(self)


def gap_bound(k: int) -> float:
    """1 - 2**(3-k), clamped at 0 below k = 3."""
    return max(0.0, 1.0 - 2.0 ** (3 - k))


def verify_gap_bound(k: int, budgets: GapBudgets | None = None, seed: int = 0, workers: int = 1) -> GapReport:
    budgets = budgets or GapBudgets()
    ent = entropy_gauss_markov(k, budgets.outer_samples, budgets.cap, seed, workers)
    lyap = lyapunov_mc(build_gauss_markov(k), budgets.lyap_n, budgets.lyap_samples, seed + 1, workers)
    h, sh = ent.h, ent.uncertainty
    g, sg = lyap.gamma, lyap.stderr
    est = DimensionEstimate(h, g, h / g, sh, sg, "series", budgets.outer_samples, budgets.lyap_n)
    bound = gap_bound(k)
    gap = abs(g - GAUSS_LYAPUNOV)
    report = GapReport(
        k=k,
        dim_estimate=est.dim,
        dim_stderr=est.dim_stderr,
        bound=bound,
        entropy=h,
        entropy_uncertainty=sh,
        entropy_check=h >= GAUSS_ENTROPY - 3 * sh,
        lyapunov=g,
        lyapunov_stderr=sg,
        lyapunov_gap=gap,
        lyapunov_gap_bound=2.0 ** (3 - k),
    )
    report.dim_check = est.dim >= bound - 3 * est.dim_stderr
    report.lyapunov_check = gap <= 2.0 ** (3 - k) + 3 * sg
    report.passed = report.dim_check and report.entropy_check and report.lyapunov_check
    return report
