import math

import mpmath
import numpy as np
import pytest

from cfdim.digit_process import DigitLaw, GaussSpec, IIDSpec, build_gauss_markov
from cfdim.dimension import (
    GAUSS_ENTROPY,
    DimensionEstimate,
    GapBudgets,
    entropy_gauss_markov,
    entropy_smb_mc,
    gap_bound,
    kinney_pitcher_dim,
    local_dimension,
    lyapunov_gauss_exact,
    lyapunov_mc,
    verify_gap_bound,
)
from cfdim.errors import DomainError

# uniform{1,2}: Lyapunov exponent by exhaustive enumeration of all words of
# length 21 and 22 (difference of mean log cylinder lengths); dim = ln 2 / gamma
KP_GAMMA_ORACLE = 1.346022232
KP_DIM_ORACLE = 0.5149596820

SMALL = GapBudgets(outer_samples=3000, cap=2000, lyap_n=1000, lyap_samples=200)


def enumerated_gamma(n):
    q, qp = np.ones(1), np.zeros(1)
    means = []
    for _ in range(n + 1):
        q, qp = np.concatenate([q + qp, 2 * q + qp]), np.concatenate([q, q])
        means.append(float(np.mean(np.log(q * (q + qp)))))
    return means[-1] - means[-2]


def test_kp_oracle_is_live():
    assert enumerated_gamma(14) == pytest.approx(KP_GAMMA_ORACLE, abs=1e-7)


def test_gauss_exact():
    g = lyapunov_gauss_exact()
    assert abs(g - 2.3731382) < 1e-6 and g > 2
    with mpmath.workdps(30):
        quad = -2 * mpmath.quad(lambda x: mpmath.log(x) / ((1 + x) * mpmath.log(2)), [0, 1])
    assert abs(g - float(quad)) < 1e-8


def test_lyapunov_gauss_mc(seed):
    r = lyapunov_mc(GaussSpec(), 2000, 500, seed)
    assert abs(r.gamma - 2.3731) <= 0.01 * 2.3731
    assert r.agree


@pytest.mark.parametrize("digit,target", [(1, 2 * math.log((1 + math.sqrt(5)) / 2)), (2, 2 * math.log(1 + math.sqrt(2)))])
def test_lyapunov_constant_digits(digit, target):
    r = lyapunov_mc(IIDSpec.identical(DigitLaw.point_mass(digit)), 2000, 3, 0)
    assert r.gamma == pytest.approx(target, abs=1e-3)
    assert r.gamma_birkhoff == pytest.approx(target, abs=1e-3)
    assert r.stderr < 1e-12


def test_lyapunov_requires_long_paths():
    with pytest.raises(DomainError):
        lyapunov_mc(GaussSpec(), 50, 10, 0)


def test_entropy_series_k1():
    r = entropy_gauss_markov(1, 10_000, 10_000, 5)
    assert 2.373 - 3 * r.uncertainty <= r.h <= 2.873
    assert r.tail_bound > 0


def test_entropy_lower_bound_and_trend(seed):
    hs = [entropy_gauss_markov(k, 4000, 2000, seed + k) for k in range(1, 6)]
    for r in hs:
        assert r.h >= GAUSS_ENTROPY - 3 * r.uncertainty
    for a, b in zip(hs, hs[1:]):
        assert b.h <= a.h + 3 * math.hypot(a.uncertainty, b.uncertainty)
    assert abs(hs[4].h - hs[3].h) <= 3 * math.hypot(hs[3].uncertainty, hs[4].uncertainty)


def test_entropy_tail_bound_covers_truncation():
    coarse = entropy_gauss_markov(2, 500, 16, 3)
    fine = entropy_gauss_markov(2, 500, 100_000, 3)
    assert 0 <= fine.h - coarse.h <= coarse.tail_bound


def test_entropy_validation():
    with pytest.raises(DomainError):
        entropy_gauss_markov(0, 10, 100, 0)
    with pytest.raises(DomainError):
        entropy_gauss_markov(1, 10, 8, 0)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_smb_matches_series(k):
    h_mc, se = entropy_smb_mc(build_gauss_markov(k), 500, 200, 21)
    r = entropy_gauss_markov(k, 4000, 4000, 22)
    assert abs(h_mc - r.h) <= 3 * math.hypot(se, r.uncertainty)


def test_smb_examples(seed):
    h, _ = entropy_smb_mc(IIDSpec.identical(DigitLaw.uniform([1, 2])), 500, 200, seed)
    assert h == pytest.approx(math.log(2), rel=0.02)
    h, _ = entropy_smb_mc(GaussSpec(), 500, 200, seed)
    assert h == pytest.approx(2.3731, rel=0.02)


def test_kinney_pitcher(seed):
    est = kinney_pitcher_dim(DigitLaw.uniform([1, 2]), 2000, 500, seed)
    assert est.entropy == pytest.approx(math.log(2), abs=1e-15)
    assert abs(est.dim - KP_DIM_ORACLE) <= 0.02 * KP_DIM_ORACLE
    assert est.dim < 0.999
    assert abs(est.lyapunov - KP_GAMMA_ORACLE) <= 3 * est.stderr_gamma + 2 * math.log(2) / 2000


def test_kinney_pitcher_point_mass():
    est = kinney_pitcher_dim(DigitLaw.point_mass(1), 500, 5, 0)
    assert est.entropy == 0 and est.dim == 0


def test_local_dimension_examples(seed):
    d, _ = local_dimension(GaussSpec(), 1000, 200, seed)
    assert 0.98 <= d <= 1.02
    d0, _ = local_dimension(IIDSpec.identical(DigitLaw.point_mass(1)), 200, 3, seed)
    assert d0 == 0
    d_kp, se = local_dimension(IIDSpec.identical(DigitLaw.uniform([1, 2])), 3000, 100, seed)
    assert abs(d_kp - KP_DIM_ORACLE) <= 3 * se + 0.005


def test_local_dimension_matches_gap_report():
    rep = verify_gap_bound(4, SMALL, seed=8)
    d, se = local_dimension(build_gauss_markov(4), 1000, 200, 9)
    assert abs(d - rep.dim_estimate) <= 3 * math.hypot(se, rep.dim_stderr)


def test_gap_bound_values():
    assert gap_bound(3) == 0 and gap_bound(4) == 0.5 and gap_bound(5) == 0.75
    assert gap_bound(1) == 0 and gap_bound(2) == 0


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
def test_verify_gap_bound(k):
    rep = verify_gap_bound(k, SMALL, seed=k)
    assert rep.passed and rep.bound == gap_bound(k)
    assert rep.lyapunov_gap_bound == 2.0 ** (3 - k)
    assert set(rep.to_dict()) >= {"k", "dim_estimate", "bound", "entropy_check", "lyapunov_gap", "lyapunov_gap_bound"}


@pytest.mark.parametrize("k", [3, 4, 5, 6])
def test_lyapunov_sandwich(k):
    r = lyapunov_mc(build_gauss_markov(k), 1000, 200, 40 + k)
    assert abs(r.gamma - lyapunov_gauss_exact()) <= 2.0 ** (3 - k) + 3 * r.stderr


def test_dimension_estimate_bounded():
    for k in (1, 3):
        rep = verify_gap_bound(k, SMALL, seed=2)
        est = DimensionEstimate(rep.entropy, rep.lyapunov, rep.dim_estimate, rep.entropy_uncertainty,
                                rep.lyapunov_stderr, "series")
        assert est.entropy >= 0 and est.lyapunov > 0 and est.dim >= 0
        assert est.dim <= 1 + 3 * est.dim_stderr


def test_estimators_deterministic_across_workers():
    a = entropy_gauss_markov(3, 3000, 100, 4, workers=1)
    b = entropy_gauss_markov(3, 3000, 100, 4, workers=4)
    assert a == b
    assert lyapunov_mc(build_gauss_markov(2), 200, 2100, 4, 1) == lyapunov_mc(build_gauss_markov(2), 200, 2100, 4, 4)
