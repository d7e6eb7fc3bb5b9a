import itertools
import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import chisquare

from cfdim.cf_core import cylinder
from cfdim.errors import DomainError
from cfdim.gauss_measure import (
    find_markov_witness,
    log_mu_g_cylinder,
    markov_defect,
    mu_g_cylinder,
    mu_g_interval,
    quasi_independence_ratio,
    sample_mu_g_digits,
    sample_mu_g_digits_exact,
)

LN2 = math.log(2)


def quad_mass(lo, hi):
    """Independent oracle: numerical integral of the density."""
    with mpmath.workdps(30):
        return float(mpmath.quad(lambda t: 1 / ((1 + t) * mpmath.log(2)), [float(lo), float(hi)]))


def test_interval_examples():
    assert mu_g_interval(0, 1) == pytest.approx(1, abs=1e-15)
    assert mu_g_interval(Fraction(1, 2), 1) == pytest.approx(0.4150375, abs=1e-7)
    assert mu_g_interval(Fraction(1, 3), Fraction(1, 3)) == 0
    for lo, hi in ((-0.1, 0.5), (0.6, 0.5), (0.2, 1.1)):
        with pytest.raises(DomainError):
            mu_g_interval(lo, hi)


def test_cylinder_examples():
    assert mu_g_cylinder([]) == 1
    assert mu_g_cylinder([1]) == pytest.approx(math.log(4 / 3) / LN2, abs=1e-15)
    assert mu_g_cylinder([1, 1]) == pytest.approx(math.log(10 / 9) / LN2, abs=1e-15)
    assert mu_g_cylinder([1, 1]) == pytest.approx(0.1520031, abs=1e-7)
    assert mu_g_cylinder([2]) == pytest.approx(math.log(9 / 8) / LN2, abs=1e-15)


@pytest.mark.parametrize("w", [[1], [2], [1, 1], [3, 1, 4], [1, 5, 9, 2]])
def test_cylinder_matches_quadrature(w):
    c = cylinder(w)
    assert mu_g_cylinder(w) == pytest.approx(quad_mass(c.low, c.high), rel=1e-12)


def test_high_precision_mode():
    v = mu_g_cylinder([1, 1], prec=256)
    with mpmath.workprec(256):
        assert abs(v - mpmath.log(mpmath.mpf(10) / 9) / mpmath.log(2)) < mpmath.mpf(2) ** -240


@given(st.lists(st.integers(1, 50), min_size=1, max_size=30))
def test_log_mass_stable(w):
    assert log_mu_g_cylinder(w) == pytest.approx(math.log(float(mu_g_cylinder(w, prec=200))), abs=1e-10)


@given(st.fractions(0, 1), st.fractions(0, 1), st.fractions(0, 1))
def test_additivity(a, b, c):
    u, v, w = sorted((a, b, c))
    assert mu_g_interval(u, v) + mu_g_interval(v, w) == pytest.approx(mu_g_interval(u, w), abs=1e-15)


@given(st.fractions(0, 1), st.fractions(0, 1))
def test_density_bounds(a, b):
    lo, hi = min(a, b), max(a, b)
    if hi - lo < Fraction(1, 10**12):
        return
    ratio = mu_g_interval(lo, hi) / float(hi - lo)
    assert 1 / (2 * LN2) - 1e-9 <= ratio <= 1 / LN2 + 1e-9


@given(st.lists(st.integers(1, 9), max_size=6), st.sampled_from([10, 100, 1000]))
def test_digit_split_additivity(w, C):
    total = math.fsum(mu_g_cylinder(list(w) + [c]) for c in range(1, C + 1))
    parent = mu_g_cylinder(w)
    assert parent * (1 - 2 / C) <= total <= parent * (1 + 1e-12)


@given(st.lists(st.integers(1, 9), min_size=1, max_size=5))
def test_shift_invariance(w):
    # sum_{c<=C} mu(I_cw) plus the mass of the omitted sliver below 1/(C+1)
    C = 2000
    total = math.fsum(mu_g_cylinder([c] + list(w)) for c in range(1, C + 1))
    tail = mu_g_interval(0, Fraction(1, C + 1))
    assert total <= mu_g_cylinder(w) + 1e-12
    assert mu_g_cylinder(w) - total <= tail


def test_sampler_first_digit_chi_square():
    d = sample_mu_g_digits(1, 2024, 1_000_000)[:, 0]
    counts = np.array([np.sum(d == c) for c in range(1, 9)] + [np.sum(d > 8)])
    probs = np.array([mu_g_cylinder([c]) for c in range(1, 9)])
    probs = np.append(probs, 1 - probs.sum())
    assert chisquare(counts, probs * len(d)).pvalue > 0.001
    n = len(d)
    for c, target in ((1, 0.4150375), (2, 0.1699250)):
        p = counts[c - 1] / n
        assert abs(p - target) <= 3 * math.sqrt(target * (1 - target) / n)


def test_sampler_second_digit(seed):
    paths = sample_mu_g_digits(2, seed, 200_000)
    p = float(np.mean((paths[:, 0] == 1) & (paths[:, 1] == 1)))
    t = mu_g_cylinder([1, 1])
    assert abs(p - t) <= 4 * math.sqrt(t * (1 - t) / 200_000)


def test_fast_sampler_matches_exact_reference(seed):
    rng = np.random.default_rng(seed)
    u = rng.random((20, 30))
    from cfdim.kernel import sample_gauss_block

    fast = sample_gauss_block(u)
    for row in range(20):
        assert list(sample_mu_g_digits_exact(u[row])) == fast[row].tolist()


def test_sampler_boundary_uniforms():
    # u next to the boundary P(next >= 2) = mu_G(0, 1/2); within an ulp floats cannot decide
    from cfdim.kernel import sample_gauss_block

    b = math.log2(1.5)
    us = [b - 1e-12, b + 1e-12, 1.0]
    out = sample_gauss_block(np.array([[u] for u in us] + [[1e-300]]))[:, 0]
    assert out[:3].tolist() == [sample_mu_g_digits_exact([u])[0] for u in us] == [2, 1, 1]
    # int64 storage saturates digits near 1e18 (probability < 1e-18 per draw)
    assert out[3] >= 10**17


def test_sampler_workers_invariant():
    assert np.array_equal(sample_mu_g_digits(30, 5, 5000, 1), sample_mu_g_digits(30, 5, 5000, 4))


def test_quasi_independence_examples():
    assert quasi_independence_ratio([1], [1]) == pytest.approx(0.1520031 / 0.4150375**2, rel=1e-6)
    # I_12 = (2/3, 3/4)
    m12 = math.log2((1 + 3 / 4) / (1 + 2 / 3))
    assert quasi_independence_ratio([1], [2]) == pytest.approx(m12 / (mu_g_cylinder([1]) * mu_g_cylinder([2])), rel=1e-12)


def test_quasi_independence_scan():
    words = [w for m in range(1, 4) for w in itertools.product(range(1, 9), repeat=m)]
    words = words[:: max(1, len(words) // 120)]
    vals = [quasi_independence_ratio(u, v) for u in words for v in words]
    assert 0.3 < min(vals) and max(vals) < 3.5


@given(st.lists(st.integers(1, 8), min_size=1, max_size=6), st.lists(st.integers(1, 8), min_size=1, max_size=6))
def test_quasi_independence_bounded(u, v):
    assert 0.3 < quasi_independence_ratio(u, v) < 3.5


def test_markov_defect_examples():
    w = markov_defect([1], [], 1)
    with mpmath.workprec(200):
        m1 = mpmath.log(mpmath.mpf(4) / 3) / mpmath.log(2)
        m11 = mpmath.log(mpmath.mpf(10) / 9) / mpmath.log(2)
        oracle = float(abs(m11 - m1 * m1))
    assert w.defect == pytest.approx(oracle, abs=1e-15)
    assert abs(w.defect - 0.0202526) < 1e-6
    w2 = markov_defect([1], [], 2)
    assert w2.defect == pytest.approx(abs(mu_g_cylinder([1, 2]) - mu_g_cylinder([1]) * mu_g_cylinder([2])), abs=1e-15)
    w3 = markov_defect([2, 1], [2, 1], 3)
    assert w3.defect >= 0 and math.isfinite(w3.defect)


@given(st.lists(st.integers(1, 6), min_size=1, max_size=3), st.lists(st.integers(1, 6), max_size=3), st.integers(1, 6))
def test_defect_recomputable(b, a, c):
    w = markov_defect(b, a, c)
    expect = abs(mu_g_cylinder(b + a + [c]) - mu_g_cylinder(a + [c]) * mu_g_cylinder(b + a) / mu_g_cylinder(a))
    assert w.defect == pytest.approx(expect, abs=1e-14)
    assert w.to_dict()["defect"] == w.defect


def test_witness_examples():
    w = find_markov_witness(0, 2, 1)
    assert (list(w.b), list(w.a), w.c) == ([1], [], 1)
    assert w.defect == pytest.approx(markov_defect([1], [], 1).defect, abs=0)
    assert find_markov_witness(1, 3, 2).defect > 1e-4
    assert find_markov_witness(0, 1, 1).defect > 0.02


@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_witness_exists_for_small_k(k):
    assert find_markov_witness(k, 2, 1).defect > 1e-10
