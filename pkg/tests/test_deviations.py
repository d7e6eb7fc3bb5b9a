import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import binom

from cfdim.cf_core import cylinder, gauss_map
from cfdim.deviations import (
    DecayFit,
    DeviationSeries,
    SubsequenceSpec,
    decay_rate_fit,
    deviation_probability_mc,
    deviation_series,
    frequency_average,
    frequency_averages,
    gamma_mass_empirical,
)
from cfdim.digit_process import DigitLaw, GaussSpec, IIDSpec
from cfdim.errors import ConfigError, InsufficientData, PathTooShort
from cfdim.gauss_measure import mu_g_cylinder

ID = SubsequenceSpec.identity()


def test_subsequence_specs():
    assert ID.positions(4).tolist() == [1, 2, 3, 4] and ID.l_witness == 2
    a3 = SubsequenceSpec.arithmetic(3)
    assert a3.positions(3).tolist() == [3, 6, 9] and a3.l_witness == 4
    ex = SubsequenceSpec.explicit([1, 3, 4])
    assert ex.positions(3).tolist() == [1, 3, 4]
    assert SubsequenceSpec.parse("arith:2") == SubsequenceSpec.arithmetic(2)
    assert SubsequenceSpec.from_dict(ex.to_dict()) == ex
    with pytest.raises(ConfigError):
        SubsequenceSpec.explicit([2, 2])
    with pytest.raises(ConfigError):
        SubsequenceSpec("identity", l_witness=0.5)


@given(st.integers(1, 7), st.integers(1, 50))
def test_arithmetic_strictly_increasing(c, n):
    pos = SubsequenceSpec.arithmetic(c).positions(n)
    assert np.all(np.diff(pos) > 0) and np.all(pos == c * np.arange(1, n + 1))


def test_frequency_examples():
    ones = [1] * 60
    assert frequency_average(ones, [1], ID, 50) == 1
    assert frequency_average(ones, [2], ID, 50) == 0
    alt = [1, 2] * 10
    # positions q(i) = 1..4 read digit pairs starting at digits 2..5: matches at 3 and 5
    assert frequency_average(alt, [1, 2], ID, 4) == 0.5
    with pytest.raises(PathTooShort):
        frequency_average([1, 1, 1], [1], ID, 3)


@given(st.lists(st.integers(1, 3), min_size=1, max_size=2), st.integers(1, 3), st.data())
def test_resource_contract(a, c, data):
    n = data.draw(st.integers(1, 15))
    q = SubsequenceSpec.arithmetic(c)
    need = c * n + len(a)
    path = data.draw(st.lists(st.integers(1, 3), min_size=need, max_size=need))
    v = frequency_average(path, a, q, n)
    assert frequency_average(path + [9] * 5, a, q, n) == v
    with pytest.raises(PathTooShort):
        frequency_average(path[:-1], a, q, n)


@given(st.lists(st.integers(1, 4), min_size=25, max_size=25), st.lists(st.integers(1, 2), min_size=1, max_size=2),
       st.integers(1, 20))
def test_symbolic_matches_gauss_orbit(path, a, n):
    # orbit of the exact midpoint of the path's cylinder
    x = cylinder(path).midpoint
    hits = 0
    orbit = [x]
    for _ in range(n + 1):
        orbit.append(gauss_map(orbit[-1]))
    for i in range(1, n + 1):
        y = orbit[i]
        ok = True
        for digit in a:
            if y == 0 or math.floor(1 / y) != digit:
                ok = False
                break
            y = 1 / y - math.floor(1 / y)
        hits += ok
    assert frequency_average(path, a, ID, n) == pytest.approx(hits / n, abs=1e-15)


def test_probability_examples():
    p, _ = deviation_probability_mc([1], ID, 0.7, 20, 2000, 1)
    assert p == 0
    p, se = deviation_probability_mc([1], ID, 0.0, 10, 2000, 1)
    assert p == 1 and se == 0


def test_probability_monotone_in_delta(seed):
    ps = [deviation_probability_mc([1], ID, d, 30, 5000, seed)[0] for d in (0.05, 0.1, 0.15, 0.2, 0.3)]
    assert all(b <= a for a, b in zip(ps, ps[1:]))


def test_series_matches_single_probability():
    s = deviation_series([1], ID, 0.2, [10, 25], 3000, 4)
    p, _ = deviation_probability_mc([1], ID, 0.2, 25, 3000, 4)
    assert s.entries[1][1] == p


def test_series_serialisation():
    s = deviation_series([1], SubsequenceSpec.arithmetic(2), 0.2, [10, 25, 50], 2000, 4)
    back = DeviationSeries.from_json(s.to_json())
    assert back.entries == [tuple(e) for e in s.entries] and back.q == s.q
    lines = s.to_csv().strip().splitlines()
    assert lines[0] == "n,estimate,stderr,samples" and len(lines) == 4
    assert all(0 <= e[1] <= 1 for e in s.entries)


def test_decay_fit_synthetic():
    ns = [10, 20, 30, 40, 50]
    s = DeviationSeries([1], 0.2, ID, [(n, math.exp(-n / 7), 0.0, 0) for n in ns])
    fit = decay_rate_fit(s)
    assert fit.slope == pytest.approx(-1 / 7, abs=1e-9) and fit.r_squared > 0.999999
    assert isinstance(fit, DecayFit) and fit.fit_range == (10, 50)
    zero = DeviationSeries([1], 0.2, ID, [(n, 0.0, 0.0, 1000) for n in ns])
    with pytest.raises(InsufficientData):
        decay_rate_fit(zero)


def test_decay_fit_ignores_low_hit_entries():
    s = DeviationSeries([1], 0.2, ID, [(10, 0.2, 0, 1000), (20, 0.05, 0, 1000), (30, 0.01, 0, 1000),
                                       (40, 0.005, 0, 1000), (50, 0.001, 0, 1000)])
    # 0.005 and 0.001 of 1000 samples are 5 and 1 hits, below the 10-hit floor
    fit = decay_rate_fit(s)
    assert fit.points == 3 and fit.fit_range == (10, 30)


@pytest.mark.parametrize("q", [SubsequenceSpec.identity(), SubsequenceSpec.arithmetic(2)])
def test_decay_shape(q):
    s = deviation_series([1], q, 0.2, [10, 25, 50, 100, 200], 100_000, 42)
    fit = decay_rate_fit(s)
    assert fit.slope < 0 and fit.r_squared > 0.9
    assert s.entries[-1][1] < s.entries[0][1] / 10


def test_gamma_mass_examples(seed):
    assert gamma_mass_empirical(GaussSpec(), [1], ID, 0.2, 200, 3000, seed) < 0.05
    point = IIDSpec.identical(DigitLaw.point_mass(1))
    assert gamma_mass_empirical(point, [1], ID, 0.2, 50, 100, seed) == 1
    uni = IIDSpec.identical(DigitLaw.uniform([1, 2]))
    # exact binomial oracle: the average of 400 fair bits leaves (mu - 0.05, mu + 0.05)
    mu = mu_g_cylinder([1])
    k = np.arange(401)
    exact = float(binom.pmf(k, 400, 0.5)[np.abs(k / 400 - mu) > 0.05].sum())
    got = gamma_mass_empirical(uni, [1], ID, 0.05, 400, 2000, seed)
    assert abs(got - exact) <= 4 * math.sqrt(exact * (1 - exact) / 2000)
    assert gamma_mass_empirical(uni, [1], ID, 0.05, 1600, 2000, seed) >= 0.99


def test_frequency_vectorised_matches_scalar(seed):
    rng = np.random.default_rng(seed)
    paths = rng.integers(1, 4, size=(20, 40))
    v = frequency_averages(paths, [1, 2], SubsequenceSpec.arithmetic(2), 15)
    for i in range(20):
        assert v[i] == frequency_average(paths[i].tolist(), [1, 2], SubsequenceSpec.arithmetic(2), 15)
