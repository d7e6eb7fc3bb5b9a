"""Acceptance checks as plain functions returning pass/fail rows.

Shared by ``cfdim repro all`` and ``tests/test_acceptance.py`` so the table
printed by either is computed by the same code.
"""

from __future__ import annotations

import itertools
import math
import os
import subprocess
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import mpmath
import numpy as np

from . import cf_core
from .digit_process import (
    DigitLaw,
    GaussSpec,
    IIDSpec,
    build_gauss_markov,
    process_cylinder_mass,
    sample_paths,
    stationarity_residual,
)
from .deviations import SubsequenceSpec, decay_rate_fit, deviation_series
from .dimension import (
    entropy_gauss_markov,
    entropy_smb_mc,
    kinney_pitcher_dim,
    local_dimension,
    lyapunov_mc,
    verify_gap_bound,
)
from .f_expansion import (
    GaussDensity,
    LebesgueDensity,
    base_scheme,
    cf_scheme,
    markov_obstruction_defect,
    ulam_invariant_density,
)
from .gauss_measure import find_markov_witness, markov_defect, mu_g_cylinder, sample_mu_g_digits

ANCHOR = 2.3731
DEFECT_VALUE = 0.0202526
DECAY_NS = (10, 25, 50, 100, 200)


@dataclass
class Row:
    criterion: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    @property
    def status(self) -> str:
        return "pass" if self.passed else "FAIL"

    def line(self) -> str:
        return f"[{self.status}] {self.criterion:>2} {self.name}: {self.detail} ({self.seconds:.1f}s)"

    def to_dict(self) -> dict:
        out = asdict(self)
        out["status"] = self.status
        return out


def gauss_anchor(seed: int, workers: int = 1) -> Row:
    ly = lyapunov_mc(GaussSpec(), 2000, 500, seed, workers)
    h, _ = entropy_smb_mc(GaussSpec(), 2000, 500, seed, workers)
    ok = abs(ly.gamma - ANCHOR) <= 0.01 * ANCHOR and abs(h - ANCHOR) <= 0.02 * ANCHOR
    return Row(1, "Gauss Lyapunov/entropy anchor", ok,
               f"gamma={ly.gamma:.5f}+-{ly.stderr:.5f} h_smb={h:.5f} target {ANCHOR}")


def gauss_dimension(seed: int, workers: int = 1) -> Row:
    d, se = local_dimension(GaussSpec(), 1000, 200, seed, workers)
    return Row(2, "dim mu_G = 1", 0.98 <= d <= 1.02, f"local dim={d:.5f}+-{se:.5f}")


def gap_bound_rows(seed: int, workers: int = 1) -> Row:
    parts, ok = [], True
    for k in (3, 4, 5):
        r = verify_gap_bound(k, seed=seed, workers=workers)
        ok &= r.passed
        parts.append(f"k={k}: dim={r.dim_estimate:.4f}>={r.bound:.3f} h={r.entropy:.4f} "
                     f"|dgamma|={r.lyapunov_gap:.4f}<={r.lyapunov_gap_bound:.3f} "
                     f"[{'ok' if r.passed else 'fail'}]")
    return Row(3, "gap bound k=3,4,5", ok, "; ".join(parts))


def _defect_oracle() -> mpmath.mpf:
    # |mu(I_11)/mu(I_1) - mu(I_1)| straight from cylinder endpoints
    with mpmath.workprec(200):
        def mu(w):
            lo, hi = cf_core.cylinder(w).low, cf_core.cylinder(w).high
            f = lambda t: mpmath.log(1 + mpmath.mpf(t.numerator) / t.denominator)  # noqa: E731
            return (f(hi) - f(lo)) / mpmath.log(2)
        return abs(mu([1, 1]) - mu([1]) * mu([1]))


def markov_defect_row(seed: int = 0, workers: int = 1) -> Row:
    w = markov_defect([1], [], 1)
    oracle = float(_defect_oracle())
    wit = find_markov_witness(0, 2, 1)
    ok = (abs(w.defect - oracle) <= 1e-6 and abs(w.defect - DEFECT_VALUE) <= 1e-6
          and list(wit.b) == [1] and list(wit.a) == [] and wit.c == 1)
    return Row(4, "Markov defect", ok,
               f"D={w.defect:.10f} oracle={oracle:.10f} witness b={list(wit.b)} c={wit.c}")


def stationarity_row(seed: int = 0, workers: int = 1) -> Row:
    worst, ok = 0.0, True
    for k in (1, 2):
        spec = build_gauss_markov(k)
        for d in (1, 2, 3):
            for b in itertools.product((1, 2), repeat=k - 1):
                res, bound = stationarity_residual(spec, list(b), d, 10_000)
                ok &= res <= bound and res < 1e-3
                worst = max(worst, res)
    return Row(5, "stationarity residual", ok, f"max residual={worst:.3e} (each below its tail bound)")


def chain_agreement_row(seed: int = 0, workers: int = 1) -> Row:
    max_err, witnesses, ok = 0.0, [], True
    for k in (1, 2, 3):
        spec = build_gauss_markov(k)
        for m in range(1, k + 2):
            for w in itertools.product(range(1, 6), repeat=m):
                max_err = max(max_err, abs(process_cylinder_mass(spec, w) - mu_g_cylinder(w)))
        deep = max((abs(process_cylinder_mass(spec, w) - mu_g_cylinder(w)), w)
                   for w in itertools.product(range(1, 4), repeat=k + 2))
        witnesses.append(f"k={k} {list(deep[1])}: {deep[0]:.2e}")
        ok &= deep[0] > 1e-6
    ok &= max_err <= 1e-12
    return Row(6, "chain/measure agreement", ok, f"max |w|<=k+1 error={max_err:.1e}; deeper " + ", ".join(witnesses))


def kinney_pitcher_row(seed: int, workers: int = 1) -> Row:
    law = DigitLaw.uniform([1, 2])
    est = kinney_pitcher_dim(law, 2000, 500, seed, workers)
    oracle, se = local_dimension(IIDSpec.identical(law), 5000, 100, seed + 7, workers)
    ok = abs(est.entropy - math.log(2)) <= 1e-15 and abs(est.dim - oracle) <= 0.02 * oracle and est.dim < 0.999
    return Row(7, "Kinney-Pitcher", ok, f"H={est.entropy:.15f} dim={est.dim:.5f} oracle={oracle:.5f}+-{se:.5f}")


def decay_row(seed: int, workers: int = 1) -> Row:
    ok, parts = True, []
    for name, q in (("identity", SubsequenceSpec.identity()), ("arith(2)", SubsequenceSpec.arithmetic(2))):
        s = deviation_series([1], q, 0.2, DECAY_NS, 100_000, seed, workers)
        p = [e[1] for e in s.entries]
        strict = all(b < a for a, b in zip(p, p[1:]))
        drop = p[-1] < p[0] / 10
        try:
            fit = decay_rate_fit(s)
            fit_ok, fit_txt = fit.slope < 0 and fit.r_squared > 0.9, f"slope={fit.slope:.4f} r2={fit.r_squared:.4f}"
        except Exception as exc:  # noqa: BLE001
            fit_ok, fit_txt = False, f"fit: {exc}"
        ok &= strict and drop and fit_ok
        parts.append(f"{name} P={[round(v, 6) for v in p]} strictly_decreasing={strict} "
                     f"P200<P10/10={drop} {fit_txt}")
    return Row(8, "large-deviation decay", ok, "; ".join(parts))


def ulam_row(seed: int = 0, workers: int = 1) -> Row:
    b2 = ulam_invariant_density(base_scheme(2), 256)
    dev2 = float(np.max(np.abs(b2.values - 1.0)))
    g = ulam_invariant_density(cf_scheme(), 512)
    l1 = g.l1_distance(GaussDensity().value)
    at0 = float(g.values[0])
    ok = dev2 <= 1e-8 and l1 < 0.05 and abs(at0 - 1 / math.log(2)) < 0.05
    return Row(9, "Ulam densities", ok, f"base-2 max|rho-1|={dev2:.1e} Gauss L1={l1:.2e} rho(0)={at0:.4f}")


def obstruction_row(seed: int = 0, workers: int = 1) -> Row:
    d_b2 = markov_obstruction_defect(base_scheme(2), LebesgueDensity(), 0)
    d_cf = markov_obstruction_defect(cf_scheme(), GaussDensity(), 1)
    d_ulam = markov_obstruction_defect(cf_scheme(), ulam_invariant_density(cf_scheme(), 512), 1)
    ok = d_b2 < 1e-6 and d_cf > 0.01 and d_ulam > 0.005
    return Row(10, "Markov obstruction", ok, f"base-2={d_b2:.1e} cf_exact={d_cf:.4f} cf_ulam={d_ulam:.4f}")


def _tests_dir() -> Path | None:
    for cand in (os.environ.get("CFDIM_TESTS"), Path.cwd() / "tests", Path(__file__).resolve().parents[2] / "tests"):
        if cand and Path(cand, "conftest.py").exists():
            return Path(cand)
    return None


def determinism_ok(seed: int) -> bool:
    a = sample_mu_g_digits(40, seed, 3000, workers=1)
    b = sample_mu_g_digits(40, seed, 3000, workers=4)
    spec = build_gauss_markov(2)
    c = sample_paths(spec, 40, 3000, seed, workers=1)
    d = sample_paths(spec, 40, 3000, seed, workers=4)
    e1 = entropy_gauss_markov(2, 3000, 64, seed, workers=1)
    e4 = entropy_gauss_markov(2, 3000, 64, seed, workers=4)
    return np.array_equal(a, b) and np.array_equal(c, d) and e1 == e4


def property_suite_row(seed: int = 0, workers: int = 1, run_suite: bool = True) -> Row:
    det = all(determinism_ok(s) for s in (1, 42, 1337))
    detail = f"workers 1 vs 4 identical={det}"
    ok = det
    tests = _tests_dir()
    if run_suite:
        if tests is None:
            ok, detail = False, detail + "; property suite not found (set CFDIM_TESTS)"
        else:
            cmd = [sys.executable, "-m", "pytest", str(tests), "-q", "-p", "no:cacheprovider",
                   "--ignore", str(tests / "test_acceptance.py")]
            proc = subprocess.run(cmd, capture_output=True, text=True, cwd=tests.parent)
            tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
            ok &= proc.returncode == 0
            detail += f"; property suite seeds (1, 42, 1337): {tail}"
    return Row(11, "property suites and determinism", ok, detail)


CRITERIA = {
    1: gauss_anchor,
    2: gauss_dimension,
    3: gap_bound_rows,
    4: markov_defect_row,
    5: stationarity_row,
    6: chain_agreement_row,
    7: kinney_pitcher_row,
    8: decay_row,
    9: ulam_row,
    10: obstruction_row,
    11: property_suite_row,
}


def run_criterion(i: int, seed: int, workers: int = 1, **kwargs) -> Row:
    t0 = time.perf_counter()
    row = CRITERIA[i](seed, workers, **kwargs)
    row.seconds = time.perf_counter() - t0
    return row


def run_all(seed: int = 42, workers: int = 1, only=None, run_suite: bool = True, echo=None) -> list[Row]:
    rows = []
    for i in sorted(CRITERIA if only is None else only):
        kw = {"run_suite": run_suite} if i == 11 else {}
        row = run_criterion(i, seed, workers, **kw)
        if echo:
            echo(row.line())
        rows.append(row)
    return rows
