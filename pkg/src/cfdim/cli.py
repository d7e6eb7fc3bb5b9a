"""``cfdim`` command line: every experiment as a subcommand, CSV or JSON out.

Each run prints a metadata header (tool version, seed, workers) followed by
the result rows.  Module errors exit with status 1 and an error JSON on
stderr; ``repro all`` exits 1 when any acceptance row fails.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import mpmath
import numpy as np

from . import __version__, cf_core, deviations, digit_process, dimension, f_expansion, gauss_measure, repro
from .errors import CfdimError, ConfigError

COMMON = ("seed", "workers", "config", "format", "output", "no_timestamp")


@dataclass
class ExperimentConfig:
    command: str
    params: dict = field(default_factory=dict)
    seed: int | None = None
    workers: int = 1
    output: str | None = None
    format: str = "csv"
    no_timestamp: bool = False

    def __post_init__(self):
        if self.format not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, not {self.format!r}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        known = {"command", "params", "seed", "workers", "output", "format", "no_timestamp"}
        extra = set(doc) - known
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        return cls(**doc)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))

    def with_seed(self) -> "ExperimentConfig":
        if self.seed is not None:
            return self
        seed = int(np.random.SeedSequence().entropy % 2**32)
        return ExperimentConfig(self.command, dict(self.params), seed, self.workers, self.output,
                                self.format, self.no_timestamp)


# ------------------------------------------------------------------ parsing


def parse_word(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    text = str(text).replace(",", " ").strip()
    return [int(v) for v in text.split()] if text else []


def parse_real(text, precision: int | None = None):
    """``p/q`` or a decimal; exact rational unless ``precision`` bits are requested."""
    text = str(text).strip()
    if precision is None:
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"cannot parse real {text!r}") from exc
    num, _, den = text.partition("/")
    with mpmath.workprec(int(precision)):
        return mpmath.mpf(num) / mpmath.mpf(den) if den else mpmath.mpf(text)


def parse_process(text) -> digit_process.ProcessSpec:
    """``gauss``, ``gauss-markov:K``, ``iid:1,2`` (uniform), ``point:D``, inline JSON or a .json path."""
    if isinstance(text, dict):
        return digit_process.spec_from_dict(text)
    text = str(text).strip()
    if text.startswith("{"):
        return digit_process.spec_from_json(text)
    if text.endswith(".json"):
        return digit_process.spec_from_json(Path(text).read_text())
    head, _, rest = text.partition(":")
    if head == "gauss":
        return digit_process.GaussSpec()
    if head in ("gauss-markov", "gm"):
        return digit_process.build_gauss_markov(int(rest))
    if head == "iid":
        return digit_process.IIDSpec.identical(digit_process.DigitLaw.uniform(parse_word(rest)))
    if head == "point":
        return digit_process.IIDSpec.identical(digit_process.DigitLaw.point_mass(int(rest)))
    raise ConfigError(f"cannot parse process {text!r}")


def parse_scheme(text) -> f_expansion.ExpansionScheme:
    """``cf`` or ``base-M``."""
    if isinstance(text, dict):
        return f_expansion.scheme_from_dict(text)
    text = str(text)
    if text == "cf":
        return f_expansion.cf_scheme()
    if text.startswith("base-"):
        return f_expansion.base_scheme(int(text[5:]))
    raise ConfigError(f"cannot parse scheme {text!r}")


def _num(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, mpmath.mpf):
        return float(v)
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


# ---------------------------------------------------------------- handlers


def cf_digits(p, seed, workers):
    x = parse_real(p["x"], p.get("precision"))
    try:
        digits = list(cf_core.digits_of(x, p["n"], p.get("precision")))
        stop = ""
    except CfdimError as exc:
        if "digits" not in exc.context:
            raise
        digits, stop = list(exc.context["digits"]), exc.code
    return [{"x": str(p["x"]), "digits": digits, "stopped": stop}]


def cf_cylinder(p, seed, workers):
    cyl = cf_core.cylinder(parse_word(p["word"]))
    return [{"word": list(cyl.word), "low": str(cyl.low), "high": str(cyl.high), "length": str(cyl.length),
             "length_float": float(cyl.length)}]


def cf_eval(p, seed, workers):
    v = cf_core.eval_finite_cf(parse_word(p["word"]))
    return [{"word": parse_word(p["word"]), "value": str(v), "value_float": float(v)}]


def measure_cylinder(p, seed, workers):
    w = parse_word(p["word"])
    return [{"word": w, "mass": _num(gauss_measure.mu_g_cylinder(w, p.get("prec"))),
             "log_mass": gauss_measure.log_mu_g_cylinder(w)}]


def measure_ratio(p, seed, workers):
    u, v = parse_word(p["u"]), parse_word(p["v"])
    return [{"u": u, "v": v, "ratio": gauss_measure.quasi_independence_ratio(u, v)}]


def measure_defect(p, seed, workers):
    return [gauss_measure.markov_defect(parse_word(p["b"]), parse_word(p["a"]), p["c"], p.get("prec")).to_dict()]


def measure_witness(p, seed, workers):
    w = gauss_measure.find_markov_witness(p["k"], p["max_digit"], p["max_m"], p.get("prec"))
    return [w.to_dict()]


def process_build(p, seed, workers):
    spec = parse_process(p["process"])
    return [{"id": digit_process.process_id(spec), "spec": digit_process.spec_to_json(spec)}]


def process_sample(p, seed, workers):
    spec = parse_process(p["process"])
    paths = dimension.sample_source(spec, p["n"], p["samples"], seed, workers)
    pid = digit_process.process_id(spec)
    return [{"sample": i, "process": pid, "path": " ".join(map(str, row))} for i, row in enumerate(paths.tolist())]


def process_mass(p, seed, workers):
    spec = parse_process(p["process"])
    w = parse_word(p["word"])
    return [{"word": w, "mass": digit_process.process_cylinder_mass(spec, w), "mu_g": gauss_measure.mu_g_cylinder(w)}]


def process_stationarity(p, seed, workers):
    spec = digit_process.build_gauss_markov(p["k"])
    res, bound = digit_process.stationarity_residual(spec, parse_word(p["b"]), p["d"], p["cap"])
    return [{"k": p["k"], "b": parse_word(p["b"]), "d": p["d"], "cap": p["cap"], "residual": res, "tail_bound": bound}]


def process_psiratio(p, seed, workers):
    spec = digit_process.build_gauss_markov(p["k"])
    if p.get("u") is None or p.get("v") is None:
        scan = digit_process.psi_ratio_scan(spec, p["max_digit"], p["max_len"])
        return [{key: scan[key] for key in ("min", "max")}]
    u, v = parse_word(p["u"]), parse_word(p["v"])
    return [{"u": u, "v": v, "ratio": digit_process.psi_ratio(spec, u, v),
             "ratio_product": digit_process.psi_ratio_product(p["k"], u, v)}]


def dim_gauss_exact(p, seed, workers):
    return [{"lyapunov": dimension.lyapunov_gauss_exact(), "entropy": dimension.GAUSS_ENTROPY}]


def dim_entropy(p, seed, workers):
    if p.get("k") is not None:
        r = dimension.entropy_gauss_markov(p["k"], p["samples"], p["cap"], seed, workers)
        return [{"method": "series", "k": p["k"], "h": r.h, "stderr": r.stderr, "tail_bound": r.tail_bound,
                 "samples": r.samples, "cap": r.cap}]
    spec = parse_process(p["process"])
    h, se = dimension.entropy_smb_mc(spec, p["n"], p["samples"], seed, workers)
    return [{"method": "smb", "process": digit_process.process_id(spec), "h": h, "stderr": se,
             "n": p["n"], "samples": p["samples"]}]


def dim_lyapunov(p, seed, workers):
    spec = parse_process(p["process"])
    r = dimension.lyapunov_mc(spec, p["n"], p["samples"], seed, workers)
    return [dict(asdict(r), agree=r.agree, process=digit_process.process_id(spec))]


def dim_kp(p, seed, workers):
    law = digit_process.DigitLaw.uniform(parse_word(p["digits"]))
    return [dimension.kinney_pitcher_dim(law, p["n"], p["samples"], seed, workers).to_dict()]


def dim_gap(p, seed, workers):
    budgets = dimension.GapBudgets(p["outer_samples"], p["cap"], p["lyap_n"], p["lyap_samples"])
    return [dimension.verify_gap_bound(k, budgets, seed, workers).to_dict() for k in parse_word(p["k"])]


def dim_local(p, seed, workers):
    spec = parse_process(p["process"])
    d, se = dimension.local_dimension(spec, p["n"], p["samples"], seed, workers)
    return [{"process": digit_process.process_id(spec), "dim": d, "stderr": se}]


def dev_frequency(p, seed, workers):
    q = deviations.SubsequenceSpec.parse(p["q"])
    v = deviations.frequency_average(parse_word(p["path"]), parse_word(p["a"]), q, p["n"])
    return [{"a": parse_word(p["a"]), "n": p["n"], "frequency": v}]


def dev_probability(p, seed, workers):
    q = deviations.SubsequenceSpec.parse(p["q"])
    est, se = deviations.deviation_probability_mc(parse_word(p["a"]), q, p["delta"], p["n"], p["samples"], seed, workers)
    return [{"n": p["n"], "estimate": est, "stderr": se, "samples": p["samples"]}]


def dev_decay(p, seed, workers):
    q = deviations.SubsequenceSpec.parse(p["q"])
    s = deviations.deviation_series(parse_word(p["a"]), q, p["delta"], parse_word(p["ns"]), p["samples"], seed, workers)
    rows = s.to_rows()
    try:
        fit = deviations.decay_rate_fit(s)
        for r in rows:
            r.update(slope=fit.slope, intercept=fit.intercept, r_squared=fit.r_squared)
    except CfdimError as exc:
        for r in rows:
            r.update(fit_error=exc.code)
    return rows


def dev_gamma_mass(p, seed, workers):
    spec = parse_process(p["process"])
    q = deviations.SubsequenceSpec.parse(p["q"])
    v = deviations.gamma_mass_empirical(spec, parse_word(p["a"]), q, p["delta"], p["n"], p["samples"], seed, workers)
    return [{"process": digit_process.process_id(spec), "n": p["n"], "gamma_mass_proxy": v}]


def fexp_digits(p, seed, workers):
    scheme = parse_scheme(p["scheme"])
    x = parse_real(p["x"], p.get("precision"))
    try:
        digits, stop = f_expansion.digits_f(scheme, x, p["n"], p.get("precision")), ""
    except CfdimError as exc:
        if "digits" not in exc.context:
            raise
        digits, stop = list(exc.context["digits"]), exc.code
    return [{"scheme": scheme.name, "digits": digits, "stopped": stop}]


def fexp_ulam(p, seed, workers):
    scheme = parse_scheme(p["scheme"])
    d = f_expansion.ulam_invariant_density(scheme, p["bins"], p["max_iters"], p["tol"], p.get("branch_cap"))
    edges = np.linspace(0, 1, d.bins + 1)
    return [{"bin": i, "left": edges[i], "right": edges[i + 1], "density": float(v),
             "l1_residual": d.l1_residual, "converged": d.converged} for i, v in enumerate(d.values)]


def fexp_conditions(p, seed, workers):
    scheme = parse_scheme(p["scheme"])
    r = f_expansion.check_conditions(scheme, p["grid"], p["ell_max"], p["branch_cap"])
    out = r.to_dict()
    out["c2_ok"] = all(r.c2_ok)
    return [out]


def _density(p, scheme):
    kind = p["density"]
    if kind == "lebesgue":
        return f_expansion.LebesgueDensity()
    if kind == "gauss":
        return f_expansion.GaussDensity()
    if kind == "ulam":
        return f_expansion.ulam_invariant_density(scheme, p["bins"])
    raise ConfigError(f"unknown density {kind!r}")


def fexp_obstruction(p, seed, workers):
    scheme = parse_scheme(p["scheme"])
    d = f_expansion.markov_obstruction_defect(scheme, _density(p, scheme), p["a"], p["probes"])
    return [{"scheme": scheme.name, "density": p["density"], "a": p["a"], "defect": d}]


def repro_all(p, seed, workers):
    only = parse_word(p["only"]) if p.get("only") else None
    rows = repro.run_all(seed, workers, only=only, run_suite=not p.get("skip_suite"),
                         echo=lambda line: print(line, file=sys.stderr))
    out = [{"criterion": r.criterion, "name": r.name, "status": r.status, "detail": r.detail} for r in rows]
    return out, 0 if all(r.passed for r in rows) else 1


# -------------------------------------------------------------- the parser


def _word_arg(sp, name, help_text, default=None, required=False):
    sp.add_argument(f"--{name}", default=default, required=required, help=help_text)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="base seed (generated and recorded if absent)")
    common.add_argument("--workers", type=int, default=1, help="worker processes; results do not depend on it")
    common.add_argument("--config", default=None, help="JSON file whose keys override the flags")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--output", default=None, help="write here instead of stdout")
    common.add_argument("--no-timestamp", action="store_true", help="omit the timestamp from the header")

    parser = argparse.ArgumentParser(prog="cfdim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"cfdim {__version__}")
    groups = parser.add_subparsers(dest="group", required=True)

    def group(name, help_text):
        g = groups.add_parser(name, help=help_text, description=help_text)
        return g.add_subparsers(dest="action", required=True)

    def cmd(sub, name, fn, help_text):
        sp = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        sp.set_defaults(handler=fn)
        return sp

    g = group("cf", "Continued-fraction digits, cylinders and continuants.")
    sp = cmd(g, "digits", cf_digits, "Digits of x by exact Gauss-map iteration under a precision budget.")
    sp.add_argument("--x", required=True, help="p/q or a decimal (exact unless --precision is set)")
    sp.add_argument("--n", type=int, default=10)
    sp.add_argument("--precision", type=int, default=None, help="treat x as a P-bit float")
    sp = cmd(g, "cylinder", cf_cylinder, "Cylinder interval I_w with continuant endpoints and length.")
    _word_arg(sp, "word", "digits, space or comma separated", required=True)
    sp = cmd(g, "eval", cf_eval, "Exact value of the finite continued fraction [0; w].")
    _word_arg(sp, "word", "digits, space or comma separated", required=True)

    g = group("measure", "Gauss measure of cylinders, quasi-independence and the Markov defect.")
    sp = cmd(g, "cylinder", measure_cylinder, "Gauss measure mu_G(I_w) and its logarithm.")
    _word_arg(sp, "word", "digits", required=True)
    sp.add_argument("--prec", type=int, default=None, help="bits for an mpmath evaluation")
    sp = cmd(g, "ratio", measure_ratio, "Quasi-independence ratio mu_G(I_uv) / (mu_G(I_u) mu_G(I_v)).")
    _word_arg(sp, "u", "first word", required=True)
    _word_arg(sp, "v", "second word", required=True)
    sp = cmd(g, "defect", measure_defect, "Markov defect |mu(I_bac) - mu(I_ac) mu(I_ba) / mu(I_a)| of the Gauss measure.")
    _word_arg(sp, "b", "past word", required=True)
    _word_arg(sp, "a", "window word (may be empty)", default="")
    sp.add_argument("--c", type=int, required=True)
    sp.add_argument("--prec", type=int, default=None)
    sp = cmd(g, "witness", measure_witness, "Largest Markov defect over a finite family: the Gauss digits are not k-step Markov.")
    sp.add_argument("--k", type=int, default=0)
    sp.add_argument("--max-digit", type=int, default=2)
    sp.add_argument("--max-m", type=int, default=1)
    sp.add_argument("--prec", type=int, default=None)

    g = group("process", "Digit processes: i.i.d. laws, Markov chains, the Gauss-derived chain.")
    proc_help = "gauss | gauss-markov:K | iid:1,2 | point:D | inline JSON | path.json"
    sp = cmd(g, "build", process_build, "Validate a process description and print its id and JSON.")
    sp.add_argument("--process", required=True, help=proc_help)
    sp = cmd(g, "sample", process_sample, "Sample digit paths from a process.")
    sp.add_argument("--process", required=True, help=proc_help)
    sp.add_argument("--n", type=int, default=20)
    sp.add_argument("--samples", type=int, default=5)
    sp = cmd(g, "mass", process_mass, "Cylinder mass of a word under a process, next to mu_G(I_w).")
    sp.add_argument("--process", required=True, help=proc_help)
    _word_arg(sp, "word", "digits", required=True)
    sp = cmd(g, "stationarity", process_stationarity, "Truncated stationarity residual of the k-step Gauss chain with its tail bound.")
    sp.add_argument("--k", type=int, required=True)
    _word_arg(sp, "b", "word of length k-1", default="")
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--cap", type=int, default=10_000)
    sp = cmd(g, "psiratio", process_psiratio, "Psi-mixing ratio of the k-step Gauss chain for words u, v, or a scan.")
    sp.add_argument("--k", type=int, required=True)
    _word_arg(sp, "u", "first word (omit both for a scan)")
    _word_arg(sp, "v", "second word")
    sp.add_argument("--max-digit", type=int, default=4)
    sp.add_argument("--max-len", type=int, default=4)

    g = group("dim", "Entropy, Lyapunov exponent and Hausdorff dimension of digit measures.")
    cmd(g, "gauss-exact", dim_gauss_exact, "Closed-form Lyapunov exponent pi^2/(6 ln 2) of the Gauss measure.")
    sp = cmd(g, "entropy", dim_entropy, "Entropy: series for the k-step Gauss chain (--k) or SMB estimate (--process).")
    sp.add_argument("--k", type=int, default=None)
    sp.add_argument("--process", default="gauss", help=proc_help)
    sp.add_argument("--n", type=int, default=2000)
    sp.add_argument("--samples", type=int, default=500)
    sp.add_argument("--cap", type=int, default=10_000)
    sp = cmd(g, "lyapunov", dim_lyapunov, "Lyapunov exponent by cylinder lengths and by Birkhoff sums.")
    sp.add_argument("--process", default="gauss", help=proc_help)
    sp.add_argument("--n", type=int, default=2000)
    sp.add_argument("--samples", type=int, default=500)
    sp = cmd(g, "kp", dim_kp, "Kinney-Pitcher dimension H / gamma of an i.i.d. uniform digit law.")
    _word_arg(sp, "digits", "support of the uniform law", default="1 2")
    sp.add_argument("--n", type=int, default=2000)
    sp.add_argument("--samples", type=int, default=500)
    sp = cmd(g, "gap", dim_gap, "Check dim nu_k >= 1 - 2^(3-k) for the k-step Gauss chain.")
    _word_arg(sp, "k", "one or more k", default="3 4 5")
    sp.add_argument("--outer-samples", type=int, default=10_000)
    sp.add_argument("--cap", type=int, default=10_000)
    sp.add_argument("--lyap-n", type=int, default=2000)
    sp.add_argument("--lyap-samples", type=int, default=300)
    sp = cmd(g, "local", dim_local, "Local dimension ln nu(J_n) / ln |J_n| along sampled paths.")
    sp.add_argument("--process", default="gauss", help=proc_help)
    sp.add_argument("--n", type=int, default=1000)
    sp.add_argument("--samples", type=int, default=200)

    g = group("dev", "Digit frequencies along subsequences and their large deviations under mu_G.")
    q_help = "identity | arith:C | list:1,3,4"
    sp = cmd(g, "frequency", dev_frequency, "Frequency of a word at positions q(1..n) of a given digit path.")
    _word_arg(sp, "path", "digit path", required=True)
    _word_arg(sp, "a", "word", default="1")
    sp.add_argument("--q", default="identity", help=q_help)
    sp.add_argument("--n", type=int, required=True)
    for name, fn, text in (("probability", dev_probability, "Monte Carlo probability of a frequency deviation above delta."),
                           ("decay", dev_decay, "Deviation probabilities over several n with an exponential fit."),
                           ("gamma-mass", dev_gamma_mass, "Finite-n proxy for the mass of the deviation set under a process.")):
        sp = cmd(g, name, fn, text)
        _word_arg(sp, "a", "word", default="1")
        sp.add_argument("--q", default="identity", help=q_help)
        sp.add_argument("--delta", type=float, default=0.2)
        sp.add_argument("--samples", type=int, default=100_000)
        if name == "decay":
            _word_arg(sp, "ns", "list of n", default="10 25 50 100 200")
        else:
            sp.add_argument("--n", type=int, default=100)
        if name == "gamma-mass":
            sp.add_argument("--process", default="gauss", help=proc_help)

    g = group("fexp", "f-expansions: digits, Ulam densities, regularity conditions, linearity test.")
    sp = cmd(g, "digits", fexp_digits, "Digits of x in an f-expansion.")
    sp.add_argument("--scheme", default="cf", help="cf | base-M")
    sp.add_argument("--x", required=True)
    sp.add_argument("--n", type=int, default=10)
    sp.add_argument("--precision", type=int, default=None)
    sp = cmd(g, "ulam", fexp_ulam, "Invariant density of the shift map by the Ulam method.")
    sp.add_argument("--scheme", default="cf")
    sp.add_argument("--bins", type=int, default=512)
    sp.add_argument("--max-iters", type=int, default=10_000)
    sp.add_argument("--tol", type=float, default=1e-12)
    sp.add_argument("--branch-cap", type=int, default=None)
    sp = cmd(g, "conditions", fexp_conditions, "Finite-difference check of smoothness, expansion and distortion.")
    sp.add_argument("--scheme", default="cf")
    sp.add_argument("--grid", type=int, default=64)
    sp.add_argument("--ell-max", type=int, default=3)
    sp.add_argument("--branch-cap", type=int, default=32)
    sp = cmd(g, "obstruction", fexp_obstruction, "Nonlinearity of the conjugated map on one branch (zero iff digits can be Markov).")
    sp.add_argument("--scheme", default="cf")
    sp.add_argument("--density", choices=("gauss", "lebesgue", "ulam"), default="gauss")
    sp.add_argument("--a", type=int, default=1)
    sp.add_argument("--probes", type=int, default=33)
    sp.add_argument("--bins", type=int, default=512)

    g = group("repro", "Acceptance suite.")
    sp = cmd(g, "all", repro_all, "Run every acceptance criterion and print a pass/fail table.")
    _word_arg(sp, "only", "subset of criterion numbers")
    sp.add_argument("--skip-suite", action="store_true", help="skip the pytest property suite in criterion 11")
    return parser


# ------------------------------------------------------------------ running


def config_from_args(ns: argparse.Namespace) -> ExperimentConfig:
    raw = vars(ns)
    params = {k: v for k, v in raw.items() if k not in COMMON + ("group", "action", "handler")}
    cfg = ExperimentConfig(f"{ns.group} {ns.action}", params, ns.seed, ns.workers, ns.output, ns.format,
                           ns.no_timestamp)
    if ns.config:
        doc = json.loads(Path(ns.config).read_text())
        doc.pop("command", None)
        merged = cfg.to_dict()
        merged["params"].update({k.replace("-", "_"): v for k, v in doc.pop("params", {}).items()})
        for k, v in doc.items():
            k = k.replace("-", "_")
            if k in merged and k != "params":
                merged[k] = v
            elif k in merged["params"]:
                merged["params"][k] = v
            else:
                raise ConfigError(f"unknown config key {k!r}")
        cfg = ExperimentConfig.from_dict(merged)
    return cfg


def _cell(v):
    v = _num(v)
    if isinstance(v, (list, tuple)):
        return " ".join(str(_num(x)) for x in v)
    if isinstance(v, float):
        return repr(v)
    return v


def render(cfg: ExperimentConfig, rows: list[dict]) -> str:
    meta = {"tool": "cfdim", "version": __version__, "command": cfg.command, "seed": cfg.seed,
            "workers": cfg.workers}
    if not cfg.no_timestamp:
        meta["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    if cfg.format == "json":
        clean = [{k: _num(v) if not isinstance(v, list) else [_num(x) for x in v] for k, v in r.items()} for r in rows]
        return json.dumps({"meta": meta, "params": cfg.params, "rows": clean}, indent=2, default=str) + "\n"
    buf = io.StringIO()
    for k, v in meta.items():
        buf.write(f"# {k}: {v}\n")
    if rows:
        fields = list(dict.fromkeys(k for r in rows for k in r))
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _cell(v) for k, v in r.items()})
    return buf.getvalue()


def run(cfg: ExperimentConfig, handler) -> int:
    cfg = cfg.with_seed()
    out = handler(cfg.params, cfg.seed, cfg.workers)
    rows, code = out if isinstance(out, tuple) else (out, 0)
    text = render(cfg, rows)
    if cfg.output:
        Path(cfg.output).write_text(text)
    else:
        sys.stdout.write(text)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        return run(config_from_args(ns), ns.handler)
    except CfdimError as exc:
        print(json.dumps(exc.to_dict(), default=str), file=sys.stderr)
        return 1
    except (ValueError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(json.dumps({"error": "bad_input", "message": f"{type(exc).__name__}: {exc}"}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
