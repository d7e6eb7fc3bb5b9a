"""Digit-frequency averages along subsequences and their deviation probabilities.

The indicator of the word a at T^j x reads digits j+1, ..., j+|a| of x
(1-based), because the digits of Tx are the digits of x shifted by one.
Averages run over i = 1..n at positions j = q(i).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .cf_core import as_word
from .digit_process import GaussSpec, ProcessSpec, sample_paths
from .errors import ConfigError, DomainError, InsufficientData, PathTooShort
from .gauss_measure import mu_g_cylinder, sample_mu_g_digits

MIN_HITS_FOR_FIT = 10


@dataclass(frozen=True)
class SubsequenceSpec:
    """A strictly increasing q: N -> N.

    ``kind`` is ``"identity"``, ``"arithmetic"`` (q(i) = step * i) or
    ``"explicit"`` (q(i) = values[i-1]).  ``l_witness`` certifies
    liminf q(n)/n < L only for the represented prefix in the explicit case.
    """

    kind: str = "identity"
    step: int = 1
    values: tuple[int, ...] = ()
    l_witness: float = field(default=0.0)

    def __post_init__(self):
        if self.kind not in ("identity", "arithmetic", "explicit"):
            raise ConfigError(f"unknown subsequence kind {self.kind!r}")
        if self.kind == "arithmetic" and self.step < 1:
            raise ConfigError("arithmetic step must be >= 1")
        if self.kind == "explicit":
            vals = tuple(int(v) for v in self.values)
            if not vals or vals[0] < 1 or any(b <= a for a, b in zip(vals, vals[1:])):
                raise ConfigError("explicit subsequence must be positive and strictly increasing")
            object.__setattr__(self, "values", vals)
        if self.l_witness == 0.0:
            object.__setattr__(self, "l_witness", self._default_witness())
        if self.l_witness <= 1.0:
            raise ConfigError("L witness must exceed 1")

    def _default_witness(self) -> float:
        if self.kind == "identity":
            return 2.0
        if self.kind == "arithmetic":
            return self.step + 1.0
        return max(v / i for i, v in enumerate(self.values, start=1)) + 1.0

    @classmethod
    def identity(cls) -> "SubsequenceSpec":
        return cls("identity")

    @classmethod
    def arithmetic(cls, step: int) -> "SubsequenceSpec":
        return cls("arithmetic", step=step)

    @classmethod
    def explicit(cls, values: Sequence[int]) -> "SubsequenceSpec":
        return cls("explicit", values=tuple(values))

    def positions(self, n: int) -> np.ndarray:
        """q(1), ..., q(n)."""
        i = np.arange(1, n + 1)
        if self.kind == "identity":
            return i
        if self.kind == "arithmetic":
            return self.step * i
        if n > len(self.values):
            raise DomainError(f"explicit subsequence has only {len(self.values)} terms")
        return np.asarray(self.values[:n])

    def required_length(self, n: int, word_len: int) -> int:
        return int(self.positions(n)[-1]) + word_len

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "l_witness": self.l_witness}
        if self.kind == "arithmetic":
            out["step"] = self.step
        if self.kind == "explicit":
            out["values"] = list(self.values)
        return out

    @classmethod
    def from_dict(cls, doc: dict) -> "SubsequenceSpec":
        return cls(doc.get("kind", "identity"), int(doc.get("step", 1)),
                   tuple(doc.get("values", ())), float(doc.get("l_witness", 0.0)))

    @classmethod
    def parse(cls, text: str) -> "SubsequenceSpec":
        """``identity``, ``arith:2`` or ``list:1,3,4``."""
        if text in ("identity", "id"):
            return cls.identity()
        head, _, rest = text.partition(":")
        if head in ("arith", "arithmetic"):
            return cls.arithmetic(int(rest))
        if head in ("list", "explicit"):
            return cls.explicit([int(v) for v in rest.split(",") if v])
        raise ConfigError(f"cannot parse subsequence {text!r}")


def _hits(paths: np.ndarray, a, q: SubsequenceSpec, n: int) -> np.ndarray:
    """Indicator matrix (rows, n): digits q(i)+1..q(i)+|a| equal a."""
    a = np.asarray(a, dtype=np.int64)
    pos = q.positions(n)
    need = int(pos[-1]) + len(a)
    if paths.shape[1] < need:
        raise PathTooShort(f"need {need} digits, have {paths.shape[1]}")
    hit = np.ones((paths.shape[0], n), dtype=bool)
    for t, digit in enumerate(a):
        # 0-based column of digit q(i)+1+t is q(i)+t
        hit &= paths[:, pos + t] == digit
    return hit


def frequency_average(path: Sequence[int], a: Sequence[int], q: SubsequenceSpec, n: int) -> float:
    """(1/n) sum_{i<=n} 1_a(T^{q(i)} x), read symbolically off the digit path."""
    if n < 1:
        raise DomainError("n must be >= 1")
    a = as_word(a)
    paths = np.asarray([list(path)], dtype=np.int64)
    return float(_hits(paths, a, q, n).mean())


def frequency_averages(paths: np.ndarray, a: Sequence[int], q: SubsequenceSpec, n: int) -> np.ndarray:
    return _hits(np.asarray(paths, dtype=np.int64), as_word(a), q, n).mean(axis=1)


def _binomial_stderr(p: float, samples: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / samples)


def deviation_probability_mc(a, q: SubsequenceSpec, delta: float, n: int, samples: int, seed: int,
                             workers: int = 1) -> tuple[float, float]:
    """Fraction of mu_G paths whose average deviates from mu_G(I_a) by more than delta."""
    if delta < 0:
        raise DomainError("delta must be >= 0")
    a = as_word(a)
    paths = sample_mu_g_digits(q.required_length(n, len(a)), seed, samples, workers)
    dev = np.abs(frequency_averages(paths, a, q, n) - mu_g_cylinder(a)) > delta
    p = float(dev.mean())
    return p, _binomial_stderr(p, samples)


@dataclass
class DeviationSeries:
    word: list
    delta: float
    q: SubsequenceSpec
    entries: list = field(default_factory=list)  # (n, estimate, stderr, samples)

    def hits(self, i: int) -> int:
        n, p, _, samples = self.entries[i]
        return int(round(p * samples))

    def to_rows(self) -> list[dict]:
        return [{"n": n, "estimate": p, "stderr": se, "samples": m} for n, p, se, m in self.entries]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=["n", "estimate", "stderr", "samples"], lineterminator="\n")
        w.writeheader()
        w.writerows(self.to_rows())
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"word": list(self.word), "delta": self.delta, "q": self.q.to_dict(),
                           "entries": self.to_rows()}, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "DeviationSeries":
        doc = json.loads(text)
        entries = [(e["n"], e["estimate"], e["stderr"], e["samples"]) for e in doc["entries"]]
        return cls(doc["word"], doc["delta"], SubsequenceSpec.from_dict(doc["q"]), entries)


def deviation_series(a, q: SubsequenceSpec, delta: float, ns: Sequence[int], samples: int, seed: int,
                     workers: int = 1) -> DeviationSeries:
    """Deviation probabilities at several n from one batch of paths (common random numbers)."""
    a = as_word(a)
    ns = sorted(int(n) for n in ns)
    if any(b <= c for c, b in zip(ns, ns[1:])):
        raise DomainError("n values must be distinct")
    paths = sample_mu_g_digits(q.required_length(ns[-1], len(a)), seed, samples, workers)
    target = mu_g_cylinder(a)
    series = DeviationSeries(list(a), delta, q)
    for n in ns:
        p = float((np.abs(frequency_averages(paths, a, q, n) - target) > delta).mean())
        series.entries.append((n, p, _binomial_stderr(p, samples), samples))
    return series


@dataclass
class DecayFit:
    slope: float
    intercept: float
    r_squared: float
    fit_range: tuple[int, int]
    points: int

    def to_dict(self) -> dict:
        return asdict(self)


def decay_rate_fit(series: DeviationSeries, min_hits: int = MIN_HITS_FOR_FIT) -> DecayFit:
    """Least squares of ln p against n over entries with enough positive hits."""
    usable = [(n, p) for i, (n, p, _, m) in enumerate(series.entries)
              if p > 0 and (m is None or m == 0 or series.hits(i) >= min_hits)]
    if len(usable) < 3:
        raise InsufficientData(f"need >= 3 entries with >= {min_hits} hits, have {len(usable)}")
    x = np.array([n for n, _ in usable], dtype=float)
    y = np.log([p for _, p in usable])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(float(slope), float(intercept), r2, (int(x[0]), int(x[-1])), len(usable))


def gamma_mass_empirical(spec: ProcessSpec, a, q: SubsequenceSpec, delta: float, n: int, samples: int,
                         seed: int, workers: int = 1) -> float:
    """Finite-n proxy for nu(Gamma): fraction of nu-paths deviating by more than delta at n.

    Gamma itself is a liminf event; this statistic looks at a single n only
    and makes no claim about the limit.
    """
    a = as_word(a)
    length = q.required_length(n, len(a))
    if isinstance(spec, GaussSpec):
        paths = sample_mu_g_digits(length, seed, samples, workers)
    else:
        paths = sample_paths(spec, length, samples, seed, workers)
    dev = np.abs(frequency_averages(paths, a, q, n) - mu_g_cylinder(a)) > delta
    return float(dev.mean())
