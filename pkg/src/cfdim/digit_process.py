"""Digit processes: i.i.d. laws, k-step Markov chains and the Gauss-derived chain.

Four process kinds share one interface (sampling, cylinder masses, JSON):

* :class:`IIDSpec`: independent digits, law may depend on the index;
* :class:`MarkovSpec`: explicit k-step chain on digits 1..D;
* :class:`GaussMarkovSpec`: the k-step chain with initial law mu_G(I_a) and
  kernel mu_G(I_ac)/mu_G(I_a), kept in closed form (no digit cap);
* :class:`GaussSpec`: the Gauss measure itself as a digit source.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

from .cf_core import DigitWord, as_word, cylinder_length
from .errors import ConfigError, DomainError
from .gauss_measure import LN2, log_mu_g_cylinder, mu_g_cylinder
from .kernel import GaussState, sample_gauss_block, state_of_words
from .streams import map_blocks

NORMALISATION_TOL = 1e-12


@dataclass(frozen=True)
class DigitLaw:
    """Law of one digit: explicit masses on 1..D plus a tail rule.

    ``tail="zero"`` means no mass beyond D.  ``tail="geometric"`` puts the
    remaining mass ``1 - sum(masses)`` on D+1, D+2, ... proportionally to
    ``theta**j``.
    """

    masses: tuple[float, ...]
    tail: str = "zero"
    theta: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "masses", tuple(float(m) for m in self.masses))
        if any(m < 0 for m in self.masses):
            raise ConfigError("digit masses must be nonnegative")
        total = sum(self.masses)
        if self.tail == "zero":
            if abs(total - 1.0) > NORMALISATION_TOL:
                raise ConfigError(f"masses sum to {total!r}, not 1")
        elif self.tail == "geometric":
            if not (0.0 < self.theta < 1.0):
                raise ConfigError("geometric tail needs 0 < theta < 1")
            if total > 1.0 + NORMALISATION_TOL:
                raise ConfigError(f"explicit masses exceed 1 ({total!r})")
        else:
            raise ConfigError(f"unknown tail rule {self.tail!r}")

    @classmethod
    def uniform(cls, digits: Sequence[int]) -> "DigitLaw":
        top = max(digits)
        masses = [0.0] * top
        for a in digits:
            masses[a - 1] = 1.0 / len(digits)
        return cls(tuple(masses))

    @classmethod
    def point_mass(cls, digit: int) -> "DigitLaw":
        masses = [0.0] * digit
        masses[-1] = 1.0
        return cls(tuple(masses))

    @property
    def cap(self) -> int:
        return len(self.masses)

    @property
    def tail_mass(self) -> float:
        return 0.0 if self.tail == "zero" else max(0.0, 1.0 - sum(self.masses))

    def pmf(self, c):
        c = np.asarray(c, dtype=np.int64)
        explicit = np.array((0.0,) + self.masses)
        inside = np.where(c <= self.cap, explicit[np.clip(c, 0, self.cap)], 0.0)
        if self.tail == "zero":
            return inside
        j = np.maximum(c - self.cap - 1, 0)
        tail = self.tail_mass * (1 - self.theta) * self.theta ** j
        return np.where(c <= self.cap, inside, tail)

    def log_pmf(self, c):
        with np.errstate(divide="ignore"):
            return np.log(self.pmf(c))

    def sample(self, u):
        u = np.asarray(u, dtype=float)
        cum = np.cumsum(self.masses)
        idx = np.searchsorted(cum, u, side="right")
        if self.tail == "zero":
            # u beyond the rounded total falls on the last supported digit
            last = max(i for i, m in enumerate(self.masses) if m > 0)
            return np.minimum(idx, last).astype(np.int64) + 1
        over = idx >= self.cap
        v = np.clip((u - cum[-1]) / max(self.tail_mass, 1e-300), 0.0, 1.0 - 1e-16)
        j = np.floor(np.log1p(-v) / np.log(self.theta))
        return np.where(over, self.cap + 1 + j, idx + 1).astype(np.int64)

    def entropy(self) -> float:
        h = -sum(m * math.log(m) for m in self.masses if m > 0)
        t = self.tail_mass
        if t > 0:
            th = self.theta
            h += -t * math.log(t * (1 - th)) - t * th / (1 - th) * math.log(th)
        return h

    def to_dict(self) -> dict:
        out = {"masses": list(self.masses), "tail": self.tail}
        if self.tail == "geometric":
            out["theta"] = self.theta
        return out


@dataclass(frozen=True)
class IIDSpec:
    """Independent digits; the law at index i is ``laws[i-1]``.

    Past the end of ``laws`` the list repeats when ``cycle`` is true, otherwise
    the last law is reused.
    """

    laws: tuple[DigitLaw, ...]
    cycle: bool = False
    kind: str = field(default="iid", init=False)

    def __post_init__(self):
        object.__setattr__(self, "laws", tuple(self.laws))
        if not self.laws:
            raise ConfigError("IIDSpec needs at least one law")

    @classmethod
    def identical(cls, law: DigitLaw) -> "IIDSpec":
        return cls((law,))

    def law_at(self, i: int) -> DigitLaw:
        if i < 1:
            raise DomainError("indices start at 1")
        if self.cycle:
            return self.laws[(i - 1) % len(self.laws)]
        return self.laws[min(i, len(self.laws)) - 1]

    def to_dict(self) -> dict:
        return {"kind": "iid", "cycle": self.cycle, "laws": [law.to_dict() for law in self.laws]}


@dataclass(frozen=True)
class MarkovSpec:
    """Explicit k-step chain on digits 1..D; states ordered lexicographically."""

    order: int
    max_digit: int
    initial: tuple[float, ...]
    kernel: tuple[tuple[float, ...], ...]
    kind: str = field(default="markov", init=False)

    def __post_init__(self):
        k, D = self.order, self.max_digit
        if k < 1 or D < 1:
            raise ConfigError("order and max_digit must be >= 1")
        init = np.asarray(self.initial, dtype=float)
        ker = np.asarray(self.kernel, dtype=float)
        if init.shape != (D**k,) or ker.shape != (D**k, D):
            raise ConfigError(f"expected initial of length {D**k} and kernel {D**k}x{D}")
        if (init < 0).any() or (ker < 0).any():
            raise ConfigError("probabilities must be nonnegative")
        if abs(init.sum() - 1) > NORMALISATION_TOL or np.abs(ker.sum(axis=1) - 1).max() > NORMALISATION_TOL:
            raise ConfigError("initial law and kernel rows must sum to 1")
        object.__setattr__(self, "initial", tuple(map(float, init)))
        object.__setattr__(self, "kernel", tuple(tuple(map(float, row)) for row in ker))

    def state_index(self, digits) -> np.ndarray:
        """Lexicographic index of each row of the (N, k) array ``digits``."""
        digits = np.asarray(digits, dtype=np.int64) - 1
        idx = np.zeros(digits.shape[0], dtype=np.int64)
        for j in range(self.order):
            idx = idx * self.max_digit + digits[:, j]
        return idx

    def states(self):
        return itertools.product(range(1, self.max_digit + 1), repeat=self.order)

    def to_dict(self) -> dict:
        return {
            "kind": "markov",
            "order": self.order,
            "max_digit": self.max_digit,
            "initial": list(self.initial),
            "kernel": [list(r) for r in self.kernel],
        }


@dataclass(frozen=True)
class GaussMarkovSpec:
    order: int
    kind: str = field(default="gauss_markov", init=False)

    def __post_init__(self):
        if self.order < 1:
            raise ConfigError("order must be >= 1")

    def initial_mass(self, a: Sequence[int]) -> float:
        a = as_word(a)
        if len(a) != self.order:
            raise DomainError(f"state must have length {self.order}")
        return mu_g_cylinder(a)

    def transition(self, a: Sequence[int], c: int) -> float:
        a = as_word(a)
        if len(a) != self.order:
            raise DomainError(f"state must have length {self.order}")
        return mu_g_cylinder(a + [c]) / mu_g_cylinder(a)

    def to_dict(self) -> dict:
        return {"kind": "gauss_markov", "order": self.order}


@dataclass(frozen=True)
class GaussSpec:
    kind: str = field(default="gauss", init=False)

    def to_dict(self) -> dict:
        return {"kind": "gauss"}


ProcessSpec = Union[IIDSpec, MarkovSpec, GaussMarkovSpec, GaussSpec]


def build_gauss_markov(k: int) -> GaussMarkovSpec:
    return GaussMarkovSpec(k)


def spec_from_dict(doc: dict) -> ProcessSpec:
    kind = doc.get("kind")
    if kind == "iid":
        laws = tuple(DigitLaw(tuple(l["masses"]), l.get("tail", "zero"), l.get("theta", 0.5)) for l in doc["laws"])
        return IIDSpec(laws, bool(doc.get("cycle", False)))
    if kind == "markov":
        return MarkovSpec(int(doc["order"]), int(doc["max_digit"]), tuple(doc["initial"]),
                          tuple(tuple(r) for r in doc["kernel"]))
    if kind == "gauss_markov":
        return GaussMarkovSpec(int(doc["order"]))
    if kind == "gauss":
        return GaussSpec()
    raise ConfigError(f"unknown process kind {kind!r}")


def spec_to_json(spec: ProcessSpec) -> str:
    return json.dumps(spec.to_dict(), sort_keys=True)


def spec_from_json(text: str) -> ProcessSpec:
    return spec_from_dict(json.loads(text))


def process_id(spec: ProcessSpec) -> str:
    return f"{spec.kind}-{hashlib.sha1(spec_to_json(spec).encode()).hexdigest()[:12]}"


# ---------------------------------------------------------------- sampling


def _sample_block(rng, count, spec_doc, n):
    spec = spec_from_dict(spec_doc)
    u = rng.random((count, n))
    return _sample_from_uniforms(spec, u)


def _sample_from_uniforms(spec: ProcessSpec, u: np.ndarray) -> np.ndarray:
    rows, n = u.shape
    if isinstance(spec, GaussSpec):
        return sample_gauss_block(u)
    if isinstance(spec, IIDSpec):
        out = np.empty((rows, n), dtype=np.int64)
        for i in range(n):
            out[:, i] = spec.law_at(i + 1).sample(u[:, i])
        return out
    k = spec.order
    if n < k:
        raise DomainError(f"a {k}-step chain needs paths of length >= {k}")
    out = np.empty((rows, n), dtype=np.int64)
    if isinstance(spec, GaussMarkovSpec):
        out[:, :k] = sample_gauss_block(u[:, :k])
        for j in range(k, n):
            out[:, j] = state_of_words(out[:, j - k:j]).sample(u[:, j])
        return out
    init_cum = np.cumsum(spec.initial)
    kern_cum = np.cumsum(np.asarray(spec.kernel), axis=1)
    idx = np.minimum(np.searchsorted(init_cum, u[:, 0], side="right"), len(init_cum) - 1)
    for j in range(k - 1, -1, -1):
        out[:, j] = idx % spec.max_digit + 1
        idx //= spec.max_digit
    for j in range(k, n):
        s = spec.state_index(out[:, j - k:j])
        rows_cum = kern_cum[s]
        c = (rows_cum <= u[:, j][:, None]).sum(axis=1)
        out[:, j] = np.minimum(c, spec.max_digit - 1) + 1
    return out


def sample_paths(spec: ProcessSpec, n: int, samples: int, seed: int, workers: int = 1) -> np.ndarray:
    """``samples`` independent digit paths of length ``n`` as rows of an int64 array."""
    if n < 1:
        raise DomainError("n must be >= 1")
    return map_blocks(_sample_block, samples, seed, "path", workers, spec_doc=spec.to_dict(), n=n)


@dataclass(frozen=True)
class DigitPath:
    word: DigitWord
    seed: int
    process: str

    def export(self) -> str:
        return " ".join(str(a) for a in self.word)


def sample_path(spec: ProcessSpec, n: int, seed: int) -> DigitPath:
    row = sample_paths(spec, n, 1, seed)[0]
    return DigitPath(DigitWord(row.tolist()), int(seed), process_id(spec))


# ---------------------------------------------------------- cylinder masses


def _explicit_prefix_mass(spec: MarkovSpec, w: DigitWord) -> float:
    k, D = spec.order, spec.max_digit
    if any(a > D for a in w):
        return 0.0
    total = 0.0
    for rest in itertools.product(range(1, D + 1), repeat=k - len(w)):
        idx = spec.state_index(np.array([tuple(w) + rest]))[0]
        total += spec.initial[idx]
    return total


def process_cylinder_mass(spec: ProcessSpec, w: Sequence[int]) -> float:
    """nu(I_w) = P(A_1 ... A_|w| = w), built from exact cylinder masses."""
    w = as_word(w)
    if isinstance(spec, GaussSpec):
        return mu_g_cylinder(w)
    if isinstance(spec, IIDSpec):
        out = 1.0
        for i, a in enumerate(w, start=1):
            out *= float(spec.law_at(i).pmf(a))
        return out
    k = spec.order
    if isinstance(spec, GaussMarkovSpec):
        if len(w) <= k:
            return mu_g_cylinder(w)
        mass = mu_g_cylinder(w[:k])
        for j in range(k, len(w)):
            mass *= spec.transition(w[j - k:j], w[j])
        return mass
    if len(w) <= k:
        return _explicit_prefix_mass(spec, w)
    if any(a > spec.max_digit for a in w):
        return 0.0
    arr = np.array([list(w)])
    mass = spec.initial[spec.state_index(arr[:, :k])[0]]
    for j in range(k, len(w)):
        mass *= spec.kernel[spec.state_index(arr[:, j - k:j])[0]][w[j] - 1]
    return mass


def log_process_masses(spec: ProcessSpec, words) -> np.ndarray:
    """Vectorised ln nu(I_w) for each row of ``words`` (-inf for zero mass)."""
    words = np.asarray(words, dtype=np.int64)
    if words.ndim == 1:
        words = words[None, :]
    rows, n = words.shape
    if isinstance(spec, GaussSpec):
        return state_of_words(words).log_cylinder_mass()
    if isinstance(spec, IIDSpec):
        acc = np.zeros(rows)
        for i in range(n):
            acc += spec.law_at(i + 1).log_pmf(words[:, i])
        return acc
    k = spec.order
    if isinstance(spec, GaussMarkovSpec):
        head = min(k, n)
        acc = state_of_words(words[:, :head]).log_cylinder_mass()
        for j in range(k, n):
            acc += state_of_words(words[:, j - k:j]).log_digit_mass(words[:, j])
        return acc
    if n < k:
        return np.log([_explicit_prefix_mass(spec, DigitWord(r)) for r in words.tolist()])
    bad = (words > spec.max_digit).any(axis=1)
    safe = np.minimum(words, spec.max_digit)
    with np.errstate(divide="ignore"):
        init = np.log(np.asarray(spec.initial))
        kern = np.log(np.asarray(spec.kernel))
    acc = init[spec.state_index(safe[:, :k])]
    for j in range(k, n):
        acc = acc + kern[spec.state_index(safe[:, j - k:j]), safe[:, j] - 1]
    return np.where(bad, -np.inf, acc)


# ----------------------------------------------- stationarity and mixing


def stationarity_residual(spec: GaussMarkovSpec, b: Sequence[int], d: int, cap: int) -> tuple[float, float]:
    """|sum_{c<=cap} p_{cb} p_{cb,d} - p_{bd}| and a rigorous bound on the omitted tail.

    The omitted terms sum to mu_G of the part of T^{-1} I_bd with first digit
    > cap; each I_{c w} has length at most |I_w| / c**2 and the density is at
    most 1/ln 2, so the tail is below |I_bd| / (cap ln 2).
    """
    b = as_word(b)
    if len(b) != spec.order - 1:
        raise DomainError(f"b must have length {spec.order - 1}")
    if cap < 1:
        raise DomainError("cap must be >= 1")
    terms = []
    for c in range(1, cap + 1):
        cb = DigitWord([c]) + b
        terms.append(spec.initial_mass(cb) * spec.transition(cb, d))
    residual = abs(math.fsum(terms) - mu_g_cylinder(b + [d]))
    bound = float(cylinder_length(b + [d])) / (cap * LN2)
    return residual, bound


def psi_ratio(spec: ProcessSpec, u: Sequence[int], v: Sequence[int]) -> float:
    """P(A_1..A_{l+m} = uv) / (P(A_1..A_l = u) P(A_1..A_m = v))."""
    u, v = as_word(u), as_word(v)
    k = getattr(spec, "order", 0)
    if len(u) <= k or len(v) <= k:
        raise DomainError(f"both words must be longer than the order {k}")
    logs = log_process_masses(spec, np.array([list(u + v)]))[0]
    return float(np.exp(logs - log_process_masses(spec, np.array([list(u)]))[0]
                        - log_process_masses(spec, np.array([list(v)]))[0]))


def psi_ratio_product(k: int, u: Sequence[int], v: Sequence[int]) -> float:
    """The same ratio for the Gauss chain via the product of boundary-window factors."""
    u, v = as_word(u), as_word(v)
    l = len(u)
    if l <= k or len(v) <= k:
        raise DomainError(f"both words must be longer than the order {k}")
    log_r = -log_mu_g_cylinder(v[:k])
    for j in range(1, k + 1):
        tail = u[l - k + j - 1:]
        log_r += log_mu_g_cylinder(tail + v[:j]) - log_mu_g_cylinder(tail + v[:j - 1])
    return math.exp(log_r)


def psi_ratio_scan(spec: GaussMarkovSpec, max_digit: int = 4, max_len: int = 4) -> dict:
    """Extremes of the ratio over all u, v with lengths k+1..max_len and digits <= max_digit."""
    k = spec.order
    alphabet = range(1, max_digit + 1)
    logp = {}
    for a in itertools.product(alphabet, repeat=k):
        la = log_mu_g_cylinder(a)
        for c in alphabet:
            logp[a, c] = log_mu_g_cylinder(a + (c,)) - la
    logm = {(): 0.0}
    frontier = [()]
    for depth in range(1, 2 * max_len + 1):
        nxt = []
        for w in frontier:
            for c in alphabet:
                wc = w + (c,)
                if depth <= k:
                    logm[wc] = log_mu_g_cylinder(wc)
                else:
                    logm[wc] = logm[w] + logp[w[-k:], c]
                nxt.append(wc)
        frontier = nxt
    words = [w for w in logm if k < len(w) <= max_len]
    lo, hi = math.inf, -math.inf
    arg_lo = arg_hi = None
    for u in words:
        for v in words:
            r = logm[u + v] - logm[u] - logm[v]
            if r < lo:
                lo, arg_lo = r, (u, v)
            if r > hi:
                hi, arg_hi = r, (u, v)
    return {
        "min": math.exp(lo), "max": math.exp(hi),
        "argmin": [list(arg_lo[0]), list(arg_lo[1])], "argmax": [list(arg_hi[0]), list(arg_hi[1])],
        "pairs": len(words) ** 2,
    }
