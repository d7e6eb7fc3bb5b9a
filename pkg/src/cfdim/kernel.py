"""Vectorised conditional digit laws of the Gauss measure.

Given a prefix word with continuants p, q (current) and p', q' (previous),
every x in its cylinder is x = (p + p' t) / (q + q' t) with t = T^n x, and the
Gauss density pulled back to t is proportional to

    1 / ((1 + s t) (1 + r t)),     s = q'/q,  r = (q' + p') / (q + p).

So the law of the next digit floor(1/t) depends on the prefix only through
(s, r).  Both obey the contractive recursion v <- 1/(a + v), and their
difference d = r - s obeys d <- -d * r * s, so the state is carried in
float64 without cancellation and without capping the digit alphabet.

The antiderivative of the density is G(t) = log1p(d t / (1 + s t)) / d, which
tends to t / (1 + s t) as d -> 0.
"""

from __future__ import annotations

import numpy as np

LN2 = np.log(2.0)
_D_TINY = 1e-290


def log1p_ratio(d, w):
    """log1p(d*w)/d with the d -> 0 limit w."""
    d = np.asarray(d, dtype=float)
    w = np.asarray(w, dtype=float)
    small = np.abs(d) < _D_TINY
    safe_d = np.where(small, 1.0, d)
    return np.where(small, w, np.log1p(safe_d * w) / safe_d)


class GaussState:
    """Per-sample conditional state: (s, r, d) plus log q and log (p + q)."""

    __slots__ = ("s", "r", "d", "log_q", "log_u")

    def __init__(self, size: int):
        self.s = np.zeros(size)
        self.r = np.ones(size)
        self.d = np.ones(size)
        self.log_q = np.zeros(size)
        self.log_u = np.zeros(size)

    def advance(self, c) -> None:
        c = np.asarray(c, dtype=float)
        self.s = 1.0 / (c + self.s)
        self.r = 1.0 / (c + self.r)
        self.d = -self.d * self.r * self.s
        self.log_q = self.log_q - np.log(self.s)
        self.log_u = self.log_u - np.log(self.r)

    def total(self):
        """G(1): unnormalised conditional mass of the whole cylinder."""
        return log1p_ratio(self.d, 1.0 / (1.0 + self.s))

    def tail_ge(self, c):
        """P(next digit >= c | prefix)."""
        c = np.asarray(c, dtype=float)
        return log1p_ratio(self.d, 1.0 / (c + self.s)) / self.total()

    def digit_mass(self, c):
        """P(next digit == c | prefix)."""
        c = np.asarray(c, dtype=float)
        w = 1.0 / ((c + self.s) * (c + 1.0 + self.r))
        return log1p_ratio(self.d, w) / self.total()

    def log_digit_mass(self, c):
        c = np.asarray(c, dtype=float)
        w = 1.0 / ((c + self.s) * (c + 1.0 + self.r))
        return np.log(log1p_ratio(self.d, w)) - np.log(self.total())

    def log_cylinder_mass(self):
        """ln mu_G(I_w) of the prefix read so far."""
        return -self.log_q - self.log_u + np.log(self.total()) - np.log(LN2)

    def log_cylinder_length(self):
        """ln |I_w| = -ln(q (q + q'))."""
        return -2.0 * self.log_q - np.log1p(self.s)

    def sample(self, u):
        """Next digit by inverse CDF: digit c iff P(next > c) < u <= P(next >= c)."""
        u = np.asarray(u, dtype=float)
        g1 = self.total()
        y = u * g1
        d, s = self.d, self.s
        small = np.abs(d) < _D_TINY
        safe_d = np.where(small, 1.0, d)
        e = np.expm1(safe_d * y)
        t = np.where(small, y / (1.0 - s * y), e / (safe_d - s * e))
        t = np.clip(t, 1e-18, 1.0)
        c = np.floor(1.0 / t)
        c = np.maximum(c, 1.0)
        # one correction step against rounding at branch boundaries
        g_c = log1p_ratio(d, 1.0 / (c + s))
        g_c1 = log1p_ratio(d, 1.0 / (c + 1.0 + s))
        c = np.where(y > g_c, np.maximum(c - 1.0, 1.0), c)
        c = np.where(y <= g_c1, c + 1.0, c)
        return c.astype(np.int64)


def state_of_words(words) -> GaussState:
    """State after reading each row of the 2-D integer array ``words``."""
    words = np.asarray(words, dtype=np.int64)
    if words.ndim == 1:
        words = words[None, :]
    st = GaussState(words.shape[0])
    for j in range(words.shape[1]):
        st.advance(words[:, j])
    return st


def sample_gauss_block(uniforms) -> np.ndarray:
    """Digits of mu_G-distributed points, one row per row of ``uniforms``."""
    uniforms = np.asarray(uniforms, dtype=float)
    rows, n = uniforms.shape
    out = np.empty((rows, n), dtype=np.int64)
    st = GaussState(rows)
    for j in range(n):
        c = st.sample(uniforms[:, j])
        out[:, j] = c
        st.advance(c)
    return out


def log_cylinder_lengths(words) -> np.ndarray:
    return state_of_words(words).log_cylinder_length()


def log_gauss_masses(words) -> np.ndarray:
    return state_of_words(words).log_cylinder_mass()


def birkhoff_log_orbit(words) -> np.ndarray:
    """Sum over j < n of -2 ln T^j x, with T^j x read off the word suffix.

    The orbit point T^j x is approximated by the finite fraction
    [a_{j+1}, ..., a_n]; the truncation error is O(1) in total.
    """
    words = np.asarray(words, dtype=np.int64)
    if words.ndim == 1:
        words = words[None, :]
    y = np.zeros(words.shape[0])
    acc = np.zeros(words.shape[0])
    for j in range(words.shape[1] - 1, -1, -1):
        y = 1.0 / (words[:, j] + y)
        acc -= 2.0 * np.log(y)
    return acc
