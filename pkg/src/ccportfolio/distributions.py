"""Distribution machinery for the robust return constraint.

Two random sums appear in the constraint ``sum_j c_j * zeta_j`` with
``c_j = shift_j * x_j``:

* normal perturbations, where the sum is itself normal;
* exponential perturbations, where the sum is hypoexponential and its density
  is the partial-fraction closed form

      g(y) = prod_j lam_j * sum_k c_k**(K-2) * exp(-lam_k y / c_k)
             / prod_{l != k} (c_k lam_l - c_l lam_k),      y > 0.

The closed form needs pairwise distinct ratios ``lam_k / c_k``. Near-equal
ratios get a deterministic relative nudge of ``k * 1e-7`` on ``c_k``. Close
but distinct ratios make the sum cancel badly; such evaluations either raise
``DegenerateCoefficients`` or, on request, switch to the matrix exponential
of the equivalent phase-type generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .errors import DegenerateCoefficients, OutOfDomain

__all__ = [
    "WeightedNormalSum",
    "WeightedExponentialSum",
    "erf",
    "erf_inv",
    "weighted_normal_params",
    "hypoexp_pdf",
    "hypoexp_cdf",
    "hypoexp_cdf_batch",
    "hypoexp_quantile",
]

DEGENERACY_RTOL = 1e-9
NUDGE = 1e-7
CLAMP_BAND = 1e-8

_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)


@dataclass(frozen=True)
class WeightedNormalSum:
    """``Y = sum_j c_j * zeta_j`` with independent ``zeta_j ~ N(m_j, s_j^2)``."""

    coefficients: tuple[float, ...]
    means: tuple[float, ...]
    stddevs: tuple[float, ...]

    def __post_init__(self):
        for name in ("coefficients", "means", "stddevs"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        if not len(self.coefficients) == len(self.means) == len(self.stddevs):
            raise ValueError("coefficients, means and stddevs must have equal length")
        if any(not s > 0 for s in self.stddevs):
            raise ValueError("standard deviations must be positive")


@dataclass(frozen=True)
class WeightedExponentialSum:
    """``Y = sum_j c_j * zeta_j`` with independent ``zeta_j ~ Exp(rate=lam_j)``.

    Callers drop zero coefficients before building one of these.
    """

    coefficients: tuple[float, ...]
    rates: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(float(v) for v in self.coefficients))
        object.__setattr__(self, "rates", tuple(float(v) for v in self.rates))
        if len(self.coefficients) != len(self.rates):
            raise ValueError("coefficients and rates must have equal length")
        if not self.coefficients:
            raise ValueError("need at least one term")
        if any(not c > 0 for c in self.coefficients):
            raise ValueError("coefficients must be strictly positive")
        if any(not r > 0 for r in self.rates):
            raise ValueError("rates must be strictly positive")


def erf(x: float) -> float:
    return math.erf(x)


def erf_inv(p: float) -> float:
    """Inverse error function by safeguarded Newton iteration."""
    p = float(p)
    if not -1.0 < p < 1.0:
        raise OutOfDomain(f"erf_inv needs |p| < 1, got {p}")
    if p == 0.0:
        return 0.0
    if p < 0:
        return -erf_inv(-p)

    lo, hi = 0.0, 6.0
    x = NormalDist().inv_cdf(0.5 * (1.0 + p)) / math.sqrt(2.0)
    if not lo < x < hi:
        x = 0.5 * (lo + hi)
    for _ in range(200):
        r = math.erf(x) - p
        if r == 0.0:
            return x
        if r > 0:
            hi = x
        else:
            lo = x
        d = _TWO_OVER_SQRT_PI * math.exp(-x * x)
        step = x - r / d if d > 0 else lo - 1.0
        if not lo < step < hi:
            step = 0.5 * (lo + hi)
        if abs(step - x) <= 1e-16 * max(1.0, abs(x)):
            return step
        x = step
    return x


def weighted_normal_params(s: WeightedNormalSum) -> tuple[float, float]:
    """Mean and standard deviation of the normal sum."""
    c = np.asarray(s.coefficients)
    m = float(np.dot(c, s.means))
    sd = float(math.sqrt(np.sum((c * np.asarray(s.stddevs)) ** 2)))
    return m, sd


def _prepare(coefficients, rates):
    """Nudge near-degenerate rows, return ``(c, lam, denom, amplification, nudged)``.

    ``denom[..., k] = prod_{l != k} (c_k lam_l - c_l lam_k)``. Round-off in one
    close pair cancels between its two antisymmetric terms, but a second close
    pair amplifies it by the inverse of that pair's relative gap, which is what
    ``amplification`` reports.
    """
    c = np.array(coefficients, dtype=float, ndmin=2)
    lam = np.asarray(rates, dtype=float)
    K = c.shape[-1]
    if K == 1:
        return c, lam, np.ones_like(c), np.ones(c.shape[0]), np.zeros(c.shape[0], dtype=bool)

    def pairwise(c):
        ck_laml = c[..., :, None] * lam[None, :]
        cl_lamk = c[..., None, :] * lam[:, None]
        return ck_laml - cl_lamk, np.maximum(np.abs(ck_laml), np.abs(cl_lamk))

    off = ~np.eye(K, dtype=bool)
    diff, scale = pairwise(c)
    bad = np.any((np.abs(diff) < DEGENERACY_RTOL * scale) & off, axis=(-2, -1))
    nudged = np.broadcast_to(bad, c.shape[:-1]).copy()
    if np.any(bad):
        c = c.copy()
        c[bad] = c[bad] * (1.0 + NUDGE * np.arange(1, K + 1))
        diff, scale = pairwise(c)
        still = np.any((np.abs(diff) < DEGENERACY_RTOL * scale) & off, axis=(-2, -1))
        if np.any(still):
            raise DegenerateCoefficients("coefficient ratios remain degenerate after nudging")
    denom = np.prod(np.where(off, diff, 1.0), axis=-1)
    if K == 2:
        return c, lam, denom, np.ones(c.shape[0]), nudged
    iu = np.triu_indices(K, 1)
    gaps = np.sort((np.abs(diff) / scale)[..., iu[0], iu[1]], axis=-1)
    return c, lam, denom, 1.0 / np.minimum(gaps[..., 1], 1.0), nudged


def _phase_type_exp(coefficients, rates, t):
    """``exp(Q t)`` for the bidiagonal generator of each row, plus the phase rates.

    Uses ``exp(Q t) = exp(-q t) exp((Q + q I) t)`` with ``q`` the largest rate:
    ``Q + q I`` is entrywise nonnegative, so the Taylor series and the repeated
    squaring only ever add nonnegative numbers and nothing cancels.
    """
    r = np.asarray(rates, dtype=float) / np.atleast_2d(coefficients)
    m, K = r.shape
    t = np.broadcast_to(np.asarray(t, dtype=float), (m,))
    q = r.max(axis=1)
    idx = np.arange(K)
    B = np.zeros((m, K, K))
    B[:, idx, idx] = (q[:, None] - r)
    B[:, idx[:-1], idx[:-1] + 1] = r[:, :-1]
    # halve the step until every row has q h <= 1/2
    squarings = max(0, math.ceil(math.log2(max(float(np.max(q * t)), 1e-300) / 0.5)))
    h = t / 2.0 ** squarings
    Bh = B * h[:, None, None]
    term = np.broadcast_to(np.eye(K), (m, K, K)).copy()
    P = term.copy()
    for j in range(1, 30):
        term = term @ Bh / j
        P += term
    P *= np.exp(-q * h)[:, None, None]
    for _ in range(squarings):
        P = P @ P
    return P, r


def _phase_type_cdf(coefficients, rates, a) -> np.ndarray:
    """CDF as one minus the survival ``e_1' exp(Q a) 1``; no cancellation."""
    E, _ = _phase_type_exp(coefficients, rates, a)
    return np.clip(1.0 - E[:, 0, :].sum(axis=-1), 0.0, 1.0)


def _phase_type_pdf(coefficients, rates, y) -> np.ndarray:
    E, r = _phase_type_exp(coefficients, rates, y)
    return np.maximum(E[:, 0, -1] * r[:, -1], 0.0)


def _unreliable(raw, terms, scale, amp, lo, hi):
    """Rows whose partial-fraction sum is outside ``[lo, hi]`` or lost too many digits."""
    bound = np.finfo(float).eps * scale * amp * np.abs(terms).sum(axis=-1)
    return (raw < lo - CLAMP_BAND) | (raw > hi + CLAMP_BAND) | ~np.isfinite(raw) | (bound > CLAMP_BAND)


def hypoexp_pdf(s: WeightedExponentialSum, y: float, fallback: bool = False) -> float:
    if y <= 0:
        return 0.0
    c, lam, denom, amp, nudged = _prepare(s.coefficients, s.rates)
    K = c.shape[-1]
    terms = c ** (K - 2) * np.exp(-lam * y / c) / denom
    scale = np.prod(lam)
    raw = scale * terms.sum(axis=-1)
    if _unreliable(raw, terms, scale, amp, 0.0, np.inf)[0] or (fallback and nudged[0]):
        if not fallback:
            raise DegenerateCoefficients("hypoexponential density lost precision to cancellation")
        return float(_phase_type_pdf(np.asarray(s.coefficients)[None, :], s.rates, y)[0])
    return float(max(raw[0], 0.0))


def hypoexp_cdf_batch(coefficients, rates, a, fallback: bool = False) -> np.ndarray:
    """Vectorized CDF ``P(sum_k c_k zeta_k <= a)``.

    ``coefficients`` has shape ``(m, K)`` (or ``(K,)``), all entries positive;
    ``a`` broadcasts against the leading axis.

    The closed form is an alternating sum. A row is rejected when its value
    leaves ``[0, 1]`` by more than the clamp band, or when its estimated
    round-off (see ``_prepare``) exceeds the band. Rejected
    rows raise ``DegenerateCoefficients``, or with ``fallback=True`` are
    recomputed from the matrix exponential of the phase-type generator.
    """
    c, lam, denom, amp, nudged = _prepare(coefficients, rates)
    K = c.shape[-1]
    a = np.asarray(a, dtype=float)
    a_col = np.maximum(a, 0.0)[..., None]
    # integral of exp(-lam_k y / c_k) over (0, a] is (c_k / lam_k) * (1 - exp(-lam_k a / c_k))
    terms = c ** (K - 1) * -np.expm1(-lam * a_col / c) / (lam * denom)
    scale = np.prod(lam)
    raw = scale * terms.sum(axis=-1)
    bad = _unreliable(raw, terms, scale, amp, 0.0, 1.0)
    if fallback:
        # the fallback is exact, so it also replaces the O(1e-7) nudge error
        bad = bad | nudged
    bad = bad & (a > 0)
    raw = np.where(a > 0, raw, 0.0)
    if np.any(bad):
        if not fallback:
            raise DegenerateCoefficients("hypoexponential CDF lost precision to cancellation")
        rows = np.nonzero(bad)[0]
        orig = np.array(coefficients, dtype=float, ndmin=2)
        raw = np.array(raw, dtype=float)
        raw[rows] = _phase_type_cdf(orig[rows], lam, np.broadcast_to(a, bad.shape)[rows])
    return np.clip(raw, 0.0, 1.0)


def hypoexp_cdf(s: WeightedExponentialSum, a: float, fallback: bool = False) -> float:
    if a <= 0:
        return 0.0
    return float(hypoexp_cdf_batch(np.asarray(s.coefficients)[None, :], s.rates, a, fallback)[0])


def hypoexp_quantile(s: WeightedExponentialSum, q: float, rtol: float = 1e-12) -> float:
    """Smallest ``a`` with ``cdf(a) >= q``, by bisection."""
    if not 0.0 < q < 1.0:
        raise OutOfDomain("quantile level must lie in (0, 1)")
    hi = max(c / r for c, r in zip(s.coefficients, s.rates))
    while hypoexp_cdf(s, hi, fallback=True) < q:
        hi *= 2.0
    lo = 0.0
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if hypoexp_cdf(s, mid, fallback=True) < q:
            lo = mid
        else:
            hi = mid
    return hi
