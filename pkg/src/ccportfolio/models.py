"""The nominal Markowitz problem and its two chance-constrained robust counterparts.

All three share the objective ``0.5 * x' Sigma x`` over the simplex and differ
in the return constraint, exposed uniformly as a slack (``>= 0`` is feasible):

* ``nominal``: ``mu0' x - tau``
* ``robust_normal``: ``mu0' x + sum_j d_j m_j x_j
  + sqrt(2) erfinv(1 - 2 beta) ||(s_j d_j x_j)_j|| - tau``
* ``robust_exponential``: ``(1 - beta) - F_Y(tau - mu0' x)`` where ``F_Y`` is
  the hypoexponential CDF of ``sum_j d_j x_j zeta_j``

with ``d_j`` the per-asset basic shift.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Union

import numpy as np

from .distributions import (
    WeightedExponentialSum,
    erf_inv,
    hypoexp_cdf_batch,
)
from .errors import DimensionMismatch, SchemaError
from .stats_ingest import ReturnStatistics

__all__ = [
    "NOMINAL",
    "ROBUST_NORMAL",
    "ROBUST_EXPONENTIAL",
    "NormalPerturbation",
    "ExponentialPerturbation",
    "PerturbationSpec",
    "PortfolioModel",
    "objective",
    "objective_gradient",
    "constraint_slack",
    "constraint_slack_batch",
    "slack_gradient",
    "return_side",
    "feasible_return_range",
    "exponential_sum",
]

NOMINAL = "nominal"
ROBUST_NORMAL = "robust_normal"
ROBUST_EXPONENTIAL = "robust_exponential"
VARIANTS = (NOMINAL, ROBUST_NORMAL, ROBUST_EXPONENTIAL)

# shift * weight below this contributes no exponential perturbation
ZERO_THRESHOLD = 1e-9
FD_STEP = 1e-6


def _vec(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 1 or not np.all(np.isfinite(arr)):
        raise SchemaError(f"{name} must be a finite 1-D vector")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class NormalPerturbation:
    means: np.ndarray
    stddevs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "means", _vec(self.means, "means"))
        object.__setattr__(self, "stddevs", _vec(self.stddevs, "stddevs"))
        if self.means.shape != self.stddevs.shape:
            raise SchemaError("means and stddevs differ in length")
        if np.any(self.stddevs <= 0):
            raise SchemaError("normal stddevs must be positive")

    def __len__(self):
        return self.means.shape[0]


@dataclass(frozen=True)
class ExponentialPerturbation:
    rates: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rates", _vec(self.rates, "rates"))
        if np.any(self.rates <= 0):
            raise SchemaError("exponential rates must be positive")

    def __len__(self):
        return self.rates.shape[0]


Distribution = Union[NormalPerturbation, ExponentialPerturbation]


@dataclass(frozen=True)
class PerturbationSpec:
    """Per-asset basic shifts plus the law of the perturbations ``zeta_j``."""

    shifts: np.ndarray
    distribution: Distribution

    def __post_init__(self):
        object.__setattr__(self, "shifts", _vec(self.shifts, "shifts"))
        if np.any(self.shifts < 0):
            raise SchemaError("basic shifts must be nonnegative")
        if len(self.distribution) != self.shifts.shape[0]:
            raise SchemaError("distribution parameters do not match the number of shifts")

    @classmethod
    def normal(cls, shifts, means=None, stddevs=None) -> "PerturbationSpec":
        n = len(shifts)
        means = np.zeros(n) if means is None else means
        stddevs = np.ones(n) if stddevs is None else stddevs
        return cls(shifts, NormalPerturbation(means, stddevs))

    @classmethod
    def exponential(cls, shifts, rates=None) -> "PerturbationSpec":
        rates = np.ones(len(shifts)) if rates is None else rates
        return cls(shifts, ExponentialPerturbation(rates))

    @property
    def kind(self) -> str:
        return "normal" if isinstance(self.distribution, NormalPerturbation) else "exponential"


@dataclass(frozen=True)
class PortfolioModel:
    stats: ReturnStatistics
    tau: float | None = None
    variant: str = NOMINAL
    perturbation: PerturbationSpec | None = None
    beta: float | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise SchemaError(f"unknown variant {self.variant!r}")
        if self.tau is not None:
            if not math.isfinite(self.tau):
                raise SchemaError("tau must be finite")
            object.__setattr__(self, "tau", float(self.tau))
        if self.variant == NOMINAL:
            return
        if self.beta is None or not 0.0 < self.beta < 1.0:
            raise SchemaError("robust variants need beta in (0, 1)")
        if self.perturbation is None:
            raise SchemaError("robust variants need a perturbation spec")
        want = "normal" if self.variant == ROBUST_NORMAL else "exponential"
        if self.perturbation.kind != want:
            raise SchemaError(f"{self.variant} needs {want} perturbations")
        if self.perturbation.shifts.shape[0] != self.n_assets:
            raise SchemaError("perturbation spec does not match the number of assets")

    @property
    def n_assets(self) -> int:
        return self.stats.n_assets

    def with_tau(self, tau: float) -> "PortfolioModel":
        return replace(self, tau=tau)

    @property
    def cone_factor(self) -> float:
        """``sqrt(2) * erfinv(1 - 2 beta)``; negative for beta > 0.5."""
        return math.sqrt(2.0) * erf_inv(1.0 - 2.0 * self.beta)

    # -- JSON -------------------------------------------------------------

    def to_dict(self) -> dict:
        d = {
            "stats": self.stats.to_dict(),
            "tau": self.tau,
            "variant": self.variant,
        }
        if self.variant != NOMINAL:
            d["beta"] = self.beta
            d["shifts"] = self.perturbation.shifts.tolist()
            dist = self.perturbation.distribution
            if isinstance(dist, NormalPerturbation):
                d["dist_params"] = {"means": dist.means.tolist(), "stddevs": dist.stddevs.tolist()}
            else:
                d["dist_params"] = {"rates": dist.rates.tolist()}
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "PortfolioModel":
        if not isinstance(data, dict):
            raise SchemaError("model must be a JSON object")
        unknown = set(data) - {"stats", "tau", "variant", "beta", "shifts", "dist_params"}
        if unknown:
            raise SchemaError(f"unknown model fields: {sorted(unknown)}")
        if "stats" not in data:
            raise SchemaError("model is missing 'stats'")
        stats = ReturnStatistics.from_dict(data["stats"])
        variant = data.get("variant", NOMINAL)
        tau = data.get("tau")
        if tau is not None and not isinstance(tau, (int, float)):
            raise SchemaError("tau must be a number or null")
        if variant == NOMINAL:
            return cls(stats=stats, tau=tau)
        beta = data.get("beta")
        if not isinstance(beta, (int, float)):
            raise SchemaError("robust variants need a numeric beta")
        shifts = data.get("shifts")
        params = data.get("dist_params") or {}
        if shifts is None or not isinstance(params, dict):
            raise SchemaError("robust variants need 'shifts' and 'dist_params'")
        try:
            if variant == ROBUST_NORMAL:
                spec = PerturbationSpec.normal(shifts, params.get("means"), params.get("stddevs"))
            elif variant == ROBUST_EXPONENTIAL:
                spec = PerturbationSpec.exponential(shifts, params.get("rates"))
            else:
                raise SchemaError(f"unknown variant {variant!r}")
        except (TypeError, ValueError) as exc:
            raise SchemaError(str(exc)) from None
        return cls(stats=stats, tau=tau, variant=variant, perturbation=spec, beta=float(beta))

    @classmethod
    def from_json(cls, text: str) -> "PortfolioModel":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}") from None
        return cls.from_dict(data)


def _check_x(model: PortfolioModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (model.n_assets,):
        raise DimensionMismatch(f"expected {model.n_assets} weights, got shape {x.shape}")
    return x


def _require_tau(model: PortfolioModel) -> float:
    if model.tau is None:
        raise SchemaError("model has no target return tau")
    return model.tau


def objective(model: PortfolioModel, x) -> float:
    """Portfolio risk ``0.5 * x' Sigma x``."""
    x = _check_x(model, x)
    return float(0.5 * x @ model.stats.sigma @ x)


def objective_gradient(model: PortfolioModel, x) -> np.ndarray:
    x = _check_x(model, x)
    return model.stats.sigma @ x


def exponential_sum(model: PortfolioModel, x) -> WeightedExponentialSum | None:
    """Hypoexponential sum for weights ``x``; ``None`` when every term is below threshold."""
    x = _check_x(model, x)
    c = model.perturbation.shifts * x
    keep = c >= ZERO_THRESHOLD
    if not keep.any():
        return None
    return WeightedExponentialSum(c[keep], model.perturbation.distribution.rates[keep])


def constraint_slack_batch(model: PortfolioModel, X, tau=None) -> np.ndarray:
    """Slack for each row of ``X`` (shape ``(m, n)``).

    ``tau`` overrides the model target and may hold one value per row.
    """
    X = np.atleast_2d(_check_x(model, X))
    tau = _require_tau(model) if tau is None else np.asarray(tau, dtype=float)
    ret = X @ model.stats.mu0
    if model.variant == NOMINAL:
        return ret - tau

    spec = model.perturbation
    C = X * spec.shifts
    if model.variant == ROBUST_NORMAL:
        dist = spec.distribution
        cone = np.sqrt(np.sum((C * dist.stddevs) ** 2, axis=1))
        return ret + C @ dist.means + model.cone_factor * cone - tau

    a = np.broadcast_to(tau - ret, ret.shape)
    slack = np.full(X.shape[0], 1.0 - model.beta)
    keep = C >= ZERO_THRESHOLD
    active = a > 0
    if not active.any():
        return slack
    # rows sharing a support pattern are evaluated together
    codes = keep.astype(np.int64) @ (1 << np.arange(X.shape[1], dtype=np.int64))
    rates = spec.distribution.rates
    for code in np.unique(codes[active]):
        rows = active & (codes == code)
        mask = keep[np.argmax(rows)]
        if not mask.any():
            # all perturbations vanish: point mass at zero, so P(Y <= a) = 1 for a > 0
            slack[rows] = -model.beta
            continue
        cdf = hypoexp_cdf_batch(C[rows][:, mask], rates[mask], a[rows], fallback=True)
        slack[rows] = (1.0 - model.beta) - cdf
    return slack


def constraint_slack(model: PortfolioModel, x) -> float:
    x = _check_x(model, x)
    return float(constraint_slack_batch(model, x[None, :])[0])


def slack_gradient(model: PortfolioModel, x) -> np.ndarray:
    """Gradient of the slack in ``x``; central differences for the exponential variant."""
    x = _check_x(model, x)
    mu0 = model.stats.mu0
    if model.variant == NOMINAL:
        return mu0.copy()
    spec = model.perturbation
    if model.variant == ROBUST_NORMAL:
        dist = spec.distribution
        w = spec.shifts * dist.stddevs
        norm = math.sqrt(float(np.sum((w * x) ** 2)))
        g = mu0 + spec.shifts * dist.means
        if norm > 0:
            g = g + model.cone_factor * (w * w * x) / norm
        return g
    n = x.shape[0]
    E = FD_STEP * np.eye(n)
    vals = constraint_slack_batch(model, np.vstack([x + E, x - E]))
    return (vals[:n] - vals[n:]) / (2 * FD_STEP)


def return_side_batch(model: PortfolioModel, X) -> np.ndarray:
    """Largest ``tau`` each row of ``X`` satisfies, i.e. ``tau`` where the slack hits zero."""
    X = np.atleast_2d(_check_x(model, X))
    if model.variant != ROBUST_EXPONENTIAL:
        return constraint_slack_batch(model, X, tau=0.0)
    # mu0'x plus the (1 - beta)-quantile of the perturbation sum, found by bisection;
    # Markov's inequality bounds that quantile by E[Y] / beta
    ret = X @ model.stats.mu0
    C = X * model.perturbation.shifts
    mean = np.where(C >= ZERO_THRESHOLD, C, 0.0) @ (1.0 / model.perturbation.distribution.rates)
    lo = np.zeros(X.shape[0])
    hi = mean / model.beta * (1.0 + 1e-9)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        ok = constraint_slack_batch(model, X, tau=ret + mid) >= 0
        lo = np.where(ok, mid, lo)
        hi = np.where(ok, hi, mid)
    return ret + lo


def return_side(model: PortfolioModel, x) -> float:
    x = _check_x(model, x)
    return float(return_side_batch(model, x[None, :])[0])


def feasible_return_range(model: PortfolioModel) -> tuple[float, float]:
    """``(tau_min, tau_max)`` of attainable targets; approximate for robust variants."""
    if model.variant == NOMINAL:
        mu0 = model.stats.mu0
        return float(mu0.min()), float(mu0.max())
    from .solver import optimize_on_simplex

    n = model.n_assets
    f = lambda x: return_side(model, x)  # noqa: E731

    def grad(x):
        if model.variant == ROBUST_NORMAL:
            return slack_gradient(model, x)
        E = FD_STEP * np.eye(n)
        vals = return_side_batch(model, np.vstack([x + E, x - E]))
        return (vals[:n] - vals[n:]) / (2 * FD_STEP)

    starts = list(np.eye(n)) + [np.full(n, 1.0 / n)]
    vertex_vals = return_side_batch(model, np.eye(n))
    hi = max(-optimize_on_simplex(lambda x: -f(x), lambda x: -grad(x), s)[1] for s in starts)
    lo = min(optimize_on_simplex(f, grad, s)[1] for s in starts)
    return float(min(lo, vertex_vals.min())), float(max(hi, vertex_vals.max()))
