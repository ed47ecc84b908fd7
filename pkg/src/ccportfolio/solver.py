"""Minimum-risk solver over the long-only simplex.

Every variant is handled the same way: an augmented-Lagrangian outer loop on
the scalar return slack ``g(x) >= 0`` around a projected-gradient inner solver
(Barzilai-Borwein trial steps, Armijo backtracking). Projection onto
``{x >= 0, sum(x) = 1}`` keeps the budget and long-only constraints exact.

The exponential counterpart is nonconvex, so it is solved from several
deterministic starts and the lowest-risk feasible result wins.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .errors import ConfigInvalid, DimensionMismatch, SchemaError, TooManyAssets
from .models import (
    NOMINAL,
    ROBUST_EXPONENTIAL,
    PortfolioModel,
    constraint_slack,
    constraint_slack_batch,
    feasible_return_range,
    objective,
    objective_gradient,
    slack_gradient,
)

__all__ = [
    "Status",
    "SolverConfig",
    "Solution",
    "project_to_simplex",
    "optimize_on_simplex",
    "solve",
    "grid_oracle",
    "lipschitz_bound",
]


STALL_ROUNDS = 2
INNER_CAP = 2000


class Status(str, Enum):
    CONVERGED = "Converged"
    INFEASIBLE = "Infeasible"
    NOT_CONVERGED = "NotConverged"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class SolverConfig:
    tolerance: float = 1e-8
    max_iterations: int = 10000
    multistart_count: int = 16
    rng_seed: int = 42
    penalty_growth: float = 10.0
    grid_step: float = 1e-3

    def __post_init__(self):
        if not (isinstance(self.tolerance, (int, float)) and self.tolerance > 0):
            raise ConfigInvalid("tolerance must be positive")
        if not (isinstance(self.max_iterations, int) and self.max_iterations >= 1):
            raise ConfigInvalid("max_iterations must be a positive integer")
        if not (isinstance(self.multistart_count, int) and self.multistart_count >= 1):
            raise ConfigInvalid("multistart_count must be >= 1")
        if not (isinstance(self.rng_seed, int) and self.rng_seed >= 0):
            raise ConfigInvalid("rng_seed must be an unsigned integer")
        if not self.penalty_growth > 1:
            raise ConfigInvalid("penalty_growth must exceed 1")
        if not 0 < self.grid_step < 1:
            raise ConfigInvalid("grid_step must lie in (0, 1)")


@dataclass(frozen=True)
class Solution:
    weights: np.ndarray | None
    risk: float
    status: Status
    return_slack: float
    starts_used: int = 1
    best_start_index: int = 0
    iterations: int = 0

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED


def _infeasible(starts_used: int = 0) -> Solution:
    return Solution(None, math.nan, Status.INFEASIBLE, math.nan, starts_used, -1)


def project_to_simplex(v) -> np.ndarray:
    """Euclidean projection onto ``{x : x >= 0, sum(x) = 1}`` (sort and threshold)."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise DimensionMismatch("need a nonempty vector")
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / ind > 0)[0][-1]
    theta = css[rho] / (rho + 1)
    return np.maximum(v - theta, 0.0)


def optimize_on_simplex(fun: Callable, grad: Callable, x0, tol: float = 1e-10,
                        max_iter: int = 5000):
    """Minimize ``fun`` over the simplex by projected gradient.

    Returns ``(x, fun(x), converged, iterations)``; convergence means
    ``||x - P(x - grad(x))||_inf <= tol``. The line search is nonmonotone
    (reference = max of the last 10 values) and tolerates round-off, so
    progress continues once ``fun`` is flat to machine precision.
    """
    x = project_to_simplex(x0)
    f = fun(x)
    g = grad(x)
    history = deque([f], maxlen=10)
    alpha = 1.0
    for it in range(max_iter):
        if np.max(np.abs(x - project_to_simplex(x - g))) <= tol:
            return x, f, True, it
        ref = max(history) + 8 * np.finfo(float).eps * max(1.0, abs(f))
        while True:
            xn = project_to_simplex(x - alpha * g)
            d = xn - x
            fn = fun(xn)
            if fn <= ref + 1e-4 * float(g @ d) or alpha < 1e-14:
                break
            alpha *= 0.5
        s = xn - x
        if not np.any(s):
            return x, f, False, it + 1
        gn = grad(xn)
        y = gn - g
        sy = float(s @ y)
        alpha = float(s @ s) / sy if sy > 0 else alpha * 4.0
        alpha = min(max(alpha, 1e-12), 1e12)
        x, f, g = xn, fn, gn
        history.append(f)
    return x, f, bool(np.max(np.abs(x - project_to_simplex(x - g))) <= tol), max_iter


def _augmented_lagrangian(model: PortfolioModel, x0, config: SolverConfig):
    """Returns ``(x, converged, iterations)``."""
    tol = config.tolerance
    lam, rho = 0.0, 10.0
    x = project_to_simplex(x0)
    budget = config.max_iterations
    used = 0
    prev_viol = math.inf
    stalls = 0
    for _ in range(60):
        def phi(z, lam=lam, rho=rho):
            shifted = max(0.0, lam - rho * constraint_slack(model, z))
            return objective(model, z) + (shifted * shifted - lam * lam) / (2 * rho)

        def dphi(z, lam=lam, rho=rho):
            shifted = max(0.0, lam - rho * constraint_slack(model, z))
            g = objective_gradient(model, z)
            return g - shifted * slack_gradient(model, z) if shifted > 0 else g

        x, _, inner_ok, its = optimize_on_simplex(phi, dphi, x, tol=tol, max_iter=max(min(budget - used, INNER_CAP), 1))
        used += its
        g = constraint_slack(model, x)
        viol = max(0.0, -g)
        new_lam = max(0.0, lam - rho * g)
        kkt = abs(min(g, new_lam / rho))
        lam = new_lam
        if inner_ok and viol <= tol and kkt <= tol:
            return x, True, used
        # a saturated slack (CDF pinned near 1) gives the penalty nothing to pull on
        stalls = stalls + 1 if viol > tol and viol >= 0.99 * prev_viol else 0
        if stalls >= STALL_ROUNDS:
            break
        if used >= budget:
            break
        if viol > 0.25 * prev_viol:
            rho *= config.penalty_growth
        prev_viol = viol
    return x, False, used


def _finish(model: PortfolioModel, x, ok: bool, its: int, starts: int, index: int) -> Solution:
    slack = constraint_slack(model, x)
    good = (ok and abs(x.sum() - 1.0) <= 1e-8 and x.min() >= -1e-10 and slack >= -1e-6)
    status = Status.CONVERGED if good else Status.NOT_CONVERGED
    x = x.copy()
    x.setflags(write=False)
    return Solution(x, objective(model, x), status, slack, starts, index, its)


def _start_points(model: PortfolioModel, config: SolverConfig, warm) -> list[np.ndarray]:
    n = model.n_assets
    starts = [] if warm is None else [warm]
    starts.append(np.full(n, 1.0 / n))
    starts.extend(np.eye(n))
    rng = np.random.Generator(np.random.PCG64(config.rng_seed))
    target = config.multistart_count + (warm is not None)
    while len(starts) < target:
        starts.append(rng.dirichlet(np.ones(n)))
    return starts[:max(target, 1)]


def solve(model: PortfolioModel, config: SolverConfig | None = None,
          return_range: tuple[float, float] | None = None) -> Solution:
    """Minimum-risk weights for ``model`` at its target return ``tau``.

    ``Infeasible`` is reported as a status when ``tau`` exceeds the largest
    attainable target. ``return_range`` may be passed to skip recomputing it.
    """
    config = config or SolverConfig()
    if not isinstance(config, SolverConfig):
        raise ConfigInvalid("config must be a SolverConfig")
    if model.tau is None:
        raise SchemaError("model has no target return tau")
    if model.stats.sigma.shape != (model.n_assets, model.n_assets):
        raise DimensionMismatch("covariance does not match the number of assets")

    lo, hi = return_range if return_range is not None else feasible_return_range(model)
    if model.tau > hi + 1e-9:
        return _infeasible()

    n = model.n_assets
    if model.variant != ROBUST_EXPONENTIAL:
        x, ok, its = _augmented_lagrangian(model, np.full(n, 1.0 / n), config)
        sol = _finish(model, x, ok, its, 1, 0)
        if not sol.converged and sol.return_slack < -1e-6 and model.tau > hi - 1e-6:
            return _infeasible(1)
        return sol

    warm = None
    nominal = PortfolioModel(model.stats, model.tau, NOMINAL)
    if model.tau <= float(model.stats.mu0.max()):
        nom = solve(nominal, config, (float(model.stats.mu0.min()), float(model.stats.mu0.max())))
        if nom.weights is not None:
            warm = np.array(nom.weights)

    starts = _start_points(model, config, warm)
    best: Solution | None = None
    for i, x0 in enumerate(starts):
        x, ok, its = _augmented_lagrangian(model, x0, config)
        cand = _finish(model, x, ok, its, len(starts), i)
        if best is None or _better(cand, best, config.tolerance):
            best = cand
    return best


def _better(a: Solution, b: Solution, tol: float) -> bool:
    """Strictly better; ties keep the earlier start."""
    a_ok, b_ok = a.return_slack >= -1e-6, b.return_slack >= -1e-6
    if a_ok != b_ok:
        return a_ok
    if not a_ok:
        return a.return_slack > b.return_slack
    if a.converged != b.converged:
        return a.converged
    return a.risk < b.risk - tol * max(1.0, abs(b.risk))


def lipschitz_bound(model: PortfolioModel) -> float:
    """Largest gradient norm of the risk on the simplex (attained at a vertex)."""
    return float(np.linalg.norm(model.stats.sigma, axis=0).max())


def _compositions(total: int, parts: int) -> np.ndarray:
    """All nonnegative integer vectors of length ``parts`` summing to ``total``, lexicographic."""
    if parts == 1:
        return np.array([[total]])
    if parts == 2:
        head = np.arange(total + 1)
        return np.column_stack([head, total - head])
    rows = []
    for first in range(total + 1):
        rest = _compositions(total - first, parts - 1)
        rows.append(np.column_stack([np.full(len(rest), first), rest]))
    return np.vstack(rows)


def grid_oracle(model: PortfolioModel, step: float = 1e-3) -> Solution:
    """Exhaustive search of simplex lattice points with spacing ``step``; ``n <= 4``."""
    n = model.n_assets
    if n > 4:
        raise TooManyAssets(f"grid oracle supports at most 4 assets, got {n}")
    if not 0 < step < 1:
        raise ConfigInvalid("step must lie in (0, 1)")
    N = int(round(1.0 / step))
    sigma = model.stats.sigma
    best_risk, best_x = math.inf, None
    # chunk on the first coordinate to bound memory
    for first in range(N + 1):
        rest = _compositions(N - first, n - 1) if n > 1 else np.zeros((1, 0), dtype=int)
        if n == 1 and first != N:
            continue
        X = np.column_stack([np.full(len(rest), first), rest]) / N
        slack = constraint_slack_batch(model, X)
        ok = slack >= 0
        if not ok.any():
            continue
        risk = 0.5 * np.einsum("ij,jk,ik->i", X, sigma, X)
        risk = np.where(ok, risk, np.inf)
        i = int(np.argmin(risk))
        if risk[i] < best_risk:
            best_risk, best_x = float(risk[i]), X[i]
    if best_x is None:
        return _infeasible(1)
    best_x = best_x.copy()
    best_x.setflags(write=False)
    return Solution(best_x, best_risk, Status.CONVERGED, constraint_slack(model, best_x), 1, 0)
