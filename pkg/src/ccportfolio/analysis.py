"""Frontier sweeps, inter-model dissimilarity and Monte Carlo chance-constraint checks."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, LengthMismatch, MalformedCsv, UnsortedTaus
from .models import NormalPerturbation, PerturbationSpec, PortfolioModel, feasible_return_range
from .solver import SolverConfig, Status, solve
from .stats_ingest import ReturnStatistics

__all__ = [
    "FrontierPoint",
    "Frontier",
    "DissimilarityMatrix",
    "sweep_frontier",
    "dissimilarity_matrix",
    "monte_carlo_validate",
    "sample_perturbations",
    "parse_tau_grid",
]

MC_BATCH = 200_000


@dataclass(frozen=True)
class FrontierPoint:
    tau: float
    weights: tuple[float, ...] | None
    risk: float | None
    status: Status


@dataclass(frozen=True)
class Frontier:
    model_tag: str
    points: tuple[FrontierPoint, ...]
    asset_labels: tuple[str, ...] = ()

    @property
    def taus(self) -> list[float]:
        return [p.tau for p in self.points]

    @property
    def risks(self) -> list[float | None]:
        return [p.risk for p in self.points]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["tau", "risk", "status"] + [f"w_{lab}" for lab in self.asset_labels])
        for p in self.points:
            if p.weights is None:
                w.writerow([f"{p.tau:.6f}", "", str(p.status)] + [""] * len(self.asset_labels))
            else:
                w.writerow([f"{p.tau:.6f}", f"{p.risk:.6f}", str(p.status)]
                           + [f"{v:.6f}" for v in p.weights])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, model_tag: str = "") -> "Frontier":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0][:3] != ["tau", "risk", "status"]:
            raise MalformedCsv("frontier CSV must start with 'tau,risk,status'")
        labels = []
        for col in rows[0][3:]:
            if not col.startswith("w_"):
                raise MalformedCsv(f"unexpected frontier column {col!r}")
            labels.append(col[2:])
        points = []
        for lineno, row in enumerate(rows[1:], start=2):
            if not row:
                continue
            if len(row) != len(rows[0]):
                raise MalformedCsv(f"line {lineno}: ragged row")
            try:
                tau = float(row[0])
                status = Status(row[2])
                if row[1] == "":
                    risk, weights = None, None
                else:
                    risk = float(row[1])
                    weights = tuple(float(v) for v in row[3:])
            except ValueError as exc:
                raise MalformedCsv(f"line {lineno}: {exc}") from None
            points.append(FrontierPoint(tau, weights, risk, status))
        return cls(model_tag, tuple(points), tuple(labels))


@dataclass(frozen=True)
class DissimilarityMatrix:
    labels: tuple[str, ...]
    d: np.ndarray

    def to_dict(self) -> dict:
        return {"labels": list(self.labels), "matrix": self.d.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def parse_tau_grid(spec: str) -> list[float]:
    """``start:step:end`` inclusive of ``end`` within half a step."""
    try:
        start, step, end = (float(v) for v in spec.split(":"))
    except ValueError:
        raise ValueError(f"tau grid must look like start:step:end, got {spec!r}") from None
    if not all(math.isfinite(v) for v in (start, step, end)):
        raise ValueError("tau grid values must be finite")
    if end < start or step <= 0:
        raise UnsortedTaus(f"tau grid {spec!r} is not ascending")
    count = int(math.floor((end - start) / step + 0.5)) + 1
    return [round(start + i * step, 12) for i in range(count)]


def _tag(model: PortfolioModel) -> str:
    return model.variant


def sweep_frontier(model: PortfolioModel, taus: Sequence[float],
                   config: SolverConfig | None = None, threads: int = 1) -> Frontier:
    """Solve ``model`` independently at every target in ``taus`` (strictly ascending)."""
    taus = [float(t) for t in taus]
    if any(b <= a for a, b in zip(taus, taus[1:])):
        raise UnsortedTaus("taus must be strictly increasing")
    config = config or SolverConfig()
    labels = model.stats.asset_labels
    if not taus:
        return Frontier(_tag(model), (), labels)
    rng = feasible_return_range(model.with_tau(taus[0]))

    def one(tau):
        sol = solve(model.with_tau(tau), config, return_range=rng)
        if sol.weights is None:
            return FrontierPoint(tau, None, None, sol.status)
        return FrontierPoint(tau, tuple(float(v) for v in sol.weights), sol.risk, sol.status)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            points = list(pool.map(one, taus))
    else:
        points = [one(t) for t in taus]
    return Frontier(_tag(model), tuple(points), labels)


def dissimilarity_matrix(risk_vectors: Sequence[Sequence[float]],
                         labels: Sequence[str]) -> DissimilarityMatrix:
    """Pairwise Euclidean distances between risk vectors sharing one tau grid."""
    vecs = [np.asarray(v, dtype=float) for v in risk_vectors]
    if len(labels) != len(vecs):
        raise LengthMismatch("one label per risk vector required")
    if len({v.shape for v in vecs}) > 1 or any(v.ndim != 1 for v in vecs):
        raise LengthMismatch("risk vectors differ in length")
    if not all(np.all(np.isfinite(v)) for v in vecs):
        raise ValueError("risk vectors must be finite")
    k = len(vecs)
    d = np.zeros((k, k))
    for p in range(k):
        for q in range(p + 1, k):
            d[p, q] = d[q, p] = math.sqrt(float(np.sum((vecs[p] - vecs[q]) ** 2)))
    d.setflags(write=False)
    return DissimilarityMatrix(tuple(labels), d)


def sample_perturbations(spec: PerturbationSpec, samples: int,
                         rng: np.random.Generator) -> np.ndarray:
    """Draw ``(samples, n)`` perturbations from uniforms of ``rng``.

    Normal draws use the Box-Muller transform (both outputs of each pair);
    exponential draws use the inverse CDF ``-log(1 - u) / lam``.
    """
    n = spec.shifts.shape[0]
    dist = spec.distribution
    if isinstance(dist, NormalPerturbation):
        pairs = (samples * n + 1) // 2
        u1 = 1.0 - rng.random(pairs)
        u2 = rng.random(pairs)
        r = np.sqrt(-2.0 * np.log(u1))
        z = np.concatenate([r * np.cos(2 * np.pi * u2), r * np.sin(2 * np.pi * u2)])
        z = z[: samples * n].reshape(samples, n)
        return dist.means + dist.stddevs * z
    u = rng.random((samples, n))
    return -np.log1p(-u) / dist.rates


def monte_carlo_validate(weights, stats: ReturnStatistics, spec: PerturbationSpec,
                         tau: float, samples: int = 1_000_000, seed: int = 42) -> float:
    """Empirical ``P(mu0'x + sum_j d_j x_j zeta_j >= tau)`` under ``spec``.

    Uses a PCG64 generator; draws are consumed in fixed-size batches so the
    result depends only on ``seed`` and ``samples``.
    """
    x = np.asarray(weights, dtype=float)
    if x.shape != (stats.n_assets,) or spec.shifts.shape != x.shape:
        raise DimensionMismatch("weights, statistics and perturbation spec disagree in size")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    base = float(stats.mu0 @ x)
    coef = spec.shifts * x
    if not np.any(coef):
        return 1.0 if base >= tau else 0.0
    rng = np.random.Generator(np.random.PCG64(seed))
    hits = 0
    done = 0
    while done < samples:
        m = min(MC_BATCH, samples - done)
        zeta = sample_perturbations(spec, m, rng)
        hits += int(np.count_nonzero(base + zeta @ coef >= tau))
        done += m
    return hits / samples
