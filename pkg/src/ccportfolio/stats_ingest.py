"""Price ingestion and estimation of nominal return statistics.

Returns are simple percentage returns, ``r_t = 100 * (P_t - P_{t-1}) / P_{t-1}``.
Means and covariances use the population divisor ``T`` rather than ``T - 1``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import IO, Sequence

import numpy as np

from .errors import (
    DuplicateTimestamp,
    EmptyReturns,
    MalformedCsv,
    NonPositivePrice,
    SchemaError,
    TooFewRows,
)

__all__ = [
    "PriceSeries",
    "ReturnMatrix",
    "ReturnStatistics",
    "load_prices",
    "compute_returns",
    "estimate_statistics",
    "resample_every",
]


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PriceSeries:
    asset_labels: tuple[str, ...]
    timestamps: tuple[str, ...]
    prices: np.ndarray  # (T+1, n)

    def __post_init__(self):
        prices = _frozen(self.prices)
        object.__setattr__(self, "asset_labels", tuple(self.asset_labels))
        object.__setattr__(self, "timestamps", tuple(self.timestamps))
        object.__setattr__(self, "prices", prices)
        if prices.ndim != 2 or prices.shape[1] != len(self.asset_labels):
            raise MalformedCsv("price matrix does not match the asset labels")
        if prices.shape[0] != len(self.timestamps):
            raise MalformedCsv("price matrix does not match the timestamps")
        if prices.shape[0] < 2:
            raise TooFewRows(f"need at least 2 price rows, got {prices.shape[0]}")
        if not np.all(np.isfinite(prices)) or np.any(prices <= 0):
            raise NonPositivePrice("all prices must be finite and strictly positive")
        if any(a >= b for a, b in zip(self.timestamps, self.timestamps[1:])):
            raise DuplicateTimestamp("timestamps must be strictly increasing")

    @property
    def n_assets(self) -> int:
        return len(self.asset_labels)


@dataclass(frozen=True)
class ReturnMatrix:
    returns: np.ndarray  # (T, n), percent
    asset_labels: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "returns", _frozen(self.returns))
        object.__setattr__(self, "asset_labels", tuple(self.asset_labels))

    @property
    def T(self) -> int:
        return self.returns.shape[0]


@dataclass(frozen=True)
class ReturnStatistics:
    """Nominal expected returns ``mu0`` (percent) and covariance ``sigma`` (percent^2)."""

    mu0: np.ndarray
    sigma: np.ndarray
    asset_labels: tuple[str, ...]
    T: int | None = None

    def __post_init__(self):
        mu0 = _frozen(self.mu0)
        sigma = np.array(self.sigma, dtype=float)
        n = mu0.shape[0] if mu0.ndim == 1 else -1
        if mu0.ndim != 1 or sigma.shape != (n, n) or len(self.asset_labels) != n:
            raise SchemaError("mu0, sigma and asset_labels have inconsistent dimensions")
        if not (np.all(np.isfinite(mu0)) and np.all(np.isfinite(sigma))):
            raise SchemaError("statistics must be finite")
        if not np.array_equal(sigma, sigma.T):
            raise SchemaError("covariance matrix must be symmetric")
        if n and np.linalg.eigvalsh(sigma).min() < -1e-9:
            raise SchemaError("covariance matrix is not positive semidefinite")
        object.__setattr__(self, "mu0", mu0)
        object.__setattr__(self, "sigma", _frozen(sigma))
        object.__setattr__(self, "asset_labels", tuple(self.asset_labels))

    @property
    def n_assets(self) -> int:
        return self.mu0.shape[0]

    def to_dict(self) -> dict:
        return {
            "labels": list(self.asset_labels),
            "mu0": self.mu0.tolist(),
            "sigma": self.sigma.tolist(),
            "T": self.T,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ReturnStatistics":
        try:
            labels = data["labels"]
            mu0 = data["mu0"]
            sigma = data["sigma"]
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"statistics object missing field: {exc}") from None
        if not isinstance(labels, list) or not all(isinstance(s, str) for s in labels):
            raise SchemaError("labels must be a list of strings")
        try:
            mu0 = np.asarray(mu0, dtype=float)
            sigma = np.asarray(sigma, dtype=float)
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"non-numeric statistics: {exc}") from None
        T = data.get("T")
        if T is not None and (not isinstance(T, int) or T < 1):
            raise SchemaError("T must be a positive integer or null")
        return cls(mu0=mu0, sigma=sigma, asset_labels=tuple(labels), T=T)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def load_prices(source: IO[bytes] | IO[str] | bytes | str) -> PriceSeries:
    """Parse ``date,<label1>,...,<labeln>`` CSV data into a :class:`PriceSeries`.

    Rows are sorted by their period identifier (plain string order, which is
    chronological for ISO-8601 dates).
    """
    if isinstance(source, (bytes, str)):
        raw = source
    else:
        raw = source.read()
    if isinstance(raw, bytes):
        try:
            raw = raw.decode("utf-8-sig")
        except UnicodeDecodeError as exc:
            raise MalformedCsv(f"input is not UTF-8: {exc}") from None

    rows = [r for r in csv.reader(io.StringIO(raw)) if r and any(c.strip() for c in r)]
    if not rows:
        raise MalformedCsv("empty CSV")
    header = [c.strip() for c in rows[0]]
    if len(header) < 2 or header[0].lower() != "date" or any(not c for c in header[1:]):
        raise MalformedCsv("header must be 'date,<label1>,...,<labeln>'")
    labels = header[1:]
    if len(set(labels)) != len(labels):
        raise MalformedCsv("duplicate asset labels in header")

    stamps: list[str] = []
    values: list[list[float]] = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise MalformedCsv(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            vals = [float(c) for c in row[1:]]
        except ValueError:
            raise MalformedCsv(f"line {lineno}: non-numeric price") from None
        if not all(math.isfinite(v) for v in vals):
            raise MalformedCsv(f"line {lineno}: non-finite price")
        if any(v <= 0 for v in vals):
            raise NonPositivePrice(f"line {lineno}: prices must be strictly positive")
        stamps.append(row[0].strip())
        values.append(vals)

    if len(set(stamps)) != len(stamps):
        raise DuplicateTimestamp("duplicate period identifiers")
    if len(stamps) < 2:
        raise TooFewRows(f"need at least 2 price rows, got {len(stamps)}")
    order = sorted(range(len(stamps)), key=stamps.__getitem__)
    return PriceSeries(
        asset_labels=tuple(labels),
        timestamps=tuple(stamps[i] for i in order),
        prices=np.array([values[i] for i in order]),
    )


def resample_every(prices: PriceSeries, step: int) -> PriceSeries:
    """Keep every ``step``-th row starting from the first (monthly -> quarterly with step=3)."""
    if step < 1:
        raise ValueError("step must be >= 1")
    idx = list(range(0, len(prices.timestamps), step))
    return PriceSeries(
        asset_labels=prices.asset_labels,
        timestamps=tuple(prices.timestamps[i] for i in idx),
        prices=prices.prices[idx],
    )


def compute_returns(prices: PriceSeries) -> ReturnMatrix:
    p = prices.prices
    r = 100.0 * (p[1:] - p[:-1]) / p[:-1]
    return ReturnMatrix(returns=r, asset_labels=prices.asset_labels)


def estimate_statistics(returns: ReturnMatrix | np.ndarray,
                        asset_labels: Sequence[str] | None = None) -> ReturnStatistics:
    """Sample mean and population (divisor ``T``) covariance of the return rows."""
    if isinstance(returns, ReturnMatrix):
        r = returns.returns
        labels = returns.asset_labels
    else:
        r = np.asarray(returns, dtype=float)
        if r.ndim == 1:
            r = r[:, None]
        labels = tuple(asset_labels) if asset_labels is not None else tuple(
            f"asset{i + 1}" for i in range(r.shape[1] if r.ndim == 2 else 0))
    if r.ndim != 2 or r.shape[0] < 1 or r.shape[1] < 1:
        raise EmptyReturns("need at least one return period and one asset")
    T = r.shape[0]
    mu = r.sum(axis=0) / T
    dev = r - mu
    sigma = dev.T @ dev / T
    sigma = 0.5 * (sigma + sigma.T)
    return ReturnStatistics(mu0=mu, sigma=sigma, asset_labels=labels, T=T)
