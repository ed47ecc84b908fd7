"""Regenerate the JSON and CSV fixtures under src/ccportfolio/data.

The price CSV is synthetic: 20 quarterly returns are constructed so that their
mean and population covariance equal the built-in sector statistics exactly,
then compounded from a base price of 1000.
"""

import json
from pathlib import Path

import numpy as np

from ccportfolio.fixtures import (
    DEFAULT_BETA,
    SECTOR_SHIFTS,
    SECTOR_T,
    sector_statistics,
)
from ccportfolio.models import ROBUST_EXPONENTIAL, ROBUST_NORMAL, PerturbationSpec, PortfolioModel

DATA = Path(__file__).resolve().parents[1] / "src" / "ccportfolio" / "data"


def quarter_ends(count):
    out, year, month = [], 2017, 6
    for _ in range(count):
        out.append(f"{year:04d}-{month:02d}-30")
        month += 3
        if month > 12:
            month -= 12
            year += 1
    return out


def sector_prices(seed=20170630):
    st = sector_statistics()
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((SECTOR_T, st.n_assets))
    z -= z.mean(axis=0)
    # whiten to identity population covariance, then color with Sigma
    cov = z.T @ z / SECTOR_T
    z = z @ np.linalg.inv(np.linalg.cholesky(cov)).T
    r = st.mu0 + z @ np.linalg.cholesky(st.sigma).T
    prices = 1000.0 * np.vstack([np.ones(st.n_assets), np.cumprod(1 + r / 100.0, axis=0)])
    lines = ["date," + ",".join(st.asset_labels)]
    for d, row in zip(quarter_ends(SECTOR_T + 1), prices):
        lines.append(d + "," + ",".join(f"{v:.10f}" for v in row))
    return "\n".join(lines) + "\n"


def main():
    st = sector_statistics()
    (DATA / "sector_stats.json").write_text(st.to_json())
    (DATA / "sector_prices.csv").write_text(sector_prices())
    models = {
        "model_nominal": PortfolioModel(st),
        "model_robust_normal": PortfolioModel(
            st, None, ROBUST_NORMAL, PerturbationSpec.normal(SECTOR_SHIFTS), DEFAULT_BETA),
        "model_robust_exponential": PortfolioModel(
            st, None, ROBUST_EXPONENTIAL, PerturbationSpec.exponential(SECTOR_SHIFTS), DEFAULT_BETA),
    }
    for name, m in models.items():
        (DATA / f"{name}.json").write_text(m.to_json())


if __name__ == "__main__":
    main()
