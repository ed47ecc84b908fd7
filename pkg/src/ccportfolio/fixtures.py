"""Built-in data: the three-sector Indian index statistics and the experiment settings.

Fixture files live in the package ``data`` directory. Setting the
``CCPORTFOLIO_FIXTURE_DIR`` environment variable points lookups elsewhere.
CLI path arguments written as ``fixture:NAME`` resolve through :func:`fixture_path`.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .stats_ingest import ReturnStatistics

FIXTURE_ENV = "CCPORTFOLIO_FIXTURE_DIR"
FIXTURE_PREFIX = "fixture:"

SECTOR_LABELS = ("Nifty Bank", "Nifty Infra", "Nifty IT")
SECTOR_MU0 = (2.609, -1.430, 6.329)
SECTOR_SIGMA = (
    (24.126, -1.460, 11.032),
    (-1.460, 8.237, 0.461),
    (11.032, 0.461, 18.034),
)
# quarterly returns, June 2017 to May 2022
SECTOR_T = 20

SECTOR_SHIFTS = (0.2, 0.1, 0.3)
DEFAULT_BETA = 0.95
TAU_GRID = tuple(round(1.5 + 0.2 * i, 10) for i in range(11))


def sector_statistics() -> ReturnStatistics:
    return ReturnStatistics(
        mu0=np.array(SECTOR_MU0),
        sigma=np.array(SECTOR_SIGMA),
        asset_labels=SECTOR_LABELS,
        T=SECTOR_T,
    )


def fixture_dir() -> Path:
    override = os.environ.get(FIXTURE_ENV)
    if override:
        return Path(override)
    return Path(__file__).resolve().parent / "data"


def fixture_path(name: str) -> Path:
    """Locate fixture ``name``; a missing extension tries ``.json`` then ``.csv``."""
    base = fixture_dir()
    candidate = base / name
    if candidate.suffix:
        return candidate
    for ext in (".json", ".csv"):
        if (base / f"{name}{ext}").exists():
            return base / f"{name}{ext}"
    return candidate


def resolve_path(arg: str) -> Path:
    if arg.startswith(FIXTURE_PREFIX):
        return fixture_path(arg[len(FIXTURE_PREFIX):])
    return Path(arg)
