"""Command-line entry point.

Exit codes: 0 ok, 2 bad input, 3 I/O failure, 4 invalid solver config,
5 chance-constraint validation failed. Any path argument may be written as
``fixture:NAME`` to read a built-in fixture (see ``ccportfolio.fixtures``).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import Frontier, dissimilarity_matrix, monte_carlo_validate, parse_tau_grid, sweep_frontier
from .errors import ConfigInvalid, InputError, PortfolioError, SchemaError
from .fixtures import resolve_path
from .models import NOMINAL, PortfolioModel
from .solver import SolverConfig
from .stats_ingest import compute_returns, estimate_statistics, load_prices, resample_every

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_IO = 3
EXIT_CONFIG = 4
EXIT_VALIDATION = 5

DEFAULT_SEED = 42


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _read_bytes(arg: str) -> bytes:
    path = resolve_path(arg)
    try:
        return path.read_bytes()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror or exc}", EXIT_IO) from None


def _write_text(path: Path, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc.strerror or exc}", EXIT_IO) from None


def _load_model(arg: str) -> PortfolioModel:
    raw = _read_bytes(arg)
    try:
        return PortfolioModel.from_json(raw.decode("utf-8"))
    except UnicodeDecodeError:
        raise SchemaError("model file is not UTF-8") from None


def _config(args) -> SolverConfig:
    return SolverConfig(
        tolerance=args.tolerance,
        max_iterations=args.max_iterations,
        multistart_count=args.multistart,
        rng_seed=args.seed,
        penalty_growth=args.penalty_growth,
        grid_step=args.grid_step,
    )


def _write_manifest(args, inputs, outputs, config_echo, started):
    if not args.manifest:
        return
    manifest = {
        "command": args.command,
        "inputs": [str(resolve_path(p)) for p in inputs],
        "config": config_echo,
        "outputs": [str(p) for p in outputs],
        "duration_seconds": round(time.perf_counter() - started, 6),
    }
    _write_text(Path(args.manifest), json.dumps(manifest, indent=2) + "\n")


def _config_echo(cfg: SolverConfig) -> dict:
    return {
        "tolerance": cfg.tolerance,
        "max_iterations": cfg.max_iterations,
        "multistart_count": cfg.multistart_count,
        "seed": cfg.rng_seed,
        "penalty_growth": cfg.penalty_growth,
        "grid_step": cfg.grid_step,
    }


def _model_echo(model: PortfolioModel) -> dict:
    echo = {"variant": model.variant}
    if model.variant != NOMINAL:
        d = model.to_dict()
        echo.update(beta=d["beta"], shifts=d["shifts"], dist_params=d["dist_params"])
    return echo


# -- commands -------------------------------------------------------------

def cmd_stats(args) -> int:
    started = time.perf_counter()
    prices = load_prices(_read_bytes(args.prices))
    if args.every > 1:
        prices = resample_every(prices, args.every)
    stats = estimate_statistics(compute_returns(prices))
    out = Path(args.out)
    _write_text(out, stats.to_json())
    print(f"{stats.n_assets} assets, T={stats.T} periods -> {out}")
    _write_manifest(args, [args.prices], [out], {"every": args.every}, started)
    return EXIT_OK


def cmd_frontier(args) -> int:
    started = time.perf_counter()
    cfg = _config(args)
    model = _load_model(args.model)
    taus = parse_tau_grid(args.taus)
    frontier = sweep_frontier(model, taus, cfg, threads=args.threads)
    out = Path(args.out)
    _write_text(out, frontier.to_csv())

    labels = model.stats.asset_labels
    print(f"{model.variant} frontier, {len(frontier.points)} points")
    print(f"{'tau':>8} {'risk':>10} {'status':>13}  " + " ".join(f"{lab[:12]:>12}" for lab in labels))
    for p in frontier.points:
        risk = "" if p.risk is None else f"{p.risk:.4f}"
        ws = " ".join(f"{'':>12}" if p.weights is None else f"{w:>12.4f}"
                      for w in (p.weights or [None] * len(labels)))
        print(f"{p.tau:>8.4f} {risk:>10} {str(p.status):>13}  {ws}")

    echo = {**_model_echo(model), "taus": taus, **_config_echo(cfg)}
    _write_manifest(args, [args.model], [out], echo, started)
    return EXIT_OK


def cmd_dissimilarity(args) -> int:
    started = time.perf_counter()
    if len(args.frontiers) < 2:
        raise CliError("need at least two frontier CSV files", EXIT_INPUT)
    labels = args.labels.split(",") if args.labels else [
        resolve_path(p).stem for p in args.frontiers]
    if len(labels) != len(args.frontiers):
        raise CliError("--labels must name every frontier", EXIT_INPUT)
    frontiers = []
    for p in args.frontiers:
        try:
            text = _read_bytes(p).decode("utf-8")
        except UnicodeDecodeError:
            raise CliError(f"{p} is not UTF-8", EXIT_INPUT) from None
        frontiers.append(Frontier.from_csv(text, resolve_path(p).stem))
    grid = frontiers[0].taus
    for f in frontiers[1:]:
        if len(f.taus) != len(grid) or any(abs(a - b) > 1e-9 for a, b in zip(f.taus, grid)):
            raise CliError("frontiers do not share the same tau grid", EXIT_INPUT)
    for f, lab in zip(frontiers, labels):
        if any(r is None for r in f.risks):
            raise CliError(f"frontier {lab!r} has points without a risk value", EXIT_INPUT)
    dm = dissimilarity_matrix([f.risks for f in frontiers], labels)
    out = Path(args.out)
    _write_text(out, dm.to_json())
    width = max(len(s) for s in labels)
    print(" " * width + " " + " ".join(f"{s:>{max(width, 8)}}" for s in labels))
    for lab, row in zip(labels, dm.d):
        print(f"{lab:<{width}} " + " ".join(f"{v:>{max(width, 8)}.4f}" for v in row))
    _write_manifest(args, args.frontiers, [out], {"labels": labels}, started)
    return EXIT_OK


def _parse_weights(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise CliError(f"bad weights {text!r}", EXIT_INPUT) from None


def cmd_validate(args) -> int:
    started = time.perf_counter()
    model = _load_model(args.model)
    if model.variant == NOMINAL:
        raise CliError("validation needs a robust model with a perturbation spec", EXIT_INPUT)
    if args.samples < 1:
        raise CliError("--samples must be >= 1", EXIT_INPUT)
    tau = args.tau
    if args.weights is not None:
        weights = _parse_weights(args.weights)
    else:
        try:
            text = _read_bytes(args.frontier).decode("utf-8")
        except UnicodeDecodeError:
            raise CliError(f"{args.frontier} is not UTF-8", EXIT_INPUT) from None
        frontier = Frontier.from_csv(text)
        if tau is None:
            raise CliError("--tau selects the frontier row and is required with --frontier", EXIT_INPUT)
        rows = [p for p in frontier.points if abs(p.tau - tau) <= 1e-9 and p.weights is not None]
        if not rows:
            raise CliError(f"no solved frontier row at tau={tau}", EXIT_INPUT)
        weights = np.array(rows[0].weights)
    if tau is None:
        tau = model.tau
    if tau is None:
        raise CliError("no target return: pass --tau or set tau in the model", EXIT_INPUT)
    n = model.n_assets
    if (weights.shape != (n,) or not np.all(np.isfinite(weights)) or weights.min() < -1e-9
            or abs(weights.sum() - 1.0) > 1e-4):
        raise CliError(f"weights must be {n} nonnegative numbers summing to 1", EXIT_INPUT)

    p = monte_carlo_validate(weights, model.stats, model.perturbation, tau,
                             samples=args.samples, seed=args.seed)
    beta = model.beta
    threshold = beta - 3.0 * math.sqrt(beta * (1.0 - beta) / args.samples)
    print(f"empirical_probability={p:.6f} beta={beta:.6f} threshold={threshold:.6f} samples={args.samples}")
    _write_manifest(args, [args.model], [], {**_model_echo(model), "tau": tau, "seed": args.seed,
                                             "samples": args.samples}, started)
    return EXIT_OK if p >= threshold else EXIT_VALIDATION


# -- parser ---------------------------------------------------------------

def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    d = SolverConfig()
    p.add_argument("--tolerance", type=float, default=d.tolerance, help="KKT / step tolerance (default %(default)g)")
    p.add_argument("--max-iterations", type=int, default=d.max_iterations,
                   help="iteration budget per start (default %(default)d)")
    p.add_argument("--multistart", type=int, default=d.multistart_count,
                   help="number of starts for the nonconvex exponential model (default %(default)d)")
    p.add_argument("--penalty-growth", type=float, default=d.penalty_growth,
                   help="augmented-Lagrangian penalty growth factor (default %(default)g)")
    p.add_argument("--grid-step", type=float, default=d.grid_step,
                   help="grid-oracle lattice spacing (default %(default)g)")
    p.add_argument("--threads", type=int, default=1, help="worker threads for the tau sweep (default 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ccportfolio",
        description="Chance-constrained robust portfolio optimization (nominal, normal and exponential perturbations).",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help="random seed (default %(default)d)")
    common.add_argument("--manifest", metavar="PATH", help="also write a JSON run manifest to PATH")

    p = sub.add_parser("stats", parents=[common], help="estimate return statistics from a price CSV")
    p.add_argument("prices", help="CSV with header date,<label1>,...")
    p.add_argument("out", help="output statistics JSON")
    p.add_argument("--every", type=int, default=1,
                   help="keep every N-th price row before computing returns (3 turns monthly into quarterly)")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("frontier", parents=[common], help="solve a model over a grid of target returns")
    p.add_argument("model", help="model JSON")
    p.add_argument("out", help="output frontier CSV")
    p.add_argument("--taus", default="1.5:0.2:3.5", help="tau grid start:step:end (default %(default)s)")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_frontier)

    p = sub.add_parser("dissimilarity", parents=[common], help="Euclidean distances between frontier risk vectors")
    p.add_argument("frontiers", nargs="+", help="two or more frontier CSV files on the same tau grid")
    p.add_argument("-o", "--out", required=True, help="output JSON")
    p.add_argument("--labels", help="comma-separated model labels (default: file stems)")
    p.set_defaults(func=cmd_dissimilarity)

    p = sub.add_parser("validate", parents=[common], help="Monte Carlo check of the chance constraint")
    p.add_argument("model", help="robust model JSON")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--weights", help="comma-separated portfolio weights")
    src.add_argument("--frontier", help="frontier CSV; the row is picked by --tau")
    p.add_argument("--tau", type=float, help="target return (defaults to the model's tau)")
    p.add_argument("--samples", type=int, default=1_000_000, help="Monte Carlo sample count (default %(default)d)")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        parser.error("--threads must be >= 1")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ConfigInvalid as exc:
        print(f"error: invalid solver configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InputError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except PortfolioError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
