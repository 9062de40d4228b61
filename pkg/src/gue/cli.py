"""Command-line surface: simulation sweeps, dataset testing, e-value utilities.

Four subcommands share one executable:

* ``simulate`` runs the Monte Carlo experiment sweep described by a TOML
  config file and writes plot-ready CSV data plus a run manifest.
* ``test`` applies the full split/calibrate/e-BH pipeline to a numeric CSV
  dataset and reports the per-quantile e-values and the global decision.
* ``ebh`` and ``merge`` expose the multiple-testing arithmetic on raw
  e-values passed as arguments or read from a file.

Exit codes: 0 on success, 1 on runtime failure (a solve or an experiment
aborted), 2 on usage, config, or input-data errors.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from . import __version__
from .calibration import CalibrationConfig, CalibrationError, calibrate_omega
from .ebh import EValueSet, ebh, global_test, merge
from .evalue import make_split
from .evalue import gue_value
from .loss import CheckLoss, Dataset
from .seeding import derive_seed
from .simulate import (
    FAMILIES,
    ExperimentError,
    FamilyConfig,
    SimConfig,
    default_taus,
    run_experiment,
)
from .solver import NullSpec, SolverError, check_design_rank

METRICS_HEADER = (
    "family",
    "signal",
    "n",
    "alpha",
    "reps",
    "rejection_rate",
    "type2_rate",
    "empirical_fdr",
)
RATES_HEADER = ("family", "signal", "n", "tau", "mean_omega", "se_omega")

_CONFIG_KEYS = {
    "seed",
    "alpha",
    "taus",
    "split_fraction",
    "threads",
    "calibration",
    "experiments",
}
_CALIBRATION_KEYS = {"bootstrap_reps", "omega_cap", "omega_tolerance"}
_EXPERIMENT_KEYS = {"family", "signal", "n", "reps"}


class ConfigError(Exception):
    """Malformed config file, flag value, or input dataset (exit code 2)."""


@dataclass(frozen=True)
class RunManifest:
    """Identity of one simulate run: what was run, with which seed, by what."""

    config_digest: str
    seed: int
    tool_version: str
    timestamp: str


@dataclass(frozen=True)
class ExperimentSpec:
    """One (family, signal, n, reps) row of a sweep config."""

    family: str
    signal: float
    n: int
    reps: int


@dataclass(frozen=True)
class ResolvedConfig:
    """A sweep config after defaults and command-line overrides are applied."""

    seed: int
    alpha: float
    taus: tuple[float, ...]
    split_fraction: float
    threads: int
    calibration: CalibrationConfig
    experiments: tuple[ExperimentSpec, ...]


def _as_int(value, field: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{field}: expected an integer, got {value!r}")
    return value


def _as_float(value, field: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{field}: expected a number, got {value!r}")
    return float(value)


def _check_taus(taus, field: str) -> tuple[float, ...]:
    values = tuple(_as_float(t, field) for t in taus)
    if not values:
        raise ConfigError(f"{field}: at least one quantile level is required")
    for t in values:
        if not 0.0 < t < 1.0:
            raise ConfigError(
                f"{field}: quantile levels must lie strictly between 0 and 1, got {t}"
            )
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ConfigError(f"{field}: quantile levels must be strictly increasing")
    return values


def _reject_unknown(table: dict, allowed: set, context: str) -> None:
    unknown = sorted(set(table) - allowed)
    if unknown:
        raise ConfigError(f"{context}: unknown key {unknown[0]!r}")


def parse_taus_flag(text: str) -> tuple[float, ...]:
    try:
        raw = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"--taus: could not parse {text!r} as comma-separated numbers")
    return _check_taus(raw, "--taus")


def load_config(path: str, args: argparse.Namespace) -> ResolvedConfig:
    """Parse and validate a sweep config, applying command-line overrides."""
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: TOML parse error: {exc}")

    _reject_unknown(raw, _CONFIG_KEYS, "config")
    seed = args.seed if args.seed is not None else _as_int(raw.get("seed", 0), "seed")
    if seed < 0:
        raise ConfigError("seed: must be nonnegative")
    alpha = (
        args.alpha if args.alpha is not None else _as_float(raw.get("alpha", 0.1), "alpha")
    )
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha: must lie strictly between 0 and 1, got {alpha}")
    if args.taus is not None:
        taus = parse_taus_flag(args.taus)
    elif "taus" in raw:
        if not isinstance(raw["taus"], list):
            raise ConfigError("taus: expected a list of quantile levels")
        taus = _check_taus(raw["taus"], "taus")
    else:
        taus = default_taus()
    split_fraction = (
        args.split_fraction
        if args.split_fraction is not None
        else _as_float(raw.get("split_fraction", 0.5), "split_fraction")
    )
    if not 0.0 < split_fraction < 1.0:
        raise ConfigError(
            f"split_fraction: must lie strictly between 0 and 1, got {split_fraction}"
        )
    threads = (
        args.threads if args.threads is not None else _as_int(raw.get("threads", 1), "threads")
    )
    if threads < 1:
        raise ConfigError("threads: must be at least 1")

    cal_table = raw.get("calibration", {})
    if not isinstance(cal_table, dict):
        raise ConfigError("calibration: expected a table")
    _reject_unknown(cal_table, _CALIBRATION_KEYS, "calibration")
    try:
        calibration = CalibrationConfig(
            alpha=alpha,
            bootstrap_reps=_as_int(cal_table.get("bootstrap_reps", 100), "calibration.bootstrap_reps"),
            omega_cap=_as_float(cal_table.get("omega_cap", 10.0), "calibration.omega_cap"),
            omega_tolerance=_as_float(
                cal_table.get("omega_tolerance", 1e-3), "calibration.omega_tolerance"
            ),
        )
    except ValueError as exc:
        raise ConfigError(f"calibration: {exc}")

    if "experiments" not in raw:
        raise ConfigError("experiments: at least one experiment section is required")
    if not isinstance(raw["experiments"], list) or not raw["experiments"]:
        raise ConfigError("experiments: expected a non-empty array of tables")
    experiments = []
    for i, table in enumerate(raw["experiments"]):
        context = f"experiments[{i}]"
        if not isinstance(table, dict):
            raise ConfigError(f"{context}: expected a table")
        _reject_unknown(table, _EXPERIMENT_KEYS, context)
        for key in ("family", "signal", "n"):
            if key not in table:
                raise ConfigError(f"{context}.{key}: required key is missing")
        family = table["family"]
        if family not in FAMILIES:
            raise ConfigError(
                f"{context}.family: expected one of {sorted(FAMILIES)}, got {family!r}"
            )
        signal = _as_float(table["signal"], f"{context}.signal")
        if not 0.0 <= signal <= 1.0:
            raise ConfigError(f"{context}.signal: must lie in [0, 1], got {signal}")
        n = _as_int(table["n"], f"{context}.n")
        if n < 4:
            raise ConfigError(f"{context}.n: need at least 4 observations, got {n}")
        reps = _as_int(table.get("reps", 100), f"{context}.reps")
        if reps < 1:
            raise ConfigError(f"{context}.reps: must be at least 1")
        experiments.append(ExperimentSpec(family, signal, n, reps))

    return ResolvedConfig(
        seed=seed,
        alpha=alpha,
        taus=taus,
        split_fraction=split_fraction,
        threads=threads,
        calibration=calibration,
        experiments=tuple(experiments),
    )


def _config_payload(cfg: ResolvedConfig) -> dict:
    return {
        "seed": cfg.seed,
        "alpha": cfg.alpha,
        "taus": list(cfg.taus),
        "split_fraction": cfg.split_fraction,
        "threads": cfg.threads,
        "calibration": {
            "bootstrap_reps": cfg.calibration.bootstrap_reps,
            "omega_cap": cfg.calibration.omega_cap,
            "omega_tolerance": cfg.calibration.omega_tolerance,
        },
        "experiments": [
            {"family": e.family, "signal": e.signal, "n": e.n, "reps": e.reps}
            for e in cfg.experiments
        ],
    }


def config_digest(cfg: ResolvedConfig) -> tuple[bytes, str]:
    """Canonical JSON encoding of a resolved config and its SHA-256 digest."""
    encoded = json.dumps(_config_payload(cfg), sort_keys=True, separators=(",", ":")).encode()
    return encoded, hashlib.sha256(encoded).hexdigest()


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    metrics_rows = []
    rates_rows = []
    for spec in cfg.experiments:
        sim = SimConfig(
            n=spec.n,
            taus=cfg.taus,
            alpha=cfg.alpha,
            reps=spec.reps,
            seed=cfg.seed,
            split_fraction=cfg.split_fraction,
            calibration=cfg.calibration,
        )
        metrics = run_experiment(FamilyConfig(spec.family, spec.signal), sim, threads=cfg.threads)
        metrics_rows.append(
            (
                spec.family,
                spec.signal,
                spec.n,
                cfg.alpha,
                spec.reps,
                metrics.rejection_rate,
                metrics.type2_rate,
                metrics.empirical_fdr,
            )
        )
        for tau, (mean_omega, se_omega) in zip(cfg.taus, metrics.mean_omega_per_tau):
            rates_rows.append((spec.family, spec.signal, spec.n, tau, mean_omega, se_omega))

    encoded, digest = config_digest(cfg)
    manifest = RunManifest(
        config_digest=digest,
        seed=cfg.seed,
        tool_version=__version__,
        timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"),
    )
    _write_csv(out_dir / "metrics.csv", METRICS_HEADER, metrics_rows)
    _write_csv(out_dir / "learning_rates.csv", RATES_HEADER, rates_rows)
    (out_dir / "config.json").write_bytes(encoded + b"\n")
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(
            {
                "config_digest": manifest.config_digest,
                "seed": manifest.seed,
                "tool_version": manifest.tool_version,
                "timestamp": manifest.timestamp,
            },
            fh,
            indent=2,
            sort_keys=True,
        )
        fh.write("\n")
    return 0


def _load_table(path: str) -> np.ndarray:
    """Read a numeric CSV, tolerating a single header line."""
    for skip in (0, 1):
        try:
            table = np.loadtxt(path, delimiter=",", skiprows=skip, ndmin=2)
        except OSError as exc:
            raise ConfigError(f"{path}: {exc}")
        except ValueError:
            continue
        if table.size:
            return table
    raise ConfigError(f"{path}: could not parse as a numeric CSV table")


def cmd_test(args: argparse.Namespace) -> int:
    alpha = args.alpha
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"--alpha: must lie strictly between 0 and 1, got {alpha}")
    if not 0.0 < args.split_fraction < 1.0:
        raise ConfigError(
            f"--split-fraction: must lie strictly between 0 and 1, got {args.split_fraction}"
        )
    if args.seed < 0:
        raise ConfigError("--seed: must be nonnegative")
    taus = parse_taus_flag(args.taus) if args.taus is not None else default_taus()

    table = _load_table(args.data)
    n, ncols = table.shape
    if n < 4:
        raise ConfigError(f"{args.data}: need at least 4 data rows, got {n}")
    if ncols < 2:
        raise ConfigError(f"{args.data}: need a response column plus at least one feature")
    target = args.target
    if not -ncols <= target < ncols:
        raise ConfigError(f"--target: column {target} out of range for {ncols} columns")
    target %= ncols
    response = table[:, target]
    features = np.delete(table, target, axis=1)
    design = np.column_stack([np.ones(n), features])
    try:
        check_design_rank(design)
    except SolverError as exc:
        raise ConfigError(f"{args.data}: rank-deficient design ({exc})")
    data = Dataset(design, response)
    null = NullSpec((1,))

    split = make_split(n, args.split_fraction, derive_seed(args.seed, 0))
    omegas = []
    log_values = []
    for t, tau in enumerate(taus):
        loss = CheckLoss(tau)
        calibration = CalibrationConfig(alpha=alpha, seed=derive_seed(args.seed, 1, t))
        rate = calibrate_omega(loss, data, null, calibration, args.split_fraction)
        result = gue_value(loss, data, split, null, rate.omega)
        omegas.append(rate.omega)
        log_values.append(result.log_gue)

    evalues = EValueSet.from_log_values(np.asarray(log_values))
    ebh_result = ebh(evalues, alpha)
    merged = merge(evalues)
    rejected = global_test(merged, alpha)
    discoveries = set(ebh_result.discoveries)

    if args.json:
        print(
            json.dumps(
                {
                    "alpha": alpha,
                    "taus": list(taus),
                    "omegas": omegas,
                    "log_gue": [float(v) for v in log_values],
                    "gue": [float(v) for v in evalues.values],
                    "discoveries": sorted(discoveries),
                    "merged": merged.value,
                    "reject": rejected,
                }
            )
        )
        return 0

    print(f"{'tau':>6} {'omega':>10} {'gue':>12} {'discovery':>10}")
    for t, tau in enumerate(taus):
        flag = "yes" if t in discoveries else "no"
        print(f"{tau:>6.3g} {omegas[t]:>10.4g} {evalues.values[t]:>12.5g} {flag:>10}")
    print(f"merged e-value: {merged.value:g}")
    decision = "reject" if rejected else "fail to reject"
    print(f"decision: {decision} (alpha={alpha:g})")
    return 0


def _parse_values(args: argparse.Namespace) -> np.ndarray:
    if args.file is not None:
        try:
            with open(args.file) as fh:
                tokens = fh.read().replace(",", " ").split()
        except OSError as exc:
            raise ConfigError(f"{args.file}: {exc}")
    else:
        tokens = list(args.values)
    if not tokens:
        raise ConfigError("no e-values given; pass them as arguments or via --file")
    values = []
    for tok in tokens:
        try:
            value = float(tok)
        except ValueError:
            raise ConfigError(f"could not parse e-value {tok!r}")
        if not math.isfinite(value) or value < 0.0:
            raise ConfigError(f"e-values must be finite and nonnegative, got {tok}")
        values.append(value)
    return np.asarray(values)


def cmd_ebh(args: argparse.Namespace) -> int:
    if not 0.0 < args.alpha < 1.0:
        raise ConfigError(f"--alpha: must lie strictly between 0 and 1, got {args.alpha}")
    evalues = EValueSet(_parse_values(args))
    result = ebh(evalues, args.alpha)
    ordered = [f"{v:g}" for v in result.transformed]
    print("transformed:", " ".join(ordered))
    print("discoveries:", " ".join(str(i) for i in result.discoveries))
    return 0


def cmd_merge(args: argparse.Namespace) -> int:
    evalues = EValueSet(_parse_values(args))
    print(f"merged: {merge(evalues).value:g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gue",
        description="Split-sample e-value tests for quantile regression slopes.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a Monte Carlo sweep from a config file")
    sim.add_argument("--config", required=True, help="TOML sweep definition")
    sim.add_argument("--out", required=True, help="output directory for CSVs and manifest")
    sim.add_argument("--seed", type=int, default=None, help="override the config seed")
    sim.add_argument("--alpha", type=float, default=None, help="override the config alpha")
    sim.add_argument("--taus", default=None, help="override quantiles (comma-separated)")
    sim.add_argument(
        "--split-fraction", type=float, default=None, help="override the split fraction"
    )
    sim.add_argument("--threads", type=int, default=None, help="replication worker threads")
    sim.set_defaults(func=cmd_simulate)

    test = sub.add_parser("test", help="test a numeric CSV dataset for a nonzero slope")
    test.add_argument("data", help="CSV file of numeric columns")
    test.add_argument(
        "--target", type=int, default=-1, help="response column index (default: last)"
    )
    test.add_argument("--alpha", type=float, default=0.1)
    test.add_argument("--taus", default=None, help="quantiles to test (comma-separated)")
    test.add_argument("--seed", type=int, default=0)
    test.add_argument("--split-fraction", type=float, default=0.5)
    test.add_argument("--json", action="store_true", help="machine-readable output")
    test.set_defaults(func=cmd_test)

    ebh_parser = sub.add_parser("ebh", help="run the e-BH procedure on raw e-values")
    ebh_parser.add_argument("values", nargs="*", help="e-values")
    ebh_parser.add_argument("--file", default=None, help="read e-values from a file")
    ebh_parser.add_argument("--alpha", type=float, default=0.1)
    ebh_parser.set_defaults(func=cmd_ebh)

    merge_parser = sub.add_parser("merge", help="merge e-values into one e-value")
    merge_parser.add_argument("values", nargs="*", help="e-values")
    merge_parser.add_argument("--file", default=None, help="read e-values from a file")
    merge_parser.set_defaults(func=cmd_merge)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ExperimentError, CalibrationError, SolverError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
