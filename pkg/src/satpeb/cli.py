"""Command-line interface: config ingestion, command dispatch, deterministic
execution, and result serialization.

Commands write four artifacts into the output directory: per-UE samples
(CSV or JSON), per-case summary statistics (JSON), box-plot rows (CSV), and a
run manifest recording the resolved configuration, calibration constants, and
table-asset checksums.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .channel import PINNED_TABLE_CHECKSUMS, table_checksums
from .config import (CALIBRATED_GNSS_PROCESSING_GAIN_DB,
                     CALIBRATED_LEO_DL_PROCESSING_GAIN_DB,
                     CALIBRATED_LEO_UL_PROCESSING_GAIN_DB, ScenarioConfig,
                     config_from_dict, config_to_dict, make_config, with_seed)
from .errors import ConfigError, SatPebError
from .estimator import validate
from .scenarios import RunBundle, run

SAMPLE_FIELDS = ("ue_lat_deg", "ue_lon_deg", "case_id", "peb_m", "gdop", "degenerate")
BOXPLOT_FIELDS = ("case_id", "mean", "median", "q1", "q3",
                  "whisker_lo", "whisker_hi", "n_outliers")


def parse_config(path: str | Path, default_variant: str | None = None) -> ScenarioConfig:
    """Load, validate, and default a JSON scenario config."""
    p = Path(path)
    if not p.exists():
        raise ConfigError("<config>", f"file not found: {p}")
    try:
        raw = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("<config>", f"malformed JSON: {exc}") from None
    return config_from_dict(raw, default_variant=default_variant)


def config_hash(config: ScenarioConfig) -> str:
    """sha256 of the canonical (key-sorted) resolved config; stable under key
    reordering in the source file."""
    canonical = json.dumps(config_to_dict(config), sort_keys=True,
                           separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(float(value))  # shortest round-trip decimal form
    return str(value)


def _sample_rows(bundle: RunBundle):
    for case_id in bundle.cases:
        for rec in bundle.cases[case_id].records:
            yield {
                "ue_lat_deg": math.degrees(rec.position.lat_rad),
                "ue_lon_deg": math.degrees(rec.position.lon_rad),
                "case_id": case_id,
                "peb_m": rec.peb_m,
                "gdop": rec.gdop,
                "degenerate": rec.degenerate,
            }


def write_samples_csv(bundle: RunBundle, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SAMPLE_FIELDS)
        for row in _sample_rows(bundle):
            writer.writerow([_fmt(row[k]) for k in SAMPLE_FIELDS])


def write_samples_json(bundle: RunBundle, path: Path) -> None:
    rows = list(_sample_rows(bundle))
    path.write_text(json.dumps(rows, indent=2) + "\n")


def write_summary(bundle: RunBundle, path: Path) -> None:
    payload = {case_id: dataclasses.asdict(stats)
               for case_id, stats in bundle.stats.items()}
    path.write_text(json.dumps(payload, indent=2) + "\n")


def write_boxplot(bundle: RunBundle, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(BOXPLOT_FIELDS)
        for case_id, s in bundle.stats.items():
            writer.writerow([
                case_id, _fmt(s.mean), _fmt(s.median), _fmt(s.q1), _fmt(s.q3),
                _fmt(s.whisker_lo), _fmt(s.whisker_hi), str(s.outlier_count),
            ])


def emit_manifest(out_dir: Path, configs: list[ScenarioConfig], seed: int,
                  outputs: list[str], errors: list[str],
                  started: str, finished: str) -> Path:
    checksums = table_checksums()
    warnings = [
        f"table asset {name} checksum mismatch (expected {expected})"
        for name, expected in PINNED_TABLE_CHECKSUMS.items()
        if checksums.get(name) != expected
    ]
    manifest = {
        "tool_version": __version__,
        "seed": seed,
        "started_utc": started,
        "finished_utc": finished,
        "config_hash": [config_hash(c) for c in configs],
        "resolved_config": [config_to_dict(c) for c in configs],
        "calibration": {
            "leo_dl_processing_gain_db": CALIBRATED_LEO_DL_PROCESSING_GAIN_DB,
            "leo_ul_processing_gain_db": CALIBRATED_LEO_UL_PROCESSING_GAIN_DB,
            "gnss_processing_gain_db": CALIBRATED_GNSS_PROCESSING_GAIN_DB,
        },
        "table_checksums": checksums,
        "outputs": outputs,
        "warnings": warnings,
        "errors": errors,
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _merge_bundles(bundles: list[RunBundle]) -> RunBundle:
    cases = {}
    stats = {}
    params = {"config": [], "table_checksums": None}
    for b in bundles:
        overlap = set(cases) & set(b.cases)
        if overlap:
            raise ValueError(f"duplicate case ids across bundles: {sorted(overlap)}")
        cases.update(b.cases)
        stats.update(b.stats)
        params["config"].append(b.params["config"])
        params["table_checksums"] = b.params["table_checksums"]
    return RunBundle(cases=cases, stats=stats, params=params)


def _scenario_configs(command: str, args) -> list[ScenarioConfig]:
    variant = {"single-leo": "single-leo", "multi-leo": "multi-leo",
               "gnss-leo": "gnss-leo"}[command]
    if args.config:
        config = parse_config(args.config, default_variant=variant)
        if command != "reproduce-figures" and config.variant != variant and not (
                command == "gnss-leo" and config.variant == "gnss-only"):
            raise ConfigError("variant",
                              f"config variant {config.variant!r} does not match "
                              f"command {command!r}")
        configs = [config]
    else:
        configs = [make_config(variant)]
    if args.seed is not None:
        configs = [with_seed(c, args.seed) for c in configs]
    return configs


def _run_and_write(configs: list[ScenarioConfig], args, out_dir: Path) -> list[str]:
    bundles = [run(c, workers=args.workers) for c in configs]
    bundle = _merge_bundles(bundles) if len(bundles) > 1 else bundles[0]
    outputs = []
    if args.format == "json":
        write_samples_json(bundle, out_dir / "samples.json")
        outputs.append("samples.json")
    else:
        write_samples_csv(bundle, out_dir / "samples.csv")
        outputs.append("samples.csv")
    write_summary(bundle, out_dir / "summary.json")
    outputs.append("summary.json")
    write_boxplot(bundle, out_dir / "boxplot.csv")
    outputs.append("boxplot.csv")
    return outputs


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat()


def execute(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    started = _utcnow()
    outputs: list[str] = []
    errors: list[str] = []
    configs: list[ScenarioConfig] = []
    status = 0
    try:
        if args.command == "validate":
            report = validate(n_trials=args.trials, seed=args.seed or 0)
            payload = dataclasses.asdict(report)
            (out_dir / "validation.json").write_text(json.dumps(payload, indent=2) + "\n")
            outputs.append("validation.json")
            print(f"validate: rmse={report.rmse_m:.3f} m peb={report.peb_m:.3f} m "
                  f"ratio={report.ratio:.3f} convergence={report.convergence_rate:.3f}")
        elif args.command == "reproduce-figures":
            seed = args.seed if args.seed is not None else 0
            configs = [
                with_seed(make_config("single-leo"), seed),
                with_seed(make_config("multi-leo"), seed),
                with_seed(make_config("gnss-leo"), seed),
                with_seed(make_config("gnss-only"), seed),
            ]
            outputs = _run_and_write(configs, args, out_dir)
        else:
            configs = _scenario_configs(args.command, args)
            outputs = _run_and_write(configs, args, out_dir)
    except (SatPebError, OSError, ValueError) as exc:
        errors.append(str(exc))
        print(f"error: {exc}", file=sys.stderr)
        status = 1

    seed = args.seed if args.seed is not None else (configs[0].seed if configs else 0)
    manifest = emit_manifest(out_dir, configs, seed, outputs, errors,
                             started, _utcnow())
    outputs.append(manifest.name)
    return status


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="satpeb",
        description="Position error bounds for LEO/GNSS positioning scenarios.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON scenario config file")
    common.add_argument("--seed", type=int, default=None,
                        help="random seed (overrides the config)")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--format", choices=("csv", "json"), default="csv",
                        help="samples serialization format")
    common.add_argument("--workers", type=int, default=1,
                        help="parallel workers (performance only; never "
                             "affects results)")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("single-leo", parents=[common],
                   help="single-LEO RTT sweep over measurement times")
    sub.add_parser("multi-leo", parents=[common],
                   help="hexagonal LEO grid TDOA cases (3/4 active, +-RTT)")
    sub.add_parser("gnss-leo", parents=[common],
                   help="2 GNSS + 1 LEO hybrid sweep (or gnss-only via config)")
    val = sub.add_parser("validate", parents=[common],
                         help="estimator bound-achievability check")
    val.add_argument("--trials", type=int, default=2000)
    sub.add_parser("reproduce-figures", parents=[common],
                   help="run all scenario cases in one go")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return execute(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
