"""Command-line front end.

Subcommands: simulate (ratio tables), screen (t-statistic preselection on a
wide CSV), fit (selection + ridge/GCV on a wide CSV), nowcast (recursive
weekly evaluation of a panel), verify (empirical checks of the method's
statistical behaviour).

Exit codes: 0 success, 1 verification failure, 2 configuration or data error,
3 numerical breakdown. Human-readable tables go to stdout, machine-readable
CSVs plus a key=value manifest to the output directory, logs to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import secrets
import sys
from pathlib import Path

import numpy as np

from . import __version__, bridge, dataset, mc
from .errors import (
    ConfigurationError,
    NumericalBreakdownError,
    RidgenowError,
    VerificationFailure,
)
from .manifest import write_manifest
from .ridge import AlphaGrid, ridge_after_selection
from .screen import ScreenConfig, screen

log = logging.getLogger("ridgenow")

EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def main(argv: list[str] | None = None) -> int:
    parser, subparsers = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.config:
        _apply_config_file(parser, subparsers[args.subcommand], args, argv)
    if args.seed is None:
        args.seed = secrets.randbits(31)
        log.info("no seed given; materialised seed=%d", args.seed)
    try:
        return args.func(args)
    except VerificationFailure as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFICATION
    except NumericalBreakdownError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (RidgenowError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def _apply_config_file(parser, subparser, args, argv) -> None:
    # flags beat file values: file entries become defaults, then a re-parse
    # of the original argv lets explicit flags win
    with open(args.config, encoding="utf-8") as fh:
        overrides = json.load(fh)
    unknown = [k for k in overrides if not hasattr(args, k)]
    if unknown:
        raise SystemExit(f"error: unknown keys in config file: {unknown}")
    subparser.set_defaults(**overrides)
    fresh = parser.parse_args(argv)
    for key, value in vars(fresh).items():
        setattr(args, key, value)


def _build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        prog="ridgenow",
        description="Preselection + ridge/GCV nowcasting toolkit",
    )
    parser.add_argument("--version", action="version", version=f"ridgenow {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    registry: dict[str, argparse.ArgumentParser] = {}

    def _sub(name: str, **kw) -> argparse.ArgumentParser:
        registry[name] = sub.add_parser(name, **kw)
        return registry[name]

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="RNG seed (auto if absent)")
    common.add_argument("--out-dir", type=Path, default=Path("ridgenow_out"))
    common.add_argument("--threads", type=int, default=1, help="worker processes")
    common.add_argument("--config", type=Path, default=None, help="JSON file of flag defaults")
    common.add_argument("--verbose", action="store_true")

    p = _sub("simulate", parents=[common], help="reproduce the simulation ratio tables")
    p.add_argument("--preset", choices=["paper-tables", "custom"], default="paper-tables")
    p.add_argument("--reps", type=int, default=mc.DEFAULT_REPLICATIONS)
    p.add_argument("--oos-fraction", type=float, default=0.5)
    p.add_argument("--delta-scale", type=float, default=0.2, help="custom preset only")
    p.add_argument("--psi", choices=mc.PSI_KINDS, default="identity", help="custom preset only")
    p.add_argument("--N", type=int, default=200)
    p.add_argument("--T", type=int, default=150)
    p.add_argument("--s", type=int, default=105)
    p.set_defaults(func=cmd_simulate)

    p = _sub("screen", parents=[common], help="preselect candidates from a wide CSV")
    _add_wide_csv_flags(p)
    p.set_defaults(func=cmd_screen)

    p = _sub("fit", parents=[common], help="selection + ridge/GCV fit from a wide CSV")
    _add_wide_csv_flags(p)
    _add_grid_flags(p)
    p.add_argument("--no-standardize", action="store_true")
    p.add_argument("--no-penalize-intercept", action="store_true")
    p.set_defaults(func=cmd_fit)

    p = _sub("nowcast", parents=[common], help="recursive weekly evaluation of a panel")
    p.add_argument("--data", type=Path, required=True, help="long CSV: date,series_id,value")
    p.add_argument("--metadata", type=Path, required=True)
    p.add_argument("--target", required=True, help="series_id of the quarterly target")
    p.add_argument("--calendar", default="ea", help="ea|us|de|metadata|<csv path>")
    p.add_argument("--oos-start", required=True, help="first out-of-sample quarter, e.g. 2014Q1")
    p.add_argument("--variants", default=",".join(bridge.DEFAULT_VARIANTS))
    p.add_argument("--tau", type=float, default=0.05)
    p.add_argument("--weeks", default="1-13", help="e.g. 5 or 1-13 or 1,5,13")
    p.add_argument("--training-gap", type=int, default=2)
    p.add_argument("--weekly-aggregation", choices=["mean", "latest"], default="mean")
    p.add_argument("--lagged-target", action="store_true")
    _add_grid_flags(p)
    p.set_defaults(func=cmd_nowcast)

    p = _sub("verify", parents=[common], help="empirical checks of the methodology")
    p.add_argument(
        "--only",
        choices=["sure-screening", "gcv-oos", "error-scaling"],
        default=None,
        help="run a single check",
    )
    p.add_argument("--reps-screening", type=int, default=200)
    p.add_argument("--reps-gcv", type=int, default=100)
    p.add_argument("--reps-scaling", type=int, default=mc.DEFAULT_REPLICATIONS)
    p.add_argument("--sure-freq-min", type=float, default=0.95)
    p.add_argument("--mono-slack", type=float, default=0.03)
    p.add_argument("--regret-ratio-max", type=float, default=1.0)
    p.add_argument("--ci-multiplier", type=float, default=2.0)
    p.set_defaults(func=cmd_verify)

    return parser, registry


def _add_wide_csv_flags(p) -> None:
    p.add_argument("--data", type=Path, required=True, help="wide CSV with one row per period")
    p.add_argument("--target-col", required=True)
    p.add_argument("--official-cols", default="", help="comma list; intercept added automatically")
    p.add_argument("--candidate-cols", default="", help="comma list; default: all other columns")
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--threshold", type=float, default=None)


def _add_grid_flags(p) -> None:
    p.add_argument("--alpha-lo", type=float, default=1e-6)
    p.add_argument("--alpha-hi", type=float, default=1e2)
    p.add_argument("--alpha-count", type=int, default=100)
    p.add_argument("--alpha-spacing", choices=["log", "linear"], default="log")


def _grid_from(args) -> AlphaGrid:
    return AlphaGrid(args.alpha_lo, args.alpha_hi, args.alpha_count, args.alpha_spacing)


def _screen_cfg(args) -> ScreenConfig:
    if args.tau is None and args.threshold is None:
        return ScreenConfig(tau=0.05)
    return ScreenConfig(tau=args.tau, threshold=args.threshold)


def _prepare_out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _base_manifest(args) -> dict[str, object]:
    skip = {"func", "config", "verbose"}
    entries = {
        f"config.{k}": v for k, v in vars(args).items() if k not in skip and v is not None
    }
    entries["package_version"] = __version__
    entries["calendar_preset_version"] = bridge.CALENDAR_PRESET_VERSION
    return entries


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    out = _prepare_out_dir(args)
    if args.reps == 1:
        log.warning("one replication: MC standard errors are undefined")
    if args.preset == "paper-tables":
        for delta in (0.2, 0.8):
            table = mc.simulation_table(
                delta,
                args.reps,
                args.seed,
                oos_fraction=args.oos_fraction,
                workers=args.threads,
            )
            name = f"table_delta{str(delta).replace('.', '')}"
            _write_table_csv(out / f"{name}.csv", table)
            print(f"delta = {delta}")
            print(_table_text(table))
    else:
        cfg = mc.DgpConfig(
            args.N, args.T, args.s, delta_scale=args.delta_scale, psi=args.psi, seed=args.seed
        )
        report = mc.run_mc(
            cfg, args.reps, args.oos_fraction, workers=args.threads
        )
        _write_report_csv(out / "ratios.csv", report)
        print(_report_text(report))
    write_manifest(out / "manifest.txt", _base_manifest(args))
    return EXIT_OK


def _write_table_csv(path: Path, table: mc.SimulationTable) -> None:
    rows = table.rows()
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(v) for k, v in row.items()})


def _fmt(v: object) -> object:
    return f"{v:.10g}" if isinstance(v, float) else v


def _table_text(table: mc.SimulationTable) -> str:
    lines = []
    for psi in table.psi_kinds:
        lines.append(f"  Psi = {psi}")
        header = "  FDR    " + "".join(
            f"N{n}/T{t}/s{s}".ljust(22) for (n, t, s) in table.configs
        )
        lines.append(header)
        lines.append("         " + "MSER      MSFER     " * len(table.configs))
        for i, fdr in enumerate(table.fdr_levels):
            cells = []
            for nts in table.configs:
                rep = table.blocks[psi][nts]
                cells.append(f"{rep.mser[i]:<10.4f}{rep.msfer[i]:<12.4f}")
            lines.append(f"  {fdr * 100:<5.3g}%".ljust(9) + "".join(cells))
        lines.append("")
    return "\n".join(lines)


def _write_report_csv(path: Path, report: mc.McReport) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["fdr", "in_mse", "oos_mse", "mser", "msfer", "mser_se", "msfer_se"])
        for i, fdr in enumerate(report.fdr_levels):
            writer.writerow(
                [
                    _fmt(float(fdr)),
                    _fmt(float(report.in_mse[i])),
                    _fmt(float(report.oos_mse[i])),
                    _fmt(float(report.mser[i])),
                    _fmt(float(report.msfer[i])),
                    _fmt(float(report.mser_se[i])),
                    _fmt(float(report.msfer_se[i])),
                ]
            )


def _report_text(report: mc.McReport) -> str:
    c = report.config
    lines = [
        f"  config N={c.N} T={c.T} s={c.s} delta={c.delta_scale} psi={c.psi} "
        f"vs baseline N={report.baseline_config.N} T={report.baseline_config.T} "
        f"s={report.baseline_config.s}",
        "  FDR      MSER      MSFER     (se)",
    ]
    for i, fdr in enumerate(report.fdr_levels):
        lines.append(
            f"  {fdr * 100:<7.3g}%{report.mser[i]:<10.4f}{report.msfer[i]:<10.4f}"
            f"({report.mser_se[i]:.4f}, {report.msfer_se[i]:.4f})"
        )
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# screen / fit on wide CSVs
# ---------------------------------------------------------------------------

def _load_wide_csv(args) -> tuple[np.ndarray, np.ndarray, np.ndarray, list[str]]:
    with open(args.data, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ConfigurationError(f"{args.data}: empty file")
        rows = list(reader)
    columns = list(reader.fieldnames)
    if args.target_col not in columns:
        raise ConfigurationError(f"target column {args.target_col!r} not in {args.data}")
    officials = [c for c in args.official_cols.split(",") if c]
    for c in officials:
        if c not in columns:
            raise ConfigurationError(f"official column {c!r} not in {args.data}")
    if args.candidate_cols:
        candidates = [c for c in args.candidate_cols.split(",") if c]
        for c in candidates:
            if c not in columns:
                raise ConfigurationError(f"candidate column {c!r} not in {args.data}")
    else:
        taken = {args.target_col, *officials}
        candidates = [c for c in columns if c not in taken]

    def col(name: str) -> np.ndarray:
        try:
            return np.array([float(r[name]) for r in rows])
        except (TypeError, ValueError):
            raise ConfigurationError(f"non-numeric value in column {name!r}") from None

    y = col(args.target_col)
    official_mat = np.column_stack(
        [np.ones(len(rows))] + [col(c) for c in officials]
    )
    cand_mat = (
        np.column_stack([col(c) for c in candidates])
        if candidates
        else np.empty((len(rows), 0))
    )
    return y, official_mat, cand_mat, candidates


def cmd_screen(args) -> int:
    out = _prepare_out_dir(args)
    y, officials, candidates, names = _load_wide_csv(args)
    result = screen(y, officials, candidates, _screen_cfg(args))
    with (out / "tstats.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["candidate", "tstat", "selected"])
        for j, name in enumerate(names):
            writer.writerow([name, _fmt(float(result.tstats[j])), int(j in result.selected)])
    write_manifest(out / "manifest.txt", _base_manifest(args))
    kept = [names[j] for j in result.selected]
    print(f"threshold {result.threshold:.4f}; kept {len(kept)} of {len(names)} candidates")
    for name in kept:
        print(f"  {name}")
    return EXIT_OK


def cmd_fit(args) -> int:
    out = _prepare_out_dir(args)
    y, officials, candidates, names = _load_wide_csv(args)
    fit = ridge_after_selection(
        y,
        officials,
        candidates,
        _screen_cfg(args),
        _grid_from(args),
        standardize=not args.no_standardize,
        penalize_intercept=not args.no_penalize_intercept,
    )
    labels = ["intercept"] + [
        c for c in args.official_cols.split(",") if c
    ] + list(names)
    with (out / "coefficients.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["column", "coefficient", "selected"])
        for j, label in enumerate(labels):
            writer.writerow([label, _fmt(float(fit.coefficients[j])), int(j in fit.selected)])
    with (out / "gcv_path.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["alpha", "gcv"])
        for alpha, value in fit.gcv_path:
            writer.writerow([_fmt(alpha), _fmt(value)])
    write_manifest(out / "manifest.txt", _base_manifest(args))
    print(f"alpha {fit.alpha:.6g}, gcv {fit.gcv_value:.6g}, "
          f"{int(len(fit.selected))} active columns of {len(labels)}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# nowcast
# ---------------------------------------------------------------------------

def _parse_weeks(spec: str) -> tuple[int, ...]:
    weeks: list[int] = []
    for part in spec.split(","):
        part = part.strip()
        if "-" in part:
            lo, hi = part.split("-", 1)
            weeks.extend(range(int(lo), int(hi) + 1))
        elif part:
            weeks.append(int(part))
    if not weeks or any(not 1 <= w <= 13 for w in weeks):
        raise ConfigurationError(f"bad week specification {spec!r}")
    return tuple(dict.fromkeys(weeks))


def _load_calendar(args, panel: dataset.Panel) -> bridge.ReleaseCalendar:
    if args.calendar in ("ea", "us", "de"):
        return bridge.preset_calendar(args.calendar, panel)
    if args.calendar == "metadata":
        return bridge.calendar_from_panel(panel)
    path = Path(args.calendar)
    if not path.exists():
        raise ConfigurationError(f"calendar {args.calendar!r} is not a preset or a file")
    entries: dict[str, list[tuple[int, int]]] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        needed = {"series_id", "sub_period", "availability_week"}
        if reader.fieldnames is None or not needed.issubset(reader.fieldnames):
            raise ConfigurationError(f"{path.name}: calendar needs columns {sorted(needed)}")
        for row in reader:
            entries.setdefault(row["series_id"], []).append(
                (int(row["sub_period"]), int(row["availability_week"]))
            )
    return bridge.ReleaseCalendar(
        entries={k: tuple(v) for k, v in entries.items()}, name=path.stem
    )


def cmd_nowcast(args) -> int:
    out = _prepare_out_dir(args)
    schema = dataset.PanelSchema(target_id=args.target, metadata=args.metadata)
    panel = dataset.load_panel(args.data, schema)
    calendar = _load_calendar(args, panel)
    variants = tuple(v for v in args.variants.split(",") if v)
    comparison = bridge.compare_variants(
        panel,
        calendar,
        variants,
        ScreenConfig(tau=args.tau),
        _grid_from(args),
        oos_start=dataset.parse_quarter(args.oos_start),
        training_gap=args.training_gap,
        weeks=_parse_weeks(args.weeks),
        weekly_aggregation=args.weekly_aggregation,
        include_lagged_target=args.lagged_target,
    )
    comparison.write_csv(out / "rmsfe.csv")
    bridge.write_nowcast_paths(comparison.runs, out / "nowcasts.csv")
    write_manifest(out / "manifest.txt", _base_manifest(args))
    print(comparison.to_text())
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def cmd_verify(args) -> int:
    out = _prepare_out_dir(args)
    checks = []
    failures = []
    run_all = args.only is None

    if run_all or args.only == "sure-screening":
        report = mc.sure_screening_sweep(replications=args.reps_screening, seed=args.seed)
        freqs = report.frequencies
        mono = all(
            freqs[i + 1] >= freqs[i] - args.mono_slack for i in range(len(freqs) - 1)
        )
        final = freqs[-1] >= args.sure_freq_min
        ok = mono and final
        detail = (
            "coverage "
            + ", ".join(f"T={t}: {f:.3f}" for t, f in zip(report.t_values, freqs))
            + f" (min final {args.sure_freq_min}, slack {args.mono_slack})"
        )
        checks.append(("sure-screening", ok, detail))
        if not ok:
            failures.append(f"sure-screening: {detail}")

    if run_all or args.only == "gcv-oos":
        report = mc.verify_gcv_oos(replications=args.reps_gcv, seed=args.seed)
        t_lo, t_hi = report.t_values[0], report.t_values[-1]
        nonneg = all(report.stats[t].min_regret >= 0.0 for t in report.t_values)
        r_lo, r_hi = report.median_regret(t_lo), report.median_regret(t_hi)
        g_lo, g_hi = report.median_gap(t_lo), report.median_gap(t_hi)
        regret_ok = r_hi < args.regret_ratio_max * r_lo
        gap_ok = g_hi < args.regret_ratio_max * g_lo
        ok = nonneg and regret_ok and gap_ok
        detail = (
            f"median regret T={t_lo}: {r_lo:.4f} -> T={t_hi}: {r_hi:.4f}; "
            f"median |GCV-rho2| {g_lo:.4f} -> {g_hi:.4f}; min regret >= 0: {nonneg}"
        )
        checks.append(("gcv-oos", ok, detail))
        if not ok:
            failures.append(f"gcv-oos: {detail}")

    if run_all or args.only == "error-scaling":
        report = mc.verify_error_scaling(
            replications=args.reps_scaling,
            seed=args.seed,
            workers=args.threads,
            ci_multiplier=args.ci_multiplier,
        )
        for finding in report.findings:
            if not finding.evaluated:
                continue
            checks.append((f"error-scaling/{finding.name}", finding.passed, finding.detail))
            if not finding.passed:
                failures.append(f"error-scaling/{finding.name}: {finding.detail}")

    with (out / "verify_report.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["check", "passed", "detail"])
        for name, ok, detail in checks:
            writer.writerow([name, int(ok), detail])
    write_manifest(out / "manifest.txt", _base_manifest(args))

    for name, ok, detail in checks:
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    if failures:
        print(f"{len(failures)} check(s) failed", file=sys.stderr)
        return EXIT_VERIFICATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
