"""Weekly bridge models and the recursive pseudo-real-time evaluation.

A quarter is thirteen weeks. For each week w there is one model M(w) whose
regressors are the within-quarter aggregates available by that week: weekly
alternative series enter as the mean of weeks 1..w, monthly official series as
the mean of the months already released, and anything not yet released is
masked out of the design (its coefficient is identically zero).

The evaluation re-estimates every model at each out-of-sample quarter on an
expanding window that stops ``training_gap`` quarters earlier, mimicking the
target's own publication delay.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .dataset import (
    MONTHS_PER_QUARTER,
    WEEKS_PER_QUARTER,
    Observation,
    Panel,
    Series,
    quarter_label,
)
from .errors import ConfigurationError, DataGapError, InsufficientSampleError
from .ridge import AlphaGrid, fit_gcv_pipeline
from .screen import ScreenConfig, screen

CALENDAR_PRESET_VERSION = "1"

VARIANTS = (
    "full_no_screen",
    "ridge_after_selection",
    "alt_only_screened",
    "alt_only_no_screen",
    "officials_only",
)
DEFAULT_VARIANTS = (
    "full_no_screen",
    "ridge_after_selection",
    "alt_only_screened",
    "officials_only",
)
_NEEDS_OFFICIALS = ("full_no_screen", "ridge_after_selection", "officials_only")
_USES_ALT = ("full_no_screen", "ridge_after_selection", "alt_only_screened", "alt_only_no_screen")
_SCREENED = ("ridge_after_selection", "alt_only_screened")

# group release patterns per preset: month of quarter -> availability week
_PRESET_SOFT = ((1, 5), (2, 9), (3, 13))
_PRESETS: dict[str, dict[str, tuple[tuple[int, int], ...]]] = {
    "ea": {"soft": _PRESET_SOFT, "hard": ((1, 11),)},
    "us": {"soft": _PRESET_SOFT, "hard": ((1, 7), (2, 11))},
    "de": {"soft": _PRESET_SOFT, "hard": ((1, 11),)},
}


@dataclass(frozen=True)
class ReleaseCalendar:
    """Availability weeks per series: sub-period -> week 1..13 of the quarter."""

    entries: Mapping[str, tuple[tuple[int, int], ...]]
    name: str = "custom"
    version: str = CALENDAR_PRESET_VERSION

    def __post_init__(self) -> None:
        for sid, pairs in self.entries.items():
            weeks = [w for _, w in pairs]
            if any(not 1 <= w <= WEEKS_PER_QUARTER for w in weeks):
                raise ConfigurationError(f"calendar {sid!r}: availability weeks outside 1..13")
            if weeks != sorted(weeks):
                raise ConfigurationError(f"calendar {sid!r}: availability weeks must not decrease")
            if len(pairs) > MONTHS_PER_QUARTER and len({s for s, _ in pairs}) <= MONTHS_PER_QUARTER:
                raise ConfigurationError(f"calendar {sid!r}: more entries than sub-periods")

    def available_subs(self, series_id: str, week: int) -> tuple[int, ...]:
        pairs = self.entries.get(series_id, ())
        return tuple(sub for sub, avail in pairs if avail <= week)


def calendar_from_panel(panel: Panel) -> ReleaseCalendar:
    """Calendar implied by each series' own release metadata."""
    entries: dict[str, tuple[tuple[int, int], ...]] = {}
    for s in panel.predictors:
        entries[s.id] = _series_schedule(s, override=None)
    return ReleaseCalendar(entries=entries, name="panel-metadata")


def preset_calendar(name: str, panel: Panel) -> ReleaseCalendar:
    """One of the built-in national release patterns applied to a panel."""
    try:
        pattern = _PRESETS[name.lower()]
    except KeyError:
        raise ConfigurationError(
            f"unknown calendar preset {name!r}; have {sorted(_PRESETS)}"
        ) from None
    entries: dict[str, tuple[tuple[int, int], ...]] = {}
    for s in panel.predictors:
        entries[s.id] = _series_schedule(s, override=pattern.get(s.group))
    return ReleaseCalendar(entries=entries, name=name.lower())


def _series_schedule(
    series: Series, override: tuple[tuple[int, int], ...] | None
) -> tuple[tuple[int, int], ...]:
    if series.frequency == "weekly":
        return tuple((w, w) for w in range(1, WEEKS_PER_QUARTER + 1))
    if series.frequency == "monthly":
        if override is not None:
            return tuple(override)
        sched = []
        for m in range(1, MONTHS_PER_QUARTER + 1):
            week = series.availability_week(m)
            if week is not None:
                sched.append((m, week))
        if not sched:
            raise ConfigurationError(
                f"series {series.id!r}: no within-quarter availability"
            )
        return tuple(sched)
    raise ConfigurationError(
        f"series {series.id!r}: quarterly predictors are not supported in week designs"
    )


# ---------------------------------------------------------------------------
# week designs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeekDesign:
    """Design matrix of model M(week) over a list of quarters.

    The first column is the intercept. ``columns`` pairs each column with its
    aggregation descriptor; ``active_mask`` is False for columns whose series
    has released nothing by ``week`` (their values are NaN and their
    coefficients are pinned at zero downstream).
    """

    week: int
    quarters: tuple[int, ...]
    columns: tuple[tuple[str, str], ...]
    X: np.ndarray
    active_mask: np.ndarray

    def active_columns(self, groups: Iterable[str] | None = None) -> np.ndarray:
        """Indices of active columns, optionally restricted to series groups."""
        keep = np.array(self.active_mask, dtype=bool)
        if groups is not None:
            wanted = set(groups)
            for j, (sid, _) in enumerate(self.columns):
                if sid != "const" and self._group(sid) not in wanted:
                    keep[j] = False
                if sid == "const":
                    keep[j] = False
        return np.nonzero(keep)[0]

    def _group(self, sid: str) -> str:
        return self.__dict__["_groups"][sid]


def build_week_design(
    panel: Panel,
    calendar: ReleaseCalendar,
    week: int,
    quarters: Sequence[int],
    *,
    weekly_aggregation: str = "mean",
) -> WeekDesign:
    """Aggregate every predictor as seen at week ``week`` of each quarter."""
    if not 1 <= week <= WEEKS_PER_QUARTER:
        raise ConfigurationError(f"week must be 1..13, got {week}")
    if weekly_aggregation not in ("mean", "latest"):
        raise ConfigurationError(f"unknown weekly aggregation {weekly_aggregation!r}")
    quarters = tuple(quarters)
    lo, hi = panel.quarter_range
    for q in quarters:
        if not lo <= q <= hi:
            raise ConfigurationError(f"quarter {quarter_label(q)} outside the panel range")

    columns: list[tuple[str, str]] = [("const", "intercept")]
    data: list[np.ndarray] = [np.ones(len(quarters))]
    active: list[bool] = [True]
    groups: dict[str, str] = {}
    for s in panel.predictors:
        groups[s.id] = s.group
        subs = calendar.available_subs(s.id, week)
        if s.id not in calendar.entries:
            raise ConfigurationError(f"series {s.id!r} missing from the calendar")
        if s.frequency == "weekly" and weekly_aggregation == "latest" and subs:
            subs = (subs[-1],)
        if not subs:
            columns.append((s.id, "unavailable"))
            data.append(np.full(len(quarters), np.nan))
            active.append(False)
            continue
        columns.append((s.id, _descriptor(s.frequency, subs, weekly_aggregation)))
        col = np.empty(len(quarters))
        for i, q in enumerate(quarters):
            vals = []
            for sub in subs:
                v = s.value_at(q, sub)
                if v is None:
                    raise DataGapError(s.id, quarter_label(q), week)
                vals.append(v)
            col[i] = float(np.mean(vals))
        data.append(col)
        active.append(True)

    design = WeekDesign(
        week=week,
        quarters=quarters,
        columns=tuple(columns),
        X=np.column_stack(data),
        active_mask=np.array(active, dtype=bool),
    )
    object.__setattr__(design, "_groups", groups)
    return design


def _descriptor(frequency: str, subs: tuple[int, ...], weekly_aggregation: str) -> str:
    unit = "w" if frequency == "weekly" else "m"
    if len(subs) == 1:
        return f"value({unit}{subs[0]})"
    if frequency == "weekly" and weekly_aggregation == "mean":
        return f"mean(w1..w{subs[-1]})"
    return f"mean({','.join(f'{unit}{s}' for s in subs)})"


# ---------------------------------------------------------------------------
# recursive evaluation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NowcastRun:
    """Recursive out-of-sample nowcasts of one model variant."""

    model_variant: str
    oos_quarters: tuple[int, ...]
    weeks: tuple[int, ...]
    per_week_rmsfe: np.ndarray
    per_quarter_nowcasts: np.ndarray  # quarters x weeks
    actuals: np.ndarray

    @property
    def errors(self) -> np.ndarray:
        return self.per_quarter_nowcasts - self.actuals[:, None]


def nowcast_recursive(
    panel: Panel,
    calendar: ReleaseCalendar,
    variant: str,
    screen_cfg: ScreenConfig | None = None,
    grid: AlphaGrid | None = None,
    *,
    oos_start: int,
    training_gap: int = 2,
    weeks: Sequence[int] = tuple(range(1, WEEKS_PER_QUARTER + 1)),
    weekly_aggregation: str = "mean",
    standardize: bool = True,
    penalize_intercept: bool = True,
    include_lagged_target: bool = False,
    min_training_quarters: int = 12,
) -> NowcastRun:
    """Expanding-window pseudo-real-time evaluation of one variant.

    For each out-of-sample quarter q and week w the model is re-estimated on
    all quarters up to q - training_gap and the nowcast is the fit applied to
    quarter q's week-w regressors.
    """
    if variant not in VARIANTS:
        raise ConfigurationError(f"unknown variant {variant!r}; have {VARIANTS}")
    grid = grid or AlphaGrid()
    screen_cfg = screen_cfg or ScreenConfig(tau=0.05)
    lo, hi = panel.quarter_range
    if not lo <= oos_start <= hi:
        raise ConfigurationError(
            f"oos_start {quarter_label(oos_start)} outside panel range "
            f"{quarter_label(lo)}..{quarter_label(hi)}"
        )
    if training_gap < 1:
        raise ConfigurationError("training_gap must be at least 1")
    first_train_count = oos_start - training_gap - lo + 1
    if include_lagged_target:
        first_train_count -= training_gap
    if first_train_count < min_training_quarters:
        raise ConfigurationError(
            f"only {max(first_train_count, 0)} training quarters before "
            f"{quarter_label(oos_start)}; need at least {min_training_quarters}"
        )
    has_officials = any(s.group in ("soft", "hard") for s in panel.predictors)
    has_alt = any(s.group == "alt" for s in panel.predictors)
    if variant == "officials_only" and not has_officials:
        raise ConfigurationError("variant officials_only needs official series in the panel")
    if variant in _USES_ALT and not has_alt:
        raise ConfigurationError(f"variant {variant} needs alternative series in the panel")

    quarters = panel.quarters
    oos_quarters = tuple(q for q in quarters if q >= oos_start)
    weeks = tuple(int(w) for w in weeks)
    y_all = panel.target_values(quarters)
    lag = _lagged_target_column(panel, quarters, training_gap) if include_lagged_target else None
    nowcasts = np.empty((len(oos_quarters), len(weeks)))

    for wi, w in enumerate(weeks):
        design = build_week_design(
            panel, calendar, w, quarters, weekly_aggregation=weekly_aggregation
        )
        official_cols = design.active_columns(groups=("soft", "hard"))
        alt_cols = design.active_columns(groups=("alt",))
        if variant == "officials_only" or variant not in _USES_ALT:
            cand_cols = np.empty(0, dtype=int)
        else:
            cand_cols = alt_cols
        if variant in ("alt_only_screened", "alt_only_no_screen"):
            official_cols = np.empty(0, dtype=int)

        X = design.X
        for qi, q in enumerate(oos_quarters):
            train_rows = np.array([i for i, tq in enumerate(quarters) if tq <= q - training_gap])
            nowcasts[qi, wi] = _estimate_and_predict(
                X,
                y_all,
                train_rows,
                int(np.nonzero(np.array(quarters) == q)[0][0]),
                official_cols,
                cand_cols,
                variant,
                screen_cfg,
                grid,
                standardize,
                penalize_intercept,
                lag,
            )

    actuals = panel.target_values(oos_quarters)
    errors = nowcasts - actuals[:, None]
    rmsfe = np.sqrt(np.mean(errors**2, axis=0))
    return NowcastRun(
        model_variant=variant,
        oos_quarters=oos_quarters,
        weeks=weeks,
        per_week_rmsfe=rmsfe,
        per_quarter_nowcasts=nowcasts,
        actuals=actuals,
    )


def _lagged_target_column(panel: Panel, quarters: Sequence[int], gap: int) -> np.ndarray:
    col = np.full(len(quarters), np.nan)
    for i, q in enumerate(quarters):
        v = panel.target.value_at(q - gap, 0)
        if v is not None:
            col[i] = v
    return col


def _estimate_and_predict(
    X: np.ndarray,
    y_all: np.ndarray,
    train_rows: np.ndarray,
    predict_row: int,
    official_cols: np.ndarray,
    cand_cols: np.ndarray,
    variant: str,
    screen_cfg: ScreenConfig,
    grid: AlphaGrid,
    standardize: bool,
    penalize_intercept: bool,
    lagged_target: np.ndarray | None,
) -> float:
    base_cols = np.concatenate([[0], official_cols]).astype(int)  # intercept first
    officials = X[:, base_cols]
    if lagged_target is not None:
        officials = np.column_stack([officials, lagged_target])
        usable = ~np.isnan(officials[train_rows]).any(axis=1)
        train_rows = train_rows[usable]
    candidates = X[:, cand_cols.astype(int)] if cand_cols.size else np.empty((X.shape[0], 0))

    y_tr = y_all[train_rows]
    off_tr = officials[train_rows]
    cand_tr = candidates[train_rows]
    n_min = off_tr.shape[1] + 2
    if len(train_rows) < max(n_min, 2):
        raise InsufficientSampleError(
            f"{len(train_rows)} training quarters cannot support {off_tr.shape[1]} officials"
        )

    if variant in _SCREENED and cand_tr.shape[1] > 0:
        result = screen(y_tr, off_tr, cand_tr, screen_cfg)
        picked = result.selected
    else:
        picked = np.arange(cand_tr.shape[1])

    design_tr = np.column_stack([off_tr, cand_tr[:, picked]])
    fit = fit_gcv_pipeline(
        design_tr, y_tr, grid, standardize=standardize, penalize_intercept=penalize_intercept
    )
    row = np.concatenate([officials[predict_row], candidates[predict_row, picked]])
    return float(row @ fit.coefficients)


# ---------------------------------------------------------------------------
# variant comparison
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VariantComparison:
    """RMSFE per variant and week, with the per-week minima flagged."""

    variants: tuple[str, ...]
    weeks: tuple[int, ...]
    rmsfe: np.ndarray  # variants x weeks
    runs: Mapping[str, NowcastRun]

    @property
    def best_mask(self) -> np.ndarray:
        return self.rmsfe == self.rmsfe.min(axis=0, keepdims=True)

    def to_text(self) -> str:
        width = max(len(v) for v in self.variants) + 2
        header = "variant".ljust(width) + "".join(f"M{w:<9}" for w in self.weeks)
        lines = [header, "-" * len(header)]
        for i, v in enumerate(self.variants):
            cells = []
            for j in range(len(self.weeks)):
                mark = "*" if self.best_mask[i, j] else " "
                cells.append(f"{self.rmsfe[i, j]:<9.4f}{mark}")
            lines.append(v.ljust(width) + "".join(cells))
        lines.append("(* lowest RMSFE in the week)")
        return "\n".join(lines)

    def write_csv(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8") as fh:
            fh.write("variant," + ",".join(f"M{w}" for w in self.weeks) + "\n")
            for i, v in enumerate(self.variants):
                row = ",".join(f"{x:.10g}" for x in self.rmsfe[i])
                fh.write(f"{v},{row}\n")


def compare_variants(
    panel: Panel,
    calendar: ReleaseCalendar,
    variants: Sequence[str] = DEFAULT_VARIANTS,
    screen_cfg: ScreenConfig | None = None,
    grid: AlphaGrid | None = None,
    **kwargs,
) -> VariantComparison:
    """Run :func:`nowcast_recursive` per variant and tabulate the RMSFEs."""
    if not variants:
        raise ConfigurationError("need at least one variant")
    runs: dict[str, NowcastRun] = {}
    for v in variants:
        runs[v] = nowcast_recursive(panel, calendar, v, screen_cfg, grid, **kwargs)
    weeks = runs[variants[0]].weeks
    rmsfe = np.vstack([runs[v].per_week_rmsfe for v in variants])
    return VariantComparison(
        variants=tuple(variants), weeks=weeks, rmsfe=rmsfe, runs=runs
    )


def write_nowcast_paths(runs: Mapping[str, NowcastRun], path: str | Path) -> None:
    """Long CSV of all nowcasts: variant, quarter, week, nowcast, actual, error."""
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write("variant,quarter,week,nowcast,actual,error\n")
        for name, run in runs.items():
            for qi, q in enumerate(run.oos_quarters):
                for wi, w in enumerate(run.weeks):
                    nc = run.per_quarter_nowcasts[qi, wi]
                    err = nc - run.actuals[qi]
                    fh.write(
                        f"{name},{quarter_label(q)},{w},{nc:.10g},"
                        f"{run.actuals[qi]:.10g},{err:.10g}\n"
                    )


# ---------------------------------------------------------------------------
# synthetic fixture
# ---------------------------------------------------------------------------

def make_synthetic_panel(
    n_quarters: int = 70,
    n_alt: int = 8,
    n_active_alt: int = 3,
    seed: int = 0,
    *,
    official_strength: float = 1.0,
    alt_strength: float = 1.0,
    noise_scale: float = 0.15,
    start_quarter: int = 2005 * 4,
) -> Panel:
    """Panel drawn from a known week-structured model, for demos and checks.

    The target loads on the full-quarter means of the active alternative
    series, the quarter-average survey and the first-month industrial value,
    so information genuinely accrues week by week.
    """
    rng = np.random.default_rng(seed)
    quarters = list(range(start_quarter, start_quarter + n_quarters))
    alt_weekly = rng.standard_normal((n_quarters, n_alt, WEEKS_PER_QUARTER))
    survey = rng.standard_normal((n_quarters, MONTHS_PER_QUARTER))
    industry = rng.standard_normal((n_quarters, MONTHS_PER_QUARTER))

    alt_coef = np.zeros(n_alt)
    alt_coef[:n_active_alt] = alt_strength * np.array(
        [1.0 + 0.5 * k for k in range(n_active_alt)]
    )
    alt_quarter_mean = alt_weekly.mean(axis=2)
    y = (
        0.5
        + alt_quarter_mean @ alt_coef
        + official_strength * (0.8 * survey.mean(axis=1) + 0.6 * industry[:, 0])
        + noise_scale * rng.standard_normal(n_quarters)
    )

    target = Series(
        "gdp",
        "hard",
        "quarterly",
        tuple(Observation(q, 0, float(y[i])) for i, q in enumerate(quarters)),
    )
    predictors = [
        Series(
            "survey",
            "soft",
            "monthly",
            tuple(
                Observation(q, m, float(survey[i, m - 1]))
                for i, q in enumerate(quarters)
                for m in range(1, MONTHS_PER_QUARTER + 1)
            ),
            release_week=5,
        ),
        Series(
            "industry",
            "hard",
            "monthly",
            tuple(
                Observation(q, m, float(industry[i, m - 1]))
                for i, q in enumerate(quarters)
                for m in range(1, MONTHS_PER_QUARTER + 1)
            ),
            release_week=11,
        ),
    ]
    for g in range(n_alt):
        predictors.append(
            Series(
                f"alt{g:02d}",
                "alt",
                "weekly",
                tuple(
                    Observation(q, w, float(alt_weekly[i, g, w - 1]))
                    for i, q in enumerate(quarters)
                    for w in range(1, WEEKS_PER_QUARTER + 1)
                ),
                release_week=1,
            )
        )
    return Panel(
        target=target,
        predictors=tuple(predictors),
        quarter_range=(quarters[0], quarters[-1]),
    )
