"""Mixed-frequency panel model and CSV ingestion.

A panel ties a quarterly target to monthly official predictors and weekly
alternative predictors. Quarters are treated as thirteen weeks; every
observation knows the week of its quarter at which it becomes available, which
is what the weekly bridge models key on.

Interchange format is a long CSV (date, series_id, value) plus a metadata CSV
(series_id, group, frequency, release_week). Dates are ISO-8601.
"""

from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple

import numpy as np

from .errors import (
    DataValidationError,
    InsufficientHistoryError,
    ParseError,
    SchemaError,
    TransformError,
)

GROUPS = ("soft", "hard", "alt")
FREQUENCIES = ("quarterly", "monthly", "weekly")
WEEKS_PER_QUARTER = 13
MONTHS_PER_QUARTER = 3

# Months of a quarter are spaced four availability-weeks apart: a series whose
# first month arrives in week r has month m arriving in week r + 4(m-1).
MONTH_RELEASE_SPACING = 4


# ---------------------------------------------------------------------------
# quarter arithmetic
# ---------------------------------------------------------------------------

def quarter_index(year: int, quarter: int) -> int:
    """Serial index of a calendar quarter (1-4)."""
    if not 1 <= quarter <= 4:
        raise ValueError(f"quarter must be 1..4, got {quarter}")
    return year * 4 + (quarter - 1)


def quarter_label(qidx: int) -> str:
    return f"{qidx // 4}Q{qidx % 4 + 1}"


def parse_quarter(label: str) -> int:
    """Parse a '2014Q1' style label into a serial quarter index."""
    text = label.strip().upper()
    try:
        year_s, q_s = text.split("Q")
        return quarter_index(int(year_s), int(q_s))
    except (ValueError, TypeError):
        raise ParseError(f"not a quarter label: {label!r}") from None


def quarter_start(qidx: int) -> dt.date:
    year, q = qidx // 4, qidx % 4 + 1
    return dt.date(year, 3 * (q - 1) + 1, 1)


def date_to_quarter(d: dt.date) -> int:
    return quarter_index(d.year, (d.month - 1) // 3 + 1)


def week_of_quarter(d: dt.date) -> int:
    """Week 1..13 of the date's quarter.

    Weeks are consecutive 7-day blocks from the first day of the quarter; the
    partial 14th block of long quarters is merged into week 13.
    """
    offset = (d - quarter_start(date_to_quarter(d))).days
    return min(offset // 7 + 1, WEEKS_PER_QUARTER)


def month_of_quarter(d: dt.date) -> int:
    return (d.month - 1) % 3 + 1


# ---------------------------------------------------------------------------
# series and panel
# ---------------------------------------------------------------------------

class Observation(NamedTuple):
    """One value of a series: quarter serial index, sub-period, value.

    ``sub`` is 0 for quarterly series, the month of the quarter (1..3) for
    monthly series and the week of the quarter (1..13) for weekly series.
    """

    quarter: int
    sub: int
    value: float


@dataclass(frozen=True)
class Series:
    """An identified, single-frequency series with release metadata.

    ``release_week`` is the week of the quarter at which the first
    within-quarter observation becomes available. Weekly observations are
    available in their own week regardless; quarterly series carry None.
    """

    id: str
    group: str
    frequency: str
    observations: tuple[Observation, ...]
    release_week: int | None = None

    def __post_init__(self) -> None:
        if self.group not in GROUPS:
            raise DataValidationError(f"series {self.id!r}: unknown group {self.group!r}")
        if self.frequency not in FREQUENCIES:
            raise DataValidationError(
                f"series {self.id!r}: unknown frequency {self.frequency!r}"
            )
        if self.frequency == "monthly" and self.release_week is None:
            raise DataValidationError(
                f"series {self.id!r}: monthly series need a release_week"
            )
        if self.release_week is not None and not 1 <= self.release_week <= WEEKS_PER_QUARTER:
            raise DataValidationError(
                f"series {self.id!r}: release_week {self.release_week} outside 1..13"
            )
        last = None
        for obs in self.observations:
            if not np.isfinite(obs.value):
                raise DataValidationError(
                    f"series {self.id!r}: non-finite value in {quarter_label(obs.quarter)}"
                )
            self._check_sub(obs)
            key = (obs.quarter, obs.sub)
            if last is not None and key <= last:
                raise DataValidationError(
                    f"series {self.id!r}: periods not strictly increasing at "
                    f"{quarter_label(obs.quarter)} sub {obs.sub}"
                )
            last = key

    def _check_sub(self, obs: Observation) -> None:
        hi = {"quarterly": 0, "monthly": MONTHS_PER_QUARTER, "weekly": WEEKS_PER_QUARTER}
        lo = 0 if self.frequency == "quarterly" else 1
        if not lo <= obs.sub <= hi[self.frequency]:
            raise DataValidationError(
                f"series {self.id!r}: sub-period {obs.sub} invalid for {self.frequency}"
            )

    def availability_week(self, sub: int) -> int | None:
        """Week of the quarter at which sub-period ``sub`` becomes available.

        None means not available within the quarter (e.g. the second month of
        a series first released in week 11).
        """
        if self.frequency == "weekly":
            return sub
        if self.frequency == "monthly":
            week = self.release_week + MONTH_RELEASE_SPACING * (sub - 1)
            return week if week <= WEEKS_PER_QUARTER else None
        return None

    def in_quarter(self, qidx: int) -> tuple[Observation, ...]:
        return tuple(o for o in self.observations if o.quarter == qidx)

    def value_at(self, qidx: int, sub: int) -> float | None:
        got = self._lookup().get((qidx, sub))
        return got

    def quarters(self) -> tuple[int, ...]:
        return tuple(sorted({o.quarter for o in self.observations}))

    def values_array(self) -> np.ndarray:
        return np.array([o.value for o in self.observations], dtype=float)

    def _lookup(self) -> dict[tuple[int, int], float]:
        cache = self.__dict__.get("_lookup_cache")
        if cache is None:
            cache = {(o.quarter, o.sub): o.value for o in self.observations}
            object.__setattr__(self, "_lookup_cache", cache)
        return cache


def available_observations(series: Series, week: int) -> tuple[Observation, ...]:
    """Observations of ``series`` available by week ``week`` of their own quarter."""
    out = []
    for obs in series.observations:
        avail = series.availability_week(obs.sub)
        if avail is not None and avail <= week:
            out.append(obs)
    return tuple(out)


@dataclass(frozen=True)
class Panel:
    """Quarterly target plus predictor series covering a quarter range.

    Missing predictor values are tolerated only where release timing explains
    them: the trailing (ragged) quarter may hold a prefix of its sub-periods,
    every earlier quarter must be complete. Holes are rejected, never imputed.
    """

    target: Series
    predictors: tuple[Series, ...]
    quarter_range: tuple[int, int]

    def __post_init__(self) -> None:
        first, last = self.quarter_range
        if first > last:
            raise DataValidationError("empty quarter range")
        if self.target.frequency != "quarterly":
            raise DataValidationError("target series must be quarterly")
        have = {o.quarter for o in self.target.observations}
        for q in range(first, last + 1):
            if q not in have:
                raise DataValidationError(
                    f"target {self.target.id!r} missing quarter {quarter_label(q)}"
                )
        seen: set[str] = set()
        for s in self.predictors:
            if s.id == self.target.id or s.id in seen:
                raise DataValidationError(f"duplicate series id {s.id!r}")
            seen.add(s.id)
            _check_coverage(s, first, last)

    @property
    def quarters(self) -> tuple[int, ...]:
        return tuple(range(self.quarter_range[0], self.quarter_range[1] + 1))

    def predictor(self, series_id: str) -> Series:
        for s in self.predictors:
            if s.id == series_id:
                return s
        raise KeyError(series_id)

    def target_values(self, quarters: Iterable[int]) -> np.ndarray:
        vals = []
        for q in quarters:
            v = self.target.value_at(q, 0)
            if v is None:
                raise DataValidationError(
                    f"target {self.target.id!r} missing quarter {quarter_label(q)}"
                )
            vals.append(v)
        return np.array(vals, dtype=float)


def _check_coverage(series: Series, first: int, last: int) -> None:
    full = {
        "quarterly": (0,),
        "monthly": tuple(range(1, MONTHS_PER_QUARTER + 1)),
        "weekly": tuple(range(1, WEEKS_PER_QUARTER + 1)),
    }[series.frequency]
    by_quarter: dict[int, list[int]] = {}
    for obs in series.observations:
        by_quarter.setdefault(obs.quarter, []).append(obs.sub)
    for q in range(first, last + 1):
        subs = tuple(sorted(by_quarter.get(q, [])))
        if q < last:
            if subs != full:
                raise DataValidationError(
                    f"series {series.id!r}: quarter {quarter_label(q)} has "
                    f"{len(subs)} of {len(full)} {series.frequency} observations"
                )
        else:
            # ragged edge: a prefix of the quarter is acceptable
            if subs != full[: len(subs)]:
                raise DataValidationError(
                    f"series {series.id!r}: quarter {quarter_label(q)} has a hole "
                    f"(sub-periods {subs})"
                )


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Transform:
    """Deseasonalising transform applied along a series.

    kind 'growth_rate' uses lag k1 (default 1); 'lag_difference' differences
    over k1 and then, when k2 > 0, over k2; 'yoy52_diff13' is the 52-week
    growth rate followed by a 13-week difference (weekly series only).
    """

    kind: str = "none"
    k1: int = 1
    k2: int = 0

    KINDS = ("none", "growth_rate", "yoy52_diff13", "lag_difference")

    def __post_init__(self) -> None:
        if self.kind not in self.KINDS:
            raise TransformError(f"unknown transform kind {self.kind!r}")
        if self.k1 < 0 or self.k2 < 0:
            raise TransformError("transform lags must be nonnegative")


def apply_transform(series: Series, transform: Transform) -> Series:
    if transform.kind == "none":
        return series
    _require_contiguous(series)
    values = series.values_array()
    if transform.kind == "growth_rate":
        out = _growth(values, transform.k1, series)
        drop = transform.k1
    elif transform.kind == "lag_difference":
        out = _difference(values, transform.k1)
        drop = transform.k1
        if transform.k2 > 0:
            out = _difference(out, transform.k2)
            drop += transform.k2
    else:  # yoy52_diff13
        if series.frequency != "weekly":
            raise TransformError("yoy52_diff13 applies to weekly series")
        out = _difference(_growth(values, 52, series), 13)
        drop = 65
    if len(out) == 0:
        raise InsufficientHistoryError(
            f"series {series.id!r}: {len(values)} observations, transform needs > {drop}"
        )
    kept = series.observations[drop:]
    obs = tuple(Observation(o.quarter, o.sub, v) for o, v in zip(kept, out))
    return Series(series.id, series.group, series.frequency, obs, series.release_week)


def _growth(values: np.ndarray, lag: int, series: Series) -> np.ndarray:
    if lag >= len(values):
        raise InsufficientHistoryError(
            f"series {series.id!r}: growth over {lag} needs more than {lag} observations"
        )
    base = values[:-lag]
    if np.any(base == 0.0):
        where = int(np.nonzero(base == 0.0)[0][0])
        obs = series.observations[where]
        raise TransformError(
            f"series {series.id!r}: zero base value at {quarter_label(obs.quarter)} "
            f"sub {obs.sub}, growth rate undefined"
        )
    return (values[lag:] - base) / base


def _difference(values: np.ndarray, lag: int) -> np.ndarray:
    if lag >= len(values):
        raise InsufficientHistoryError(f"difference over {lag} needs more observations")
    return values[lag:] - values[:-lag]


def _require_contiguous(series: Series) -> None:
    for prev, cur in zip(series.observations, series.observations[1:]):
        if _next_period(series.frequency, (prev.quarter, prev.sub)) != (cur.quarter, cur.sub):
            raise TransformError(
                f"series {series.id!r}: gap after {quarter_label(prev.quarter)} "
                f"sub {prev.sub}; transforms need contiguous observations"
            )


def _next_period(frequency: str, period: tuple[int, int]) -> tuple[int, int]:
    q, sub = period
    if frequency == "quarterly":
        return (q + 1, 0)
    hi = MONTHS_PER_QUARTER if frequency == "monthly" else WEEKS_PER_QUARTER
    return (q, sub + 1) if sub < hi else (q + 1, 1)


# ---------------------------------------------------------------------------
# CSV load / save
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PanelSchema:
    """Column mapping and metadata source for :func:`load_panel`.

    ``metadata`` is either a path to the metadata CSV or an in-memory mapping
    series_id -> (group, frequency, release_week).
    """

    target_id: str
    metadata: str | Path | Mapping[str, tuple[str, str, int | None]]
    date_col: str = "date"
    series_col: str = "series_id"
    value_col: str = "value"


def load_panel(path: str | Path, schema: PanelSchema) -> Panel:
    """Read a long-format data CSV into a validated :class:`Panel`.

    Weekly observations landing in the same merged week-13 block are averaged;
    identical duplicate rows and intra-month duplicates are errors.
    """
    meta = _load_metadata(schema.metadata)
    if schema.target_id not in meta:
        raise SchemaError(f"target {schema.target_id!r} not present in metadata")

    buckets: dict[str, dict[tuple[int, int], list[float]]] = {sid: {} for sid in meta}
    seen_rows: set[tuple[str, str]] = set()
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for col in (schema.date_col, schema.series_col, schema.value_col):
            if reader.fieldnames is None or col not in reader.fieldnames:
                raise SchemaError(f"{path.name}: missing column {col!r}")
        for lineno, row in enumerate(reader, start=2):
            sid = (row[schema.series_col] or "").strip()
            if sid not in meta:
                raise SchemaError(f"{path.name} line {lineno}: unknown series {sid!r}")
            try:
                d = dt.date.fromisoformat((row[schema.date_col] or "").strip())
                value = float(row[schema.value_col])
            except (ValueError, TypeError) as exc:
                raise ParseError(f"{path.name} line {lineno}: {exc}") from None
            if (sid, row[schema.date_col]) in seen_rows:
                raise DataValidationError(
                    f"{path.name} line {lineno}: duplicate row for {sid!r} on "
                    f"{row[schema.date_col]}"
                )
            seen_rows.add((sid, row[schema.date_col]))
            _, frequency, _ = meta[sid]
            key = _bucket_key(frequency, d)
            slot = buckets[sid].setdefault(key, [])
            if slot and frequency != "weekly":
                raise SchemaError(
                    f"{path.name} line {lineno}: series {sid!r} is {frequency} but has "
                    f"two observations in {quarter_label(key[0])} sub {key[1]}"
                )
            slot.append(value)

    series_by_id: dict[str, Series] = {}
    for sid, (group, frequency, release_week) in meta.items():
        if not buckets[sid]:
            raise SchemaError(f"series {sid!r} declared in metadata but absent from data")
        obs = tuple(
            Observation(q, sub, float(np.mean(vals)))
            for (q, sub), vals in sorted(buckets[sid].items())
        )
        series_by_id[sid] = Series(sid, group, frequency, obs, release_week)

    target = series_by_id.pop(schema.target_id)
    qs = target.quarters()
    return Panel(
        target=target,
        predictors=tuple(series_by_id[sid] for sid in meta if sid != schema.target_id),
        quarter_range=(qs[0], qs[-1]),
    )


def save_panel(panel: Panel, data_path: str | Path, metadata_path: str | Path) -> None:
    """Write the canonical two-CSV representation; inverse of :func:`load_panel`."""
    with Path(data_path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "series_id", "value"])
        for s in (panel.target, *panel.predictors):
            for obs in s.observations:
                writer.writerow(
                    [
                        _canonical_date(s.frequency, obs).isoformat(),
                        s.id,
                        f"{obs.value:.17g}",
                    ]
                )
    with Path(metadata_path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["series_id", "group", "frequency", "release_week"])
        for s in (panel.target, *panel.predictors):
            writer.writerow([s.id, s.group, s.frequency, s.release_week or ""])


def _bucket_key(frequency: str, d: dt.date) -> tuple[int, int]:
    q = date_to_quarter(d)
    if frequency == "quarterly":
        return (q, 0)
    if frequency == "monthly":
        return (q, month_of_quarter(d))
    return (q, week_of_quarter(d))


def _canonical_date(frequency: str, obs: Observation) -> dt.date:
    start = quarter_start(obs.quarter)
    if frequency == "quarterly":
        return quarter_start(obs.quarter + 1) - dt.timedelta(days=1)
    if frequency == "monthly":
        month = start.month + obs.sub - 1
        return dt.date(start.year, month, 1)
    return start + dt.timedelta(days=7 * (obs.sub - 1))


def _load_metadata(
    source: str | Path | Mapping[str, tuple[str, str, int | None]],
) -> dict[str, tuple[str, str, int | None]]:
    if isinstance(source, Mapping):
        return dict(source)
    path = Path(source)
    meta: dict[str, tuple[str, str, int | None]] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        needed = {"series_id", "group", "frequency", "release_week"}
        if reader.fieldnames is None or not needed.issubset(reader.fieldnames):
            raise SchemaError(f"{path.name}: metadata needs columns {sorted(needed)}")
        for lineno, row in enumerate(reader, start=2):
            sid = (row["series_id"] or "").strip()
            if not sid:
                raise ParseError(f"{path.name} line {lineno}: empty series_id")
            if sid in meta:
                raise DataValidationError(f"{path.name} line {lineno}: duplicate id {sid!r}")
            raw_week = (row["release_week"] or "").strip()
            try:
                week = int(raw_week) if raw_week else None
            except ValueError:
                raise ParseError(
                    f"{path.name} line {lineno}: bad release_week {raw_week!r}"
                ) from None
            meta[sid] = ((row["group"] or "").strip(), (row["frequency"] or "").strip(), week)
    return meta
