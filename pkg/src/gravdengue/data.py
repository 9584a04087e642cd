"""Province metadata, weekly case counts and their aggregation into patches.

File formats (comma separated, UTF-8, header row required):

- provinces.csv: ``province_id,name,region_class,population,lat,lon``
- cases.csv: ``week,province_id,count`` (long format, week 1 = first week of 1994)
- patches.csv (output): ``patch_id,province_id``
- centers.csv (output): ``patch_id,lat,lon,population``
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

import numpy as np

from .errors import BoundsError, DataFormatError, DomainError, StructuralError, UnmappedDataError
from .model import EpidemicSeries, PatchGeometry

log = logging.getLogger(__name__)

REGION_CLASSES = ("Coast-N", "Coast-C", "Coast-S", "Mountain-N", "Mountain-C", "Mountain-S", "Jungle")
PROVINCE_HEADER = ["province_id", "name", "region_class", "population", "lat", "lon"]
CASES_HEADER = ["week", "province_id", "count"]

# climate regions grouped into three patches; Mountain-S reports no cases and is dropped
THREE_PATCH = {
    "Coast-N": "coast_n",
    "Mountain-N": "coast_n",
    "Coast-C": "coast_c",
    "Mountain-C": "coast_c",
    "Coast-S": "coast_c",
    "Jungle": "jungle",
}
THREE_PATCH_ORDER = ("coast_n", "coast_c", "jungle")

# inclusive 1-based week ranges
WINDOWS = {
    "epidemic_2000_2001": (350, 400),
    "seasonal_2002_2008": (418, 780),
}


@dataclass(frozen=True)
class ProvinceRecord:
    province_id: str
    name: str
    region_class: str
    population: int
    lat: float
    lon: float

    def __post_init__(self):
        if self.region_class not in REGION_CLASSES:
            raise DomainError(f"province {self.province_id!r}: unknown region class {self.region_class!r}")
        if not self.population > 0:
            raise DomainError(f"province {self.province_id!r}: population must be > 0")
        if not (-90 <= self.lat <= 90 and -180 <= self.lon <= 180):
            raise DomainError(f"province {self.province_id!r}: invalid coordinates")


@dataclass(frozen=True)
class PatchDefinition:
    patch_id: str
    members: tuple
    lat: float
    lon: float
    population: int

    @property
    def geometry(self) -> PatchGeometry:
        return PatchGeometry(self.patch_id, float(self.population), self.lat, self.lon)


@dataclass(frozen=True)
class PatchLayout:
    """Patches in order, plus the provinces that were left out."""

    patches: tuple
    dropped: tuple = ()

    def __iter__(self) -> Iterator[PatchDefinition]:
        return iter(self.patches)

    def __len__(self):
        return len(self.patches)

    def __getitem__(self, k):
        return self.patches[k]

    @property
    def patch_ids(self) -> tuple:
        return tuple(p.patch_id for p in self.patches)

    @property
    def geometries(self) -> tuple:
        return tuple(p.geometry for p in self.patches)

    def membership(self) -> dict:
        return {pid: p.patch_id for p in self.patches for pid in p.members}


@dataclass(frozen=True)
class CaseSeries:
    """Weekly counts, ``counts[k, j]`` for week ``weeks[k]`` and province ``province_ids[j]``."""

    weeks: np.ndarray
    province_ids: tuple
    counts: np.ndarray = field(repr=False)

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.shape != (len(self.weeks), len(self.province_ids)):
            raise StructuralError("counts shape does not match weeks x provinces")
        if np.any(counts < 0):
            raise DomainError("case counts must be >= 0")

    def column(self, province_id) -> np.ndarray:
        return self.counts[:, self.province_ids.index(province_id)]


def _open_csv(path, header):
    fh = open(path, newline="", encoding="utf-8")
    reader = csv.reader(fh)
    got = next(reader, None)
    if got != header:
        fh.close()
        raise DataFormatError(f"expected header {','.join(header)}, got {got}", 1)
    return fh, reader


def load_provinces(path) -> list[ProvinceRecord]:
    fh, reader = _open_csv(path, PROVINCE_HEADER)
    records, seen = [], set()
    with fh:
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(PROVINCE_HEADER):
                raise DataFormatError(f"expected {len(PROVINCE_HEADER)} fields, got {len(row)}", lineno)
            pid = row[0]
            if pid in seen:
                raise DataFormatError(f"duplicate province_id {pid!r}", lineno)
            try:
                pop = int(row[3])
                lat, lon = float(row[4]), float(row[5])
            except ValueError as exc:
                raise DataFormatError(str(exc), lineno) from None
            try:
                records.append(ProvinceRecord(pid, row[1], row[2], pop, lat, lon))
            except DomainError as exc:
                raise DataFormatError(str(exc), lineno) from None
            seen.add(pid)
    return records


def write_provinces(path, provinces: Sequence[ProvinceRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PROVINCE_HEADER)
        for p in provinces:
            w.writerow([p.province_id, p.name, p.region_class, p.population, repr(p.lat), repr(p.lon)])


def load_cases(path, province_ids: Sequence[str] | None = None) -> CaseSeries:
    """Long-format counts; weeks run from 1 to the largest week present, missing entries are 0.

    ``province_ids`` fixes the column order (and admits provinces with no rows).
    """
    fh, reader = _open_csv(path, CASES_HEADER)
    entries = []
    with fh:
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise DataFormatError(f"expected 3 fields, got {len(row)}", lineno)
            try:
                week, count = int(row[0]), int(row[2])
            except ValueError as exc:
                raise DataFormatError(str(exc), lineno) from None
            if week < 1:
                raise DataFormatError(f"week must be >= 1, got {week}", lineno)
            if count < 0:
                raise DataFormatError(f"count must be >= 0, got {count}", lineno)
            entries.append((week, row[1], count, lineno))
    ids = list(province_ids) if province_ids is not None else sorted({e[1] for e in entries})
    col = {pid: j for j, pid in enumerate(ids)}
    n_weeks = max((e[0] for e in entries), default=0)
    counts = np.zeros((n_weeks, len(ids)), dtype=np.int64)
    seen = set()
    for week, pid, count, lineno in entries:
        if pid not in col:
            raise DataFormatError(f"unknown province_id {pid!r}", lineno)
        if (week, pid) in seen:
            raise DataFormatError(f"duplicate entry for week {week}, province {pid!r}", lineno)
        seen.add((week, pid))
        counts[week - 1, col[pid]] = count
    return CaseSeries(np.arange(1, n_weeks + 1), tuple(ids), counts)


def write_cases(path, cases: CaseSeries, skip_zero: bool = True) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CASES_HEADER)
        for k, week in enumerate(cases.weeks):
            for j, pid in enumerate(cases.province_ids):
                c = int(cases.counts[k, j])
                if c or not skip_zero:
                    w.writerow([int(week), pid, c])


def _patch(patch_id, members: Sequence[ProvinceRecord]) -> PatchDefinition:
    if not members:
        raise StructuralError(f"patch {patch_id!r} has no provinces")
    return PatchDefinition(
        patch_id,
        tuple(p.province_id for p in members),
        float(np.mean([p.lat for p in members])),
        float(np.mean([p.lon for p in members])),
        int(sum(p.population for p in members)),
    )


def build_patches(provinces: Sequence[ProvinceRecord], scheme: str | Mapping[str, str] = "three_patch") -> PatchLayout:
    """Group provinces into patches.

    ``scheme`` is ``"three_patch"`` (climate regions), ``"per_province"``
    (one patch each) or a mapping from province id to patch id.  Provinces
    without a patch are dropped with a warning and listed in
    :attr:`PatchLayout.dropped`.
    """
    if scheme == "per_province":
        return PatchLayout(tuple(_patch(p.province_id, [p]) for p in provinces))
    if scheme == "three_patch":
        assign = {p.province_id: THREE_PATCH.get(p.region_class) for p in provinces}
        order = THREE_PATCH_ORDER
    elif isinstance(scheme, Mapping):
        known = {p.province_id for p in provinces}
        unknown = sorted(set(scheme) - known)
        if unknown:
            raise StructuralError(f"mapping names unknown provinces {unknown}")
        assign = {p.province_id: scheme.get(p.province_id) for p in provinces}
        order = tuple(dict.fromkeys(v for v in scheme.values() if v is not None))
    else:
        raise DomainError(f"unknown patch scheme {scheme!r}")
    groups: dict = {pid: [] for pid in order}
    dropped = []
    for p in provinces:
        target = assign[p.province_id]
        if target is None:
            dropped.append(p.province_id)
        else:
            groups[target].append(p)
    if dropped:
        log.warning("dropped %d provinces without a patch: %s", len(dropped), ", ".join(dropped))
    return PatchLayout(tuple(_patch(pid, groups[pid]) for pid in order), tuple(dropped))


def aggregate_cases(cases: CaseSeries, layout: PatchLayout) -> EpidemicSeries:
    """Sum province counts into patch counts, week by week.

    Provinces listed as dropped are excluded; any other province outside
    the layout must have no cases.
    """
    member_of = layout.membership()
    dropped = set(layout.dropped)
    col = {pid: j for j, pid in enumerate(cases.province_ids)}
    for pid in member_of:
        if pid not in col:
            raise StructuralError(f"patch member {pid!r} has no case column")
    totals = cases.counts.sum(axis=0)
    stray = [pid for pid, j in col.items() if pid not in member_of and pid not in dropped and totals[j] > 0]
    if stray:
        raise UnmappedDataError(f"provinces with cases but no patch: {', '.join(stray)}")
    values = np.zeros((len(cases.weeks), len(layout)), dtype=np.int64)
    for i, patch in enumerate(layout):
        values[:, i] = cases.counts[:, [col[m] for m in patch.members]].sum(axis=1)
    return EpidemicSeries(cases.weeks.copy(), values, layout.patch_ids, provenance="observed", kind="weekly_cases")


def country_series(series: EpidemicSeries) -> EpidemicSeries:
    return EpidemicSeries(series.times, series.values.sum(axis=1, keepdims=True), ("country",),
                          provenance=series.provenance, kind=series.kind)


def window_bounds(window) -> tuple[int, int]:
    if isinstance(window, str):
        if window not in WINDOWS:
            raise DomainError(f"unknown window {window!r}; choose from {sorted(WINDOWS)}")
        return WINDOWS[window]
    start, end = (int(w) for w in window)
    return start, end


def select_window(series: EpidemicSeries, window) -> EpidemicSeries:
    """Rows for weeks ``start..end`` inclusive; ``window`` is a name from WINDOWS or a pair."""
    start, end = window_bounds(window)
    weeks = np.asarray(series.times)
    if end < start:
        raise BoundsError(f"window end {end} precedes start {start}")
    if len(weeks) == 0 or start < weeks[0] or end > weeks[-1]:
        raise BoundsError(f"window {start}-{end} outside data weeks {weeks[0] if len(weeks) else '-'}-{weeks[-1] if len(weeks) else '-'}")
    keep = (weeks >= start) & (weeks <= end)
    meta = dict(series.meta, window=(start, end))
    return EpidemicSeries(weeks[keep], series.values[keep], series.patch_ids, series.provenance, series.kind, meta)


def active_provinces(cases: CaseSeries, window) -> tuple:
    """Provinces with at least one case inside the window."""
    start, end = window_bounds(window)
    if end < start or start < 1 or end > len(cases.weeks):
        raise BoundsError(f"window {start}-{end} outside data weeks 1-{len(cases.weeks)}")
    block = cases.counts[start - 1:end]
    return tuple(pid for j, pid in enumerate(cases.province_ids) if block[:, j].sum() > 0)


def write_patches(path, layout: PatchLayout) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["patch_id", "province_id"])
        for p in layout:
            for m in p.members:
                w.writerow([p.patch_id, m])


def write_centers(path, layout: PatchLayout) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["patch_id", "lat", "lon", "population"])
        for p in layout:
            w.writerow([p.patch_id, repr(p.lat), repr(p.lon), p.population])


def load_centers(path) -> list[PatchGeometry]:
    fh, reader = _open_csv(path, ["patch_id", "lat", "lon", "population"])
    out = []
    with fh:
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise DataFormatError(f"expected 4 fields, got {len(row)}", lineno)
            try:
                lat, lon, pop = float(row[1]), float(row[2]), float(row[3])
            except ValueError as exc:
                raise DataFormatError(str(exc), lineno) from None
            if not (math.isfinite(pop) and pop > 0):
                raise DataFormatError("population must be > 0", lineno)
            out.append(PatchGeometry(row[0], pop, lat, lon))
    return out


def write_series(path, series: EpidemicSeries) -> None:
    """Wide CSV: ``week`` then one column per patch."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["week", *series.patch_ids])
        integral = np.issubdtype(np.asarray(series.values).dtype, np.integer)
        for t, row in zip(series.times, series.values):
            w.writerow([int(t), *(int(v) if integral else repr(float(v)) for v in row)])
