"""Fixed-phase sinusoid fits to daily minimum temperature."""
from __future__ import annotations

import csv
import datetime as dt
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataFormatError, DomainError, IllConditionedError, InsufficientDataError
from .model import YEAR

MIN_SAMPLES_PER_YEAR = 200
MAX_CONDITION = 1e8

# mean level and amplitude [F] for the three climate patches
REFERENCE_FITS = {
    "coast_n": (63.5454, 3.5680),
    "coast_c": (65.3771, 4.5169),
    "jungle": (74.3880, 0.1353),
}


class CoverageWarning(UserWarning):
    pass


@dataclass(frozen=True)
class TemperatureSeries:
    days: np.ndarray  # days since 1 January of the first year
    tmin: np.ndarray  # degrees F
    label: str = ""

    def __post_init__(self):
        days = np.asarray(self.days, dtype=float)
        tmin = np.asarray(self.tmin, dtype=float)
        if days.shape != tmin.shape or days.ndim != 1:
            raise DomainError("days and tmin must be 1-d arrays of equal length")
        if np.any(np.diff(days) <= 0):
            raise DomainError(f"{self.label or 'series'}: days must be strictly increasing")
        if not np.all(np.isfinite(tmin)):
            raise DomainError(f"{self.label or 'series'}: temperatures must be finite")
        object.__setattr__(self, "days", days)
        object.__setattr__(self, "tmin", tmin)

    def __len__(self):
        return len(self.days)


def pct_variation(t0: float, eps: float) -> float:
    """Amplitude as a percentage of the mean level, ``100 * |eps| / t0``."""
    if not t0 > 0:
        raise DomainError(f"mean level must be > 0 for a percentage, got {t0}")
    return 100.0 * abs(eps) / t0


@dataclass(frozen=True)
class SinusoidFit:
    """``T(t) = t0 + coefficient * sin(2 pi t / 365)``.

    ``eps`` is the amplitude ``|coefficient|``; the sign of the regression
    coefficient is kept separately since the form has no phase to absorb it.
    """

    t0: float
    coefficient: float
    residual_sse: float
    n_samples: int
    label: str = ""

    @property
    def eps(self) -> float:
        return abs(self.coefficient)

    @property
    def pct_variation(self) -> float:
        return pct_variation(self.t0, self.eps)

    def __call__(self, t):
        return self.t0 + self.coefficient * np.sin(2.0 * np.pi * np.asarray(t, dtype=float) / YEAR)


def fit_sinusoid(series: TemperatureSeries) -> SinusoidFit:
    """Least squares on the basis ``{1, sin(2 pi t / 365)}``.

    Needs at least 3 samples spanning half a year or more.  Warns with
    :class:`CoverageWarning` below 200 samples per year.
    """
    n = len(series)
    if n < 3:
        raise InsufficientDataError(f"{series.label or 'series'}: need at least 3 samples, got {n}")
    span = series.days[-1] - series.days[0]
    if span < YEAR / 2:
        raise InsufficientDataError(f"{series.label or 'series'}: samples span {span:g} days, need >= {YEAR / 2:g}")
    per_year = n * YEAR / (span + 1.0)
    if per_year < MIN_SAMPLES_PER_YEAR:
        warnings.warn(
            f"{series.label or 'series'}: only {per_year:.0f} samples per year", CoverageWarning, stacklevel=2
        )
    basis = np.column_stack([np.ones(n), np.sin(2.0 * np.pi * series.days / YEAR)])
    sv = np.linalg.svd(basis, compute_uv=False)
    if sv[-1] == 0 or sv[0] / sv[-1] > MAX_CONDITION:
        raise IllConditionedError(f"{series.label or 'series'}: sampled days make the sine basis degenerate")
    coef, *_ = np.linalg.lstsq(basis, series.tmin, rcond=None)
    resid = series.tmin - basis @ coef
    return SinusoidFit(float(coef[0]), float(coef[1]), float(resid @ resid), n, series.label)


def load_climate(path) -> dict[str, TemperatureSeries]:
    """Read ``date,patch_id,tmin_f`` rows into one series per patch.

    Days count from 1 January of the earliest year in the file.
    """
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["date", "patch_id", "tmin_f"]:
            raise DataFormatError(f"expected header date,patch_id,tmin_f, got {header}", 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise DataFormatError(f"expected 3 fields, got {len(row)}", lineno)
            try:
                day = dt.date.fromisoformat(row[0])
                value = float(row[2])
            except ValueError as exc:
                raise DataFormatError(str(exc), lineno) from None
            if not math.isfinite(value):
                raise DataFormatError("temperature is not finite", lineno)
            rows.append((day, row[1], value))
    if not rows:
        raise InsufficientDataError(f"{path}: no climate rows")
    origin = dt.date(min(r[0] for r in rows).year, 1, 1)
    out: dict[str, list] = {}
    for day, pid, value in sorted(rows, key=lambda r: (r[1], r[0])):
        out.setdefault(pid, []).append(((day - origin).days, value))
    return {
        pid: TemperatureSeries(np.array([d for d, _ in pts]), np.array([v for _, v in pts]), pid)
        for pid, pts in out.items()
    }


def write_climate(path, series: dict[str, TemperatureSeries], first_year: int) -> None:
    origin = dt.date(first_year, 1, 1)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "patch_id", "tmin_f"])
        for pid, s in series.items():
            for d, v in zip(s.days, s.tmin):
                w.writerow([(origin + dt.timedelta(days=int(d))).isoformat(), pid, repr(float(v))])


def write_fits(path, fits: list[SinusoidFit]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["patch_id", "t0_f", "eps_f", "coefficient_f", "pct_variation", "residual_sse", "n_samples"])
        for f in fits:
            w.writerow([f.label, f"{f.t0:.6f}", f"{f.eps:.6f}", f"{f.coefficient:.6f}",
                        f"{f.pct_variation:.4f}", f"{f.residual_sse:.6g}", f.n_samples])


def write_curve(path, series: TemperatureSeries, fit: SinusoidFit) -> None:
    """Observed values next to the fitted curve, one row per sampled day."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["day", "tmin_f", "fit_f"])
        for d, v, f in zip(series.days, series.tmin, fit(series.days)):
            w.writerow([int(d), f"{v:.4f}", f"{f:.4f}"])


def synthetic_series(t0: float, eps: float, days, noise: float = 0.0, rng=None, label: str = "") -> TemperatureSeries:
    """Sinusoid with optional Gaussian noise of standard deviation ``noise``."""
    days = np.asarray(days, dtype=float)
    values = t0 + eps * np.sin(2.0 * np.pi * days / YEAR)
    if noise:
        rng = rng if rng is not None else np.random.default_rng(0)
        values = values + rng.normal(0.0, noise, size=days.shape)
    return TemperatureSeries(days, values, label)
