"""Synthetic, Peru-shaped input files for exercising the data pipeline.

The real surveillance data cannot be redistributed.  This generator writes
files with the same schema: 79 provinces in seven climate regions, 780
weeks of counts with a single-wave epidemic in 49 provinces around weeks
350-400 and seasonal coastal epidemics over an endemic jungle after 2002,
plus daily minimum temperatures for the three climate patches.

Usage: ``python -m gravdengue.fixtures OUTDIR [--seed N]``
"""
from __future__ import annotations

import argparse
import datetime as dt
from pathlib import Path

import numpy as np

from .climate import REFERENCE_FITS, TemperatureSeries, synthetic_series, write_climate
from .data import CaseSeries, ProvinceRecord, write_cases, write_provinces

N_WEEKS = 780
CLIMATE_YEARS = (2002, 2008)
CLIMATE_NOISE = 1.0

# region: (province count, total population, lat range, lon range)
REGIONS = {
    "Coast-N": (12, 4_500_000, (-8.0, -3.6), (-81.0, -78.8)),
    "Mountain-N": (8, 3_100_000, (-8.0, -5.0), (-78.8, -77.4)),
    "Coast-C": (14, 8_200_000, (-14.0, -8.0), (-79.0, -76.0)),
    "Mountain-C": (10, 2_100_000, (-13.0, -8.0), (-77.0, -74.6)),
    "Coast-S": (2, 200_000, (-18.0, -14.0), (-76.0, -70.5)),
    "Mountain-S": (2, 400_000, (-17.0, -14.0), (-73.0, -70.0)),
    "Jungle": (31, 2_800_000, (-13.0, -3.0), (-77.0, -69.0)),
}
# provinces of each region that join the 2000-2001 epidemic (49 in total)
EPIDEMIC_COUNTS = {"Coast-N": 12, "Coast-C": 14, "Coast-S": 2, "Jungle": 21}
EPIDEMIC_WINDOW = (350, 400)
SEASONAL_START = 418
WEEKS_PER_YEAR = 365.25 / 7


def _split(total: int, parts: int, rng) -> list[int]:
    """Positive integers summing exactly to ``total``."""
    w = rng.dirichlet(np.full(parts, 4.0))
    sizes = np.floor(w * total).astype(int)
    sizes[np.argmax(sizes)] += total - sizes.sum()
    return [int(s) for s in sizes]


def make_provinces(seed: int = 0) -> list[ProvinceRecord]:
    rng = np.random.default_rng(seed)
    out = []
    k = 1
    for region, (count, total, lat, lon) in REGIONS.items():
        for pop in _split(total, count, rng):
            out.append(ProvinceRecord(
                f"P{k:02d}", f"{region} {k}", region, pop,
                round(float(rng.uniform(*lat)), 4), round(float(rng.uniform(*lon)), 4),
            ))
            k += 1
    return out


def make_cases(provinces: list[ProvinceRecord], seed: int = 0) -> CaseSeries:
    rng = np.random.default_rng(seed + 1)
    weeks = np.arange(1, N_WEEKS + 1)
    counts = np.zeros((N_WEEKS, len(provinces)), dtype=np.int64)
    taken = dict.fromkeys(EPIDEMIC_COUNTS, 0)
    lo, hi = EPIDEMIC_WINDOW
    for j, p in enumerate(provinces):
        region = p.region_class
        if region == "Mountain-S":
            continue
        scale = p.population / 1e5
        rate = np.zeros(N_WEEKS)
        if taken.get(region, 0) < EPIDEMIC_COUNTS.get(region, 0):
            taken[region] += 1
            peak = rng.uniform(365, 385)
            rate += 2.0 + 20.0 * scale * np.exp(-0.5 * ((weeks - peak) / 6.0) ** 2)
            inside = (weeks >= lo) & (weeks <= hi)
            rate[~inside] = 0.0
        after = weeks >= SEASONAL_START
        phase = 2 * np.pi * (weeks - SEASONAL_START) / WEEKS_PER_YEAR
        if region == "Jungle":
            rate[after] += 1.0 + 2.0 * scale
        elif region.startswith("Coast"):
            rate[after] += 15.0 * scale * np.clip(np.sin(phase[after] + 0.3), 0, None) ** 4
        else:
            rate[after] += 0.5 * scale * np.clip(np.sin(phase[after] + 0.3), 0, None) ** 4
        c = rng.poisson(rate)
        if rate[lo - 1:hi].max() > 0 and c[lo - 1:hi].sum() == 0:
            c[int(np.argmax(rate[lo - 1:hi])) + lo - 1] = 1
        counts[:, j] = c
    return CaseSeries(weeks, tuple(p.province_id for p in provinces), counts)


def make_climate(seed: int = 0, noise: float = CLIMATE_NOISE) -> dict[str, TemperatureSeries]:
    """Daily minimum temperature per climate patch, days counted from 1 January of the first year."""
    rng = np.random.default_rng(seed + 2)
    first, last = CLIMATE_YEARS
    n_days = (dt.date(last + 1, 1, 1) - dt.date(first, 1, 1)).days
    days = np.arange(n_days)
    return {
        pid: synthetic_series(t0, eps, days, noise=noise, rng=rng, label=pid)
        for pid, (t0, eps) in REFERENCE_FITS.items()
    }


def write_fixtures(out_dir, seed: int = 0) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    provinces = make_provinces(seed)
    paths = {
        "provinces": out / "provinces.csv",
        "cases": out / "cases.csv",
        "climate": out / "climate.csv",
    }
    write_provinces(paths["provinces"], provinces)
    write_cases(paths["cases"], make_cases(provinces, seed))
    write_climate(paths["climate"], make_climate(seed), CLIMATE_YEARS[0])
    return paths


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="python -m gravdengue.fixtures", description=__doc__.splitlines()[0])
    ap.add_argument("out_dir")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    for name, path in write_fixtures(args.out_dir, args.seed).items():
        print(f"{name}: {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
