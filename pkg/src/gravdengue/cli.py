"""Command-line front end.

Every option can also be set in an INI file passed with ``--config``:
global options under ``[global]``, subcommand options under a section named
after the subcommand (keys use underscores, e.g. ``n_cities = 100``), and
fit samplers under ``[samplers]`` (``beta0 = uniform(0,1)``).  A flag on the
command line beats the config file, which beats the built-in default.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import itertools
import logging
import sys
from pathlib import Path

import numpy as np

from . import plots
from .climate import fit_sinusoid, load_climate, write_curve, write_fits
from .data import (
    WINDOWS,
    active_provinces,
    aggregate_cases,
    build_patches,
    country_series,
    load_cases,
    load_centers,
    load_provinces,
    select_window,
    write_centers,
    write_patches,
    write_series,
)
from .errors import AllIterationsFailedError, ModelError, NumericalBlowupError
from .fitting import (
    PARAM_NAMES,
    FitProblem,
    FitResult,
    ModelConfig,
    Sampler,
    circular_range,
    fit,
    fit_per_patch,
    fit_two_stage,
)
from .gravity import (
    GravityParams,
    distance,
    gravity_matrix,
    identity_matrix,
    uniform_matrix,
    weight_vs_distance,
)
from .model import COMPARTMENTS, DEFAULT_DT, DiseaseParams, EpidemicSeries, PatchState, SeasonalBeta, integrate, weekly_incidence
from .synthetic import (
    SWEEP_BASE,
    SWEEPABLE,
    correlation_vs_distance,
    generate_scenario,
    parameter_sweep,
    peak_delay,
    run_synthetic,
    scaled_gravity,
)

log = logging.getLogger("gravdengue")

DEFAULT_SEED = 0

# option name -> (type, default, help); the help text states units
GLOBAL_OPTS = {
    "seed": (int, DEFAULT_SEED, "integer RNG seed (default %(default)s)"),
    "out": (str, "out", "output directory, created if absent (default %(default)s)"),
    "dt": (float, DEFAULT_DT, "integration step [days] (default %(default)s)"),
}

GRAVITY_OPTS = {
    "alpha": (float, 1.0, "gravity exponent on the origin population [-] (default %(default)s)"),
    "beta": (float, 1.0, "gravity exponent on the destination population [-] (default %(default)s)"),
    "gamma": (float, 2.0, "gravity distance exponent [-] (default %(default)s)"),
    "theta": (float, 1.0, "gravity scale factor [-] (default %(default)s)"),
}

DISEASE_OPTS = {
    "beta0": (float, 0.3, "mean vector transmission rate [1/day] (default %(default)s)"),
    "eps": (float, 0.0, "seasonal amplitude of the vector transmission rate [1/day] (default %(default)s)"),
    "phi": (float, 0.0, "seasonal phase offset [days] (default %(default)s)"),
    "beta_h": (float, 0.3, "host transmission rate [1/day] (default %(default)s)"),
}

SUBCOMMANDS = {
    "synthetic": {
        "mode": (str, "uniform", "coupling of the driver/follower scenario: uniform | gravity (default %(default)s)"),
        "weight": (float, 0.01, "uniform off-diagonal visit weight [-] (default %(default)s)"),
        **GRAVITY_OPTS,
        "sweep": (str, None, "gravity parameter to sweep: alpha | beta | gamma | theta"),
        "values": (str, "0.1,0.5,1,2", "comma-separated sweep values [-] (default %(default)s)"),
        "n_cities": (int, 100, "number of cities including the driver [-] (default %(default)s)"),
        "horizon": (float, 2000.0, "simulated time [days] (default %(default)s)"),
        "beta_v": (float, 0.3, "vector transmission rate, constant [1/day] (default %(default)s)"),
        "cap": (float, 0.01, "largest off-diagonal gravity weight after rescaling [-] (default %(default)s)"),
    },
    "simulate": {
        "centers": (str, None, "patch CSV patch_id,lat,lon,population [degrees, individuals]"),
        "provinces": (str, None, "province CSV, grouped with --scheme when --centers is not given"),
        "scheme": (str, "three_patch", "province grouping: three_patch | per_province (default %(default)s)"),
        "coupling": (str, "gravity", "identity | uniform | gravity (default %(default)s)"),
        "weight": (float, 0.0, "uniform off-diagonal visit weight [-] (default %(default)s)"),
        **GRAVITY_OPTS,
        **DISEASE_OPTS,
        "infected": (str, "1", "initial infected hosts per patch [individuals]; one value or a comma list (default %(default)s)"),
        "horizon": (float, 365.0, "simulated time [days] (default %(default)s)"),
        "no_seasonal": (bool, False, "use a constant vector transmission rate beta0"),
    },
    "fit": {
        "provinces": (str, None, "province CSV (required)"),
        "cases": (str, None, "weekly case CSV week,province_id,count (required)"),
        "scheme": (str, "three_patch", "province grouping: three_patch | per_province | active (provinces with cases in the window) (default %(default)s)"),
        "window": (str, "seasonal_2002_2008", f"named window ({', '.join(WINDOWS)}) or START-END weeks, inclusive (default %(default)s)"),
        "coupling": (str, "identity", "identity | uniform | gravity (default %(default)s)"),
        "weight": (float, 0.0, "uniform off-diagonal visit weight [-] (default %(default)s)"),
        **GRAVITY_OPTS,
        **DISEASE_OPTS,
        "free": (list, None, "free parameter as NAME=SAMPLER, repeatable; samplers: uniform(a,b) | circular [days] | log_decade | fixed(v)"),
        "iterations": (int, 10_000, "random-search iterations [-] (default %(default)s)"),
        "objective": (str, "least_squares", "least_squares | pearson_chi2 (default %(default)s)"),
        "aggregate": (bool, False, "score the country total instead of each patch"),
        "per_patch": (bool, False, "non-linked fit: independent best parameters per patch (identity coupling)"),
        "two_stage": (bool, False, "gravity fit: alpha = gamma = 1 first, then alpha and gamma"),
        "top_k": (int, 5, "number of best draws reported [-] (default %(default)s)"),
        "no_seasonal": (bool, False, "use a constant vector transmission rate beta0"),
    },
    "climate": {
        "climate": (str, None, "climate CSV date,patch_id,tmin_f [ISO date, degrees F] (required)"),
    },
    "gravity": {
        "centers": (str, None, "patch CSV patch_id,lat,lon,population [degrees, individuals]"),
        "provinces": (str, None, "province CSV, grouped with --scheme when --centers is not given"),
        "scheme": (str, "three_patch", "province grouping: three_patch | per_province (default %(default)s)"),
        "n_cities": (int, 100, "synthetic scenario size when no geometry file is given [-] (default %(default)s)"),
        "alpha": (str, "1", "comma-separated origin population exponents [-] (default %(default)s)"),
        "beta": (str, "1", "comma-separated destination population exponents [-] (default %(default)s)"),
        "gamma": (str, "2", "comma-separated distance exponents [-] (default %(default)s)"),
        "theta": (str, "1", "comma-separated scale factors [-] (default %(default)s)"),
        "focal": (str, None, "patch whose weights are plotted against distance (default: most populous)"),
        "normalize": (bool, False, "divide each matrix row by its sum"),
    },
}


CHOICES = {
    "mode": ("uniform", "gravity"),
    "coupling": ("identity", "uniform", "gravity"),
    "objective": ("least_squares", "pearson_chi2"),
    "sweep": SWEEPABLE,
}


def _add(parser, name, spec, unset=None):
    typ, default, text = spec
    flag = "--" + name.replace("_", "-")
    if typ is bool:
        parser.add_argument(flag, dest=name, action="store_true", default=unset, help=text)
    elif typ is list:
        parser.add_argument(flag, dest=name, action="append", default=unset, help=text)
    else:
        parser.add_argument(flag, dest=name, type=typ, default=unset, choices=CHOICES.get(name),
                            help=text % {"default": default})


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gravdengue",
        description="Multi-patch vector-host epidemic model with gravity coupling.",
        epilog="Options may also come from --config INI; command-line flags take precedence.",
    )
    parser.add_argument("--config", help="INI file with [global], per-subcommand and [samplers] sections")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    for name, spec in GLOBAL_OPTS.items():
        _add(parser, name, spec)
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "synthetic": "driver/follower city experiments and parameter sweeps",
        "simulate": "run the model on patch geometry",
        "fit": "random-search calibration against weekly case counts",
        "climate": "sinusoid fits to daily minimum temperature",
        "gravity": "gravity matrices and weight-vs-distance data",
    }
    for cmd, opts in SUBCOMMANDS.items():
        p = sub.add_parser(cmd, help=helps[cmd], description=helps[cmd])
        # global flags are accepted after the subcommand too
        for name, spec in GLOBAL_OPTS.items():
            _add(p, name, spec, unset=argparse.SUPPRESS)
        for name, spec in opts.items():
            _add(p, name, spec)
    return parser


def _resolve(args, config: configparser.ConfigParser):
    """Fill unset options from the config file, then from the defaults."""
    sections = [("global", GLOBAL_OPTS), (args.command, SUBCOMMANDS[args.command])]
    for section, opts in sections:
        for name, (typ, default, _) in opts.items():
            if getattr(args, name, None) is not None:
                continue
            value = default
            if config.has_option(section, name):
                raw = config.get(section, name)
                if typ is bool:
                    value = config.getboolean(section, name)
                elif typ is list:
                    value = [s.strip() for s in raw.splitlines() if s.strip()]
                else:
                    value = typ(raw)
            setattr(args, name, value)
    return args


def _floats(text: str) -> list[float]:
    return [float(v) for v in str(text).split(",") if v.strip()]


def _write_rows(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _fmt(v):
    return f"{v:.10g}" if isinstance(v, float) else v


# ------------------------------------------------------------------ synthetic

def cmd_synthetic(args, out: Path) -> None:
    scenario = generate_scenario(args.n_cities - 1, rng_seed=args.seed)
    _write_rows(out / "scenario.csv", ["city", "population", "x", "y"],
                [(g.patch_id, _fmt(g.population), _fmt(g.x), _fmt(g.y)) for g in scenario.geoms])
    if args.sweep:
        if args.sweep not in SWEEPABLE:
            raise ModelError(f"--sweep must be one of {SWEEPABLE}")
        fixed = GravityParams(args.alpha, args.beta, args.gamma, args.theta) if _explicit_gravity(args) else SWEEP_BASE
        curves = parameter_sweep(scenario, args.sweep, _floats(args.values), fixed=fixed, cap=args.cap,
                                 horizon=args.horizon, dt=args.dt, beta_v=args.beta_v)
        _write_rows(out / f"sweep_{args.sweep}.csv", [args.sweep, "city", "distance", "correlation"],
                    [(_fmt(c.value), p.patch_id, _fmt(p.distance), _fmt(p.correlation)) for c in curves for p in c.points])
        _write_rows(out / f"sweep_{args.sweep}_summary.csv",
                    [args.sweep, "mean_correlation", "steepness", "implied_theta"],
                    [(_fmt(c.value), _fmt(c.mean_correlation), _fmt(c.steepness), _fmt(c.implied_theta)) for c in curves])
        plots.scatter_chart(
            out / f"sweep_{args.sweep}.svg",
            {f"{args.sweep}={c.value:g}": ([p.distance for p in c.points], [p.correlation for p in c.points]) for c in curves},
            "distance from driver [grid units]", "correlation with driver I_h",
        )
        for c in curves:
            print(f"{args.sweep}={c.value:g}: mean correlation {c.mean_correlation:.4f}, steepness {c.steepness:.4f}")
        return
    n = len(scenario.geoms)
    if args.mode == "uniform":
        coupling = uniform_matrix(n, args.weight, patch_ids=scenario.patch_ids)
    elif args.mode == "gravity":
        coupling, implied = scaled_gravity(scenario, GravityParams(args.alpha, args.beta, args.gamma, args.theta), cap=args.cap)
        print(f"implied raw-unit theta: {implied:.6g}")
    else:
        raise ModelError(f"--mode must be uniform or gravity, got {args.mode!r}")
    traj = run_synthetic(scenario, coupling, beta_v=args.beta_v, horizon=args.horizon, dt=args.dt)
    ih = traj.compartment("i_h")
    _write_rows(out / "infected_hosts.csv", ["day", *traj.patch_ids],
                [(_fmt(float(t)), *(_fmt(float(v)) for v in row)) for t, row in zip(traj.times, ih)])
    delays = peak_delay(traj, scenario.seed_patch)
    points = correlation_vs_distance(traj, scenario.geoms, scenario.seed_patch)
    _write_rows(out / "correlation.csv", ["city", "distance", "correlation", "peak_delay_days"],
                [(p.patch_id, _fmt(p.distance), _fmt(p.correlation),
                  "" if delays[p.patch_id] is None else _fmt(delays[p.patch_id])) for p in points])
    plots.line_chart(out / "infected_hosts.svg", traj.times, {pid: ih[:, j] for j, pid in enumerate(traj.patch_ids)},
                     "time [days]", "infected hosts", legend=False)
    plots.scatter_chart(out / "correlation.svg", {"cities": ([p.distance for p in points], [p.correlation for p in points])},
                        "distance from driver [grid units]", "correlation with driver I_h")
    follower = [d for pid, d in delays.items() if pid != scenario.seed_patch and d is not None]
    print(f"mean follower peak delay: {np.mean(follower):.2f} days" if follower else "no follower epidemics")


def _explicit_gravity(args) -> bool:
    return any(getattr(args, f"_set_{k}", False) for k in ("alpha", "beta", "gamma", "theta"))


# ------------------------------------------------------------------- geometry

def _geometry(args):
    if args.centers:
        return load_centers(args.centers)
    if args.provinces:
        layout = build_patches(load_provinces(args.provinces), args.scheme)
        return list(layout.geometries)
    raise ModelError("need --centers or --provinces")


def _coupling(args, geoms, gravity_params=None):
    ids = [g.patch_id for g in geoms]
    if args.coupling == "identity":
        return identity_matrix(len(geoms), ids)
    if args.coupling == "uniform":
        return uniform_matrix(len(geoms), args.weight, patch_ids=ids)
    if args.coupling == "gravity":
        gp = gravity_params or GravityParams(args.alpha, args.beta, args.gamma, args.theta)
        return gravity_matrix(geoms, gp, distance_mode="haversine")
    raise ModelError(f"unknown coupling {args.coupling!r}")


def _disease(args) -> DiseaseParams:
    return DiseaseParams(beta_v=SeasonalBeta(args.beta0, 0.0 if args.no_seasonal else args.eps, args.phi), beta_h=args.beta_h)


# ------------------------------------------------------------------- simulate

def cmd_simulate(args, out: Path) -> None:
    geoms = _geometry(args)
    n = len(geoms)
    coupling = _coupling(args, geoms)
    infected = _floats(args.infected)
    if len(infected) == 1:
        infected = infected * n
    if len(infected) != n:
        raise ModelError(f"--infected has {len(infected)} values for {n} patches")
    params = _disease(args)
    initial = [PatchState.seeded(g.population, k, params.vector_ratio) for g, k in zip(geoms, infected)]
    traj = integrate(initial, [params] * n, coupling, (0.0, args.horizon), args.dt, seasonal=not args.no_seasonal,
                     patch_ids=[g.patch_id for g in geoms], populations=[g.population for g in geoms])
    rows = [
        (_fmt(float(t)), pid, *(_fmt(float(v)) for v in traj.states[k, j]))
        for k, t in enumerate(traj.times) for j, pid in enumerate(traj.patch_ids)
    ]
    _write_rows(out / "trajectory.csv", ["day", "patch_id", *COMPARTMENTS], rows)
    inc = weekly_incidence(traj)
    write_series(out / "incidence.csv", inc)
    write_series(out / "incidence_country.csv", country_series(inc))
    write_centers_from_geoms(out / "centers.csv", geoms)
    _write_rows(out / "coupling.csv", ["patch_id", *coupling.patch_ids],
                [(pid, *(_fmt(float(v)) for v in row)) for pid, row in zip(coupling.patch_ids, coupling.entries)])
    series = {pid: inc.values[:, j] for j, pid in enumerate(inc.patch_ids)}
    if n > 1:
        series["country"] = inc.total()
    plots.line_chart(out / "incidence.svg", inc.times, series, "week", "new infections per week")
    print(f"simulated {n} patches for {args.horizon:g} days; {float(inc.total().sum()):.6g} infections")


def write_centers_from_geoms(path, geoms):
    _write_rows(path, ["patch_id", "lat", "lon", "population"],
                [(g.patch_id, repr(g.x), repr(g.y), _fmt(g.population)) for g in geoms])


# ------------------------------------------------------------------------ fit

def _window(text):
    if text in WINDOWS:
        return text
    start, _, end = text.partition("-")
    try:
        return int(start), int(end)
    except ValueError:
        raise ModelError(f"window must be a name ({', '.join(WINDOWS)}) or START-END, got {text!r}") from None


def _samplers(args, config) -> dict:
    spec = {}
    if config.has_section("samplers"):
        for name, text in config.items("samplers"):
            spec[name] = Sampler.parse(text)
    for item in args.free or []:
        name, sep, text = item.partition("=")
        if not sep:
            raise ModelError(f"--free expects NAME=SAMPLER, got {item!r}")
        spec[name.strip()] = Sampler.parse(text)
    if not spec:
        spec = {"beta0": Sampler("uniform", 0.0, 1.0), "eps": Sampler("uniform", 0.0, 0.5), "phi": Sampler("circular")}
    return spec


def _write_result(out: Path, stem: str, result: FitResult, names):
    _write_rows(out / f"{stem}.csv", ["rank", "score", *names],
                [(k + 1, _fmt(s), *(_fmt(p[nm]) for nm in names)) for k, (p, s) in enumerate(result.top_k)])
    _write_rows(out / f"{stem}_diagnostics.csv", ["series", "peak_week_error", "magnitude_ratio"],
                [(key, d["peak_week_error"], _fmt(d["magnitude_ratio"])) for key, d in result.diagnostics.items()])


def _ranges(result: FitResult, names):
    out = {}
    for nm in names:
        vals = [p[nm] for p, _ in result.top_k]
        out[nm] = circular_range(vals) if nm == "phi" else (min(vals), max(vals))
    return out


def cmd_fit(args, out: Path, config) -> None:
    if not (args.provinces and args.cases):
        raise ModelError("fit needs --provinces and --cases")
    provinces = load_provinces(args.provinces)
    cases = load_cases(args.cases, [p.province_id for p in provinces])
    window = _window(args.window)
    scheme = args.scheme
    if scheme == "active":
        active = set(active_provinces(cases, window))
        scheme = {p.province_id: (p.province_id if p.province_id in active else None) for p in provinces}
    layout = build_patches(provinces, scheme)
    observed_all = aggregate_cases(cases, layout)
    write_patches(out / "patches.csv", layout)
    write_centers(out / "centers.csv", layout)
    observed = select_window(observed_all, window)
    observed = EpidemicSeries(observed.times, observed.values.astype(float), observed.patch_ids,
                              observed.provenance, observed.kind, observed.meta)
    write_series(out / "observed.csv", observed)
    geoms = layout.geometries
    coupling = "identity" if args.per_patch else args.coupling
    model = ModelConfig(
        geoms, (_disease(args),) * len(geoms), coupling=coupling,
        gravity=GravityParams(args.alpha, args.beta, args.gamma, args.theta),
        uniform_weight=args.weight, seasonal=not args.no_seasonal, dt=args.dt,
    )
    spec = _samplers(args, config)
    problem = FitProblem(observed, model, spec, iterations=args.iterations, objective=args.objective,
                         rng_seed=args.seed, scoring="aggregate" if args.aggregate else "per_patch", top_k=args.top_k)
    names = list(spec)
    print(f"seed={args.seed} iterations={args.iterations} objective={args.objective} patches={len(geoms)}")
    if args.per_patch:
        results = fit_per_patch(problem)
        rows = []
        for pid, res in results.items():
            _write_result(out, f"fit_{pid}", res, names)
            rng = _ranges(res, names)
            rows.append((pid, _fmt(res.best_score), *(f"{_fmt(rng[n][0])}-{_fmt(rng[n][1])}" for n in names)))
        _write_rows(out / "fit_ranges.csv", ["patch_id", "best_score", *names], rows)
        for r in rows:
            print(", ".join(map(str, r)))
        best = {pid: res.best_incidence.column(pid) for pid, res in results.items()}
        _write_rows(out / "best_incidence.csv", ["week", *best],
                    [(int(w), *(_fmt(float(best[p][k])) for p in best)) for k, w in enumerate(observed.times)])
        return
    if args.two_stage:
        first, second = fit_two_stage(problem)
        _write_result(out, "fit_stage1", first, sorted(first.best_params))
        result = second
    else:
        result = fit(problem)
    names = sorted(result.best_params, key=lambda k: PARAM_NAMES.index(k))
    _write_result(out, "fit", result, names)
    write_series(out / "best_incidence.csv", result.best_incidence)
    plots.line_chart(out / "fit.svg", observed.times,
                     {"observed": observed.total(), "best fit": result.best_incidence.total()},
                     "week", "cases per week")
    print(f"best score {result.best_score:.6g} ({result.failures} failed draws)")
    for nm, (lo, hi) in _ranges(result, names).items():
        print(f"  {nm}: {lo:.6g} - {hi:.6g}")


# -------------------------------------------------------------------- climate

def cmd_climate(args, out: Path) -> None:
    if not args.climate:
        raise ModelError("climate needs --climate")
    series = load_climate(args.climate)
    fits = []
    for pid, s in series.items():
        f = fit_sinusoid(s)
        fits.append(f)
        write_curve(out / f"curve_{pid}.csv", s, f)
        plots.line_chart(out / f"curve_{pid}.svg", s.days, {"data": s.tmin, "best sinusoidal fit": f(s.days)},
                         "day", "minimum temperature [F]", title=pid)
        print(f"{pid}: T0={f.t0:.4f} F, eps={f.eps:.4f} F, variation={f.pct_variation:.2f}%")
    write_fits(out / "climate_fits.csv", fits)


# -------------------------------------------------------------------- gravity

def cmd_gravity(args, out: Path) -> None:
    if args.centers or args.provinces:
        geoms = _geometry(args)
        mode = "haversine"
    else:
        geoms = list(generate_scenario(args.n_cities - 1, rng_seed=args.seed).geoms)
        mode = "euclidean"
        _write_rows(out / "scenario.csv", ["city", "population", "x", "y"],
                    [(g.patch_id, _fmt(g.population), _fmt(g.x), _fmt(g.y)) for g in geoms])
    focal = args.focal or max(geoms, key=lambda g: g.population).patch_id
    grid = list(itertools.product(_floats(args.alpha), _floats(args.beta), _floats(args.gamma), _floats(args.theta)))
    rows, groups = [], {}
    for k, (a, b, g, th) in enumerate(grid):
        matrix = gravity_matrix(geoms, GravityParams(a, b, g, th), distance_mode=mode, normalize_rows=args.normalize)
        name = "gravity_matrix.csv" if len(grid) == 1 else f"gravity_matrix_{k + 1}.csv"
        _write_rows(out / name, ["patch_id", *matrix.patch_ids],
                    [(pid, *(_fmt(float(v)) for v in row)) for pid, row in zip(matrix.patch_ids, matrix.entries)])
        pairs = weight_vs_distance(matrix, geoms, focal, mode) if len(geoms) > 1 else []
        others = [gg.patch_id for gg in sorted((gg for gg in geoms if gg.patch_id != focal),
                                                  key=lambda gg: distance(_find(geoms, focal), gg, mode))]
        rows += [(_fmt(a), _fmt(b), _fmt(g), _fmt(th), pid, _fmt(d), _fmt(w)) for pid, (d, w) in zip(others, pairs)]
        groups[f"a={a:g} b={b:g} g={g:g} t={th:g}"] = ([d for d, _ in pairs], [w for _, w in pairs])
    _write_rows(out / "weight_vs_distance.csv", ["alpha", "beta", "gamma", "theta", "patch_id", "distance", "weight"], rows)
    if any(len(x) for x, _ in groups.values()):
        unit = "km" if mode == "haversine" else "grid units"
        plots.scatter_chart(out / "weight_vs_distance.svg", groups, f"distance from {focal} [{unit}]", "gravity weight")
    print(f"wrote {len(grid)} gravity matrices for {len(geoms)} patches")


def _find(geoms, pid):
    return next(g for g in geoms if g.patch_id == pid)


# ----------------------------------------------------------------------- main

def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(argv)
    for k in ("alpha", "beta", "gamma", "theta"):
        setattr(args, f"_set_{k}", getattr(args, k, None) is not None)
    config = configparser.ConfigParser()
    if args.config:
        if not config.read(args.config, encoding="utf-8"):
            parser.error(f"cannot read config file {args.config}")
        for k in ("alpha", "beta", "gamma", "theta"):
            if config.has_option(args.command, k):
                setattr(args, f"_set_{k}", True)
    _resolve(args, config)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "run.txt").write_text(
        f"command={args.command}\nseed={args.seed}\ndt={args.dt}\n", encoding="utf-8"
    )
    print(f"# gravdengue {args.command} seed={args.seed} dt={args.dt}")
    try:
        if args.command == "fit":
            cmd_fit(args, out, config)
        else:
            {"synthetic": cmd_synthetic, "simulate": cmd_simulate, "climate": cmd_climate,
             "gravity": cmd_gravity}[args.command](args, out)
    except NumericalBlowupError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except AllIterationsFailedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for line in exc.failure_log[:10]:
            print(f"  {line}", file=sys.stderr)
        return 4
    except (ModelError, OverflowError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
