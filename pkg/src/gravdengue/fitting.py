"""Goodness-of-fit statistics and random-search calibration.

Every iteration draws one parameter set, runs the model over the observed
window and scores its weekly incidence against the data.  Iterations are
evaluated in fixed-size batches through the vectorised integrator; each
iteration draws from its own RNG stream derived from the master seed, so a
run with more iterations sees a superset of the draws of a shorter one.
"""
from __future__ import annotations

import logging
import math
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    AllIterationsFailedError,
    ConfigurationError,
    DomainError,
    StructuralError,
)
from .gravity import GravityParams, _log_terms, gravity_weights
from .model import (
    DEFAULT_DT,
    EH,
    DiseaseParams,
    EpidemicSeries,
    ModelArrays,
    PatchGeometry,
    PatchState,
    integrate_array,
    weekly_counts,
)

log = logging.getLogger(__name__)

CHI2_FLOOR = 1e-6
BATCH_SIZE = 250
WORKERS_ENV = "GRAVDENGUE_WORKERS"

DISEASE_NAMES = ("beta0", "eps", "phi", "beta_h")
GRAVITY_NAMES = ("alpha", "beta", "gamma", "theta")
PARAM_NAMES = DISEASE_NAMES + GRAVITY_NAMES + ("weight",)


# ---------------------------------------------------------------- objectives

def _paired(model, data):
    m = np.asarray(model, dtype=float)
    d = np.asarray(data, dtype=float)
    if m.shape != d.shape:
        raise StructuralError(f"model has shape {m.shape}, data has shape {d.shape}")
    if m.size == 0:
        raise StructuralError("cannot score empty series")
    return m, d


def least_squares(model, data) -> float:
    """Sum of squared point-by-point differences."""
    m, d = _paired(model, data)
    return float(np.sum((m - d) ** 2))


def pearson_chi2(model, data, floor: float = CHI2_FLOOR) -> float:
    """Sum of ``(M - D)**2 / M`` with the model value floored at ``floor``."""
    m, d = _paired(model, data)
    return float(np.sum((m - d) ** 2 / np.maximum(m, floor)))


def _ls_terms(m, d):
    return (m - d) ** 2


def _chi2_terms(m, d):
    return (m - d) ** 2 / np.maximum(m, CHI2_FLOOR)


OBJECTIVES = {"least_squares": _ls_terms, "pearson_chi2": _chi2_terms}


# ------------------------------------------------------------------ samplers

@dataclass(frozen=True)
class Sampler:
    """Distribution for one free parameter.

    kinds: ``uniform`` on [low, high), ``circular`` on [0, 365),
    ``log_decade`` (a uniform (0, 1] value times 10**k with k drawn from
    -decades..0), ``fixed`` (always ``value``).
    """

    kind: str
    low: float = 0.0
    high: float = 1.0
    value: float = 0.0
    decades: int = 10

    def __post_init__(self):
        if self.kind not in ("uniform", "circular", "log_decade", "fixed"):
            raise ConfigurationError(f"unknown sampler {self.kind!r}")
        if self.kind == "uniform" and not self.high > self.low:
            raise ConfigurationError(f"uniform sampler needs high > low (got {self.low}, {self.high})")

    def draw(self, rng: np.random.Generator) -> float:
        if self.kind == "uniform":
            return float(rng.uniform(self.low, self.high))
        if self.kind == "circular":
            return float(rng.uniform(0.0, 365.0))
        if self.kind == "log_decade":
            mantissa = 1.0 - rng.random()
            return float(mantissa * 10.0 ** -int(rng.integers(0, self.decades + 1)))
        return float(self.value)

    @classmethod
    def parse(cls, text: str) -> "Sampler":
        """Parse ``uniform(a,b)``, ``circular``, ``log_decade`` or ``fixed(v)``."""
        m = re.fullmatch(r"\s*(\w+)\s*(?:\((.*)\))?\s*", text)
        if not m:
            raise ConfigurationError(f"cannot parse sampler {text!r}")
        kind, args = m.group(1), m.group(2)
        nums = [float(a) for a in args.split(",")] if args and args.strip() else []
        if kind == "uniform":
            if len(nums) != 2:
                raise ConfigurationError("uniform sampler takes (low, high)")
            return cls("uniform", low=nums[0], high=nums[1])
        if kind == "fixed":
            if len(nums) != 1:
                raise ConfigurationError("fixed sampler takes (value)")
            return cls("fixed", value=nums[0])
        if kind == "log_decade":
            return cls("log_decade", decades=int(nums[0]) if nums else 10)
        if kind == "circular" and not nums:
            return cls("circular")
        raise ConfigurationError(f"unknown sampler {text!r}")

    def __str__(self):
        if self.kind == "uniform":
            return f"uniform({self.low:g},{self.high:g})"
        if self.kind == "fixed":
            return f"fixed({self.value:g})"
        if self.kind == "log_decade":
            return f"log_decade({self.decades})"
        return "circular"


def sample_params(spec: Mapping[str, Sampler], rng: np.random.Generator) -> dict:
    """One draw per free parameter, in ``spec`` order."""
    out = {}
    for name, sampler in spec.items():
        if not isinstance(sampler, Sampler):
            raise ConfigurationError(f"parameter {name!r}: not a Sampler")
        out[name] = sampler.draw(rng)
    return out


def iteration_rng(seed: int, iteration: int, stream: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream, iteration)))


# ------------------------------------------------------------- problem types

@dataclass(frozen=True)
class ModelConfig:
    """Everything needed to simulate the observed window except the free parameters.

    ``coupling`` is ``identity``, ``uniform`` (off-diagonal ``uniform_weight``)
    or ``gravity``.  ``t0`` is the model time (days) at the start of the
    window, which anchors the seasonal phase.
    """

    geoms: tuple
    params: tuple
    coupling: str = "identity"
    gravity: GravityParams = GravityParams(1.0, 1.0, 1.0, 1.0)
    uniform_weight: float = 0.0
    distance_mode: str = "haversine"
    diagonal: float = 1.0
    seasonal: bool = True
    dt: float = DEFAULT_DT
    t0: float = 0.0
    initial_infected: tuple | None = None

    def __post_init__(self):
        if len(self.geoms) != len(self.params):
            raise StructuralError(f"{len(self.geoms)} patches but {len(self.params)} parameter sets")
        if self.coupling not in ("identity", "uniform", "gravity"):
            raise ConfigurationError(f"unknown coupling {self.coupling!r}")
        object.__setattr__(self, "geoms", tuple(self.geoms))
        object.__setattr__(self, "params", tuple(self.params))

    @property
    def patch_ids(self) -> tuple:
        return tuple(g.patch_id for g in self.geoms)


@dataclass(frozen=True)
class FitProblem:
    observed: EpidemicSeries
    model: ModelConfig
    free_params: dict
    iterations: int = 10_000
    objective: str = "least_squares"
    rng_seed: int = 0
    scoring: str = "per_patch"
    top_k: int = 5

    def __post_init__(self):
        if self.iterations < 1:
            raise ConfigurationError("iterations must be >= 1")
        if not self.free_params:
            raise ConfigurationError("need at least one free parameter")
        unknown = set(self.free_params) - set(PARAM_NAMES)
        if unknown:
            raise ConfigurationError(f"unknown free parameters {sorted(unknown)}; choose from {PARAM_NAMES}")
        if self.objective not in OBJECTIVES:
            raise ConfigurationError(f"unknown objective {self.objective!r}")
        if self.scoring not in ("per_patch", "aggregate"):
            raise ConfigurationError(f"unknown scoring {self.scoring!r}")
        if np.any(np.asarray(self.observed.values) < 0):
            raise DomainError("observed counts must be nonnegative")
        if tuple(self.observed.patch_ids) != self.model.patch_ids:
            raise StructuralError(
                f"observed patches {self.observed.patch_ids} do not match model patches {self.model.patch_ids}"
            )
        object.__setattr__(self, "free_params", dict(self.free_params))


@dataclass(frozen=True)
class FitResult:
    best_params: dict
    best_score: float
    top_k: list
    evaluations: int
    failures: int = 0
    failure_log: list = field(default_factory=list, repr=False)
    diagnostics: dict = field(default_factory=dict)
    best_incidence: EpidemicSeries | None = field(default=None, repr=False)

    def param_range(self, name: str) -> tuple[float, float]:
        vals = [p[name] for p, _ in self.top_k]
        return min(vals), max(vals)


# -------------------------------------------------------------- evaluation

def initial_states(model: ModelConfig, observed: EpidemicSeries) -> np.ndarray:
    """Hosts seeded with the first observed weekly count, vectors fully susceptible.

    If every patch starts at zero, one infected host is placed in the patch
    with the largest observed total so the model can produce cases at all.
    """
    if model.initial_infected is not None:
        infected = np.asarray(model.initial_infected, dtype=float)
    else:
        infected = np.asarray(observed.values[0], dtype=float).copy()
        if infected.sum() == 0:
            k = int(np.argmax(observed.values.sum(axis=0)))
            log.warning("first observed week is all zero; seeding 1 case in %s", model.patch_ids[k])
            infected[k] = 1.0
    if infected.shape != (len(model.geoms),):
        raise StructuralError("initial_infected needs one value per patch")
    return np.array([
        PatchState.seeded(g.population, inf, p.vector_ratio).as_array()
        for g, p, inf in zip(model.geoms, model.params, infected)
    ])


def _draw_all(problem: FitProblem, stream: int = 0) -> tuple[list, dict]:
    rows = [
        sample_params(problem.free_params, iteration_rng(problem.rng_seed, i, stream))
        for i in range(problem.iterations)
    ]
    cols = {name: np.array([r[name] for r in rows]) for name in problem.free_params}
    return rows, cols


class _Evaluator:
    """Runs batches of parameter draws and returns weekly incidence per draw."""

    def __init__(self, problem: FitProblem):
        self.problem = problem
        model = problem.model
        self.n_weeks = len(problem.observed)
        self.base = ModelArrays.from_params(model.params, [g.population for g in model.geoms])
        self.y0 = initial_states(model, problem.observed)
        self.gravity_free = any(k in problem.free_params for k in GRAVITY_NAMES)
        n = len(model.geoms)
        if model.coupling == "gravity" or self.gravity_free:
            if model.coupling != "gravity":
                raise ConfigurationError("gravity parameters are free but coupling is not 'gravity'")
            self.log_n, self.log_d, _ = _log_terms(model.geoms, model.distance_mode)
        if "weight" in problem.free_params and model.coupling != "uniform":
            raise ConfigurationError("'weight' is free but coupling is not 'uniform'")
        self.fixed_coupling = None
        if not self.gravity_free and "weight" not in problem.free_params:
            self.fixed_coupling = self._coupling({})[0] if n else None

    def _coupling(self, cols: Mapping[str, np.ndarray]):
        model = self.problem.model
        n = len(model.geoms)
        if model.coupling == "identity":
            return np.eye(n), None
        if model.coupling == "uniform":
            w = cols.get("weight", np.asarray(model.uniform_weight, dtype=float))
            p = np.broadcast_to(np.asarray(w, dtype=float)[..., None, None], np.shape(w) + (n, n)).copy()
            p[..., np.arange(n), np.arange(n)] = model.diagonal
            return p, None
        g = model.gravity
        args = [cols.get(name, np.asarray(getattr(g, name), dtype=float)) for name in GRAVITY_NAMES]
        p = gravity_weights(self.log_n, self.log_d, *args)
        bad = ~np.isfinite(p).all(axis=(-2, -1))
        p[..., np.arange(n), np.arange(n)] = model.diagonal
        return p, bad

    def run(self, cols: Mapping[str, np.ndarray]):
        """Weekly incidence ``(B, weeks, n)`` and a failure reason per draw (None on success)."""
        problem = self.problem
        model = problem.model
        size = len(next(iter(cols.values())))
        n = len(model.geoms)
        reasons: list = [None] * size

        def per_draw(name, default):
            v = cols.get(name)
            return np.broadcast_to(default, (size, n)) if v is None else np.broadcast_to(v[:, None], (size, n))

        beta0 = per_draw("beta0", self.base.beta0)
        eps = per_draw("eps", self.base.eps)
        invalid = (beta0 < 0) | (eps < 0)
        if model.seasonal:
            invalid |= beta0 - eps < 0
        if "beta_h" in cols:
            invalid |= (cols["beta_h"] < 0)[:, None]
        for k in np.flatnonzero(invalid.any(axis=1)):
            reasons[k] = "invalid transmission parameters (need beta0 >= eps >= 0, beta_h >= 0)"

        m = self.base.replace(beta0=beta0, eps=eps, phi=per_draw("phi", self.base.phi) % 365.0,
                              beta_h=per_draw("beta_h", self.base.beta_h))
        if self.fixed_coupling is not None:
            coupling = self.fixed_coupling
        else:
            coupling, bad = self._coupling(cols)
            if bad is not None:
                for k in np.flatnonzero(bad):
                    reasons[k] = reasons[k] or "non-finite gravity weight"
            if np.any(coupling < 0):
                for k in np.flatnonzero((coupling < 0).any(axis=(-2, -1))):
                    reasons[k] = reasons[k] or "negative coupling weight"
        ok = np.array([r is None for r in reasons])
        if not ok.any():
            return np.zeros((size, self.n_weeks, n)), reasons
        idx = np.flatnonzero(ok)
        m = m.replace(**{k: getattr(m, k)[idx] for k in ("beta0", "eps", "phi", "beta_h")})
        if coupling.ndim == 3:
            coupling = coupling[idx]
        y0 = np.broadcast_to(self.y0, (len(idx), n, 7))
        t0 = model.t0
        times, eh, failed_at = integrate_array(
            y0, m, coupling, t0, t0 + 7.0 * self.n_weeks, model.dt,
            seasonal=model.seasonal, record=[EH], on_blowup="mask",
        )
        counts = weekly_counts(times, m.lam * eh[..., 0])[: self.n_weeks]
        out = np.zeros((size, self.n_weeks, n))
        out[idx] = np.moveaxis(counts, 0, 1)
        for k, t in zip(idx, failed_at):
            if not math.isnan(t):
                reasons[k] = f"numerical blowup at t={t:g}"
        return out, reasons


def _scores(problem: FitProblem, incidence: np.ndarray, separate: bool = False) -> np.ndarray:
    terms = OBJECTIVES[problem.objective]
    data = np.asarray(problem.observed.values, dtype=float)
    if separate:
        return terms(incidence, data).sum(axis=1)
    if problem.scoring == "aggregate":
        return terms(incidence.sum(axis=2), data.sum(axis=1)).sum(axis=1)
    return terms(incidence, data).sum(axis=(1, 2))


def _workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _evaluate_all(problem: FitProblem, cols: Mapping[str, np.ndarray], separate: bool = False):
    evaluator = _Evaluator(problem)
    total = problem.iterations
    starts = list(range(0, total, BATCH_SIZE))

    def job(start):
        batch = {k: v[start:start + BATCH_SIZE] for k, v in cols.items()}
        inc, reasons = evaluator.run(batch)
        return _scores(problem, inc, separate), reasons

    workers = _workers()
    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(job, starts))
    else:
        parts = [job(s) for s in starts]
    scores = np.concatenate([p[0] for p in parts])
    reasons = [r for p in parts for r in p[1]]
    return scores, reasons, evaluator


def peak_diagnostics(model_series: np.ndarray, data_series: np.ndarray) -> dict:
    """Peak-week error (model minus data, weeks) and peak-magnitude ratio (model / data)."""
    m = np.asarray(model_series, dtype=float)
    d = np.asarray(data_series, dtype=float)
    ratio = float(m.max() / d.max()) if d.max() > 0 else math.inf
    return {"peak_week_error": int(np.argmax(m) - np.argmax(d)), "magnitude_ratio": ratio}


def _result(problem, rows, scores, reasons, evaluator, column: int | None = None) -> FitResult:
    failed = np.array([r is not None for r in reasons])
    failure_log = [f"iteration {i}: {r}" for i, r in enumerate(reasons) if r is not None]
    if failed.all():
        raise AllIterationsFailedError(f"all {len(reasons)} iterations failed", failure_log)
    s = np.where(failed, np.inf, scores)
    order = np.argsort(s, kind="stable")
    order = order[~failed[order]][: problem.top_k]
    top = [(dict(rows[i]), float(s[i])) for i in order]
    best = dict(rows[order[0]])
    inc, _ = evaluator.run({k: np.array([v]) for k, v in best.items()})
    inc = inc[0]
    ids = problem.model.patch_ids
    data = np.asarray(problem.observed.values, dtype=float)
    if column is not None:
        diagnostics = {ids[column]: peak_diagnostics(inc[:, column], data[:, column])}
    else:
        diagnostics = {pid: peak_diagnostics(inc[:, i], data[:, i]) for i, pid in enumerate(ids)}
        diagnostics["total"] = peak_diagnostics(inc.sum(axis=1), data.sum(axis=1))
    series = EpidemicSeries(problem.observed.times, inc, ids, provenance="model")
    return FitResult(
        best_params=best,
        best_score=top[0][1],
        top_k=top,
        evaluations=int((~failed).sum()),
        failures=int(failed.sum()),
        failure_log=failure_log,
        diagnostics=diagnostics,
        best_incidence=series,
    )


def fit(problem: FitProblem, stream: int = 0) -> FitResult:
    """Random search: keep the ``top_k`` lowest-scoring of ``problem.iterations`` draws.

    Draws that are invalid (e.g. ``beta0 < eps``) or blow up numerically
    count as failures and are skipped.
    """
    rows, cols = _draw_all(problem, stream)
    scores, reasons, evaluator = _evaluate_all(problem, cols)
    result = _result(problem, rows, scores, reasons, evaluator)
    log.info("fit: best %s = %.6g after %d evaluations (%d failed)",
             problem.objective, result.best_score, result.evaluations, result.failures)
    return result


def fit_per_patch(problem: FitProblem, stream: int = 0) -> dict:
    """Non-linked fitting: each patch keeps its own best draws.

    Requires identity coupling, so every patch evolves independently and the
    same batch of simulations serves all patches.
    """
    if problem.model.coupling != "identity":
        raise ConfigurationError("per-patch fitting needs identity coupling")
    rows, cols = _draw_all(problem, stream)
    scores, reasons, evaluator = _evaluate_all(problem, cols, separate=True)
    return {
        pid: _result(problem, rows, scores[:, i], reasons, evaluator, column=i)
        for i, pid in enumerate(problem.model.patch_ids)
    }


def fit_two_stage(
    problem: FitProblem,
    first_fixed: Mapping[str, float] | None = None,
    second_free: Sequence[str] = ("alpha", "gamma"),
) -> tuple[FitResult, FitResult]:
    """Two-stage gravity calibration.

    Stage 1 holds ``first_fixed`` (default alpha = gamma = 1) and searches the
    remaining free parameters.  Stage 2 fixes everything at the stage-1 best
    and searches only ``second_free``.
    """
    first_fixed = dict(first_fixed or {"alpha": 1.0, "gamma": 1.0})
    missing = [k for k in second_free if k not in problem.free_params]
    if missing:
        raise ConfigurationError(f"stage-2 parameters {missing} need samplers in free_params")
    stage1_spec = {
        k: (Sampler("fixed", value=first_fixed[k]) if k in first_fixed else s)
        for k, s in problem.free_params.items()
    }
    for k, v in first_fixed.items():
        stage1_spec.setdefault(k, Sampler("fixed", value=v))
    first = fit(replace(problem, free_params=stage1_spec), stream=1)
    stage2_spec = {k: Sampler("fixed", value=v) for k, v in first.best_params.items()}
    stage2_spec.update({k: problem.free_params[k] for k in second_free})
    second = fit(replace(problem, free_params=stage2_spec), stream=2)
    return first, second


def circular_range(values: Sequence[float], period: float = 365.0) -> tuple[float, float]:
    """Shortest arc on the circle containing every value, as ``(start, end)``.

    ``end < start`` means the arc wraps through zero.
    """
    if len(values) == 0:
        raise StructuralError("circular_range needs at least one value")
    v = np.sort(np.mod(np.asarray(values, dtype=float), period))
    gaps = np.diff(np.append(v, v[0] + period))
    k = int(np.argmax(gaps))
    start = v[(k + 1) % len(v)]
    end = v[k]
    return float(start), float(end)
