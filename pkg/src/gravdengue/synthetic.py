"""Driver/follower city experiments and synchrony analyses."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import DomainError, StructuralError
from .gravity import CouplingMatrix, GravityParams, distance, gravity_matrix
from .model import DEFAULT_DT, DiseaseParams, PatchGeometry, PatchState, Trajectory, integrate

DRIVER_POPULATION = 8_000_000
FOLLOWER_POPULATION = 100_000
EXTENT = 100.0
MIN_SEPARATION = 1e-6
DEFAULT_HORIZON = 2000.0
DEFAULT_CAP = 0.01


@dataclass(frozen=True)
class SyntheticScenario:
    geoms: tuple
    seed_patch: str
    seed_count: float = 1.0
    rng_seed: int = 0

    @property
    def driver(self) -> PatchGeometry:
        return self.geoms[0]

    @property
    def followers(self) -> tuple:
        return self.geoms[1:]

    @property
    def patch_ids(self) -> tuple:
        return tuple(g.patch_id for g in self.geoms)


def generate_scenario(
    n_followers: int = 99,
    rng_seed: int = 0,
    driver_population: float = DRIVER_POPULATION,
    follower_population: float = FOLLOWER_POPULATION,
    extent: float = EXTENT,
    seed_count: float = 1.0,
) -> SyntheticScenario:
    """One large driver city at the origin and ``n_followers`` equal cities placed uniformly at random."""
    if n_followers < 1:
        raise DomainError("n_followers must be >= 1")
    rng = np.random.default_rng(rng_seed)
    pts = np.zeros((n_followers + 1, 2))
    for k in range(1, n_followers + 1):
        while True:
            cand = rng.uniform(-extent, extent, size=2)
            if np.min(np.hypot(*(pts[:k] - cand).T)) >= MIN_SEPARATION:
                break
        pts[k] = cand
    geoms = [PatchGeometry("city1", float(driver_population), 0.0, 0.0)]
    geoms += [
        PatchGeometry(f"city{k + 1}", float(follower_population), float(x), float(y))
        for k, (x, y) in enumerate(pts[1:], start=1)
    ]
    return SyntheticScenario(tuple(geoms), "city1", seed_count, rng_seed)


def scaled_gravity(
    scenario: SyntheticScenario,
    params: GravityParams,
    cap: float = DEFAULT_CAP,
    reference: GravityParams | None = None,
    pop_unit: float | None = None,
    dist_unit: float | None = None,
) -> tuple[CouplingMatrix, float]:
    """Gravity coupling rescaled into the range usable as visit weights.

    Populations are measured in units of ``pop_unit`` (default: the smallest
    city) and distances in units of ``dist_unit`` (default: the median
    distance from the seeded city to the others).  A constant factor is
    chosen so that the largest off-diagonal entry of the matrix built from
    ``reference`` (default: ``params`` itself) equals ``cap``, and the same
    factor is applied to ``params``.

    Returns the matrix and the ``theta`` that gives the same matrix from raw
    head counts and raw distances.
    """
    if not cap > 0:
        raise DomainError("cap must be > 0")
    pu = float(pop_unit) if pop_unit is not None else min(g.population for g in scenario.geoms)
    if dist_unit is None:
        seed = next(g for g in scenario.geoms if g.patch_id == scenario.seed_patch)
        dist_unit = float(np.median([distance(seed, g) for g in scenario.geoms if g is not seed]))
    du = float(dist_unit)
    if not (pu > 0 and du > 0):
        raise DomainError("population and distance units must be > 0")
    geoms = [PatchGeometry(g.patch_id, g.population / pu, g.x / du, g.y / du) for g in scenario.geoms]
    ref = reference if reference is not None else params
    ref_max = gravity_matrix(geoms, ref).off_diagonal().max()
    if not ref_max > 0:
        raise DomainError("reference gravity matrix has no positive off-diagonal entry")
    factor = cap / ref_max
    matrix = gravity_matrix(geoms, params).scaled(factor)
    implied_theta = params.theta * factor * pu ** -(params.alpha + params.beta) * du**params.gamma
    return matrix, implied_theta


def run_synthetic(
    scenario: SyntheticScenario,
    coupling: CouplingMatrix | np.ndarray,
    beta_v: float = 0.3,
    horizon: float = DEFAULT_HORIZON,
    dt: float = DEFAULT_DT,
    params: DiseaseParams | None = None,
) -> Trajectory:
    """Non-seasonal run seeded with ``seed_count`` infected hosts in the driver city.

    Sampled daily.
    """
    n = len(scenario.geoms)
    entries = np.asarray(coupling, dtype=float)
    if entries.shape != (n, n):
        raise StructuralError(f"coupling is {entries.shape}, scenario has {n} cities")
    base = replace(params, beta_v=beta_v) if params is not None else DiseaseParams(beta_v=beta_v)
    initial = [
        PatchState.seeded(
            g.population,
            scenario.seed_count if g.patch_id == scenario.seed_patch else 0.0,
            base.vector_ratio,
        )
        for g in scenario.geoms
    ]
    return integrate(
        initial,
        [base] * n,
        entries,
        (0.0, horizon),
        dt,
        seasonal=False,
        patch_ids=scenario.patch_ids,
        populations=[g.population for g in scenario.geoms],
    )


@dataclass(frozen=True)
class CorrelationPoint:
    patch_id: str
    distance: float
    correlation: float  # NaN when either series has zero variance


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    a = a - a.mean()
    b = b - b.mean()
    den = math.sqrt(float(a @ a) * float(b @ b))
    if den == 0.0:
        return math.nan
    return float(a @ b) / den


def correlation_vs_distance(
    series: Trajectory,
    geoms: Sequence[PatchGeometry],
    reference: str = "city1",
    distance_mode: str = "euclidean",
) -> list[CorrelationPoint]:
    """Pearson correlation of every other patch's I_h curve with the reference patch's."""
    if len(series.times) < 2:
        raise StructuralError("need at least 2 time points")
    ids = list(series.patch_ids)
    r = series.patch_index(reference)
    ih = series.compartment("i_h")
    ref_geom = geoms[ids.index(reference)]
    return [
        CorrelationPoint(pid, distance(ref_geom, geoms[j], distance_mode), _pearson(ih[:, j], ih[:, r]))
        for j, pid in enumerate(ids)
        if j != r
    ]


def pairwise_correlations(series: Trajectory, indices: Sequence[int]) -> np.ndarray:
    """Correlation matrix of the I_h curves of the given patches."""
    ih = series.compartment("i_h")[:, list(indices)]
    return np.corrcoef(ih.T)


def peak_times(series: Trajectory) -> np.ndarray:
    """Time of the first global maximum of I_h per patch; NaN for all-zero curves."""
    ih = series.compartment("i_h")
    out = series.times[np.argmax(ih, axis=0)].astype(float)
    out[np.max(ih, axis=0) <= 0] = np.nan
    return out


def peak_delay(series: Trajectory, reference: str = "city1") -> dict:
    """Peak time of each patch minus that of ``reference``, in days.

    Patches whose curve is identically zero map to ``None``.
    """
    peaks = peak_times(series)
    ref = peaks[series.patch_index(reference)]
    return {
        pid: (None if math.isnan(p) or math.isnan(ref) else float(p - ref))
        for pid, p in zip(series.patch_ids, peaks)
    }


def mean_correlation(points: Sequence[CorrelationPoint]) -> float:
    vals = [p.correlation for p in points if not math.isnan(p.correlation)]
    return float(np.mean(vals)) if vals else math.nan


def decay_steepness(points: Sequence[CorrelationPoint]) -> float:
    """Mean correlation of the nearer half of patches minus that of the farther half."""
    pts = sorted((p for p in points if not math.isnan(p.correlation)), key=lambda p: p.distance)
    if len(pts) < 2:
        return math.nan
    half = len(pts) // 2
    near = np.mean([p.correlation for p in pts[:half]])
    far = np.mean([p.correlation for p in pts[len(pts) - half:]])
    return float(near - far)


@dataclass(frozen=True)
class SweepCurve:
    parameter: str
    value: float
    params: GravityParams
    implied_theta: float
    points: tuple = field(repr=False)
    peak_delays: dict = field(repr=False, default_factory=dict)

    @property
    def mean_correlation(self) -> float:
        return mean_correlation(self.points)

    @property
    def steepness(self) -> float:
        return decay_steepness(self.points)


SWEEPABLE = ("alpha", "beta", "gamma", "theta")
# held fixed while one parameter is varied
SWEEP_BASE = GravityParams(alpha=0.5, beta=1.0, gamma=0.5, theta=0.5)


def parameter_sweep(
    scenario: SyntheticScenario,
    sweep: str,
    values: Sequence[float],
    fixed: GravityParams = SWEEP_BASE,
    cap: float = DEFAULT_CAP,
    horizon: float = DEFAULT_HORIZON,
    dt: float = DEFAULT_DT,
    beta_v: float = 0.3,
) -> list[SweepCurve]:
    """One correlation-vs-distance curve per value of ``sweep``.

    Every run shares the rescaling factor of the ``fixed`` parameter set, so
    differences between curves come from the swept parameter alone.
    """
    if sweep not in SWEEPABLE:
        raise DomainError(f"cannot sweep {sweep!r}; choose from {SWEEPABLE}")
    if not len(values):
        raise DomainError("sweep needs at least one value")
    curves = []
    for v in values:
        params = fixed.replace(**{sweep: float(v)})
        matrix, implied = scaled_gravity(scenario, params, cap=cap, reference=fixed)
        traj = run_synthetic(scenario, matrix, beta_v=beta_v, horizon=horizon, dt=dt)
        curves.append(
            SweepCurve(
                sweep,
                float(v),
                params,
                implied,
                tuple(correlation_vs_distance(traj, scenario.geoms, scenario.seed_patch)),
                peak_delay(traj, scenario.seed_patch),
            )
        )
    return curves
