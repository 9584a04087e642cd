"""Per-patch vector (SEI) / host (SEIR) dynamics and a fixed-step RK4 integrator.

State arrays are laid out as ``(..., n_patches, 7)`` with the compartment
order given by :data:`COMPARTMENTS`.  Any leading axes are batch axes: the
fitting module pushes thousands of parameter draws through the same
integrator at once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import (
    DomainError,
    InsufficientDataError,
    NumericalBlowupError,
    StructuralError,
)

COMPARTMENTS = ("s_v", "e_v", "i_v", "s_h", "e_h", "i_h", "r_h")
SV, EV, IV, SH, EH, IH, RH = range(7)

YEAR = 365.0
DEFAULT_DT = 0.1
# states below this are treated as integration failure, above it clamped to 0
NEGATIVE_TOL = 1e-12


@dataclass(frozen=True)
class PatchState:
    s_v: float
    e_v: float
    i_v: float
    s_h: float
    e_h: float
    i_h: float
    r_h: float

    def __post_init__(self):
        for name in COMPARTMENTS:
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise DomainError(f"compartment {name} must be finite and >= 0, got {v}")

    @classmethod
    def from_array(cls, values) -> "PatchState":
        values = np.asarray(values, dtype=float)
        if values.shape != (7,):
            raise StructuralError(f"expected 7 compartment values, got shape {values.shape}")
        return cls(*(float(v) for v in values))

    @classmethod
    def seeded(cls, n_h: float, infected: float = 0.0, vector_ratio: float = 3.0) -> "PatchState":
        """Fully susceptible vectors, ``infected`` hosts in I_h, the rest susceptible."""
        if infected > n_h:
            raise DomainError(f"cannot seed {infected} infected in a population of {n_h}")
        return cls(vector_ratio * n_h, 0.0, 0.0, n_h - infected, 0.0, infected, 0.0)

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in COMPARTMENTS], dtype=float)

    @property
    def n_v(self) -> float:
        return self.s_v + self.e_v + self.i_v

    @property
    def n_h(self) -> float:
        return self.s_h + self.e_h + self.i_h + self.r_h


@dataclass(frozen=True)
class SeasonalBeta:
    """Host-to-vector transmission ``beta0 + eps * sin(2*pi*(t + phi) / 365)``.

    ``phi`` is a day offset and is stored modulo 365.
    """

    beta0: float
    eps: float = 0.0
    phi: float = 0.0

    def __post_init__(self):
        if not (self.beta0 >= 0 and self.eps >= 0):
            raise DomainError(f"beta0 and eps must be >= 0 (got {self.beta0}, {self.eps})")
        if self.beta0 - self.eps < 0:
            raise DomainError(
                f"beta0 - eps must be >= 0 so transmission never goes negative "
                f"(got beta0={self.beta0}, eps={self.eps})"
            )
        object.__setattr__(self, "phi", float(self.phi) % YEAR)

    def __call__(self, t):
        return self.beta0 + self.eps * np.sin(2.0 * np.pi * (t + self.phi) / YEAR)


@dataclass(frozen=True)
class DiseaseParams:
    """Epidemiological rates for one patch, all per day.

    Defaults follow the published parameter table; the host demographic
    rate ``mu_h`` assumes a 70-year lifespan.
    """

    beta_v: SeasonalBeta | float = 0.3
    beta_h: float = 0.3
    lam: float = 1 / 5.5
    delta: float = 1 / 4
    kappa: float = 1 / 5.5
    mu_v: float = 1 / 10.5
    mu_h: float = 1 / (70 * 365)
    vector_ratio: float = 3.0

    def __post_init__(self):
        if not isinstance(self.beta_v, SeasonalBeta):
            if not self.beta_v >= 0:
                raise DomainError(f"beta_v must be >= 0, got {self.beta_v}")
            object.__setattr__(self, "beta_v", SeasonalBeta(float(self.beta_v)))
        for name in ("beta_h", "lam", "delta", "kappa", "mu_v", "mu_h"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise DomainError(f"{name} must be finite and >= 0, got {v}")
        if not self.vector_ratio > 0:
            raise DomainError(f"vector_ratio must be > 0, got {self.vector_ratio}")


@dataclass(frozen=True)
class PatchGeometry:
    """A patch's location and host population.

    ``x, y`` are grid units in synthetic mode, latitude and longitude in
    degrees in geographic mode.
    """

    patch_id: str
    population: float
    x: float
    y: float

    def __post_init__(self):
        if not self.population > 0:
            raise DomainError(f"patch {self.patch_id!r}: population must be > 0")


@dataclass(frozen=True)
class ModelArrays:
    """Parameters flattened into arrays broadcastable against ``(..., n)``.

    This is the form the integrator works with; build it from per-patch
    :class:`DiseaseParams` with :meth:`from_params`.
    """

    beta0: np.ndarray
    eps: np.ndarray
    phi: np.ndarray
    beta_h: np.ndarray
    lam: np.ndarray
    delta: np.ndarray
    kappa: np.ndarray
    mu_v: np.ndarray
    mu_h: np.ndarray
    n_h: np.ndarray
    n_v: np.ndarray

    @classmethod
    def from_params(cls, params: Sequence[DiseaseParams], populations) -> "ModelArrays":
        populations = np.asarray(populations, dtype=float)
        if len(params) != populations.shape[-1]:
            raise StructuralError(
                f"{len(params)} parameter sets for {populations.shape[-1]} patches"
            )
        if np.any(populations <= 0):
            raise DomainError("patch populations must be > 0")

        def col(get):
            return np.array([get(p) for p in params], dtype=float)

        ratio = col(lambda p: p.vector_ratio)
        return cls(
            beta0=col(lambda p: p.beta_v.beta0),
            eps=col(lambda p: p.beta_v.eps),
            phi=col(lambda p: p.beta_v.phi),
            beta_h=col(lambda p: p.beta_h),
            lam=col(lambda p: p.lam),
            delta=col(lambda p: p.delta),
            kappa=col(lambda p: p.kappa),
            mu_v=col(lambda p: p.mu_v),
            mu_h=col(lambda p: p.mu_h),
            n_h=populations,
            n_v=ratio * populations,
        )

    def replace(self, **changes) -> "ModelArrays":
        values = {k: getattr(self, k) for k in self.__dataclass_fields__}
        values.update({k: np.asarray(v, dtype=float) for k, v in changes.items()})
        return ModelArrays(**values)

    @property
    def n_patches(self) -> int:
        return self.n_h.shape[-1]


@dataclass(frozen=True)
class Trajectory:
    """Sampled model output: ``states[k, i, c]`` is compartment c of patch i at ``times[k]``."""

    times: np.ndarray
    states: np.ndarray
    patch_ids: tuple
    lam: np.ndarray
    provenance: str = "model"

    def compartment(self, name: str) -> np.ndarray:
        return self.states[..., COMPARTMENTS.index(name)]

    def __getattr__(self, name):
        if name in COMPARTMENTS:
            return self.compartment(name)
        raise AttributeError(name)

    def state_at(self, k: int) -> list[PatchState]:
        return [PatchState.from_array(row) for row in self.states[k]]

    def patch_index(self, patch_id) -> int:
        try:
            return self.patch_ids.index(patch_id)
        except ValueError:
            raise KeyError(f"unknown patch {patch_id!r}") from None


@dataclass(frozen=True)
class EpidemicSeries:
    """A count or prevalence series per patch: ``values[k, i]`` at ``times[k]``."""

    times: np.ndarray
    values: np.ndarray
    patch_ids: tuple
    provenance: str = "model"
    kind: str = "weekly_incidence"
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim != 2 or values.shape != (len(self.times), len(self.patch_ids)):
            raise StructuralError(
                f"values shape {values.shape} does not match "
                f"{len(self.times)} times x {len(self.patch_ids)} patches"
            )

    def __len__(self):
        return len(self.times)

    def column(self, patch_id) -> np.ndarray:
        return self.values[:, list(self.patch_ids).index(patch_id)]

    def total(self) -> np.ndarray:
        return self.values.sum(axis=1)


def _as_state_array(states) -> np.ndarray:
    if isinstance(states, np.ndarray):
        y = np.asarray(states, dtype=float)
    else:
        y = np.array([s.as_array() if isinstance(s, PatchState) else s for s in states], dtype=float)
    if y.ndim < 2 or y.shape[-1] != 7:
        raise StructuralError(f"state array must have shape (..., n, 7), got {y.shape}")
    return y


def _check_coupling(coupling, n: int) -> np.ndarray:
    p = np.asarray(coupling, dtype=float)
    if p.ndim < 2 or p.shape[-2:] != (n, n):
        raise StructuralError(f"coupling must be {n}x{n}, got shape {p.shape}")
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise DomainError("coupling entries must be finite and >= 0")
    return p


def transmission_rate(t, m: ModelArrays, seasonal: bool = True):
    if not seasonal:
        return m.beta0
    return m.beta0 + m.eps * np.sin(2.0 * np.pi * (t + m.phi) / YEAR)


def rhs_array(t: float, y: np.ndarray, m: ModelArrays, coupling: np.ndarray, seasonal: bool = True) -> np.ndarray:
    """Unchecked right-hand side on ``(..., n, 7)`` arrays.

    Vectors in patch i are exposed to ``sum_j P[j, i] * I_hj / N_hj``:
    ``P[j, i]`` is the weight of people from patch j visiting patch i.
    Hosts are infected only by local vectors, scaled by ``P[i, i]``.

    ``coupling`` is either one ``(n, n)`` matrix shared by the whole batch or
    a stack ``(..., n, n)`` with one matrix per batch member.
    """
    s_v, e_v, i_v = y[..., SV], y[..., EV], y[..., IV]
    s_h, e_h, i_h, r_h = y[..., SH], y[..., EH], y[..., IH], y[..., RH]

    # infected hosts of patch j visiting patch i weigh in with P[j, i]
    prev = i_h / m.n_h
    if coupling.ndim == 2:
        cross = prev @ coupling
    else:
        cross = np.matmul(prev[..., None, :], coupling)[..., 0, :]
    local = np.diagonal(coupling, axis1=-2, axis2=-1)

    inf_v = transmission_rate(t, m, seasonal) * cross * s_v
    inf_h = m.beta_h * local * (i_v / m.n_v) * s_h

    out = np.empty(np.broadcast_shapes(y.shape, inf_v.shape + (7,)))
    out[..., SV] = m.mu_v * m.n_v - inf_v - m.mu_v * s_v
    out[..., EV] = inf_v - m.mu_v * e_v - m.kappa * e_v
    out[..., IV] = m.kappa * e_v - m.mu_v * i_v
    out[..., SH] = m.mu_h * m.n_h - inf_h - m.mu_h * s_h
    out[..., EH] = inf_h - m.lam * e_h - m.mu_h * e_h
    out[..., IH] = m.lam * e_h - m.delta * i_h - m.mu_h * i_h
    out[..., RH] = m.delta * i_h - m.mu_h * r_h
    return out


def rhs(t, states, params: Sequence[DiseaseParams], coupling, seasonal: bool = True, populations=None) -> np.ndarray:
    """Time derivative of every compartment in every patch.

    Returns an ``(n, 7)`` array in :data:`COMPARTMENTS` order.  Patch host
    populations default to the current host totals of ``states``.
    """
    y = _as_state_array(states)
    n = y.shape[-2]
    if len(params) != n:
        raise StructuralError(f"{len(params)} parameter sets for {n} patches")
    p = _check_coupling(coupling, n)
    if np.any(y < 0):
        raise DomainError("states must be nonnegative")
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    if populations is None:
        populations = y[..., SH:].sum(axis=-1)
    m = ModelArrays.from_params(params, populations)
    return rhs_array(float(t), y, m, p, seasonal)


def step_count(t0: float, t1: float, dt: float) -> int:
    if not dt > 0:
        raise DomainError(f"dt must be > 0, got {dt}")
    if not t1 > t0:
        raise DomainError(f"t1 must exceed t0 (got {t0}, {t1})")
    steps = int(round((t1 - t0) / dt))
    if steps < 1 or abs(steps * dt - (t1 - t0)) > 1e-9 * max(1.0, t1 - t0):
        raise DomainError(f"time span {t1 - t0} is not a whole number of steps of {dt}")
    return steps


def default_stride(dt: float) -> int:
    """Sampling stride giving daily output (or every step when dt > 1)."""
    return max(1, int(round(1.0 / dt))) if dt <= 1 else 1


def integrate_array(
    y0: np.ndarray,
    m: ModelArrays,
    coupling: np.ndarray,
    t0: float,
    t1: float,
    dt: float = DEFAULT_DT,
    stride: int | None = None,
    seasonal: bool = True,
    record: Sequence[int] | None = None,
    on_blowup: str = "raise",
):
    """Classical RK4 with a fixed step.

    Returns ``(times, samples, failed_at)``.  ``samples`` has shape
    ``(n_samples,) + y0.shape`` (last axis restricted to ``record`` if
    given).  With ``on_blowup="mask"`` batch members whose state goes
    non-finite or below ``-NEGATIVE_TOL`` are zeroed and their failure time
    is stored in ``failed_at`` (NaN for members that succeeded); with
    ``"raise"`` a :class:`NumericalBlowupError` is raised instead.
    """
    steps = step_count(t0, t1, dt)
    stride = default_stride(dt) if stride is None else int(stride)
    if stride < 1:
        raise DomainError("stride must be >= 1")
    y = np.array(y0, dtype=float)
    batch_shape = y.shape[:-2]
    cols = slice(None) if record is None else list(record)
    n_samples = steps // stride + 1
    width = 7 if record is None else len(record)
    samples = np.empty((n_samples,) + y.shape[:-1] + (width,))
    times = t0 + dt * stride * np.arange(n_samples)
    failed_at = np.full(batch_shape, np.nan)
    samples[0] = y[..., cols]

    half = 0.5 * dt
    sixth = dt / 6.0
    # non-finite states are detected explicitly below
    with np.errstate(all="ignore"):
        for k in range(steps):
            t = t0 + k * dt
            k1 = rhs_array(t, y, m, coupling, seasonal)
            k2 = rhs_array(t + half, y + half * k1, m, coupling, seasonal)
            k3 = rhs_array(t + half, y + half * k2, m, coupling, seasonal)
            k4 = rhs_array(t + dt, y + dt * k3, m, coupling, seasonal)
            y = y + sixth * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if (k + 1) % stride:
                continue
            bad = ~np.isfinite(y).all(axis=(-2, -1)) | (y < -NEGATIVE_TOL).any(axis=(-2, -1))
            if np.any(bad):
                t_fail = t0 + (k + 1) * dt
                if on_blowup != "mask":
                    raise NumericalBlowupError(
                        f"non-finite or negative state at t={t_fail:g} days", time=t_fail
                    )
                fresh = bad & np.isnan(failed_at)
                failed_at[fresh] = t_fail
                y[bad] = 0.0
            samples[(k + 1) // stride] = y[..., cols]
    np.maximum(samples, 0.0, out=samples)
    return times, samples, failed_at


def integrate(
    initial,
    params: Sequence[DiseaseParams],
    coupling,
    t_span=(0.0, 365.0),
    dt: float = DEFAULT_DT,
    seasonal: bool = True,
    stride: int | None = None,
    patch_ids: Sequence | None = None,
    populations=None,
) -> Trajectory:
    """Integrate the metapopulation system over ``t_span`` (days).

    ``initial`` is a list of :class:`PatchState` (or an ``(n, 7)`` array).
    Patch host populations default to the initial host totals, and vector
    totals to ``vector_ratio`` times that; births exactly balance deaths at
    these totals so both are conserved.
    """
    y0 = _as_state_array(initial)
    if y0.ndim != 2:
        raise StructuralError("integrate expects a single (n, 7) initial state")
    if np.any(y0 < 0):
        raise DomainError("initial states must be nonnegative")
    n = y0.shape[0]
    if len(params) != n:
        raise StructuralError(f"{len(params)} parameter sets for {n} patches")
    p = _check_coupling(coupling, n)
    if populations is None:
        populations = y0[:, SH:].sum(axis=1)
    m = ModelArrays.from_params(params, populations)
    t0, t1 = map(float, t_span)
    times, states, _ = integrate_array(y0, m, p, t0, t1, dt, stride, seasonal)
    ids = tuple(patch_ids) if patch_ids is not None else tuple(str(i) for i in range(n))
    if len(ids) != n:
        raise StructuralError(f"{len(ids)} patch ids for {n} patches")
    return Trajectory(times=times, states=states, patch_ids=ids, lam=m.lam)


def weekly_counts(times: np.ndarray, rate: np.ndarray) -> np.ndarray:
    """Integrate ``rate`` (sampled at ``times`` along axis 0) over consecutive 7-day windows."""
    times = np.asarray(times, dtype=float)
    if len(times) < 2 or times[-1] - times[0] < 7.0 - 1e-9:
        raise InsufficientDataError("series is shorter than one week")
    if np.max(np.diff(times)) > 1.0 + 1e-9:
        raise InsufficientDataError("weekly incidence needs samples at most 1 day apart")
    cum = cumulative_trapezoid(rate, times, axis=0, initial=0.0)
    n_weeks = int(math.floor((times[-1] - times[0]) / 7.0 + 1e-9))
    bounds = times[0] + 7.0 * np.arange(n_weeks + 1)
    idx = np.clip(np.searchsorted(times, bounds, side="right") - 1, 0, len(times) - 2)
    w = (bounds - times[idx]) / (times[idx + 1] - times[idx])
    w = w.reshape((-1,) + (1,) * (cum.ndim - 1))
    at_bounds = cum[idx] * (1.0 - w) + cum[idx + 1] * w
    return np.maximum(np.diff(at_bounds, axis=0), 0.0)


def weekly_incidence(series: Trajectory) -> EpidemicSeries:
    """New host infections (``lam * E_h`` integrated) per patch per 7-day window."""
    rate = series.lam * series.compartment("e_h")
    counts = weekly_counts(series.times, rate)
    weeks = np.arange(1, counts.shape[0] + 1)
    return EpidemicSeries(
        times=weeks,
        values=counts,
        patch_ids=series.patch_ids,
        provenance=series.provenance,
        kind="weekly_incidence",
        meta={"t0": float(series.times[0])},
    )
