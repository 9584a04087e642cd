"""Inter-patch coupling matrices: gravity, uniform and identity."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateDistanceError, DomainError, StructuralError
from .model import PatchGeometry

EARTH_RADIUS_KM = 6371.0


@dataclass(frozen=True)
class GravityParams:
    """Exponents and scale of ``theta * n_i**alpha * n_j**beta / d_ij**gamma``."""

    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 2.0
    theta: float = 1.0

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "theta"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        if self.theta < 0 or self.gamma < 0:
            raise DomainError(f"theta and gamma must be >= 0 (got {self.theta}, {self.gamma})")

    def replace(self, **changes) -> "GravityParams":
        values = {k: getattr(self, k) for k in ("alpha", "beta", "gamma", "theta")}
        values.update(changes)
        return GravityParams(**values)


@dataclass(frozen=True)
class CouplingMatrix:
    """``entries[i, j]``: weight of people from patch i visiting patch j."""

    entries: np.ndarray
    patch_ids: tuple = ()

    def __post_init__(self):
        p = np.array(self.entries, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1] or p.shape[0] == 0:
            raise StructuralError(f"coupling matrix must be square and non-empty, got {p.shape}")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise DomainError("coupling entries must be finite and >= 0")
        if np.any(np.diagonal(p) <= 0):
            raise DomainError("diagonal coupling entries must be > 0")
        p.setflags(write=False)
        object.__setattr__(self, "entries", p)
        ids = tuple(self.patch_ids) or tuple(str(i) for i in range(p.shape[0]))
        if len(ids) != p.shape[0]:
            raise StructuralError(f"{len(ids)} patch ids for a {p.shape[0]}x{p.shape[0]} matrix")
        object.__setattr__(self, "patch_ids", ids)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def off_diagonal(self) -> np.ndarray:
        return self.entries[~np.eye(self.n, dtype=bool)]

    def scaled(self, factor: float) -> "CouplingMatrix":
        """Multiply off-diagonal entries by ``factor``, keeping the diagonal."""
        p = self.entries * factor
        np.fill_diagonal(p, np.diagonal(self.entries))
        return CouplingMatrix(p, self.patch_ids)

    def row_normalized(self) -> "CouplingMatrix":
        return CouplingMatrix(self.entries / self.entries.sum(axis=1, keepdims=True), self.patch_ids)


def _check_latlon(g: PatchGeometry):
    if not (-90 <= g.x <= 90 and -180 <= g.y <= 180):
        raise DomainError(
            f"patch {g.patch_id!r}: ({g.x}, {g.y}) is not a valid latitude/longitude"
        )


def distance(a: PatchGeometry, b: PatchGeometry, mode: str = "euclidean") -> float:
    """Euclidean grid distance, or great-circle km when ``mode="haversine"``.

    In haversine mode ``x`` is latitude and ``y`` longitude, in degrees.
    """
    if mode == "euclidean":
        return math.hypot(a.x - b.x, a.y - b.y)
    if mode != "haversine":
        raise DomainError(f"unknown distance mode {mode!r}")
    _check_latlon(a)
    _check_latlon(b)
    lat1, lon1, lat2, lon2 = map(math.radians, (a.x, a.y, b.x, b.y))
    h = math.sin((lat2 - lat1) / 2) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2) ** 2
    return 2 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


def distance_matrix(geoms: Sequence[PatchGeometry], mode: str = "euclidean") -> np.ndarray:
    n = len(geoms)
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d[i, j] = d[j, i] = distance(geoms[i], geoms[j], mode)
    return d


def _log_terms(geoms, mode):
    d = distance_matrix(geoms, mode)
    n = len(geoms)
    off = ~np.eye(n, dtype=bool)
    if np.any(d[off] <= 0):
        i, j = np.argwhere((d <= 0) & off)[0]
        raise DegenerateDistanceError(
            f"patches {geoms[i].patch_id!r} and {geoms[j].patch_id!r} share a location"
        )
    log_n = np.log([g.population for g in geoms])
    with np.errstate(divide="ignore"):
        log_d = np.where(off, np.log(np.where(off, d, 1.0)), 0.0)
    return log_n, log_d, d


def gravity_weights(log_n, log_d, alpha, beta, gamma, theta) -> np.ndarray:
    """Off-diagonal gravity weights for one or many parameter sets.

    ``alpha`` .. ``theta`` may be arrays of shape ``(B,)``; the result then has
    shape ``(B, n, n)``.  The diagonal is left at zero.  The exponent is
    formed in log space; ``theta`` multiplies afterwards so scaling by it is
    exact.
    """
    a = np.asarray(alpha, dtype=float)[..., None, None]
    b = np.asarray(beta, dtype=float)[..., None, None]
    g = np.asarray(gamma, dtype=float)[..., None, None]
    th = np.asarray(theta, dtype=float)[..., None, None]
    expo = a * log_n[:, None] + b * log_n[None, :] - g * log_d
    with np.errstate(over="ignore"):
        w = th * np.exp(expo)
    n = log_n.shape[0]
    w[..., np.arange(n), np.arange(n)] = 0.0
    return w


def gravity_matrix(
    geoms: Sequence[PatchGeometry],
    params: GravityParams,
    distance_mode: str = "euclidean",
    diagonal: float = 1.0,
    normalize_rows: bool = False,
) -> CouplingMatrix:
    """Gravity coupling ``P_ij = theta * n_i**alpha * n_j**beta / d_ij**gamma`` for i != j.

    Parameters
    ----------
    geoms
        Patch locations and populations (raw head counts).
    params
        Gravity exponents and scale.
    distance_mode
        ``"euclidean"`` or ``"haversine"``.
    diagonal
        Value placed on the diagonal (within-patch mixing).
    normalize_rows
        Divide each row by its sum after filling the diagonal.

    Raises
    ------
    DegenerateDistanceError
        Two distinct patches share coordinates.
    OverflowError
        A weight is not finite; the message names the pair.
    """
    if not geoms:
        raise StructuralError("need at least one patch")
    if len(geoms) == 1:
        return CouplingMatrix(np.array([[diagonal]], dtype=float), (geoms[0].patch_id,))
    log_n, log_d, _ = _log_terms(geoms, distance_mode)
    w = gravity_weights(log_n, log_d, params.alpha, params.beta, params.gamma, params.theta)
    if not np.all(np.isfinite(w)):
        i, j = np.argwhere(~np.isfinite(w))[0]
        raise OverflowError(
            f"gravity weight between {geoms[i].patch_id!r} and {geoms[j].patch_id!r} is not finite"
        )
    np.fill_diagonal(w, diagonal)
    m = CouplingMatrix(w, tuple(g.patch_id for g in geoms))
    return m.row_normalized() if normalize_rows else m


def uniform_matrix(n: int, weight: float, diagonal: float = 1.0, patch_ids: Sequence | None = None) -> CouplingMatrix:
    if n < 1:
        raise StructuralError("uniform_matrix needs n >= 1")
    if not weight >= 0:
        raise DomainError(f"weight must be >= 0, got {weight}")
    p = np.full((n, n), float(weight))
    np.fill_diagonal(p, diagonal)
    return CouplingMatrix(p, tuple(patch_ids) if patch_ids is not None else ())


def identity_matrix(n: int, patch_ids: Sequence | None = None) -> CouplingMatrix:
    return uniform_matrix(n, 0.0, 1.0, patch_ids)


def weight_vs_distance(
    matrix: CouplingMatrix,
    geoms: Sequence[PatchGeometry],
    focal,
    distance_mode: str = "euclidean",
    direction: str = "out",
) -> list[tuple[float, float]]:
    """``(distance, weight)`` pairs between ``focal`` and every other patch, nearest first.

    ``direction="out"`` reads ``P[focal, j]``, the weight with which infected
    hosts of the focal patch reach patch j; ``"in"`` reads ``P[j, focal]``.
    """
    ids = [g.patch_id for g in geoms]
    if len(ids) != matrix.n:
        raise StructuralError(f"{len(ids)} geometries for a {matrix.n}-patch matrix")
    try:
        f = ids.index(focal)
    except ValueError:
        raise KeyError(f"unknown focal patch {focal!r}") from None
    pairs = []
    for j, g in enumerate(geoms):
        if j == f:
            continue
        w = matrix.entries[f, j] if direction == "out" else matrix.entries[j, f]
        pairs.append((distance(geoms[f], g, distance_mode), float(w)))
    pairs.sort(key=lambda p: p[0])
    return pairs


def row_share(matrix: CouplingMatrix, column: int) -> np.ndarray:
    """Fraction of each row's off-diagonal weight that goes to ``column``."""
    p = matrix.entries.copy()
    np.fill_diagonal(p, 0.0)
    totals = p.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(totals > 0, p[:, column] / totals, np.nan)
