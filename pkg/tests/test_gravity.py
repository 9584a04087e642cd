import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gravdengue.errors import DegenerateDistanceError, DomainError, StructuralError
from gravdengue.gravity import (
    CouplingMatrix,
    GravityParams,
    distance,
    distance_matrix,
    gravity_matrix,
    identity_matrix,
    row_share,
    uniform_matrix,
    weight_vs_distance,
)
from gravdengue.model import PatchGeometry


def grid(pops, coords):
    return [PatchGeometry(f"p{k}", float(n), float(x), float(y)) for k, (n, (x, y)) in enumerate(zip(pops, coords))]


def test_formula_by_hand():
    g = grid([100, 400], [(0, 0), (3, 4)])
    m = gravity_matrix(g, GravityParams(alpha=0.5, beta=1.0, gamma=2.0, theta=0.1), diagonal=1.0)
    assert m.entries[0, 1] == pytest.approx(0.1 * 10 * 400 / 25, rel=1e-12)
    assert m.entries[1, 0] == pytest.approx(0.1 * 20 * 100 / 25, rel=1e-12)
    assert m.entries[0, 0] == 1.0


def test_symmetric_when_alpha_equals_beta():
    g = grid([10, 200, 3000], [(0, 0), (1, 5), (7, 2)])
    m = gravity_matrix(g, GravityParams(0.7, 0.7, 1.3, 2.0)).entries
    assert np.array_equal(m, m.T)


def test_theta_scales_exactly():
    g = grid([10, 200, 3000], [(0, 0), (1, 5), (7, 2)])
    a = gravity_matrix(g, GravityParams(1, 1, 2, 1.0)).off_diagonal()
    b = gravity_matrix(g, GravityParams(1, 1, 2, 4.0)).off_diagonal()
    assert np.array_equal(b, 4.0 * a)


def test_haversine_known_distances():
    a = PatchGeometry("a", 1, 0.0, 0.0)
    b = PatchGeometry("b", 1, 0.0, 1.0)
    assert distance(a, b, "haversine") == pytest.approx(2 * math.pi * 6371 / 360, rel=1e-12)
    pole = PatchGeometry("n", 1, 90.0, 0.0)
    assert distance(a, pole, "haversine") == pytest.approx(math.pi * 6371 / 2, rel=1e-12)
    with pytest.raises(DomainError):
        distance(a, PatchGeometry("x", 1, 95.0, 0.0), "haversine")


def test_distance_matrix_symmetric_zero_diagonal():
    g = grid([1, 1, 1], [(0, 0), (3, 4), (6, 8)])
    d = distance_matrix(g)
    assert np.array_equal(d, d.T)
    assert d[0, 1] == 5 and d[0, 2] == 10 and np.all(np.diag(d) == 0)


def test_degenerate_distance():
    g = grid([1, 2], [(1, 1), (1, 1)])
    with pytest.raises(DegenerateDistanceError, match="p0"):
        gravity_matrix(g, GravityParams())


def test_overflow_names_pair():
    g = grid([1e300, 1e300], [(0, 0), (1, 0)])
    with pytest.raises(OverflowError, match="p0"):
        gravity_matrix(g, GravityParams(alpha=2, beta=2, gamma=1, theta=1))


def test_single_patch():
    m = gravity_matrix(grid([5], [(0, 0)]), GravityParams())
    assert m.entries.shape == (1, 1) and m.entries[0, 0] == 1.0


def test_uniform_and_identity():
    u = uniform_matrix(3, 0.01)
    assert np.all(u.off_diagonal() == 0.01) and np.all(np.diag(u.entries) == 1)
    assert np.array_equal(identity_matrix(4).entries, np.eye(4))
    with pytest.raises(DomainError):
        uniform_matrix(3, -1)


def test_coupling_matrix_validation():
    with pytest.raises(StructuralError):
        CouplingMatrix(np.ones((2, 3)))
    with pytest.raises(DomainError):
        CouplingMatrix(np.array([[1, -0.1], [0, 1]]))
    with pytest.raises(DomainError):
        CouplingMatrix(np.array([[0.0, 0.1], [0.1, 1]]))
    m = CouplingMatrix(np.eye(2))
    with pytest.raises(ValueError):
        m.entries[0, 0] = 3


def test_scaled_keeps_diagonal_and_row_normalized():
    m = CouplingMatrix(np.array([[2.0, 1.0], [3.0, 1.0]]))
    s = m.scaled(0.5)
    assert np.array_equal(s.entries, [[2.0, 0.5], [1.5, 1.0]])
    np.testing.assert_allclose(m.row_normalized().entries.sum(axis=1), 1.0)


def test_weight_vs_distance_sorted():
    g = grid([100, 10, 10, 10], [(0, 0), (5, 0), (1, 0), (3, 0)])
    m = gravity_matrix(g, GravityParams(1, 1, 2, 1))
    pairs = weight_vs_distance(m, g, "p0")
    assert [d for d, _ in pairs] == [1, 3, 5]
    assert [w for _, w in pairs] == sorted((w for _, w in pairs), reverse=True)
    with pytest.raises(KeyError):
        weight_vs_distance(m, g, "nope")


def test_low_exponents_flatten_weights():
    g = grid([1e6, 1e4, 1e5, 1e3], [(0, 0), (5, 0), (1, 0), (3, 0)])
    flat = [w for _, w in weight_vs_distance(gravity_matrix(g, GravityParams(0.001, 0.001, 2, 1)), g, "p0")]
    steep = [w for _, w in weight_vs_distance(gravity_matrix(g, GravityParams(1, 1, 2, 1)), g, "p0")]
    assert np.std(np.log(flat)) < np.std(np.log(steep))


def test_row_share():
    m = CouplingMatrix(np.array([[1, 1, 3], [2, 1, 2], [0.5, 0.5, 1]]))
    np.testing.assert_allclose(row_share(m, 2), [0.75, 0.5, 0.0])


@settings(max_examples=50, deadline=None)
@given(
    a=st.floats(0, 2), g=st.floats(0.01, 3), theta=st.floats(1e-3, 10),
    coords=st.lists(st.tuples(st.integers(-50, 50), st.integers(-50, 50)), min_size=2, max_size=6, unique=True),
)
def test_property_gravity(a, g, theta, coords):
    pops = [10.0 * (k + 1) for k in range(len(coords))]
    geoms = grid(pops, coords)
    m = gravity_matrix(geoms, GravityParams(a, a, g, theta)).entries
    assert np.all(m >= 0)
    np.testing.assert_allclose(m, m.T, rtol=1e-12)
    # for equal populations the weight falls with distance
    eq = gravity_matrix(grid([7.0] * len(coords), coords), GravityParams(a, a, g, theta))
    pairs = weight_vs_distance(eq, grid([7.0] * len(coords), coords), "p0")
    ws = [w for _, w in pairs]
    assert all(ws[k] >= ws[k + 1] * (1 - 1e-12) for k in range(len(ws) - 1))
