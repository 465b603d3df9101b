import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wavesift.errors import DimensionMismatch, ReceiverInsideDomain, SingularPoint
from wavesift.mesh import SamplingBox, create_uniform_grid
from wavesift.physics import ReceiverSet, assemble_operators, green, plane_wave
from wavesift.scenarios import receiver_positions
from wavesift.special import hankel0_first_kind

K = 2 * np.pi


def test_green_3d_half_wavelength():
    assert green(K, (0, 0, 0), (0.5, 0, 0)) == pytest.approx(-1 / (2 * np.pi), abs=1e-15)


def test_green_2d_unit_distance():
    assert green(K, (0, 0), (0, 1)) == pytest.approx(0.25j * hankel0_first_kind(K), abs=1e-15)


def test_green_singular():
    with pytest.raises(SingularPoint):
        green(K, (1, 1), (1, 1))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=6, max_size=6), st.integers(2, 3))
def test_green_symmetry(coords, dim):
    x, y = np.array(coords[:dim]), np.array(coords[3:3 + dim])
    if np.linalg.norm(x - y) < 1e-6:
        return
    a, b = green(K, x, y), green(K, y, x)
    assert abs(a - b) <= 1e-12 * abs(a)


def test_plane_wave():
    assert plane_wave(K, (1, 0), (0, 0)) == 1
    assert plane_wave(K, (1, 0), (0.25, 0)) == pytest.approx(1j, abs=1e-15)
    pts = np.random.default_rng(0).normal(size=(50, 2))
    assert np.allclose(np.abs(plane_wave(K, (0.6, 0.8), pts)), 1)


def test_single_element_operators():
    grid = create_uniform_grid(SamplingBox((0, 0), (0.1, 0.1)), 0.1)
    rec = ReceiverSet([[2.0, 0.0]], [1.0])
    ops = assemble_operators(grid, rec, K)
    A = 0.01
    g = green(K, (2.0, 0.0), (0.05, 0.05))
    assert ops.GD.shape == (1, 1) and ops.GD[0, 0] == 0
    assert ops.GS[0, 0] == pytest.approx(K**2 * A * g, rel=1e-14)
    v = np.array([0.3 - 0.2j])
    # unit weight: GS* v = conj(k^2 A g) v / A
    assert ops.apply("GS_adjoint", v)[0] == pytest.approx(np.conj(K**2 * A * g) * v[0] / A)


def test_ex1_shapes(ex1_ops):
    assert ex1_ops.GS.shape == (30, 36)
    assert ex1_ops.GD.shape == (36, 36)
    assert np.all(np.diag(ex1_ops.GD) == 0)


def test_entries_match_green(ex1_ops):
    c, A = ex1_ops.centers, ex1_ops.grid.measure
    for m, n in [(0, 1), (3, 17), (35, 0), (20, 21)]:
        assert ex1_ops.GD[m, n] == pytest.approx(K**2 * A * green(K, c[m], c[n]), rel=1e-12)
    x = ex1_ops.receivers.points[4]
    assert ex1_ops.GS[4, 9] == pytest.approx(K**2 * A * green(K, x, c[9]), rel=1e-12)


def test_reciprocity_random_grids(rng):
    for dim in (2, 3):
        g = create_uniform_grid(SamplingBox.cube(0.6, dim), 0.2)
        keep = rng.random(g.n_elements) < 0.6
        ops = assemble_operators(g.with_active(np.flatnonzero(keep)),
                                 receiver_positions(12, 4.0, dim), K)
        A = ops.grid.measure
        assert np.allclose(ops.GD / A, (ops.GD / A).T, rtol=1e-12, atol=0)


def test_active_only(ex1_grid):
    ops = assemble_operators(ex1_grid.with_active([0, 5, 7]), receiver_positions(30, 5.0, 2), K)
    assert ops.GD.shape == (3, 3) and ops.GS.shape == (30, 3)


def test_receiver_inside_rejected(ex1_grid):
    with pytest.raises(ReceiverInsideDomain):
        assemble_operators(ex1_grid, receiver_positions(8, 1.0, 2), K)


def test_apply_checks_shape(ex1_ops):
    with pytest.raises(DimensionMismatch):
        ex1_ops.apply("GD", np.zeros(30))
    with pytest.raises(DimensionMismatch):
        ex1_ops.apply("GS_adjoint", np.zeros(36))
    for kind, n in (("GD", 36), ("GS", 36), ("GS_adjoint", 30)):
        assert not np.any(ex1_ops.apply(kind, np.zeros(n)))


def test_adjoint_identity_direct_sum(ex1_level1_ops, rng):
    ops = ex1_level1_ops
    A, s = ops.grid.measure, ops.weights
    for _ in range(100):
        w = rng.normal(size=ops.n_elements) + 1j * rng.normal(size=ops.n_elements)
        v = rng.normal(size=len(s)) + 1j * rng.normal(size=len(s))
        lhs = sum(s[q] * sum(ops.GS[q, n] * w[n] for n in range(len(w))) * np.conj(v[q])
                  for q in range(len(s)))
        rhs = ops.inner_D(w, ops.apply("GS_adjoint", v))
        scale = np.sqrt(np.sum(A * abs(w) ** 2)) * np.sqrt(np.sum(s * abs(v) ** 2))
        assert abs(lhs - rhs) <= 1e-10 * scale


def test_receiver_weights():
    rec = receiver_positions(4, 1.0, 2)
    assert np.allclose(sorted(map(tuple, np.round(rec.points, 12))),
                       [(-1, 0), (0, -1), (0, 1), (1, 0)])
    assert np.allclose(rec.weights, np.pi / 2)
    assert receiver_positions(30, 5.0, 2).weights.sum() == pytest.approx(10 * np.pi)
    sphere = receiver_positions(50, 2.0, 3)
    assert sphere.weights.sum() == pytest.approx(16 * np.pi)
    assert np.allclose(np.linalg.norm(sphere.points, axis=1), 2.0, atol=1e-12)
