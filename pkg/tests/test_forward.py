import json
import warnings

import numpy as np
import pytest
import scipy.special as sp

from wavesift import instrument
from wavesift.errors import DimensionMismatch, InverseCrime, SingularSystem
from wavesift.forward import (ScatterData, add_noise, check_no_inverse_crime, forward_grid,
                              load_data, save_data, solve_state, synth_scattered, synthesize)
from wavesift.mesh import SamplingBox, create_uniform_grid
from wavesift.physics import IncidenceSet, ReceiverSet, assemble_operators, green, plane_wave
from wavesift.scenarios import (incidence_directions, make_phantom, phantom_from_dict,
                                receiver_positions)

K = 2 * np.pi
REC = receiver_positions(30, 5.0, 2)
INC = incidence_directions(6, 2)


def _box_phantom(lower, upper, value, name="block"):
    return phantom_from_dict({"name": name, "shapes": [
        {"type": "box", "lower": list(lower), "upper": list(upper),
         "contrast": [value.real, value.imag]}]})


def test_zero_contrast_gives_zero_sources():
    grid = create_uniform_grid(SamplingBox.cube(0.2, 2), 0.025)
    ops = assemble_operators(grid, REC, K)
    empty = _box_phantom((3, 3), (4, 4), 1.0 + 0j)
    W = solve_state(empty, grid, ops, INC)
    assert not np.any(W)
    assert not np.any(synth_scattered(W, ops, INC).U)


def test_single_element_exact():
    grid = create_uniform_grid(SamplingBox((0, 0), (0.025, 0.025)), 0.025)
    ops = assemble_operators(grid, REC, K)
    ph = _box_phantom((0, 0), (0.025, 0.025), 2.0 + 0j)
    W = solve_state(ph, grid, ops, INC)
    expected = 2.0 * plane_wave(K, INC.directions, ops.centers)
    assert np.max(np.abs(W - expected)) <= 1e-12
    U = synth_scattered(W, ops, INC).U
    x1 = ops.centers[0]
    direct = np.array([[K**2 * grid.measure * green(K, xs, x1) * W[j, 0]
                        for xs in REC.points] for j in range(len(INC))])
    assert np.max(np.abs(U - direct)) <= 1e-12 * np.max(np.abs(direct))


@pytest.mark.parametrize("n_cells", [2, 40])
def test_neumann_series_equivalence(n_cells):
    h = 0.025
    grid = create_uniform_grid(SamplingBox((0, 0), (n_cells * h / 2, 2 * h)), h) \
        if n_cells > 2 else create_uniform_grid(SamplingBox((0, 0), (2 * h, h)), h)
    ops = assemble_operators(grid, REC, K)
    ph = _box_phantom((0, 0), (1, 1), 0.1 + 0.02j)
    chi = ph.contrast(ops.centers)
    T = chi[:, None] * ops.GD
    assert np.linalg.norm(T, 2) < 0.5
    W = solve_state(ph, grid, ops, INC)
    for j in range(len(INC)):
        term = chi * plane_wave(K, INC.directions[j], ops.centers)
        born = term.copy()
        for _ in range(200):
            term = T @ term
            born += term
            if np.linalg.norm(term) < 1e-18:
                break
        assert np.max(np.abs(W[j] - born)) <= 1e-8


def test_state_residual_and_factorization_count():
    ph = make_phantom("twin_squares")
    grid = forward_grid(ph, K, h=0.05)
    ops = assemble_operators(grid, REC, K)
    before = instrument.COUNTS["factorization"]
    W = solve_state(ph, grid, ops, INC)
    assert instrument.COUNTS["factorization"] == before + 1
    chi = ph.contrast(ops.centers)
    system = np.eye(ops.n_elements) - chi[:, None] * ops.GD
    rhs = chi * plane_wave(K, INC.directions, ops.centers)
    res = np.linalg.norm(W @ system.T - rhs) / np.linalg.norm(rhs)
    assert res <= 1e-10


def test_singular_system_detected():
    grid = create_uniform_grid(SamplingBox((0, 0), (0.05, 0.025)), 0.025)
    ops = assemble_operators(grid, REC, K)
    g = ops.GD[0, 1]
    # chi = 1/g makes I - chi*GD exactly singular for the symmetric 2x2 case
    ph = _box_phantom((0, 0), (1, 1), complex(1 / g))
    with pytest.raises(SingularSystem):
        solve_state(ph, grid, ops, IncidenceSet([[1.0, 0.0]]))


def test_coarse_forward_mesh_warns():
    grid = create_uniform_grid(SamplingBox((0, 0), (0.2, 0.2)), 0.2)
    ops = assemble_operators(grid, REC, K)
    with pytest.warns(UserWarning, match="coarser"):
        solve_state(_box_phantom((0, 0), (1, 1), 0.1 + 0j), grid, ops, INC)


def test_mie_series_small_cylinder():
    """DDA data of a penetrable disc against the exact cylinder series."""
    a, chi = 0.15, 0.5
    ph = phantom_from_dict({"shapes": [{"type": "disk", "center": [0, 0], "radius": a,
                                        "contrast": chi}]})
    inc = IncidenceSet([[1.0, 0.0]])
    data = synthesize(ph, REC, inc, K, h=1 / 160)
    k1 = K * np.sqrt(1 + chi)
    R = 5.0
    theta = np.arctan2(REC.points[:, 1], REC.points[:, 0])
    u = np.zeros(len(theta), dtype=complex)
    for n in range(-15, 16):
        num = K * sp.jvp(n, K * a) * sp.jv(n, k1 * a) - k1 * sp.jv(n, K * a) * sp.jvp(n, k1 * a)
        den = K * sp.h1vp(n, K * a) * sp.jv(n, k1 * a) - k1 * sp.hankel1(n, K * a) * sp.jvp(n, k1 * a)
        # scattered coefficient from continuity of u and du/dr at r = a
        b = -num / den
        u += (1j**n) * b * sp.hankel1(n, K * R) * np.exp(1j * n * theta)
    rel = np.linalg.norm(data.U[0] - u) / np.linalg.norm(u)
    print(f"DDA vs cylinder series: relative error {rel:.3e}")
    assert rel < 0.05


def test_noise_model():
    clean = synthesize(make_phantom("twin_squares"), REC, INC, K, h=0.05)
    assert add_noise(clean, 0.0, 3).U is clean.U or np.array_equal(add_noise(clean, 0.0).U, clean.U)
    noisy = add_noise(clean, 0.1, seed=7)
    assert np.all(np.abs(noisy.U - clean.U) <= 0.1 * np.sqrt(2) * np.abs(clean.U) * (1 + 1e-12))
    assert np.array_equal(noisy.U, add_noise(clean, 0.1, seed=7).U)
    assert not np.array_equal(noisy.U, add_noise(clean, 0.1, seed=8).U)
    assert noisy.xi == 0.1 and noisy.seed == 7
    ratio = noisy.U / clean.U - 1
    assert np.all(np.abs(ratio.real) <= 0.1 + 1e-12) and np.all(np.abs(ratio.imag) <= 0.1 + 1e-12)
    with pytest.raises(ValueError):
        add_noise(clean, -0.1)


def test_forward_grid_avoids_inversion_lattice():
    ph = make_phantom("twin_squares")
    fg = forward_grid(ph, K)
    assert fg.h == pytest.approx(1 / 40)
    assert np.all(ph.contrast(fg.centers) != 0)
    inv = create_uniform_grid(SamplingBox.cube(1.2, 2), 0.4)
    for level in range(6):
        h = 0.4 / 2**level
        g = create_uniform_grid(SamplingBox.cube(1.2, 2), h)
        check_no_inverse_crime(fg.box.lower, fg.h, g)
    assert inv.n_elements == 36
    with pytest.raises(InverseCrime):
        check_no_inverse_crime((-1.2 + 0.025 * 3, -1.2), 0.025,
                               create_uniform_grid(SamplingBox.cube(1.2, 2), 0.025))


def test_scatterdata_validation():
    with pytest.raises(DimensionMismatch):
        ScatterData(np.zeros((2, 30)), REC, INC, K)
    with pytest.raises(ValueError):
        ScatterData(np.full((6, 30), np.nan), REC, INC, K)
    grid = create_uniform_grid(SamplingBox.cube(0.2, 2), 0.1)
    ops = assemble_operators(grid, REC, K)
    with pytest.raises(DimensionMismatch):
        synth_scattered(np.zeros((6, 3)), ops, INC)


def test_synth_linearity(rng):
    grid = create_uniform_grid(SamplingBox.cube(0.2, 2), 0.1)
    ops = assemble_operators(grid, REC, K)
    a = rng.normal(size=(6, 16)) + 1j * rng.normal(size=(6, 16))
    b = rng.normal(size=(6, 16)) + 1j * rng.normal(size=(6, 16))
    lhs = synth_scattered(a + b, ops, INC).U
    rhs = synth_scattered(a, ops, INC).U + synth_scattered(b, ops, INC).U
    assert np.allclose(lhs, rhs, rtol=1e-13, atol=1e-15)


def test_data_round_trip(tmp_path):
    data = add_noise(synthesize(make_phantom("twin_squares"), REC, INC, K, h=0.05), 0.1, 11)
    csv_path, json_path = save_data(data, tmp_path / "d")
    assert csv_path.read_text().splitlines()[0] == "incidence,receiver,re,im"
    side = json.loads(json_path.read_text())
    assert side["k"] == K and side["xi"] == 0.1 and side["seed"] == 11
    back = load_data(tmp_path / "d")
    assert np.array_equal(back.U, data.U)
    assert np.array_equal(back.receivers.points, REC.points)
    assert np.array_equal(back.incidences.directions, INC.directions)
    assert back.meta == data.meta
