import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pnpfd.grid import (
    GridSpec,
    cell_average,
    cell_difference,
    divergence,
    face_average,
    face_difference,
    face_inner_product,
    grad_norm,
    gradient,
    h1_norm,
    inner_product,
    l2_norm,
    laplacian,
    linf_norm,
    load_field,
    mean,
    project_mean_zero,
    save_field,
    weighted_divergence,
)

grids = st.builds(GridSpec, dim=st.sampled_from([2, 3]), n=st.integers(2, 10), length=st.floats(0.5, 4.0))


def test_spacing_and_centers():
    g = GridSpec(2, 4, 2.0, (-1.0, -1.0))
    assert g.h == 0.5
    assert g.shape == (4, 4)
    np.testing.assert_allclose(g.axis_centers(0), [-0.75, -0.25, 0.25, 0.75])
    x, y = g.cell_centers()
    assert x[1, 0] == -0.25 and y[0, 1] == -0.25
    xf, _ = g.face_centers(0)
    assert xf[0, 0] == -0.5


@pytest.mark.parametrize("kwargs", [dict(dim=1, n=4), dict(dim=2, n=1), dict(dim=2, n=4, length=0.0)])
def test_rejects_bad_grid(kwargs):
    with pytest.raises(ValueError):
        GridSpec(**kwargs)


def test_face_operators_on_linear_ramp():
    g = GridSpec(2, 8)
    x, _ = g.cell_centers()
    dx = face_difference(g, x, 0)
    # interior faces see the slope, the wrap face sees the jump
    np.testing.assert_allclose(dx[:-1], 1.0)
    np.testing.assert_allclose(face_average(g, x, 0)[:-1], g.face_centers(0)[0][:-1])
    np.testing.assert_allclose(face_difference(g, x, 1), 0.0)


def test_cell_operators_invert_staggering():
    g = GridSpec(2, 6)
    f = np.arange(36.0).reshape(6, 6)
    np.testing.assert_allclose(cell_average(g, face_average(g, f, 1), 1)[:, 1:-1], f[:, 1:-1])
    assert np.allclose(np.sum(cell_difference(g, f, 0)), 0.0)


@given(grids, st.integers(0, 2**31))
def test_laplacian_is_div_grad_bitwise(grid, seed):
    f = np.random.default_rng(seed).normal(size=grid.shape)
    assert np.array_equal(laplacian(grid, f), divergence(grid, gradient(grid, f)))


@given(grids, st.integers(0, 2**31))
def test_summation_by_parts(grid, seed):
    rng = np.random.default_rng(seed)
    f = rng.normal(size=grid.shape)
    v = tuple(rng.normal(size=grid.shape) for _ in range(grid.dim))
    lhs = inner_product(grid, f, divergence(grid, v))
    rhs = -face_inner_product(grid, gradient(grid, f), v)
    assert abs(lhs - rhs) <= 1e-12 * (abs(lhs) + l2_norm(grid, f) * sum(l2_norm(grid, c) for c in v) / grid.h)


@given(grids, st.integers(0, 2**31))
def test_weighted_divergence_is_conservative(grid, seed):
    rng = np.random.default_rng(seed)
    g_ = rng.uniform(0.1, 2.0, size=grid.shape)
    f = rng.normal(size=grid.shape)
    out = weighted_divergence(grid, g_, f)
    assert abs(np.sum(out)) <= 1e-11 * np.sum(np.abs(out)) + 1e-300


def test_laplacian_of_fourier_mode():
    g = GridSpec(2, 16, 2.0)
    x, y = g.cell_centers()
    f = np.cos(np.pi * x) * np.sin(2 * np.pi * y)
    lam = (4 / g.h**2) * (np.sin(np.pi / 16) ** 2 + np.sin(2 * np.pi / 16) ** 2)
    np.testing.assert_allclose(-laplacian(g, f), lam * f, atol=1e-11)


def test_norms_of_constant():
    g = GridSpec(3, 4, 2.0)
    c = g.full(3.0)
    assert l2_norm(g, c) == pytest.approx(3.0 * np.sqrt(8.0))
    assert linf_norm(-c) == 3.0
    assert grad_norm(g, c) == 0.0
    assert h1_norm(g, c) == pytest.approx(l2_norm(g, c))


def test_mean_projection(rng):
    f = rng.normal(size=(7, 7)) + 5.0
    assert abs(mean(project_mean_zero(f))) <= 1e-16
    np.testing.assert_allclose(f - project_mean_zero(f), mean(f))


def test_operators_leave_inputs_untouched(rng):
    g = GridSpec(2, 5)
    f = rng.normal(size=g.shape)
    before = f.copy()
    laplacian(g, f)
    weighted_divergence(g, np.abs(f) + 1, f)
    assert np.array_equal(f, before)


def test_field_dump_roundtrip(tmp_path, rng):
    g = GridSpec(2, 5, 2.0, (-1.0, -1.0))
    f = rng.normal(size=g.shape)
    path = tmp_path / "f.txt"
    save_field(path, g, f)
    header = path.read_text().splitlines()[0].split()
    assert header[:2] == ["2", "5"] and float(header[2]) == g.h
    g2, f2 = load_field(path)
    assert g2 == g
    assert np.array_equal(f2, f)


def test_field_dump_rejects_wrong_shape(tmp_path):
    with pytest.raises(ValueError):
        save_field(tmp_path / "f.txt", GridSpec(2, 4), np.zeros((3, 3)))


def test_truncated_dump_is_detected(tmp_path, rng):
    g = GridSpec(2, 4)
    path = tmp_path / "f.txt"
    save_field(path, g, rng.normal(size=g.shape))
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-2]) + "\n")
    with pytest.raises(ValueError):
        load_field(path)
