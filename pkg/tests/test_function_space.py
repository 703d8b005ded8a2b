import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sobdecomp import (
    FormParams,
    GridFunction,
    Mesh,
    ScaleFunction,
    decompose_F_s,
    dirichlet_D,
    form_subspace,
    inner_e_alpha,
    inner_L2,
    membership_F_s,
    normalize_intervals,
    random_grid_function,
)
from sobdecomp.function_space import MeshMismatch, NotInSubspace, e_alpha_norm

from conftest import hat


def whole(lo, hi, h):
    G = normalize_intervals([(lo, hi)], (lo, hi))
    return Mesh.from_open_set(G, h)


@pytest.fixture(scope="module")
def sym_mesh():
    return whole(-1, 1, 1 / 64)


def test_inner_L2_examples(sym_mesh):
    one = sym_mesh.sample(np.ones_like)
    x = sym_mesh.sample(lambda t: t)
    h = sym_mesh.sample(hat(0, 2))
    assert inner_L2(one, one) == pytest.approx(2, abs=1e-14)
    assert inner_L2(x, one) == pytest.approx(0, abs=1e-14)
    assert inner_L2(h, h) == pytest.approx(2 / 3, abs=1e-14)


def test_dirichlet_examples(sym_mesh):
    h = sym_mesh.sample(hat(0, 2))
    one = sym_mesh.sample(np.ones_like)
    assert dirichlet_D(h, h) == pytest.approx(2, abs=1e-13)
    assert dirichlet_D(one, h) == 0
    m = whole(0, 1, 1 / 16)
    assert dirichlet_D(m.sample(lambda t: t), m.sample(lambda t: 2 * t)) == pytest.approx(2, abs=1e-13)


def test_e_alpha_examples(sym_mesh):
    one = sym_mesh.sample(np.ones_like)
    h = sym_mesh.sample(hat(0, 2))
    half = FormParams(0.5)
    assert inner_e_alpha(h, one, FormParams(0.0)) == pytest.approx(0.5 * dirichlet_D(h, one))
    assert inner_e_alpha(one, one, half) == pytest.approx(1, abs=1e-14)
    assert inner_e_alpha(h, h, half) == pytest.approx(4 / 3, abs=1e-13)


def test_params_reject_negative_alpha():
    with pytest.raises(ValueError):
        FormParams(-0.1)
    assert FormParams(0.5).kappa == 1.0


def test_form_subspace_examples(single_gap, gap_mesh):
    s = gap_mesh.sample(ScaleFunction.from_open_set(single_gap))
    assert form_subspace(s, s, single_gap) == pytest.approx(3.5, abs=1e-12)
    one = gap_mesh.sample(np.ones_like)
    assert form_subspace(one, s, single_gap) == 0
    x = gap_mesh.sample(lambda t: t)
    with pytest.raises(NotInSubspace, match="not in F"):
        form_subspace(x, x, single_gap)


def test_membership_F_s_examples(single_gap, gap_mesh, half):
    s = gap_mesh.sample(ScaleFunction.from_open_set(single_gap))
    assert membership_F_s(s, single_gap).ok
    x = gap_mesh.sample(lambda t: t)
    verdict = membership_F_s(x, single_gap)
    assert not verdict.ok and verdict.worst == pytest.approx(1.0)
    f1 = decompose_F_s(gap_mesh.sample(hat(0.5, 3)), single_gap, half).f1
    assert membership_F_s(f1, single_gap).ok


def test_mesh_alignment(single_gap, cantor3):
    m = Mesh.from_open_set(single_gap, 0.3)
    assert m.is_aligned(single_gap)
    assert 0.0 in m.nodes and 1.0 in m.nodes
    assert np.all(m.widths <= 0.3 + 1e-12)
    assert m.n_f_components == 1
    other = normalize_intervals([(-4, 0.5), (1, 4)], (-4, 4))
    assert not m.is_aligned(other)
    with pytest.raises(MeshMismatch):
        membership_F_s(m.sample(np.sin), other)
    mc = Mesh.from_open_set(cantor3, 1 / 512)
    assert mc.n_f_components == 8


def test_mesh_mismatch_between_functions(single_gap):
    a = Mesh.from_open_set(single_gap, 0.5).sample(np.sin)
    b = Mesh.from_open_set(single_gap, 0.25).sample(np.sin)
    with pytest.raises(MeshMismatch):
        inner_L2(a, b)


def test_matrices_match_forms(gap_mesh, rng):
    u, v = random_grid_function(gap_mesh, rng), random_grid_function(gap_mesh, rng)
    p = FormParams(0.7)
    A = gap_mesh.e_alpha_matrix(p.alpha)
    assert u.values @ (A @ v.values) == pytest.approx(inner_e_alpha(u, v, p), rel=1e-12)


def test_random_grid_function_seeded(gap_mesh):
    a = random_grid_function(gap_mesh, np.random.default_rng(3))
    b = random_grid_function(gap_mesh, np.random.default_rng(3))
    assert np.array_equal(a.values, b.values)
    assert np.max(np.abs(a.values)) == pytest.approx(1.0)


def test_csv_roundtrip(tmp_path, gap_mesh):
    u = gap_mesh.sample(np.cos)
    path = tmp_path / "u.csv"
    u.to_csv(path)
    data = np.genfromtxt(path, delimiter=",", names=True)
    assert data.dtype.names == ("x", "value")
    assert np.array_equal(data["value"], u.values)
    assert np.array_equal(data["x"], gap_mesh.nodes)


def test_interpolation_order():
    # L2 norm of the interpolant of sin on (0,1): Richardson ratios near 4
    errs = []
    for h in (1 / 16, 1 / 32, 1 / 64):
        m = whole(0, 1, h)
        u = m.sample(np.sin)
        errs.append(abs(inner_L2(u, u) - (0.5 - np.sin(2) / 4)))
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    assert all(r > 2 ** 1.9 for r in ratios)


values = st.lists(st.floats(-10, 10, allow_nan=False), min_size=9, max_size=9)
mesh9 = Mesh(np.array([0, 0.1, 0.3, 0.35, 0.5, 0.8, 1.0, 1.4, 1.5]), np.ones(8, bool))


@settings(max_examples=100, deadline=None)
@given(values, values, values, st.floats(-3, 3), st.floats(0, 5))
def test_form_properties(a, b, c, t, alpha):
    u, v, w = (GridFunction(mesh9, np.array(z)) for z in (a, b, c))
    p = FormParams(alpha)
    scale = 1 + max(np.max(np.abs(z)) for z in (a, b, c)) ** 2 * (1 + abs(t)) * 100
    # symmetry, bilinearity
    assert inner_e_alpha(u, v, p) == pytest.approx(inner_e_alpha(v, u, p), abs=1e-12 * scale)
    lhs = inner_e_alpha(u + t * v, w, p)
    rhs = inner_e_alpha(u, w, p) + t * inner_e_alpha(v, w, p)
    assert lhs == pytest.approx(rhs, abs=1e-11 * scale)
    # Cauchy-Schwarz and positivity
    assert abs(inner_e_alpha(u, v, p)) <= e_alpha_norm(u, p) * e_alpha_norm(v, p) + 1e-11 * scale
    assert inner_e_alpha(u, u, p) >= -1e-12 * scale
    assert inner_L2(u, u) >= -1e-12 * scale
    if alpha > 0.1 and np.max(np.abs(a)) > 1e-3:
        assert inner_e_alpha(u, u, p) > 0
