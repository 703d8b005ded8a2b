import math

import numpy as np
import pytest

from sobdecomp import (
    FormParams,
    GridFunction,
    Interval,
    Mesh,
    ScaleFunction,
    cantor_complement,
    closed_form_on_interval,
    decompose_F_s,
    decompose_zero_alpha,
    membership_G_alpha,
    neumann_residual,
    normalize_intervals,
    ode_residual,
    solve_neumann,
    solve_zero_alpha,
)
from sobdecomp.harmonic import g_slope_spread

from conftest import hat


def test_closed_form_zero_data():
    sol = closed_form_on_interval(Interval(0, 1), FormParams(0.5), 0.0, 0.0)
    assert sol.c_cosh == 0 and sol.c_sinh == 0
    assert np.all(sol(np.linspace(0, 1, 5)) == 0)


def test_closed_form_two_by_two():
    r = 0.3
    sol = closed_form_on_interval(Interval(0, 1), FormParams(0.5), 1.0, r)
    assert sol.c_sinh == pytest.approx(1.0)
    assert sol.c_cosh == pytest.approx((r - math.cosh(1)) / math.sinh(1), rel=1e-14)
    assert sol.derivative(0.0) == pytest.approx(1.0)
    assert sol.derivative(1.0) == pytest.approx(r)
    assert not sol.ill_conditioned


def test_closed_form_overflow_guard():
    sol = closed_form_on_interval(Interval(0, 100), FormParams(0.5), 1.0, -1.0)
    assert sol.ill_conditioned
    assert math.isfinite(sol.c_cosh) and math.isfinite(sol.c_sinh)
    assert sol.derivative(0.0) == pytest.approx(1.0)
    # at the far end the slope is recovered to relative precision
    assert sol.derivative(100.0) == pytest.approx(-1.0, rel=1e-8)


def test_closed_form_needs_positive_alpha():
    with pytest.raises(ValueError):
        closed_form_on_interval(Interval(0, 1), FormParams(0.0), 1.0, 1.0)


@pytest.mark.parametrize("slopes", [(1.0, 0.3), (-2.0, 0.5), (0.0, 1.0)])
def test_closed_form_round_trip(slopes):
    iv = Interval(0.0, 1.5)
    p = FormParams(0.5)
    sol = closed_form_on_interval(iv, p, *slopes)
    G = normalize_intervals([(0.0, 1.5)], (0.0, 1.5))
    m = Mesh.from_open_set(G, 1 / 512)
    u = m.sample(sol)
    assert membership_G_alpha(u, G, p).ok
    assert ode_residual(u, G, p) <= 1e-12


def test_membership_examples(single_gap, gap_mesh, half):
    s = gap_mesh.sample(ScaleFunction.from_open_set(single_gap))
    assert membership_G_alpha(s, single_gap, FormParams(0.0)).ok
    G = normalize_intervals([(-1, 1)], (-1, 1))
    m = Mesh.from_open_set(G, 1 / 256)
    assert membership_G_alpha(m.sample(np.cosh), G, half).ok
    assert not membership_G_alpha(s, single_gap, half).ok


def test_membership_of_complement_part(single_gap, gap_mesh, half):
    r = decompose_F_s(gap_mesh.sample(hat(0.5, 3)), single_gap, half)
    assert membership_G_alpha(r.f2, single_gap, half, window_conditions=True).ok
    assert not membership_G_alpha(r.f1, single_gap, half).ok
    assert not membership_G_alpha(r.f, single_gap, half).ok


def test_ode_residual_examples(single_gap, gap_mesh, half):
    e = gap_mesh.sample(lambda x: np.exp(-x))
    assert ode_residual(e, single_gap, half) <= 1e-12
    assert ode_residual(gap_mesh.sample(hat(-2, 3)), single_gap, half) > 0.1
    lin = gap_mesh.sample(lambda x: 3 * x - 1)
    assert ode_residual(lin, single_gap, FormParams(0.0)) <= 1e-12


def test_ode_residual_convergence(single_gap, half):
    res = []
    for h in (0.02, 0.01, 0.005):
        m = Mesh.from_open_set(single_gap, h)
        res.append(solve_neumann(m.sample(hat(0.5, 3)), single_gap, half).checks["ode_residual"])
    ratios = [a / b for a, b in zip(res, res[1:])]
    assert all(3.5 <= r <= 4.5 for r in ratios), ratios


def test_neumann_residual_examples(single_gap, gap_mesh):
    f = gap_mesh.sample(np.sin)
    assert neumann_residual(f, f, single_gap) == 0
    zero = GridFunction(gap_mesh, np.zeros(gap_mesh.n_nodes))
    assert neumann_residual(zero, gap_mesh.sample(lambda x: x), single_gap) == pytest.approx(1.0)


def test_solve_neumann_family(single_gap, gap_mesh, half):
    f = gap_mesh.sample(hat(0.5, 3))
    fam = solve_neumann(f, single_gap, half, rng=np.random.default_rng(1))
    assert fam.family_dim == 1
    assert fam.checks["passed"]
    assert fam.constants_allowed == "none"
    ref = decompose_F_s(f, single_gap, half).f2
    assert np.array_equal(fam.particular.values, ref.values)
    assert fam.distance(fam.member([2.5])) <= 1e-12
    assert fam.distance(gap_mesh.sample(np.cos)) > 0.1
    with pytest.raises(ValueError):
        fam.member([1.0], c0=1.0)


def test_solve_neumann_member_data(single_gap, gap_mesh, half):
    s = gap_mesh.sample(ScaleFunction.from_open_set(single_gap))
    fam = solve_neumann(s, single_gap, half)
    assert np.max(np.abs(fam.particular.values)) <= 1e-12
    b = fam.homogeneous_basis.element(0)
    assert neumann_residual(b, s, single_gap) <= 1e-12


def test_solve_neumann_cantor(cantor3, half):
    m = Mesh.from_open_set(cantor3, 1 / 512)
    fam = solve_neumann(m.sample(lambda x: np.exp(-((x - 0.4) / 0.3) ** 2 / 2)), cantor3, half,
                        rng=np.random.default_rng(5))
    assert fam.family_dim == 8
    assert fam.checks["passed"]


def test_zero_alpha_examples(single_gap, gap_mesh):
    s = gap_mesh.sample(ScaleFunction.from_open_set(single_gap))
    assert np.max(np.abs(decompose_zero_alpha(s, single_gap).f2.values)) <= 1e-12
    x = gap_mesh.sample(lambda t: t)
    r = decompose_zero_alpha(x, single_gap)
    assert g_slope_spread(r.f2) <= 1e-9
    # free window ends force the common G-slope to vanish
    assert r.extras["g_slope"] == pytest.approx(0.0, abs=1e-9)
    assert np.max(np.abs(r.f1.slopes[~gap_mesh.g_flag])) <= 1e-12
    assert r.pythagoras_gap <= 1e-10
    shifted = decompose_zero_alpha(x + 5.0, single_gap)
    assert np.max(np.abs(shifted.f2.values - r.f2.values)) <= 1e-12


def test_zero_alpha_slope_uniform_on_cantor():
    G = cantor_complement((0, 1), 3, 1 / 3, (0, 1))
    m = Mesh.from_open_set(G, 1 / 729)
    r = decompose_zero_alpha(m.sample(lambda t: t * t), G)
    assert r.extras["g_slope_spread"] <= 1e-9


@pytest.mark.parametrize("flanks, allowed", [
    ((False, False), "C0_and_C1s"),
    ((True, False), "C0"),
    ((False, True), "C0"),
    ((True, True), "C0"),
])
def test_zero_alpha_branches(single_gap, gap_mesh, flanks, allowed):
    f = gap_mesh.sample(lambda t: t)
    fam = solve_zero_alpha(f, single_gap, flanks)
    assert fam.constants_allowed == allowed
    assert fam.checks["passed"]
    assert fam.branch_note


def test_zero_alpha_constant_and_scale(single_gap, gap_mesh):
    fam = solve_zero_alpha(gap_mesh.sample(np.ones_like), single_gap, (False, False))
    assert np.max(np.abs(fam.particular.values)) <= 1e-12
    s = fam.member(np.zeros(1), c0=-3.0, c1=2.0)
    expected = 2 * ScaleFunction.from_open_set(single_gap)(gap_mesh.nodes) - 3
    assert np.max(np.abs(s.values - expected)) <= 1e-12
    s_fn = gap_mesh.sample(ScaleFunction.from_open_set(single_gap))
    zero = FormParams(0.0)
    assert ode_residual(s_fn, single_gap, zero) <= 1e-12
    assert neumann_residual(s_fn, gap_mesh.sample(np.ones_like), single_gap) == 0
    assert fam.distance(s_fn) <= 1e-12


def test_zero_alpha_member_with_c1_needs_branch(single_gap, gap_mesh):
    fam = solve_zero_alpha(gap_mesh.sample(np.ones_like), single_gap, (True, False))
    with pytest.raises(ValueError):
        fam.member(np.zeros(1), c1=1.0)


def test_alpha_to_zero_continuity(single_gap):
    m = Mesh.from_open_set(single_gap, 1 / 128)
    f = m.sample(lambda t: t)
    spreads = [g_slope_spread(decompose_F_s(f, single_gap, FormParams(a)).f2) for a in (1e-2, 1e-3, 1e-4)]
    assert spreads[0] > spreads[1] > spreads[2]
    assert spreads[2] <= 1e-3
    limit = decompose_zero_alpha(f, single_gap).f2
    small = decompose_F_s(f, single_gap, FormParams(1e-6)).f2
    # compare slopes: the alpha > 0 problem has no additive gauge
    assert np.max(np.abs(small.slopes - limit.slopes)) <= 1e-3


def test_guarded_form_round_trip():
    # kappa * length = 60 takes the exponential branch
    p = FormParams(50.0)
    iv = Interval(0.0, 6.0)
    sol = closed_form_on_interval(iv, p, 2.0, -1.0)
    assert sol.ill_conditioned
    G = normalize_intervals([(0.0, 6.0)], (0.0, 6.0))
    m = Mesh.from_open_set(G, 1 / 2000)
    u = m.sample(sol)
    assert ode_residual(u, G, p) <= 1e-10
    assert sol.derivative(6.0) == pytest.approx(-1.0, rel=1e-12)
    assert sol(3.0) == pytest.approx(0.0, abs=1e-12)
