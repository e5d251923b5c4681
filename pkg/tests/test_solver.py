import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sbfem.angular_basis import make_uniform_mesh
from sbfem.assembly import OperatorPair, SeparableLoad, assemble_pair, project_load, reduce_dirichlet
from sbfem.exceptions import ConfigError, ResonanceError
from sbfem.semidiscrete import evaluate
from sbfem.solver import (
    RadialTerm,
    SbfemProblem,
    SideData,
    particular_solution,
    radial_profile,
    residual_check,
    solve,
)
from sbfem.spectral import solve_gevp

THETA = 1.5 * np.pi
NU = 2 / 3


def make_test1(M=8, p=2):
    return SbfemProblem(make_uniform_mesh(THETA, M, p), outer_bc=lambda t: np.sin(NU * t))


def test_scalar_particular_solution():
    pair = OperatorPair(np.array([[2.0]]), np.array([[3.0]]), (), (0,), 1, reduced=True)
    term = particular_solution(pair, 0.0, np.array([5.0]))
    assert term.exponent == 2.0
    assert term.kind == "particular"
    assert term.mode[0] == pytest.approx(5.0 / (4 * 2.0 - 3.0))


def test_particular_residual():
    red, _ = reduce_dirichlet(assemble_pair(make_uniform_mesh(THETA, 10, 3)))
    f = np.random.default_rng(0).normal(size=red.size)
    term = particular_solution(red, 0.5, f)
    phi = term.mode[list(red.free_indices)]
    res = (6.25 * red.mass - red.stiffness) @ phi - f
    assert np.linalg.norm(res) <= 1e-10 * np.linalg.norm(f)
    assert term.mode[0] == 0.0 and term.mode[-1] == 0.0


def test_resonance_detected():
    red, _ = reduce_dirichlet(assemble_pair(make_uniform_mesh(THETA, 6, 2)))
    lam = solve_gevp(red).lambdas
    alpha = lam[1] - 2.0 + 1e-12
    with pytest.raises(ResonanceError) as info:
        particular_solution(red, alpha, np.ones(red.size))
    assert info.value.eigenvalue == pytest.approx(lam[1] ** 2)


def test_particular_rejects_bad_input():
    red, _ = reduce_dirichlet(assemble_pair(make_uniform_mesh(THETA, 4, 1)))
    with pytest.raises(ValueError):
        particular_solution(red, -2.0, np.ones(red.size))
    with pytest.raises(ValueError):
        particular_solution(red, 0.0, np.ones(red.size + 1))


def test_zero_data_gives_zero_solution():
    sol = solve(SbfemProblem(make_uniform_mesh(THETA, 6, 2)))
    assert all(t.coefficient == 0.0 for t in sol.terms)
    assert np.all(sol.on_grid(np.array([0.3, 1.0]), np.array([0.5, 2.0])) == 0.0)


def test_boundary_reproduction():
    prob = make_test1(12, 3)
    sol = solve(prob)
    g = np.sin(NU * prob.mesh.nodes)
    assert np.abs(sol.boundary_values() - g).max() <= 1e-10


def test_test1_value_at_node_and_interior():
    sol = solve(make_test1(16, 2))
    assert evaluate(sol, 1.0, 0.75 * np.pi) == pytest.approx(1.0, abs=1e-12)
    assert evaluate(sol, 0.5, 0.75 * np.pi) == pytest.approx(0.5**NU, abs=1e-5)


def test_exponents_nonnegative_and_positive():
    sol = solve(make_test1())
    assert np.all(sol.exponents > 0)


def test_linearity_in_boundary_data():
    mesh = make_uniform_mesh(THETA, 8, 2)
    g = lambda t: np.sin(NU * t) + 0.3 * np.sin(2 * NU * t)  # noqa: E731
    one = solve(SbfemProblem(mesh, outer_bc=g))
    two = solve(SbfemProblem(mesh, outer_bc=lambda t: 2 * g(t)))
    c1 = np.array([t.coefficient for t in one.terms])
    c2 = np.array([t.coefficient for t in two.terms])
    np.testing.assert_allclose(c2, 2 * c1, rtol=1e-13, atol=1e-15)


def test_coefficients_match_orthogonality_formula():
    prob = make_test1(10, 2)
    sol = solve(prob)
    pair = sol.pair
    red, _ = reduce_dirichlet(pair)
    free = list(red.free_indices)
    g = np.sin(NU * prob.mesh.nodes)[free]
    c_alt = sol.modal.modes.T @ red.mass @ g
    c = np.array([t.coefficient for t in sol.terms if t.kind == "homogeneous"])
    np.testing.assert_allclose(c, c_alt, atol=1e-12)


def test_only_leading_mode_for_exact_eigenfunction_data():
    # the leading coefficient dominates for g = sin(2 theta / 3)
    sol = solve(make_test1(32, 2))
    c = np.array([t.coefficient for t in sol.terms])
    assert abs(c[0]) > 1.0
    assert np.abs(c[1:]).max() < 1e-3 * abs(c[0])


def test_residual_check_homogeneous():
    prob = make_test1(8, 2)
    sol = solve(prob)
    assert residual_check(sol, sol.pair, prob.load, [0.1, 0.5, 0.9]) <= 1e-9


def test_residual_check_with_load():
    mesh = make_uniform_mesh(THETA, 8, 2)
    load = SeparableLoad(((0.5, lambda t: (209 / 36) * np.sin(NU * t)),))
    sol = solve(SbfemProblem(mesh, load=load))
    assert residual_check(sol, sol.pair, load, [0.1, 0.5, 0.9]) <= 1e-9
    # dropping the load from the check leaves a clear residual
    assert residual_check(sol, sol.pair, SeparableLoad(), [0.5]) > 1e-3


def test_manufactured_load_value():
    mesh = make_uniform_mesh(THETA, 32, 2)
    load = SeparableLoad(((0.5, lambda t: (209 / 36) * np.sin(NU * t)),))
    sol = solve(SbfemProblem(mesh, load=load))
    r, t = 0.4, 1.1
    assert evaluate(sol, r, t) == pytest.approx((r**NU - r**2.5) * np.sin(NU * t), abs=1e-5)


def test_side_data_lifting_reproduces_edges():
    mesh = make_uniform_mesh(THETA, 16, 2)
    k = 4 / (3 * np.pi)
    g = lambda t: (1 - k * t) * np.cos(NU * t)  # noqa: E731
    sol = solve(SbfemProblem(mesh, outer_bc=g, side_bc=SideData(((NU, 1.0, 1.0),))))
    r = np.array([1e-4, 0.2, 0.7, 1.0])
    vals = sol.radial_coefficients(r)
    np.testing.assert_allclose(vals[:, 0], r**NU, rtol=1e-12)
    np.testing.assert_allclose(vals[:, -1], r**NU, rtol=1e-12)
    assert residual_check(sol, sol.pair, SeparableLoad(), [0.1, 0.5, 0.9]) <= 1e-9


def test_incompatible_corner_data_rejected():
    mesh = make_uniform_mesh(THETA, 4, 1)
    with pytest.raises(ConfigError):
        solve(SbfemProblem(mesh, outer_bc=lambda t: np.ones_like(t)))


def test_radial_profile_power_derivatives():
    r = np.array([0.2, 0.7])
    np.testing.assert_allclose(radial_profile(r, 2.5), r**2.5)
    np.testing.assert_allclose(radial_profile(r, 2.5, deriv=1), 2.5 * r**1.5)
    np.testing.assert_allclose(radial_profile(r, 2.5, deriv=2), 3.75 * r**0.5)
    np.testing.assert_allclose(radial_profile(r, 1.0, deriv=2), 0.0)


def test_radial_profile_log_limit():
    r = np.array([1e-8, 0.05, 0.5, 1.0])
    b = 0.7
    np.testing.assert_allclose(radial_profile(r, b, 1), r**b * np.log(r), rtol=1e-14, atol=1e-300)
    np.testing.assert_allclose(radial_profile(r, b, 1, deriv=1), r ** (b - 1) * (b * np.log(r) + 1), rtol=1e-13)


@settings(max_examples=60, deadline=None)
@given(
    beta=st.floats(0.1, 5.0),
    delta=st.one_of(st.floats(-1e-9, 1e-9), st.floats(-3.0, 3.0)),
    r=st.floats(1e-6, 1.0),
)
def test_divided_difference_matches_quotient(beta, delta, r):
    lam = beta + delta
    if lam < 0:
        return
    got = radial_profile(np.array([r]), beta, 1, partner=lam)[0]
    if abs(delta) > 1e-3:
        expected = (r**beta - r**lam) / (beta - lam)
        assert got == pytest.approx(expected, rel=1e-8, abs=1e-14)
    else:
        # first-order expansion around r^beta log r
        expected = r**beta * np.log(r) * (1 + 0.5 * delta * np.log(r))
        assert got == pytest.approx(expected, rel=1e-6, abs=1e-14)


def test_divided_difference_large_exponent_gap_is_finite():
    r = np.array([1e-12, 1e-3, 0.5])
    vals = radial_profile(r, 0.6667, 1, partner=300.0, deriv=2)
    assert np.all(np.isfinite(vals))


def test_radial_term_validation():
    mode = np.zeros(3)
    with pytest.raises(ValueError):
        RadialTerm(1.0, -0.5, 0, mode)
    with pytest.raises(ValueError):
        RadialTerm(1.0, 0.0, 1, mode)
    with pytest.raises(ValueError):
        RadialTerm(1.0, 1.0, 2, mode)
    with pytest.raises(ValueError):
        RadialTerm(1.0, 1.0, 0, mode, kind="other")


def test_single_unreduced_term_partition_of_unity():
    from sbfem.solver import SemiDiscreteSolution

    mesh = make_uniform_mesh(THETA, 3, 2)
    sol = SemiDiscreteSolution(mesh, [RadialTerm(1.0, 1.0, 0, np.ones(mesh.n_nodes))])
    r, t = np.array([0.3, 0.8]), np.array([0.1, 2.0, 4.0])
    np.testing.assert_allclose(sol.on_grid(r, t), np.repeat(r[:, None], 3, axis=1), atol=1e-14)
    np.testing.assert_allclose(sol.on_grid(r, t, "dr"), 1.0, atol=1e-14)
    np.testing.assert_allclose(sol.on_grid(r, t, "dtheta"), 0.0, atol=1e-13)


def test_solution_rejects_radii_outside_domain():
    sol = solve(make_test1(4, 1))
    with pytest.raises(ValueError):
        sol.radial_coefficients([0.0])
    with pytest.raises(ValueError):
        sol.radial_coefficients([1.5])
    with pytest.raises(ValueError):
        residual_check(sol, sol.pair, SeparableLoad(), [1.0])


def test_projection_used_for_particular_rhs():
    # a nodal-vector load and its callable interpolant give the same particular term
    mesh = make_uniform_mesh(THETA, 6, 1)
    coeffs = np.sin(NU * mesh.nodes)
    by_vec = solve(SbfemProblem(mesh, load=SeparableLoad(((0.5, coeffs),))))
    F = project_load(mesh, coeffs)
    assert F.shape == (mesh.n_nodes,)
    assert by_vec.terms[0].kind == "particular"
