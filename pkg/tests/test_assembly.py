import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sbfem.angular_basis import make_uniform_mesh
from sbfem.assembly import SeparableLoad, assemble_pair, expand_solution, project_load, reduce_dirichlet

THETA = 1.5 * np.pi


def p1_stencils(M, h):
    N = M + 1
    A = np.diag(np.full(N, 2 * h / 3)) + np.diag(np.full(N - 1, h / 6), 1) + np.diag(np.full(N - 1, h / 6), -1)
    A[0, 0] = A[-1, -1] = h / 3
    B = np.diag(np.full(N, 2 / h)) - np.diag(np.full(N - 1, 1 / h), 1) - np.diag(np.full(N - 1, 1 / h), -1)
    B[0, 0] = B[-1, -1] = 1 / h
    return A, B


@pytest.mark.parametrize("M", [1, 3, 8])
def test_p1_closed_form_stencils(M):
    mesh = make_uniform_mesh(THETA, M, 1)
    pair = assemble_pair(mesh)
    A, B = p1_stencils(M, mesh.h)
    np.testing.assert_allclose(pair.mass, A, rtol=0, atol=1e-14 * mesh.h)
    np.testing.assert_allclose(pair.stiffness, B, rtol=0, atol=1e-14 / mesh.h)


@pytest.mark.parametrize("order", range(1, 7))
def test_symmetry_and_null_space(order):
    pair = assemble_pair(make_uniform_mesh(THETA, 5, order))
    assert np.array_equal(pair.mass, pair.mass.T)
    assert np.abs(pair.stiffness - pair.stiffness.T).max() <= 1e-14
    assert np.abs(pair.stiffness.sum(axis=1)).max() <= 1e-13 * np.abs(pair.stiffness).max()
    assert np.linalg.eigvalsh(pair.mass)[0] > 0
    red, _ = reduce_dirichlet(pair)
    assert np.linalg.eigvalsh(red.stiffness)[0] > 0


@pytest.mark.parametrize("order", range(1, 7))
def test_mass_integrates_to_area(order):
    # 1^T A 1 = int 1 dtheta
    pair = assemble_pair(make_uniform_mesh(THETA, 4, order))
    assert pair.mass.sum() == pytest.approx(THETA, rel=1e-14)


def test_default_constraints_are_end_nodes():
    pair = assemble_pair(make_uniform_mesh(THETA, 4, 2))
    assert pair.constrained_indices == (0, 8)
    assert pair.free_indices == tuple(range(1, 8))


def test_project_constant_p1():
    mesh = make_uniform_mesh(THETA, 6, 1)
    F = project_load(mesh, lambda t: np.ones_like(t))
    expected = np.full(mesh.n_nodes, mesh.h)
    expected[[0, -1]] = mesh.h / 2
    np.testing.assert_allclose(F, expected, rtol=1e-14)


def test_project_basis_function_gives_mass_column():
    mesh = make_uniform_mesh(THETA, 3, 3)
    pair = assemble_pair(mesh)
    k = 4
    F = project_load(mesh, lambda t: mesh.basis_matrix(t.ravel())[k].reshape(t.shape))
    np.testing.assert_allclose(F, pair.mass[:, k], atol=1e-14)
    e_k = np.zeros(mesh.n_nodes)
    e_k[k] = 1.0
    np.testing.assert_allclose(project_load(mesh, e_k), pair.mass[:, k], atol=1e-15)


def test_project_sine_total():
    mesh = make_uniform_mesh(THETA, 32, 2)
    F = project_load(mesh, lambda t: np.sin(2 * t / 3))
    assert F.sum() == pytest.approx(3.0, rel=1e-13)


def test_project_rejects_nonfinite():
    mesh = make_uniform_mesh(THETA, 3, 1)
    with pytest.raises(ValueError):
        project_load(mesh, lambda t: np.full_like(t, np.nan))
    with pytest.raises(ValueError):
        project_load(mesh, np.ones(3))


def test_reduce_small_system():
    pair = assemble_pair(make_uniform_mesh(THETA, 2, 1))
    red, rhs = reduce_dirichlet(pair, np.array([5.0, 7.0, 9.0]))
    assert red.mass.shape == (1, 1)
    assert red.mass[0, 0] == pair.mass[1, 1]
    assert red.stiffness[0, 0] == pair.stiffness[1, 1]
    np.testing.assert_array_equal(rhs, [7.0])


def test_reduced_p1_mass_is_tridiagonal_stencil():
    mesh = make_uniform_mesh(THETA, 6, 1)
    red, _ = reduce_dirichlet(assemble_pair(mesh))
    h = mesh.h
    n = 5
    T = np.diag(np.full(n, 2 * h / 3)) + np.diag(np.full(n - 1, h / 6), 1) + np.diag(np.full(n - 1, h / 6), -1)
    np.testing.assert_allclose(red.mass, T, atol=1e-15)


def test_reduce_rejects_empty_free_set_and_double_reduction():
    pair = assemble_pair(make_uniform_mesh(THETA, 1, 1))
    with pytest.raises(ValueError):
        reduce_dirichlet(pair)
    red, _ = reduce_dirichlet(assemble_pair(make_uniform_mesh(THETA, 3, 1)))
    with pytest.raises(ValueError):
        reduce_dirichlet(red)


def test_expand_known_vector():
    pair = assemble_pair(make_uniform_mesh(THETA, 3, 1))
    np.testing.assert_array_equal(expand_solution(pair, [2.0, 3.0]), [0.0, 2.0, 3.0, 0.0])
    np.testing.assert_array_equal(expand_solution(pair, [2.0, 3.0], constrained_values=[1.0, -1.0]), [1.0, 2.0, 3.0, -1.0])


def test_expand_empty_free_set():
    pair = assemble_pair(make_uniform_mesh(THETA, 1, 1))
    np.testing.assert_array_equal(expand_solution(pair, np.zeros(0)), [0.0, 0.0])


def test_expand_size_mismatch():
    pair = assemble_pair(make_uniform_mesh(THETA, 3, 1))
    with pytest.raises(ValueError):
        expand_solution(pair, [1.0, 2.0, 3.0])


@settings(max_examples=25, deadline=None)
@given(order=st.integers(1, 6), M=st.integers(2, 6), seed=st.integers(0, 2**16))
def test_reduce_expand_round_trip(order, M, seed):
    pair = assemble_pair(make_uniform_mesh(THETA, M, order))
    v = np.random.default_rng(seed).normal(size=len(pair.free_indices))
    full = expand_solution(pair, v)
    _, back = reduce_dirichlet(pair, full)
    np.testing.assert_array_equal(back, v)
    assert np.all(full[list(pair.constrained_indices)] == 0.0)


def test_separable_load_evaluation_and_validation():
    load = SeparableLoad(((0.5, np.sin), (1.0, np.cos)))
    assert len(load) == 2
    assert load(0.25, 1.0) == pytest.approx(0.5 * np.sin(1.0) + 0.25 * np.cos(1.0))
    with pytest.raises(ValueError):
        SeparableLoad(((-2.0, np.sin),))
