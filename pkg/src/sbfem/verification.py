"""Property suites for the discretization, the modal solver and the interpolation theory.

Each check returns :class:`PropertyResult` records; :func:`run_all` collects
them for the ``sbfem verify`` command.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .angular_basis import gauss_rule, make_uniform_mesh
from .assembly import assemble_pair, reduce_dirichlet
from .problems import THREE_HALVES_PI, builtin_problem, corner_harmonic
from .semidiscrete import (
    ScalarField,
    WeightedNormSpec,
    h1tilde_norm,
    interpolate,
    radial_quadrature,
    radial_trace,
    weighted_norm,
)
from .solver import solve
from .spectral import build_hamiltonian, solve_gevp

__all__ = [
    "PropertyResult",
    "smooth_test_fields",
    "check_operator_pair",
    "check_modal_decomposition",
    "check_hamiltonian",
    "check_stability",
    "check_trace_inequality",
    "check_galerkin",
    "check_isometry",
    "run_all",
    "STABILITY_FACTOR",
    "TRACE_MARGIN",
]

STABILITY_FACTOR = 1.0 + 1e-8
TRACE_MARGIN = 1.5
MODAL_TOL = 1e-10
HAMILTONIAN_TOL = 1e-8
GALERKIN_TOL = 1e-8
ISOMETRY_TOL = 1e-6


@dataclass(frozen=True)
class PropertyResult:
    """Outcome of one property check; ``value <= limit`` means it passed."""

    suite: str
    name: str
    value: float
    limit: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value <= self.limit)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f"  {self.detail}" if self.detail else ""
        return f"{status} {self.suite}/{self.name}: {self.value:.3e} <= {self.limit:.3e}{extra}"


def smooth_test_fields():
    """Fixed set of five smooth fields with every partial used by the checks."""
    exp_half = lambda t: np.exp(0.5 * t)  # noqa: E731
    return [
        ScalarField(
            value=lambda r, t: r * np.sin(t),
            dr=lambda r, t: np.sin(t) + 0.0 * r,
            dtheta=lambda r, t: r * np.cos(t),
            dthetatheta=lambda r, t: -r * np.sin(t),
            drtheta=lambda r, t: np.cos(t) + 0.0 * r,
            name="r sin(theta)",
        ),
        corner_harmonic(2.0 / 3.0, name="r^(2/3) sin(2 theta/3)"),
        ScalarField(
            value=lambda r, t: r**2 * t * np.cos(t),
            dr=lambda r, t: 2.0 * r * t * np.cos(t),
            dtheta=lambda r, t: r**2 * (np.cos(t) - t * np.sin(t)),
            dthetatheta=lambda r, t: r**2 * (-2.0 * np.sin(t) - t * np.cos(t)),
            drtheta=lambda r, t: 2.0 * r * (np.cos(t) - t * np.sin(t)),
            name="r^2 theta cos(theta)",
        ),
        ScalarField(
            value=lambda r, t: r**1.5 * exp_half(t),
            dr=lambda r, t: 1.5 * r**0.5 * exp_half(t),
            dtheta=lambda r, t: 0.5 * r**1.5 * exp_half(t),
            dthetatheta=lambda r, t: 0.25 * r**1.5 * exp_half(t),
            drtheta=lambda r, t: 0.75 * r**0.5 * exp_half(t),
            name="r^(3/2) exp(theta/2)",
        ),
        ScalarField(
            value=lambda r, t: (r - r**3) * np.sin(3.0 * t),
            dr=lambda r, t: (1.0 - 3.0 * r**2) * np.sin(3.0 * t),
            dtheta=lambda r, t: 3.0 * (r - r**3) * np.cos(3.0 * t),
            dthetatheta=lambda r, t: -9.0 * (r - r**3) * np.sin(3.0 * t),
            drtheta=lambda r, t: 3.0 * (1.0 - 3.0 * r**2) * np.cos(3.0 * t),
            name="(r - r^3) sin(3 theta)",
        ),
    ]


# -- discrete operators ---------------------------------------------------------


def check_operator_pair(mesh):
    """``A`` symmetric positive definite, ``B`` symmetric positive semidefinite with ``B 1 = 0``."""
    pair = assemble_pair(mesh)
    A, B = pair.mass, pair.stiffness
    tag = f"M={mesh.n_elements},p={mesh.order}"
    scale_a, scale_b = np.abs(A).max(), np.abs(B).max()
    ev_a = np.linalg.eigvalsh(A)
    ev_b = np.linalg.eigvalsh(B)
    return [
        PropertyResult("operators", f"A symmetric [{tag}]", float(np.abs(A - A.T).max() / scale_a), 1e-14),
        PropertyResult("operators", f"B symmetric [{tag}]", float(np.abs(B - B.T).max() / scale_b), 1e-14),
        # condition number is finite only for a positive definite A
        PropertyResult("operators", f"A positive definite, cond [{tag}]", float(ev_a[-1] / ev_a[0]) if ev_a[0] > 0 else math.inf, 1e12),
        PropertyResult("operators", f"B positive semidefinite [{tag}]", float(-ev_b[0] / ev_b[-1]), 1e-12),
        PropertyResult("operators", f"B annihilates constants [{tag}]", float(np.abs(B.sum(axis=1)).max() / scale_b), 1e-12),
    ]


def check_modal_decomposition(mesh, tol=MODAL_TOL):
    """Relative residual ``|B phi - mu A phi| / (mu |A phi| + |B phi|)`` and ``A``-orthonormality."""
    pair, _ = reduce_dirichlet(assemble_pair(mesh))
    modal = solve_gevp(pair)
    A, B = pair.mass, pair.stiffness
    Phi, mu = modal.modes, modal.lambdas**2
    APhi, BPhi = A @ Phi, B @ Phi
    res = np.linalg.norm(BPhi - APhi * mu[None, :], axis=0)
    scaled = res / (mu * np.linalg.norm(APhi, axis=0) + np.linalg.norm(BPhi, axis=0))
    gram = Phi.T @ A @ Phi
    tag = f"M={mesh.n_elements},p={mesh.order}"
    return [
        PropertyResult("modal", f"eigen residual [{tag}]", float(scaled.max()), tol),
        PropertyResult("modal", f"A-orthonormality [{tag}]", float(np.abs(gram - np.eye(len(mu))).max()), tol),
    ]


def check_hamiltonian(mesh, tol=HAMILTONIAN_TOL):
    """``|eig(E)|`` equals the duplicated modal exponents; ``(phi, lambda A phi)`` are eigenvectors of ``E``."""
    pair, _ = reduce_dirichlet(assemble_pair(mesh))
    if pair.size > 50:
        raise ValueError("Hamiltonian cross-check is limited to 50 free DOFs")
    modal = solve_gevp(pair)
    ham = build_hamiltonian(pair)
    mags = np.sort(np.abs(ham.eigenvalues()))
    expected = np.sort(np.repeat(modal.lambdas, 2))
    rel = np.abs(mags - expected) / np.maximum(1.0, expected)
    Phi, lam = modal.modes, modal.lambdas
    psi = (pair.mass @ Phi) * lam[None, :]
    vec = np.vstack([Phi, psi])
    res = ham.matrix @ vec - vec * lam[None, :]
    vec_rel = np.abs(res).max(axis=0) / np.maximum(1.0, np.abs(vec).max(axis=0) * np.maximum(1.0, lam))
    tag = f"M={mesh.n_elements},p={mesh.order},n={pair.size}"
    return [
        PropertyResult("hamiltonian", f"|eig(E)| = +-lambda [{tag}]", float(rel.max()), tol),
        PropertyResult("hamiltonian", f"psi = lambda A phi [{tag}]", float(vec_rel.max()), tol),
    ]


# -- interpolation operator -----------------------------------------------------


def check_stability(fields=None, theta_max=THREE_HALVES_PI, levels=(2, 4, 8, 16), spec=WeightedNormSpec()):
    """Angular and mixed derivative stability of the p=1 interpolant."""
    fields = smooth_test_fields() if fields is None else fields
    inv_r = spec.with_weight("1/r")
    out = []
    worst_t = worst_rt = 0.0
    for f in fields:
        for n in levels:
            mesh = make_uniform_mesh(theta_max, n, 1)
            pi = interpolate(f, mesh)
            lhs_t = weighted_norm(pi, inv_r, which="dtheta")
            rhs_t = weighted_norm(f, inv_r, theta_max, mesh.breakpoints, which="dtheta")
            lhs_rt = weighted_norm(pi, spec, which="drtheta")
            rhs_rt = weighted_norm(f, spec, theta_max, mesh.breakpoints, which="drtheta")
            worst_t = max(worst_t, lhs_t / rhs_t)
            worst_rt = max(worst_rt, lhs_rt / rhs_rt)
        out.append(PropertyResult("stability", f"|d_theta Pi u| / |d_theta u| [{f.name}]", worst_t, STABILITY_FACTOR))
        out.append(PropertyResult("stability", f"|d_rtheta Pi u| / |d_rtheta u| [{f.name}]", worst_rt, STABILITY_FACTOR))
        worst_t = worst_rt = 0.0
    return out


def trace_bounds(f, theta_max, n_angles=10, spec=WeightedNormSpec()):
    """Trace integrals ``int r u^2(r, vartheta) dr`` and the two norm terms.

    Returns ``(angles, traces, ||u||^2, ||d_theta u||^2)`` with both norms in
    ``L^2_r``.
    """
    r, wr = radial_quadrature(spec)
    angles = np.linspace(0.0, theta_max, n_angles)
    traces = np.array([float(np.sum(wr * r * radial_trace(f, a, theta_max)(r) ** 2)) for a in angles])
    u2 = weighted_norm(f, spec, theta_max) ** 2
    du2 = weighted_norm(f, spec, theta_max, which="dtheta") ** 2
    return angles, traces, u2, du2


def check_trace_inequality(fields=None, theta_max=THREE_HALVES_PI, n_angles=10, margin=TRACE_MARGIN):
    """Trace bound with the explicit constant and with the sharp constant.

    The explicit form ``Theta int r u^2 <= 2 |u|^2 + |d_theta u|^2`` is
    checked with ``margin``. Integrating the pointwise identity over
    ``(vartheta, Theta)`` actually yields
    ``Theta int r u^2 <= (1 + Theta) |u|^2 + Theta |d_theta u|^2``, which is
    checked without margin. For ``Theta > 1`` only the second bound is valid
    in general.
    """
    fields = smooth_test_fields() if fields is None else fields
    out = []
    for f in fields:
        _, traces, u2, du2 = trace_bounds(f, theta_max, n_angles)
        lhs = theta_max * traces.max()
        explicit = margin * (2.0 * u2 + du2)
        sharp = (1.0 + theta_max) * u2 + theta_max * du2
        out.append(PropertyResult("trace", f"explicit constant x{margin:g} [{f.name}]", lhs / explicit, 1.0))
        out.append(PropertyResult("trace", f"sharp constant [{f.name}]", lhs / sharp, 1.0 + 1e-10))
    return out


# -- Galerkin consistency ---------------------------------------------------------

HAT_NODES = (1e-6, 0.01, 0.1, 0.5, 1.0)


def _graded_radial_rule(a, b, n_points=20, ratio=0.5):
    # composite Gauss on cells graded geometrically toward a
    edges = [b]
    while edges[-1] * ratio > a:
        edges.append(edges[-1] * ratio)
    edges.append(a)
    edges = np.array(edges[::-1])
    rule = gauss_rule(n_points)
    half = 0.5 * np.diff(edges)
    pts = edges[:-1, None] + half[:, None] * (rule.points[None, :] + 1.0)
    wts = half[:, None] * rule.weights[None, :]
    return pts.ravel(), wts.ravel()


def galerkin_residuals(problem, hat_nodes=HAT_NODES):
    """Relative variational residuals for ``v = e_j(theta) * hat_k(r)``.

    ``a(u, v) = int int (r u_r v_r + u_theta v_theta / r)`` and
    ``b(v) = int int r f v``. Only hats at interior nodes are used, so every
    test function vanishes at both radial ends and no boundary terms arise.
    Returns an array of shape ``(n_free, n_hats)``.
    """
    sol = solve(problem)
    mesh = problem.mesh
    t, wt = mesh.element_quadrature()
    t, wt = t.ravel(), wt.ravel()
    E = mesh.basis_matrix(t)
    dE = mesh.basis_matrix(t, deriv=1)
    free = sol.pair.free_indices if sol.pair is not None else range(1, mesh.n_nodes - 1)
    free = np.asarray(free)
    nodes = np.asarray(hat_nodes, dtype=float)
    rows = []
    for k in range(1, len(nodes) - 1):
        r_parts, w_parts, h_parts, dh_parts = [], [], [], []
        for lo, hi, rising in ((nodes[k - 1], nodes[k], True), (nodes[k], nodes[k + 1], False)):
            r, wr = _graded_radial_rule(lo, hi)
            span = hi - lo
            h = (r - lo) / span if rising else (hi - r) / span
            dh = np.full_like(r, 1.0 / span if rising else -1.0 / span)
            r_parts.append(r)
            w_parts.append(wr)
            h_parts.append(h)
            dh_parts.append(dh)
        r, wr = np.concatenate(r_parts), np.concatenate(w_parts)
        h, dh = np.concatenate(h_parts), np.concatenate(dh_parts)
        u_r = sol.on_grid(r, t, "dr")
        u_t = sol.on_grid(r, t, "dtheta")
        f = problem.load(r[:, None], t[None, :]) if len(problem.load) else np.zeros_like(u_r)
        # integrand[i, j]: radial sample i, test basis j
        term_r = (wr * r * dh)[:, None] * (u_r * wt[None, :]) @ E[free].T
        term_t = (wr * h / r)[:, None] * (u_t * wt[None, :]) @ dE[free].T
        term_f = (wr * r * h)[:, None] * (f * wt[None, :]) @ E[free].T
        a = term_r.sum(axis=0) + term_t.sum(axis=0)
        b = term_f.sum(axis=0)
        scale = np.abs(term_r).sum(axis=0) + np.abs(term_t).sum(axis=0) + np.abs(term_f).sum(axis=0)
        rows.append(np.abs(a - b) / np.maximum(scale, 1e-300))
    return np.array(rows).T


def check_galerkin(problem_ids=("test1", "test2", "test3-manufactured"), n_elements=8, order=1, tol=GALERKIN_TOL):
    out = []
    for pid in problem_ids:
        problem, _ = builtin_problem(pid, n_elements, order)
        res = galerkin_residuals(problem)
        out.append(PropertyResult("galerkin", f"variational residual [{pid},M={n_elements},p={order}]", float(res.max()), tol))
    return out


# -- polar isometry -----------------------------------------------------------------


def _cartesian_wedge_integral(func, phi):
    """``int f dA`` over ``{0 <= theta <= phi, r <= 1}`` with ``0 < phi <= pi/2``."""
    opts = dict(epsabs=1e-13, epsrel=1e-12)
    c = math.cos(phi)
    total, _ = integrate.dblquad(lambda y, x: func(x, y), c, 1.0, 0.0, lambda x: math.sqrt(max(0.0, 1.0 - x * x)), **opts)
    if phi < 0.5 * math.pi - 1e-15:
        tan = math.tan(phi)
        part, _ = integrate.dblquad(lambda y, x: func(x, y), 0.0, c, 0.0, lambda x: x * tan, **opts)
        total += part
    return total


def cartesian_h1_squared(value, grad, theta_max):
    """``||u||^2_{H^1}`` on the sector by adaptive Cartesian quadrature.

    The sector is split into wedges of at most a quarter turn; each is
    rotated onto the first quadrant before integration.
    """
    def integrand(x, y):
        g = grad(x, y)
        return value(x, y) ** 2 + g[0] ** 2 + g[1] ** 2

    total, start = 0.0, 0.0
    while start < theta_max - 1e-15:
        phi = min(0.5 * math.pi, theta_max - start)
        c, s = math.cos(start), math.sin(start)
        total += _cartesian_wedge_integral(lambda x, y, c=c, s=s: integrand(c * x - s * y, s * x + c * y), phi)
        start += phi
    return total


def _isometry_cases():
    return [
        (
            ScalarField(value=lambda r, t: r * np.sin(t), dr=lambda r, t: np.sin(t) + 0.0 * r, dtheta=lambda r, t: r * np.cos(t), name="y"),
            lambda x, y: y,
            lambda x, y: (0.0, 1.0),
        ),
        (
            ScalarField(
                value=lambda r, t: r**2 * np.cos(2.0 * t),
                dr=lambda r, t: 2.0 * r * np.cos(2.0 * t),
                dtheta=lambda r, t: -2.0 * r**2 * np.sin(2.0 * t),
                name="x^2 - y^2",
            ),
            lambda x, y: x * x - y * y,
            lambda x, y: (2.0 * x, -2.0 * y),
        ),
    ]


def check_isometry(theta_max=THREE_HALVES_PI, tol=ISOMETRY_TOL):
    out = []
    for field, value, grad in _isometry_cases():
        polar = h1tilde_norm(field, WeightedNormSpec(angular_points=20), theta_max)[1] ** 2
        cart = cartesian_h1_squared(value, grad, theta_max)
        out.append(PropertyResult("isometry", f"H~1(Q) vs H1(Omega) [{field.name}]", abs(polar - cart) / cart, tol))
    return out


def run_all():
    """Every property suite on its default configuration."""
    results = []
    for n, p in ((4, 1), (8, 2), (8, 4), (16, 6)):
        results += check_operator_pair(make_uniform_mesh(THREE_HALVES_PI, n, p))
    for n, p in ((8, 1), (16, 2), (16, 4), (64, 6)):
        results += check_modal_decomposition(make_uniform_mesh(THREE_HALVES_PI, n, p))
    for n, p in ((8, 1), (16, 2), (12, 4), (8, 6)):
        results += check_hamiltonian(make_uniform_mesh(THREE_HALVES_PI, n, p))
    results += check_stability()
    results += check_trace_inequality()
    results += check_galerkin()
    results += check_isometry()
    return results
