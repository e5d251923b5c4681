"""Semi-discrete fields, nodal angular interpolation and weighted norms on ``Q = (0,1) x (0,Theta)``.

Every field here is a function of ``(r, theta)``. The norms are the weighted
ones obtained by pulling ``H^1`` on the sector back through the polar map:

    ||u||^2_{H~1} = int int ( r u^2 + r (d_r u)^2 + (d_theta u)^2 / r ) dr dtheta.

Radial integrals use composite Gauss rules on geometrically graded cells
``[q^(k+1), q^k]``, which resolve the ``r -> 0`` behaviour of singular
solutions such as ``r^(2/3)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .angular_basis import AngularMesh, default_quadrature_points, gauss_rule

__all__ = [
    "CoordinateMap",
    "ScalarField",
    "SemiDiscreteField",
    "InterpolatedField",
    "WeightedNormSpec",
    "evaluate",
    "evaluate_dr",
    "evaluate_dtheta",
    "radial_trace",
    "interpolate",
    "radial_quadrature",
    "angular_quadrature",
    "weighted_norm",
    "h1tilde_error",
    "h1tilde_norm",
]

PARTIALS = ("value", "dr", "dtheta", "dthetatheta", "drtheta")


class CoordinateMap:
    """Scaled boundary map ``F(r, theta) = r (cos theta, sin theta)``.

    The Jacobian is laid out with rows ``(d_r x, d_r y)`` and
    ``(d_theta x, d_theta y)``.
    """

    def forward(self, r, theta):
        r = np.asarray(r, dtype=float)
        theta = np.asarray(theta, dtype=float)
        return r * np.cos(theta), r * np.sin(theta)

    def jacobian(self, r, theta):
        r, theta = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(theta, dtype=float))
        c, s = np.cos(theta), np.sin(theta)
        J = np.empty(r.shape + (2, 2))
        J[..., 0, 0] = c
        J[..., 0, 1] = s
        J[..., 1, 0] = -r * s
        J[..., 1, 1] = r * c
        return J

    def determinant(self, r, theta):
        return np.broadcast_to(np.asarray(r, dtype=float), np.broadcast(r, theta).shape).copy()

    def inverse_jacobian(self, r, theta):
        """Rows ``(d_x r, d_x theta)`` and ``(d_y r, d_y theta)``."""
        r, theta = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(theta, dtype=float))
        c, s = np.cos(theta), np.sin(theta)
        Ji = np.empty(r.shape + (2, 2))
        Ji[..., 0, 0] = c
        Ji[..., 0, 1] = -s / r
        Ji[..., 1, 0] = s
        Ji[..., 1, 1] = c / r
        return Ji

    def cartesian_gradient(self, r, theta, du_dr, du_dtheta):
        """``(d_x u, d_y u)`` from the polar partials."""
        c, s = np.cos(theta), np.sin(theta)
        return c * du_dr - s * du_dtheta / r, s * du_dr + c * du_dtheta / r


class ScalarField:
    """Function ``u(r, theta)`` with optional analytic partial derivatives.

    All callables take broadcastable arrays ``(r, theta)``. Partials that are
    not supplied raise ``ValueError`` when requested; they are never
    approximated by finite differences.
    """

    def __init__(self, value, dr=None, dtheta=None, dthetatheta=None, drtheta=None, name=""):
        self._partials = {
            "value": value,
            "dr": dr,
            "dtheta": dtheta,
            "dthetatheta": dthetatheta,
            "drtheta": drtheta,
        }
        self.name = name

    def __call__(self, r, theta):
        return self.partial("value")(r, theta)

    def has(self, which):
        return self._partials.get(which) is not None

    def partial(self, which):
        if which not in PARTIALS:
            raise ValueError(f"unknown partial {which!r}")
        fn = self._partials.get(which)
        if fn is None:
            raise ValueError(f"field {self.name or '<anonymous>'} has no analytic {which}")
        return fn

    def on_grid(self, r, theta, which="value"):
        """Values on the tensor grid ``r x theta``, shape ``(len(r), len(theta))``."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        vals = self.partial(which)(r[:, None], theta[None, :])
        return np.broadcast_to(np.asarray(vals, dtype=float), (len(r), len(theta)))

    def __sub__(self, other):
        return _DifferenceField(self, other)


class _DifferenceField(ScalarField):
    def __init__(self, a, b):
        self.a, self.b = a, b
        self.name = f"({a.name} - {b.name})"
        self.mesh = getattr(a, "mesh", None) or getattr(b, "mesh", None)

    def has(self, which):
        return self.a.has(which) and self.b.has(which)

    def partial(self, which):
        fa, fb = self.a.partial(which), self.b.partial(which)
        return lambda r, t: fa(r, t) - fb(r, t)

    def on_grid(self, r, theta, which="value"):
        return self.a.on_grid(r, theta, which) - self.b.on_grid(r, theta, which)


class SemiDiscreteField(ScalarField):
    """``u_s(r, theta) = sum_i u_i(r) e_i(theta)`` on an angular mesh.

    Subclasses provide :meth:`radial_coefficients`; values and the partials
    ``dr``, ``dtheta`` and ``drtheta`` follow termwise. Inside an element the
    basis is polynomial, so ``dthetatheta`` is taken elementwise.
    """

    def __init__(self, mesh: AngularMesh):
        self.mesh = mesh
        self.name = type(self).__name__

    def radial_coefficients(self, r, deriv=0):
        raise NotImplementedError

    def _check_radii(self, r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        if np.any(~np.isfinite(r)) or np.any(r <= 0.0) or np.any(r > 1.0):
            raise ValueError("radii must lie in (0, 1]")
        return r

    def has(self, which):
        return which in PARTIALS

    def _angular(self, theta, order):
        if order == 0:
            return self.mesh.basis_matrix(theta)
        if order == 1:
            return self.mesh.basis_matrix(theta, deriv=1)
        return _second_derivative_matrix(self.mesh, theta)

    def on_grid(self, r, theta, which="value"):
        dr, dt = {"value": (0, 0), "dr": (1, 0), "dtheta": (0, 1), "dthetatheta": (0, 2), "drtheta": (1, 1)}[which]
        U = self.radial_coefficients(r, dr)
        return U @ self._angular(theta, dt)

    def partial(self, which):
        if which not in PARTIALS:
            raise ValueError(f"unknown partial {which!r}")

        def fn(r, theta):
            r, theta = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(theta, dtype=float))
            shape = r.shape
            rf, tf = r.ravel(), theta.ravel()
            ur, inv = np.unique(rf, return_inverse=True)
            ut, invt = np.unique(tf, return_inverse=True)
            grid = self.on_grid(ur, ut, which)
            return grid[inv, invt].reshape(shape)

        return fn


def _second_derivative_matrix(mesh, theta):
    # elementwise second derivative via the reference differentiation matrix
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    x = mesh.reference_nodes
    D = mesh.local_basis(x, deriv=1).T  # D[j, k] = l_j'(x_k)
    elem = mesh.locate(theta)
    a, b = mesh.breakpoints[elem], mesh.breakpoints[elem + 1]
    xi = 2.0 * (theta - a) / (b - a) - 1.0
    dl = mesh.local_basis(xi, deriv=1)  # (n_theta, p+1)
    # l_j'' = sum_k l_j'(x_k) l_k'
    local = dl @ D.T * (2.0 / (b - a))[:, None] ** 2
    out = np.zeros((mesh.n_nodes, len(theta)))
    rows = elem[:, None] * mesh.order + np.arange(mesh.order + 1)[None, :]
    out[rows, np.arange(len(theta))[:, None]] = local
    return out


class InterpolatedField(SemiDiscreteField):
    """Nodal angular interpolant ``(Pi u)(r, theta) = sum_i u(r, theta_i) e_i(theta)``."""

    def __init__(self, field: ScalarField, mesh: AngularMesh):
        super().__init__(mesh)
        self.source = field
        self.name = f"Pi({field.name})"

    def radial_coefficients(self, r, deriv=0):
        r = self._check_radii(r)
        if deriv == 0:
            return self.source.on_grid(r, self.mesh.nodes, "value")
        if deriv == 1:
            return self.source.on_grid(r, self.mesh.nodes, "dr")
        raise ValueError("interpolated fields expose radial derivatives up to first order")

    def has(self, which):
        needs = {"value": "value", "dtheta": "value", "dthetatheta": "value", "dr": "dr", "drtheta": "dr"}
        return self.source.has(needs[which])


def _domain(sol, r, theta):
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(r <= 0.0) or np.any(r > 1.0):
        raise ValueError("r must lie in (0, 1]")
    tol = 1e-14 * sol.mesh.theta_max
    if np.any(theta < -tol) or np.any(theta > sol.mesh.theta_max + tol):
        raise ValueError(f"theta must lie in [0, {sol.mesh.theta_max}]")
    return r, theta


def _point_eval(sol, r, theta, which):
    r, theta = _domain(sol, r, theta)
    out = sol.partial(which)(r, theta)
    return float(out) if np.ndim(out) == 0 else out


def evaluate(sol: SemiDiscreteField, r, theta):
    """``u_s(r, theta)`` for ``r`` in ``(0, 1]`` and ``theta`` in ``[0, Theta]``."""
    return _point_eval(sol, r, theta, "value")


def evaluate_dr(sol: SemiDiscreteField, r, theta):
    """Radial derivative; unbounded as ``r -> 0`` when an exponent is below one."""
    return _point_eval(sol, r, theta, "dr")


def evaluate_dtheta(sol: SemiDiscreteField, r, theta):
    return _point_eval(sol, r, theta, "dtheta")


def radial_trace(u: ScalarField, vartheta: float, theta_max: float | None = None):
    """Restriction of ``u`` to the ray ``theta = vartheta`` as a callable of ``r``."""
    if theta_max is None:
        mesh = getattr(u, "mesh", None)
        theta_max = mesh.theta_max if mesh is not None else None
    if theta_max is not None and not (0.0 <= vartheta <= theta_max):
        raise ValueError(f"angle {vartheta} outside [0, {theta_max}]")
    value = u.partial("value")

    def trace(r):
        r = np.asarray(r, dtype=float)
        return value(r, np.full_like(r, vartheta))

    return trace


def interpolate(u: ScalarField, mesh: AngularMesh) -> InterpolatedField:
    """Nodal angular interpolant of ``u`` on ``mesh``."""
    return InterpolatedField(u, mesh)


@dataclass(frozen=True)
class WeightedNormSpec:
    """Quadrature setup for ``L^2_w(Q)`` norms.

    ``weight`` is one of ``"r"``, ``"1/r"`` or ``"1"``. The radial interval
    is covered by ``levels`` graded cells ``[q^(k+1), q^k]`` with
    ``radial_points`` Gauss points each; ``angular_points`` Gauss points are
    used per angular element (default ``max(2p + 2, 10)``).
    """

    weight: str = "r"
    q: float = 0.5
    levels: int = 40
    radial_points: int = 12
    angular_points: int | None = None

    def __post_init__(self):
        if self.weight not in ("r", "1/r", "1"):
            raise ValueError(f"unknown weight {self.weight!r}")
        if not 0.0 < self.q < 1.0:
            raise ValueError("grading ratio must lie in (0, 1)")
        if self.q**self.levels > 1e-12:
            raise ValueError("graded cells must reach down to r <= 1e-12")

    def with_weight(self, weight):
        return WeightedNormSpec(weight, self.q, self.levels, self.radial_points, self.angular_points)


def radial_quadrature(spec: WeightedNormSpec):
    """Points and weights of the graded composite Gauss rule on ``(q^L, 1)``, ascending."""
    rule = gauss_rule(spec.radial_points)
    k = np.arange(spec.levels)[::-1]
    lo = spec.q ** (k + 1.0)
    hi = spec.q**k
    half = 0.5 * (hi - lo)
    pts = lo[:, None] + half[:, None] * (rule.points[None, :] + 1.0)
    wts = half[:, None] * rule.weights[None, :]
    return pts.ravel(), wts.ravel()


def angular_quadrature(theta_max, breakpoints=None, n_points=10):
    """Composite Gauss rule on ``(0, theta_max)`` aligned with ``breakpoints``."""
    b = np.array([0.0, theta_max]) if breakpoints is None else np.asarray(breakpoints, dtype=float)
    rule = gauss_rule(n_points)
    half = 0.5 * np.diff(b)
    pts = b[:-1, None] + half[:, None] * (rule.points[None, :] + 1.0)
    wts = half[:, None] * rule.weights[None, :]
    return pts.ravel(), wts.ravel()


def _weight_values(weight, r):
    if weight == "r":
        return r
    if weight == "1/r":
        return 1.0 / r
    return np.ones_like(r)


def _angular_setup(fields, spec, theta_max, breakpoints):
    mesh = None
    for f in fields:
        mesh = getattr(f, "mesh", None)
        if mesh is not None:
            break
    if theta_max is None:
        if mesh is None:
            raise ValueError("theta_max is required for fields without an angular mesh")
        theta_max = mesh.theta_max
    if breakpoints is None and mesh is not None:
        breakpoints = mesh.breakpoints
    n = spec.angular_points
    if n is None:
        n = default_quadrature_points(mesh.order) if mesh is not None else 16
    return angular_quadrature(theta_max, breakpoints, n)


def _integrate(grid, weight, r, wr, wt):
    if not np.all(np.isfinite(grid)):
        raise ValueError("integrand produced non-finite samples")
    radial = (grid * wt[None, :]).sum(axis=1)
    return float(np.sum(radial * _weight_values(weight, r) * wr))


def weighted_norm(f, spec: WeightedNormSpec = WeightedNormSpec(), theta_max=None, breakpoints=None, which="value"):
    """``sqrt( int int f^2 w dr dtheta )`` for a :class:`ScalarField` or a callable ``f(r, theta)``.

    ``which`` selects a partial derivative of a field. The angular rule is
    aligned with the field's mesh when it has one, else with ``breakpoints``.
    """
    if not isinstance(f, ScalarField):
        f = ScalarField(f)
    r, wr = radial_quadrature(spec)
    t, wt = _angular_setup([f], spec, theta_max, breakpoints)
    grid = f.on_grid(r, t, which)
    return float(np.sqrt(_integrate(grid**2, spec.weight, r, wr, wt)))


def h1tilde_norm(f: ScalarField, spec: WeightedNormSpec = WeightedNormSpec(), theta_max=None, breakpoints=None):
    """``(||f||_{L^2_r}, ||f||_{H~1})``."""
    r, wr = radial_quadrature(spec)
    t, wt = _angular_setup([f], spec, theta_max, breakpoints)
    l2 = _integrate(f.on_grid(r, t, "value") ** 2, "r", r, wr, wt)
    d_r = _integrate(f.on_grid(r, t, "dr") ** 2, "r", r, wr, wt)
    d_t = _integrate(f.on_grid(r, t, "dtheta") ** 2, "1/r", r, wr, wt)
    return float(np.sqrt(l2)), float(np.sqrt(l2 + d_r + d_t))


def h1tilde_error(approx: ScalarField, exact: ScalarField, spec: WeightedNormSpec = WeightedNormSpec(), theta_max=None, breakpoints=None):
    """``(||e||_{L^2_r}, ||e||_{H~1})`` for ``e = approx - exact``.

    By the polar isometry these equal the ``L^2`` and ``H^1`` errors on the
    sector itself.
    """
    for which in ("value", "dr", "dtheta"):
        if not exact.has(which):
            raise ValueError(f"exact field needs an analytic {which}")
    return h1tilde_norm(approx - exact, spec, theta_max, breakpoints)
