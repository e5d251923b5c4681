"""Angular partition of ``(0, Theta)`` with nodal Lagrange bases and Gauss rules.

Node indices are zero-based: node ``0`` sits at ``theta = 0`` and node
``N - 1`` at ``theta = Theta``. Element ``e`` owns the global nodes
``e*p, ..., e*p + p``; neighbouring elements share their end node.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre

__all__ = [
    "QuadratureRule",
    "AngularMesh",
    "gauss_rule",
    "lobatto_points",
    "make_uniform_mesh",
    "make_mesh",
    "eval_basis",
    "eval_basis_deriv",
    "default_quadrature_points",
]

MAX_GAUSS_POINTS = 64


@dataclass(frozen=True)
class QuadratureRule:
    """Quadrature rule on the reference interval ``[-1, 1]``."""

    points: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return len(self.points)

    def mapped(self, a, b):
        """Points and weights transported to ``[a, b]``."""
        half = 0.5 * (b - a)
        return a + half * (self.points + 1.0), half * self.weights


@lru_cache(maxsize=None)
def _gauss_cached(n):
    x, w = legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_rule(n_points: int) -> QuadratureRule:
    """Gauss-Legendre rule with ``n_points`` abscissae on ``[-1, 1]``.

    Exact for polynomials of degree ``2*n_points - 1``.
    """
    if not isinstance(n_points, (int, np.integer)) or not 1 <= n_points <= MAX_GAUSS_POINTS:
        raise ValueError(f"n_points must be an integer in [1, {MAX_GAUSS_POINTS}], got {n_points!r}")
    x, w = _gauss_cached(int(n_points))
    return QuadratureRule(points=x, weights=w)


@lru_cache(maxsize=None)
def lobatto_points(n_points: int) -> np.ndarray:
    """Gauss-Lobatto points on ``[-1, 1]``: the endpoints plus the roots of P'_{n-1}."""
    if n_points < 2:
        raise ValueError("a Lobatto set needs at least two points")
    if n_points == 2:
        pts = np.array([-1.0, 1.0])
    else:
        # roots of P'_{n-1} are the eigenvalues of a symmetric Jacobi matrix
        # (Gauss-Jacobi with alpha = beta = 1), which is more robust than polyroots
        m = n_points - 2
        k = np.arange(1, m)
        off = np.sqrt(k * (k + 2) / ((2 * k + 1) * (2 * k + 3)))
        interior = np.linalg.eigvalsh(np.diag(off, 1) + np.diag(off, -1)) if m > 1 else np.zeros(1)
        interior = np.sort(interior)
        # enforce exact symmetry about 0
        interior = 0.5 * (interior - interior[::-1])
        pts = np.concatenate(([-1.0], interior, [1.0]))
    pts.setflags(write=False)
    return pts


def default_quadrature_points(order: int) -> int:
    """Per-element Gauss count used for assembly and norms: ``max(2p + 2, 10)``."""
    return max(2 * order + 2, 10)


def _barycentric_weights(x):
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    return 1.0 / diff.prod(axis=1)


@dataclass(frozen=True)
class AngularMesh:
    """Partition of ``(0, theta_max)`` carrying a continuous nodal basis of degree ``order``.

    Parameters
    ----------
    theta_max : float
        Sector angle, strictly between 0 and 2*pi.
    breakpoints : ndarray
        Element boundaries ``0 = b_0 < ... < b_M = theta_max``.
    order : int
        Polynomial degree ``p`` of the nodal Lagrange basis on each element.
    """

    theta_max: float
    breakpoints: np.ndarray
    order: int
    nodes: np.ndarray = field(init=False, repr=False)
    reference_nodes: np.ndarray = field(init=False, repr=False)
    reference_weights: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        theta_max = float(self.theta_max)
        if not (0.0 < theta_max < 2.0 * np.pi):
            raise ValueError(f"theta_max must lie in (0, 2*pi), got {theta_max}")
        order = int(self.order)
        if order < 1:
            raise ValueError(f"order must be >= 1, got {self.order}")
        b = np.array(self.breakpoints, dtype=float)
        if b.ndim != 1 or len(b) < 2:
            raise ValueError("need at least two breakpoints")
        if b[0] != 0.0 or b[-1] != theta_max:
            raise ValueError("breakpoints must start at 0 and end at theta_max")
        if np.any(np.diff(b) <= 0.0):
            raise ValueError("breakpoints must be strictly increasing")
        b.setflags(write=False)

        ref = lobatto_points(order + 1)
        left, right = b[:-1], b[1:]
        local = left[:, None] + 0.5 * (right - left)[:, None] * (ref[None, :] + 1.0)
        local[:, 0] = left
        local[:, -1] = right
        nodes = np.concatenate([local[:, :-1].ravel(), [theta_max]])
        nodes.setflags(write=False)

        object.__setattr__(self, "theta_max", theta_max)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "reference_nodes", ref)
        object.__setattr__(self, "reference_weights", _barycentric_weights(ref))

    @property
    def n_elements(self) -> int:
        return len(self.breakpoints) - 1

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def h(self) -> float:
        return float(np.max(np.diff(self.breakpoints)))

    @property
    def h_min(self) -> float:
        return float(np.min(np.diff(self.breakpoints)))

    def element_dofs(self, e: int) -> np.ndarray:
        """Global node indices of element ``e`` in local order."""
        p = self.order
        return np.arange(e * p, e * p + p + 1)

    def locate(self, theta, side="right") -> np.ndarray:
        """Element index containing each angle.

        At an interior breakpoint, ``side="right"`` picks the element to the
        right and ``side="left"`` the one to the left. The end angles always map
        into the first/last element.
        """
        theta = np.asarray(theta, dtype=float)
        e = np.searchsorted(self.breakpoints, theta, side=side) - 1
        return np.clip(e, 0, self.n_elements - 1)

    def _check_angles(self, theta):
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if not np.all(np.isfinite(theta)):
            raise ValueError("angles must be finite")
        tol = 1e-14 * self.theta_max
        if np.any(theta < -tol) or np.any(theta > self.theta_max + tol):
            raise ValueError(f"angles must lie in [0, {self.theta_max}]")
        return np.clip(theta, 0.0, self.theta_max)

    def local_basis(self, xi, deriv=0):
        """Reference Lagrange functions (or their derivatives) at ``xi``.

        Returns an array of shape ``(len(xi), p + 1)``. The first barycentric
        form is used for values; derivatives are evaluated as the sum over
        pairs of the leave-two-out products, which is exact at the nodes.
        """
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        x = self.reference_nodes
        w = self.reference_weights
        n = len(x)
        diff = xi[:, None] - x[None, :]
        if deriv == 0:
            out = np.empty((len(xi), n))
            for j in range(n):
                out[:, j] = w[j] * np.prod(np.delete(diff, j, axis=1), axis=1)
            return out
        if deriv == 1:
            out = np.zeros((len(xi), n))
            for j in range(n):
                for m in range(n):
                    if m == j:
                        continue
                    keep = [k for k in range(n) if k != j and k != m]
                    out[:, j] += np.prod(diff[:, keep], axis=1)
                out[:, j] *= w[j]
            return out
        raise ValueError("deriv must be 0 or 1")

    def basis_matrix(self, theta, deriv=0, side="right") -> np.ndarray:
        """Dense ``(N, len(theta))`` matrix of basis values ``e_i(theta_k)`` or ``e_i'(theta_k)``."""
        theta = self._check_angles(theta)
        elem = self.locate(theta, side=side)
        a = self.breakpoints[elem]
        b = self.breakpoints[elem + 1]
        xi = 2.0 * (theta - a) / (b - a) - 1.0
        local = self.local_basis(xi, deriv=deriv)
        if deriv == 1:
            local = local * (2.0 / (b - a))[:, None]
        out = np.zeros((self.n_nodes, len(theta)))
        rows = elem[:, None] * self.order + np.arange(self.order + 1)[None, :]
        cols = np.broadcast_to(np.arange(len(theta))[:, None], rows.shape)
        out[rows, cols] = local
        return out

    def element_quadrature(self, n_points=None):
        """Per-element Gauss points and weights, shape ``(M, n_points)`` each."""
        if n_points is None:
            n_points = default_quadrature_points(self.order)
        rule = gauss_rule(n_points)
        left, right = self.breakpoints[:-1], self.breakpoints[1:]
        half = 0.5 * (right - left)
        pts = left[:, None] + half[:, None] * (rule.points[None, :] + 1.0)
        wts = half[:, None] * rule.weights[None, :]
        return pts, wts


def make_mesh(breakpoints, order: int) -> AngularMesh:
    """Mesh on arbitrary breakpoints; ``theta_max`` is the last breakpoint."""
    b = np.asarray(breakpoints, dtype=float)
    return AngularMesh(theta_max=float(b[-1]), breakpoints=b, order=order)


def make_uniform_mesh(theta_max: float, n_elements: int, order: int) -> AngularMesh:
    """Uniform partition of ``(0, theta_max)`` into ``n_elements`` elements of degree ``order``."""
    if int(n_elements) != n_elements or n_elements < 1:
        raise ValueError(f"n_elements must be a positive integer, got {n_elements!r}")
    if int(order) != order or order < 1:
        raise ValueError(f"order must be a positive integer, got {order!r}")
    theta_max = float(theta_max)
    if not (0.0 < theta_max < 2.0 * np.pi):
        raise ValueError(f"theta_max must lie in (0, 2*pi), got {theta_max}")
    b = theta_max * np.arange(n_elements + 1) / n_elements
    b[-1] = theta_max
    return AngularMesh(theta_max=theta_max, breakpoints=b, order=int(order))


def _check_index(mesh, i):
    if not 0 <= i < mesh.n_nodes:
        raise IndexError(f"node index {i} out of range for {mesh.n_nodes} nodes")


def eval_basis(mesh: AngularMesh, i: int, theta):
    """Value of the ``i``-th nodal basis function at ``theta`` (scalar or array)."""
    _check_index(mesh, i)
    scalar = np.ndim(theta) == 0
    vals = mesh.basis_matrix(theta)[i]
    return float(vals[0]) if scalar else vals


def eval_basis_deriv(mesh: AngularMesh, i: int, theta, side="right"):
    """Derivative of the ``i``-th basis function at ``theta``.

    At a breakpoint the one-sided derivative from the element selected by
    ``side`` is returned.
    """
    _check_index(mesh, i)
    scalar = np.ndim(theta) == 0
    vals = mesh.basis_matrix(theta, deriv=1, side=side)[i]
    return float(vals[0]) if scalar else vals
