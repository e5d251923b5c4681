"""Angular mass/stiffness matrices, load projections and Dirichlet reduction."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .angular_basis import AngularMesh, default_quadrature_points, gauss_rule

__all__ = [
    "OperatorPair",
    "SeparableLoad",
    "assemble_pair",
    "project_load",
    "reduce_dirichlet",
    "expand_solution",
]

Profile = Union[Callable[[np.ndarray], np.ndarray], np.ndarray, Sequence[float]]


@dataclass(frozen=True)
class OperatorPair:
    """Mass matrix ``A`` and stiffness matrix ``B`` with Dirichlet bookkeeping.

    A full pair holds the ``N x N`` matrices and lists which nodes are
    constrained. A reduced pair (``reduced=True``) holds the free-by-free
    blocks; its ``free_indices`` still refer to positions in the full node
    vector so that reduced vectors can be scattered back with
    :func:`expand_solution`.
    """

    mass: np.ndarray
    stiffness: np.ndarray
    constrained_indices: tuple
    free_indices: tuple
    n_full: int
    reduced: bool = False

    @property
    def size(self) -> int:
        return self.mass.shape[0]

    def blocks(self):
        """Return ``(A_ff, A_fc, B_ff, B_fc)`` of a full pair."""
        if self.reduced:
            raise ValueError("blocks() needs the unreduced pair")
        f = np.asarray(self.free_indices, dtype=int)
        c = np.asarray(self.constrained_indices, dtype=int)
        A, B = self.mass, self.stiffness
        return A[np.ix_(f, f)], A[np.ix_(f, c)], B[np.ix_(f, f)], B[np.ix_(f, c)]


@dataclass(frozen=True)
class SeparableLoad:
    """Load ``f(r, theta) = sum_k r**alpha_k * g_k(theta)``.

    ``terms`` is a sequence of ``(alpha, g)`` pairs where ``g`` is a callable
    of the angle or a vector of nodal coefficients.
    """

    terms: tuple = ()

    def __post_init__(self):
        terms = tuple((float(alpha), g) for alpha, g in self.terms)
        for alpha, _ in terms:
            if not alpha > -2.0:
                raise ValueError(f"load exponent must exceed -2, got {alpha}")
        object.__setattr__(self, "terms", terms)

    def __len__(self):
        return len(self.terms)

    def __call__(self, r, theta):
        r = np.asarray(r, dtype=float)
        theta = np.asarray(theta, dtype=float)
        out = np.zeros(np.broadcast(r, theta).shape)
        for alpha, g in self.terms:
            if not callable(g):
                raise TypeError("pointwise evaluation needs callable load profiles")
            out = out + r**alpha * g(theta)
        return out


def assemble_pair(mesh: AngularMesh, n_quad: int | None = None) -> OperatorPair:
    """Assemble ``A_ij = int e_i e_j`` and ``B_ij = int e_i' e_j'`` over ``(0, Theta)``.

    Element matrices are symmetrised before scattering so that both
    assembled matrices are exactly symmetric. The end nodes ``0`` and
    ``N - 1`` are marked as constrained.
    """
    p = mesh.order
    n_quad = n_quad or default_quadrature_points(p)
    if n_quad < p + 1:
        raise ValueError("quadrature too coarse to integrate basis products exactly")
    rule = gauss_rule(n_quad)
    phi = mesh.local_basis(rule.points, deriv=0)
    dphi = mesh.local_basis(rule.points, deriv=1)
    ref_mass = (phi * rule.weights[:, None]).T @ phi
    ref_stiff = (dphi * rule.weights[:, None]).T @ dphi
    ref_mass = 0.5 * (ref_mass + ref_mass.T)
    ref_stiff = 0.5 * (ref_stiff + ref_stiff.T)

    N = mesh.n_nodes
    A = np.zeros((N, N))
    B = np.zeros((N, N))
    widths = np.diff(mesh.breakpoints)
    for e in range(mesh.n_elements):
        dofs = mesh.element_dofs(e)
        idx = np.ix_(dofs, dofs)
        A[idx] += 0.5 * widths[e] * ref_mass
        B[idx] += (2.0 / widths[e]) * ref_stiff

    constrained = (0, N - 1)
    free = tuple(range(1, N - 1))
    return OperatorPair(mass=A, stiffness=B, constrained_indices=constrained, free_indices=free, n_full=N)


def project_load(mesh: AngularMesh, g: Profile, n_quad: int | None = None, mass=None) -> np.ndarray:
    """Vector with entries ``int_0^Theta g(theta) e_j(theta) dtheta``.

    A callable ``g`` is integrated element by element with Gauss quadrature.
    An array is read as nodal coefficients of ``sum_i g_i e_i``, whose
    projection is ``A @ g`` (pass ``mass`` to reuse an assembled ``A``).
    """
    if not callable(g):
        coeffs = np.asarray(g, dtype=float)
        if coeffs.shape != (mesh.n_nodes,):
            raise ValueError(f"nodal load vector must have length {mesh.n_nodes}")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("load coefficients must be finite")
        A = assemble_pair(mesh).mass if mass is None else mass
        return A @ coeffs

    n_quad = n_quad or default_quadrature_points(mesh.order)
    pts, wts = mesh.element_quadrature(n_quad)
    vals = np.asarray(g(pts), dtype=float)
    vals = np.broadcast_to(vals, pts.shape)
    if not np.all(np.isfinite(vals)):
        raise ValueError("load profile produced non-finite samples")
    phi = mesh.local_basis(gauss_rule(n_quad).points)
    local = (vals * wts) @ phi
    out = np.zeros(mesh.n_nodes)
    for e in range(mesh.n_elements):
        out[mesh.element_dofs(e)] += local[e]
    return out


def reduce_dirichlet(pair: OperatorPair, rhs=None):
    """Restrict the pair (and optionally a right-hand side) to the free nodes.

    Returns ``(reduced_pair, reduced_rhs)``; ``reduced_rhs`` is ``None`` when
    no ``rhs`` is given. Entries of ``rhs`` at constrained nodes are dropped.
    """
    if pair.reduced:
        raise ValueError("pair is already reduced")
    if len(pair.free_indices) == 0:
        raise ValueError("no free degrees of freedom left after reduction")
    f = np.asarray(pair.free_indices, dtype=int)
    if np.any(f < 0) or np.any(f >= pair.n_full):
        raise ValueError("free indices out of range")
    idx = np.ix_(f, f)
    red = OperatorPair(
        mass=pair.mass[idx].copy(),
        stiffness=pair.stiffness[idx].copy(),
        constrained_indices=pair.constrained_indices,
        free_indices=pair.free_indices,
        n_full=pair.n_full,
        reduced=True,
    )
    red_rhs = None
    if rhs is not None:
        rhs = np.asarray(rhs, dtype=float)
        if rhs.shape[0] != pair.n_full:
            raise ValueError(f"rhs has length {rhs.shape[0]}, expected {pair.n_full}")
        red_rhs = rhs[f].copy()
    return red, red_rhs


def expand_solution(pair: OperatorPair, reduced_vector, constrained_values=0.0) -> np.ndarray:
    """Scatter free-node entries into a full vector; constrained entries get ``constrained_values``."""
    v = np.asarray(reduced_vector, dtype=float)
    f = np.asarray(pair.free_indices, dtype=int)
    if v.shape[0] != len(f):
        raise ValueError(f"expected {len(f)} free entries, got {v.shape[0]}")
    out = np.zeros((pair.n_full,) + v.shape[1:])
    c = np.asarray(pair.constrained_indices, dtype=int)
    if len(c):
        out[c] = constrained_values
    if len(f):
        out[f] = v
    return out
