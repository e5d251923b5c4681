"""Semi-analytical solution of the angularly discretized Poisson problem on a sector.

The free-node coefficients satisfy the Euler-Cauchy system

    r^2 A u'' + r A u' - B u = -r^2 F(r),    u(1) = g,

(the sign is that of ``-Laplace u = f``). Homogeneous solutions are
``r^lambda_k phi_k`` for the nonnegative square roots ``lambda_k`` of the
pencil ``B phi = lambda^2 A phi``; a separable load ``r^alpha g(theta)``
contributes ``r^(alpha+2) phi_p`` with ``((alpha+2)^2 A - B) phi_p = -f``.

Nonzero side data ``u(r, 0) = a r^beta``, ``u(r, Theta) = b r^beta`` is lifted
mode by mode. The lifted forcing can be arbitrarily close to resonance
(``beta`` near some ``lambda_k``), so each modal response is stored as the
divided difference ``(r^beta - r^lambda) / (beta - lambda)`` which tends to
``r^beta log r`` and is evaluated without cancellation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .angular_basis import AngularMesh
from .assembly import (
    OperatorPair,
    SeparableLoad,
    assemble_pair,
    expand_solution,
    project_load,
    reduce_dirichlet,
)
from .exceptions import ConfigError, ResonanceError, SBFEMError
from .semidiscrete import SemiDiscreteField
from .spectral import ModalDecomposition, solve_gevp

__all__ = [
    "RadialTerm",
    "SideData",
    "SbfemProblem",
    "SemiDiscreteSolution",
    "radial_profile",
    "particular_solution",
    "solve",
    "residual_check",
]

DEFAULT_RESONANCE_TOL = 1e-8
KINDS = ("homogeneous", "particular", "lifting")


def _expm1_ratio(x):
    """``expm1(x) / x`` with the removable singularity at 0 filled in."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 1e-8
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 + 0.5 * x, np.expm1(safe) / safe)


def radial_profile(r, exponent, log_power=0, partner=None, deriv=0):
    """Radial factor of a term and its first two derivatives.

    ``log_power == 0`` gives ``r^beta``. ``log_power == 1`` gives the divided
    difference ``(r^beta - r^lam) / (beta - lam)`` with ``lam = partner``; when
    ``partner`` is ``None`` or equal to ``beta`` this is ``r^beta log r``.
    """
    r = np.asarray(r, dtype=float)
    beta = float(exponent)
    if log_power == 0:
        if deriv == 0:
            return r**beta
        if deriv == 1:
            return beta * r ** (beta - 1.0) if beta != 0.0 else np.zeros_like(r)
        if deriv == 2:
            c = beta * (beta - 1.0)
            return c * r ** (beta - 2.0) if c != 0.0 else np.zeros_like(r)
        raise ValueError("deriv must be 0, 1 or 2")
    if log_power != 1:
        raise ValueError("log_power must be 0 or 1")
    lam = beta if partner is None else float(partner)
    if deriv not in (0, 1, 2):
        raise ValueError("deriv must be 0, 1 or 2")
    logr = np.log(r)
    x = (beta - lam) * logr
    near = np.abs(x) < 1.0
    # expm1 form where r^beta and r^lam nearly cancel, plain quotient elsewhere
    ratio = _expm1_ratio(np.where(near, x, 0.0))
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        if deriv == 0:
            stable = r**lam * logr * ratio
            direct = (r**beta - r**lam) / (beta - lam) if beta != lam else stable
        elif deriv == 1:
            stable = r ** (lam - 1.0) * (beta * logr * ratio + 1.0)
            direct = (beta * r ** (beta - 1.0) - lam * r ** (lam - 1.0)) / (beta - lam) if beta != lam else stable
        else:
            stable = r ** (lam - 2.0) * (beta * (beta - 1.0) * logr * ratio + (beta + lam - 1.0))
            direct = (
                (beta * (beta - 1.0) * r ** (beta - 2.0) - lam * (lam - 1.0) * r ** (lam - 2.0)) / (beta - lam)
                if beta != lam
                else stable
            )
    return np.where(near, stable, direct)


@dataclass(frozen=True)
class RadialTerm:
    """One summand ``c * R(r) * sum_i mode_i e_i(theta)`` of a semi-discrete solution."""

    coefficient: float
    exponent: float
    log_power: int
    mode: np.ndarray
    kind: str = "homogeneous"
    partner_exponent: Optional[float] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown term kind {self.kind!r}")
        if self.log_power not in (0, 1):
            raise ValueError("log_power must be 0 or 1")
        if self.exponent < 0.0:
            raise ValueError("radial exponents must be nonnegative")
        if self.log_power == 1 and self.exponent <= 0.0:
            raise ValueError("logarithmic terms need a positive exponent")
        if self.partner_exponent is not None and self.partner_exponent < 0.0:
            raise ValueError("partner exponent must be nonnegative")

    def radial(self, r, deriv=0):
        """``c * R^(deriv)(r)``."""
        return self.coefficient * radial_profile(
            r, self.exponent, self.log_power, self.partner_exponent, deriv
        )


@dataclass(frozen=True)
class SideData:
    """Dirichlet data on the two straight edges: ``u(r, 0) = sum a_k r^beta_k``, ``u(r, Theta) = sum b_k r^beta_k``.

    ``terms`` holds ``(beta, a, b)`` triples. The default is homogeneous data.
    """

    terms: tuple = ()

    def __post_init__(self):
        terms = tuple((float(b), float(lo), float(hi)) for b, lo, hi in self.terms)
        for beta, _, _ in terms:
            if beta <= 0.0:
                raise ValueError("side data exponents must be positive")
        object.__setattr__(self, "terms", terms)

    def at_one(self):
        """Side values at ``r = 1`` as ``(left, right)``."""
        return (sum(t[1] for t in self.terms), sum(t[2] for t in self.terms))


@dataclass(frozen=True)
class SbfemProblem:
    """Poisson problem ``-Laplace u = f`` on the sector, discretized by ``mesh`` in angle.

    ``outer_bc`` is the profile ``g(theta) = u(1, theta)`` (``None`` for zero),
    imposed through its nodal interpolant.
    """

    mesh: AngularMesh
    load: SeparableLoad = field(default_factory=SeparableLoad)
    outer_bc: Optional[Callable] = None
    side_bc: SideData = field(default_factory=SideData)


class SemiDiscreteSolution(SemiDiscreteField):
    """Finite sum of :class:`RadialTerm` objects on an angular mesh."""

    def __init__(self, mesh, terms, modal=None, pair=None):
        super().__init__(mesh)
        self.terms = tuple(terms)
        self.modal = modal
        self.pair = pair
        N = mesh.n_nodes
        self._modes = np.array([t.mode for t in self.terms]).reshape(len(self.terms), N)

    def radial_matrix(self, r, deriv=0):
        """``(len(r), n_terms)`` array of ``c_t * R_t^(deriv)(r)``."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.empty((len(r), len(self.terms)))
        for k, t in enumerate(self.terms):
            out[:, k] = t.radial(r, deriv)
        return out

    def radial_coefficients(self, r, deriv=0):
        r = self._check_radii(r)
        return self.radial_matrix(r, deriv) @ self._modes

    def boundary_values(self):
        """Nodal values at ``r = 1``."""
        return self.radial_coefficients(np.array([1.0]))[0]

    @property
    def exponents(self):
        return np.array([t.exponent for t in self.terms])


def particular_solution(pair: OperatorPair, alpha: float, f, resonance_tol=DEFAULT_RESONANCE_TOL, modal=None):
    """Particular term ``r^(alpha+2) phi_p`` with ``((alpha+2)^2 A - B) phi_p = f``.

    ``pair`` is the reduced pair and ``f`` the reduced right-hand side, used
    as given. Raises :class:`ResonanceError` if ``(alpha+2)^2`` lies within
    ``resonance_tol`` (relative) of a pencil eigenvalue.
    """
    alpha = float(alpha)
    if not alpha > -2.0:
        raise ValueError(f"load exponent must exceed -2, got {alpha}")
    f = np.asarray(f, dtype=float)
    if f.shape != (pair.size,):
        raise ValueError(f"rhs must have length {pair.size}")
    beta = alpha + 2.0
    if modal is None:
        modal = solve_gevp(pair)
    mu = modal.lambdas**2
    gap = np.abs(beta**2 - mu)
    hit = np.nonzero(gap <= resonance_tol * np.maximum(mu, np.finfo(float).tiny))[0]
    if len(hit):
        k = int(hit[0])
        raise ResonanceError(
            f"(alpha+2)^2 = {beta**2:.12g} resonates with pencil eigenvalue {mu[k]:.12g}",
            exponent=beta,
            eigenvalue=float(mu[k]),
        )
    M = beta**2 * pair.mass - pair.stiffness
    phi = np.linalg.solve(M, f)
    mode = expand_solution(pair, phi) if pair.reduced else phi
    return RadialTerm(coefficient=1.0, exponent=beta, log_power=0, mode=mode, kind="particular")


def _lifting_terms(pair, modal, side):
    N = pair.n_full
    c_idx = np.asarray(pair.constrained_indices, dtype=int)
    if len(c_idx) != 2:
        raise ConfigError("side data needs exactly the two end nodes constrained")
    _, Afc, _, Bfc = pair.blocks()
    full_modes = modal.full_modes()
    terms = []
    for beta, left, right in side.terms:
        if left == 0.0 and right == 0.0:
            continue
        edge = np.zeros(N)
        edge[c_idx[0]] = left
        edge[c_idx[1]] = right
        terms.append(RadialTerm(1.0, beta, 0, edge, kind="lifting"))
        q = -(beta**2 * Afc - Bfc) @ np.array([left, right])
        s = modal.modes.T @ q
        for k, lam in enumerate(modal.lambdas):
            if s[k] == 0.0:
                continue
            terms.append(
                RadialTerm(
                    coefficient=float(s[k] / (beta + lam)),
                    exponent=beta,
                    log_power=1,
                    mode=full_modes[:, k],
                    kind="lifting",
                    partner_exponent=float(lam),
                )
            )
    return terms


def solve(problem: SbfemProblem, resonance_tol=DEFAULT_RESONANCE_TOL) -> SemiDiscreteSolution:
    """Assemble, decompose and fit the boundary data; returns the semi-discrete solution."""
    mesh = problem.mesh
    pair = assemble_pair(mesh)
    red, _ = reduce_dirichlet(pair)
    modal = solve_gevp(red)
    if np.any(modal.lambdas <= 0.0):
        raise SBFEMError("zero modal exponent with Dirichlet side edges")
    free = np.asarray(red.free_indices, dtype=int)
    c_idx = np.asarray(pair.constrained_indices, dtype=int)
    full_modes = modal.full_modes()

    terms = []
    for alpha, g in problem.load.terms:
        F = project_load(mesh, g, mass=pair.mass)
        terms.append(particular_solution(red, alpha, -F[free], resonance_tol=resonance_tol, modal=modal))
    terms.extend(_lifting_terms(pair, modal, problem.side_bc))

    if problem.outer_bc is None:
        g_nodes = np.zeros(mesh.n_nodes)
    else:
        g_nodes = np.asarray(problem.outer_bc(mesh.nodes), dtype=float) * np.ones(mesh.n_nodes)
        if not np.all(np.isfinite(g_nodes)):
            raise ConfigError("outer boundary data is not finite")
    edge = np.array(problem.side_bc.at_one())
    scale = max(1.0, float(np.max(np.abs(g_nodes))))
    if np.max(np.abs(g_nodes[c_idx] - edge)) > 1e-8 * scale:
        raise ConfigError(
            f"outer data at the corners {g_nodes[c_idx]} does not match the side data {edge}"
        )

    at_one = np.zeros(mesh.n_nodes)
    for t in terms:
        at_one += t.radial(1.0) * t.mode
    rhs = g_nodes[free] - at_one[free]
    coeffs = np.linalg.solve(modal.modes, rhs)
    for k, lam in enumerate(modal.lambdas):
        terms.append(RadialTerm(float(coeffs[k]), float(lam), 0, full_modes[:, k], kind="homogeneous"))
    return SemiDiscreteSolution(mesh, terms, modal=modal, pair=pair)


def residual_check(sol: SemiDiscreteSolution, pair: OperatorPair, load: SeparableLoad, r_samples) -> float:
    """Max-norm of ``r A u'' + A u' - B u / r + r F(r)`` over free rows and sample radii."""
    r = np.atleast_1d(np.asarray(r_samples, dtype=float))
    if np.any(r <= 0.0) or np.any(r >= 1.0):
        raise ValueError("residual samples must lie in (0, 1)")
    free = np.asarray(pair.free_indices, dtype=int)
    U0 = sol.radial_coefficients(r, 0)
    U1 = sol.radial_coefficients(r, 1)
    U2 = sol.radial_coefficients(r, 2)
    A, B = pair.mass, pair.stiffness
    res = r[:, None] * (U2 @ A) + U1 @ A - (U0 @ B) / r[:, None]
    for alpha, g in load.terms:
        F = project_load(sol.mesh, g, mass=A)
        res += r[:, None] ** (alpha + 1.0) * F[None, :]
    return float(np.max(np.abs(res[:, free]))) if len(free) else 0.0
