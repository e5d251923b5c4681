"""Built-in benchmark problems on the sector with closed-form solutions.

All three live on ``Theta = 3 pi / 2`` where the leading singular exponent is
``2/3``:

* ``test1``: harmonic ``r^(2/3) sin(2 theta / 3)``, zero side data.
* ``test2``: harmonic ``r^(2/3) ((1 - 4 theta / 3pi) cos(2 theta/3) - (4/3pi) log r sin(2 theta/3))``
  with side data ``r^(2/3)`` on both straight edges.
* ``test3-manufactured``: ``(r^(2/3) - r^(5/2)) sin(2 theta / 3)`` driven by the
  load ``(209/36) r^(1/2) sin(2 theta / 3)``, zero boundary data.

``custom`` is the harmonic ``r^nu sin(nu theta)`` with ``nu = k pi / Theta``
for any sector angle and mode number ``k``.
"""

from __future__ import annotations

import numpy as np

from .angular_basis import make_uniform_mesh
from .assembly import SeparableLoad
from .exceptions import ConfigError
from .semidiscrete import ScalarField
from .solver import SbfemProblem, SideData

__all__ = ["PROBLEM_IDS", "builtin_problem", "exact_solution", "default_theta_max", "corner_harmonic"]

PROBLEM_IDS = ("test1", "test2", "test3-manufactured", "custom")
_ALIASES = {"test3": "test3-manufactured"}
THREE_HALVES_PI = 1.5 * np.pi
NU = 2.0 / 3.0


def canonical_id(problem_id: str) -> str:
    pid = _ALIASES.get(problem_id, problem_id)
    if pid not in PROBLEM_IDS:
        raise ConfigError(f"unknown problem {problem_id!r}; choose from {', '.join(PROBLEM_IDS)}")
    return pid


def default_theta_max(problem_id: str) -> float:
    canonical_id(problem_id)
    return THREE_HALVES_PI


def corner_harmonic(nu: float, name="") -> ScalarField:
    """``r^nu sin(nu theta)`` with all partials used by the norms and stability checks."""
    return ScalarField(
        value=lambda r, t: r**nu * np.sin(nu * t),
        dr=lambda r, t: nu * r ** (nu - 1.0) * np.sin(nu * t),
        dtheta=lambda r, t: nu * r**nu * np.cos(nu * t),
        dthetatheta=lambda r, t: -(nu**2) * r**nu * np.sin(nu * t),
        drtheta=lambda r, t: nu**2 * r ** (nu - 1.0) * np.cos(nu * t),
        name=name or f"r^{nu:.6g} sin({nu:.6g} theta)",
    )


def _test2_field() -> ScalarField:
    k = 4.0 / (3.0 * np.pi)
    nu = NU

    def value(r, t):
        return r**nu * ((1.0 - k * t) * np.cos(nu * t) - k * np.log(r) * np.sin(nu * t))

    def dr(r, t):
        return r ** (nu - 1.0) * (
            nu * ((1.0 - k * t) * np.cos(nu * t) - k * np.log(r) * np.sin(nu * t)) - k * np.sin(nu * t)
        )

    def dtheta(r, t):
        return r**nu * (
            -k * np.cos(nu * t) - nu * (1.0 - k * t) * np.sin(nu * t) - k * nu * np.log(r) * np.cos(nu * t)
        )

    def dthetatheta(r, t):
        return r**nu * (
            2.0 * k * nu * np.sin(nu * t)
            - nu**2 * (1.0 - k * t) * np.cos(nu * t)
            + k * nu**2 * np.log(r) * np.sin(nu * t)
        )

    def drtheta(r, t):
        return r ** (nu - 1.0) * (
            nu * (-k * np.cos(nu * t) - nu * (1.0 - k * t) * np.sin(nu * t) - k * nu * np.log(r) * np.cos(nu * t))
            - k * nu * np.cos(nu * t)
        )

    return ScalarField(value, dr, dtheta, dthetatheta, drtheta, name="v_e")


def _test3_field() -> ScalarField:
    nu, a = NU, 2.5
    return ScalarField(
        value=lambda r, t: (r**nu - r**a) * np.sin(nu * t),
        dr=lambda r, t: (nu * r ** (nu - 1.0) - a * r ** (a - 1.0)) * np.sin(nu * t),
        dtheta=lambda r, t: nu * (r**nu - r**a) * np.cos(nu * t),
        dthetatheta=lambda r, t: -(nu**2) * (r**nu - r**a) * np.sin(nu * t),
        drtheta=lambda r, t: nu * (nu * r ** (nu - 1.0) - a * r ** (a - 1.0)) * np.cos(nu * t),
        name="u_manufactured",
    )


# (a^2 - nu^2) for a = 5/2, nu = 2/3
TEST3_LOAD_SCALE = 209.0 / 36.0
TEST3_LOAD_EXPONENT = 0.5


def exact_solution(problem_id: str, theta_max: float | None = None, mode: int = 1) -> ScalarField:
    pid = canonical_id(problem_id)
    if pid == "test1":
        return corner_harmonic(NU, name="u_e")
    if pid == "test2":
        return _test2_field()
    if pid == "test3-manufactured":
        return _test3_field()
    theta_max = THREE_HALVES_PI if theta_max is None else float(theta_max)
    return corner_harmonic(mode * np.pi / theta_max)


def builtin_problem(problem_id: str, n_elements: int = 4, order: int = 1, theta_max: float | None = None, mode: int = 1):
    """``(SbfemProblem, exact ScalarField)`` for a benchmark on a uniform mesh."""
    pid = canonical_id(problem_id)
    if pid != "custom":
        if theta_max is not None and not np.isclose(theta_max, THREE_HALVES_PI, rtol=0, atol=1e-15):
            raise ConfigError(f"{pid} is defined on theta_max = 3 pi / 2 only")
        theta_max = THREE_HALVES_PI
    elif theta_max is None:
        theta_max = THREE_HALVES_PI
    if int(mode) != mode or mode < 1:
        raise ConfigError("mode must be a positive integer")
    mesh = make_uniform_mesh(theta_max, n_elements, order)
    exact = exact_solution(pid, theta_max, mode)

    if pid == "test1":
        problem = SbfemProblem(mesh, outer_bc=lambda t: np.sin(NU * t))
    elif pid == "test2":
        problem = SbfemProblem(
            mesh,
            outer_bc=lambda t: exact(np.ones_like(t), t),
            side_bc=SideData(((NU, 1.0, 1.0),)),
        )
    elif pid == "test3-manufactured":
        load = SeparableLoad(((TEST3_LOAD_EXPONENT, lambda t: TEST3_LOAD_SCALE * np.sin(NU * t)),))
        problem = SbfemProblem(mesh, load=load)
    else:
        nu = mode * np.pi / theta_max
        problem = SbfemProblem(mesh, outer_bc=lambda t: np.sin(nu * t))
    return problem, exact
