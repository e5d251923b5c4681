"""Generalized symmetric eigenproblem ``B phi = lambda^2 A phi`` and its Hamiltonian cross-check.

The production path reduces the pencil with a Cholesky factor of ``A`` and
solves the resulting standard symmetric problem with Householder
tridiagonalization followed by the implicit QL iteration. The
``2n x 2n`` first-order matrix ``E = [[0, A^-1], [B, 0]]`` is only built for
validation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .assembly import OperatorPair, expand_solution
from .exceptions import SpectralError

__all__ = [
    "ModalDecomposition",
    "HamiltonianMatrix",
    "tridiagonalize",
    "tridiagonal_ql",
    "symmetric_eigh",
    "sqrt_pencil_eigs",
    "solve_gevp",
    "build_hamiltonian",
]

NEGATIVE_CLAMP = 1e-10
MAX_QL_ITERATIONS = 60


@dataclass(frozen=True)
class ModalDecomposition:
    """Eigenpairs of the reduced pencil, ``A``-orthonormal and sorted ascending.

    Attributes
    ----------
    lambdas : ndarray, shape (n,)
        Nonnegative square roots of the pencil eigenvalues.
    modes : ndarray, shape (n, n)
        Column ``k`` is the free-DOF mode belonging to ``lambdas[k]``.
    """

    lambdas: np.ndarray
    modes: np.ndarray
    free_indices: tuple
    n_full: int

    def __len__(self):
        return len(self.lambdas)

    @property
    def pencil_eigenvalues(self):
        return self.lambdas**2

    def full_modes(self) -> np.ndarray:
        """Modes scattered to full node vectors (zeros at constrained nodes), shape ``(N, n)``."""
        carrier = OperatorPair(
            mass=np.empty((0, 0)),
            stiffness=np.empty((0, 0)),
            constrained_indices=tuple(i for i in range(self.n_full) if i not in set(self.free_indices)),
            free_indices=self.free_indices,
            n_full=self.n_full,
            reduced=True,
        )
        return expand_solution(carrier, self.modes)


@dataclass(frozen=True)
class HamiltonianMatrix:
    """First-order system matrix ``E = [[0, A^-1], [B, 0]]`` of the reduced pair."""

    matrix: np.ndarray

    @property
    def n(self) -> int:
        return self.matrix.shape[0] // 2

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.matrix)


def tridiagonalize(S):
    """Householder reduction of a symmetric matrix ``S = Q T Q^T``.

    Returns ``(d, e, Q)`` with ``d`` the diagonal of ``T``, ``e`` its
    subdiagonal (length ``n - 1``) and ``Q`` orthogonal.
    """
    T = np.array(S, dtype=float)
    n = T.shape[0]
    Q = np.eye(n)
    for k in range(n - 2):
        x = T[k + 1 :, k]
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        v = x.copy()
        v[0] += math.copysign(alpha, x[0])
        v /= np.linalg.norm(v)
        # two-sided update of the trailing block, then the accumulated Q
        sub = T[k + 1 :, k:]
        sub -= 2.0 * np.outer(v, v @ sub)
        sub = T[k:, k + 1 :]
        sub -= 2.0 * np.outer(sub @ v, v)
        Qb = Q[:, k + 1 :]
        Qb -= 2.0 * np.outer(Qb @ v, v)
    d = np.diag(T).copy()
    e = 0.5 * (np.diag(T, -1) + np.diag(T, 1))
    return d, e, Q


def tridiagonal_ql(d, e, Z=None):
    """Implicit QL iteration with Wilkinson-type shifts on a symmetric tridiagonal matrix.

    ``d`` is the diagonal, ``e`` the subdiagonal. If ``Z`` is given, the
    rotations are accumulated into it so that on return its columns are the
    eigenvectors of ``Z T Z^T``. Returns ``(eigenvalues, Z)`` unsorted.
    """
    d = [float(x) for x in d]
    n = len(d)
    e = [float(x) for x in e] + [0.0]
    if Z is not None:
        # rows of ZT are columns of Z; contiguous rows make the rotations cheap
        ZT = np.array(Z, dtype=float).T.copy()
    for l in range(n):
        it = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(e[m]) <= 1e-300 or abs(e[m]) + dd == dd:
                    break
                m += 1
            if m == l:
                break
            it += 1
            if it > MAX_QL_ITERATIONS:
                raise SpectralError("QL iteration did not converge")
            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                if Z is not None:
                    zi1 = ZT[i + 1].copy()
                    ZT[i + 1] *= c
                    ZT[i + 1] += s * ZT[i]
                    ZT[i] *= c
                    ZT[i] -= s * zi1
                i -= 1
            if underflow and i >= l:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0
    return np.array(d), (ZT.T.copy() if Z is not None else None)


def symmetric_eigh(S):
    """Eigen-decomposition of a symmetric matrix, ascending eigenvalues."""
    S = np.asarray(S, dtype=float)
    n = S.shape[0]
    if n == 0:
        return np.zeros(0), np.zeros((0, 0))
    if n == 1:
        return np.array([S[0, 0]]), np.ones((1, 1))
    d, e, Q = tridiagonalize(S)
    w, V = tridiagonal_ql(d, e, Q)
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


def _normalize_signs(modes):
    # largest-magnitude entry (first one on ties) made positive
    idx = np.argmax(np.abs(modes), axis=0)
    signs = np.sign(modes[idx, np.arange(modes.shape[1])])
    signs[signs == 0] = 1.0
    return modes * signs


def sqrt_pencil_eigs(A, B, refine=True):
    """Solve ``B phi = mu A phi`` for SPD ``A`` and return ``(sqrt(mu), Phi)``.

    ``A = L L^T``; the standard problem for ``L^-1 B L^-T`` is solved in-repo
    and eigenvectors are mapped back with ``L^-T``, which makes them
    ``A``-orthonormal. With ``refine`` each pair is polished by one
    inverse-iteration step on ``B - mu A``. Eigenvalues in
    ``(-1e-10 * scale, 0)`` are clamped to zero; anything more negative
    raises :class:`SpectralError`.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n) or B.shape != (n, n):
        raise ValueError("A and B must be square matrices of equal size")
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError as exc:
        raise SpectralError("mass block is not symmetric positive definite") from exc
    X = sla.solve_triangular(L, B, lower=True)
    C = sla.solve_triangular(L, X.T, lower=True)
    C = 0.5 * (C + C.T)
    mu, Y = symmetric_eigh(C)
    scale = max(1.0, float(np.max(np.abs(mu)))) if n else 1.0
    if n and mu[0] < -NEGATIVE_CLAMP * scale:
        raise SpectralError(f"pencil has a negative eigenvalue {mu[0]:.3e}")
    mu = np.where(mu < 0.0, 0.0, mu)
    Phi = sla.solve_triangular(L.T, Y, lower=False)
    if refine and n > 1:
        mu, Phi = _refine_pairs(A, B, mu, Phi)
    return np.sqrt(mu), _normalize_signs(Phi)


def _bandwidth(M):
    rows, cols = np.nonzero(M)
    return int(np.max(np.abs(rows - cols))) if len(rows) else 0


def _refine_pairs(A, B, mu, Phi):
    """One shifted inverse-iteration step per mode on the original pencil.

    Forming ``L^-1 B L^-T`` limits the small eigenpairs to an absolute
    accuracy of ``eps * ||C||``; solving with ``B - mu A`` directly restores
    relative accuracy for them. Modes are then re-orthonormalized in the
    ``A`` inner product in ascending order.
    """
    n = A.shape[0]
    bw = max(_bandwidth(A), _bandwidth(B))
    banded = 3 * bw + 1 < n
    Phi = Phi.copy()
    mu = mu.copy()
    for k in range(n):
        shifted = B - mu[k] * A
        rhs = A @ Phi[:, k]
        try:
            if banded:
                ab = np.zeros((2 * bw + 1, n))
                for off in range(-bw, bw + 1):
                    diag = np.diagonal(shifted, off)
                    if off >= 0:
                        ab[bw - off, off:] = diag
                    else:
                        ab[bw - off, :off] = diag
                x = sla.solve_banded((bw, bw), ab, rhs, check_finite=False)
            else:
                x = np.linalg.solve(shifted, rhs)
        except (np.linalg.LinAlgError, ValueError):
            continue
        if not np.all(np.isfinite(x)) or not np.any(x):
            continue
        Phi[:, k] = x / np.sqrt(x @ A @ x)
    for k in range(n):
        v = Phi[:, k]
        if k:
            coef = Phi[:, :k].T @ (A @ v)
            v = v - Phi[:, :k] @ coef
        v = v / np.sqrt(v @ A @ v)
        Phi[:, k] = v
    mu = np.einsum("ij,ij->j", Phi, B @ Phi)
    mu = np.where(mu < 0.0, 0.0, mu)
    order = np.argsort(mu, kind="stable")
    return mu[order], Phi[:, order]


def solve_gevp(pair: OperatorPair) -> ModalDecomposition:
    """Full modal decomposition of a reduced (or unconstrained) pair."""
    lambdas, modes = sqrt_pencil_eigs(pair.mass, pair.stiffness)
    if pair.reduced:
        free = tuple(pair.free_indices)
    else:
        free = tuple(range(pair.n_full))
    return ModalDecomposition(lambdas=lambdas, modes=modes, free_indices=free, n_full=pair.n_full)


def build_hamiltonian(pair: OperatorPair) -> HamiltonianMatrix:
    """Explicit ``E = [[0, A^-1], [B, 0]]`` for validation of the modal solver."""
    A = np.asarray(pair.mass, dtype=float)
    B = np.asarray(pair.stiffness, dtype=float)
    n = A.shape[0]
    try:
        Ainv = np.linalg.solve(A, np.eye(n))
    except np.linalg.LinAlgError as exc:
        raise SpectralError("mass block is singular") from exc
    if not np.all(np.isfinite(Ainv)):
        raise SpectralError("mass block is singular")
    E = np.zeros((2 * n, 2 * n))
    E[:n, n:] = Ainv
    E[n:, :n] = B
    return HamiltonianMatrix(matrix=E)
