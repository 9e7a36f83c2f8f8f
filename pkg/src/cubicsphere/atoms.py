"""Recover a finite atomic measure sum_k w_k Z(z_k) from its moment matrix.

Each moment vector v(z) = (s^d, s^(d-1) t, ..., t^d) (homogeneous coordinates,
z = t/s) satisfies a shift relation: rows 1..d equal z times rows 0..d-1.
The atoms are the generalized eigenvalues of the pencil formed by those two
row blocks of a range basis; homogeneous eigenvalues handle z = infinity.

Up to d atoms are read from A itself. With d + 1 atoms A has full rank and
carries no kernel information, so the same pencil is applied to the range of
G_A^Gamma = sum_k w_k (a_k x u_k)(a_k x u_k)^* with a = (1, conj z) and
u = (1, z, ..., z^(d-1)), whose shift rows again differ by a factor z.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.optimize import nnls

from . import hermitian as herm
from .sphere_moment import INFINITY, INFINITY_RADIUS, is_infinity, moment_matrix, to_sphere

RANK_TOL = 1e-7
WEIGHT_CLIP = 1e-9
RESIDUAL_TOL = 1e-6


@dataclass
class AtomMeasure:
    weights: np.ndarray
    points: list  # complex, INFINITY for the pole
    residual: float = 0.0

    def __len__(self) -> int:
        return len(self.points)

    def matrices(self, d: int = 3) -> list[np.ndarray]:
        return [moment_matrix(z, d) for z in self.points]

    def matrix(self, d: int = 3) -> np.ndarray:
        return sum(w * Z for w, Z in zip(self.weights, self.matrices(d)))

    def sphere_points(self) -> list[np.ndarray]:
        return [to_sphere(z) for z in self.points]


def _range_basis(M: np.ndarray, rank_tol: float):
    lam, V = np.linalg.eigh(M)
    lam, V = lam[::-1], V[:, ::-1]
    if lam[0] <= 0:
        return 0, V[:, :0]
    r = int(np.sum(lam > rank_tol * lam[0]))
    return r, V[:, :r] * np.sqrt(lam[:r])


def _pencil_points(U: np.ndarray, base: list, shift: list, r: int) -> list:
    """Generalized eigenvalues z with U[shift] c = z U[base] c on an r-dim range."""
    Ub, Us = U[base], U[shift]
    Q, _, _ = np.linalg.svd(np.hstack([Ub, Us]), full_matrices=False)
    Q = Q[:, :r]
    M0, M1 = Q.conj().T @ Ub, Q.conj().T @ Us
    alpha, beta = sla.eig(M1, M0, homogeneous_eigvals=True)[0]
    points = []
    for a, b in zip(alpha, beta):
        if abs(b) * INFINITY_RADIUS <= abs(a):
            points.append(INFINITY)
        else:
            points.append(complex(a / b))
    return points


def _gamma_rows(d: int):
    # G^Gamma rows are indexed (b, a) -> b * d + a for conj(z)^b z^a, a < d, b < 2
    base = [b * d + a for b in (0, 1) for a in range(d - 1)]
    shift = [b * d + a + 1 for b in (0, 1) for a in range(d - 1)]
    return base, shift


def _fit_weights(A: np.ndarray, points: list, d: int):
    Zs = [moment_matrix(z, d) for z in points]
    design = np.array([np.concatenate([Z.real.ravel(), Z.imag.ravel()]) for Z in Zs]).T
    target = np.concatenate([A.real.ravel(), A.imag.ravel()])
    w, _ = nnls(design, target)
    w[w < WEIGHT_CLIP] = 0.0
    recon = sum(wk * Z for wk, Z in zip(w, Zs))
    return w, float(np.linalg.norm(A - recon))


def extract_atoms(A: np.ndarray, rank_tol: float = RANK_TOL,
                  residual_tol: float = RESIDUAL_TOL) -> AtomMeasure:
    """Decompose A (an element of C_d) into weighted moment matrices.

    Raises ``ValueError`` ("extraction failed") if the numerical rank exceeds
    what the pencils can identify or the reconstruction residual exceeds
    ``residual_tol * |A|_F``.
    """
    A = herm.as_hermitian(A, tol=1e-8)
    d = A.shape[0] - 1
    normA = np.linalg.norm(A)
    if normA == 0:
        return AtomMeasure(np.zeros(0), [], 0.0)
    r, U = _range_basis(A, rank_tol)
    if r <= d:
        points = _pencil_points(U, list(range(d)), list(range(1, d + 1)), r)
    elif r == d + 1 and d >= 3:
        G = herm.gamma_map(A)
        rg, UG = _range_basis(G, rank_tol)
        if rg > d + 1:
            raise ValueError(f"extraction failed: G_A^Gamma has rank {rg} > {d + 1}")
        base, shift = _gamma_rows(d)
        points = _pencil_points(UG, base, shift, rg)
    else:
        raise ValueError(f"extraction failed: rank {r} exceeds the identifiable atom count")
    points = _merge(points)
    w, res = _fit_weights(A, points, d)
    if res > residual_tol * normA:
        raise ValueError(f"extraction failed: reconstruction residual {res:.3e}")
    keep = w > 0
    return AtomMeasure(w[keep], [z for z, k in zip(points, keep) if k], res)


def _merge(points: list, tol: float = 1e-9) -> list:
    out = []
    for z in points:
        dup = any(
            (is_infinity(z) and is_infinity(q))
            or (not is_infinity(z) and not is_infinity(q) and abs(z - q) <= tol * (1 + abs(z)))
            for q in out
        )
        if not dup:
            out.append(z)
    return out
