"""Dense complex Hermitian matrices: PSD tests, the duplication map and partial transpose.

Matrices are plain ``numpy`` complex arrays. ``as_hermitian`` validates the
Hermitian property once at the boundary; every other function here is a pure
function of its inputs.
"""

from __future__ import annotations

import numpy as np

HERMITIAN_TOL = 1e-10
PSD_REL_TOL = 1e-8
MAX_SIZE = 64


def as_hermitian(M, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Return ``M`` as a complex Hermitian array, rejecting non-Hermitian input.

    Small asymmetries (below ``tol`` relative to the norm) are averaged out and
    the diagonal is made exactly real.
    """
    M = np.array(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if M.shape[0] > MAX_SIZE:
        raise ValueError(f"matrix size {M.shape[0]} exceeds {MAX_SIZE}")
    skew = np.linalg.norm(M - M.conj().T)
    if skew > tol * (1.0 + np.linalg.norm(M)):
        raise ValueError(f"matrix is not Hermitian (skew norm {skew:.3e})")
    H = 0.5 * (M + M.conj().T)
    H[np.diag_indices_from(H)] = H.diagonal().real
    return H


def inner(U: np.ndarray, V: np.ndarray) -> float:
    """Frobenius inner product trace(UV), real for Hermitian arguments."""
    return float(np.real(np.sum(U * V.T)))


def min_eigenvalue(M: np.ndarray) -> float:
    """Smallest eigenvalue of a Hermitian matrix.

    Falls back to the real symmetric embedding when the complex solver fails
    to converge; the embedding has the same spectrum with doubled multiplicities.
    """
    try:
        return float(np.linalg.eigvalsh(M)[0])
    except np.linalg.LinAlgError:
        return float(np.linalg.eigvalsh(embed_real(M))[0])


def psd_tolerance(M: np.ndarray) -> float:
    return PSD_REL_TOL * (1.0 + np.linalg.norm(M))


def is_psd(M: np.ndarray, eps: float | None = None) -> bool:
    if eps is None:
        eps = psd_tolerance(M)
    return min_eigenvalue(M) >= -eps


def embed_real(M: np.ndarray) -> np.ndarray:
    """Real symmetric embedding ``[[P, -Q], [Q, P]]`` of ``M = P + iQ``."""
    P, Q = M.real, M.imag
    return np.block([[P, -Q], [Q, P]])


def from_real(X: np.ndarray) -> np.ndarray:
    """Hermitian matrix whose embedding is the orthogonal projection of ``X``
    onto the image of ``embed_real``.

    PSD input gives PSD output, and ``from_real(embed_real(M)) == M``.
    """
    n = X.shape[0] // 2
    X11, X12 = X[:n, :n], X[:n, n:]
    X21, X22 = X[n:, :n], X[n:, n:]
    M = 0.5 * (X11 + X22) + 0.5j * (X21 - X12)
    return 0.5 * (M + M.conj().T)


def duplicate_center(A: np.ndarray) -> np.ndarray:
    """The matrix G_A of size 2d obtained from A (size d+1) by duplicating
    its central d-1 rows and columns.

    Blocks are ``[[A_ul, A_ur], [A_ll, A_lr]]`` with the d x d corners of A.
    """
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 2:
        raise ValueError(f"need a square matrix of size >= 2, got shape {A.shape}")
    d = A.shape[0] - 1
    return np.block([[A[:d, :d], A[:d, 1:]], [A[1:, :d], A[1:, 1:]]])


def partial_transpose(G: np.ndarray) -> np.ndarray:
    """Swap the off-diagonal d x d blocks of a 2d x 2d matrix.

    For Hermitian G this replaces each block by its conjugate transpose,
    so ``G_A`` maps to ``[[A_ul, A_ll], [A_ur, A_lr]]``.
    """
    G = np.asarray(G)
    n = G.shape[0]
    if G.ndim != 2 or n != G.shape[1] or n % 2:
        raise ValueError(f"need a square matrix of even size, got shape {G.shape}")
    d = n // 2
    return np.block([[G[:d, :d], G[d:, :d]], [G[:d, d:], G[d:, d:]]])


def gamma_map(A: np.ndarray) -> np.ndarray:
    """A -> G_A^Gamma."""
    return partial_transpose(duplicate_center(A))


def gamma_adjoint(C: np.ndarray) -> np.ndarray:
    """Adjoint of ``gamma_map`` for the trace inner product.

    Satisfies ``inner(gamma_map(A), C) == inner(A, gamma_adjoint(C))``.
    """
    C = np.asarray(C)
    d = C.shape[0] // 2
    C11, C12 = C[:d, :d], C[:d, d:]
    C21, C22 = C[d:, :d], C[d:, d:]
    out = np.zeros((d + 1, d + 1), dtype=complex)
    out[:d, :d] += C11
    out[1:, :d] += C12
    out[:d, 1:] += C21
    out[1:, 1:] += C22
    return out


def hermitian_basis(n: int) -> list[np.ndarray]:
    """Real basis of the n x n Hermitian matrices, n^2 elements.

    Order: diagonal entries, then for each pair a < b (row-major) the real
    part element ``E_ab + E_ba`` followed by the imaginary part element
    ``i(E_ab - E_ba)``. Coordinates of H in this basis are
    ``H_kk, Re H_ab, Im H_ab``.
    """
    basis = []
    for k in range(n):
        E = np.zeros((n, n), dtype=complex)
        E[k, k] = 1.0
        basis.append(E)
    for a in range(n):
        for b in range(a + 1, n):
            E = np.zeros((n, n), dtype=complex)
            E[a, b] = E[b, a] = 1.0
            basis.append(E)
            E = np.zeros((n, n), dtype=complex)
            E[a, b], E[b, a] = 1j, -1j
            basis.append(E)
    return basis


def hermitian_coords(H: np.ndarray) -> np.ndarray:
    """Coordinates of H in ``hermitian_basis``."""
    n = H.shape[0]
    out = [H[k, k].real for k in range(n)]
    for a in range(n):
        for b in range(a + 1, n):
            out.extend([H[a, b].real, H[a, b].imag])
    return np.array(out)


def from_hermitian_coords(v: np.ndarray, n: int) -> np.ndarray:
    return sum(c * E for c, E in zip(v, hermitian_basis(n)))


def entry_functional(a: int, b: int, part: str, n: int) -> np.ndarray:
    """Hermitian F with ``inner(F, M) == Re M[a, b]`` (part "re") or
    ``Im M[a, b]`` (part "im") for every Hermitian M.

    Indices are 0-based; a lower-triangle (a, b) refers to the conjugate of
    the stored upper entry, as Hermitian symmetry requires.
    """
    F = np.zeros((n, n), dtype=complex)
    if part == "re":
        F[a, b] += 0.5
        F[b, a] += 0.5
    elif part == "im":
        if a == b:
            return F
        F[a, b] += 0.5j
        F[b, a] += -0.5j
    else:
        raise ValueError(f"part must be 're' or 'im', got {part!r}")
    return F


def to_json(M: np.ndarray) -> dict:
    M = np.asarray(M, dtype=complex)
    return {"n": int(M.shape[0]), "re": M.real.tolist(), "im": M.imag.tolist()}


def from_json(obj: dict, check: bool = True) -> np.ndarray:
    """Inverse of ``to_json``; ``check=False`` keeps a non-Hermitian payload as is."""
    re = np.asarray(obj["re"], dtype=float)
    im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
    n = int(obj.get("n", re.shape[0]))
    if re.shape != (n, n) or im.shape != (n, n):
        raise ValueError(f"matrix payload does not match n={n}")
    return as_hermitian(re + 1j * im) if check else re + 1j * im
