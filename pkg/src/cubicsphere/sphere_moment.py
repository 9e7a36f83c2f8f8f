"""Stereographic coordinates on S^2, moment matrices Z, and the linear bijection
between 4x4 Hermitian matrices and cubics on the sphere.

Riemann-sphere points are Python complex numbers; the point at infinity is
``INFINITY`` (test with ``is_infinity``). Sphere points are length-3 float
arrays.

Coefficient vectors of cubics use the fixed ordering ``MONOMIALS``: degree 2
before degree 3, and within a degree lexicographic in the exponent triple
(j, k, l) of ``x1^j x2^k x3^l``.
"""

from __future__ import annotations

import cmath
import functools
import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

from . import hermitian as herm

INFINITY = complex(math.inf, 0.0)
INFINITY_RADIUS = 1e8
POLE_TOL = 1e-12

MONOMIALS: tuple[tuple[int, int, int], ...] = tuple(
    m
    for deg in (2, 3)
    for m in sorted(itertools.product(range(deg + 1), repeat=3))
    if sum(m) == deg
)
QUADRATIC = MONOMIALS[:6]
CUBIC = MONOMIALS[6:]
_INDEX = {m: i for i, m in enumerate(MONOMIALS)}


def is_infinity(z: complex) -> bool:
    return cmath.isinf(z) or cmath.isnan(z)


def sphere_point(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (3,):
        raise ValueError(f"sphere point needs 3 coordinates, got shape {x.shape}")
    r = np.linalg.norm(x)
    if r == 0:
        raise ValueError("cannot normalize the zero vector onto the sphere")
    return x / r


def to_riemann(x) -> complex:
    x1, x2, x3 = sphere_point(x)
    if x1 <= -1.0 + POLE_TOL:
        return INFINITY
    return complex(x3, -x2) / (1.0 + x1)


def to_sphere(z: complex) -> np.ndarray:
    if is_infinity(z):
        return np.array([-1.0, 0.0, 0.0])
    r2 = abs(z) ** 2
    x1 = (1.0 - r2) / (1.0 + r2)
    s = 1.0 + x1
    return np.array([x1, -s * z.imag, s * z.real])


def moment_matrix(z: complex, d: int = 3) -> np.ndarray:
    """Rank-one moment matrix ``v v^* / (1+|z|^2)^d`` with ``v = (1, z, ..., z^d)``."""
    if d < 1:
        raise ValueError("degree must be >= 1")
    Z = np.zeros((d + 1, d + 1), dtype=complex)
    if is_infinity(z) or abs(z) > INFINITY_RADIUS:
        Z[d, d] = 1.0
        return Z
    if abs(z) <= 1.0:
        v = z ** np.arange(d + 1) / (1.0 + abs(z) ** 2) ** (d / 2)
    else:
        # second chart: powers of 1/z keep the entries bounded
        w = 1.0 / z
        v = w ** np.arange(d, -1, -1) / (1.0 + abs(w) ** 2) ** (d / 2)
        v = v * (z / abs(z)) ** d
    return np.outer(v, v.conj())


def moment_matrix_from_x(x, d: int = 3) -> np.ndarray:
    """Moment matrix as an explicit polynomial in the sphere coordinates.

    Entry (k, l) is ``(x3 - i x2)^(k-m) (x3 + i x2)^(l-m) (1-x1)^m (1+x1)^(d-M) / 2^d``
    with ``m = min(k, l)`` and ``M = max(k, l)``; valid on the whole sphere,
    including the pole x1 = -1.
    """
    x1, x2, x3 = sphere_point(x)
    zeta = complex(x3, -x2)
    zbar = complex(x3, x2)
    Z = np.empty((d + 1, d + 1), dtype=complex)
    for k in range(d + 1):
        for l in range(d + 1):
            m, M = min(k, l), max(k, l)
            Z[k, l] = zeta ** (k - m) * zbar ** (l - m) * (1 - x1) ** m * (1 + x1) ** (d - M)
    return Z / 2**d


def unit_matrix(d: int = 3) -> np.ndarray:
    """The Hermitian matrix representing the constant 1 on the sphere,
    ``diag(binom(d, k))``; ``inner(unit_matrix(d), Z) == 1`` for every moment matrix."""
    return np.diag([float(math.comb(d, k)) for k in range(d + 1)]).astype(complex)


def _key(m: tuple[int, int, int]) -> str:
    return "".join(str(e) for e in m)


@dataclass(frozen=True, eq=False)
class CubicOnSphere:
    """Element of P_2,h + P_3,h, i.e. an inhomogeneous cubic modulo ``|x|^2 - 1``."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.shape != (len(MONOMIALS),):
            raise ValueError(f"expected {len(MONOMIALS)} coefficients, got shape {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_dict(cls, coeffs: dict) -> "CubicOnSphere":
        c = np.zeros(len(MONOMIALS))
        for key, value in coeffs.items():
            m = parse_key(key)
            c[_INDEX[m]] = value
        return cls(c)

    @classmethod
    def constant(cls, kappa: float = 1.0) -> "CubicOnSphere":
        return cls.from_dict({"200": kappa, "020": kappa, "002": kappa})

    @classmethod
    def homogeneous(cls, cubic_coeffs) -> "CubicOnSphere":
        """Build from the 10 cubic coefficients in ``CUBIC`` order."""
        c = np.zeros(len(MONOMIALS))
        c[6:] = cubic_coeffs
        return cls(c)

    def __eq__(self, other) -> bool:
        return isinstance(other, CubicOnSphere) and np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self) -> int:
        return hash(self.coeffs.tobytes())

    def __getitem__(self, key) -> float:
        m = parse_key(key) if isinstance(key, str) else tuple(key)
        return float(self.coeffs[_INDEX[m]])

    def __add__(self, other: "CubicOnSphere") -> "CubicOnSphere":
        return CubicOnSphere(self.coeffs + other.coeffs)

    def __sub__(self, other: "CubicOnSphere") -> "CubicOnSphere":
        return CubicOnSphere(self.coeffs - other.coeffs)

    def __neg__(self) -> "CubicOnSphere":
        return CubicOnSphere(-self.coeffs)

    def __mul__(self, s: float) -> "CubicOnSphere":
        return CubicOnSphere(s * self.coeffs)

    __rmul__ = __mul__

    @property
    def quadratic_part(self) -> np.ndarray:
        return self.coeffs[:6]

    @property
    def cubic_part(self) -> np.ndarray:
        return self.coeffs[6:]

    def is_homogeneous(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.quadratic_part) <= tol))

    @functools.cached_property
    def tensors(self) -> tuple[np.ndarray, np.ndarray]:
        """Symmetric (Q, T) with p(x) = Q[x, x] + T[x, x, x]."""
        Q, T = np.zeros((3, 3)), np.zeros((3, 3, 3))
        for c, m in zip(self.coeffs, MONOMIALS):
            idx = [axis for axis in range(3) for _ in range(m[axis])]
            perms = set(itertools.permutations(idx))
            target = Q if len(idx) == 2 else T
            for perm in perms:
                target[perm] += c / len(perms)
        Q.setflags(write=False)
        T.setflags(write=False)
        return Q, T

    def __call__(self, x) -> np.ndarray | float:
        """Evaluate at one point (shape (3,)) or many points (shape (N, 3))."""
        x = np.asarray(x, dtype=float)
        Q, T = self.tensors
        Tx = np.einsum("...i,ijk->...jk", x, T)
        vals = np.einsum("...j,...jk,...k->...", x, Tx + Q, x)
        return float(vals) if x.ndim == 1 else vals

    def gradient(self, x) -> np.ndarray:
        """Euclidean gradient in R^3, same leading shape as ``x``."""
        x = np.asarray(x, dtype=float)
        Q, T = self.tensors
        Tx = np.einsum("...i,ijk->...jk", x, T)
        return np.einsum("...jk,...k->...j", 3.0 * Tx + 2.0 * Q, x)

    def hessian(self, x) -> np.ndarray:
        """Euclidean Hessian, shape ``x.shape + (3,)``."""
        x = np.asarray(x, dtype=float)
        Q, T = self.tensors
        return 6.0 * np.einsum("...i,ijk->...jk", x, T) + 2.0 * Q

    def to_dict(self) -> dict[str, float]:
        return {_key(m): float(c) for m, c in zip(MONOMIALS, self.coeffs) if c != 0.0}

    def to_json(self) -> dict:
        return {"coeffs": self.to_dict()}


def parse_key(key: str) -> tuple[int, int, int]:
    if not (isinstance(key, str) and len(key) == 3 and key.isdigit()):
        raise ValueError(f"coefficient key {key!r} must be three exponent digits like '300'")
    m = tuple(int(ch) for ch in key)
    if sum(m) not in (2, 3):
        hint = ""
        if sum(m) in (0, 1):
            hint = " (multiply lower-degree terms by |x|^2, e.g. x1 -> keys 300/120/102)"
        raise ValueError(f"monomial {key!r} has degree {sum(m)}; only degrees 2 and 3 are allowed{hint}")
    return m


def cubic_from_json(doc) -> CubicOnSphere:
    """Parse ``{"coeffs": {"jkl": value, ...}}`` (a dict or a JSON string).

    Duplicate keys, non-numeric values and exponents outside degrees 2..3 are rejected.
    """
    if isinstance(doc, (str, bytes)):
        doc = json.loads(doc, object_pairs_hook=_reject_duplicates)
    if not isinstance(doc, dict) or "coeffs" not in doc:
        raise ValueError('expected an object with a "coeffs" member')
    coeffs = doc["coeffs"]
    if not isinstance(coeffs, dict):
        raise ValueError('"coeffs" must be an object mapping exponent keys to numbers')
    for key, value in coeffs.items():
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ValueError(f"coefficient {key!r} is not a finite number: {value!r}")
    return CubicOnSphere.from_dict(coeffs)


def _reject_duplicates(pairs):
    out = {}
    for k, v in pairs:
        if k in out:
            raise ValueError(f"duplicate key {k!r}")
        out[k] = v
    return out


# ---------------------------------------------------------------------------
# The bijection H <-> p_H, generated symbolically.


@functools.lru_cache(maxsize=None)
def _symbolic_columns(d: int = 3) -> tuple[tuple[tuple, ...], ...]:
    import sympy as sp

    x1, x2, x3 = sp.symbols("x1 x2 x3", real=True)
    zeta = x3 - sp.I * x2
    zbar = x3 + sp.I * x2
    Zsym = sp.zeros(d + 1, d + 1)
    for k in range(d + 1):
        for l in range(d + 1):
            m, M = min(k, l), max(k, l)
            Zsym[k, l] = zeta ** (k - m) * zbar ** (l - m) * (1 - x1) ** m * (1 + x1) ** (d - M) / 2**d
    r2 = x1**2 + x2**2 + x3**2
    cols = []
    for E in herm.hermitian_basis(d + 1):
        expr = 0
        for a, b in zip(*np.nonzero(E)):
            e = E[a, b]
            expr += (sp.Rational(int(e.real)) + sp.I * sp.Rational(int(e.imag))) * Zsym[b, a]
        poly = sp.Poly(sp.expand(expr), x1, x2, x3)
        # lift each homogeneous component to degree d-1 or d by powers of |x|^2
        lifted = 0
        for (j, k, l), c in poly.terms():
            deg = j + k + l
            target = d if (d - deg) % 2 == 0 else d - 1
            lifted += c * x1**j * x2**k * x3**l * r2 ** ((target - deg) // 2)
        lifted = sp.Poly(sp.expand(lifted), x1, x2, x3)
        col = []
        for m in MONOMIALS:
            c = lifted.coeff_monomial(x1 ** m[0] * x2 ** m[1] * x3 ** m[2])
            if sp.im(c) != 0:
                raise AssertionError("p_E must be real for Hermitian E")
            col.append(sp.Rational(sp.re(c)))
        cols.append(tuple(col))
    return tuple(cols)


@functools.lru_cache(maxsize=None)
def generate_bijection_matrix(d: int = 3, exact: bool = False):
    """16x16 real matrix mapping Hermitian coordinates (``hermitian_basis`` order)
    to cubic coefficients (``MONOMIALS`` order).

    Built by exact rational expansion of the moment-matrix entries and reduction
    modulo ``|x|^2 - 1``. ``exact=True`` returns the rational entries as a tuple
    of rows.
    """
    if d != 3:
        raise ValueError("the explicit bijection is only generated for d = 3")
    cols = _symbolic_columns(d)
    if exact:
        return tuple(tuple(col[i] for col in cols) for i in range(len(MONOMIALS)))
    M = np.array([[float(c) for c in col] for col in cols]).T
    M.setflags(write=False)
    return M


@functools.lru_cache(maxsize=None)
def _inverse_bijection() -> np.ndarray:
    M = generate_bijection_matrix(3)
    Minv = np.linalg.inv(M)
    if np.linalg.norm(M @ Minv - np.eye(len(M))) > 1e-10:
        raise AssertionError("bijection matrix inversion failed")
    Minv.setflags(write=False)
    return Minv


def h_to_poly(H: np.ndarray) -> CubicOnSphere:
    H = herm.as_hermitian(H)
    if H.shape != (4, 4):
        raise ValueError("h_to_poly needs a 4x4 Hermitian matrix")
    return CubicOnSphere(generate_bijection_matrix(3) @ herm.hermitian_coords(H))


def poly_to_h(p: CubicOnSphere) -> np.ndarray:
    v = _inverse_bijection() @ p.coeffs
    return herm.from_hermitian_coords(v, 4)


def pairing(H: np.ndarray, x) -> float:
    """p_H(x) = <H, Z(x)>."""
    return herm.inner(H, moment_matrix_from_x(x, H.shape[0] - 1))
