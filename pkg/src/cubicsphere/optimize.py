"""Certified minimization and maximization of cubics over S^2.

The minimum of p is the largest t with p - t in the dual cone; the optimal
dual variable is a moment matrix whose atoms are minimizers. An independent
grid-plus-descent oracle provides an upper bound for cross-checking.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import cones, sdp
from . import hermitian as herm
from .atoms import AtomMeasure, extract_atoms
from .sphere_moment import CubicOnSphere, poly_to_h, to_sphere, unit_matrix

log = logging.getLogger(__name__)

MINIMIZER_TOL = 1e-6
ORACLE_GRID = 20000
ORACLE_POLISH = 20


@dataclass
class OptimizationResult:
    value: float
    minimizers: list
    certificate: cones.NonnegCertificate
    oracle_value: float | None = None
    gap_to_oracle: float | None = None
    atoms: AtomMeasure | None = None
    moment_matrix: np.ndarray | None = None
    warnings: list = field(default_factory=list)
    sense: str = "minimize"
    solution: sdp.SdpSolution | None = None
    # the matrix whose dual-cone membership the certificate proves:
    # H - value * H1 for a minimum, value * H1 - H for a maximum
    certified_matrix: np.ndarray | None = None

    @property
    def extraction_ok(self) -> bool:
        return self.atoms is not None

    def to_json(self) -> dict:
        cert = None
        if self.certificate is not None:
            cert = self.certificate.to_json(self.certified_matrix)
        return {
            "sense": self.sense,
            "value": self.value,
            "minimizers": [[float(v) for v in x] for x in self.minimizers],
            "certificate": cert,
            "oracle_value": self.oracle_value,
            "gap_to_oracle": self.gap_to_oracle,
            "warnings": list(self.warnings),
        }


def fibonacci_sphere(n: int) -> np.ndarray:
    """Deterministic, nearly uniform point set of size n on S^2."""
    k = np.arange(n) + 0.5
    z = 1.0 - 2.0 * k / n
    r = np.sqrt(1.0 - z * z)
    phi = math.pi * (3.0 - math.sqrt(5.0)) * k
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def polish(p: CubicOnSphere, X: np.ndarray, grad_tol: float = 1e-10,
           max_iter: int = 200) -> np.ndarray:
    """Local descent on the sphere from each row of X.

    Riemannian Newton steps where the projected Hessian is positive definite,
    projected gradient steps elsewhere; Armijo backtracking along the
    normalized path. A row stops when its Riemannian gradient is below
    ``grad_tol`` or no step decreases p.
    """
    X = X / np.linalg.norm(X, axis=1, keepdims=True)
    f = p(X)
    active = np.ones(len(X), dtype=bool)
    eye = np.eye(3)
    for _ in range(max_iter):
        idx = np.nonzero(active)[0]
        if not len(idx):
            break
        x = X[idx]
        g = p.gradient(x)
        lam = np.sum(g * x, axis=1)
        rg = g - lam[:, None] * x
        gn = np.linalg.norm(rg, axis=1)
        done = gn <= grad_tol
        active[idx[done]] = False
        idx, x, g, lam, rg, f_idx = idx[~done], x[~done], g[~done], lam[~done], rg[~done], f[idx[~done]]
        if not len(idx):
            break
        Pr = eye - x[:, :, None] * x[:, None, :]
        Hr = Pr @ (p.hessian(x) - lam[:, None, None] * eye) @ Pr
        K = Hr + x[:, :, None] * x[:, None, :]
        newton = np.linalg.eigvalsh(Hr + 1e3 * x[:, :, None] * x[:, None, :])[:, 0] > 1e-12
        d = -rg.copy()
        if newton.any():
            d[newton] = -np.linalg.solve(K[newton], rg[newton][..., None])[..., 0]
        slope = np.sum(rg * d, axis=1)
        t = np.ones(len(idx))
        ok = np.zeros(len(idx), dtype=bool)
        for _ in range(60):
            Y = x + t[:, None] * d
            Y /= np.linalg.norm(Y, axis=1, keepdims=True)
            fy = p(Y)
            ok = fy <= f_idx + 1e-4 * t * slope
            if ok.all():
                break
            t = np.where(ok, t, 0.5 * t)
        X[idx[ok]] = Y[ok]
        f[idx[ok]] = fy[ok]
        active[idx[~ok]] = False
    return X


def oracle_minimum(p: CubicOnSphere, n_grid: int = 20000, n_polish: int = 20):
    """Best value found by grid sampling plus local descent: an upper bound on min p.

    Returns ``(value, argmin)``.
    """
    if n_grid < 1000:
        raise ValueError("n_grid must be at least 1000")
    P = fibonacci_sphere(n_grid)
    vals = p(P)
    best = np.argsort(vals, kind="stable")[:n_polish]
    X = polish(p, P[best].copy())
    fx = p(X)
    k = int(np.argmin(fx))
    return float(fx[k]), X[k]


def _fallback_points(p: CubicOnSphere, A: np.ndarray, value: float) -> list:
    """Minimizers seeded from the eigenvectors of the moment matrix when the
    optimal face is too large for atom extraction."""
    _, V = np.linalg.eigh(A)
    seeds = []
    for v in V.T[::-1]:
        for z in (v[1] / v[0] if abs(v[0]) > 1e-12 else None,
                  v[-1] / v[-2] if abs(v[-2]) > 1e-12 else None):
            if z is not None:
                seeds.append(to_sphere(complex(z)))
    if not seeds:
        seeds = [np.array([1.0, 0.0, 0.0])]
    X = polish(p, np.array(seeds))
    points = []
    for x in X:
        if abs(p(x) - value) <= MINIMIZER_TOL and all(np.linalg.norm(x - q) > 1e-6 for q in points):
            points.append(x)
    return points


def minimize_on_sphere(p: CubicOnSphere, tol_gap: float = sdp.TOL_GAP,
                       tol_feas: float = sdp.TOL_FEAS, oracle: bool = True,
                       n_grid: int = ORACLE_GRID, n_polish: int = ORACLE_POLISH) -> OptimizationResult:
    """Certified global minimum of p over S^2.

    The certificate (B, C) proves ``p - value >= 0``. Minimizers are the atoms
    of the optimal moment matrix; if extraction fails, points are obtained by
    local descent seeded from its eigenvectors and a warning is recorded.
    """
    H = poly_to_h(p)
    sol, t, B, C, A = cones.solve_lower_bound(H, tol_gap, tol_feas)
    cert = cones.NonnegCertificate(B, C)
    warnings = []
    atoms = None
    try:
        atoms = extract_atoms(A / herm.inner(unit_matrix(3), A))
        minimizers = [x for x in atoms.sphere_points() if abs(p(x) - t) <= MINIMIZER_TOL]
        if len(minimizers) < len(atoms):
            warnings.append("some extracted atoms are not minimizers within tolerance")
    except ValueError as exc:
        warnings.append(f"{exc}; minimizers found by local descent")
        minimizers = _fallback_points(p, A, t)
    if not minimizers:
        warnings.append("no minimizer recovered")
    result = OptimizationResult(t, minimizers, cert, atoms=atoms, moment_matrix=A,
                                warnings=warnings, solution=sol,
                                certified_matrix=H - t * unit_matrix(3))
    if oracle:
        ov, _ = oracle_minimum(p, n_grid, n_polish)
        result.oracle_value = ov
        result.gap_to_oracle = ov - t
    return result


def maximize_on_sphere(p: CubicOnSphere, **kwargs) -> OptimizationResult:
    """Certified maximum of p; the certificate proves ``value - p >= 0``."""
    res = minimize_on_sphere(-p, **kwargs)
    res.value = -res.value
    if res.oracle_value is not None:
        res.oracle_value = -res.oracle_value
        res.gap_to_oracle = res.value - res.oracle_value
    res.sense = "maximize"
    return res


def scale_to_ball_boundary(p, tol_gap: float = sdp.TOL_GAP, tol_feas: float = sdp.TOL_FEAS) -> float:
    """Largest lam >= 0 with max |lam p| <= 1 on S^2, i.e. 1 / max |p|, from one SDP."""
    p = cones.as_homogeneous(p)
    if not np.any(p.coeffs):
        raise ValueError("the zero cubic has no finite boundary scaling")
    prob = cones.unit_ball_scaling_problem(p)
    sol = sdp.solve(prob, tol_gap, tol_feas)
    if sol.status != sdp.OPTIMAL:
        raise RuntimeError(f"SDP solver returned {sol.status}")
    return float(sol.u[0])
