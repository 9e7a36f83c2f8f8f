"""Small dense primal-dual interior-point solver for block SDPs.

Standard form::

    minimize    sum_j <C_j, X_j> + c_free . u
    subject to  sum_j <A_ij, X_j> + F_i . u = b_i     (i = 1..m)
                X_j symmetric PSD, u free

with dual ``maximize b.y  s.t.  S_j = C_j - sum_i y_i A_ij  PSD,  F^T y = c_free``.

The iteration is an infeasible-start path-following method with the
Nesterov-Todd search direction and a Mehrotra predictor-corrector. Free
variables are eliminated before iterating. Infeasibility is decided by a
phase-one problem that is always strictly feasible; its dual optimum is a
Farkas ray.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

log = logging.getLogger(__name__)

TOL_GAP = 1e-9
TOL_FEAS = 1e-9
MAX_ITER = 200
STEP_FRACTION = 0.99
DEPENDENCY_TOL = 1e-12
MAX_DIMENSION = 10_000

OPTIMAL = "optimal"
INFEASIBLE = "infeasible-certificate"
FAILURE = "numerical-failure"


@dataclass(frozen=True)
class Constraint:
    """``sum_j <blocks[j], X_j> + sum_k free[k] * u_k = rhs``."""

    blocks: dict
    rhs: float
    free: dict = field(default_factory=dict)


@dataclass
class SdpProblem:
    block_sizes: list
    constraints: list
    objective: dict = field(default_factory=dict)  # block index -> symmetric cost matrix
    n_free: int = 0
    objective_free: dict = field(default_factory=dict)
    sense: str = "minimize"

    def __post_init__(self):
        if self.sense not in ("minimize", "maximize"):
            raise ValueError(f"sense must be 'minimize' or 'maximize', got {self.sense!r}")
        dim = sum(n * (n + 1) // 2 for n in self.block_sizes) + self.n_free
        if dim > MAX_DIMENSION:
            raise ValueError(f"problem dimension {dim} exceeds the small-scale limit {MAX_DIMENSION}")
        for con in self.constraints:
            for j, Fj in con.blocks.items():
                _check_symmetric(Fj, self.block_sizes[j])
        for j, Cj in self.objective.items():
            _check_symmetric(Cj, self.block_sizes[j])

    @property
    def m(self) -> int:
        return len(self.constraints)

    def arrays(self):
        """Dense data ``(A_blocks, b, C_blocks, F, c_free)`` in minimization form."""
        m = self.m
        A = [np.zeros((m, n, n)) for n in self.block_sizes]
        F = np.zeros((m, self.n_free))
        b = np.zeros(m)
        for i, con in enumerate(self.constraints):
            for j, Fj in con.blocks.items():
                A[j][i] = Fj
            for k, v in con.free.items():
                F[i, k] = v
            b[i] = con.rhs
        sign = 1.0 if self.sense == "minimize" else -1.0
        C = [np.zeros((n, n)) for n in self.block_sizes]
        for j, Cj in self.objective.items():
            C[j] = sign * np.asarray(Cj, dtype=float)
        cf = np.zeros(self.n_free)
        for k, v in self.objective_free.items():
            cf[k] = sign * v
        return A, b, C, F, cf

    def objective_value(self, X, u=None) -> float:
        val = sum(float(np.sum(np.asarray(Cj) * X[j])) for j, Cj in self.objective.items())
        if u is not None:
            val += sum(v * u[k] for k, v in self.objective_free.items())
        return val


def _check_symmetric(M, n):
    M = np.asarray(M, dtype=float)
    if M.shape != (n, n):
        raise ValueError(f"block matrix has shape {M.shape}, expected {(n, n)}")
    if np.abs(M - M.T).max(initial=0.0) > 1e-12 * (1 + np.abs(M).max(initial=0.0)):
        raise ValueError("constraint and objective matrices must be symmetric")


@dataclass
class SdpSolution:
    status: str
    X: list
    u: np.ndarray
    y: np.ndarray
    S: list
    primal_objective: float
    dual_objective: float
    gap: float
    primal_infeasibility: float
    dual_infeasibility: float
    iterations: int
    ray: np.ndarray | None = None
    history: list = field(default_factory=list)

    @property
    def value(self) -> float:
        return self.primal_objective

    def dump_history(self, path) -> None:
        """Write the iterate log as JSON lines."""
        with open(path, "w") as fh:
            for rec in self.history:
                fh.write(json.dumps(rec) + "\n")


# ---------------------------------------------------------------------------


def _aop(A, X):
    return sum(np.einsum("ikl,kl->i", Aj, Xj) for Aj, Xj in zip(A, X))


def _aadj(A, y):
    return [np.einsum("i,ikl->kl", y, Aj) for Aj in A]


def _sym(M):
    return 0.5 * (M + M.T)


def _max_step(X, dX) -> float:
    """Largest alpha with X + alpha dX PSD (inf if unbounded)."""
    alpha = np.inf
    for Xj, dXj in zip(X, dX):
        L = np.linalg.cholesky(Xj)
        W = sla.solve_triangular(L, dXj, lower=True)
        W = sla.solve_triangular(L, W.T, lower=True)
        lam = np.linalg.eigvalsh(_sym(W))[0]
        if lam < 0:
            alpha = min(alpha, -1.0 / lam)
    return alpha


def _eliminate_dependent_rows(A, b, F, tol_feas):
    """Drop linearly dependent constraints; return kept indices or a Farkas ray."""
    m = len(b)
    if m == 0:
        return np.arange(0), None
    rows = np.hstack([Aj.reshape(m, -1) for Aj in A] + [F])
    scale = np.linalg.norm(rows, axis=1).max(initial=0.0)
    if scale == 0:
        keep = np.arange(0)
    else:
        _, R, piv = sla.qr(rows.T, mode="economic", pivoting=True)
        diag = np.abs(np.diag(R))
        rank = int(np.sum(diag > DEPENDENCY_TOL * scale))
        keep = np.sort(piv[:rank])
    dropped = np.setdiff1d(np.arange(m), keep)
    for i in dropped:
        if len(keep):
            w, *_ = np.linalg.lstsq(rows[keep].T, rows[i], rcond=None)
            mismatch = b[i] - w @ b[keep]
        else:
            w, mismatch = np.zeros(0), b[i]
        if abs(mismatch) > tol_feas * (1 + np.abs(b).max()):
            y = np.zeros(m)
            y[i] = 1.0
            y[keep] = -w
            return keep, -y / mismatch
    return keep, None


def _residuals(A, b, C, F, cf, X, u, y, S):
    normb = np.linalg.norm(b)
    normC = np.sqrt(sum(np.linalg.norm(Cj) ** 2 for Cj in C) + cf @ cf)
    rp = b - _aop(A, X) - F @ u
    Rd = [Cj - Ay - Sj for Cj, Ay, Sj in zip(C, _aadj(A, y), S)]
    rf = cf - F.T @ y
    pobj = sum(float(np.sum(Cj * Xj)) for Cj, Xj in zip(C, X)) + cf @ u
    dobj = float(b @ y)
    xs = sum(float(np.sum(Xj * Sj)) for Xj, Sj in zip(X, S))
    gap = max(abs(pobj - dobj), xs)
    pinf = np.linalg.norm(rp) / (1 + normb)
    dinf = np.sqrt(sum(np.linalg.norm(R) ** 2 for R in Rd) + rf @ rf) / (1 + normC)
    return dict(pobj=pobj, dobj=dobj, gap=gap, pinf=pinf, dinf=dinf)


def _ipm(A, b, C, F, cf, tol_gap, tol_feas, max_iter):
    """Interior-point solve with the free variables eliminated exactly.

    With F = Q1 R and N an orthonormal basis of null(F^T), every dual
    solution is y = y0 + N z where F^T y0 = cf, and u is recovered from
    F u = b - A(X) by least squares. The reduced problem is a plain block SDP,
    which keeps the Newton systems well conditioned near the optimum.
    """
    m, nf = F.shape
    if nf == 0:
        return _ipm_core(A, b, C, tol_gap, tol_feas, max_iter)
    Q, R = np.linalg.qr(F, mode="complete")
    R1 = R[:nf]
    if np.min(np.abs(np.diag(R1)), initial=np.inf) <= DEPENDENCY_TOL * (1 + np.abs(R1).max()):
        raise ValueError("free-variable columns are linearly dependent")
    Q1, N = Q[:, :nf], Q[:, nf:]
    y0 = Q1 @ sla.solve_triangular(R1, cf, trans="T")
    Ar = [np.einsum("ir,ikl->rkl", N, Aj) for Aj in A]
    Cr = [Cj - Ay for Cj, Ay in zip(C, _aadj(A, y0))]
    res = _ipm_core(Ar, N.T @ b, Cr, tol_gap, tol_feas, max_iter)
    X, S = res["X"], res["S"]
    u = sla.solve_triangular(R1, Q1.T @ (b - _aop(A, X)))
    y = y0 + N @ res["y"]
    res.update(u=u, y=y, **_residuals(A, b, C, F, cf, X, u, y, S))
    return res


def _nt_scaling(X, S):
    """G with G G^T = W, W S W = X, and G^T S G = G^-1 X G^-T = diag(d)."""
    L = np.linalg.cholesky(X)
    R = np.linalg.cholesky(S)
    U, d, Vt = np.linalg.svd(R.T @ L)
    G = (L @ Vt.T) / np.sqrt(d)
    return G, d


def _ipm_core(A, b, C, tol_gap, tol_feas, max_iter):
    """Mehrotra predictor-corrector with the Nesterov-Todd direction, no free variables.

    All directions are formed in the scaled space where X and S are the same
    diagonal matrix, so the Schur complement is the Gram matrix of the scaled
    constraints and no inverse of an ill-conditioned iterate is ever formed.
    """
    m = len(b)
    sizes = [Cj.shape[0] for Cj in C]
    ntot = sum(sizes)
    normb = np.linalg.norm(b)
    normC = np.sqrt(sum(np.linalg.norm(Cj) ** 2 for Cj in C))

    X, S = [], []
    for Aj, Cj, n in zip(A, C, sizes):
        normAi = np.linalg.norm(Aj.reshape(m, -1), axis=1) if m else np.zeros(1)
        xi = max(10.0, np.sqrt(n), n * np.max((1 + np.abs(b)) / (1 + normAi), initial=1.0))
        eta = max(10.0, np.sqrt(n), normAi.max(initial=0.0), np.linalg.norm(Cj))
        X.append(xi * np.eye(n))
        S.append(eta * np.eye(n))
    y = np.zeros(m)

    # Gram matrix of the constraint rows, used to keep A(dX) = rp exact
    gram = None
    if m:
        rows = np.hstack([Aj.reshape(m, -1) for Aj in A])
        gram = sla.cho_factor(rows @ rows.T + 1e-14 * np.eye(m))

    history = []
    status = FAILURE
    stalls = 0
    it = 0
    info = {}
    while True:
        rp = b - _aop(A, X)
        Rd = [Cj - Ay - Sj for Cj, Ay, Sj in zip(C, _aadj(A, y), S)]
        pobj = sum(float(np.sum(Cj * Xj)) for Cj, Xj in zip(C, X))
        dobj = float(b @ y)
        xs = sum(float(np.sum(Xj * Sj)) for Xj, Sj in zip(X, S))
        mu = xs / ntot
        gap = max(abs(pobj - dobj), xs)
        pinf = np.linalg.norm(rp) / (1 + normb)
        dinf = np.sqrt(sum(np.linalg.norm(R) ** 2 for R in Rd)) / (1 + normC)
        info = dict(pobj=pobj, dobj=dobj, gap=gap, pinf=pinf, dinf=dinf)
        history.append(dict(iter=it, mu=mu, **info))
        if gap <= tol_gap and pinf <= tol_feas and dinf <= tol_feas:
            status = OPTIMAL
            break
        if it >= max_iter or stalls >= 5:
            break
        it += 1

        try:
            scal = [_nt_scaling(Xj, Sj) for Xj, Sj in zip(X, S)]
        except np.linalg.LinAlgError:
            break
        # scaled constraints G^T A_i G, and scaled dual residuals
        At = [np.einsum("ka,ikl,lb->iab", G, Aj, G) for (G, _), Aj in zip(scal, A)]
        Rdt = [G.T @ Rdj @ G for (G, _), Rdj in zip(scal, Rd)]
        if m:
            rows_t = np.hstack([Aj.reshape(m, -1) for Aj in At])
            M = rows_t @ rows_t.T
            try:
                schur = sla.cho_factor(M)
                solve_m = lambda h: sla.cho_solve(schur, h)  # noqa: E731
            except np.linalg.LinAlgError:
                lu = sla.lu_factor(M)
                solve_m = lambda h: sla.lu_solve(lu, h)  # noqa: E731

        def direction(Rct):
            # Lyapunov solve D Delta + Delta D = 2 Rct in the scaled space
            Delta = [2.0 * Rc / (d[:, None] + d[None, :]) for Rc, (_, d) in zip(Rct, scal)]
            h = rp - _aop(At, [Dj - Rj for Dj, Rj in zip(Delta, Rdt)])
            dy = solve_m(h) if m else np.zeros(0)
            dSt = [Rj - Ay for Rj, Ay in zip(Rdt, _aadj(At, dy))]
            dXt = [Dj - Sj for Dj, Sj in zip(Delta, dSt)]
            dX = [_sym(G @ Xj @ G.T) for (G, _), Xj in zip(scal, dXt)]
            dS = [Rdj - Ay for Rdj, Ay in zip(Rd, _aadj(A, dy))]
            if gram is not None:
                w = sla.cho_solve(gram, rp - _aop(A, dX))
                dX = [dXj + Wj for dXj, Wj in zip(dX, _aadj(A, w))]
            return dX, dy, dS, dXt, dSt

        try:
            D2 = [-np.diag(d * d) for _, d in scal]
            dXa, dya, dSa, dXat, dSat = direction(D2)
            ap = min(1.0, _max_step(X, dXa))
            ad = min(1.0, _max_step(S, dSa))
            xs_aff = sum(
                float(np.sum((Xj + ap * dXj) * (Sj + ad * dSj)))
                for Xj, dXj, Sj, dSj in zip(X, dXa, S, dSa)
            )
            sigma = min(1.0, max(0.0, xs_aff / xs)) ** 3
            Rct = [
                sigma * mu * np.eye(n) + D - _sym(dXj @ dSj)
                for n, D, dXj, dSj in zip(sizes, D2, dXat, dSat)
            ]
            dX, dy, dS, _, _ = direction(Rct)
            ap = min(1.0, STEP_FRACTION * _max_step(X, dX))
            ad = min(1.0, STEP_FRACTION * _max_step(S, dS))
        except np.linalg.LinAlgError:
            break
        stalls = stalls + 1 if max(ap, ad) < 1e-10 else 0
        X = [Xj + ap * dXj for Xj, dXj in zip(X, dX)]
        y = y + ad * dy
        S = [Sj + ad * dSj for Sj, dSj in zip(S, dS)]

    return dict(status=status, X=X, u=np.zeros(0), y=y, S=S, iterations=it,
                history=history, **info)


def _phase_one(A, b, F, tol_gap, tol_feas, max_iter):
    """min tau s.t. A(X) + F u + tau (b - A(I)) = b, X PSD, tau >= 0.

    X = I, tau = 1 is strictly feasible, so the problem is well posed; its
    optimal value is zero exactly when the original constraints are feasible.
    """
    m = len(b)
    r0 = b - _aop(A, [np.eye(Aj.shape[1]) for Aj in A])
    A1 = list(A) + [r0.reshape(m, 1, 1)]
    C1 = [np.zeros((Aj.shape[1],) * 2) for Aj in A] + [np.ones((1, 1))]
    res = _ipm(A1, b, C1, F, np.zeros(F.shape[1]), tol_gap, tol_feas, max_iter)
    tau = float(res["X"][-1][0, 0])
    return res, tau, np.linalg.norm(r0)


def solve(prob: SdpProblem, tol_gap: float = TOL_GAP, tol_feas: float = TOL_FEAS,
          max_iter: int = MAX_ITER) -> SdpSolution:
    """Solve ``prob``; see the module docstring for the standard form.

    A pure feasibility problem (zero objective) goes straight to phase one.
    When the main iteration fails, phase one decides between an infeasibility
    certificate and a numerical failure. The returned ``ray`` (if any) satisfies
    ``A^*(ray)`` PSD, ``F^T ray = 0`` and ``b . ray = -1``.
    """
    if tol_gap <= 0 or tol_feas <= 0:
        raise ValueError("tolerances must be positive")
    A, b, C, F, cf = prob.arrays()
    m = len(b)
    sign = 1.0 if prob.sense == "minimize" else -1.0
    keep, ray = _eliminate_dependent_rows(A, b, F, tol_feas)
    empty_X = [np.zeros((n, n)) for n in prob.block_sizes]
    if ray is not None:
        return SdpSolution(INFEASIBLE, empty_X, np.zeros(prob.n_free), np.zeros(m), empty_X,
                           np.nan, np.nan, np.nan, np.inf, np.nan, 0, ray=ray)
    Ak = [Aj[keep] for Aj in A]
    bk, Fk = b[keep], F[keep]

    def expand(yk):
        y = np.zeros(m)
        y[keep] = yk
        return y

    feasibility_only = all(not np.any(Cj) for Cj in C) and not np.any(cf)
    if feasibility_only and not np.any(b):
        # X = 0 solves a homogeneous system, which may have no interior point
        return SdpSolution(OPTIMAL, empty_X, np.zeros(prob.n_free), np.zeros(m), empty_X,
                           0.0, 0.0, 0.0, 0.0, 0.0, 0)
    res = None
    if not feasibility_only:
        res = _ipm(Ak, bk, C, Fk, cf, tol_gap, tol_feas, max_iter)
        if res["status"] == OPTIMAL:
            return SdpSolution(OPTIMAL, res["X"], res["u"], expand(res["y"]), res["S"],
                               sign * res["pobj"], sign * res["dobj"], res["gap"], res["pinf"],
                               res["dinf"], res["iterations"], history=res["history"])
        log.info("main iteration did not converge (%s); running phase one", res["history"][-1])

    p1, tau, r0norm = _phase_one(Ak, bk, Fk, tol_gap, tol_feas, max_iter)
    n_blocks = len(prob.block_sizes)
    if p1["status"] == OPTIMAL and tau * r0norm / (1 + np.linalg.norm(bk)) <= tol_feas:
        if feasibility_only:
            X = p1["X"][:n_blocks]
            rp = b - _aop(A, X) - F @ p1["u"]
            zero_S = [np.zeros((n, n)) for n in prob.block_sizes]
            return SdpSolution(OPTIMAL, X, p1["u"], np.zeros(m), zero_S, 0.0, 0.0,
                               p1["gap"], np.linalg.norm(rp) / (1 + np.linalg.norm(b)), 0.0,
                               p1["iterations"], history=p1["history"])
        # primal feasible, yet the main iteration failed
        return SdpSolution(FAILURE, res["X"], res["u"], expand(res["y"]), res["S"],
                           sign * res["pobj"], sign * res["dobj"], res["gap"], res["pinf"],
                           res["dinf"], res["iterations"], history=res["history"])
    if p1["status"] == OPTIMAL and p1["dobj"] > 0:
        ray = -expand(p1["y"]) / p1["dobj"]
        if _ray_is_valid(A, b, F, ray, tol_feas):
            return SdpSolution(INFEASIBLE, empty_X, np.zeros(prob.n_free), np.zeros(m), empty_X,
                               np.nan, np.nan, np.nan, tau, np.nan, p1["iterations"], ray=ray,
                               history=p1["history"])
    return SdpSolution(FAILURE, p1["X"][:n_blocks], p1["u"], expand(p1["y"]), p1["S"][:n_blocks],
                       np.nan, np.nan, p1["gap"], p1["pinf"], p1["dinf"], p1["iterations"],
                       history=p1["history"])


def _ray_is_valid(A, b, F, ray, tol_feas) -> bool:
    if not b @ ray < 0:
        return False
    for Ay in _aadj(A, ray):
        if np.linalg.eigvalsh(Ay)[0] < -tol_feas * (1 + np.linalg.norm(Ay)) * 10:
            return False
    return np.linalg.norm(F.T @ ray) <= 10 * tol_feas * (1 + np.linalg.norm(ray))


@dataclass
class KktReport:
    primal_residual: float
    dual_residual: float
    complementarity: float
    gap: float
    min_eig_X: float
    min_eig_S: float
    passed: bool
    failures: list


def check_kkt(prob: SdpProblem, sol: SdpSolution, tol_gap: float = TOL_GAP,
              tol_feas: float = TOL_FEAS) -> KktReport:
    """Recompute feasibility and complementarity of ``sol`` from the problem data.

    Feasibility residuals are relative and the duality gap and complementarity
    absolute, as in the solver's stopping test; each check passes at 10x the
    given tolerance.
    """
    A, b, C, F, cf = prob.arrays()
    X, S, y, u = sol.X, sol.S, sol.y, sol.u
    normb = np.linalg.norm(b)
    normC = np.sqrt(sum(np.linalg.norm(Cj) ** 2 for Cj in C) + cf @ cf)
    rp = b - _aop(A, X) - F @ u
    Rd = [Cj - Ay - Sj for Cj, Ay, Sj in zip(C, _aadj(A, y), S)]
    rf = cf - F.T @ y
    pres = np.linalg.norm(rp) / (1 + normb)
    dres = np.sqrt(sum(np.linalg.norm(R) ** 2 for R in Rd) + rf @ rf) / (1 + normC)
    pobj = sum(float(np.sum(Cj * Xj)) for Cj, Xj in zip(C, X)) + cf @ u
    dobj = float(b @ y)
    comp = sum(float(np.sum(Xj * Sj)) for Xj, Sj in zip(X, S))
    gap = abs(pobj - dobj)
    min_x = min((np.linalg.eigvalsh(_sym(Xj))[0] for Xj in X), default=0.0)
    min_s = min((np.linalg.eigvalsh(_sym(Sj))[0] for Sj in S), default=0.0)
    failures = []
    if pres > 10 * tol_feas:
        failures.append(f"primal residual {pres:.3e}")
    if dres > 10 * tol_feas:
        failures.append(f"dual residual {dres:.3e}")
    if abs(comp) > 10 * tol_gap:
        failures.append(f"complementarity {comp:.3e}")
    if gap > 10 * tol_gap:
        failures.append(f"duality gap {gap:.3e}")
    scale_x = 1 + max((np.linalg.norm(Xj) for Xj in X), default=0.0)
    scale_s = 1 + max((np.linalg.norm(Sj) for Sj in S), default=0.0)
    if min_x < -10 * tol_feas * scale_x:
        failures.append(f"X not PSD (min eigenvalue {min_x:.3e})")
    if min_s < -10 * tol_feas * scale_s:
        failures.append(f"S not PSD (min eigenvalue {min_s:.3e})")
    return KktReport(pres, dres, comp, gap, min_x, min_s, not failures, failures)
