"""Membership in the cone C_d = conic hull of the moment matrices, in its dual
(nonnegative polynomials on S^2), and the explicit d = 3 coefficient systems.

C_d membership (d <= 3) is the pair of tests ``A >= 0`` and ``G_A^Gamma >= 0``.
Dual membership of H asks for PSD matrices B (size d+1) and C (size 2d) with
``H = B + gamma_adjoint(C)``; that pair is the nonnegativity certificate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import hermitian as herm
from . import sdp
from .atoms import extract_atoms
from .sphere_moment import CubicOnSphere, MONOMIALS, poly_to_h, h_to_poly, unit_matrix

BOUNDARY_TOL = 1e-7
CERT_PSD_TOL = 1e-7
CERT_EQ_TOL = 1e-7

INSIDE = "inside"
OUTSIDE = "outside"
BOUNDARY = "boundary-tolerance"


def one_based(a: int, b: int) -> tuple[int, int]:
    """Translate a 1-based matrix subscript pair (as used in the equation
    tables below) to 0-based array indices."""
    if a < 1 or b < 1:
        raise ValueError(f"1-based indices expected, got ({a}, {b})")
    return a - 1, b - 1


# Each equation: (LHS terms, real RHS, imaginary RHS or None for real equations).
# LHS terms are (sign, block, row, col) with 1-based subscripts; RHS maps
# coefficient keys "jkl" (or "1" for the constant) to multipliers.
NONNEG_EQUATIONS = (
    ([(1, "B", 1, 1), (1, "C", 1, 1)], {"200": 1, "300": 1}, None),
    ([(1, "B", 4, 4), (1, "C", 6, 6)], {"200": 1, "300": -1}, None),
    ([(1, "B", 1, 2), (1, "C", 1, 2), (1, "C", 4, 1)],
     {"201": 1, "101": 1}, {"210": 1, "110": 1}),
    ([(1, "B", 3, 4), (1, "C", 6, 3), (1, "C", 5, 6)],
     {"201": 1, "101": -1}, {"210": 1, "110": -1}),
    ([(1, "B", 2, 2), (1, "C", 2, 2), (1, "C", 4, 4), (1, "C", 1, 5), (1, "C", 5, 1)],
     {"020": 2, "002": 2, "200": -1, "120": 2, "102": 2, "300": -3}, None),
    ([(1, "B", 3, 3), (1, "C", 3, 3), (1, "C", 5, 5), (1, "C", 2, 6), (1, "C", 6, 2)],
     {"020": 2, "002": 2, "200": -1, "120": -2, "102": -2, "300": 3}, None),
    ([(1, "B", 2, 3), (1, "C", 1, 6), (1, "C", 2, 3), (1, "C", 5, 2), (1, "C", 4, 5)],
     {"003": 3, "021": 1, "201": -2}, {"030": 3, "012": 1, "210": -2}),
    ([(1, "B", 4, 1), (1, "C", 3, 4)], {"003": 1, "021": -1}, {"030": 1, "012": -1}),
    ([(1, "B", 2, 4), (1, "C", 5, 3), (1, "C", 4, 6)],
     {"002": 1, "020": -1, "120": 1, "102": -1}, {"011": 1, "111": -1}),
    ([(1, "B", 1, 3), (1, "C", 1, 3), (1, "C", 4, 2)],
     {"002": 1, "020": -1, "120": -1, "102": 1}, {"011": 1, "111": 1}),
)

UNIT_BALL_EQUATIONS = (
    ([(1, "B", 1, 1), (1, "C", 1, 1)], {"1": 1, "300": 1}, None),
    ([(1, "B", 4, 4), (1, "C", 6, 6)], {"1": 1, "300": -1}, None),
    ([(1, "B", 1, 2), (1, "C", 1, 2), (1, "C", 4, 1)], {"201": 1}, {"210": 1}),
    ([(1, "B", 3, 4), (1, "C", 6, 3), (1, "C", 5, 6)], {"201": 1}, {"210": 1}),
    ([(1, "B", 2, 2), (1, "C", 2, 2), (1, "C", 4, 4), (1, "C", 1, 5), (1, "C", 5, 1)],
     {"1": 3, "120": 2, "102": 2, "300": -3}, None),
    ([(1, "B", 3, 3), (1, "C", 3, 3), (1, "C", 5, 5), (1, "C", 2, 6), (1, "C", 6, 2)],
     {"1": 3, "120": -2, "102": -2, "300": 3}, None),
    ([(1, "B", 2, 3), (1, "C", 1, 6), (1, "C", 2, 3), (1, "C", 5, 2), (1, "C", 4, 5)],
     {"003": 3, "021": 1, "201": -2}, {"030": 3, "012": 1, "210": -2}),
    ([(1, "B", 4, 1), (1, "C", 3, 4)], {"003": 1, "021": -1}, {"030": 1, "012": -1}),
    ([(1, "B", 2, 4), (1, "C", 5, 3), (1, "C", 4, 6)], {"120": 1, "102": -1}, {"111": -1}),
    ([(-1, "B", 1, 3), (-1, "C", 1, 3), (-1, "C", 4, 2)], {"120": 1, "102": -1}, {"111": -1}),
)

_KEYS = ["".join(map(str, m)) for m in MONOMIALS]


@dataclass
class SystemRow:
    """``<FB, B> + <FC, C> = const + coef . c`` with Hermitian functionals.

    ``entry``/``part`` name the B entry the row constrains (0-based) and
    ``sign`` its coefficient in the row.
    """

    FB: np.ndarray
    FC: np.ndarray
    const: float
    coef: np.ndarray  # over MONOMIALS
    entry: tuple
    part: str
    sign: float = 1.0

    def rhs(self, p: CubicOnSphere) -> float:
        return self.const + float(self.coef @ p.coeffs)

    @property
    def label(self) -> str:
        return f"{self.part} B{self.entry[0] + 1}{self.entry[1] + 1}"


def _rows_from_table(table) -> list[SystemRow]:
    rows = []
    for lhs, rhs_re, rhs_im in table:
        parts = [("re", rhs_re)] + ([("im", rhs_im)] if rhs_im is not None else [])
        for part, rhs in parts:
            FB = np.zeros((4, 4), dtype=complex)
            FC = np.zeros((6, 6), dtype=complex)
            for sign, block, a, b in lhs:
                i, j = one_based(a, b)
                if block == "B":
                    FB += sign * herm.entry_functional(i, j, part, 4)
                else:
                    FC += sign * herm.entry_functional(i, j, part, 6)
            coef = np.zeros(len(MONOMIALS))
            const = 0.0
            for key, v in rhs.items():
                if key == "1":
                    const += v
                else:
                    coef[_KEYS.index(key)] += v
            sign, _, a, b = lhs[0]
            rows.append(SystemRow(FB, FC, const, coef, one_based(a, b), part, sign))
    return rows


def theorem_rows() -> list[SystemRow]:
    """The nonnegativity system for cubics, hard-coded equation by equation."""
    return _rows_from_table(NONNEG_EQUATIONS)


def unit_ball_rows() -> list[SystemRow]:
    """The unit-ball system for homogeneous cubics, hard-coded equation by equation."""
    return _rows_from_table(UNIT_BALL_EQUATIONS)


def generated_rows(entries=None) -> list[SystemRow]:
    """The nonnegativity system derived mechanically: entry (a, b) of
    ``B + gamma_adjoint(C) = poly_to_h(p)``, split into real and imaginary parts.

    ``entries`` defaults to the B-entries used by the hard-coded system,
    in the same order, so rows correspond one to one.
    """
    if entries is None:
        entries = []
        for lhs, _, rhs_im in NONNEG_EQUATIONS:
            _, _, a, b = lhs[0]
            entries.append((one_based(a, b), rhs_im is not None))
    units = [poly_to_h(CubicOnSphere(np.eye(len(MONOMIALS))[k])) for k in range(len(MONOMIALS))]
    rows = []
    for (i, j), is_complex in entries:
        for part in ("re", "im") if is_complex else ("re",):
            FB = herm.entry_functional(i, j, part, 4)
            FC = herm.gamma_map(FB)
            coef = np.array([herm.inner(FB, U) for U in units])
            rows.append(SystemRow(FB, FC, 0.0, coef, (i, j), part))
    return rows


def canonical(rows: list[SystemRow]) -> dict:
    """Rows keyed by (part, B entry), scaled so the B entry has coefficient +1."""
    out = {}
    for r in rows:
        s = 1.0 / r.sign
        out[(r.part, r.entry)] = SystemRow(s * r.FB, s * r.FC, s * r.const, s * r.coef,
                                           r.entry, r.part)
    return out


def _to_problem(rows: list[SystemRow], rhs: list[float], free_coef=None,
                objective_free=None) -> sdp.SdpProblem:
    d1 = rows[0].FB.shape[0]
    sizes = [2 * d1, 4 * (d1 - 1)]
    cons = []
    for k, (r, v) in enumerate(zip(rows, rhs)):
        free = {0: free_coef[k]} if free_coef is not None else {}
        cons.append(sdp.Constraint({0: 0.5 * herm.embed_real(r.FB),
                                    1: 0.5 * herm.embed_real(r.FC)}, float(v), free))
    if free_coef is None:
        return sdp.SdpProblem(sizes, cons)
    return sdp.SdpProblem(sizes, cons, n_free=1, objective_free=objective_free,
                          sense="maximize")


def nonneg_cubic_system(p: CubicOnSphere) -> sdp.SdpProblem:
    """Feasibility SDP in (B, C) that is solvable iff p >= 0 on S^2.

    Block 0 is the real embedding of B (8x8), block 1 that of C (12x12);
    Hermitian functionals carry the factor 1/2 of the embedding.
    """
    rows = theorem_rows()
    return _to_problem(rows, [r.rhs(p) for r in rows])


def as_homogeneous(p) -> CubicOnSphere:
    if isinstance(p, CubicOnSphere):
        if not p.is_homogeneous():
            raise ValueError("unit-ball problems need a homogeneous cubic (no degree-2 terms)")
        return p
    return CubicOnSphere.homogeneous(np.asarray(p, dtype=float))


def unit_ball_system(p) -> sdp.SdpProblem:
    """Feasibility SDP solvable iff max |p| <= 1 on S^2, for homogeneous cubic p
    (a ``CubicOnSphere`` without degree-2 part, or the 10 cubic coefficients)."""
    p = as_homogeneous(p)
    rows = unit_ball_rows()
    return _to_problem(rows, [r.rhs(p) for r in rows])


def unit_ball_scaling_problem(p) -> sdp.SdpProblem:
    """maximize lam s.t. |x|^2 + lam p is certified nonnegative (lam free;
    lam >= 0 holds at the optimum since lam = 0 is strictly feasible)."""
    p = as_homogeneous(p)
    rows = unit_ball_rows()
    return _to_problem(rows, [r.const for r in rows],
                       free_coef=[-float(r.coef @ p.coeffs) for r in rows],
                       objective_free={0: 1.0})


def generic_rows(d: int) -> list[SystemRow]:
    """Rows ``entry (a, b) of B + gamma_adjoint(C)`` for all a <= b, any degree d."""
    rows = []
    for a in range(d + 1):
        for b in range(a, d + 1):
            for part in ("re", "im") if a != b else ("re",):
                FB = herm.entry_functional(a, b, part, d + 1)
                rows.append(SystemRow(FB, herm.gamma_map(FB), 0.0, np.zeros(0), (a, b), part))
    return rows


def lower_bound_problem(H: np.ndarray, rows: list[SystemRow] | None = None) -> sdp.SdpProblem:
    """maximize t s.t. H - t * unit_matrix = B + gamma_adjoint(C), B, C PSD.

    The optimal t is the minimum of p_H on the sphere (d <= 3); the dual
    variables form the optimal moment matrix.
    """
    d = H.shape[0] - 1
    if rows is None:
        rows = theorem_rows() if d == 3 else generic_rows(d)
    H1 = unit_matrix(d)
    if d == 3:
        p = h_to_poly(H)
        rhs = [r.rhs(p) for r in rows]
    else:
        rhs = [herm.inner(r.FB, H) for r in rows]
    return _to_problem(rows, rhs, free_coef=[herm.inner(r.FB, H1) for r in rows],
                       objective_free={0: 1.0})


# ---------------------------------------------------------------------------


@dataclass
class NonnegCertificate:
    B: np.ndarray
    C: np.ndarray

    def to_json(self, H: np.ndarray | None = None) -> dict:
        out = {"B": herm.to_json(self.B), "C": herm.to_json(self.C)}
        if H is not None:
            rep = verify_certificate(H, self)
            out["residual"] = rep.residual
            out["psd_margins"] = list(rep.psd_margins)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "NonnegCertificate":
        # no Hermitian check here: verify_certificate reports asymmetry
        return cls(herm.from_json(obj["B"], check=False), herm.from_json(obj["C"], check=False))


@dataclass
class CertificateReport:
    passed: bool
    residual: float
    psd_margins: tuple
    failures: list = field(default_factory=list)


def verify_certificate(H: np.ndarray, cert: NonnegCertificate, psd_tol: float = CERT_PSD_TOL,
                       eq_tol: float = CERT_EQ_TOL) -> CertificateReport:
    """Check ``B, C >= 0`` and ``H = B + gamma_adjoint(C)`` by direct linear algebra."""
    H, B, C = (np.asarray(M, dtype=complex) for M in (H, cert.B, cert.C))
    failures = []
    if B.shape != H.shape or C.shape != (2 * (H.shape[0] - 1),) * 2:
        return CertificateReport(False, np.inf, (np.nan, np.nan),
                                 [f"size mismatch: H {H.shape}, B {B.shape}, C {C.shape}"])
    for name, M in (("B", B), ("C", C)):
        if np.linalg.norm(M - M.conj().T) > 1e-12 * (1 + np.linalg.norm(M)):
            failures.append(f"{name} is not Hermitian")
    mb = herm.min_eigenvalue(0.5 * (B + B.conj().T))
    mc = herm.min_eigenvalue(0.5 * (C + C.conj().T))
    residual = float(np.linalg.norm(H - B - herm.gamma_adjoint(C)))
    if mb < -psd_tol:
        failures.append(f"B has eigenvalue {mb:.3e}")
    if mc < -psd_tol:
        failures.append(f"C has eigenvalue {mc:.3e}")
    if residual > eq_tol:
        failures.append(f"equation residual {residual:.3e}")
    return CertificateReport(not failures, residual, (mb, mc), failures)


@dataclass
class ConeMembershipResult:
    verdict: str
    margin: float
    certificate: NonnegCertificate | None = None
    separating: np.ndarray | None = None
    evaluation_point: np.ndarray | None = None
    exact: bool = True
    note: str = ""
    solution: sdp.SdpSolution | None = None

    def to_json(self, H: np.ndarray | None = None) -> dict:
        """Serialize; ``H`` (the tested matrix) adds residual data to the certificate."""
        return {
            "verdict": self.verdict,
            "margin": float(self.margin),
            "exact": self.exact,
            "note": self.note,
            "certificate": self.certificate.to_json(H) if self.certificate is not None else None,
            "separating": herm.to_json(self.separating) if self.separating is not None else None,
            "evaluation_point": (None if self.evaluation_point is None
                                 else [float(v) for v in self.evaluation_point]),
        }


def in_cone_Cd(A: np.ndarray, d: int | None = None) -> ConeMembershipResult:
    """Decide A in C_d from ``A >= 0`` and ``G_A^Gamma >= 0``.

    Exact for d <= 3; for larger d the test is only necessary.
    """
    A = herm.as_hermitian(A)
    if d is None:
        d = A.shape[0] - 1
    if A.shape != (d + 1, d + 1):
        raise ValueError(f"expected a {(d + 1, d + 1)} matrix, got {A.shape}")
    G = herm.gamma_map(A)
    margin = min(herm.min_eigenvalue(A), herm.min_eigenvalue(G))
    eps = herm.psd_tolerance(A)
    verdict = INSIDE if margin >= -eps else OUTSIDE
    exact = d <= 3
    note = "" if exact else "relaxation for d >= 4: necessary condition only"
    return ConeMembershipResult(verdict, margin, exact=exact, note=note)


def in_dual_cone(H: np.ndarray, d: int | None = None, tol_gap: float = sdp.TOL_GAP,
                 tol_feas: float = sdp.TOL_FEAS) -> ConeMembershipResult:
    """Decide whether p_H >= 0 on the sphere, with a certificate or a separating A.

    The margin is the certified minimum of p_H (the largest t with
    ``H - t * unit_matrix`` in the dual cone). Raises ``RuntimeError`` on
    solver failure.
    """
    H = herm.as_hermitian(H)
    if d is None:
        d = H.shape[0] - 1
    sol, t, B, C, A = solve_lower_bound(H, tol_gap, tol_feas)
    return _classify(H, d, sol, t, B, C, A)


def in_unit_ball(p, tol_gap: float = sdp.TOL_GAP,
                 tol_feas: float = sdp.TOL_FEAS) -> ConeMembershipResult:
    """Decide max |p| <= 1 on S^2 for a homogeneous cubic from the unit-ball system.

    The margin is 1 - max |p| (the minimum of |x|^2 + p); the certificate
    proves nonnegativity of |x|^2 + p.
    """
    p = as_homogeneous(p)
    sol, t, B, C, A = solve_lower_bound(poly_to_h(p), tol_gap, tol_feas, rows=unit_ball_rows())
    H = poly_to_h(p + CubicOnSphere.constant(1.0))
    return _classify(H, 3, sol, t, B, C, A)


def _classify(H, d, sol, t, B, C, A) -> ConeMembershipResult:
    exact = d <= 3
    note = "" if exact else "relaxation for d >= 4: only 'inside' is conclusive"
    if t >= -BOUNDARY_TOL:
        cert = NonnegCertificate(B + t * unit_matrix(d), C)
        verdict = INSIDE if t > BOUNDARY_TOL else BOUNDARY
        return ConeMembershipResult(verdict, t, certificate=cert, exact=exact, note=note,
                                    solution=sol)
    point = None
    try:
        atoms = extract_atoms(A)
        vals = [herm.inner(H, Zk) for Zk in atoms.matrices(d)]
        point = atoms.sphere_points()[int(np.argmin(vals))]
    except ValueError:
        pass
    return ConeMembershipResult(OUTSIDE, t, separating=A, evaluation_point=point,
                                exact=exact, note=note, solution=sol)


def solve_lower_bound(H, tol_gap=sdp.TOL_GAP, tol_feas=sdp.TOL_FEAS, rows=None):
    """Solve ``lower_bound_problem``; return (solution, t, B, C, A)."""
    prob = lower_bound_problem(H, rows)
    sol = sdp.solve(prob, tol_gap, tol_feas)
    if sol.status != sdp.OPTIMAL:
        raise RuntimeError(f"SDP solver returned {sol.status}")
    t = float(sol.u[0])
    B = herm.from_real(sol.X[0])
    C = herm.from_real(sol.X[1])
    A = 2.0 * herm.from_real(sol.S[0])
    return sol, t, B, C, A
