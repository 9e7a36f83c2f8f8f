"""Quick invariant checks run by ``cubicsphere selftest``.

Each check returns ``(passed, detail)``; the suite is deterministic and takes
a few seconds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import cones, sdp
from . import hermitian as herm
from .atoms import extract_atoms
from .optimize import minimize_on_sphere, scale_to_ball_boundary
from .sphere_moment import (
    INFINITY,
    CubicOnSphere,
    h_to_poly,
    moment_matrix,
    poly_to_h,
    to_riemann,
    to_sphere,
    unit_matrix,
)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def _random_sphere(rng, n):
    X = rng.standard_normal((n, 3))
    return X / np.linalg.norm(X, axis=1, keepdims=True)


def check_stereographic(rng):
    worst = max(np.linalg.norm(to_sphere(to_riemann(x)) - x) for x in _random_sphere(rng, 200))
    pole = np.allclose(to_sphere(to_riemann([-1.0, 0.0, 0.0])), [-1, 0, 0])
    return worst <= 1e-10 and pole, f"round trip error {worst:.1e}"


def check_bijection(rng):
    err = 0.0
    for _ in range(20):
        p = CubicOnSphere(rng.uniform(-1, 1, 16))
        H = poly_to_h(p)
        err = max(err, np.abs(h_to_poly(H).coeffs - p.coeffs).max())
        X = _random_sphere(rng, 10)
        direct = p(X)
        err = max(err, max(abs(herm.inner(H, moment_matrix(to_riemann(x))) - v)
                           for x, v in zip(X, direct)))
    return err <= 1e-10, f"max error {err:.1e}"


def check_unit_matrix(rng):
    H = poly_to_h(CubicOnSphere.constant(1.0))
    err = np.abs(H - unit_matrix(3)).max()
    return err <= 1e-12, f"|poly_to_h(1) - diag(1,3,3,1)| = {err:.1e}"


def check_kronecker(rng):
    worst = 0.0
    for d in (2, 3):
        for _ in range(50):
            z = complex(*rng.standard_normal(2))
            Z = moment_matrix(z, d)
            K = np.kron(np.array([[1, z], [z.conjugate(), abs(z) ** 2]]), Z[:d, :d])
            worst = max(worst, np.linalg.norm(herm.gamma_map(Z) - K) / np.linalg.norm(Z))
    return worst <= 1e-12, f"relative error {worst:.1e}"


def check_duplication_psd(rng):
    agree = 0
    for d in (1, 2, 3):
        for _ in range(20):
            M = rng.standard_normal((d + 1, d + 1)) + 1j * rng.standard_normal((d + 1, d + 1))
            A = M @ M.conj().T if rng.random() < 0.5 else M + M.conj().T
            agree += herm.is_psd(A) == herm.is_psd(herm.duplicate_center(A))
    return agree == 60, f"{agree}/60 agree"


def check_explicit_systems(rng):
    hand = cones.canonical(cones.theorem_rows())
    gen = cones.canonical(cones.generated_rows())
    if hand.keys() != gen.keys():
        return False, "row sets differ"
    err = max(max(np.abs(hand[k].FB - gen[k].FB).max(), np.abs(hand[k].FC - gen[k].FC).max(),
                  np.abs(hand[k].coef - gen[k].coef).max()) for k in hand)
    return err <= 1e-12, f"max entry difference {err:.1e}"


def check_solver(rng):
    E = np.zeros((2, 2))
    E[0, 0] = 1.0
    prob = sdp.SdpProblem([2], [sdp.Constraint({0: E}, 1.0)], objective={0: np.eye(2)})
    sol = sdp.solve(prob)
    ok = sol.status == sdp.OPTIMAL and abs(sol.value - 1) <= 1e-8 and sdp.check_kkt(prob, sol).passed
    bad = sdp.solve(sdp.SdpProblem([2], [sdp.Constraint({0: E}, -1.0)]))
    ok = ok and bad.status == sdp.INFEASIBLE
    return ok, f"trace example {sol.status} value {sol.value:.10f}; X11 = -1 gives {bad.status}"


def check_landmarks(rng):
    r1 = minimize_on_sphere(CubicOnSphere.from_dict({"300": 1, "120": 1, "102": 1}), oracle=False)
    r2 = minimize_on_sphere(CubicOnSphere.from_dict({"111": 1}), oracle=False)
    lam = scale_to_ball_boundary(CubicOnSphere.from_dict({"300": 2}))
    ok = (abs(r1.value + 1) <= 1e-8 and abs(r2.value + 3 ** -1.5) <= 1e-6
          and len(r2.minimizers) == 4 and abs(lam - 0.5) <= 1e-7)
    return ok, f"min x1|x|^2 = {r1.value:.10f}, min x1x2x3 = {r2.value:.8f}, scale(2x1^3) = {lam:.9f}"


def check_extraction(rng):
    worst = 0.0
    for _ in range(20):
        k = int(rng.integers(1, 4))
        pts = [complex(*rng.standard_normal(2)) for _ in range(k)]
        if rng.random() < 0.3:
            pts[0] = INFINITY
        w = rng.uniform(0.1, 1.0, k)
        A = sum(wi * moment_matrix(z, 3) for wi, z in zip(w, pts))
        meas = extract_atoms(A)
        worst = max(worst, meas.residual / np.linalg.norm(A))
        if len(meas) != k:
            return False, f"recovered {len(meas)} atoms instead of {k}"
    return worst <= 1e-6, f"relative residual {worst:.1e}"


def check_certificates(rng):
    failures = 0
    for _ in range(10):
        p = CubicOnSphere(rng.uniform(-1, 1, 16))
        res = minimize_on_sphere(p, n_grid=5000, n_polish=10)
        rep = cones.verify_certificate(res.certified_matrix, res.certificate)
        failures += (not rep.passed) or abs(res.gap_to_oracle) > 1e-5
    return failures == 0, f"{10 - failures}/10 random cubics certified and matched the oracle"


CHECKS = [
    ("stereographic round trip", check_stereographic),
    ("bijection H <-> p_H", check_bijection),
    ("constant 1 <-> diag(1,3,3,1)", check_unit_matrix),
    ("Kronecker identity", check_kronecker),
    ("A psd <=> G_A psd", check_duplication_psd),
    ("hard-coded = generated system", check_explicit_systems),
    ("solver examples", check_solver),
    ("analytic landmarks", check_landmarks),
    ("atom extraction", check_extraction),
    ("certificates vs oracle", check_certificates),
]


def run(seed: int = 0) -> list[CheckResult]:
    out = []
    for name, fn in CHECKS:
        rng = np.random.default_rng(seed)
        try:
            passed, detail = fn(rng)
        except Exception as exc:  # a crash is a failed check, not a crashed suite
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(name, bool(passed), detail))
    return out


def format_table(results: list[CheckResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'check':<{width}}  result  detail"]
    for r in results:
        lines.append(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL':<6}  {r.detail}")
    n_pass = sum(r.passed for r in results)
    lines.append(f"{n_pass}/{len(results)} checks passed")
    return "\n".join(lines)

