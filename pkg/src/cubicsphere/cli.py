"""Command-line interface.

Exit codes: 0 when a verdict or result was computed (whatever it says),
1 for usage errors and malformed input, 2 for numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import cones, sdp, selftest
from .optimize import maximize_on_sphere, minimize_on_sphere, scale_to_ball_boundary
from .optimize import ORACLE_GRID, ORACLE_POLISH
from .sphere_moment import MONOMIALS, CubicOnSphere, cubic_from_json, poly_to_h

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2

COMMANDS = ("certify", "ball", "minimize", "maximize", "scale", "verify-cert", "random", "selftest")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cubicsphere",
                     description="Certified nonnegativity and optimization of cubics on S^2.")
    parser.add_argument("command", choices=COMMANDS)
    src = parser.add_mutually_exclusive_group()
    src.add_argument("--input", metavar="PATH", help="JSON polynomial file ('-' for stdin)")
    src.add_argument("--inline", metavar="JSON", help="JSON polynomial given on the command line")
    src.add_argument("--batch", metavar="PATH",
                     help="file of requests, one JSON object per line, each with a 'command' key")
    parser.add_argument("--format", choices=("json", "text"), default="json")
    parser.add_argument("--tol-gap", type=float, default=sdp.TOL_GAP)
    parser.add_argument("--tol-feas", type=float, default=sdp.TOL_FEAS)
    parser.add_argument("--grid", type=int, default=ORACLE_GRID, metavar="N",
                        help="oracle grid size for minimize/maximize (0 disables the oracle)")
    parser.add_argument("--seed", type=int, default=0, metavar="S")
    parser.add_argument("--homogeneous", action="store_true",
                        help="random: emit only degree-3 coefficients")
    parser.add_argument("--cert", metavar="PATH",
                        help="verify-cert: certificate file, if not contained in the input")
    parser.add_argument("--debug-iterates", metavar="PATH",
                        help="write the solver iterate log as JSON lines")
    return parser


# ---------------------------------------------------------------------------
# input


def _load_json(text: str, source: str):
    try:
        return json.loads(text, object_pairs_hook=_no_duplicates)
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed JSON in {source} at line {exc.lineno} column {exc.colno}: "
                         f"{exc.msg}") from None


def _no_duplicates(pairs):
    out = {}
    for k, v in pairs:
        if k in out:
            raise UsageError(f"duplicate key {k!r}")
        out[k] = v
    return out


def _read_document(args):
    if args.inline is not None:
        return _load_json(args.inline, "--inline")
    if args.input is not None and args.input != "-":
        try:
            with open(args.input, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise UsageError(f"cannot read {args.input}: {exc.strerror}") from None
        return _load_json(text, args.input)
    return _load_json(sys.stdin.read(), "standard input")


def parse_poly(doc, homogeneous: bool = False) -> CubicOnSphere:
    """Validate a ``{"coeffs": {...}}`` document (reports embed it as "polynomial")."""
    if isinstance(doc, dict) and "coeffs" not in doc and "polynomial" in doc:
        doc = doc["polynomial"]
    try:
        p = cubic_from_json(doc)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if homogeneous and not p.is_homogeneous():
        raise UsageError("this command needs a homogeneous cubic: degree-2 keys must be absent or zero")
    return p


# ---------------------------------------------------------------------------
# commands


def _tolerances(args) -> dict:
    return {"tol_gap": args.tol_gap, "tol_feas": args.tol_feas,
            "boundary": cones.BOUNDARY_TOL, "cert_psd": cones.CERT_PSD_TOL,
            "cert_eq": cones.CERT_EQ_TOL}


def _dump_history(args, solution) -> None:
    if args.debug_iterates and solution is not None:
        solution.dump_history(args.debug_iterates)


def cmd_certify(args, doc) -> dict:
    p = parse_poly(doc)
    H = poly_to_h(p)
    res = cones.in_dual_cone(H, tol_gap=args.tol_gap, tol_feas=args.tol_feas)
    _dump_history(args, res.solution)
    out = {"command": "certify", "polynomial": p.to_json(),
           "nonnegative": res.verdict != cones.OUTSIDE}
    out.update(res.to_json(H))
    return out


def cmd_ball(args, doc) -> dict:
    p = parse_poly(doc, homogeneous=True)
    res = cones.in_unit_ball(p, tol_gap=args.tol_gap, tol_feas=args.tol_feas)
    H = poly_to_h(p + CubicOnSphere.constant(1.0))
    _dump_history(args, res.solution)
    out = {"command": "ball", "polynomial": p.to_json(),
           "in_ball": res.verdict != cones.OUTSIDE,
           "boundary": res.verdict == cones.BOUNDARY,
           "max_abs": 1.0 - float(res.margin)}
    out.update(res.to_json(H))
    return out


def cmd_optimize(args, doc) -> dict:
    p = parse_poly(doc)
    if args.grid and args.grid < 1000:
        raise UsageError("--grid must be 0 (no oracle) or at least 1000")
    fn = minimize_on_sphere if args.command == "minimize" else maximize_on_sphere
    res = fn(p, tol_gap=args.tol_gap, tol_feas=args.tol_feas, oracle=args.grid > 0,
             n_grid=max(args.grid, 1000), n_polish=ORACLE_POLISH)
    _dump_history(args, res.solution)
    out = {"command": args.command, "polynomial": p.to_json()}
    out.update(res.to_json())
    return out


def cmd_scale(args, doc) -> dict:
    p = parse_poly(doc, homogeneous=True)
    if not np.any(p.coeffs):
        raise UsageError("scale needs a nonzero cubic")
    lam = scale_to_ball_boundary(p, args.tol_gap, args.tol_feas)
    return {"command": "scale", "polynomial": p.to_json(), "lambda": lam, "max_abs": 1.0 / lam}


def cmd_verify(args, doc) -> dict:
    p = parse_poly(doc)
    cert_doc = doc.get("certificate") if isinstance(doc, dict) else None
    if args.cert is not None:
        try:
            with open(args.cert, encoding="utf-8") as fh:
                cert_doc = _load_json(fh.read(), args.cert)
        except OSError as exc:
            raise UsageError(f"cannot read {args.cert}: {exc.strerror}") from None
        cert_doc = cert_doc.get("certificate", cert_doc)
    if not isinstance(cert_doc, dict):
        raise UsageError("no certificate found: pass a certify report or use --cert")
    try:
        cert = cones.NonnegCertificate.from_json(cert_doc)
    except (KeyError, ValueError, TypeError) as exc:
        raise UsageError(f"malformed certificate: {exc}") from None
    rep = cones.verify_certificate(poly_to_h(p), cert)
    return {"command": "verify-cert", "polynomial": p.to_json(), "passed": rep.passed,
            "residual": rep.residual, "psd_margins": [float(v) for v in rep.psd_margins],
            "failures": rep.failures}


def cmd_random(args) -> dict:
    rng = np.random.default_rng(args.seed)
    c = rng.uniform(-1.0, 1.0, len(MONOMIALS))
    if args.homogeneous:
        c[:6] = 0.0
    return CubicOnSphere(c).to_json()


HANDLERS = {"certify": cmd_certify, "ball": cmd_ball, "minimize": cmd_optimize,
            "maximize": cmd_optimize, "scale": cmd_scale, "verify-cert": cmd_verify}


def _render_text(report: dict) -> str:
    lines = []
    for key, value in report.items():
        if key in ("certificate", "separating") and value is not None:
            value = "attached" if key == "separating" else (
                f"residual {value.get('residual', float('nan')):.3e}, "
                f"psd margins {value.get('psd_margins')}")
        elif key == "polynomial":
            value = " ".join(f"{v:+g}*x^{k}" for k, v in value["coeffs"].items()) or "0"
        lines.append(f"{key}: {value}")
    return "\n".join(lines)


def _emit(report: dict, fmt: str) -> None:
    if fmt == "json":
        print(json.dumps(report, sort_keys=False))
    else:
        print(_render_text(report))


def _run_one(args, doc=None) -> tuple[int, dict]:
    """Dispatch one command; returns ``(exit code, report)``."""
    if args.command == "random":
        return EXIT_OK, cmd_random(args)
    if doc is None:
        doc = _read_document(args)
    report = HANDLERS[args.command](args, doc)
    report["tolerances"] = _tolerances(args)
    return EXIT_OK, report


def _run_batch(args) -> int:
    try:
        with open(args.batch, encoding="utf-8") as fh:
            lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    except OSError as exc:
        raise UsageError(f"cannot read {args.batch}: {exc.strerror}") from None
    worst = EXIT_OK
    for n, line in enumerate(lines, 1):
        req = _load_json(line, f"{args.batch} line {n}")
        sub = argparse.Namespace(**vars(args))
        sub.command = req.get("command") if isinstance(req, dict) else None

        def handle(sub=sub, req=req):
            if sub.command not in HANDLERS:
                raise UsageError(f"batch request needs a 'command' among {sorted(HANDLERS)}")
            return _run_one(sub, req)

        code, report = _guarded(handle)
        report["request"] = n
        _emit(report, args.format)
        worst = max(worst, code)
    return worst


def _guarded(fn) -> tuple[int, dict]:
    try:
        return fn()
    except (UsageError, ValueError) as exc:
        return EXIT_USAGE, {"error": str(exc), "status": "usage-error"}
    except RuntimeError as exc:
        return EXIT_NUMERICAL, {"error": str(exc), "status": sdp.FAILURE}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command == "selftest":
            results = selftest.run(args.seed)
            if args.format == "json":
                print(json.dumps([r.__dict__ for r in results]))
            else:
                print(selftest.format_table(results))
            return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERICAL
        if args.batch is not None:
            return _run_batch(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    code, report = _guarded(lambda: _run_one(args))
    if code != EXIT_OK:
        print(f"error: {report['error']}", file=sys.stderr)
        return code
    _emit(report, args.format)
    return code


if __name__ == "__main__":
    sys.exit(main())
