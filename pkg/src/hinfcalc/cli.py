"""Command line front end.

Exit codes: 0 when every check passes, 2 on a numerical failure or a failed
check, 3 on a precondition error (including exhausted budgets).
"""
from __future__ import annotations

import argparse
import json
import os
import signal
import sys

EXIT_OK, EXIT_FAIL, EXIT_PRECONDITION = 0, 2, 3


def _parser():
    p = argparse.ArgumentParser(prog="hinfcalc", description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None, help="BLAS thread count")
    p.add_argument("--budget-sec", type=float, default=None, help="wall-clock budget")
    p.add_argument("--out", default=None, help="report path (directory for experiment)")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("classify", help="Ritt or sectorial classification of a matrix")
    c.add_argument("--op", required=True)
    c.add_argument("--mode", choices=["ritt", "sectorial"], default="ritt")
    c.add_argument("--angle", type=float, default=None, help="beta (ritt) or nu (sectorial)")

    c = sub.add_parser("calc", help="apply a symbol to a commuting tuple")
    c.add_argument("--symbol", required=True)
    c.add_argument("--ops", required=True)
    c.add_argument("--mode", choices=["ritt", "sectorial", "oracle"], default="ritt")
    c.add_argument("--angles", default=None, help="comma-separated contour angles")
    c.add_argument("--tol", type=float, default=1e-9)

    c = sub.add_parser("transfer", help="transfer checks between the two calculi")
    c.add_argument("--check", choices=["forward", "reverse2", "decay", "supnorm"], required=True)
    c.add_argument("--f", required=True, help="symbol JSON (a list for supnorm)")
    c.add_argument("--ops", default=None)
    c.add_argument("--angles", default="1.35,1.15,0.9", help="gamma,beta,theta")

    c = sub.add_parser("dilate", help="truncated dilation and its verification")
    c.add_argument("--op", required=True)
    c.add_argument("--K", type=int, default=512)
    c.add_argument("--verify", default="m_max=8")

    c = sub.add_parser("rbound", help="R-bound lower estimate of a family")
    c.add_argument("--family", required=True)
    c.add_argument("--beta", type=float, default=None, help="sample (1-l)R(l,T) outside B_beta for a single T")
    c.add_argument("--enum", default="exact:10")
    c.add_argument("--trials", type=int, default=200)

    c = sub.add_parser("shiftnorm", help="norm bracket of a shift polynomial")
    c.add_argument("--poly", required=True)
    c.add_argument("--p", default="2")
    c.add_argument("--window", type=int, default=64)

    c = sub.add_parser("experiment", help="run an experiment spec")
    c.add_argument("--spec", required=True)
    return p


def _floats(text):
    return None if text is None else [float(v) for v in text.split(",")]


def _load(path):
    from .jsonio import load
    return load(path)


def _run(args):
    """Returns (report dict, passed flag)."""
    import numpy as np

    from . import jsonio

    if args.command == "classify":
        from .operators import ritt_classify, sectorial_classify
        T = jsonio.matrix_from_json(_load(args.op))
        if args.mode == "ritt":
            from .geometry import minimal_stolz_angle
            ang = minimal_stolz_angle(np.linalg.eigvals(T))
            beta = args.angle if args.angle is not None else min(0.5 * (ang.alpha + np.pi / 2), ang.alpha + 0.3)
            rep = ritt_classify(T, beta)
        else:
            eig = np.linalg.eigvals(T)
            nz = eig[np.abs(eig) > 1e-14]
            omega = float(np.max(np.abs(np.angle(nz)))) if nz.size else 0.0
            nu = args.angle if args.angle is not None else 0.5 * (omega + (np.pi / 2 if omega < np.pi / 2 else np.pi))
            rep = sectorial_classify(T, nu)
        return rep.to_json(), bool(rep.verdict)

    if args.command == "calc":
        from .calculus import calc_ritt, calc_sectorial, spectral_oracle
        sym = jsonio.symbol_from_json(_load(args.symbol))
        ops = jsonio.matrices_from_json(_load(args.ops))
        angles = _floats(args.angles)
        if args.mode == "oracle":
            M = spectral_oracle(sym, ops, args.seed)
            return {"matrix": jsonio.matrix_to_json(M)}, True
        fn = calc_ritt if args.mode == "ritt" else calc_sectorial
        res = fn(sym, ops, angles, tol=args.tol, return_info=True)
        return res.to_json(), True

    if args.command == "transfer":
        from .transfer import (assemble_reverse_n2, build_auxiliary_g, build_context, check_g_decay,
                               check_g_supnorm, transfer_forward)
        gamma, beta, theta = _floats(args.angles)
        raw = _load(args.f)
        if args.check == "supnorm":
            syms = [jsonio.symbol_from_json(o) for o in (raw if isinstance(raw, list) else [raw])]
            rep = check_g_supnorm([build_context(s, gamma, beta, theta) for s in syms])
            return rep.to_json(), rep.passed
        sym = jsonio.symbol_from_json(raw)
        if args.check == "decay":
            rep = check_g_decay(build_auxiliary_g(build_context(sym, gamma, beta, theta)), theta)
            return rep.to_json(), rep.passed
        if args.ops is None:
            raise _precondition("--ops is required for this check")
        ops = jsonio.matrices_from_json(_load(args.ops))
        if args.check == "forward":
            rep = transfer_forward(sym, ops)
            return rep.to_json(), rep.passed
        if len(ops) != 2:
            raise _precondition("reverse2 needs exactly two operators")
        eye = np.eye(ops[0].shape[0])
        ctx = build_context(sym, gamma, beta, theta)
        _, rep = assemble_reverse_n2(ctx, eye - ops[0], eye - ops[1])
        return rep.to_json(), rep.passed

    if args.command == "dilate":
        from .dilation import build_dilation, verify_dilation
        T = jsonio.matrix_from_json(_load(args.op))
        m_max = int(dict(kv.split("=") for kv in args.verify.split(",")).get("m_max", 8))
        rep = verify_dilation(build_dilation(T, args.K), m_max, seed=args.seed)
        return rep.to_json(), rep.passed

    if args.command == "rbound":
        from .rademacher import SignEnumeration, r_bounded_constant, r_ritt_sample
        fam = jsonio.matrices_from_json(_load(args.family))
        mode = SignEnumeration.parse(args.enum, 1).mode
        if args.beta is not None:
            if len(fam) != 1:
                raise _precondition("--beta expects a single operator")
            rep = r_ritt_sample(fam[0], args.beta, trials=args.trials, seed=args.seed)
        else:
            rep = r_bounded_constant(fam, args.trials, seed=args.seed, enum_mode=mode)
        return rep.to_json(), True

    if args.command == "shiftnorm":
        from .shiftnorms import ShiftPolynomial, shift_norm_bracket
        P = ShiftPolynomial.from_json(_load(args.poly))
        p = float("inf") if args.p in ("inf", "infinity") else float(args.p)
        br = shift_norm_bracket(P, p, args.window, seed=args.seed)
        return {"p": args.p, **br.to_json()}, True

    if args.command == "experiment":
        from .workbench import ExperimentSpec, run_reports
        obj = _load(args.spec)
        obj.setdefault("seeds", [args.seed])
        if args.budget_sec is not None:
            obj["budget_sec"] = args.budget_sec
        if obj.get("kind") == "classify-batch" and "matrices" in obj:
            obj["matrices"] = [jsonio.matrix_from_json(m) for m in obj["matrices"]]
        spec = ExperimentSpec.from_json(obj)
        report, _ = run_reports(spec, args.out)
        args.out = None  # already written
        return report, True
    raise _precondition(f"unknown command {args.command}")  # pragma: no cover


def _precondition(msg):
    from .errors import PreconditionError
    return PreconditionError(msg)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(args.threads)
    from .errors import BudgetExceeded, NumericalFailure, PreconditionError
    from .jsonio import dumps

    if args.budget_sec and hasattr(signal, "SIGALRM"):
        def _alarm(signum, frame):
            raise BudgetExceeded(f"wall-clock budget of {args.budget_sec}s exhausted")
        signal.signal(signal.SIGALRM, _alarm)
        signal.setitimer(signal.ITIMER_REAL, args.budget_sec)
    try:
        report, passed = _run(args)
        code = EXIT_OK if passed else EXIT_FAIL
    except PreconditionError as exc:
        report, code = {"error": type(exc).__name__, "message": str(exc)}, EXIT_PRECONDITION
    except NumericalFailure as exc:
        report, code = {"error": type(exc).__name__, "message": str(exc)}, EXIT_FAIL
    except (OSError, ValueError, KeyError, TypeError) as exc:
        # unreadable or malformed input files
        report, code = {"error": type(exc).__name__, "message": str(exc)}, EXIT_PRECONDITION
    finally:
        if args.budget_sec and hasattr(signal, "SIGALRM"):
            signal.setitimer(signal.ITIMER_REAL, 0)
    text = dumps(report)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
