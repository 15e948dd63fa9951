"""Command-line front end.

Exit codes: 0 = verdict produced and verified, 1 = no definite verdict (or a
verification/reproduction failure), 2 = input error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import serialize as ser
from .algebra import AlgebraElement, toeplitz_lift
from .extension import (EXTENDABLE, EXTENDABLE_UP_TO, NOT_EXTENDABLE, PartialFunction, cp_order_probe,
                        extension_hierarchy, is_psd_on_domain, kernel_propagation_check,
                        sigma_extension_check, uos_membership)
from .fejer_riesz import (SymbolNegative, TrigPolynomial, evaluate_cyclic, fr_gap_probe,
                          spectral_factor_interval, torus_nonneg_certificate)
from .groups import box, cyclic_product, free_abelian, make_sigma
from .linalg import lambda_min
from .sdp import SdpSettings
from .sos import INSIDE, OUTSIDE, sos_membership

COMMAND_TASKS = {
    "check": ("sos-check", "toeplitz-check", "uos-check"),
    "factor": ("sos-factor",),
    "extend": ("extend", "sigma-extend"),
    "probe": ("fr-probe", "cp-probe"),
}

DEFINITE = {INSIDE, OUTSIDE, "psd", "not_psd", "factored", "symbol_negative", NOT_EXTENDABLE,
            EXTENDABLE, EXTENDABLE_UP_TO, "witnesses_found", "no_witness_found", "map_not_cp"}

REPRODUCE_IDS = ("c4-figure", "z-interval", "five-point-pauli", "sigma-013", "rudin-gap-search")


class InputError(Exception):
    pass


# --------------------------------------------------------------------------
# task runners: each returns a certificate-file dict


def _settings(args, problem=None) -> SdpSettings:
    st = SdpSettings()
    tol = args.tol if args.tol is not None else (problem.settings.get("tol") if problem else None)
    if tol is not None:
        st.feas_tol = float(tol)
    return st


def _opt(args, problem, name, default):
    v = getattr(args, name, None)
    if v is None and problem is not None:
        v = problem.settings.get(name)
    return default if v is None else v


def run_task(problem: ser.ProblemFile, args) -> dict:
    task, p, group = problem.task, problem.payload, problem.group
    st = _settings(args, problem)
    notes = {}
    if task == "sos-check":
        res = sos_membership(p["element"], p["sigma"], st)
        verdict, certs = res.status, ser.membership_certificates(res)
        notes = {"margin": res.margin, "diagnostic": res.diagnostic}
    elif task == "uos-check":
        res = uos_membership(p["element"], p["domain"], st)
        verdict, certs = res.status, ser.membership_certificates(res)
        notes = {"margin": res.margin, "diagnostic": res.diagnostic}
    elif task == "toeplitz-check":
        lam = lambda_min(p["toeplitz"].matrix)
        verdict, certs = ("psd" if lam >= -1e-8 else "not_psd"), {"lambda_min": lam}
    elif task == "sos-factor":
        x = p["element"]
        if group.moduli != (0,):
            raise InputError("sos-factor needs an element of Z (group moduli [0])")
        tol = float(_opt(args, problem, "tol", 1e-8))
        try:
            fr = spectral_factor_interval(x, p.get("degree"), tol=tol, settings=st)
        except SymbolNegative as exc:
            verdict, certs = "symbol_negative", {"point": list(exc.point), "value": exc.value}
        else:
            D = p.get("degree", max(abs(g.data[0]) for g in x.support()))
            verdict = "factored"
            certs = {"factors": [ser.element_to_json(y) for y in fr.factors], "degree": D,
                     "tol": max(tol, 1e-6) if x.n > 1 else tol}
            notes = {"method": fr.method, "residual": fr.residual, "flagged": fr.flagged, "note": fr.note}
    elif task in ("extend", "sigma-extend"):
        max_level = int(_opt(args, problem, "max_level", 5))
        if task == "extend":
            rep = extension_hierarchy(p["values"], max_level, st)
        else:
            rep = sigma_extension_check(p["toeplitz"], max_level, st)
        verdict, certs = rep.verdict, {"hierarchy": ser.hierarchy_json(rep)}
        notes = {"reason": rep.reason, "level": rep.verdict_level}
    elif task == "fr-probe":
        seed = int(_opt(args, problem, "seed", 0))
        rep = fr_gap_probe(p["sigma"], p.get("trials", 20), seed, p.get("candidates", ()), st)
        verdict = "witnesses_found" if rep.witnesses else "no_witness_found"
        certs = {"witnesses": [ser.witness_json(w) for w in rep.witnesses]}
        notes = {"statuses": dict(sorted(rep.statuses.items())), "seed": seed}
    elif task == "cp-probe":
        seed = int(_opt(args, problem, "seed", 0))
        try:
            rep = cp_order_probe(p["sigma1"], p["sigma2"], p.get("trials", 20), seed, st)
        except ValueError as exc:
            raise InputError(str(exc)) from None
        verdict = rep.verdict
        certs = {"witnesses": [{"element": ser.element_to_json(w.element),
                                "inside": ser._gram_json(w.inside),
                                "outside": ser._toeplitz_json(w.outside.toeplitz)} for w in rep.witnesses]}
        notes = {"statuses": dict(sorted(rep.statuses.items())), "seed": seed}
    else:  # pragma: no cover - guarded by parse_problem
        raise InputError(f"unknown task {task}")
    cert = ser.certificate_file(task, group, problem.raw_payload, verdict, certs,
                                ser.VerificationReport([]), {k: v for k, v in notes.items() if v not in ("", None)})
    cert["verification"] = ser.report_json(ser.verify_certificate_file(cert))
    return cert


def _passed(cert) -> bool:
    return all(c["passed"] for c in cert["verification"]) and cert["verdict"] in DEFINITE


# --------------------------------------------------------------------------
# output


def _emit(cert, args, out=sys.stdout):
    if args.out:
        ser.write_json(args.out, cert)
    if args.format == "json":
        out.write(ser.dumps(cert))
        return
    if cert.get("kind") == "bundle":
        out.write(f"bundle of {len(cert['items'])} certificates\n")
        for k, v in sorted(cert.get("notes", {}).items()):
            out.write(f"  {k}: {v}\n")
        return
    out.write(f"task: {cert['task']}\nverdict: {cert['verdict']}\n")
    for k, v in sorted(cert.get("notes", {}).items()):
        out.write(f"  {k}: {v}\n")
    for c in cert["verification"]:
        out.write(f"  [{'ok' if c['passed'] else 'FAIL'}] {c['name']} (slack {c['slack']:.3e})\n")
    if args.out:
        out.write(f"certificate written to {args.out}\n")


# --------------------------------------------------------------------------
# reproduce


def _reproduce(rid: str, args) -> tuple[dict, list]:
    """Returns the certificate (or bundle) and a list of failed expectations."""
    fails = []
    if rid == "c4-figure":
        C4 = cyclic_product(4)
        r = 2 ** -0.5
        coef = {0: 1.0, 1: r * np.exp(1j * math.pi / 4), 3: r * np.exp(-1j * math.pi / 4)}
        x = AlgebraElement.from_map(C4, {(k,): v for k, v in coef.items()}, 1)
        vals = evaluate_cyclic(x).real
        p = TrigPolynomial.scalar({0: 1.0, 1: coef[1], -1: coef[3]})
        tc = torus_nonneg_certificate(p)
        problem = ser.parse_problem(ser.problem_to_json(C4, "sos-check", {
            "element": ser.element_to_json(x), "sigma": [[0], [1]]}))
        cert = run_task(problem, args)
        cert.setdefault("notes", {}).update({"source": "cyclic counterexample: C4, Sigma = {0,1}", "cyclic_values": [round(float(v), 12) for v in vals],
                              "torus_min": tc.value, "torus_argmin": list(tc.point)})
        if np.abs(vals - [2, 0, 0, 2]).max() > 1e-10:
            fails.append(f"cyclic values {vals} != (2,0,0,2)")
        if tc.status != "found_negative" or abs(tc.value - (1 - math.sqrt(2))) > 1e-8:
            fails.append(f"torus minimum {tc.value} != 1 - sqrt(2)")
        if cert["verdict"] != OUTSIDE:
            fails.append(f"verdict {cert['verdict']} != outside")
        return cert, fails
    if rid == "z-interval":
        Z = free_abelian(1)
        D = args.degree
        rng = np.random.default_rng(args.seed if args.seed is not None else 0)
        items, worst = [], 0.0
        for _ in range(25):
            y = AlgebraElement.from_map(Z, {(k,): complex(*rng.normal(size=2)) for k in range(D + 1)}, 1)
            x = y * y.star()
            problem = ser.parse_problem(ser.problem_to_json(Z, "sos-factor", {
                "element": ser.element_to_json(x), "degree": D}))
            c = run_task(problem, args)
            worst = max(worst, c["notes"]["residual"])
            items.append(c)
        bundle = ser.bundle_file(items, {"source": "Fejer-Riesz on Z-intervals: one square suffices", "degree": D,
                                         "max_residual": worst})
        if worst > 1e-8:
            fails.append(f"max residual {worst:.3e} > 1e-8")
        return bundle, fails
    if rid == "five-point-pauli":
        Z2 = free_abelian(2)
        I, X, Zm = np.eye(2), np.array([[0.0, 1], [1, 0]]), np.diag([1.0, -1])
        data = {(0, 0): I, (1, 0): X, (-1, 0): X, (0, 1): Zm, (0, -1): Zm}
        u = PartialFunction.from_map(Z2, data)
        problem = ser.parse_problem(ser.problem_to_json(Z2, "extend", {
            "values": ser.values_to_json(u.values)}))
        cert = run_task(problem, args)
        ok, cl = is_psd_on_domain(u)
        kp = kernel_propagation_check(u, box(Z2, 1))
        cert.setdefault("notes", {}).update({"source": "five-point domain in Z^2 with Pauli data",
                              "psd_on_domain": ok, "clique_lambda_min": [c.lambda_min for c in cl],
                              "kernel_clash": kp.clash, "clash_at": kp.gamma.to_json() if kp.gamma else None})
        if not ok:
            fails.append("Pauli data not PSD on the domain")
        if cert["verdict"] != NOT_EXTENDABLE or cert["certificates"]["hierarchy"]["verdict_level"] != 1:
            fails.append(f"verdict {cert['verdict']} (level {cert['notes'].get('level')}) != not_extendable at 1")
        if not kp.clash:
            fails.append("kernel propagation found no clash")
        return cert, fails
    if rid == "sigma-013":
        Z = free_abelian(1)
        c = [1.0, 1.0, -1.0, -1.0]
        sig = make_sigma(Z, [0, 1, 3])
        T = toeplitz_lift({Z.element(k): c[abs(k)] for k in range(-3, 4)}, sig)
        lam_T = lambda_min(T.matrix)
        lift = toeplitz_lift({Z.element(k): c[abs(k)] for k in range(-3, 4)}, box(Z, 3)).matrix
        lam_lift = lambda_min(lift)
        problem = ser.parse_problem(ser.problem_to_json(Z, "sigma-extend", {
            "sigma": sig.to_json(), "entries": ser.values_to_json(T.entries)}))
        cert = run_task(problem, args)
        cert.setdefault("notes", {}).update({"source": "non-progression Sigma = {0,1,3} in Z", "lambda_min_T": lam_T,
                              "lambda_min_lift": lam_lift})
        if lam_T < -1e-10:
            fails.append(f"T not PSD (lambda_min {lam_T})")
        if lam_lift > -1:
            fails.append(f"4x4 lift lambda_min {lam_lift} > -1")
        if cert["verdict"] != NOT_EXTENDABLE or cert["notes"].get("level") != 3:
            fails.append(f"verdict {cert['verdict']} (level {cert['notes'].get('level')}) != not_extendable at 3")
        return cert, fails
    if rid == "rudin-gap-search":
        Z2 = free_abelian(2)
        sig = box(Z2, 2)
        problem = ser.parse_problem(ser.problem_to_json(Z2, "fr-probe", {
            "sigma": sig.to_json(), "trials": args.trials},
            {"seed": args.seed if args.seed is not None else 0}))
        cert = run_task(problem, args)
        cert.setdefault("notes", {})["source"] = "Z^2 box {0,1,2}^2 gap search (search mode)"
        return cert, fails
    raise InputError(f"unknown example id {rid!r}; known: {list(REPRODUCE_IDS)}")


# --------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("--max-level", dest="max_level", type=int, default=None)
    common.add_argument("--out", default=None, help="certificate file to write")
    ap = argparse.ArgumentParser(prog="groupsos", description="SOS, Fejer-Riesz and extension certificates")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("check", "factor", "extend", "probe", "verify"):
        sp = sub.add_parser(name, parents=[common])
        sp.add_argument("--in", dest="inp", required=True)
    rp = sub.add_parser("reproduce", parents=[common])
    rp.add_argument("id", choices=REPRODUCE_IDS)
    rp.add_argument("--degree", type=int, default=6)
    rp.add_argument("--trials", type=int, default=20)
    return ap


def run_command(argv=None, out=None) -> int:
    out = out or sys.stdout
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        if args.command == "verify":
            try:
                with open(args.inp, encoding="utf-8") as fh:
                    d = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise ser.ProblemError(str(exc)) from None
            try:
                rep = ser.verify_certificate_file(d)
            except (KeyError, TypeError, IndexError) as exc:
                raise ser.ProblemError(f"malformed certificate: missing or bad field {exc}") from None
            if args.format == "json":
                out.write(ser.dumps({"passed": rep.passed, "checks": ser.report_json(rep)}))
            else:
                for c in rep.checks:
                    out.write(f"[{'ok' if c.passed else 'FAIL'}] {c.name} (slack {c.slack:.3e})\n")
                out.write("verified\n" if rep.passed else "verification FAILED\n")
            return 0 if rep.passed else 1
        if args.command == "reproduce":
            cert, fails = _reproduce(args.id, args)
            if args.out is None:
                args.out = f"{args.id}.cert.json"
            _emit(cert, args, out)
            ok = ser.verify_certificate_file(cert).passed
            if not ok:
                fails.append("certificate failed verification")
            for f in fails:
                out.write(f"MISMATCH: {f}\n")
            return 0 if not fails else 1
        problem = ser.load_problem(args.inp)
        if problem.task not in COMMAND_TASKS[args.command]:
            raise InputError(f"task {problem.task!r} is not handled by '{args.command}' "
                             f"(expected one of {list(COMMAND_TASKS[args.command])})")
        for w in problem.warnings:
            sys.stderr.write(f"warning: {w}\n")
        cert = run_task(problem, args)
        _emit(cert, args, out)
        return 0 if _passed(cert) else 1
    except (ser.ProblemError, InputError) as exc:
        sys.stderr.write(f"input error: {exc}\n")
        return 2


def main() -> None:  # pragma: no cover
    sys.exit(run_command())

