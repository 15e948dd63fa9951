"""JSON problem and certificate files.

Complex matrices are stored as ``{rows, cols, real, imag}``; group elements as
integer arrays (coordinates, or signed generator indices for free groups).
Certificates are written with sorted keys so repeated runs give identical
bytes, and every certificate can be re-checked here with linear algebra only.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .algebra import AlgebraElement, HermitianError, ToeplitzMatrix, sum_of_squares, toeplitz_lift
from .extension import (CliqueReport, HierarchyReport, LevelResult, PartialFunction,
                        UosDualCertificate, NOT_EXTENDABLE)
from .fejer_riesz import GapWitness, TorusCertificate
from .groups import GroupDescriptor, GroupError, SubsetSigma, free_reduce, validate_positivity_domain
from .linalg import lambda_min, matrix_from_json, matrix_to_json
from .sdp import Check, VerificationReport
from .sos import (INSIDE, OUTSIDE, DualToeplitzCertificate, GramCertificate, _verify_uos_inside)

FORMAT_VERSION = 1

TASKS = ("sos-check", "sos-factor", "toeplitz-check", "uos-check", "extend", "sigma-extend",
         "fr-probe", "cp-probe")

_PAYLOAD_FIELDS = {
    "sos-check": ({"element", "sigma"}, set()),
    "sos-factor": ({"element"}, {"degree"}),
    "toeplitz-check": ({"sigma", "entries"}, set()),
    "uos-check": ({"element", "domain"}, set()),
    "extend": ({"values"}, set()),
    "sigma-extend": ({"sigma", "entries"}, set()),
    "fr-probe": ({"sigma"}, {"trials", "candidates"}),
    "cp-probe": ({"sigma1", "sigma2"}, {"trials"}),
}
_SETTINGS_FIELDS = {"tol", "seed", "max_level"}


class ProblemError(ValueError):
    """Malformed problem or certificate file; ``field`` locates the problem."""

    def __init__(self, msg, field: str = ""):
        super().__init__(f"{field}: {msg}" if field else msg)
        self.field = field


# --------------------------------------------------------------------------
# primitives


def coeff_from_json(v, n: int | None = None, where: str = "") -> np.ndarray:
    """Accepts a number, a ``[re, im]`` pair (scalars) or a matrix object."""
    try:
        if isinstance(v, dict):
            a = matrix_from_json(v)
        elif isinstance(v, (int, float)):
            a = np.array([[complex(v)]])
        elif isinstance(v, list) and len(v) == 2 and all(isinstance(t, (int, float)) for t in v):
            a = np.array([[complex(v[0], v[1])]])
        else:
            raise ValueError("expected a number, [re, im] or {rows, cols, real, imag}")
    except (KeyError, ValueError, TypeError) as exc:
        raise ProblemError(str(exc), where) from None
    if n is not None and a.shape != (n, n):
        raise ProblemError(f"coefficient has shape {a.shape}, expected {(n, n)}", where)
    return a


def element_to_json(x: AlgebraElement) -> dict:
    return {"n": x.n, "terms": [{"g": g.to_json(), "coeff": matrix_to_json(a)} for g, a in x.coeffs.items()]}


def element_from_json(group: GroupDescriptor, d, where: str = "element", warnings=None) -> AlgebraElement:
    if not isinstance(d, dict) or "terms" not in d:
        raise ProblemError("expected {n, terms: [{g, coeff}]}", where)
    _reject_unknown(d, {"n", "terms"}, where)
    n = int(d.get("n", 1))
    data = {}
    for i, t in enumerate(d["terms"]):
        w = f"{where}.terms[{i}]"
        _reject_unknown(t, {"g", "coeff"}, w)
        g = _group_element(group, t.get("g"), w + ".g", warnings)
        data[g] = data.get(g, 0) + coeff_from_json(t.get("coeff"), n, w + ".coeff")
    return AlgebraElement.from_map(group, data, n)


def values_to_json(values: dict) -> list:
    from .groups import sort_elements
    return [{"g": g.to_json(), "value": matrix_to_json(values[g])} for g in sort_elements(values)]


def values_from_json(group, lst, n=None, where="values", warnings=None) -> dict:
    if not isinstance(lst, list):
        raise ProblemError("expected a list of {g, value}", where)
    out = {}
    for i, t in enumerate(lst):
        w = f"{where}[{i}]"
        _reject_unknown(t, {"g", "value"}, w)
        g = _group_element(group, t.get("g"), w + ".g", warnings)
        out[g] = coeff_from_json(t.get("value"), n, w + ".value")
        n = n or out[g].shape[0]
    return out


def sigma_from_json(group, lst, where="sigma", warnings=None) -> SubsetSigma:
    if not isinstance(lst, list) or not lst:
        raise ProblemError("expected a nonempty list of group elements", where)
    elems = [_group_element(group, g, f"{where}[{i}]", warnings) for i, g in enumerate(lst)]
    try:
        return SubsetSigma(group, tuple(elems))
    except GroupError as exc:
        raise ProblemError(str(exc), where) from None


def _group_element(group, raw, where, warnings=None):
    if raw is None:
        raise ProblemError("missing group element", where)
    if isinstance(raw, int):
        raw = [raw]
    if not isinstance(raw, list) or not all(isinstance(v, int) for v in raw):
        raise ProblemError("group elements are integer arrays", where)
    if group.kind == "free" and warnings is not None and tuple(free_reduce(raw)) != tuple(raw):
        warnings.append(f"{where}: word {raw} reduced to {list(free_reduce(raw))}")
    try:
        return group.element(raw)
    except GroupError as exc:
        raise ProblemError(str(exc), where) from None


def _reject_unknown(d, allowed, where):
    if not isinstance(d, dict):
        raise ProblemError("expected an object", where)
    extra = sorted(set(d) - set(allowed))
    if extra:
        raise ProblemError(f"unknown field(s) {extra}", where)


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1, allow_nan=True) + "\n"


def write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(obj))


# --------------------------------------------------------------------------
# problem files


@dataclass
class ProblemFile:
    format_version: int
    group: GroupDescriptor
    task: str
    payload: dict  # parsed objects
    settings: dict
    raw_payload: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)


def parse_problem(d: dict) -> ProblemFile:
    _reject_unknown(d, {"format_version", "group", "task", "payload", "settings"}, "<root>")
    if d.get("format_version") != FORMAT_VERSION:
        raise ProblemError(f"unsupported format_version {d.get('format_version')!r}", "format_version")
    task = d.get("task")
    if task not in TASKS:
        raise ProblemError(f"unknown task {task!r}; expected one of {list(TASKS)}", "task")
    try:
        group = GroupDescriptor.from_json(d.get("group") or {})
    except (GroupError, KeyError, TypeError, ValueError) as exc:
        raise ProblemError(str(exc), "group") from None
    settings = d.get("settings", {}) or {}
    _reject_unknown(settings, _SETTINGS_FIELDS, "settings")
    raw = d.get("payload")
    required, optional = _PAYLOAD_FIELDS[task]
    _reject_unknown(raw, required | optional, "payload")
    missing = sorted(required - set(raw))
    if missing:
        raise ProblemError(f"missing field(s) {missing}", "payload")
    warnings: list = []
    p: dict = {}
    try:
        if "element" in raw:
            p["element"] = element_from_json(group, raw["element"], "payload.element", warnings)
            p["element"].require_hermitian()
        for key in ("sigma", "sigma1", "sigma2"):
            if key in raw:
                p[key] = sigma_from_json(group, raw[key], f"payload.{key}", warnings)
        if "domain" in raw:
            elems = [_group_element(group, g, f"payload.domain[{i}]", warnings) for i, g in enumerate(raw["domain"])]
            try:
                p["domain"] = validate_positivity_domain(group, elems)
            except GroupError as exc:
                raise ProblemError(str(exc), "payload.domain") from None
        if "values" in raw:
            vals = values_from_json(group, raw["values"], None, "payload.values", warnings)
            p["values"] = PartialFunction.from_map(group, vals)
        if "entries" in raw:
            vals = values_from_json(group, raw["entries"], None, "payload.entries", warnings)
            p["toeplitz"] = toeplitz_lift(vals, p["sigma"], hermitian=True)
        if "candidates" in raw:
            p["candidates"] = [element_from_json(group, c, f"payload.candidates[{i}]", warnings)
                               for i, c in enumerate(raw["candidates"])]
        for key in ("degree", "trials"):
            if key in raw:
                if not isinstance(raw[key], int) or raw[key] < 0:
                    raise ProblemError("expected a nonnegative integer", f"payload.{key}")
                p[key] = raw[key]
    except HermitianError as exc:
        raise ProblemError(str(exc), "payload") from None
    except (GroupError, ValueError) as exc:
        if isinstance(exc, ProblemError):
            raise
        raise ProblemError(str(exc), "payload") from None
    return ProblemFile(FORMAT_VERSION, group, task, p, dict(settings), raw, warnings)


def load_problem(path) -> ProblemFile:
    try:
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ProblemError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    except OSError as exc:
        raise ProblemError(str(exc)) from None
    return parse_problem(d)


def problem_to_json(group: GroupDescriptor, task: str, payload: dict, settings: dict | None = None) -> dict:
    return {"format_version": FORMAT_VERSION, "group": group.to_json(), "task": task,
            "payload": payload, "settings": settings or {}}


# --------------------------------------------------------------------------
# certificate encoding


def _gram_json(c: GramCertificate) -> dict:
    return {"sigma": c.sigma.to_json(), "n": c.n, "gram": matrix_to_json(c.gram),
            "factors": [element_to_json(y) for y in c.factors]}


def _gram_from(group, d) -> GramCertificate:
    sig = sigma_from_json(group, d["sigma"], "gram.sigma")
    n = int(d["n"])
    factors = [element_from_json(group, f, "gram.factors") for f in d.get("factors", [])]
    return GramCertificate(sig, n, matrix_from_json(d["gram"]), factors)


def _toeplitz_json(T: ToeplitzMatrix) -> dict:
    return {"sigma": T.sigma.to_json(), "n": T.n, "entries": values_to_json(T.entries)}


def _toeplitz_from(group, d) -> ToeplitzMatrix:
    sig = sigma_from_json(group, d["sigma"], "toeplitz.sigma")
    return ToeplitzMatrix(sig, int(d["n"]), values_from_json(group, d["entries"], int(d["n"])))


def membership_certificates(res) -> dict:
    if res.status == INSIDE:
        if res.certificates:
            return {"grams": [_gram_json(c) for c in res.certificates]}
        return {"gram": _gram_json(res.certificate)}
    if res.status == OUTSIDE:
        c = res.certificate
        if c is None:
            return {"symbolic": res.diagnostic}
        if isinstance(c, UosDualCertificate):
            return {"dual_functional": {"sigmas": [s.to_json() for s in c.sigmas], "n": c.n,
                                        "values": values_to_json(c.values)}}
        return {"dual_toeplitz": _toeplitz_json(c.toeplitz)}
    return {}


def hierarchy_json(rep: HierarchyReport) -> dict:
    levels = []
    for lr in rep.levels:
        d = {"level": lr.level, "sigma": lr.sigma.to_json(), "status": lr.status, "margin": lr.margin}
        if lr.extension is not None:
            d["extension"] = values_to_json(lr.extension)
        if lr.certificate is not None:
            d["farkas"] = matrix_to_json(lr.certificate)
        if lr.diagnostic:
            d["diagnostic"] = lr.diagnostic
        levels.append(d)
    cliques = [{"sigma": c.sigma.to_json(), "lambda_min": c.lambda_min, "passed": c.passed} for c in rep.cliques]
    return {"levels": levels, "pinned": values_to_json(rep.pinned), "n": rep.n, "cliques": cliques,
            "verdict_level": rep.verdict_level}


def hierarchy_from(group, d, verdict) -> HierarchyReport:
    n = int(d["n"])
    rep = HierarchyReport(verdict=verdict, verdict_level=d.get("verdict_level"),
                          pinned=values_from_json(group, d["pinned"], n, "pinned"), n=n, group=group)
    for c in d.get("cliques", []):
        sig = sigma_from_json(group, c["sigma"], "cliques.sigma")
        lam = lambda_min(toeplitz_lift(rep.pinned, sig, n).matrix)  # recomputed, not trusted
        rep.cliques.append(CliqueReport(sig, lam, lam >= -1e-8))
    for ld in d["levels"]:
        lr = LevelResult(int(ld["level"]), sigma_from_json(group, ld["sigma"], "levels.sigma"), ld["status"],
                         ld.get("margin"))
        if "extension" in ld:
            lr.extension = values_from_json(group, ld["extension"], n, "levels.extension")
        if "farkas" in ld:
            lr.certificate = matrix_from_json(ld["farkas"])
        rep.levels.append(lr)
    return rep


def _torus_json(c: TorusCertificate) -> dict:
    return {"status": c.status, "lower_bound": c.lower_bound, "point": list(c.point) if c.point else None,
            "value": c.value, "spacing": c.spacing, "lipschitz": c.lipschitz, "grid_min": c.grid_min,
            "method": c.method, "gram": matrix_to_json(c.gram) if c.gram is not None else None}


def witness_json(w: GapWitness) -> dict:
    d = {"element": element_to_json(w.element), "outside": _toeplitz_json(w.outside.toeplitz)}
    if isinstance(w.positivity, TorusCertificate):
        d["torus"] = _torus_json(w.positivity)
    else:
        d["value_table"] = matrix_to_json(np.asarray(w.positivity).reshape(1, -1))
    return d


def report_json(report: VerificationReport) -> list:
    return [{"name": c.name, "passed": bool(c.passed), "slack": float(c.slack)} for c in report.checks]


def certificate_file(task: str, group: GroupDescriptor, payload, verdict: str, certificates: dict,
                     report: VerificationReport, notes: dict | None = None) -> dict:
    d = {"format_version": FORMAT_VERSION, "kind": "certificate", "task": task, "group": group.to_json(),
         "input": payload, "verdict": verdict, "certificates": certificates,
         "verification": report_json(report)}
    if notes:
        d["notes"] = notes
    return d


def bundle_file(items: list, notes: dict | None = None) -> dict:
    d = {"format_version": FORMAT_VERSION, "kind": "bundle", "items": items}
    if notes:
        d["notes"] = notes
    return d


# --------------------------------------------------------------------------
# offline verification (no solver)


def verify_certificate_file(d: dict) -> VerificationReport:
    if d.get("kind") == "bundle":
        checks = []
        for i, item in enumerate(d.get("items", [])):
            checks += [Check(f"item {i}: {c.name}", c.passed, c.slack, c.detail)
                       for c in verify_certificate_file(item).checks]
        return VerificationReport(checks or [Check("nonempty bundle", False, -1.0)])
    if d.get("kind") != "certificate":
        raise ProblemError("not a certificate file", "kind")
    group = GroupDescriptor.from_json(d["group"])
    task, verdict, certs = d["task"], d["verdict"], d.get("certificates", {})
    problem = parse_problem({"format_version": FORMAT_VERSION, "group": d["group"], "task": task,
                             "payload": d["input"]})
    p = problem.payload
    if task in ("sos-check", "uos-check"):
        x = p["element"]
        if verdict == INSIDE:
            if "grams" in certs:
                return _verify_uos_inside(x, [_gram_from(group, g) for g in certs["grams"]])
            return _gram_from(group, certs["gram"]).verify(x)
        if verdict == OUTSIDE:
            if "symbolic" in certs:
                sup = set(x.support())
                allowed = _allowed_support(p, task)
                return VerificationReport([Check("support outside allowed set", not sup <= allowed, 0.0)])
            if "dual_functional" in certs:
                df = certs["dual_functional"]
                cert = UosDualCertificate([sigma_from_json(group, s) for s in df["sigmas"]], int(df["n"]),
                                          values_from_json(group, df["values"], int(df["n"])), float("nan"))
                from .groups import enumerate_maximal_sigmas
                expect = [tuple(s) for s in enumerate_maximal_sigmas(p["domain"])]
                same = sorted(map(tuple, cert.sigmas)) == sorted(expect)
                rep = cert.verify(x)
                return VerificationReport([Check("classes match domain", same, 0.0)] + rep.checks)
            T = _toeplitz_from(group, certs["dual_toeplitz"])
            same = tuple(T.sigma) == tuple(p["sigma"])
            rep = DualToeplitzCertificate(T, float("nan"), float("nan")).verify(x)
            return VerificationReport([Check("sigma matches input", same, 0.0)] + rep.checks)
        return VerificationReport([Check("definite verdict", False, float("nan"), verdict)])
    if task == "sos-factor":
        x = p["element"]
        if verdict == "symbol_negative":
            from .fejer_riesz import TrigPolynomial
            v = TrigPolynomial.from_element(x).value(np.array(certs["point"]))
            return VerificationReport([Check("symbol negative at point", v < 0, -v)])
        ys = [element_from_json(group, f, "factors") for f in certs.get("factors", [])]
        if not ys:
            return VerificationReport([Check("factors present", False, float("nan"), verdict)])
        N = int(certs["degree"])
        dev = sum_of_squares(ys, group, x.n).max_abs_diff(x)
        tol = float(certs.get("tol", 1e-6))
        sup_ok = all(0 <= g.data[0] <= N for y in ys for g in y.support())
        return VerificationReport([Check("sum y y* = x", dev <= tol, tol - dev),
                                   Check("factors supported on {0..N}", sup_ok, 0.0)])
    if task == "toeplitz-check":
        lam = lambda_min(p["toeplitz"].matrix)
        claimed = verdict == "psd"
        return VerificationReport([Check("PSD verdict matches lambda_min", claimed == (lam >= -1e-8), lam)])
    if task in ("extend", "sigma-extend"):
        rep = hierarchy_from(group, certs["hierarchy"], verdict)
        pinned = p["values"].values if task == "extend" else p["toeplitz"].entries
        same = set(pinned) == set(rep.pinned) and all(
            np.abs(pinned[g] - rep.pinned[g]).max() <= 1e-14 for g in pinned)
        checks = [Check("pinned data matches input", same, 0.0)]
        vr = rep.verify()
        checks += vr.checks
        if verdict == NOT_EXTENDABLE and rep.verdict_level is None and not vr.checks:
            checks.append(Check("failing clique present", False, float("nan")))
        if verdict not in (NOT_EXTENDABLE, "extendable", "extendable_up_to"):
            checks.append(Check("definite verdict", False, float("nan"), verdict))
        return VerificationReport(checks)
    if task == "fr-probe":
        checks = []
        for i, wd in enumerate(certs.get("witnesses", [])):
            w = _witness_from(group, wd)
            same = tuple(w.outside.toeplitz.sigma) == tuple(p["sigma"])
            checks.append(Check(f"witness {i}: sigma matches", same, 0.0))
            checks.append(Check(f"witness {i}: both certificates verify", w.verify(), 0.0))
        return VerificationReport(checks or [Check("no witnesses to check", True, 0.0)])
    if task == "cp-probe":
        checks = []
        for i, wd in enumerate(certs.get("witnesses", [])):
            x = element_from_json(group, wd["element"])
            g = _gram_from(group, wd["inside"])
            T = _toeplitz_from(group, wd["outside"])
            checks.append(Check(f"witness {i}: sigmas match", tuple(g.sigma) == tuple(p["sigma1"]) and
                                tuple(T.sigma) == tuple(p["sigma2"]), 0.0))
            ok1 = g.verify(x).passed
            ok2 = DualToeplitzCertificate(T, 0.0, 0.0).verify(x).passed
            checks.append(Check(f"witness {i}: inside over Sigma1", ok1, 0.0))
            checks.append(Check(f"witness {i}: outside over Sigma2", ok2, 0.0))
        return VerificationReport(checks or [Check("no witnesses to check", True, 0.0)])
    raise ProblemError(f"unknown task {task!r}", "task")


def _allowed_support(p, task):
    if task == "uos-check":
        return set(p["domain"].elements)
    from .groups import difference_set
    return set(difference_set(p["sigma"])[0])


def _witness_from(group, d) -> GapWitness:
    x = element_from_json(group, d["element"])
    T = _toeplitz_from(group, d["outside"])
    if "torus" in d:
        t = d["torus"]
        pos = TorusCertificate(t["status"], lower_bound=t["lower_bound"],
                               point=tuple(t["point"]) if t["point"] else None, value=t["value"],
                               spacing=t["spacing"], lipschitz=t["lipschitz"], grid_min=t["grid_min"],
                               method=t["method"],
                               gram=matrix_from_json(t["gram"]) if t.get("gram") else None)
    else:
        pos = matrix_from_json(d["value_table"]).reshape(group.moduli)
    return GapWitness(x, pos, DualToeplitzCertificate(T, float("nan"), float("nan")))
