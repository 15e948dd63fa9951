"""Partially defined positive semi-definite functions on positivity domains:
the cone ``U_n(Delta)``, box-level extension hierarchies and related probes."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import (AlgebraElement, HermitianError, ToeplitzMatrix, marginals,
                      toeplitz_from_matrix, toeplitz_lift)
from .groups import (GroupDescriptor, GroupElement, PositivityDomain, SubsetSigma, box,
                     difference_set, enumerate_maximal_sigmas, sort_elements,
                     validate_positivity_domain)
from .linalg import PSD_TOL, IndefiniteMatrix, lambda_min
from .sdp import (INFEASIBLE, OPTIMAL, Check, SdpSettings, VerificationReport, lmi_problem,
                  solve)
from .sos import (BOUNDARY, GRAM_TOL, INSIDE, OUTSIDE, GramCertificate, MembershipResult,
                  _verify_uos_inside, extract_factors, gram_problem, sos_membership)

NOT_EXTENDABLE = "not_extendable"
EXTENDABLE_UP_TO = "extendable_up_to"
EXTENDABLE = "extendable"
UNDECIDED = "undecided"

LEVEL_FEASIBLE = "feasible"
LEVEL_INFEASIBLE = "infeasible"
LEVEL_TROUBLE = "numerical_trouble"


@dataclass
class PartialFunction:
    """``u : Delta -> M_n`` with ``u(g^-1) = u(g)*``."""

    domain: PositivityDomain
    n: int
    values: dict  # GroupElement -> (n, n) complex

    @classmethod
    def from_map(cls, group: GroupDescriptor, data, n: int | None = None, tol: float = 1e-12):
        vals = {}
        for g, v in dict(data).items():
            a = np.asarray(v, dtype=complex)
            vals[group.element(g)] = a.reshape(1, 1) if a.ndim == 0 else a
        if n is None:
            n = next(iter(vals.values())).shape[0]
        domain = validate_positivity_domain(group, vals)
        for g in sort_elements(vals):
            a, b = vals[g], vals[g.inv()]
            if a.shape != (n, n):
                raise ValueError(f"value at {g!r} has shape {a.shape}, expected {(n, n)}")
            if np.abs(b - a.conj().T).max() > tol * (1 + np.abs(a).max()):
                h = max(g, g.inv())
                raise HermitianError(f"u(g^-1) != u(g)* at gamma={h!r}", h)
        return cls(domain, n, {g: vals[g] for g in sort_elements(vals)})

    @property
    def group(self) -> GroupDescriptor:
        return self.domain.group


@dataclass
class CliqueReport:
    sigma: SubsetSigma
    lambda_min: float
    passed: bool


def is_psd_on_domain(u: PartialFunction, tol: float = PSD_TOL) -> tuple[bool, list[CliqueReport]]:
    """Check every maximal ``Sigma`` class of the domain: is the lift PSD?"""
    reports = []
    for sig in enumerate_maximal_sigmas(u.domain):
        lam = lambda_min(toeplitz_lift(u.values, sig, u.n).matrix)
        reports.append(CliqueReport(sig, lam, lam >= -tol))
    return all(r.passed for r in reports), reports


# --------------------------------------------------------------------------
# U_n(Delta)


@dataclass
class UosDualCertificate:
    """Functional ``w`` on the domain, PSD on every clique class, with
    ``sum_gamma sum_ab w(gamma)_ab x_gamma,ab < 0``."""

    sigmas: list
    n: int
    values: dict  # GroupElement -> (n, n)
    pairing_value: float

    def verify(self, x: AlgebraElement, tol: float = GRAM_TOL) -> VerificationReport:
        checks = []
        worst = np.inf
        for k, sig in enumerate(self.sigmas):
            M = toeplitz_lift(self.values, sig, self.n).matrix
            lam = lambda_min((M + M.conj().T) / 2)
            worst = min(worst, lam)
            checks.append(Check(f"class {k}: lift PSD", lam >= -tol, lam + tol))
        val = 0j
        for g, a in x.coeffs.items():
            if g not in self.values:
                checks.append(Check("support inside domain", False, -1.0, repr(g)))
                return VerificationReport(checks)
            val += np.sum(self.values[g] * a)
        checks.append(Check("pairing < 0", val.real < 0, -val.real))
        e = x.group.identity()
        slack = -val.real - max(0.0, -worst) * abs(np.trace(x.coeff(e)).real)
        checks.append(Check("pairing robust to PSD defect", slack > 0, slack))
        return VerificationReport(checks)


def uos_membership(x: AlgebraElement, domain: PositivityDomain, settings: SdpSettings | None = None,
                   extract: bool = True) -> MembershipResult:
    """Membership of ``x`` in the sum of the cones ``Q_n(Sigma)`` over the
    maximal ``Sigma`` classes of the domain (one joint Gram SDP)."""
    st = settings or SdpSettings()
    x.require_hermitian()
    bad = [g for g in x.support() if g not in domain]
    if bad:
        return MembershipResult(OUTSIDE, None, diagnostic=f"support of x not inside the domain: {bad}")
    sigmas = enumerate_maximal_sigmas(domain)
    prob, _ = gram_problem(x, sigmas, domain.sorted())
    sol = solve(prob, st)
    n = x.n
    if sol.status == INFEASIBLE:
        Ws = prob.dual_matrices(sol.certificate.y)
        values = {}
        for sig, W in zip(sigmas, Ws):
            T = np.conj(-W)
            for g, a in toeplitz_from_matrix(T, sig, n).entries.items():
                values.setdefault(g, a)
        scale = np.trace(values[x.group.identity()]).real / n
        if scale > 0:
            values = {g: a / scale for g, a in values.items()}
            val = sum(np.sum(values[g] * a) for g, a in x.coeffs.items()).real
            cert = UosDualCertificate(sigmas, n, values, float(val))
            if cert.verify(x).passed:
                return MembershipResult(OUTSIDE, cert, margin=sol.margin)
    if sol.X is not None and sol.status != INFEASIBLE:
        certs = []
        for sig, G in zip(sigmas, sol.X):
            try:
                certs.append(extract_factors(G, sig, n) if extract else GramCertificate(sig, n, G))
            except IndefiniteMatrix:
                certs = None
                break
        if certs is not None and _verify_uos_inside(x, certs).passed:
            return MembershipResult(INSIDE, None, margin=sol.margin, certificates=certs)
    return MembershipResult(BOUNDARY, None, margin=sol.margin,
                            diagnostic=sol.diagnostic or f"solver status {sol.status}, no verifying certificate")


# --------------------------------------------------------------------------
# extension hierarchy


@dataclass
class LevelProblem:
    """Lift of partially pinned values to a box: ``M(w) = F0 + sum_i w_i F_i``."""

    sigma: SubsetSigma
    n: int
    pinned: dict
    params: list  # (gamma, a, b, part)

    @classmethod
    def build(cls, sigma: SubsetSigma, n: int, pinned: dict) -> LevelProblem:
        diffs, _ = difference_set(sigma)
        params = []
        for g in diffs:
            if g in pinned or g.sort_key() > g.inv().sort_key():
                continue
            selfinv = g == g.inv()
            for a in range(n):
                for b in range(n):
                    if selfinv and a > b:
                        continue
                    params.append((g, a, b, "re"))
                    if not (selfinv and a == b):
                        params.append((g, a, b, "im"))
        return cls(sigma, n, dict(pinned), params)

    def _basis(self, k):
        g, a, b, part = self.params[k]
        E = np.zeros((self.n, self.n), dtype=complex)
        E[a, b] = 1.0 if part == "re" else 1j
        if g == g.inv():
            E = E + E.conj().T if a != b else E
        return g, E

    def values(self, w) -> dict:
        """Full function on the box differences for parameter vector ``w``."""
        vals = {g: np.asarray(v, dtype=complex) for g, v in self.pinned.items()}
        for k, wk in enumerate(w):
            g, E = self._basis(k)
            vals[g] = vals.get(g, 0) + wk * E
            if g != g.inv():
                vals[g.inv()] = vals.get(g.inv(), 0) + wk * E.conj().T
        diffs, _ = difference_set(self.sigma)
        zero = np.zeros((self.n, self.n), dtype=complex)
        return {g: vals.get(g, zero) for g in diffs}

    def lift(self, values) -> np.ndarray:
        return toeplitz_lift(values, self.sigma, self.n).matrix

    def matrices(self):
        F0 = self.lift(self.values(np.zeros(len(self.params))))
        Fs = []
        for k in range(len(self.params)):
            w = np.zeros(len(self.params))
            w[k] = 1.0
            Fs.append(self.lift(self.values(w)) - F0)
        return F0, Fs

    def entry_bound(self) -> float:
        e = self.sigma.group.identity()
        return float(np.real(np.diag(self.pinned[e])).max())

    def verify_certificate(self, W) -> VerificationReport:
        """``W`` certifies that no completion is PSD if
        ``<F0,W> + B sum_i |<F_i,W>| + max(0, -lambda_min W) Tr F0 < 0``,
        where ``B`` bounds every entry of a PSD completion."""
        W = np.asarray(W, dtype=complex)
        W = (W + W.conj().T) / 2
        F0, Fs = self.matrices()
        v0 = float(np.real(np.sum(F0.T * W)))
        leak = sum(abs(float(np.real(np.sum(F.T * W)))) for F in Fs)
        lam = lambda_min(W)
        bound = v0 + self.entry_bound() * leak + max(0.0, -lam) * float(np.trace(F0).real)
        return VerificationReport([
            Check("<F0,W> < 0", v0 < 0, -v0),
            Check("robust infeasibility bound < 0", bound < 0, -bound,
                  f"<F0,W>={v0:.3e}, leak={leak:.3e}, lambda_min(W)={lam:.3e}"),
        ])

    def point_check(self, values, tol: float = PSD_TOL) -> tuple[bool, float]:
        """Does an explicit function on the box differences agree with the
        pinned data and give a PSD lift?"""
        for g, v in self.pinned.items():
            if np.abs(np.asarray(values[g]) - v).max() > 1e-12 * (1 + np.abs(v).max()):
                return False, float("nan")
        lam = lambda_min(self.lift(values))
        return lam >= -tol, lam


@dataclass
class LevelResult:
    level: int
    sigma: SubsetSigma
    status: str
    margin: float | None = None
    extension: dict | None = None
    certificate: np.ndarray | None = None
    diagnostic: str = ""


@dataclass
class HierarchyReport:
    levels: list = field(default_factory=list)
    verdict: str = UNDECIDED
    verdict_level: int | None = None
    reason: str = ""
    pinned: dict = field(default_factory=dict)
    n: int = 1
    group: GroupDescriptor | None = None
    cliques: list = field(default_factory=list)

    def level_problem(self, lr: LevelResult) -> LevelProblem:
        return LevelProblem.build(lr.sigma, self.n, self.pinned)

    def verify(self) -> VerificationReport:
        checks = []
        for lr in self.levels:
            lp = self.level_problem(lr)
            if lr.status == LEVEL_INFEASIBLE:
                rep = lp.verify_certificate(lr.certificate)
                checks += [Check(f"level {lr.level}: {c.name}", c.passed, c.slack, c.detail) for c in rep.checks]
            elif lr.status == LEVEL_FEASIBLE:
                ok, lam = lp.point_check(lr.extension)
                checks.append(Check(f"level {lr.level}: extension PSD", ok, lam + PSD_TOL))
        if self.verdict == NOT_EXTENDABLE and self.verdict_level is None:
            checks += [Check(f"clique {k}: lift not PSD", not c.passed, -c.lambda_min)
                       for k, c in enumerate(self.cliques) if not c.passed]
        if self.verdict == NOT_EXTENDABLE and self.verdict_level is not None:
            checks.append(Check("certificate at verdict level",
                                any(l.level == self.verdict_level and l.status == LEVEL_INFEASIBLE
                                    for l in self.levels), 0.0))
        return VerificationReport(checks)


def _start_level(group: GroupDescriptor, pinned) -> int:
    inf = [i for i, m in enumerate(group.moduli) if m == 0]
    return max([abs(g.data[i]) for g in pinned for i in inf] + [1 if inf else 0])


def solve_level(group, n, pinned, level, settings: SdpSettings | None = None) -> LevelResult:
    st = settings or SdpSettings()
    sig = box(group, level)
    lp = LevelProblem.build(sig, n, pinned)
    F0, Fs = lp.matrices()
    sol = solve(lmi_problem(F0, Fs), st)
    if sol.status != OPTIMAL:
        return LevelResult(level, sig, LEVEL_TROUBLE, diagnostic=sol.diagnostic or sol.status)
    t = float(sol.value)
    if t < -st.margin_tol:
        W = sol.X[0]
        if lp.verify_certificate(W).passed:
            return LevelResult(level, sig, LEVEL_INFEASIBLE, margin=t, certificate=W)
        return LevelResult(level, sig, LEVEL_TROUBLE, margin=t,
                           diagnostic="negative optimum but certificate failed verification")
    w = -np.asarray(sol.y[:-1], dtype=float)
    vals = lp.values(w)
    ok, lam = lp.point_check(vals)
    if ok:
        return LevelResult(level, sig, LEVEL_FEASIBLE, margin=lam, extension=vals)
    return LevelResult(level, sig, LEVEL_TROUBLE, margin=t,
                       diagnostic=f"optimum {t:.3e} near zero; completion lambda_min {lam:.3e}")


def _hierarchy(group, n, pinned, max_level, settings) -> HierarchyReport:
    if not group.is_abelian:
        raise ValueError("extension hierarchies are implemented for abelian groups")
    report = HierarchyReport(pinned=dict(pinned), n=n, group=group)
    if group.is_finite:
        lr = solve_level(group, n, pinned, 0, settings)
        report.levels.append(lr)
        if lr.status == LEVEL_INFEASIBLE:
            report.verdict, report.verdict_level = NOT_EXTENDABLE, 0
        elif lr.status == LEVEL_FEASIBLE:
            report.verdict, report.verdict_level = EXTENDABLE, 0
        else:
            report.reason = lr.diagnostic
        return report
    start = _start_level(group, pinned)
    trouble = False
    for level in range(start, max(start, max_level) + 1):
        lr = solve_level(group, n, pinned, level, settings)
        report.levels.append(lr)
        if lr.status == LEVEL_INFEASIBLE:
            report.verdict, report.verdict_level = NOT_EXTENDABLE, level
            return report
        trouble |= lr.status == LEVEL_TROUBLE
    if trouble:
        report.reason = "; ".join(f"level {l.level}: {l.diagnostic}" for l in report.levels
                                  if l.status == LEVEL_TROUBLE)
    else:
        report.verdict, report.verdict_level = EXTENDABLE_UP_TO, report.levels[-1].level
    return report


def extension_hierarchy(u: PartialFunction, max_level: int = 5,
                        settings: SdpSettings | None = None) -> HierarchyReport:
    """Box-level search for a PSD function extending ``u``.

    An infeasible level is a proof of non-extendability; on a finite group the
    single level covers the whole group and is exact.
    """
    ok, cliques = is_psd_on_domain(u)
    if not ok:
        bad = [c for c in cliques if not c.passed]
        return HierarchyReport(verdict=NOT_EXTENDABLE, reason=f"not PSD on the domain: clique {list(bad[0].sigma)} "
                               f"has lambda_min {bad[0].lambda_min:.3e}", pinned=dict(u.values), n=u.n,
                               group=u.group, cliques=cliques)
    return _hierarchy(u.group, u.n, u.values, max_level, settings)


def sigma_extension_check(T: ToeplitzMatrix, max_level: int = 5,
                          settings: SdpSettings | None = None) -> HierarchyReport:
    """Is the PSD Toeplitz matrix ``T`` the restriction of a PSD function?"""
    group = T.sigma.group
    lam = lambda_min(T.matrix)
    if lam < -PSD_TOL:
        return HierarchyReport(verdict=NOT_EXTENDABLE, reason=f"T is not PSD (lambda_min {lam:.3e})",
                               pinned=dict(T.entries), n=T.n, group=group,
                               cliques=[CliqueReport(T.sigma, lam, False)])
    return _hierarchy(group, T.n, T.entries, max_level, settings)


# --------------------------------------------------------------------------
# independent checks and probes


@dataclass
class PropagationResult:
    clash: bool
    gamma: GroupElement | None = None
    values: tuple = ()
    forced: dict = field(default_factory=dict)


def kernel_propagation_check(u: PartialFunction, sigma: SubsetSigma, tol: float = 1e-9,
                             max_rounds: int = 10) -> PropagationResult:
    """Propagate values forced by singular 2x2-block principal submatrices.

    If ``[[u(e), u(g)], [u(g)*, u(e)]]`` (rows ``s, t`` with ``g = s t^-1``)
    has kernel ``(K_s; K_t)`` then any PSD completion satisfies
    ``u(r s^-1) K_s + u(r t^-1) K_t = 0`` for every ``r``.  A value forced in
    two different ways is a clash, which rules out every PSD completion.
    """
    n = u.n
    e = u.group.identity()
    known = {g: np.asarray(v, dtype=complex) for g, v in u.values.items()}
    forced = {}
    elems = list(sigma)
    for _ in range(max_rounds):
        changed = False
        for s in elems:
            for t in elems:
                g = s * t.inv()
                if s == t or g not in known:
                    continue
                P = np.block([[known[e], known[g]], [known[g].conj().T, known[e]]])
                w, v = np.linalg.eigh(P)
                K = v[:, np.abs(w) < tol * (1 + np.abs(w).max())]
                if K.shape[1] != n:
                    continue
                Ks, Kt = K[:n], K[n:]
                if abs(np.linalg.det(Ks)) < 1e-8:
                    continue
                R = -Kt @ np.linalg.inv(Ks)
                for r in elems:
                    a, b = r * s.inv(), r * t.inv()
                    if b not in known:
                        continue
                    val = known[b] @ R
                    if a in known:
                        if np.abs(known[a] - val).max() > 1e-7:
                            return PropagationResult(True, a, (known[a], val), forced)
                    else:
                        known[a] = val
                        known[a.inv()] = val.conj().T
                        forced[a] = val
                        changed = True
        if not changed:
            break
    return PropagationResult(False, None, (), forced)


@dataclass
class CpWitness:
    element: AlgebraElement
    inside: GramCertificate
    outside: object


@dataclass
class CpProbeResult:
    verdict: str  # "map_not_cp" | "no_witness_found"
    witnesses: list = field(default_factory=list)
    statuses: dict = field(default_factory=dict)


def cp_order_probe(sigma1: SubsetSigma, sigma2: SubsetSigma, trials: int = 20, seed: int = 0,
                   settings: SdpSettings | None = None) -> CpProbeResult:
    """Sample ``x`` in ``Q_1(Sigma1)`` and test membership in ``Q_1(Sigma2)``."""
    d1, _ = difference_set(sigma1)
    d2, _ = difference_set(sigma2)
    if not set(d1) <= set(d2):
        raise ValueError("need Sigma1 Sigma1^-1 inside Sigma2 Sigma2^-1")
    rng = np.random.default_rng(seed)
    m = len(sigma1)
    out = CpProbeResult("no_witness_found")
    for k in range(trials):
        r = 1 + k % m
        C = rng.normal(size=(m, r)) + 1j * rng.normal(size=(m, r))
        G = C @ C.conj().T
        x = marginals(G, sigma1, 1)
        mem = sos_membership(x, sigma2, settings, extract=False)
        out.statuses[mem.status] = out.statuses.get(mem.status, 0) + 1
        if mem.status == OUTSIDE and mem.certificate is not None:
            out.witnesses.append(CpWitness(x, GramCertificate(sigma1, 1, G), mem.certificate))
    if out.witnesses:
        out.verdict = "map_not_cp"
    return out


def dual_pairing_value(values: dict, x: AlgebraElement) -> float:
    """``sum_gamma sum_ab w(gamma)_ab x_gamma,ab`` for a functional on the domain."""
    return float(np.real(sum(np.sum(values[g] * a) for g, a in x.coeffs.items())))
