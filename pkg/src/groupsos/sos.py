"""Sums-of-squares membership over a finite ``Sigma`` with certificates.

An element ``x`` lies in the cone ``Q_n(Sigma)`` iff it has a positive
semidefinite block Gram matrix ``(A_{s,t})`` over ``Sigma`` whose difference
marginals reproduce its coefficients.  Non-membership is witnessed by a PSD
Toeplitz matrix pairing negatively with ``x``.  Both kinds of certificate are
re-checked here with plain linear algebra, never with solver internals.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .algebra import (AlgebraElement, ToeplitzMatrix, marginals, pairing,
                      sum_of_squares, toeplitz_from_matrix)
from .groups import GroupDescriptor, SubsetSigma, difference_set, sort_elements
from .linalg import IndefiniteMatrix, lambda_min, psd_factor
from .sdp import (INFEASIBLE, Check, Constraint, SdpProblem,
                  SdpSettings, VerificationReport, solve)

INSIDE = "inside"
OUTSIDE = "outside"
BOUNDARY = "boundary"

GRAM_TOL = 1e-8
FACTOR_TOL = 1e-6


@dataclass
class GramCertificate:
    sigma: SubsetSigma
    n: int
    gram: np.ndarray
    factors: list = field(default_factory=list)
    residual: float = float("nan")

    def verify(self, x: AlgebraElement, tol: float = GRAM_TOL, factor_tol: float = FACTOR_TOL,
               check_factors: bool = True) -> VerificationReport:
        G = np.asarray(self.gram)
        checks = []
        herm = float(np.abs(G - G.conj().T).max())
        checks.append(Check("gram Hermitian", herm <= 1e-10, 1e-10 - herm))
        lam = lambda_min((G + G.conj().T) / 2)
        checks.append(Check("gram PSD", lam >= -tol, lam + tol))
        marg = marginals(G, self.sigma, self.n)
        dev = marg.max_abs_diff(x)
        checks.append(Check("marginals reproduce x", dev <= tol, tol - dev))
        if check_factors and self.factors:
            total = sum_of_squares(self.factors, self.sigma.group, self.n)
            fdev = total.max_abs_diff(x)
            checks.append(Check("sum y_i y_i* = x", fdev <= factor_tol, factor_tol - fdev))
            sig = set(self.sigma.elements)
            outside = [g for y in self.factors for g in y.support() if g not in sig]
            checks.append(Check("factors supported on Sigma", not outside, 0.0 if not outside else -1.0))
            bound = min(len(self.sigma) * self.n, self.n ** 2 * len(difference_set(self.sigma)[0]))
            checks.append(Check("factor count bound", len(self.factors) <= bound, bound - len(self.factors)))
        return VerificationReport(checks)


@dataclass
class DualToeplitzCertificate:
    toeplitz: ToeplitzMatrix
    pairing_value: float
    margin: float

    def verify(self, x: AlgebraElement, tol: float = GRAM_TOL) -> VerificationReport:
        T = self.toeplitz
        M = T.matrix
        checks = []
        lam = lambda_min((M + M.conj().T) / 2)
        checks.append(Check("toeplitz PSD", lam >= -tol, lam + tol))
        herm = float(np.abs(M - M.conj().T).max())
        checks.append(Check("toeplitz Hermitian", herm <= 1e-10, 1e-10 - herm))
        val = pairing(T, x)
        checks.append(Check("pairing real", abs(val.imag) <= 1e-9 * (1 + abs(val)), 0.0))
        checks.append(Check("pairing < 0", val.real < 0, -val.real))
        # any Gram G for x has Tr G = Tr x_e, so a PSD defect of size eta moves
        # the pairing by at most eta * Tr x_e
        e = x.group.identity()
        slack = -val.real - max(0.0, -lam) * abs(np.trace(x.coeff(e)).real)
        checks.append(Check("pairing robust to PSD defect", slack > 0, slack))
        return VerificationReport(checks)


@dataclass
class MembershipResult:
    status: str
    certificate: object = None
    margin: float | None = None
    diagnostic: str = ""
    certificates: list = field(default_factory=list)  # one Gram per class (uos)

    @property
    def inside(self) -> bool:
        return self.status == INSIDE

    @property
    def outside(self) -> bool:
        return self.status == OUTSIDE


# --------------------------------------------------------------------------
# problem construction


def _half(diffs):
    return [g for g in diffs if g.sort_key() <= g.inv().sort_key()]


def gram_problem(x: AlgebraElement, sigmas: list[SubsetSigma], targets=None):
    """Joint Gram SDP: one PSD block per ``Sigma`` with summed marginals = x.

    ``targets`` defaults to the union of the difference sets; returns the
    problem and the list of ``(gamma, a, b, part)`` row labels.
    """
    n = x.n
    pair_maps = [difference_set(s)[1] for s in sigmas]
    if targets is None:
        targets = sort_elements(set().union(*[set(p) for p in pair_maps]))
    blocks = [len(s) * n for s in sigmas]
    cons, labels = [], []
    for g in _half(targets):
        self_inv = g == g.inv()
        xg = x.coeff(g)
        for a, b in itertools.product(range(n), range(n)):
            if self_inv and a > b:
                continue
            for part in ("re", "im"):
                if part == "im" and self_inv and a == b:
                    continue
                coeffs = []
                for sig, pm in zip(sigmas, pair_maps):
                    plist = pm.get(g, [])
                    if not plist:
                        coeffs.append(None)
                        continue
                    A = np.zeros((len(sig) * n, len(sig) * n), dtype=complex)
                    for s, t in plist:
                        p = sig.index(s) * n + a
                        q = sig.index(t) * n + b
                        if part == "re":
                            A[q, p] += 0.5
                            A[p, q] += 0.5
                        else:
                            A[q, p] += -0.5j
                            A[p, q] += 0.5j
                    coeffs.append(A)
                rhs = xg[a, b].real if part == "re" else xg[a, b].imag
                cons.append(Constraint(coeffs, float(rhs)))
                labels.append((g, a, b, part))
    return SdpProblem(blocks, cons, mode="margin"), labels


def _support_violation(x: AlgebraElement, diffs) -> list:
    ds = set(diffs)
    return [g for g in x.support() if g not in ds]


# --------------------------------------------------------------------------
# factor extraction


def extract_factors(gram, sigma: SubsetSigma, n: int, x: AlgebraElement | None = None,
                    rank_tol: float = 1e-8) -> GramCertificate:
    """Factors ``y_r = sum_s B_{s,r} delta_s`` from ``gram = B B*``.

    Each column of ``B`` gives one factor whose ``n x n`` coefficients carry
    that column in their first column, so the factor count is the numerical
    rank of the Gram matrix.
    """
    G = np.asarray(gram, dtype=complex)
    G = (G + G.conj().T) / 2
    try:
        fac = psd_factor(G, rank_tol)
    except IndefiniteMatrix:
        w, v = np.linalg.eigh(G)
        if w[0] < -GRAM_TOL * max(1.0, abs(w[-1])):
            raise
        fac = psd_factor((v * np.maximum(w, 0)) @ v.conj().T, rank_tol)
    factors = []
    for r in range(fac.rank):
        col = fac.B[:, r]
        data = {}
        for i, s in enumerate(sigma):
            c = np.zeros((n, n), dtype=complex)
            c[:, 0] = col[i * n:(i + 1) * n]
            data[s] = c
        factors.append(AlgebraElement.from_map(sigma.group, data, n))
    target = x if x is not None else marginals(G, sigma, n)
    total = sum_of_squares(factors, sigma.group, n)
    return GramCertificate(sigma, n, G, factors, total.max_abs_diff(target))


# --------------------------------------------------------------------------
# membership


def _dual_toeplitz(W: np.ndarray, sigma: SubsetSigma, n: int, x: AlgebraElement):
    """Turn ``W = sum y_i A_i`` (negative semidefinite, Toeplitz) into a
    normalised PSD Toeplitz matrix in the pairing convention."""
    T = np.conj(-W)
    scale = np.trace(T).real / T.shape[0]
    if scale <= 0:
        return None
    T = T / scale
    tm = toeplitz_from_matrix(T, sigma, n)
    val = pairing(tm, x).real
    return DualToeplitzCertificate(tm, val, -val)


def sos_membership(x: AlgebraElement, sigma: SubsetSigma, settings: SdpSettings | None = None,
                   extract: bool = True) -> MembershipResult:
    st = settings or SdpSettings()
    x.require_hermitian()
    diffs, _ = difference_set(sigma)
    bad = _support_violation(x, diffs)
    if bad:
        return MembershipResult(OUTSIDE, None, diagnostic=f"support of x not inside Sigma Sigma^-1: {bad}")
    prob, _ = gram_problem(x, [sigma], diffs)
    sol = solve(prob, st)
    n = x.n
    if sol.status == INFEASIBLE:
        W = prob.dual_matrices(sol.certificate.y)[0]
        cert = _dual_toeplitz(W, sigma, n, x)
        if cert is not None and cert.verify(x).passed:
            return MembershipResult(OUTSIDE, cert, margin=sol.margin)
    if sol.X is not None and sol.status != INFEASIBLE:
        try:
            cert = extract_factors(sol.X[0], sigma, n, x) if extract else GramCertificate(sigma, n, sol.X[0])
        except IndefiniteMatrix:
            cert = None
        if cert is not None and cert.verify(x).passed:
            return MembershipResult(INSIDE, cert, margin=sol.margin)
    return MembershipResult(BOUNDARY, None, margin=sol.margin,
                            diagnostic=sol.diagnostic or f"solver status {sol.status}, no verifying certificate")


def verify_membership(x: AlgebraElement, result: MembershipResult) -> VerificationReport:
    if result.status == INSIDE:
        if result.certificates:
            return _verify_uos_inside(x, result.certificates)
        return result.certificate.verify(x)
    if result.status == OUTSIDE:
        if result.certificate is None:
            return VerificationReport([Check("symbolic support reason", bool(result.diagnostic), 0.0)])
        return result.certificate.verify(x)
    return VerificationReport([Check("definite status", False, float("nan"), result.diagnostic)])


def _verify_uos_inside(x, certs) -> VerificationReport:
    checks = []
    total = AlgebraElement(x.group, x.n, {})
    for k, c in enumerate(certs):
        lam = lambda_min(c.gram)
        checks.append(Check(f"class {k}: gram PSD", lam >= -GRAM_TOL, lam + GRAM_TOL))
        total = total + marginals(c.gram, c.sigma, c.n)
    dev = total.max_abs_diff(x)
    checks.append(Check("summed marginals reproduce x", dev <= GRAM_TOL, GRAM_TOL - dev))
    return VerificationReport(checks)


# --------------------------------------------------------------------------
# products and transport


def product_group(g1: GroupDescriptor, g2: GroupDescriptor) -> GroupDescriptor:
    if not (g1.is_abelian and g2.is_abelian):
        raise ValueError("products are supported for abelian groups")
    return GroupDescriptor("abelian", moduli=g1.moduli + g2.moduli)


def product_sigma(s1: SubsetSigma, s2: SubsetSigma) -> SubsetSigma:
    G = product_group(s1.group, s2.group)
    return SubsetSigma(G, tuple(G.element(a.data + b.data) for a in s1 for b in s2))


def product_element(x: AlgebraElement, y: AlgebraElement) -> AlgebraElement:
    G = product_group(x.group, y.group)
    data = {G.element(g.data + h.data): np.kron(a, b) for g, a in x.coeffs.items() for h, b in y.coeffs.items()}
    return AlgebraElement.from_map(G, data, x.n * y.n)


def transport_gram(cert: GramCertificate, g) -> GramCertificate:
    """Relabel a Gram certificate over ``Sigma`` to one over ``Sigma g``:
    the block at ``(s g, t g)`` is the old block at ``(s, t)``."""
    return GramCertificate(cert.sigma.translate(g), cert.n, cert.gram.copy(),
                           [AlgebraElement.from_map(y.group, {s * g: a for s, a in y.coeffs.items()}, y.n)
                            for y in cert.factors], cert.residual)
