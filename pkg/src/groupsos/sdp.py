"""Dense primal-dual interior point solver for small Hermitian SDPs.

Problems are stated in standard primal form over Hermitian blocks ``X_j``::

    sum_j Re Tr(A_ij X_j) = b_i,   X_j >= 0

and solved on the real symmetric embedding with an HKM search direction and
Mehrotra's predictor-corrector.  Two modes are offered:

* ``"margin"``: maximise ``t`` subject to ``X_j >= t I``.  The optimal dual
  vector of that problem is, after normalisation, a Farkas certificate
  ``sum_i y_i A_i <= 0, y.b >= 1`` whenever the optimal margin is negative.
* ``"minimize"``: minimise ``sum_j Re Tr(C_j X_j)``.

Statuses are only reported after an independent re-check of the claimed
object (feasible point or certificate); anything else is ``numerical_trouble``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .linalg import eigvalsh, real_embedding, real_embedding_inverse

log = logging.getLogger(__name__)

FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
OPTIMAL = "optimal"
TROUBLE = "numerical_trouble"


@dataclass
class SdpSettings:
    feas_tol: float = 1e-8
    margin_tol: float = 1e-7
    cert_tol: float = 1e-8
    gap_tol: float = 1e-8
    max_iter: int = 200
    max_block: int = 600
    presolve_tol: float = 1e-10
    debug: bool = False


@dataclass
class Constraint:
    coeffs: list  # one Hermitian matrix per block, or None for a zero block
    rhs: float


@dataclass
class SdpProblem:
    blocks: list[int]
    constraints: list[Constraint]
    objective: list | None = None
    mode: str = "margin"

    def __post_init__(self):
        if self.mode not in ("margin", "minimize"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "minimize" and self.objective is None:
            raise ValueError("minimize mode needs an objective")
        for i, c in enumerate(self.constraints):
            if len(c.coeffs) != len(self.blocks):
                raise ValueError(f"constraint {i}: expected {len(self.blocks)} blocks")
            for j, a in enumerate(c.coeffs):
                if a is not None and np.shape(a) != (self.blocks[j], self.blocks[j]):
                    raise ValueError(f"constraint {i}, block {j}: wrong shape {np.shape(a)}")

    def coeff(self, i: int, j: int) -> np.ndarray:
        a = self.constraints[i].coeffs[j]
        if a is None:
            return np.zeros((self.blocks[j], self.blocks[j]), dtype=complex)
        return np.asarray(a, dtype=complex)

    @property
    def rhs(self) -> np.ndarray:
        return np.array([c.rhs for c in self.constraints], dtype=float)

    def constraint_values(self, X) -> np.ndarray:
        out = np.zeros(len(self.constraints))
        for i, c in enumerate(self.constraints):
            for a, x in zip(c.coeffs, X):
                if a is not None:
                    out[i] += float(np.real(np.sum(np.asarray(a).T * x)))
        return out

    def dual_matrices(self, y) -> list[np.ndarray]:
        """``sum_i y_i A_ij`` for each block ``j``."""
        out = [np.zeros((n, n), dtype=complex) for n in self.blocks]
        for yi, c in zip(y, self.constraints):
            if yi == 0:
                continue
            for j, a in enumerate(c.coeffs):
                if a is not None:
                    out[j] += yi * np.asarray(a)
        return out


@dataclass
class InfeasibilityCertificate:
    y: np.ndarray


@dataclass
class SdpSolution:
    status: str
    X: list | None = None
    y: np.ndarray | None = None
    margin: float | None = None
    value: float | None = None
    certificate: InfeasibilityCertificate | None = None
    residuals: dict = field(default_factory=dict)
    diagnostic: str = ""
    iterations: int = 0


@dataclass
class Check:
    name: str
    passed: bool
    slack: float
    detail: str = ""


@dataclass
class VerificationReport:
    checks: list[Check]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]


# --------------------------------------------------------------------------
# independent verification (linear algebra primitives only)


def verify_certificate(p: SdpProblem, y, cert_tol: float = 1e-8) -> VerificationReport:
    y = np.asarray(y, dtype=float)
    checks = []
    if y.shape != (len(p.constraints),):
        return VerificationReport([Check("shape", False, float("nan"), "certificate length mismatch")])
    for j, m in enumerate(p.dual_matrices(y)):
        lam = float(eigvalsh((m + m.conj().T) / 2)[-1]) if m.size else 0.0
        checks.append(Check(f"block {j}: lambda_max(sum y_i A_i) <= cert_tol",
                            lam <= cert_tol, cert_tol - lam))
    yb = float(y @ p.rhs)
    checks.append(Check("y.b >= 1", yb >= 1 - 1e-12, yb - 1))
    return VerificationReport(checks)


def verify_solution(p: SdpProblem, s: SdpSolution, settings: SdpSettings | None = None) -> VerificationReport:
    st = settings or SdpSettings()
    if s.status == INFEASIBLE:
        if s.certificate is None:
            return VerificationReport([Check("certificate present", False, float("nan"))])
        return verify_certificate(p, s.certificate.y, st.cert_tol)
    if s.status in (FEASIBLE, OPTIMAL):
        checks = []
        if s.X is None:
            return VerificationReport([Check("primal point present", False, float("nan"))])
        norms = _row_norms(p)
        res = (p.constraint_values(s.X) - p.rhs) / norms
        worst = float(np.abs(res).max()) if res.size else 0.0
        checks.append(Check("constraints within feas_tol", worst <= st.feas_tol, st.feas_tol - worst))
        for j, x in enumerate(s.X):
            x = np.asarray(x)
            herm = float(np.abs(x - x.conj().T).max()) if x.size else 0.0
            lam = float(eigvalsh((x + x.conj().T) / 2)[0]) if x.size else 0.0
            if s.status == FEASIBLE:
                target = (s.margin or 0.0) - st.feas_tol
                checks.append(Check(f"block {j}: lambda_min >= margin - feas_tol", lam >= target, lam - target))
            else:
                checks.append(Check(f"block {j}: PSD", lam >= -st.feas_tol, lam + st.feas_tol))
            checks.append(Check(f"block {j}: Hermitian", herm <= 1e-10, 1e-10 - herm))
        if s.status == FEASIBLE:
            m = s.margin if s.margin is not None else -np.inf
            checks.append(Check("margin >= margin_tol", m >= st.margin_tol, m - st.margin_tol))
        else:
            obj = sum(float(np.real(np.sum(np.asarray(c).T * x))) for c, x in zip(p.objective, s.X))
            checks.append(Check("reported value", abs(obj - s.value) <= 1e-6 * (1 + abs(obj)),
                                1e-6 * (1 + abs(obj)) - abs(obj - s.value)))
        return VerificationReport(checks)
    return VerificationReport([Check("definite status", False, float("nan"), s.diagnostic)])


def _row_norms(p: SdpProblem) -> np.ndarray:
    out = np.ones(len(p.constraints))
    for i, c in enumerate(p.constraints):
        sq = sum(float(np.sum(np.abs(a) ** 2)) for a in c.coeffs if a is not None)
        out[i] = max(np.sqrt(sq), 1e-300)
    return out


# --------------------------------------------------------------------------
# real-embedded data


class _RealData:
    """Constraint data as real symmetric blocks with unit-norm rows."""

    def __init__(self, p: SdpProblem):
        self.p = p
        data = [c.coeffs for c in p.constraints]
        arrays = [a for row in data for a in row if a is not None]
        if p.objective is not None:
            arrays += [c for c in p.objective if c is not None]
        self.is_real = all(np.abs(np.imag(np.asarray(a))).max(initial=0.0) == 0 for a in arrays)
        self.sizes = [n if self.is_real else 2 * n for n in p.blocks]
        m = len(p.constraints)
        self.A = [np.zeros((m, r, r)) for r in self.sizes]
        for i, row in enumerate(data):
            for j, a in enumerate(row):
                if a is not None:
                    self.A[j][i] = self._embed(a)
        self.b = p.rhs.copy()
        self.C = None
        if p.objective is not None:
            self.C = [self._embed(c) if c is not None else np.zeros((r, r))
                      for c, r in zip(p.objective, self.sizes)]
        self.norms = np.sqrt(sum((a.reshape(m, -1) ** 2).sum(axis=1) for a in self.A)) if m else np.zeros(0)

    def _embed(self, a):
        a = np.asarray(a, dtype=complex)
        if self.is_real:
            return np.real(a).copy()
        return real_embedding(a) / 2

    def to_complex(self, Y):
        if self.is_real:
            return [np.asarray(y, dtype=complex) for y in Y]
        return [real_embedding_inverse(y) for y in Y]

    def flat(self, rows=None) -> np.ndarray:
        m = len(self.b)
        mats = [a.reshape(m, -1) for a in self.A]
        out = np.hstack(mats) if mats else np.zeros((m, 0))
        return out if rows is None else out[rows]


def _presolve(rd: _RealData, tol: float):
    """Drop dependent rows by modified Gram-Schmidt in row order.

    Returns ``(kept, certificate_or_None)``; an inconsistent dependent row
    yields an exact Farkas vector from the elimination coefficients.
    """
    m = len(rd.b)
    if m == 0:
        return [], None
    Af = rd.flat()
    Q = np.zeros((0, Af.shape[1]))
    kept: list[int] = []
    for i in range(m):
        ni = rd.norms[i]
        if ni > 1e-300:
            v = Af[i] / ni
            for _ in range(2):
                v = v - Q.T @ (Q @ v)
            r = np.linalg.norm(v)
            if r > tol:
                Q = np.vstack([Q, v / r])
                kept.append(i)
                continue
            c = np.linalg.lstsq(Af[kept].T, Af[i], rcond=None)[0] if kept else np.zeros(0)
        else:
            c = np.zeros(len(kept))
        delta = rd.b[i] - (c @ rd.b[kept] if kept else 0.0)
        if abs(delta) > 1e3 * tol * (1 + abs(rd.b[i])) * max(1.0, ni):
            y = np.zeros(m)
            y[i] = 1.0
            y[kept] -= c
            return kept, y / delta
    return kept, None


# --------------------------------------------------------------------------
# interior point core


def _sym(a):
    return (a + np.swapaxes(a, -1, -2)) / 2


def _max_step(X, dX) -> float:
    try:
        L = np.linalg.cholesky(X)
        Li = sla.solve_triangular(L, np.eye(len(X)), lower=True)
        W = Li @ dX @ Li.T
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(X)
        w = np.maximum(w, 1e-14 * max(1.0, w.max()))
        Li = (v / np.sqrt(w)).T
        W = Li @ dX @ Li.T
    lam = np.linalg.eigvalsh(_sym(W))[0]
    return np.inf if lam >= 0 else -1.0 / lam


def _ipm(A, b, C, F, cf, tol, max_iter, free_cap=None):
    """HKM predictor-corrector for ``min <C,X> + cf.f  s.t.  A(X) + F f = b``.

    ``A`` is a list of ``(m, r, r)`` arrays, ``F`` an ``(m, k)`` array of free
    variable columns.  Returns a dict with the final iterate.
    """
    m = len(b)
    sizes = [a.shape[1] for a in A]
    k = F.shape[1]
    N = sum(sizes)
    Aflat = [a.reshape(m, -1) for a in A]

    def Aop(X):
        return sum(af @ x.ravel() for af, x in zip(Aflat, X)) if A else np.zeros(m)

    def ATop(y):
        return [(y @ af).reshape(r, r) for af, r in zip(Aflat, sizes)]

    bnorm = 1 + np.linalg.norm(b)
    cnorm = 1 + np.sqrt(sum(np.sum(c ** 2) for c in C) + np.sum(cf ** 2))
    xi = max(1.0, np.abs(b).max(initial=0.0) * 10)
    eta = max(1.0, np.sqrt(sum(np.sum(c ** 2) for c in C)) / np.sqrt(max(N, 1)) * 10)
    X = [xi * np.eye(r) for r in sizes]
    S = [eta * np.eye(r) for r in sizes]
    y = np.zeros(m)
    f = np.zeros(k)
    status = "max_iter"
    it = 0
    res = {}
    stalls = 0
    for it in range(1, max_iter + 1):
        rp = b - Aop(X) - F @ f
        ATy = ATop(y)
        Rd = [c - s - a for c, s, a in zip(C, S, ATy)]
        rf = cf - F.T @ y
        mu = sum(np.sum(x * s) for x, s in zip(X, S)) / N
        pobj = sum(np.sum(c * x) for c, x in zip(C, X)) + cf @ f
        dobj = b @ y
        relp = np.linalg.norm(rp) / bnorm
        reld = np.sqrt(sum(np.sum(r ** 2) for r in Rd) + np.sum(rf ** 2)) / cnorm
        gap = abs(pobj - dobj) / (1 + abs(pobj) + abs(dobj))
        res = {"primal": float(relp), "dual": float(reld), "gap": float(gap), "mu": float(mu)}
        if relp < tol and reld < tol and gap < tol:
            status = "converged"
            break
        if free_cap is not None and k and f[0] > free_cap and relp < tol:
            status = "unbounded"
            break
        big = max(max(np.abs(x).max() for x in X), np.abs(y).max(initial=0.0), np.abs(f).max(initial=0.0))
        if big > 1e13 or not np.isfinite(big):
            status = "diverged"
            break
        Sinv = [np.linalg.inv(s) for s in S]
        Sinv = [_sym(s) for s in Sinv]
        M = np.zeros((m, m))
        for a, af, x, si in zip(A, Aflat, X, Sinv):
            G = x @ a @ si
            M += af @ G.reshape(m, -1).T
        M = _sym(M)
        K = np.zeros((m + k, m + k))
        K[:m, :m] = M
        K[:m, m:] = F
        K[m:, :m] = F.T
        K[:m, :m] += 1e-14 * np.trace(M) / max(m, 1) * np.eye(m)
        try:
            lu = sla.lu_factor(K, check_finite=True)
        except (ValueError, np.linalg.LinAlgError):
            status = "singular"
            break

        def direction(sigma_mu, corr):
            D0 = [sigma_mu * si - x - _sym(x @ r @ si) for si, x, r in zip(Sinv, X, Rd)]
            if corr is not None:
                D0 = [d - c for d, c in zip(D0, corr)]
            rhs = np.concatenate([rp - Aop(D0), rf])
            sol = sla.lu_solve(lu, rhs)
            dy, df = sol[:m], sol[m:]
            ATdy = ATop(dy)
            dS = [r - a for r, a in zip(Rd, ATdy)]
            dX = [sigma_mu * si - x - _sym(x @ ds @ si) for si, x, ds in zip(Sinv, X, dS)]
            if corr is not None:
                dX = [d - c for d, c in zip(dX, corr)]
            return dX, dS, dy, df

        dXa, dSa, _, _ = direction(0.0, None)
        ap = min(1.0, min(_max_step(x, d) for x, d in zip(X, dXa)))
        ad = min(1.0, min(_max_step(s, d) for s, d in zip(S, dSa)))
        mu_aff = sum(np.sum((x + ap * dx) * (s + ad * ds)) for x, dx, s, ds in zip(X, dXa, S, dSa)) / N
        sigma = min(1.0, max(0.0, mu_aff / mu)) ** 3 if mu > 0 else 0.0
        corr = [_sym(dx @ ds @ si) for dx, ds, si in zip(dXa, dSa, Sinv)]
        dX, dS, dy, df = direction(sigma * mu, corr)
        ap = min(1.0, 0.98 * min(_max_step(x, d) for x, d in zip(X, dX)))
        ad = min(1.0, 0.98 * min(_max_step(s, d) for s, d in zip(S, dS)))
        if max(ap, ad) < 1e-9:
            stalls += 1
            if stalls > 3:
                status = "stalled"
                break
        X = [_sym(x + ap * d) for x, d in zip(X, dX)]
        f = f + ap * df
        y = y + ad * dy
        S = [_sym(s + ad * d) for s, d in zip(S, dS)]
    return {"X": X, "S": S, "y": y, "f": f, "status": status, "iterations": it, "residuals": res}


# --------------------------------------------------------------------------
# driver


def _check_sizes(p: SdpProblem, st: SdpSettings):
    for n in p.blocks:
        if n > st.max_block:
            raise ValueError(f"block dimension {n} exceeds cap {st.max_block}")


def _project_affine(p: SdpProblem, X, kept):
    """Least-squares correction of ``X`` onto the affine constraint set."""
    if not kept:
        return X
    vecs = []
    for i in kept:
        vecs.append(np.concatenate([p.coeff(i, j).ravel() for j in range(len(p.blocks))]))
    V = np.array(vecs)
    G = np.real(V.conj() @ V.T)
    for _ in range(2):
        r = p.constraint_values(X)[kept] - p.rhs[kept]
        try:
            z = np.linalg.solve(G, r)
        except np.linalg.LinAlgError:
            z = np.linalg.lstsq(G, r, rcond=None)[0]
        corr = (z @ V.conj()).conj()
        out, pos = [], 0
        for x, n in zip(X, p.blocks):
            d = corr[pos:pos + n * n].reshape(n, n)
            pos += n * n
            d = (d + d.conj().T) / 2
            out.append(x - d)
        X = out
    return X


def _polish_certificate(p: SdpProblem, y):
    """Shift ``y`` along a direction with ``sum v_i A_i = I`` when one exists,
    pushing ``sum y_i A_i`` to be negative semidefinite."""
    M = p.dual_matrices(y)
    lam = max(float(eigvalsh((m + m.conj().T) / 2)[-1]) for m in M if m.size)
    if lam <= 0:
        return y
    V = np.array([np.concatenate([p.coeff(i, j).ravel() for j in range(len(p.blocks))])
                  for i in range(len(p.constraints))])
    target = np.concatenate([np.eye(n).ravel() for n in p.blocks]).astype(complex)
    Vr = np.hstack([V.real, V.imag])
    tr = np.concatenate([target.real, target.imag])
    v = np.linalg.lstsq(Vr.T, tr, rcond=None)[0]
    if np.abs(Vr.T @ v - tr).max() > 1e-10:
        return y
    y2 = y - 2 * lam * v
    yb = y2 @ p.rhs
    if yb <= 0:
        return y
    return y2 / yb


def solve(p: SdpProblem, settings: SdpSettings | None = None) -> SdpSolution:
    st = settings or SdpSettings()
    _check_sizes(p, st)
    rd = _RealData(p)
    kept, early = _presolve(rd, st.presolve_tol)
    if early is not None:
        cert = InfeasibilityCertificate(early)
        return SdpSolution(INFEASIBLE, y=early, certificate=cert,
                           diagnostic="inconsistent dependent constraints")
    if p.mode == "margin":
        return _solve_margin(p, rd, kept, st)
    return _solve_minimize(p, rd, kept, st)


def _scaled(rd: _RealData, kept):
    norms = rd.norms[kept]
    A = [a[kept] / norms[:, None, None] for a in rd.A]
    b = rd.b[kept] / norms
    return A, b, norms


def _solve_margin(p, rd, kept, st) -> SdpSolution:
    m = len(p.constraints)
    A, b, norms = _scaled(rd, kept)
    sb = max(1.0, np.abs(b).max(initial=0.0))
    tau = sum(np.trace(a, axis1=1, axis2=2) for a in A) if A else np.zeros(len(kept))
    C = [np.zeros((r, r)) for r in rd.sizes]
    out = _ipm(A, b / sb, C, tau.reshape(-1, 1), np.array([-1.0]), st.gap_tol * 0.1, st.max_iter,
               free_cap=1e4)
    t = float(out["f"][0]) * sb
    Y = [z * sb + t * np.eye(len(z)) for z in out["X"]]
    X = _project_affine(p, rd.to_complex(Y), kept)
    y = np.zeros(m)
    y[kept] = out["y"] / norms
    margin = min(float(eigvalsh(x)[0]) for x in X) if X else 0.0
    base = dict(iterations=out["iterations"], residuals=dict(out["residuals"], ipm=out["status"]))

    cand = SdpSolution(FEASIBLE, X=X, y=y, margin=margin, **base)
    if margin >= st.margin_tol and verify_solution(p, cand, st).passed:
        if st.debug:
            _assert_weak_duality(p, X, y, st)
        return cand
    yb = float(y @ p.rhs)
    if yb > 0:
        ycert = _polish_certificate(p, y / yb)
        if verify_certificate(p, ycert, st.cert_tol).passed:
            return SdpSolution(INFEASIBLE, X=X, y=y, margin=margin,
                               certificate=InfeasibilityCertificate(ycert), **base)
    diag = (f"margin {margin:.3e} below margin_tol and no verifying certificate "
            f"(ipm status {out['status']})")
    return SdpSolution(TROUBLE, X=X, y=y, margin=margin, diagnostic=diag, **base)


def _solve_minimize(p, rd, kept, st) -> SdpSolution:
    m = len(p.constraints)
    A, b, norms = _scaled(rd, kept)
    sb = max(1.0, np.abs(b).max(initial=0.0))
    sc = max(1.0, max(np.abs(c).max(initial=0.0) for c in rd.C))
    C = [c / sc for c in rd.C]
    out = _ipm(A, b / sb, C, np.zeros((len(kept), 0)), np.zeros(0), st.gap_tol * 0.1, st.max_iter)
    X = rd.to_complex([x * sb for x in out["X"]])
    y = np.zeros(m)
    y[kept] = out["y"] * sc / norms
    base = dict(iterations=out["iterations"], residuals=dict(out["residuals"], ipm=out["status"]))
    if out["status"] == "converged":
        X = _project_affine(p, X, kept)
        value = sum(float(np.real(np.sum(np.asarray(c).T * x))) for c, x in zip(p.objective, X))
        sol = SdpSolution(OPTIMAL, X=X, y=y, value=value, **base)
        if verify_solution(p, sol, st).passed:
            return sol
    # classify through the margin problem
    mp = SdpProblem(p.blocks, p.constraints, mode="margin")
    ms = _solve_margin(mp, _RealData(mp), kept, st)
    if ms.status == INFEASIBLE:
        return ms
    diag = f"minimize did not converge (ipm status {out['status']}); feasibility margin status {ms.status}"
    return SdpSolution(TROUBLE, X=X, y=y, diagnostic=diag, **base)


def _assert_weak_duality(p, X, y, st):
    yb = float(y @ p.rhs)
    if yb > 0 and verify_certificate(p, y / yb, st.cert_tol).passed:
        raise AssertionError("feasible point and verifying Farkas certificate for the same instance")


def lmi_problem(F0: np.ndarray, Fs: list[np.ndarray]) -> SdpProblem:
    """Farkas-side problem for the LMI ``F0 + sum_i w_i F_i >= t I``.

    Minimising ``Re Tr(F0 X)`` over ``X >= 0`` with ``Re Tr(F_i X) = 0`` and
    ``Tr X = 1`` has optimal value equal to the best margin ``t``; the dual
    vector gives ``w = -y[:-1]``, and an optimal ``X`` with negative value
    certifies that no ``w`` makes the pencil PSD.
    """
    n = F0.shape[0]
    cons = [Constraint([np.asarray(F, dtype=complex)], 0.0) for F in Fs]
    cons.append(Constraint([np.eye(n, dtype=complex)], 1.0))
    return SdpProblem([n], cons, objective=[np.asarray(F0, dtype=complex)], mode="minimize")
