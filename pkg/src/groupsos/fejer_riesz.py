"""Spectral factorisation and positivity tests on Z-intervals, cyclic groups
and the torus."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .algebra import AlgebraElement, marginals
from .groups import GroupDescriptor, SubsetSigma, difference_set, free_abelian, make_sigma
from .linalg import lambda_min
from .sdp import SdpSettings
from .sos import OUTSIDE, sos_membership

CERTIFIED = "certified_nonneg"
NEGATIVE = "found_negative"
INCONCLUSIVE = "inconclusive"


class SymbolNegative(ValueError):
    def __init__(self, msg, point=None, value=None):
        super().__init__(msg)
        self.point = point
        self.value = value


@dataclass
class TrigPolynomial:
    """``sum_k c_k e^{i k.theta}`` with ``c_{-k} = c_k*``; ``theta`` in radians."""

    d: int
    n: int
    coeffs: dict  # tuple[int, ...] -> (n, n) complex

    @classmethod
    def from_element(cls, x: AlgebraElement) -> TrigPolynomial:
        if not (x.group.is_abelian and all(m == 0 for m in x.group.moduli)):
            raise ValueError("trigonometric polynomials live on Z^d")
        return cls(x.group.dim, x.n, {g.data: a for g, a in x.coeffs.items()})

    @classmethod
    def scalar(cls, coeffs: dict, d: int | None = None) -> TrigPolynomial:
        items = {}
        for k, v in coeffs.items():
            k = (k,) if isinstance(k, int) else tuple(k)
            items[k] = np.array([[complex(v)]])
        d = d or len(next(iter(items)))
        return cls(d, 1, items)

    def to_element(self) -> AlgebraElement:
        return AlgebraElement.from_map(free_abelian(self.d), self.coeffs, self.n)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        for k, a in self.coeffs.items():
            b = self.coeffs.get(tuple(-v for v in k), np.zeros_like(a))
            if np.abs(b - a.conj().T).max() > tol * (1 + np.abs(a).max()):
                return False
        return True

    def degree(self) -> int:
        return max((max(abs(v) for v in k) for k in self.coeffs), default=0)

    def __call__(self, theta):
        th = np.atleast_2d(np.asarray(theta, dtype=float))
        if th.shape[-1] != self.d:
            th = th.reshape(-1, self.d)
        out = np.zeros((th.shape[0], self.n, self.n), dtype=complex)
        for k, a in self.coeffs.items():
            out += np.exp(1j * th @ np.array(k, dtype=float))[:, None, None] * a
        return out

    def value(self, theta) -> float:
        """Scalar value at one point (real part)."""
        return float(self(np.atleast_1d(theta))[0, 0, 0].real)


@dataclass
class TorusCertificate:
    status: str
    lower_bound: float | None = None
    point: tuple | None = None  # radians
    value: float | None = None
    spacing: float = 0.0  # grid spacing in turns
    lipschitz: float = 0.0  # per turn
    grid_min: float | None = None
    method: str = ""
    needed_density: int | None = None
    gram: np.ndarray | None = None  # Gram matrix over {0..deg}^d for method "sos"

    def verify(self, p: TrigPolynomial) -> bool:
        """Re-derive the claim from ``p`` alone (grid values are recomputed)."""
        if self.status == NEGATIVE:
            return p.value(np.array(self.point)) < 0
        if self.status != CERTIFIED:
            return False
        G = round(1 / self.spacing)
        if self.method == "lipschitz":
            m = float(_grid_values(p, G).real.min())
            return m - lipschitz_constant(p) * math.sqrt(p.d) / (2 * G) >= 0
        if self.method == "taylor2":
            return taylor_lower_bound(p, G) >= 0
        if self.method == "sos" and self.gram is not None:
            return _gram_lower_bound(p, self.gram) >= -1e-8
        return False


def _grid_values(p: TrigPolynomial, G: int, weights=None):
    arr = np.zeros((G,) * p.d, dtype=complex)
    for k, a in p.coeffs.items():
        w = 1.0 if weights is None else weights(k)
        arr[tuple(v % G for v in k)] += w * a[0, 0]
    return np.fft.ifftn(arr) * G ** p.d


def lipschitz_constant(p: TrigPolynomial) -> float:
    """Per-turn Lipschitz bound ``2 pi sum_k |k|_2 |c_k|``."""
    return 2 * math.pi * sum(math.hypot(*k) * abs(a[0, 0]) for k, a in p.coeffs.items())


def _second_order(p: TrigPolynomial) -> float:
    return (2 * math.pi) ** 2 * sum(sum(v * v for v in k) * abs(a[0, 0]) for k, a in p.coeffs.items())


def taylor_lower_bound(p: TrigPolynomial, G: int) -> float:
    """Rigorous lower bound from grid values, gradients and a curvature bound:
    ``p(t) >= p(t_g) - |grad p(t_g)| h - M2 h^2 / 2`` with ``h = sqrt(d)/(2G)``."""
    vals = _grid_values(p, G).real
    grad2 = np.zeros_like(vals)
    for j in range(p.d):
        gj = _grid_values(p, G, lambda k, j=j: 2j * math.pi * k[j]).real
        grad2 += gj ** 2
    h = math.sqrt(p.d) / (2 * G)
    return float((vals - np.sqrt(grad2) * h).min() - _second_order(p) * h * h / 2)


def _default_density(p: TrigPolynomial) -> int:
    base = {1: 4096, 2: 256, 3: 48}.get(p.d, 16)
    return max(base, 2 * p.degree() + 2)


def torus_nonneg_certificate(p: TrigPolynomial, density: int | None = None, sos_fallback: bool = True,
                             settings: SdpSettings | None = None) -> TorusCertificate:
    """Certify or refute ``p >= 0`` on the torus (scalar, ``d <= 3``)."""
    if p.n != 1:
        raise ValueError("torus certificates are scalar")
    if p.d > 3:
        raise ValueError("grid certificates limited to d <= 3")
    G = density or _default_density(p)
    if G <= 2 * p.degree():
        G = 2 * p.degree() + 2
    vals = _grid_values(p, G).real
    idx = np.unravel_index(int(np.argmin(vals)), vals.shape)
    m = float(vals[idx])
    L = lipschitz_constant(p)
    delta = 1.0 / G
    slack = L * delta * math.sqrt(p.d) / 2
    base = dict(spacing=delta, lipschitz=L, grid_min=m)
    if m < 0:
        theta0 = 2 * math.pi * np.array(idx, dtype=float) / G
        res = minimize(lambda t: p.value(t), theta0, method="BFGS", options={"gtol": 1e-12})
        th = np.mod(res.x, 2 * math.pi)
        v = p.value(th)
        if v > m:
            th, v = theta0, m
        return TorusCertificate(NEGATIVE, point=tuple(float(t) for t in th), value=float(v), method="grid", **base)
    if m - slack >= 0:
        return TorusCertificate(CERTIFIED, lower_bound=m - slack, method="lipschitz", **base)
    tb = taylor_lower_bound(p, G)
    if tb >= 0:
        return TorusCertificate(CERTIFIED, lower_bound=tb, method="taylor2", **base)
    if sos_fallback:
        gram = _sos_gram(p, settings)
        if gram is not None:
            lb = _gram_lower_bound(p, gram)
            if lb >= -1e-8:
                return TorusCertificate(CERTIFIED, lower_bound=lb, method="sos", gram=gram, **base)
    needed = math.ceil(L * math.sqrt(p.d) / (2 * m)) if m > 0 else None
    return TorusCertificate(INCONCLUSIVE, needed_density=needed, method="grid", **base)


def _box_sigma(p: TrigPolynomial):
    grid = [tuple(t) for t in np.ndindex(*([p.degree() + 1] * p.d))]
    return make_sigma(free_abelian(p.d), grid)


def _sos_gram(p: TrigPolynomial, settings=None):
    res = sos_membership(p.to_element(), _box_sigma(p), settings, extract=False)
    return res.certificate.gram if res.inside else None


def _gram_lower_bound(p: TrigPolynomial, gram) -> float:
    """``p >= min(0, lambda_min(G)) |Sigma| - sum_k |r_k|`` where ``r`` is the
    marginal residual of the Gram matrix over ``{0..deg}^d``."""
    sigma = _box_sigma(p)
    G = np.asarray(gram)
    if G.shape != (len(sigma), len(sigma)):
        return -np.inf
    r = marginals(G, sigma, 1) - p.to_element()
    l1 = sum(float(np.abs(a).sum()) for a in r.coeffs.values())
    return min(0.0, lambda_min((G + G.conj().T) / 2)) * len(sigma) - l1


# --------------------------------------------------------------------------
# cyclic groups


def _cyclic_array(fhat, group: GroupDescriptor | None = None) -> np.ndarray:
    if isinstance(fhat, AlgebraElement):
        group = fhat.group
        items = {g.data: a[0, 0] for g, a in fhat.coeffs.items()}
    else:
        items = {((k,) if isinstance(k, int) else tuple(k)): complex(v) for k, v in dict(fhat).items()}
    if group is None or not group.is_finite:
        raise ValueError("evaluate_cyclic needs a finite cyclic product group")
    arr = np.zeros(group.moduli, dtype=complex)
    for k, v in items.items():
        arr[tuple(int(a) % m for a, m in zip(k, group.moduli))] += v
    return arr


def evaluate_cyclic(fhat, group: GroupDescriptor | None = None) -> np.ndarray:
    """``f(l) = sum_k fhat(k) exp(2 pi i sum_j l_j k_j / m_j)`` on every ``l``."""
    arr = _cyclic_array(fhat, group)
    return np.fft.ifftn(arr) * arr.size


def cyclic_coefficients(values) -> np.ndarray:
    """Inverse of :func:`evaluate_cyclic` (coefficient array indexed by ``k``)."""
    values = np.asarray(values, dtype=complex)
    return np.fft.fftn(values) / values.size


# --------------------------------------------------------------------------
# spectral factorisation on Z


@dataclass
class FactorResult:
    factors: list
    method: str
    residual: float
    flagged: bool = False
    note: str = ""


def _interval_coeffs(x: AlgebraElement, N: int | None):
    if x.group.moduli != (0,):
        raise ValueError("spectral factorisation needs an element of Z")
    ks = [g.data[0] for g in x.support()]
    D = max((abs(k) for k in ks), default=0)
    if N is not None and D > N:
        raise ValueError(f"support of x exceeds degree {N}")
    return D


def spectral_factor_interval(x: AlgebraElement, N: int | None = None, tol: float = 1e-8,
                             settings: SdpSettings | None = None) -> FactorResult:
    """Write ``x`` on ``{-N..N}`` as ``y y*`` with ``y`` on ``{0..N}``.

    Scalars use root extraction; matrix coefficients use Bauer's method on
    growing block Toeplitz truncations, falling back (flagged) to a Gram
    decomposition with several squares.
    """
    x.require_hermitian()
    D = _interval_coeffs(x, N)
    N = D if N is None else N
    if x.n == 1:
        return _scalar_factor(x, D, tol)
    return _bauer_factor(x, N, D, tol, settings)


def _scalar_factor(x: AlgebraElement, D: int, tol: float) -> FactorResult:
    Z = x.group
    c = {g.data[0]: complex(a[0, 0]) for g, a in x.coeffs.items()}
    p = TrigPolynomial(1, 1, {(k,): np.array([[v]]) for k, v in c.items()})
    cert = torus_nonneg_certificate(p, sos_fallback=False)
    if cert.status == NEGATIVE:
        raise SymbolNegative(f"symbol negative at theta={cert.point[0]:.6f} (value {cert.value:.3e})",
                             cert.point, cert.value)
    if D == 0:
        y = AlgebraElement.from_map(Z, {(0,): math.sqrt(max(c.get(0, 0).real, 0.0))}, 1)
        return FactorResult([y], "roots", y.max_abs_diff(y) if False else (y * y.star()).max_abs_diff(x))
    poly = np.array([c.get(k, 0) for k in range(D, -D - 1, -1)])
    roots = np.roots(poly)
    roots = roots[np.argsort(np.abs(roots), kind="stable")]
    inner = roots[:D]
    mono = np.poly(inner)[::-1]  # ascending coefficients of prod (z - r)
    # scale |lambda|^2 by least squares against all coefficients
    auto = np.correlate(mono, mono, mode="full")  # index j <-> lag j - D
    target = np.array([c.get(k, 0) for k in range(-D, D + 1)])
    lags = np.array([sum(mono[s] * np.conj(mono[s - k]) for s in range(max(0, k), min(D, D + k) + 1))
                     for k in range(-D, D + 1)])
    del auto
    scale = float(np.real(np.vdot(lags, target) / np.vdot(lags, lags)))
    ycoef = mono * math.sqrt(max(scale, 0.0))
    y = AlgebraElement.from_map(Z, {(k,): ycoef[k] for k in range(D + 1)}, 1)
    y = _newton_polish(y, x, D)
    res = (y * y.star()).max_abs_diff(x)
    note = ""
    close = np.abs(np.abs(inner) - 1) < 1e-6
    if np.any(close):
        note = f"{int(close.sum())} root(s) on the unit circle split evenly"
    return FactorResult([y], "roots", res, note=note)


def _newton_polish(y: AlgebraElement, x: AlgebraElement, D: int, steps: int = 3) -> AlgebraElement:
    """Gauss-Newton refinement of ``y y* = x`` over complex coefficients."""
    Z = y.group
    v = np.array([complex(y.coeff(Z.element((k,)))[0, 0]) for k in range(D + 1)])
    target = np.array([complex(x.coeff(Z.element((k,)))[0, 0]) for k in range(-D, D + 1)])

    def resid(v):
        r = np.array([sum(v[s] * np.conj(v[s - k]) for s in range(max(0, k), min(D, D + k) + 1))
                      for k in range(-D, D + 1)])
        return r - target

    best = v
    best_err = np.abs(resid(v)).max()
    for _ in range(steps):
        r = resid(v)
        J = np.zeros((2 * (2 * D + 1), 2 * (D + 1)))
        eps = 1e-7
        base = np.concatenate([r.real, r.imag])
        for j in range(D + 1):
            for part, dv in ((0, eps), (1, 1j * eps)):
                w = v.copy()
                w[j] += dv
                rr = resid(w)
                J[:, part * (D + 1) + j] = (np.concatenate([rr.real, rr.imag]) - base) / eps
        step = np.linalg.lstsq(J, -base, rcond=None)[0]
        v = v + step[:D + 1] + 1j * step[D + 1:]
        err = np.abs(resid(v)).max()
        if err < best_err:
            best, best_err = v, err
    return AlgebraElement.from_map(Z, {(k,): best[k] for k in range(D + 1)}, 1)


def _bauer_factor(x: AlgebraElement, N: int, D: int, tol: float, settings) -> FactorResult:
    Z = x.group
    n = x.n
    blocks = {k: x.coeff(Z.element((k,))) for k in range(-D, D + 1)}

    def bottom_row(L):
        T = np.zeros((L * n, L * n), dtype=complex)
        for i in range(L):
            for j in range(max(0, i - D), min(L, i + D + 1)):
                T[i * n:(i + 1) * n, j * n:(j + 1) * n] = blocks[i - j]
        try:
            C = np.linalg.cholesky(T)
        except np.linalg.LinAlgError:
            return None
        last = C[(L - 1) * n:, :]
        return [last[:, (L - 1 - k) * n:(L - k) * n] for k in range(N + 1)]

    L, prev, flagged, note = 16, None, False, ""
    rows = None
    while L <= 1024:
        rows = bottom_row(L)
        if rows is None:
            flagged, note = True, f"truncation of size {L} not positive definite"
            break
        if prev is not None and max(np.abs(a - b).max() for a, b in zip(rows, prev)) < tol:
            break
        prev = rows
        L *= 2
    else:
        flagged, note = True, "Bauer iteration hit the 1024-block cap"
    if rows is not None and not flagged:
        y = AlgebraElement.from_map(Z, {(k,): rows[k] for k in range(N + 1)}, n)
        res = (y * y.star()).max_abs_diff(x)
        if res <= max(tol, 1e-6):
            return FactorResult([y], "bauer", res)
        flagged, note = True, f"Bauer factor residual {res:.2e} above tolerance"
    sigma = make_sigma(Z, [(k,) for k in range(N + 1)])
    mem = sos_membership(x, sigma, settings)
    if not mem.inside:
        raise SymbolNegative(f"no Gram certificate on {{0..{N}}}: {mem.status} {mem.diagnostic}")
    cert = mem.certificate
    return FactorResult(cert.factors, "sos-fallback", cert.residual, flagged=True, note=note)


# --------------------------------------------------------------------------
# Fejer-Riesz gap probing


@dataclass
class GapWitness:
    element: AlgebraElement
    positivity: object  # value table (cyclic) or TorusCertificate
    outside: object  # DualToeplitzCertificate

    def verify(self) -> bool:
        x = self.element
        if isinstance(self.positivity, TorusCertificate):
            pos_ok = self.positivity.verify(TrigPolynomial.from_element(x))
        else:
            vals = evaluate_cyclic(x)
            pos_ok = bool(np.all(vals.real >= -1e-12)) and np.allclose(vals, np.asarray(self.positivity))
        return pos_ok and self.outside.verify(x).passed


@dataclass
class ProbeReport:
    sigma: SubsetSigma
    trials: int
    witnesses: list = field(default_factory=list)
    statuses: dict = field(default_factory=dict)


def _random_hermitian(rng, group, diffs, n=1):
    data = {}
    for g in diffs:
        if g in data:
            continue
        gi = g.inv()
        if g == gi:
            a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            data[g] = (a + a.conj().T) / 2
            if n == 1 and group.is_abelian:
                data[g] = data[g].real.astype(complex)
        else:
            a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            data[g] = a
            data[gi] = a.conj().T
    return AlgebraElement.from_map(group, data, n)


def fr_gap_probe(sigma: SubsetSigma, trials: int = 20, seed: int = 0, candidates=(),
                 settings: SdpSettings | None = None, density: int | None = None) -> ProbeReport:
    """Search for elements stretching over ``Sigma`` that are positive on the
    dual group yet not sums of squares over ``Sigma``."""
    group = sigma.group
    if not group.is_abelian:
        raise ValueError("gap probing needs an abelian group")
    finite = group.is_finite
    if not finite and any(m for m in group.moduli):
        raise ValueError("mixed groups are not supported by the gap probe")
    rng = np.random.default_rng(seed)
    diffs, _ = difference_set(sigma)
    e = group.identity()
    report = ProbeReport(sigma, trials)
    elems = list(candidates)
    for _ in range(trials):
        x = _random_hermitian(rng, group, diffs)
        shift = rng.uniform(0, 0.05)
        if finite:
            vals = evaluate_cyclic(x).real
            c = -vals.min() + shift
        else:
            p = TrigPolynomial.from_element(x)
            G = density or _default_density(p)
            c = -taylor_lower_bound(p, G) + shift
        elems.append(x + AlgebraElement.delta(e, 1, c))
    for x in elems:
        if finite:
            vals = evaluate_cyclic(x)
            if np.any(vals.real < -1e-12):
                report.statuses["not_positive"] = report.statuses.get("not_positive", 0) + 1
                continue
            pos = vals
        else:
            pos = torus_nonneg_certificate(TrigPolynomial.from_element(x), density, sos_fallback=False)
            if pos.status != CERTIFIED:
                report.statuses["not_certified"] = report.statuses.get("not_certified", 0) + 1
                continue
        mem = sos_membership(x, sigma, settings, extract=False)
        report.statuses[mem.status] = report.statuses.get(mem.status, 0) + 1
        if mem.status == OUTSIDE and mem.certificate is not None:
            w = GapWitness(x, pos, mem.certificate)
            if w.verify():
                report.witnesses.append(w)
    return report
