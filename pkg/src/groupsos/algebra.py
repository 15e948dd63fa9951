"""Matrix-coefficient elements of a group algebra and Toeplitz lifts."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .groups import (GroupDescriptor, GroupElement, GroupError, SubsetSigma,
                     difference_set, sort_elements)

HERM_TOL = 1e-12


class SupportError(ValueError):
    pass


class HermitianError(ValueError):
    def __init__(self, msg, gamma=None):
        super().__init__(msg)
        self.gamma = gamma


def _as_block(v, n: int) -> np.ndarray:
    a = np.asarray(v, dtype=complex)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.shape != (n, n):
        raise ValueError(f"expected a {n}x{n} coefficient, got shape {a.shape}")
    return a


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    """Finitely supported map ``gamma -> B_gamma`` in ``M_n(C[G])``.

    Zero coefficients are dropped; ``support()`` is in canonical order.
    """

    group: GroupDescriptor
    n: int
    coeffs: dict = field(default_factory=dict)

    @classmethod
    def from_map(cls, group: GroupDescriptor, data, n: int | None = None, drop_tol: float = 0.0):
        items = []
        for g, v in dict(data).items():
            g = group.element(g)
            a = np.asarray(v, dtype=complex)
            if a.ndim == 0:
                a = a.reshape(1, 1)
            items.append((g, a))
        if n is None:
            n = items[0][1].shape[0] if items else 1
        coeffs = {}
        for g, a in items:
            a = _as_block(a, n)
            if np.abs(a).max(initial=0.0) > drop_tol:
                coeffs[g] = coeffs.get(g, 0) + a
        coeffs = {g: coeffs[g] for g in sort_elements(coeffs)}
        return cls(group, n, coeffs)

    @classmethod
    def delta(cls, g: GroupElement, n: int = 1, coeff=None):
        c = np.eye(n, dtype=complex) if coeff is None else _as_block(coeff, n)
        return cls(g.group, n, {g: c})

    def support(self) -> list[GroupElement]:
        return list(self.coeffs)

    def coeff(self, g: GroupElement) -> np.ndarray:
        return self.coeffs.get(g, np.zeros((self.n, self.n), dtype=complex))

    def star(self) -> AlgebraElement:
        return AlgebraElement.from_map(self.group, {g.inv(): a.conj().T for g, a in self.coeffs.items()}, self.n)

    def __add__(self, other: AlgebraElement) -> AlgebraElement:
        data = dict(self.coeffs)
        for g, a in other.coeffs.items():
            data[g] = data.get(g, 0) + a
        return AlgebraElement.from_map(self.group, data, self.n)

    def __sub__(self, other):
        return self + other.scale(-1.0)

    def scale(self, c) -> AlgebraElement:
        return AlgebraElement.from_map(self.group, {g: c * a for g, a in self.coeffs.items()}, self.n)

    def __mul__(self, other: AlgebraElement) -> AlgebraElement:
        if other.group != self.group:
            raise GroupError("elements live in different groups")
        data: dict = {}
        for g, a in self.coeffs.items():
            for h, b in other.coeffs.items():
                k = g * h
                data[k] = data.get(k, 0) + a @ b
        return AlgebraElement.from_map(self.group, data, self.n)

    def hermitian_defect(self) -> tuple[float, GroupElement | None]:
        """Largest ``|x_{g^-1} - x_g*|``; ``g`` is reported as the larger of
        the pair ``{g, g^-1}`` (e.g. ``1`` rather than ``-1`` in Z)."""
        worst, where = 0.0, None
        reps = {max(h, h.inv()) for h in self.coeffs}
        for g in sorted(reps):
            d = float(np.abs(self.coeff(g.inv()) - self.coeff(g).conj().T).max())
            if d > worst:
                worst, where = d, g
        return worst, where

    def is_hermitian(self, tol: float = HERM_TOL) -> bool:
        scale = 1.0 + max((np.abs(a).max() for a in self.coeffs.values()), default=0.0)
        return self.hermitian_defect()[0] <= tol * scale

    def require_hermitian(self, tol: float = HERM_TOL):
        if not self.is_hermitian(tol):
            d, g = self.hermitian_defect()
            raise HermitianError(f"element is not hermitian at gamma={g} (defect {d:.3e})", g)

    def max_abs_diff(self, other: AlgebraElement) -> float:
        keys = set(self.coeffs) | set(other.coeffs)
        return max((float(np.abs(self.coeff(g) - other.coeff(g)).max()) for g in keys), default=0.0)

    def __repr__(self):
        parts = []
        for g, a in self.coeffs.items():
            v = a[0, 0] if self.n == 1 else f"M{a.shape}"
            parts.append(f"{v}*d{g!r}")
        return " + ".join(parts) or "0"


def square(y: AlgebraElement) -> AlgebraElement:
    return y * y.star()


def sum_of_squares(factors, group: GroupDescriptor, n: int) -> AlgebraElement:
    total = AlgebraElement(group, n, {})
    for y in factors:
        total = total + square(y)
    return total


@dataclass
class ToeplitzMatrix:
    """``(T(s t^-1))_{s,t in Sigma}`` with block size ``n``."""

    sigma: SubsetSigma
    n: int
    entries: dict  # gamma -> n x n block, for gamma in Sigma Sigma^-1

    @property
    def matrix(self) -> np.ndarray:
        m = len(self.sigma)
        n = self.n
        out = np.zeros((m * n, m * n), dtype=complex)
        for i, s in enumerate(self.sigma):
            for j, t in enumerate(self.sigma):
                out[i * n:(i + 1) * n, j * n:(j + 1) * n] = self.entries[s * t.inv()]
        return out

    def value(self, g: GroupElement) -> np.ndarray:
        return self.entries[g]


def toeplitz_lift(u, sigma: SubsetSigma, n: int | None = None, hermitian: bool = False) -> ToeplitzMatrix:
    """Lift a function on ``Sigma Sigma^-1`` (mapping or callable) to the
    Toeplitz matrix over ``Sigma``."""
    diffs, _ = difference_set(sigma)
    get = u if callable(u) else (lambda g: u[g])
    entries = {}
    for g in diffs:
        try:
            v = get(g)
        except KeyError:
            raise SupportError(f"no value given for realized difference {g!r}") from None
        if v is None:
            raise SupportError(f"no value given for realized difference {g!r}")
        a = np.asarray(v, dtype=complex)
        if a.ndim == 0:
            a = a.reshape(1, 1)
        entries[g] = a
    if n is None:
        n = next(iter(entries.values())).shape[0]
    for g, a in entries.items():
        entries[g] = _as_block(a, n)
    if hermitian:
        for g in diffs:
            d = np.abs(entries[g.inv()] - entries[g].conj().T).max()
            if d > 1e-12 * (1 + np.abs(entries[g]).max()):
                raise HermitianError(f"u(g^-1) != u(g)* at g={g!r}", g)
    return ToeplitzMatrix(sigma, n, entries)


def toeplitz_structure_check(M, sigma: SubsetSigma, tol: float = 1e-10, n: int | None = None):
    """Return ``(ok, worst)``: do all blocks with equal ``s t^-1`` agree?"""
    M = np.asarray(M)
    m = len(sigma)
    if n is None:
        if M.shape[0] % m:
            raise ValueError(f"matrix size {M.shape[0]} not a multiple of |Sigma| = {m}")
        n = M.shape[0] // m
    if M.shape != (m * n, m * n):
        raise ValueError(f"matrix shape {M.shape} does not match |Sigma|*n = {m * n}")
    _, pairs = difference_set(sigma)
    worst = 0.0
    for g, plist in pairs.items():
        s0, t0 = plist[0]
        i0, j0 = sigma.index(s0), sigma.index(t0)
        ref = M[i0 * n:(i0 + 1) * n, j0 * n:(j0 + 1) * n]
        for s, t in plist[1:]:
            i, j = sigma.index(s), sigma.index(t)
            worst = max(worst, float(np.abs(M[i * n:(i + 1) * n, j * n:(j + 1) * n] - ref).max()))
    return worst <= tol, worst


def toeplitz_from_matrix(M, sigma: SubsetSigma, n: int) -> ToeplitzMatrix:
    """Read the entry function off a (Toeplitz-structured) matrix, averaging
    blocks that share a difference."""
    _, pairs = difference_set(sigma)
    entries = {}
    for g, plist in pairs.items():
        acc = np.zeros((n, n), dtype=complex)
        for s, t in plist:
            i, j = sigma.index(s), sigma.index(t)
            acc += M[i * n:(i + 1) * n, j * n:(j + 1) * n]
        entries[g] = acc / len(plist)
    return ToeplitzMatrix(sigma, n, entries)


def pairing(T: ToeplitzMatrix, x: AlgebraElement) -> complex:
    """``sum_gamma sum_ab T(gamma)_ab x_gamma,ab``; for scalars this is
    ``sum_gamma x_gamma T(gamma)``, extending ``delta_{st^-1} -> T_{s,t}``."""
    if T.n != x.n:
        raise ValueError("coefficient sizes differ")
    total = 0j
    for g, a in x.coeffs.items():
        if g not in T.entries:
            raise SupportError(f"x has support at {g!r} outside Sigma Sigma^-1")
        total += np.sum(T.entries[g] * a)
    return complex(total)


def marginals(gram, sigma: SubsetSigma, n: int) -> AlgebraElement:
    """``sum_{s,t} A_{s,t} delta_{s t^-1}`` for a block Gram over ``Sigma``."""
    G = np.asarray(gram)
    data: dict = {}
    for i, s in enumerate(sigma):
        for j, t in enumerate(sigma):
            g = s * t.inv()
            data[g] = data.get(g, 0) + G[i * n:(i + 1) * n, j * n:(j + 1) * n]
    return AlgebraElement.from_map(sigma.group, data, n)
