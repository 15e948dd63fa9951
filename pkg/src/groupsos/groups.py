"""Exact arithmetic for the supported discrete groups.

Three families are covered: finitely generated abelian groups given by a
tuple of per-coordinate moduli (0 meaning an infinite cyclic factor, so
``Z^d``, ``C_m`` and mixtures like ``Z x C_m`` share one code path) and free
groups on ``k`` generators with words kept fully reduced.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field


class GroupError(ValueError):
    pass


@dataclass(frozen=True)
class GroupDescriptor:
    kind: str  # "abelian" or "free"
    moduli: tuple[int, ...] = ()
    rank: int = 0

    def __post_init__(self):
        if self.kind == "abelian":
            if not self.moduli:
                raise GroupError("abelian group needs at least one coordinate")
            if any(m < 0 for m in self.moduli):
                raise GroupError(f"moduli must be >= 0 (0 = infinite), got {self.moduli}")
        elif self.kind == "free":
            if self.rank < 1:
                raise GroupError("free group rank must be >= 1")
        else:
            raise GroupError(f"unknown group kind {self.kind!r}")

    @property
    def is_abelian(self) -> bool:
        return self.kind == "abelian"

    @property
    def is_finite(self) -> bool:
        return self.kind == "abelian" and all(m > 0 for m in self.moduli)

    @property
    def dim(self) -> int:
        return len(self.moduli)

    def identity(self) -> GroupElement:
        if self.kind == "abelian":
            return GroupElement(self, (0,) * len(self.moduli))
        return GroupElement(self, ())

    def element(self, data) -> GroupElement:
        """Build a canonical element from raw coordinates or a signed word."""
        if isinstance(data, GroupElement):
            if data.group != self:
                raise GroupError("element belongs to a different group")
            return data
        if self.kind == "abelian":
            if isinstance(data, int):
                data = (data,)
            data = tuple(int(v) for v in data)
            if len(data) != len(self.moduli):
                raise GroupError(f"expected {len(self.moduli)} coordinates, got {data}")
            return GroupElement(self, _reduce_abelian(data, self.moduli))
        word = tuple(int(v) for v in data)
        for g in word:
            if g == 0 or abs(g) > self.rank:
                raise GroupError(f"generator index {g} out of range for F_{self.rank}")
        return GroupElement(self, free_reduce(word))

    def elements(self):
        """All elements of a finite group in canonical order."""
        if not self.is_finite:
            raise GroupError("group is infinite")
        for t in itertools.product(*(range(m) for m in self.moduli)):
            yield GroupElement(self, t)

    def order(self) -> int:
        if not self.is_finite:
            raise GroupError("group is infinite")
        n = 1
        for m in self.moduli:
            n *= m
        return n

    def to_json(self) -> dict:
        if self.kind == "abelian":
            return {"kind": "abelian", "moduli": list(self.moduli)}
        return {"kind": "free", "rank": self.rank}

    @classmethod
    def from_json(cls, d: dict) -> GroupDescriptor:
        kind = d.get("kind")
        if kind == "abelian":
            return cls("abelian", moduli=tuple(int(m) for m in d["moduli"]))
        if kind == "free":
            return cls("free", rank=int(d["rank"]))
        raise GroupError(f"unknown group kind {kind!r}")


def free_abelian(d: int) -> GroupDescriptor:
    if d < 1:
        raise GroupError("rank must be >= 1")
    return GroupDescriptor("abelian", moduli=(0,) * d)


def cyclic_product(*moduli: int) -> GroupDescriptor:
    if not moduli or any(m < 1 for m in moduli):
        raise GroupError("cyclic moduli must be >= 1")
    return GroupDescriptor("abelian", moduli=tuple(moduli))


def free_group(k: int) -> GroupDescriptor:
    return GroupDescriptor("free", rank=k)


def _reduce_abelian(coords, moduli):
    return tuple(c % m if m else c for c, m in zip(coords, moduli))


def free_reduce(word) -> tuple[int, ...]:
    out: list[int] = []
    for g in word:
        if out and out[-1] == -g:
            out.pop()
        else:
            out.append(g)
    return tuple(out)


@dataclass(frozen=True)
class GroupElement:
    group: GroupDescriptor = field(compare=True)
    data: tuple[int, ...]

    def __mul__(self, other: GroupElement) -> GroupElement:
        return multiply(self, other)

    def inv(self) -> GroupElement:
        return inverse(self)

    @property
    def is_identity(self) -> bool:
        if self.group.kind == "abelian":
            return all(v == 0 for v in self.data)
        return not self.data

    def sort_key(self):
        if self.group.kind == "abelian":
            return self.data
        return (len(self.data), tuple((abs(g), g < 0) for g in self.data))

    def __lt__(self, other: GroupElement) -> bool:
        return self.sort_key() < other.sort_key()

    def to_json(self) -> list[int]:
        return list(self.data)

    def __repr__(self):
        if self.group.kind == "abelian":
            return f"<{','.join(map(str, self.data))}>"
        if not self.data:
            return "<e>"
        letters = "abcdefghijklmnopqrstuvwxyz"
        parts = []
        for g in self.data:
            name = letters[abs(g) - 1] if abs(g) <= 26 else f"g{abs(g)}"
            parts.append(name if g > 0 else name + "^-1")
        return "<" + " ".join(parts) + ">"


def multiply(a: GroupElement, b: GroupElement) -> GroupElement:
    if a.group != b.group:
        raise GroupError(f"descriptor mismatch: {a.group} vs {b.group}")
    if a.group.kind == "abelian":
        return GroupElement(a.group, _reduce_abelian(
            [x + y for x, y in zip(a.data, b.data)], a.group.moduli))
    return GroupElement(a.group, free_reduce(a.data + b.data))


def inverse(a: GroupElement) -> GroupElement:
    if a.group.kind == "abelian":
        return GroupElement(a.group, _reduce_abelian([-x for x in a.data], a.group.moduli))
    return GroupElement(a.group, tuple(-g for g in reversed(a.data)))


def sort_elements(elems) -> list[GroupElement]:
    return sorted(elems, key=GroupElement.sort_key)


@dataclass(frozen=True)
class SubsetSigma:
    """Ordered finite subset of a group; the order indexes Toeplitz rows."""

    group: GroupDescriptor
    elements: tuple[GroupElement, ...]

    def __post_init__(self):
        if not self.elements:
            raise GroupError("Sigma must be nonempty")
        if len(set(self.elements)) != len(self.elements):
            raise GroupError("Sigma elements must be distinct")
        for s in self.elements:
            if s.group != self.group:
                raise GroupError("Sigma element from a different group")

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def index(self, s: GroupElement) -> int:
        return self.elements.index(s)

    def translate(self, g: GroupElement) -> SubsetSigma:
        """Right translate ``Sigma * g`` keeping the element order."""
        return SubsetSigma(self.group, tuple(s * g for s in self.elements))

    def to_json(self) -> list[list[int]]:
        return [s.to_json() for s in self.elements]


def make_sigma(group: GroupDescriptor, elems, sort: bool = False) -> SubsetSigma:
    items = [group.element(e) for e in elems]
    if sort:
        items = sort_elements(items)
    return SubsetSigma(group, tuple(items))


def difference_set(sigma: SubsetSigma):
    """Return ``(differences, pairs)`` where ``pairs[g]`` lists every ``(s, t)``
    with ``s t^-1 = g``. Differences come back in canonical order."""
    pairs: dict[GroupElement, list[tuple[GroupElement, GroupElement]]] = {}
    for s in sigma.elements:
        for t in sigma.elements:
            pairs.setdefault(s * t.inv(), []).append((s, t))
    return sort_elements(pairs), pairs


@dataclass(frozen=True)
class PositivityDomain:
    group: GroupDescriptor
    elements: frozenset

    def __contains__(self, g) -> bool:
        return g in self.elements

    def sorted(self) -> list[GroupElement]:
        return sort_elements(self.elements)

    def __len__(self):
        return len(self.elements)


class DomainError(GroupError):
    def __init__(self, msg, offending=()):
        super().__init__(msg)
        self.offending = list(offending)


def validate_positivity_domain(group: GroupDescriptor, elems) -> PositivityDomain:
    items = {group.element(e) for e in elems}
    e = group.identity()
    if e not in items:
        raise DomainError("positivity domain must contain the identity", [e])
    bad = sort_elements(g for g in items if g.inv() not in items)
    if bad:
        raise DomainError(f"positivity domain not symmetric; missing inverses of {bad}", bad)
    return PositivityDomain(group, frozenset(items))


def _bron_kerbosch(adj, r, p, x, out):
    if not p and not x:
        out.append(r)
        return
    pivot = max(p | x, key=lambda v: (len(adj[v] & p), -v))
    for v in sorted(p - adj[pivot]):
        _bron_kerbosch(adj, r | {v}, p & adj[v], x & adj[v], out)
        p = p - {v}
        x = x | {v}


def canonical_translate(elems) -> tuple[GroupElement, ...]:
    """Right translate of a finite set that starts at the identity: shift by
    the inverse of its smallest element, then sort."""
    first = min(elems, key=GroupElement.sort_key)
    return tuple(sort_elements(s * first.inv() for s in elems))


def enumerate_maximal_sigmas(domain: PositivityDomain) -> list[SubsetSigma]:
    """One representative per right-translation class of maximal ``Sigma``
    with ``Sigma Sigma^-1`` inside the domain.

    Any such ``Sigma`` containing the identity lies inside the domain, so the
    search is maximal-clique enumeration on the domain with ``s ~ t`` iff
    ``s t^-1`` is in the domain, restricted to cliques through the identity.
    """
    verts = domain.sorted()
    idx = {g: i for i, g in enumerate(verts)}
    adj = {i: set() for i in range(len(verts))}
    for i, s in enumerate(verts):
        for j, t in enumerate(verts):
            if i != j and s * t.inv() in domain and t * s.inv() in domain:
                adj[i].add(j)
    e = idx[domain.group.identity()]
    cliques: list[set] = []
    _bron_kerbosch(adj, {e}, set(adj[e]), set(), cliques)
    reps = {}
    for c in cliques:
        members = [verts[i] for i in c]
        for s in members:
            for t in members:
                assert s * t.inv() in domain
        rep = canonical_translate(members)
        reps.setdefault(tuple(g.sort_key() for g in rep), rep)
    return [SubsetSigma(domain.group, reps[k]) for k in sorted(reps)]


def box(group: GroupDescriptor, level: int) -> SubsetSigma:
    """``{0..level}`` on each infinite coordinate, the full cycle on finite ones."""
    if group.kind != "abelian":
        raise GroupError("boxes are defined for abelian groups only")
    ranges = [range(m) if m else range(level + 1) for m in group.moduli]
    return SubsetSigma(group, tuple(GroupElement(group, t) for t in itertools.product(*ranges)))
