import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from groupsos.groups import (DomainError, GroupDescriptor, GroupError, box, cyclic_product, difference_set,
                             enumerate_maximal_sigmas, free_abelian, free_group, free_reduce,
                             inverse, make_sigma, multiply, validate_positivity_domain)


def test_multiply_examples():
    Z2, C4, F2 = free_abelian(2), cyclic_product(4), free_group(2)
    assert multiply(Z2.element((1, 0)), Z2.element((0, 1))) == Z2.element((1, 1))
    assert multiply(C4.element(3), C4.element(2)) == C4.element(1)
    assert multiply(F2.element([1]), F2.element([-1])) == F2.identity()


def test_inverse_examples():
    Z2, C4, F2 = free_abelian(2), cyclic_product(4), free_group(2)
    assert inverse(Z2.element((1, -2))) == Z2.element((-1, 2))
    assert inverse(C4.element(3)) == C4.element(1)
    # a b^-1 -> b a^-1
    assert inverse(F2.element([1, -2])) == F2.element([2, -1])


def test_descriptor_mismatch():
    with pytest.raises(GroupError):
        multiply(free_abelian(1).element(1), cyclic_product(4).element(1))


def test_free_words_reduced():
    assert free_reduce([1, 2, -2, -1, 2]) == (2,)
    F2 = free_group(2)
    assert F2.element([1, 2, -2]).data == (1,)


def _random_elements(rng, group, count):
    if group.kind == "free":
        return [group.element([int(v) for v in rng.choice([-2, -1, 1, 2], size=rng.integers(0, 6))])
                for _ in range(count)]
    return [group.element([int(v) for v in rng.integers(-20, 20, size=group.dim)]) for _ in range(count)]


@pytest.mark.parametrize("group", [free_abelian(2), cyclic_product(3, 5), free_group(2),
                                   GroupDescriptor("abelian", moduli=(0, 6))], ids=["Z2", "C3xC5", "F2", "ZxC6"])
def test_group_axioms_random_triples(group):
    rng = np.random.default_rng(7)
    a, b, c = (_random_elements(rng, group, 10_000) for _ in range(3))
    e = group.identity()
    for x, y, z in zip(a, b, c):
        assert (x * y) * z == x * (y * z)
        assert x * e == x == e * x
        assert x * x.inv() == e
        assert x.inv().inv() == x


def test_difference_set_examples():
    Z = free_abelian(1)
    N = 4
    diffs, pairs = difference_set(make_sigma(Z, range(N + 1)))
    assert [g.data[0] for g in diffs] == list(range(-N, N + 1))
    for g in diffs:
        assert len(pairs[g]) == N + 1 - abs(g.data[0])
    diffs, pairs = difference_set(make_sigma(Z, [0, 1, 3]))
    assert sorted(g.data[0] for g in diffs) == [-3, -2, -1, 0, 1, 2, 3]
    assert all(len(pairs[g]) == 1 for g in diffs if not g.is_identity)
    Z2 = free_abelian(2)
    diffs, _ = difference_set(make_sigma(Z2, [(0, 0), (1, 0)]))
    assert {g.data for g in diffs} == {(0, 0), (1, 0), (-1, 0)}


@given(st.lists(st.tuples(st.integers(-5, 5), st.integers(-5, 5)), min_size=1, max_size=6, unique=True),
       st.tuples(st.integers(-9, 9), st.integers(-9, 9)))
def test_difference_set_translation_invariant(elems, shift):
    Z2 = free_abelian(2)
    sig = make_sigma(Z2, elems)
    g = Z2.element(shift)
    d1, p1 = difference_set(sig)
    d2, p2 = difference_set(sig.translate(g))
    assert d1 == d2
    for gamma in d1:
        assert {(s * g, t * g) for s, t in p1[gamma]} == set(p2[gamma])


@given(st.lists(st.lists(st.sampled_from([-2, -1, 1, 2]), max_size=3), min_size=1, max_size=5))
def test_difference_set_symmetric_with_mirrored_pairs(words):
    F2 = free_group(2)
    elems = list({F2.element(w) for w in words})
    sig = make_sigma(F2, elems, sort=True)
    diffs, pairs = difference_set(sig)
    e = sig.group.identity()
    assert len(pairs[e]) == len(sig)
    for g in diffs:
        assert g.inv() in pairs
        assert {(t, s) for s, t in pairs[g]} == set(pairs[g.inv()])


def test_validate_positivity_domain():
    Z2 = free_abelian(2)
    dom = validate_positivity_domain(Z2, [(0, 0), (0, 1), (0, -1), (1, 0), (-1, 0)])
    assert len(dom) == 5
    with pytest.raises(DomainError) as exc:
        validate_positivity_domain(free_abelian(1), [0, 1])
    assert exc.value.offending == [free_abelian(1).element(1)]
    with pytest.raises(DomainError):
        validate_positivity_domain(free_abelian(1), [1, -1])
    F2 = free_group(2)
    assert len(validate_positivity_domain(F2, [[]])) == 1


def test_five_point_maximal_sigmas():
    Z2 = free_abelian(2)
    dom = validate_positivity_domain(Z2, [(0, 0), (0, 1), (0, -1), (1, 0), (-1, 0)])
    got = {tuple(g.data for g in s) for s in enumerate_maximal_sigmas(dom)}
    assert got == {((0, 0), (1, 0)), ((0, 0), (0, 1))}


def test_interval_maximal_sigmas():
    Z = free_abelian(1)
    got = enumerate_maximal_sigmas(validate_positivity_domain(Z, [-1, 0, 1]))
    assert [[g.data[0] for g in s] for s in got] == [[0, 1]]


def _brute_force_maximal(domain):
    """Oracle: all subsets of the domain with Sigma Sigma^-1 inside the domain,
    keep the maximal ones, canonicalise by translation."""
    elems = sorted(domain.elements, key=lambda g: g.sort_key())
    ok = []
    for r in range(1, len(elems) + 1):
        for sub in itertools.combinations(elems, r):
            if all(s * t.inv() in domain for s in sub for t in sub):
                ok.append(frozenset(sub))
    maximal = [s for s in ok if not any(s < t for t in ok)]
    canon = set()
    for s in maximal:
        m = min(s, key=lambda g: g.sort_key())
        canon.add(tuple(sorted(g.data for g in (x * m.inv() for x in s))))
    return canon


@pytest.mark.parametrize("elems", [list(range(-3, 4)), [-3, -1, 0, 1, 3], [-4, -2, 0, 2, 4, -1, 1]])
def test_maximal_sigmas_match_brute_force(elems):
    Z = free_abelian(1)
    dom = validate_positivity_domain(Z, elems)
    got = {tuple(g.data for g in s) for s in enumerate_maximal_sigmas(dom)}
    assert got == _brute_force_maximal(dom)


def test_interval_seven_gives_zero_to_three():
    Z = free_abelian(1)
    got = enumerate_maximal_sigmas(validate_positivity_domain(Z, range(-3, 4)))
    assert [[g.data[0] for g in s] for s in got] == [[0, 1, 2, 3]]


@given(st.sets(st.tuples(st.integers(-2, 2), st.integers(-2, 2)), max_size=8))
def test_maximal_sigmas_are_maximal(raw):
    Z2 = free_abelian(2)
    pts = {(0, 0)} | set(raw) | {(-a, -b) for a, b in raw}
    dom = validate_positivity_domain(Z2, pts)
    for sig in enumerate_maximal_sigmas(dom):
        diffs, _ = difference_set(sig)
        assert all(g in dom for g in diffs)
        members = set(sig)
        for d in dom.elements:
            for s in sig:
                cand = d * s
                if cand in members:
                    continue
                assert not all(cand * t.inv() in dom and t * cand.inv() in dom for t in members)


def test_box():
    assert len(box(free_abelian(2), 2)) == 9
    assert len(box(GroupDescriptor("abelian", moduli=(0, 3)), 1)) == 6
    with pytest.raises(GroupError):
        box(free_group(2), 1)
