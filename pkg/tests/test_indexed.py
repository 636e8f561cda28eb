import random

import pytest
from hypothesis import given, strategies as st

from effectq.indexed import (HomomorphismWitness, check_homomorphism, check_monotone, constant, dl_indexed,
                             index_values, indexed_lockset, indexed_product, indexed_regex, map_effect)
from effectq.instances import LOCK_UNIT, LockEffect, atomicity, lockset, product
from effectq.quantale import leq
from effectq.regex import RegexEffect, Sym, cat, regex_quantale


def test_map_effect_examples():
    e = LockEffect.of((), ["x"])
    assert map_effect(lambda v: "l" if v == "x" else v, e) == LockEffect.of((), ["l"])
    merged = map_effect(lambda v: "z", LockEffect.of((), ["x", "y"]))
    assert merged == LockEffect.of((), ["z", "z"])
    assert map_effect(lambda v: v, e) == e


def test_map_effect_on_products_fixes_atomicity():
    e = (LockEffect.of(["x"], ["x"]), "A")
    assert map_effect(lambda v: "m", e) == (LockEffect.of(["m"], ["m"]), "A")


def test_map_effect_on_traces():
    e = RegexEffect(cat(Sym("x"), Sym("b")))
    got = map_effect(lambda s: "a" if s == "x" else s, e)
    assert got == RegexEffect(cat(Sym("a"), Sym("b")))
    assert index_values(e) == ["b", "x"]


def test_inclusion_is_homomorphism():
    small, large = lockset(("a",)), lockset(("a", "b"))
    r = check_homomorphism(HomomorphismWitness(small, large, lambda e: e), samples=500)
    assert r.passed


def test_substitution_is_homomorphism():
    q = lockset(("a", "b", "c"))
    for f in ({"a": "b"}.get, {"a": "c", "b": "c"}.get):
        m = lambda e, f=f: map_effect(lambda v: f(v) or v, e)
        r = check_homomorphism(HomomorphismWitness(q, q, m), samples=500, seed=2)
        assert r.passed, r.counterexamples[:2]


def test_merging_locks_can_shrink_results():
    # Mapping both locks to one lock refines but does not preserve joins:
    # the image of a join may be strictly larger than the join of images.
    q = lockset(("a", "b"))
    m = lambda e: map_effect(lambda v: "a", e)
    x, y = LockEffect.of(["a"], ["a"]), LockEffect.of(["b"], ["b"])
    j = q.join(x, y)
    got = q.join(m(x), m(y))
    assert got is not None and leq(q, got, m(j)) and got != m(j)


def test_unit_violation_detected():
    q = atomicity()
    r = check_homomorphism(HomomorphismWitness(q, q, lambda a: "A" if a == "B" else a))
    assert not r.law("preserves_unit").passed


def test_monotone_families():
    assert check_monotone(indexed_lockset(), ("a",), ("a", "b"), samples=300).passed
    assert check_monotone(indexed_regex(), ("a",), ("a", "b"), samples=300).passed
    assert check_monotone(constant(atomicity()), (), ("a",), samples=100).passed


def test_nested_index_sets_required():
    with pytest.raises(ValueError):
        check_monotone(indexed_lockset(), ("a", "c"), ("a", "b"))


def test_deadlock_effects_not_indexed():
    with pytest.raises(TypeError):
        dl_indexed()


def test_product_family_maps_componentwise():
    fam = indexed_product(indexed_lockset(), constant(atomicity()))
    e = (LockEffect.of((), ["x"]), "R")
    assert fam.map(lambda v: "y", e) == (LockEffect.of((), ["y"]), "R")
    assert fam.at(("x",)).unit == (LOCK_UNIT, "B")


ids = st.sampled_from(["a", "b", "c"])


@given(st.lists(ids, max_size=4), st.lists(ids, max_size=4), st.lists(ids, max_size=4),
       st.lists(ids, max_size=4), st.dictionaries(ids, ids))
def test_substitution_refines_seq_and_join(p1, q1, p2, q2, sub):
    q = lockset(("a", "b", "c"))
    f = lambda v: sub.get(v, v)
    x, y = LockEffect.of(p1, q1), LockEffect.of(p2, q2)
    mx, my = map_effect(f, x), map_effect(f, y)
    s = q.seq(x, y)
    assert leq(q, q.seq(mx, my), map_effect(f, s))
    j = q.join(x, y)
    if j is not None:
        mj = q.join(mx, my)
        assert mj is not None and leq(q, mj, map_effect(f, j))


def test_functor_composition():
    rng = random.Random(0)
    q = lockset(("a", "b", "c"))
    f, g = {"a": "b"}.get, {"b": "c"}.get
    for _ in range(100):
        e = q.sample(rng)
        once = map_effect(lambda v: g(f(v) or v) or (f(v) or v), e)
        twice = map_effect(lambda v: g(v) or v, map_effect(lambda v: f(v) or v, e))
        assert once == twice
    rq = regex_quantale(("a", "b"))
    for _ in range(30):
        e = rq.sample(rng)
        assert map_effect(lambda v: v, e) == e
