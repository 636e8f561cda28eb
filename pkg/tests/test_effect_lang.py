import random
import time

import pytest
from hypothesis import given, settings, strategies as st

from effectq.corpus import effect_fuzz
from effectq.effects import (EMPTY_CTX, EffectSignature, KindError, TrivialEffect, canonical_form,
                             check_nontrivial, constant_signature, equiv, evaluate, ground_value, kind_effect,
                             nontrivial, normalize, subeffect)
from effectq.instances import LockEffect, atomicity, crit, lockset, product
from effectq.parser import parse_effect
from effectq.regex import RegexEffect, Sym, regex_quantale
from effectq.systems import lockatom_signature
from effectq.terms import (EFF, App, EGround, EJoin, ESeq, EStar, EUnit, EVar, Lam, Prim, TCon, TEff, Var,
                           subst_term_in_effect, subst_type_in_effect)

ATOM = constant_signature(atomicity())
CRIT_SIG = constant_signature(crit())
LOCKATOM = lockatom_signature()


def g(sig, name, *args):
    return sig.ground(name, *args)


def _lockset_sig():
    q = lockset(("l1", "l2"))

    def construct(name, args):
        if name == "acq":
            return LockEffect.of((), args)
        if name == "rel":
            return LockEffect.of(args, ())
        if name == "hold":
            return LockEffect.of(args, args)
        raise KeyError(name)
    return EffectSignature("lockset", q, construct, str)


LOCKS = _lockset_sig()


def test_normalize_examples():
    A, R, L = g(ATOM, "A"), g(ATOM, "R"), g(ATOM, "L")
    assert normalize(ATOM, ESeq(EUnit(), A)) == A
    assert normalize(ATOM, ESeq(R, L)) == A
    a = EVar("a")
    assert normalize(ATOM, EJoin(a, a)) == a


def test_subeffect_examples():
    B, A = g(ATOM, "B"), g(ATOM, "A")
    a = EVar("a")
    assert subeffect(ATOM, B, A)
    assert not subeffect(ATOM, A, B)
    assert subeffect(ATOM, a, a)
    assert subeffect(ATOM, a, EJoin(a, A))
    assert not subeffect(ATOM, EJoin(a, A), a)


def test_equivalence_examples():
    R, B = g(ATOM, "R"), g(ATOM, "B")
    assert equiv(ATOM, EStar(ESeq(R, B)), R)
    a, b = EVar("a"), EVar("b")
    assert not equiv(ATOM, ESeq(a, b), ESeq(b, a))
    assert equiv(ATOM, EJoin(a, b), EJoin(b, a))
    assert equiv(ATOM, ESeq(a, EJoin(b, EUnit())), EJoin(ESeq(a, b), a))


def test_reduction_law():
    e = parse_effect("(R* ; B*)* ; A ; (B* ; L*)*", ATOM)
    assert normalize(ATOM, e) == g(ATOM, "A")
    assert evaluate(ATOM, e) == "A"


def test_nontrivial_examples():
    locking = g(CRIT_SIG, "locking")
    assert not nontrivial(CRIT_SIG, ESeq(locking, locking))
    assert not nontrivial(CRIT_SIG, EStar(locking))
    assert nontrivial(CRIT_SIG, EJoin(EVar("a"), g(CRIT_SIG, "critical")))
    assert nontrivial(LOCKS, EJoin(EVar("a"), g(LOCKS, "acq", Prim("l1"))))
    assert nontrivial(ATOM, EStar(g(ATOM, "A")))
    with pytest.raises(TrivialEffect):
        check_nontrivial(CRIT_SIG, ESeq(locking, locking))


def test_opaquely_invalid_effects_are_accepted():
    # Instantiating the variable with locking would be undefined, but the
    # variable itself is not a ground operation.
    locking = g(CRIT_SIG, "locking")
    assert nontrivial(CRIT_SIG, ESeq(locking, EVar("a")))


def test_kinding():
    ctx = EMPTY_CTX.bind("x", TCon("lock")).bind_type("g", EFF)
    assert kind_effect(ctx, EUnit()) == EFF
    assert kind_effect(ctx, EVar("g")) == EFF
    assert kind_effect(ctx, g(LOCKATOM, "Locking1-0", Var("x"))) == EFF
    assert kind_effect(ctx, g(LOCKATOM, "Locking1-0", Lam("y", None, Var("y")))) == EFF
    with pytest.raises(KindError):
        kind_effect(ctx, g(LOCKATOM, "Locking1-0", App(Lam("y", None, Var("y")), Var("x"))))
    with pytest.raises(KindError):
        kind_effect(ctx, EVar("unbound"))


def test_value_substitution_into_ground():
    e = g(LOCKATOM, "Locking1-0", Var("x"))
    assert subst_term_in_effect(e, "x", Prim("@l0")) == g(LOCKATOM, "Locking1-0", Prim("@l0"))
    assert subst_term_in_effect(e, "y", Prim("@l0")) == e


def test_type_substitution():
    a = EVar("a")
    star = EStar(a)
    assert subst_type_in_effect(star, "b", TEff(g(ATOM, "R"))) == star
    assert subst_type_in_effect(star, "a", TEff(g(ATOM, "R"))) == EStar(g(ATOM, "R"))


# --------------------------------------------------------------------------
# Properties over random effect trees

ATOM_LEAVES = [g(ATOM, x) for x in ("B", "L", "R", "A", "TOP")]
CRIT_LEAVES = [g(CRIT_SIG, x) for x in ("eps", "locking", "unlocking", "critical", "entrant")]
L1, L2 = Prim("l1"), Prim("l2")
LOCK_LEAVES = [g(LOCKS, "acq", L1), g(LOCKS, "rel", L1), g(LOCKS, "hold", L2), g(LOCKS, "acq", L2)]
REGEX = constant_signature(regex_quantale(("a", "b")), {"a": RegexEffect(Sym("a")), "b": RegexEffect(Sym("b"))})
REGEX_LEAVES = [g(REGEX, "a"), g(REGEX, "b")]
SIGS = [(ATOM, ATOM_LEAVES), (CRIT_SIG, CRIT_LEAVES), (LOCKS, LOCK_LEAVES), (REGEX, REGEX_LEAVES)]


def _closed(seed, depth):
    rng = random.Random(seed)
    sig, leaves = SIGS[seed % len(SIGS)]
    return sig, effect_fuzz(rng, depth, leaves, var_names=())


def _open(seed, depth):
    rng = random.Random(seed)
    sig, leaves = SIGS[seed % len(SIGS)]
    return sig, effect_fuzz(rng, depth, leaves, var_names=("a", "b"))


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 10 ** 7), st.integers(1, 6))
def test_collapse_agrees_with_direct_fold(seed, depth):
    sig, e = _closed(seed, depth)
    want = evaluate(sig, e)
    if want is None:
        return
    got = ground_value(sig, e)
    assert got is not None and got == want
    assert nontrivial(sig, e)
    assert isinstance(normalize(sig, e), (EGround, EUnit))


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 10 ** 7), st.integers(1, 6))
def test_closed_nontriviality_matches_definedness(seed, depth):
    # Crit and atomicity have associative definedness, so a closed effect
    # is trivially invalid exactly when its direct fold is undefined.
    sig, e = _closed(seed, depth)
    if sig not in (ATOM, CRIT_SIG):
        return
    assert nontrivial(sig, e) == (evaluate(sig, e) is not None)


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 10 ** 7), st.integers(1, 6))
def test_normalize_idempotent(seed, depth):
    sig, e = _open(seed, depth)
    n = normalize(sig, e)
    assert normalize(sig, n) == n
    assert equiv(sig, e, n)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10 ** 7), st.integers(1, 5))
def test_triviality_survives_substitution(seed, depth):
    sig, e = _open(seed, depth)
    if nontrivial(sig, e):
        return
    rng = random.Random(seed + 1)
    for _ in range(3):
        leaf = rng.choice(SIGS[seed % len(SIGS)][1])
        inst = subst_type_in_effect(subst_type_in_effect(e, "a", TEff(leaf)), "b", TEff(EUnit()))
        assert not nontrivial(sig, inst)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10 ** 7))
def test_subeffect_is_a_preorder(seed):
    rng = random.Random(seed)
    sig, leaves = SIGS[seed % len(SIGS)]
    x = effect_fuzz(rng, 3, leaves, ("a",))
    y = EJoin(x, effect_fuzz(rng, 2, leaves, ("a",)))
    z = EJoin(y, effect_fuzz(rng, 2, leaves, ("a",)))
    try:
        check_nontrivial(sig, z)
    except TrivialEffect:
        return
    assert subeffect(sig, x, x)
    assert subeffect(sig, x, y) and subeffect(sig, y, z) and subeffect(sig, x, z)


@pytest.mark.parametrize("sig,leaves", [(ATOM, ATOM_LEAVES), (REGEX, REGEX_LEAVES)])
def test_star_axioms_hold_syntactically(sig, leaves):
    for x in leaves + [EJoin(leaves[0], leaves[-1]), ESeq(leaves[-1], leaves[0])]:
        s = EStar(x)
        assert equiv(sig, EStar(s), s)
        assert subeffect(sig, x, s)
        assert subeffect(sig, EUnit(), s)
        assert subeffect(sig, ESeq(s, s), s)
    for x, y in zip(leaves, leaves[1:]):
        if subeffect(sig, x, y):
            assert subeffect(sig, EStar(x), EStar(y))


def test_nontrivial_terminates_on_deep_fuzz():
    rng = random.Random(0)
    start = time.perf_counter()
    for i in range(400):
        sig, leaves = SIGS[i % len(SIGS)]
        e = effect_fuzz(rng, 8, leaves, ("a", "b"))
        nontrivial(sig, e)
    assert time.perf_counter() - start < 60


def test_canonical_forms_are_order_insensitive():
    a, b, c = EVar("a"), EVar("b"), EVar("c")
    lhs = EJoin(EJoin(a, b), c)
    rhs = EJoin(c, EJoin(b, a))
    assert canonical_form(ATOM, lhs) == canonical_form(ATOM, rhs)
