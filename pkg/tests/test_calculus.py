from pathlib import Path

import pytest

from effectq.checker import (Language, TypingError, check_effect_annotation, check_primitive_table, infer,
                             kind_of, type_equiv)
from effectq.corpus import history_corpus, lockatom_corpus
from effectq.effects import EMPTY_CTX, KindError, equiv, ground_value
from effectq.parser import ParseError, parse_effect, parse_program, parse_type
from effectq.systems import atomicity_instantiation, history_instantiation, locking_atomicity_instantiation
from effectq.terms import (BOOL, EFF, STAR, UNIT, App, EUnit, KArrow, Lam, Prim, TCon, TPi, Var, is_value,
                           subst_term, subst_term_in_effect, subst_term_in_type)

PROGRAMS = Path(__file__).resolve().parent.parent / "programs"

LA = locking_atomicity_instantiation()
AT = atomicity_instantiation()
HI = history_instantiation(("a", "b", "c"))


def prog(inst, text):
    prims = {p: inst.lang.arity_of(p) for p in inst.lang.delta}
    return parse_program(text, inst.sig, prims)


def test_identity_function():
    r = infer(LA.lang, prog(LA, "(lam (x bool) x)"))
    assert type_equiv(LA.lang, r.type, TPi("x", BOOL, EUnit(), BOOL))
    assert equiv(LA.sig, r.effect, EUnit())


def test_atomic_read_program():
    text = (PROGRAMS / "atomic_read.eq").read_text()
    r = infer(LA.lang, prog(LA, text))
    assert ground_value(LA.sig, r.effect) == LA.sig.unit
    inner = r.type.cod
    assert LA.sig.show(ground_value(LA.sig, inner.effect)) == "(∅,∅)⊗A"


def test_wrapper_latent_effect():
    r = infer(AT.lang, prog(AT, (PROGRAMS / "wrapper.eq").read_text()))
    inner = r.type.cod.body
    want = parse_effect("R ; 'g ; L", AT.sig)
    assert equiv(AT.sig, inner.effect, want)


def test_kinds():
    ctx = EMPTY_CTX.bind("x", TCon("lock"))
    assert kind_of(LA.lang, ctx, LA.lang.delta, BOOL) == STAR
    ref = parse_type("(ref (S x) bool)", LA.sig, terms=("x",))
    assert kind_of(LA.lang, ctx, LA.lang.delta, ref) == STAR
    pi = parse_type("(pi (x lock) [Locking0-1(x)] unit)", LA.sig)
    assert kind_of(LA.lang, EMPTY_CTX, LA.lang.delta, pi) == STAR
    partial = kind_of(LA.lang, EMPTY_CTX, LA.lang.delta, parse_type("(ref bool)", LA.sig))
    assert partial == KArrow(STAR, STAR)
    with pytest.raises(KindError):
        kind_of(LA.lang, EMPTY_CTX, LA.lang.delta, parse_type("(ref bool bool bool)", LA.sig))


def test_type_equivalence():
    a = parse_type("(pi (x bool) I bool)", AT.sig)
    b = parse_type("(pi (y bool) [I ; I] bool)", AT.sig)
    assert type_equiv(AT.lang, a, b)
    assert not type_equiv(AT.lang, BOOL, UNIT)
    c = parse_type("(pi (x lock) [R ; B] unit)", AT.sig)
    d = parse_type("(pi (x lock) R unit)", AT.sig)
    assert type_equiv(AT.lang, c, d)


def test_primitive_tables():
    assert check_primitive_table(LA.lang).passed
    assert check_primitive_table(AT.lang).passed
    assert check_primitive_table(HI.lang).passed
    bad = LA.lang.with_delta(dict(LA.lang.delta, maybe=BOOL))
    r = check_primitive_table(bad)
    assert not r.passed
    cx = r.law("not_closed_base").failures[0]
    assert cx.witnesses == ("maybe",) and cx.expected == "must not be closed base types"


def test_history_ev_type():
    ev = HI.lang.delta["ev"]
    assert isinstance(ev, TPi) and ev.dom == TCon("event")


def test_rejections():
    with pytest.raises(TypingError):
        infer(LA.lang, prog(LA, "(if true unit false)"))
    with pytest.raises(TypingError):
        infer(LA.lang, prog(LA, "(app true unit)"))
    with pytest.raises(TypingError):
        infer(LA.lang, Lam("x", None, Var("x")))
    with pytest.raises(TypingError):
        infer(LA.lang, Prim("acquire"))
    with pytest.raises(ParseError):
        prog(LA, "(lam (x bool)")


def test_trivially_invalid_effects_rejected():
    from effectq.effects import constant_signature
    from effectq.instances import crit
    sig = constant_signature(crit())
    lock_ty = TPi("_", UNIT, parse_effect("locking", sig), UNIT)
    lang = Language(sig, {"lk": lock_ty}, {"lk": 1}, {})
    twice = prog_with(lang, "(seq (lk unit) (lk unit))")
    with pytest.raises(TypingError, match="trivially invalid"):
        infer(lang, twice)
    loop = prog_with(lang, "(while true (lk unit))")
    with pytest.raises(TypingError, match="trivially invalid"):
        infer(lang, loop)


def prog_with(lang, text):
    return parse_program(text, lang.effects, {p: lang.arity_of(p) for p in lang.delta})


def test_annotation_check_site():
    r = infer(AT.lang, prog(AT, "(app (lam (x unit) x) unit)"))
    assert check_effect_annotation(AT.lang, r, parse_effect("A", AT.sig))


VALUES = ["true", "false", "unit", "(lam (x bool) x)", "(tylam (g E) (lam (x unit) x))",
          "(lam (l lock) (tylam (g E) (lam (f (-> unit 'g unit)) (seq (acquire l) (f unit) (release l)))))"]


def test_values_have_unit_effect():
    for src in VALUES:
        t = prog(AT, src)
        assert is_value(t, AT.lang.arity)
        assert infer(AT.lang, t).effect == EUnit()


# --------------------------------------------------------------------------
# Substitution and weakening over generated programs


def _strip_outer_lock(t):
    """``(λl0:lock. body) (new_lock unit)`` → ``body``."""
    assert isinstance(t, App) and isinstance(t.fn, Lam)
    return t.fn.var, t.fn.annot, t.fn.body


def test_substitution_preserves_typing_lockatom():
    lock = TCon("lock")
    for src in lockatom_corpus(40, seed=11):
        x, annot, body = _strip_outer_lock(prog(LA, src))
        before = infer(LA.lang, body, EMPTY_CTX.bind(x, annot))
        v = Prim("@l9")
        sigma = dict(LA.lang.delta, **{"@l9": lock})
        after = infer(LA.lang, subst_term(body, x, v), EMPTY_CTX, sigma)
        assert type_equiv(LA.lang, after.type, subst_term_in_type(before.type, x, v))
        assert equiv(LA.sig, after.effect, subst_term_in_effect(before.effect, x, v))


def test_substitution_preserves_typing_history():
    hits = 0
    for src in history_corpus(60, seed=5):
        t = prog(HI, src)
        if not (isinstance(t, App) and isinstance(t.fn, Lam) and is_value(t.arg, HI.lang.arity)):
            continue
        x, body, v = t.fn.var, t.fn.body, t.arg
        vt = infer(HI.lang, v)
        before = infer(HI.lang, body, EMPTY_CTX.bind(x, vt.type))
        after = infer(HI.lang, subst_term(body, x, v))
        assert type_equiv(HI.lang, after.type, subst_term_in_type(before.type, x, v))
        assert equiv(HI.sig, after.effect, subst_term_in_effect(before.effect, x, v))
        hits += 1
    assert hits >= 10


def test_weakening():
    for src in lockatom_corpus(30, seed=3):
        t = prog(LA, src)
        base = infer(LA.lang, t)
        wider = infer(LA.lang, t, EMPTY_CTX.bind("zz", BOOL).bind_type("gg", EFF))
        assert wider.type == base.type and wider.effect == base.effect


def test_inference_is_deterministic():
    for src in lockatom_corpus(20, seed=9):
        t = prog(LA, src)
        a, b = infer(LA.lang, t), infer(LA.lang, t)
        assert a.type == b.type and a.effect == b.effect


def test_while_effect_is_starred():
    t = prog(AT, "(app (lam (l lock) (while (seq (acquire l) (release l) true) unit)) (new_lock unit))")
    r = infer(AT.lang, t)
    assert AT.sig.show(ground_value(AT.sig, r.effect)) == "⊤"
