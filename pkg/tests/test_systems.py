import pytest

from effectq.checker import check_primitive_table, infer
from effectq.corpus import LAMBDA_TRACE_SOURCES, history_corpus, lambda_trace_corpus, lockatom_corpus
from effectq.effects import ground_value
from effectq.instances import LOCK_UNIT, LockEffect
from effectq.parser import parse_program
from effectq.quantale import leq
from effectq.regex import RegexEffect, Sym, cat, language_upto
from effectq.runtime import monitor_safety
from effectq.systems import (LOCK, FragmentError, LEv, LVar, LockAtomState, acquire_unchecked,
                             history_instantiation, lambda_trace_effect, locking_atomicity_instantiation,
                             parse_lambda_trace, show_lambda_trace, translate_lambda_trace)
from effectq.terms import EGround, Prim, TPi, UNIT, UNIT_V, Var, show_term, subst_term_in_effect

LA = locking_atomicity_instantiation()
HI = history_instantiation(("a", "b", "c"))


def prog(inst, text):
    prims = {p: inst.lang.arity_of(p) for p in inst.lang.delta}
    return parse_program(text, inst.sig, prims)


def test_acquire_type():
    t = LA.lang.delta["acquire"]
    assert t == TPi("x", LOCK, EGround((LockEffect.of((), [Var("x")]), "R")), UNIT)
    assert LA.lang.delta["release"].effect == EGround((LockEffect.of([Var("x")], ()), "L"))


def test_new_lock_extends_sigma():
    r = LA.semantics("new_lock", (UNIT_V,), LockAtomState())
    assert r.value == Prim("@l0") and r.sigma_ext == {"@l0": LOCK}
    assert r.state.lock_map() == {"@l0": False}


def test_acquire_of_held_lock_has_no_rule():
    held = LockAtomState().with_lock("@l0", True)
    assert LA.semantics("acquire", (Prim("@l0"),), held) is None


def test_read_of_unallocated_cell_has_no_rule():
    st = LockAtomState().with_lock("@l0", True)
    assert LA.semantics("read", (Prim("@l0"), UNIT, Prim("@r7")), st) is None


def _latent(inst, p, args):
    """Last latent effect of δ(p) with value arguments substituted."""
    ty = inst.lang.delta[p]
    binders = []
    while hasattr(ty, "cod") or hasattr(ty, "body"):
        binders.append(ty)
        ty = ty.cod if hasattr(ty, "cod") else ty.body
    eff = binders[-1].effect
    terms = [b for b in binders if isinstance(b, TPi)]
    values = [a for a in args if isinstance(a, (Prim, Var)) or a == UNIT_V]
    for b, v in zip(terms, values):
        eff = subst_term_in_effect(eff, b.var, v)
    return eff


def test_primitive_preservation():
    st = LockAtomState().with_lock("@l0", False)
    cases = [("acquire", (Prim("@l0"),))]
    st_held = st.with_lock("@l0", True).with_cell("@r0", UNIT_V)
    cases_held = [("release", (Prim("@l0"),)), ("read", (Prim("@l0"), UNIT, Prim("@r0"))),
                  ("write", (Prim("@l0"), UNIT, Prim("@r0"), UNIT_V))]
    for state, batch in ((st, cases), (st_held, cases_held)):
        for p, args in batch:
            res = LA.semantics(p, args, state)
            static = ground_value(LA.sig, _latent(LA, p, args))
            assert static is not None and leq(LA.sig.quantale, res.effect, static), p


def test_double_acquire_gap():
    # Multiset claims make a re-entrant acquire typeable, but the dynamic
    # semantics has no rule for acquiring a held lock.
    src = "(app (lam (l lock) (seq (acquire l) (acquire l) (release l) (release l))) (new_lock unit))"
    t = prog(LA, src)
    r = infer(LA.lang, t)
    assert ground_value(LA.sig, r.effect) == (LOCK_UNIT, "A")
    m = monitor_safety(LA, t)
    assert m.record.status == "PrimError"
    assert not m.safety.ok


def test_unchecked_acquire_escape_hatch():
    bad = acquire_unchecked(LA)
    src = "(app (lam (l lock) (seq (acquire l) (acquire l))) (new_lock unit))"
    m = monitor_safety(bad, prog(bad, src))
    assert m.record.status == "PrimError" and not m.safety.ok


def test_balanced_locks_when_static_lock_effect_is_unit():
    for src in lockatom_corpus(40, seed=8):
        m = monitor_safety(LA, prog(LA, src))
        assert m.static_effect[0] == LOCK_UNIT
        assert m.record.final_state.held() == frozenset()


def test_lockatom_corpus_is_safe():
    for src in lockatom_corpus(25, seed=1):
        m = monitor_safety(LA, prog(LA, src), audit=True)
        assert m.safety.ok and m.audit.ok and m.interpretation.ok


def test_history_ev_run():
    m = monitor_safety(HI, prog(HI, "(ev a)"))
    assert m.record.final_state.trace == ("a",)
    assert m.record.accumulated == RegexEffect(Sym(Prim("a")))


def test_history_static_effect():
    r = infer(HI.lang, prog(HI, "(seq (ev a) (ev b))"))
    g = ground_value(HI.sig, r.effect)
    assert g == RegexEffect(cat(Sym(Prim("a")), Sym(Prim("b"))))
    assert g.accepts((Prim("a"), Prim("b")))


def test_history_corpus_traces_in_language():
    for src in history_corpus(40, seed=2):
        m = monitor_safety(HI, prog(HI, src), audit=True)
        assert m.safety.ok and m.audit.ok and m.interpretation.ok
        assert m.static_effect.accepts(tuple(Prim(c) for c in m.record.final_state.trace))


def test_history_primitive_table():
    assert check_primitive_table(HI.lang).passed


def test_history_needs_alphabet():
    with pytest.raises(ValueError):
        history_instantiation(())


# --------------------------------------------------------------------------
# λ_trace


def test_translation_clauses():
    assert show_term(translate_lambda_trace(LEv("c"))) == "(app ev c)"
    assert translate_lambda_trace(LVar("x")) == Var("x")
    core = translate_lambda_trace(parse_lambda_trace("(let (x unit) x)"))
    assert show_term(core) == "(app (lam x x) unit)"


def test_let_bound_thunk():
    src = parse_lambda_trace("(let (x (lam (y unit) (ev a))) (seq (x unit) (x unit)))")
    r = infer(HI.lang, translate_lambda_trace(src))
    g = ground_value(HI.sig, r.effect)
    assert g == RegexEffect(cat(Sym(Prim("a")), Sym(Prim("a"))))


def test_fragment_rejections():
    with pytest.raises(FragmentError):
        lambda_trace_effect(LVar("free"))
    with pytest.raises(FragmentError):
        lambda_trace_effect(parse_lambda_trace("(if (ev a) unit unit)"))


def _language(sig, eff, n):
    g = ground_value(sig, eff)
    return {tuple(str(s) for s in w) for w in language_upto(g.re, n)}


def test_embedding_corpus():
    assert len(LAMBDA_TRACE_SOURCES) >= 10
    for lt in lambda_trace_corpus():
        ty, words = lambda_trace_effect(lt)
        r = infer(HI.lang, translate_lambda_trace(lt))
        n = max(len(w) for w in words) + 2
        assert _language(HI.sig, r.effect, n) == set(words), show_lambda_trace(lt)


def test_embedding_corpus_runs_inside_static_effect():
    for lt in lambda_trace_corpus():
        m = monitor_safety(HI, translate_lambda_trace(lt))
        assert m.safety.ok and m.interpretation.ok
