"""End-to-end acceptance checks, one test per criterion.

The conftest hook prints a single ``criterion N: pass|fail`` line for each
test here at the end of the run.
"""

import random
import time
from pathlib import Path

import pytest

from effectq.checker import Language, TypingError, infer
from effectq.corpus import effect_fuzz, history_corpus, lambda_trace_corpus, lockatom_corpus
from effectq.effects import constant_signature, equiv, evaluate, ground_value, nontrivial, normalize
from effectq.instances import (atomicity, count, crit, deadlock, lift_semilattice, lock_star, lockset,
                               powerset_lattice, product)
from effectq.kleene import as_effect_quantale, check_ka_laws, regular_language_ka, unfold_identity_holds
from effectq.parser import parse_effect, parse_program
from effectq.quantale import (brute_force_precision, check_laws, check_star_laws, check_star_precision,
                              derive_star_finite)
from effectq.regex import RegexEffect, Sym, alt, language_upto, random_regex, regex_quantale, star
from effectq.runtime import monitor_safety
from effectq.systems import (LOCK, LockAtomState, atomicity_instantiation, faulty_release, history_instantiation,
                             lambda_trace_effect, locking_atomicity_instantiation, translate_lambda_trace)
from effectq.terms import EJoin, ESeq, EStar, EVar, TPi, UNIT, App, Prim

PROGRAMS = Path(__file__).resolve().parent.parent / "programs"


def prog(inst, text):
    prims = {p: inst.lang.arity_of(p) for p in inst.lang.delta}
    return parse_program(text, inst.sig, prims)


def test_criterion_01_law_suite():
    start = time.perf_counter()
    for q in (atomicity(), crit(), product(atomicity(), crit())):
        r = check_laws(q)
        assert r.mode == "exhaustive" and r.passed, r.counterexamples[:2]
    for q in (lockset(), deadlock(), regex_quantale(("a", "b")), count()):
        r = check_laws(q, samples=1000, seed=0)
        assert r.passed, (q.name, r.counterexamples[:2])
    assert time.perf_counter() - start < 5.0


def test_criterion_02_derived_iteration():
    assert derive_star_finite(atomicity()).table == {"B": "B", "L": "L", "R": "R", "A": "TOP", "TOP": "TOP"}
    assert derive_star_finite(crit()).table == {
        "eps": "eps", "critical": "critical", "entrant": "entrant", "locking": None, "unlocking": None,
    }
    lift = lift_semilattice(powerset_lattice(["e1", "e2"]))
    assert all(derive_star_finite(lift)(x) == x for x in lift.elements)
    q = lockset()
    rng = random.Random(0)
    for _ in range(1000):
        x = q.sample(rng)
        s = lock_star(x)
        assert (s is not None) == (x.pre == x.post)
        assert s is None or s == x


def test_criterion_03_precision():
    finite = [atomicity(), crit(), product(atomicity(), crit()), lift_semilattice(powerset_lattice(["e1", "e2"]))]
    for q in finite:
        assert check_star_precision(q, derive_star_finite(q)), q.name
    for q in (atomicity(), crit(), lift_semilattice(powerset_lattice(["e1"]))):
        assert brute_force_precision(q), q.name


def test_criterion_04_reduction_law():
    sig = constant_signature(atomicity())
    e = parse_effect("(R* ; B*)* ; A ; (B* ; L*)*", sig)
    assert ground_value(sig, normalize(sig, e)) == "A"
    assert evaluate(sig, e) == "A"


def test_criterion_05_lax_witness():
    a, b = Sym("a"), Sym("b")
    ab = ("a", "b")
    joined_then_starred = RegexEffect(star(alt(a, b)))
    starred_then_joined = RegexEffect(alt(star(a), star(b)))
    assert joined_then_starred.accepts(ab) is True
    assert starred_then_joined.accepts(ab) is False


def test_criterion_06_typing_reproduction():
    la = locking_atomicity_instantiation()
    r = infer(la.lang, prog(la, (PROGRAMS / "atomic_read.eq").read_text()))
    assert la.sig.show(ground_value(la.sig, r.effect)) == "(∅,∅)⊗B"
    assert la.sig.show(ground_value(la.sig, r.type.cod.effect)) == "(∅,∅)⊗A"
    at = atomicity_instantiation()
    w = infer(at.lang, prog(at, (PROGRAMS / "wrapper.eq").read_text()))
    assert equiv(at.sig, w.type.cod.body.effect, parse_effect("R ; 'g ; L", at.sig))


def test_criterion_07_safety():
    la = locking_atomicity_instantiation()
    sources = lockatom_corpus(100, seed=0)
    assert len(sources) >= 100
    for src in sources:
        m = monitor_safety(la, prog(la, src), fuel=10_000, audit=True)
        assert m.record.status in ("Value", "OutOfFuel")
        assert m.safety.ok and m.audit.ok, src
    bad = faulty_release(la)
    held = LockAtomState().with_lock("@l0", True)
    m = monitor_safety(bad, App(Prim("release"), Prim("@l0")), start=(held, {"@l0": LOCK}))
    assert not m.safety.ok


def test_criterion_08_interpreted_safety():
    hi = history_instantiation(("a", "b", "c"))
    sources = history_corpus(50, seed=0)
    assert len(sources) >= 50
    for src in sources:
        m = monitor_safety(hi, prog(hi, src), audit=True)
        assert m.record.status == "Value"
        assert m.interpretation.ok and m.safety.ok
        assert m.static_effect.accepts(tuple(Prim(c) for c in m.record.final_state.trace))


def test_criterion_09_lambda_trace_embedding():
    hi = history_instantiation(("a", "b", "c"))
    corpus = lambda_trace_corpus()
    assert len(corpus) >= 10
    for lt in corpus:
        _, words = lambda_trace_effect(lt)
        g = ground_value(hi.sig, infer(hi.lang, translate_lambda_trace(lt)).effect)
        n = max(len(w) for w in words) + 2
        got = {tuple(str(s) for s in w) for w in language_upto(g.re, n)}
        assert got == set(words)


def test_criterion_10_kleene_adapter():
    k = regular_language_ka(("a", "b"))
    assert check_ka_laws(k, samples=1000, seed=0).passed
    q = as_effect_quantale(k)
    assert check_laws(q, samples=300, seed=0).passed
    assert check_star_laws(q, samples=300, seed=0).passed
    rng = random.Random(0)
    for _ in range(100):
        assert unfold_identity_holds(RegexEffect(random_regex(rng, ("a", "b"))))


def test_criterion_11_nontrivial():
    sig = constant_signature(crit())
    lk = TPi("_", UNIT, parse_effect("locking", sig), UNIT)
    lang = Language(sig, {"lk": lk}, {"lk": 1}, {})
    prims = {"lk": 1}
    for src in ("(seq (lk unit) (lk unit))", "(while true (lk unit))"):
        with pytest.raises(TypingError, match="trivially invalid"):
            infer(lang, parse_program(src, sig, prims))
    locking = sig.ground("locking")
    assert not nontrivial(sig, ESeq(locking, locking))
    assert not nontrivial(sig, EStar(locking))
    for ground in ("locking", "critical", "entrant", "eps", "unlocking"):
        assert nontrivial(sig, EJoin(EVar("a"), sig.ground(ground)))
    rng = random.Random(0)
    leaves = [sig.ground(x) for x in ("eps", "locking", "unlocking", "critical", "entrant")]
    start = time.perf_counter()
    for _ in range(300):
        nontrivial(sig, effect_fuzz(rng, 8, leaves, ("a", "b")))
    assert time.perf_counter() - start < 60
