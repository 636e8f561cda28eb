"""Concrete instantiations of the core calculus: locks with atomicity, its
atomicity-only shadow, and history effects, plus the λ_trace translation
and an independent reference semantics for λ_trace effects.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from typing import Any, Optional

from .checker import Language
from .effects import EffectSignature, KindError, locking_arity
from .indexed import show_elem
from .instances import ATOMICITY, LOCK_UNIT, LockEffect, atomicity, lockset, ms_items, product
from .regex import EPS, RegexEffect, Sym, alt, cat, regex_quantale
from .runtime import Instantiation, PrimResult
from .terms import (BOOL, EFF, STAR, UNIT, UNIT_V, App, BoolLit, EGround, EJoin, ESeq, EUnit, If, KArrow, Lam, Prim,
                    TApp, TCon, TForall, TPi, TSing, TVar, Term, Type, UnitLit, Var, seq_term)

LOCK, REF, EVENT = TCon("lock"), TCon("ref"), TCon("event")
_ATOM_NAMES = {"B": "B", "L": "L", "R": "R", "A": "A", "TOP": "TOP", "⊤": "TOP"}


# --------------------------------------------------------------------------
# Locks and atomicity


@dataclass(frozen=True)
class LockAtomState:
    """Lock map (name → held) and heap (location → value term)."""

    locks: tuple = ()
    heap: tuple = ()

    def held(self) -> frozenset:
        return frozenset(l for l, h in self.locks if h)

    def lock_map(self) -> dict:
        return dict(self.locks)

    def heap_map(self) -> dict:
        return dict(self.heap)

    def with_lock(self, l: str, held: bool) -> "LockAtomState":
        m = self.lock_map()
        m[l] = held
        return LockAtomState(tuple(sorted(m.items())), self.heap)

    def with_cell(self, r: str, v: Term) -> "LockAtomState":
        h = self.heap_map()
        h[r] = v
        return LockAtomState(self.locks, tuple(sorted(h.items())))

    def __str__(self) -> str:
        locks = ",".join(f"{l}:{'held' if h else 'free'}" for l, h in self.locks)
        return f"locks[{locks}]"


def lockatom_signature() -> EffectSignature:
    q = product(lockset(), atomicity())

    def construct(name: str, args: tuple):
        if name in _ATOM_NAMES:
            if args:
                raise KindError(f"{name} takes no arguments")
            return (LOCK_UNIT, _ATOM_NAMES[name])
        shape = locking_arity(name)
        if shape is None:
            raise KeyError(name)
        n, m = shape
        if len(args) != n + m:
            raise KindError(f"{name} expects {n + m} arguments, got {len(args)}")
        return (LockEffect.of(args[:n], args[n:]), "B")
    return EffectSignature("lockatom", q, construct, show_elem)


def atomicity_signature() -> EffectSignature:
    q = atomicity()

    def construct(name: str, args: tuple):
        if name not in _ATOM_NAMES or args:
            raise KeyError(name)
        return _ATOM_NAMES[name]
    return EffectSignature("atomicity", q, construct, show_elem)


def _lock_delta(sig: EffectSignature, acquire, release, read) -> dict:
    x, a = "x", "a"
    ref_x_a = TApp(TApp(REF, TSing(Var(x))), TVar(a))
    unit_eff = EUnit()
    return {
        "new_lock": TPi("_", UNIT, unit_eff, LOCK),
        "acquire": TPi(x, LOCK, acquire(Var(x)), UNIT),
        "release": TPi(x, LOCK, release(Var(x)), UNIT),
        "alloc": TPi(x, LOCK, unit_eff, TForall(a, STAR, unit_eff, TPi("v", TVar(a), unit_eff, ref_x_a))),
        "read": TPi(x, LOCK, unit_eff, TForall(a, STAR, unit_eff, TPi("r", ref_x_a, read(Var(x)), TVar(a)))),
        "write": TPi(x, LOCK, unit_eff, TForall(a, STAR, unit_eff, TPi(
            "r", ref_x_a, unit_eff, TPi("v", TVar(a), read(Var(x)), TVar(a))))),
    }


LOCK_ARITY = {"new_lock": 1, "acquire": 1, "release": 1, "alloc": 3, "read": 3, "write": 4}
LOCK_KINDS = {"lock": STAR, "ref": KArrow(STAR, KArrow(STAR, STAR))}


def _lock_effects(kind: str):
    """Dynamic effect of each lock primitive, keyed by the acted-on lock."""
    if kind == "lockatom":
        return {
            "acquire": lambda l: (LockEffect.of((), (l,)), "R"),
            "release": lambda l: (LockEffect.of((l,), ()), "L"),
            "access": lambda l: (LockEffect.of((l,), (l,)), "B"),
            "pure": (LOCK_UNIT, "B"),
        }
    return {"acquire": lambda l: "R", "release": lambda l: "L", "access": lambda l: "B", "pure": "B"}


def _lock_semantics(kind: str):
    eff = _lock_effects(kind)

    def semantics(p: str, args: tuple, st: LockAtomState) -> Optional[PrimResult]:
        match p, args:
            case "new_lock", (_,):
                l = f"@l{len(st.locks)}"
                return PrimResult(Prim(l), eff["pure"], st.with_lock(l, False), {l: LOCK})
            case "acquire", (Prim(l),):
                if st.lock_map().get(l) is not False:
                    return None
                return PrimResult(UNIT_V, eff["acquire"](Prim(l)), st.with_lock(l, True))
            case "release", (Prim(l),):
                if st.lock_map().get(l) is not True:
                    return None
                return PrimResult(UNIT_V, eff["release"](Prim(l)), st.with_lock(l, False))
            case "alloc", (Prim(l), ty, v):
                r = f"@r{len(st.heap)}"
                cell = TApp(TApp(REF, TSing(Prim(l))), ty)
                return PrimResult(Prim(r), eff["pure"], st.with_cell(r, v), {r: cell})
            case "read", (Prim(l), _, Prim(r)):
                h = st.heap_map()
                if r not in h:
                    return None
                return PrimResult(h[r], eff["access"](Prim(l)), st)
            case "write", (Prim(l), _, Prim(r), v):
                if r not in st.heap_map():
                    return None
                return PrimResult(v, eff["access"](Prim(l)), st.with_cell(r, v))
        return None
    return semantics


def _held_multiset(st: LockAtomState) -> dict:
    # Runtime states hold booleans; law checks also use re-entrant counts.
    return {Prim(l): int(h) for l, h in st.locks if h}


def lock_interpretation(effect, pre: LockAtomState, post: LockAtomState) -> bool:
    """Held-lock projection: the precondition claims are held before, and
    the held locks change exactly by the effect's net acquisitions and
    releases.  The atomicity component relates every pair.

    Sequencing is interpreted as relational composition, but a join is only
    contained in the union: a larger lock effect demands more locks, so it
    relates fewer states."""
    lock = effect[0] if isinstance(effect, tuple) else effect
    before = _held_multiset(pre)
    need = dict(lock.pre)
    if any(before.get(k, 0) < n for k, n in need.items()):
        return False
    have = dict(lock.post)
    after = dict(before)
    for k in set(need) | set(have):
        after[k] = after.get(k, 0) - need.get(k, 0) + have.get(k, 0)
    after = {k: n for k, n in after.items() if n}
    return after == _held_multiset(post)


def _lock_names(n: int = 3) -> list:
    return [f"@l{i}" for i in range(n)]


MAX_COUNT = 3


def _sample_lock_state(rng: random.Random) -> LockAtomState:
    return LockAtomState(tuple((l, rng.randint(0, 2)) for l in _lock_names()))


def _lock_between(s: LockAtomState, t: Optional[LockAtomState]) -> list:
    names = [l for l, _ in s.locks]
    counts = range(MAX_COUNT + 1)
    return [LockAtomState(tuple(zip(names, c))) for c in itertools.product(counts, repeat=len(names))]


def _sample_lock_effect(rng: random.Random):
    ids = [Prim(l) for l in _lock_names()]
    pre = [i for i in ids if rng.random() < 0.3]
    post = [i for i in ids if rng.random() < 0.3]
    return (LockEffect.of(pre, post), rng.choice(ATOMICITY))


def _grow_lock_effect(rng: random.Random, e):
    ids = [Prim(l) for l in _lock_names()]
    extra = [i for i in ids if rng.random() < 0.3]
    lock = LockEffect.of(list(_expand(e[0].pre)) + extra, list(_expand(e[0].post)) + extra)
    return (lock, rng.choice([a for a in ATOMICITY if atomicity().join(e[1], a) == a]))


def _expand(ms: tuple):
    return ms_items(ms)


def _lock_instantiation(kind: str, sig: EffectSignature, delta: dict) -> Instantiation:
    import dataclasses
    q = dataclasses.replace(sig.quantale, sample=_sample_lock_effect, grow=_grow_lock_effect,
                            elements=None) if kind == "lockatom" else sig.quantale
    sig = dataclasses.replace(sig, quantale=q)
    lang = Language(sig, delta, dict(LOCK_ARITY), dict(LOCK_KINDS))
    return Instantiation(
        name=kind, lang=lang, initial_state=LockAtomState, semantics=_lock_semantics(kind),
        state_typing=lock_state_typing, interpret=lock_interpretation if kind == "lockatom" else None,
        show_state=str, sample_state=_sample_lock_state, between=_lock_between,
    )


def lock_state_typing(st: LockAtomState, sigma) -> bool:
    if any(sigma.get(l) != LOCK for l, _ in st.locks):
        return False
    return all(r in sigma for r, _ in st.heap)


def locking_atomicity_instantiation() -> Instantiation:
    """Flow-sensitive lock claims paired with atomicity movers."""
    sig = lockatom_signature()

    def g(lock, atom):
        return EGround((lock, atom))
    delta = _lock_delta(
        sig,
        acquire=lambda x: g(LockEffect.of((), (x,)), "R"),
        release=lambda x: g(LockEffect.of((x,), ()), "L"),
        read=lambda x: g(LockEffect.of((x,), (x,)), "B"),
    )
    return _lock_instantiation("lockatom", sig, delta)


def atomicity_instantiation() -> Instantiation:
    """The same primitives tracking movers only."""
    sig = atomicity_signature()
    delta = _lock_delta(sig, acquire=lambda x: EGround("R"), release=lambda x: EGround("L"),
                        read=lambda x: EUnit())
    return _lock_instantiation("atomicity", sig, delta)


def faulty_release(inst: Instantiation) -> Instantiation:
    """The lock instantiation with ``release`` mistyped as pure."""
    delta = dict(inst.lang.delta)
    delta["release"] = TPi("x", LOCK, EUnit(), UNIT)
    return inst.with_delta(delta)


def acquire_unchecked(inst: Instantiation) -> Instantiation:
    """Types ``acquire`` as pure so that a double acquire typechecks; the
    dynamic semantics still has no rule for it."""
    delta = dict(inst.lang.delta)
    delta["acquire"] = TPi("x", LOCK, EUnit(), UNIT)
    return inst.with_delta(delta)


# --------------------------------------------------------------------------
# History effects


@dataclass(frozen=True)
class HistoryState:
    trace: tuple = ()

    def __str__(self) -> str:
        return "[" + ",".join(self.trace) + "]"


def history_signature(alphabet: tuple) -> EffectSignature:
    q = regex_quantale(tuple(Prim(c) for c in alphabet))
    names = set(alphabet)

    def construct(name: str, args: tuple):
        if name in ("ev", "Ev") and len(args) == 1:
            return RegexEffect(Sym(args[0]))
        if name in ("eps", "ε") and not args:
            return RegexEffect(EPS)
        if name in names and not args:
            return RegexEffect(Sym(Prim(name)))
        raise KeyError(name)
    return EffectSignature("history", q, construct, _show_history)


def _show_history(e) -> str:
    if isinstance(e, RegexEffect):
        return "{" + str(e.re) + "}"
    return show_elem(e)


def history_interpretation(effect: RegexEffect, pre: HistoryState, post: HistoryState) -> bool:
    """``post`` extends ``pre`` by a word of the effect's language."""
    n = len(pre.trace)
    if post.trace[:n] != pre.trace:
        return False
    return effect.accepts(tuple(Prim(c) for c in post.trace[n:]))


def history_instantiation(alphabet=("a", "b", "c")) -> Instantiation:
    alphabet = tuple(alphabet)
    if not alphabet:
        raise ValueError("history instantiation needs a nonempty alphabet")
    sig = history_signature(alphabet)
    delta = {c: EVENT for c in alphabet}
    delta["ev"] = TPi("x", EVENT, EGround(RegexEffect(Sym(Var("x")))), UNIT)
    arity = {"ev": 1}
    lang = Language(sig, delta, arity, {"event": STAR})

    def semantics(p, args, st: HistoryState):
        match p, args:
            case "ev", (Prim(c),) if c in alphabet:
                return PrimResult(UNIT_V, RegexEffect(Sym(Prim(c))), HistoryState(st.trace + (c,)))
        return None

    def sample_state(rng):
        return HistoryState(tuple(rng.choice(alphabet) for _ in range(rng.randrange(4))))

    def between(s, t):
        if t is None:
            return [HistoryState(s.trace + w) for n in range(3) for w in itertools.product(alphabet, repeat=n)]
        if t.trace[:len(s.trace)] != s.trace:
            return []
        return [HistoryState(t.trace[:k]) for k in range(len(s.trace), len(t.trace) + 1)]

    return Instantiation(
        name="history", lang=lang, initial_state=HistoryState, semantics=semantics,
        state_typing=lambda st, sigma: True, interpret=history_interpretation, show_state=str,
        sample_state=sample_state, between=between,
    )


# --------------------------------------------------------------------------
# λ_trace


@dataclass(frozen=True)
class LVar:
    name: str


@dataclass(frozen=True)
class LConst:
    name: str


@dataclass(frozen=True)
class LEv:
    event: str


@dataclass(frozen=True)
class LBool:
    value: bool


@dataclass(frozen=True)
class LUnit:
    pass


@dataclass(frozen=True)
class LIf:
    cond: Any
    then: Any
    other: Any


@dataclass(frozen=True)
class LApp:
    fn: Any
    arg: Any


@dataclass(frozen=True)
class LLam:
    var: str
    annot: Type
    body: Any


@dataclass(frozen=True)
class LLet:
    var: str
    bound: Any
    body: Any


class FragmentError(ValueError):
    """The λ_trace term lies outside the supported fragment."""


def translate_lambda_trace(t) -> Term:
    """The type-and-effect preserving embedding; ``let`` becomes a redex."""
    match t:
        case LVar(x):
            return Var(x)
        case LConst(c):
            return Prim(c)
        case LEv(c):
            return App(Prim("ev"), Prim(c))
        case LBool(b):
            return BoolLit(b)
        case LUnit():
            return UNIT_V
        case LIf(c, a, b):
            return If(translate_lambda_trace(c), translate_lambda_trace(a), translate_lambda_trace(b))
        case LApp(f, a):
            return App(translate_lambda_trace(f), translate_lambda_trace(a))
        case LLam(x, ty, body):
            return Lam(x, ty, translate_lambda_trace(body))
        case LLet(x, v, body):
            if not _lt_value(v):
                raise FragmentError("let binds values only")
            return App(Lam(x, None, translate_lambda_trace(body)), translate_lambda_trace(v))
    raise FragmentError(f"not a λ_trace term: {t!r}")


def _lt_value(t) -> bool:
    return isinstance(t, (LVar, LConst, LBool, LUnit, LLam))


# A reference semantics for λ_trace typing over explicit finite trace sets.
# Types: "bool", "unit", "event", or ("fn", dom, traces, cod).


def _lt_type(ty: Type):
    match ty:
        case TCon("event"):
            return "event"
        case _ if ty == BOOL:
            return "bool"
        case _ if ty == UNIT:
            return "unit"
        case TPi(_, dom, eff, cod):
            return ("fn", _lt_type(dom), _lt_effect(eff), _lt_type(cod))
    raise FragmentError(f"type outside the λ_trace fragment: {ty}")


def _lt_effect(eff) -> frozenset:
    match eff:
        case EUnit():
            return frozenset([()])
        case EGround(RegexEffect() as r):
            return _finite_words(r)
        case ESeq(a, b):
            return _concat(_lt_effect(a), _lt_effect(b))
        case EJoin(a, b):
            return _lt_effect(a) | _lt_effect(b)
    raise FragmentError(f"annotation effect outside the fragment: {eff}")


def _finite_words(r: RegexEffect, bound: int = 8) -> frozenset:
    from .regex import language_upto
    return frozenset(tuple(str(s) for s in w) for w in language_upto(r.re, bound))


def _concat(*sets) -> frozenset:
    out = frozenset([()])
    for s in sets:
        out = frozenset(a + b for a in out for b in s)
    return out


def lambda_trace_effect(t, env: Optional[dict] = None):
    """Type and finite trace set of a λ_trace term by the source rules:
    application sequences function, argument and latent histories, a
    conditional sequences the test before the union of its branches."""
    env = env or {}
    match t:
        case LVar(x):
            if x not in env:
                raise FragmentError(f"unbound {x}")
            return env[x], frozenset([()])
        case LConst(_):
            return "event", frozenset([()])
        case LEv(c):
            return "unit", frozenset([(c,)])
        case LBool():
            return "bool", frozenset([()])
        case LUnit():
            return "unit", frozenset([()])
        case LIf(c, a, b):
            tc, h1 = lambda_trace_effect(c, env)
            ta, h2 = lambda_trace_effect(a, env)
            tb, h3 = lambda_trace_effect(b, env)
            if tc != "bool" or ta != tb:
                raise FragmentError("ill-typed conditional")
            return ta, _concat(h1, h2 | h3)
        case LApp(f, a):
            tf, h1 = lambda_trace_effect(f, env)
            ta, h2 = lambda_trace_effect(a, env)
            if not (isinstance(tf, tuple) and tf[1] == ta):
                raise FragmentError("ill-typed application")
            return tf[3], _concat(h1, h2, tf[2])
        case LLam(x, ty, body):
            dom = _lt_type(ty)
            tb, h = lambda_trace_effect(body, {**env, x: dom})
            return ("fn", dom, h, tb), frozenset([()])
        case LLet(x, v, body):
            tv, hv = lambda_trace_effect(v, env)
            if hv != frozenset([()]):
                raise FragmentError("let binds values only")
            return lambda_trace_effect(body, {**env, x: tv})
    raise FragmentError(f"not a λ_trace term: {t!r}")


def parse_lambda_trace(text: str, alphabet=("a", "b", "c")):
    """S-expression λ_trace syntax: ``(ev a)``, ``(lam (x T) e)``,
    ``(let (x v) e)``, ``(if e e e)``, ``(e e)``, constants and variables."""
    from .parser import ParseError, _Scope, parse_type_sexp, read_one
    sig = history_signature(tuple(alphabet))
    consts = set(alphabet)

    def go(s, bound):
        match s:
            case "true" | "false":
                return LBool(s == "true")
            case "unit":
                return LUnit()
            case str() if s in bound:
                return LVar(s)
            case str() if s in consts:
                return LConst(s)
            case str():
                return LVar(s)
            case ["ev", str() as c] if c in consts:
                return LEv(c)
            case ["ev", _]:
                raise FragmentError("ev takes an event constant")
            case ["lam", [str() as x, ty], body]:
                scope = _Scope(sig, {c: 0 for c in consts} | {"ev": 1}, frozenset(bound))
                return LLam(x, parse_type_sexp(ty, scope), go(body, bound | {x}))
            case ["let", [str() as x, v], body]:
                return LLet(x, go(v, bound), go(body, bound | {x}))
            case ["if", c, a, b]:
                return LIf(go(c, bound), go(a, bound), go(b, bound))
            case ["seq", first, *rest] if rest:
                # e1; e2 is (λ_:unit. e2) e1.
                out = go(rest[-1], bound)
                for item in reversed([first, *rest[:-1]]):
                    out = _lt_seq(go(item, bound), out)
                return out
            case [f, *args] if args:
                out = go(f, bound)
                for a in args:
                    out = LApp(out, go(a, bound))
                return out
        raise ParseError(f"bad λ_trace term {s!r}")
    return go(read_one(text), frozenset())


def _lt_seq(first, rest):
    return LApp(LLam("_", UNIT, rest), first)


def show_lambda_trace(t) -> str:
    from .terms import show_type
    match t:
        case LVar(x) | LConst(x):
            return x
        case LEv(c):
            return f"(ev {c})"
        case LBool(b):
            return "true" if b else "false"
        case LUnit():
            return "unit"
        case LIf(c, a, b):
            return f"(if {show_lambda_trace(c)} {show_lambda_trace(a)} {show_lambda_trace(b)})"
        case LApp(f, a):
            return f"({show_lambda_trace(f)} {show_lambda_trace(a)})"
        case LLam(x, ty, body):
            return f"(lam ({x} {show_type(ty)}) {show_lambda_trace(body)})"
        case LLet(x, v, body):
            return f"(let ({x} {show_lambda_trace(v)}) {show_lambda_trace(body)})"
    return repr(t)


__all__ = [
    "EVENT", "FragmentError", "HistoryState", "LApp", "LBool", "LConst", "LEv", "LIf", "LLam", "LLet",
    "LOCK", "LUnit", "LVar", "LockAtomState", "REF", "acquire_unchecked", "atomicity_instantiation",
    "atomicity_signature", "faulty_release", "history_instantiation", "history_interpretation",
    "history_signature", "lambda_trace_effect", "lock_interpretation", "locking_atomicity_instantiation",
    "lockatom_signature", "parse_lambda_trace", "show_lambda_trace", "translate_lambda_trace",
]
