"""Syntax of kinds, effects, types and terms for the core calculus, with
free variables and capture-avoiding substitution.

Ground effects hold a semantic element directly.  Index values inside that
element (lock ids, event symbols) are themselves terms, so substituting a
value for a variable maps through the element with ``map_index``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Any, Optional, Union

from .indexed import index_values, map_index, show_elem

# --------------------------------------------------------------------------
# Kinds


@dataclass(frozen=True)
class KStar:
    def __str__(self) -> str:
        return "*"


@dataclass(frozen=True)
class KEff:
    def __str__(self) -> str:
        return "E"


@dataclass(frozen=True)
class KArrow:
    dom: "Kind"
    cod: "Kind"

    def __str__(self) -> str:
        return f"(=> {self.dom} {self.cod})"


Kind = Union[KStar, KEff, KArrow]
STAR, EFF = KStar(), KEff()

# --------------------------------------------------------------------------
# Effects


@dataclass(frozen=True)
class EVar:
    name: str


@dataclass(frozen=True)
class EUnit:
    pass


@dataclass(frozen=True)
class ESeq:
    left: "Effect"
    right: "Effect"


@dataclass(frozen=True)
class EJoin:
    left: "Effect"
    right: "Effect"


@dataclass(frozen=True)
class EStar:
    body: "Effect"


@dataclass(frozen=True)
class EGround:
    elem: Any


Effect = Union[EVar, EUnit, ESeq, EJoin, EStar, EGround]
I = EUnit()


def seq(*es: Effect) -> Effect:
    if not es:
        return I
    out = es[0]
    for e in es[1:]:
        out = ESeq(out, e)
    return out


def join(*es: Effect) -> Effect:
    out = es[0]
    for e in es[1:]:
        out = EJoin(out, e)
    return out


# --------------------------------------------------------------------------
# Types


@dataclass(frozen=True)
class TCon:
    name: str


@dataclass(frozen=True)
class TApp:
    fn: "Type"
    arg: "Type"


@dataclass(frozen=True)
class TEff:
    effect: Effect


@dataclass(frozen=True)
class TPi:
    var: str
    dom: "Type"
    effect: Effect
    cod: "Type"


@dataclass(frozen=True)
class TVar:
    name: str


@dataclass(frozen=True)
class TBool:
    pass


@dataclass(frozen=True)
class TForall:
    var: str
    kind: Kind
    effect: Effect
    body: "Type"


@dataclass(frozen=True)
class TUnit:
    pass


@dataclass(frozen=True)
class TSing:
    value: "Term"


Type = Union[TCon, TApp, TEff, TPi, TVar, TBool, TForall, TUnit, TSing]
BOOL, UNIT = TBool(), TUnit()


def arrow(dom: Type, eff: Effect, cod: Type) -> TPi:
    """Non-dependent function type."""
    return TPi("_", dom, eff, cod)


# --------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class Prim:
    name: str


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Lam:
    var: str
    annot: Optional[Type]
    body: "Term"


@dataclass(frozen=True)
class App:
    fn: "Term"
    arg: "Term"


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class If:
    cond: "Term"
    then: "Term"
    other: "Term"


@dataclass(frozen=True)
class While:
    cond: "Term"
    body: "Term"


@dataclass(frozen=True)
class TyLam:
    var: str
    kind: Kind
    body: "Term"


@dataclass(frozen=True)
class TyApp:
    fn: "Term"
    arg: Type


@dataclass(frozen=True)
class UnitLit:
    pass


Term = Union[Prim, Var, Lam, App, BoolLit, If, While, TyLam, TyApp, UnitLit]
TRUE, FALSE, UNIT_V = BoolLit(True), BoolLit(False), UnitLit()


def apps(fn: Term, *args) -> Term:
    """Apply ``fn`` to a spine; ``Type`` arguments become type applications."""
    for a in args:
        fn = TyApp(fn, a) if is_type(a) else App(fn, a)
    return fn


def is_type(x) -> bool:
    return isinstance(x, (TCon, TApp, TEff, TPi, TVar, TBool, TForall, TUnit, TSing))


_fresh = itertools.count()


def fresh(base: str) -> str:
    root = base.split("'")[0] or "v"
    return f"{root}'{next(_fresh)}"


def seq_term(first: Term, rest: Term) -> Term:
    """``first; rest`` as an application of an unannotated lambda."""
    return App(Lam(fresh("_"), None, rest), first)


def let_term(var: str, bound: Term, body: Term, annot: Optional[Type] = None) -> Term:
    return App(Lam(var, annot, body), bound)


def is_value(t: Term, arity=None) -> bool:
    """Syntactic values; ``arity`` maps primitive names to arities."""
    match t:
        case Var() | Lam() | TyLam() | BoolLit() | UnitLit():
            return True
        case Prim(name):
            return arity is None or arity.get(name, 0) == 0
    return False


# --------------------------------------------------------------------------
# Free variables.  Term variables and type variables are separate namespaces.


def fv_term(t: Term) -> frozenset:
    match t:
        case Var(x):
            return frozenset([x])
        case Prim() | BoolLit() | UnitLit():
            return frozenset()
        case Lam(x, annot, body):
            ann = fv_type(annot) if annot is not None else frozenset()
            return ann | (fv_term(body) - {x})
        case App(f, a):
            return fv_term(f) | fv_term(a)
        case If(c, a, b):
            return fv_term(c) | fv_term(a) | fv_term(b)
        case While(c, b):
            return fv_term(c) | fv_term(b)
        case TyLam(_, _, body):
            return fv_term(body)
        case TyApp(f, ty):
            return fv_term(f) | fv_type(ty)
    raise TypeError(t)


def ftv_term(t: Term) -> frozenset:
    match t:
        case Var() | Prim() | BoolLit() | UnitLit():
            return frozenset()
        case Lam(_, annot, body):
            ann = ftv_type(annot) if annot is not None else frozenset()
            return ann | ftv_term(body)
        case App(f, a):
            return ftv_term(f) | ftv_term(a)
        case If(c, a, b):
            return ftv_term(c) | ftv_term(a) | ftv_term(b)
        case While(c, b):
            return ftv_term(c) | ftv_term(b)
        case TyLam(a, _, body):
            return ftv_term(body) - {a}
        case TyApp(f, ty):
            return ftv_term(f) | ftv_type(ty)
    raise TypeError(t)


def fv_type(t: Type) -> frozenset:
    match t:
        case TCon() | TVar() | TBool() | TUnit():
            return frozenset()
        case TApp(f, a):
            return fv_type(f) | fv_type(a)
        case TEff(e):
            return fv_effect(e)
        case TPi(x, dom, eff, cod):
            return fv_type(dom) | ((fv_effect(eff) | fv_type(cod)) - {x})
        case TForall(_, _, eff, body):
            return fv_effect(eff) | fv_type(body)
        case TSing(v):
            return fv_term(v)
    raise TypeError(t)


def ftv_type(t: Type) -> frozenset:
    match t:
        case TCon() | TBool() | TUnit():
            return frozenset()
        case TVar(a):
            return frozenset([a])
        case TApp(f, a):
            return ftv_type(f) | ftv_type(a)
        case TEff(e):
            return ftv_effect(e)
        case TPi(_, dom, eff, cod):
            return ftv_type(dom) | ftv_effect(eff) | ftv_type(cod)
        case TForall(a, _, eff, body):
            return (ftv_effect(eff) | ftv_type(body)) - {a}
        case TSing(v):
            return ftv_term(v)
    raise TypeError(t)


def fv_effect(e: Effect) -> frozenset:
    match e:
        case EVar() | EUnit():
            return frozenset()
        case ESeq(l, r) | EJoin(l, r):
            return fv_effect(l) | fv_effect(r)
        case EStar(b):
            return fv_effect(b)
        case EGround(elem):
            out = frozenset()
            for v in index_values(elem):
                out |= fv_term(v)
            return out
    raise TypeError(e)


def ftv_effect(e: Effect) -> frozenset:
    match e:
        case EVar(a):
            return frozenset([a])
        case EUnit():
            return frozenset()
        case ESeq(l, r) | EJoin(l, r):
            return ftv_effect(l) | ftv_effect(r)
        case EStar(b):
            return ftv_effect(b)
        case EGround(elem):
            out = frozenset()
            for v in index_values(elem):
                out |= ftv_term(v)
            return out
    raise TypeError(e)


# --------------------------------------------------------------------------
# Substitution of a value for a term variable


def subst_term(t: Term, x: str, v: Term) -> Term:
    """``t[v/x]``, renaming binders that would capture free variables of ``v``."""
    fv_v, ftv_v = fv_term(v), ftv_term(v)
    return _st(t, x, v, fv_v, ftv_v)


def _st(t: Term, x: str, v: Term, fvv, ftvv) -> Term:
    match t:
        case Var(y):
            return v if y == x else t
        case Prim() | BoolLit() | UnitLit():
            return t
        case Lam(y, annot, body):
            annot2 = _stt(annot, x, v, fvv, ftvv) if annot is not None else None
            if y == x:
                return Lam(y, annot2, body)
            if y in fvv:
                y2 = fresh(y)
                body = subst_term(body, y, Var(y2))
                y = y2
            return Lam(y, annot2, _st(body, x, v, fvv, ftvv))
        case App(f, a):
            return App(_st(f, x, v, fvv, ftvv), _st(a, x, v, fvv, ftvv))
        case If(c, a, b):
            return If(_st(c, x, v, fvv, ftvv), _st(a, x, v, fvv, ftvv), _st(b, x, v, fvv, ftvv))
        case While(c, b):
            return While(_st(c, x, v, fvv, ftvv), _st(b, x, v, fvv, ftvv))
        case TyLam(a, k, body):
            if a in ftvv:
                a2 = fresh(a)
                body = subst_type_in_term(body, a, TVar(a2) if k != EFF else TEff(EVar(a2)))
                a = a2
            return TyLam(a, k, _st(body, x, v, fvv, ftvv))
        case TyApp(f, ty):
            return TyApp(_st(f, x, v, fvv, ftvv), _stt(ty, x, v, fvv, ftvv))
    raise TypeError(t)


def subst_term_in_type(t: Type, x: str, v: Term) -> Type:
    return _stt(t, x, v, fv_term(v), ftv_term(v))


def _stt(t: Type, x: str, v: Term, fvv, ftvv) -> Type:
    match t:
        case TCon() | TVar() | TBool() | TUnit():
            return t
        case TApp(f, a):
            return TApp(_stt(f, x, v, fvv, ftvv), _stt(a, x, v, fvv, ftvv))
        case TEff(e):
            return TEff(_ste(e, x, v, fvv, ftvv))
        case TSing(w):
            return TSing(_st(w, x, v, fvv, ftvv))
        case TPi(y, dom, eff, cod):
            dom2 = _stt(dom, x, v, fvv, ftvv)
            if y == x:
                return TPi(y, dom2, eff, cod)
            if y in fvv:
                y2 = fresh(y)
                eff = subst_term_in_effect(eff, y, Var(y2))
                cod = subst_term_in_type(cod, y, Var(y2))
                y = y2
            return TPi(y, dom2, _ste(eff, x, v, fvv, ftvv), _stt(cod, x, v, fvv, ftvv))
        case TForall(a, k, eff, body):
            if a in ftvv:
                a2 = fresh(a)
                rep = TEff(EVar(a2)) if k == EFF else TVar(a2)
                eff = subst_type_in_effect(eff, a, rep)
                body = subst_type_in_type(body, a, rep)
                a = a2
            return TForall(a, k, _ste(eff, x, v, fvv, ftvv), _stt(body, x, v, fvv, ftvv))
    raise TypeError(t)


def subst_term_in_effect(e: Effect, x: str, v: Term) -> Effect:
    return _ste(e, x, v, fv_term(v), ftv_term(v))


def _ste(e: Effect, x: str, v: Term, fvv, ftvv) -> Effect:
    match e:
        case EVar() | EUnit():
            return e
        case ESeq(l, r):
            return ESeq(_ste(l, x, v, fvv, ftvv), _ste(r, x, v, fvv, ftvv))
        case EJoin(l, r):
            return EJoin(_ste(l, x, v, fvv, ftvv), _ste(r, x, v, fvv, ftvv))
        case EStar(b):
            return EStar(_ste(b, x, v, fvv, ftvv))
        case EGround(elem):
            if x not in fv_effect(e):
                return e
            return EGround(map_index(elem, lambda w: _st(w, x, v, fvv, ftvv)))
    raise TypeError(e)


# --------------------------------------------------------------------------
# Substitution of a type (or effect-as-type) for a type variable


class KindMismatch(TypeError):
    pass


def effect_of_type(t: Type) -> Effect:
    """View a type argument of kind E as an effect."""
    match t:
        case TEff(e):
            return e
        case TVar(a):
            return EVar(a)
    raise KindMismatch(f"expected an effect, got type {show_type(t)}")


def subst_type_in_effect(e: Effect, a: str, ty: Type) -> Effect:
    match e:
        case EVar(b):
            return effect_of_type(ty) if b == a else e
        case EUnit():
            return e
        case ESeq(l, r):
            return ESeq(subst_type_in_effect(l, a, ty), subst_type_in_effect(r, a, ty))
        case EJoin(l, r):
            return EJoin(subst_type_in_effect(l, a, ty), subst_type_in_effect(r, a, ty))
        case EStar(b):
            return EStar(subst_type_in_effect(b, a, ty))
        case EGround(elem):
            if a not in ftv_effect(e):
                return e
            return EGround(map_index(elem, lambda w: subst_type_in_term(w, a, ty)))
    raise TypeError(e)


def subst_type_in_type(t: Type, a: str, ty: Type) -> Type:
    match t:
        case TVar(b):
            if b != a:
                return t
            # An effect variable used in type position stands for its effect.
            return ty
        case TCon() | TBool() | TUnit():
            return t
        case TApp(f, x):
            return TApp(subst_type_in_type(f, a, ty), subst_type_in_type(x, a, ty))
        case TEff(e):
            return TEff(subst_type_in_effect(e, a, ty))
        case TSing(v):
            return TSing(subst_type_in_term(v, a, ty))
        case TPi(y, dom, eff, cod):
            if y in fv_type(ty):
                y2 = fresh(y)
                eff = subst_term_in_effect(eff, y, Var(y2))
                cod = subst_term_in_type(cod, y, Var(y2))
                y = y2
            return TPi(y, subst_type_in_type(dom, a, ty), subst_type_in_effect(eff, a, ty),
                       subst_type_in_type(cod, a, ty))
        case TForall(b, k, eff, body):
            if b == a:
                return t
            if b in ftv_type(ty):
                b2 = fresh(b)
                rep = TEff(EVar(b2)) if k == EFF else TVar(b2)
                eff = subst_type_in_effect(eff, b, rep)
                body = subst_type_in_type(body, b, rep)
                b = b2
            return TForall(b, k, subst_type_in_effect(eff, a, ty), subst_type_in_type(body, a, ty))
    raise TypeError(t)


def subst_type_in_term(t: Term, a: str, ty: Type) -> Term:
    match t:
        case Var() | Prim() | BoolLit() | UnitLit():
            return t
        case Lam(x, annot, body):
            annot2 = subst_type_in_type(annot, a, ty) if annot is not None else None
            if x in fv_type(ty):
                x2 = fresh(x)
                body = subst_term(body, x, Var(x2))
                x = x2
            return Lam(x, annot2, subst_type_in_term(body, a, ty))
        case App(f, x):
            return App(subst_type_in_term(f, a, ty), subst_type_in_term(x, a, ty))
        case If(c, x, y):
            return If(subst_type_in_term(c, a, ty), subst_type_in_term(x, a, ty),
                      subst_type_in_term(y, a, ty))
        case While(c, b):
            return While(subst_type_in_term(c, a, ty), subst_type_in_term(b, a, ty))
        case TyLam(b, k, body):
            if b == a:
                return t
            if b in ftv_type(ty):
                b2 = fresh(b)
                body = subst_type_in_term(body, b, TEff(EVar(b2)) if k == EFF else TVar(b2))
                b = b2
            return TyLam(b, k, subst_type_in_term(body, a, ty))
        case TyApp(f, x):
            return TyApp(subst_type_in_term(f, a, ty), subst_type_in_type(x, a, ty))
    raise TypeError(t)


# --------------------------------------------------------------------------
# Printing


def show_effect(e: Effect, show=show_elem) -> str:
    return _pe(e, 0, show)


def _pe(e: Effect, prec: int, show) -> str:
    match e:
        case EVar(a):
            return "'" + a
        case EUnit():
            return "I"
        case EGround(elem):
            s = show(elem)
            return f"({s})" if prec > 2 and ("|" in s or ";" in s or " " in s) else s
        case EStar(b):
            return _pe(b, 3, show) + "*"
        case ESeq(l, r):
            s = f"{_pe(l, 2, show)} ; {_pe(r, 2, show)}"
            return f"({s})" if prec > 2 else s
        case EJoin(l, r):
            s = f"{_pe(l, 1, show)} | {_pe(r, 1, show)}"
            return f"({s})" if prec > 1 else s
    raise TypeError(e)


def _bracket_effect(e: Effect, show) -> str:
    s = show_effect(e, show)
    return s if isinstance(e, (EVar, EUnit)) else f"[{s}]"


def show_type(t: Type, show=show_elem) -> str:
    match t:
        case TCon(n):
            return n
        case TVar(a):
            return a
        case TBool():
            return "bool"
        case TUnit():
            return "unit"
        case TApp():
            head, args = t, []
            while isinstance(head, TApp):
                args.append(head.arg)
                head = head.fn
            return "(" + " ".join([show_type(head, show)] + [show_type(a, show) for a in reversed(args)]) + ")"
        case TEff(e):
            return f"[{show_effect(e, show)}]"
        case TSing(v):
            return f"(S {show_term(v, show)})"
        case TPi(x, dom, eff, cod):
            return f"(pi ({x} {show_type(dom, show)}) {_bracket_effect(eff, show)} {show_type(cod, show)})"
        case TForall(a, k, eff, body):
            return f"(all ({a} {k}) {_bracket_effect(eff, show)} {show_type(body, show)})"
    raise TypeError(t)


def show_term(t: Term, show=show_elem) -> str:
    match t:
        case Var(x) | Prim(x):
            return x
        case BoolLit(b):
            return "true" if b else "false"
        case UnitLit():
            return "unit"
        case Lam(x, None, body):
            return f"(lam {x} {show_term(body, show)})"
        case Lam(x, annot, body):
            return f"(lam ({x} {show_type(annot, show)}) {show_term(body, show)})"
        case App(f, a):
            return f"(app {show_term(f, show)} {show_term(a, show)})"
        case If(c, a, b):
            return f"(if {show_term(c, show)} {show_term(a, show)} {show_term(b, show)})"
        case While(c, b):
            return f"(while {show_term(c, show)} {show_term(b, show)})"
        case TyLam(a, k, body):
            return f"(tylam ({a} {k}) {show_term(body, show)})"
        case TyApp(f, ty):
            return f"(tyapp {show_term(f, show)} {show_type(ty, show)})"
    raise TypeError(t)


def __str_term(self) -> str:
    return show_term(self)


for _cls in (Prim, Var, Lam, App, BoolLit, If, While, TyLam, TyApp, UnitLit):
    _cls.__str__ = __str_term
for _cls in (TCon, TApp, TEff, TPi, TVar, TBool, TForall, TUnit, TSing):
    _cls.__str__ = lambda self: show_type(self)
for _cls in (EVar, EUnit, ESeq, EJoin, EStar, EGround):
    _cls.__str__ = lambda self: show_effect(self)


def size(t: Term) -> int:
    match t:
        case Lam(_, _, b) | TyLam(_, _, b):
            return 1 + size(b)
        case App(f, a):
            return 1 + size(f) + size(a)
        case If(c, a, b):
            return 1 + size(c) + size(a) + size(b)
        case While(c, b):
            return 1 + size(c) + size(b)
        case TyApp(f, _):
            return 1 + size(f)
    return 1
