"""Algorithmic typing for the core calculus: ``Γ;Σ ⊢ e : τ | γ``.

Lambdas carry argument annotations and type lambdas carry kinds, so
inference is syntax directed.  Effects are kept in canonical form as they
are built, and every composite effect is checked for nontriviality with a
single strict normalizer shared across the whole derivation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

from .effects import (EMPTY_CTX, Ctx, EffectSignature, KindError, Normalizer, TrivialEffect, equiv,
                      kind_effect)
from .quantale import LawReport
from .terms import (BOOL, EFF, STAR, UNIT, App, BoolLit, EJoin, ESeq, EStar, EUnit, EVar, Effect, If,
                    KArrow, Lam, Prim, TApp, TBool, TCon, TEff, TForall, TPi, TSing, TUnit, TVar, Term,
                    TyApp, TyLam, Type, UnitLit, Var, While, fresh, fv_effect, fv_type, is_value,
                    show_type, subst_term, subst_term_in_effect, subst_term_in_type,
                    subst_type_in_effect, subst_type_in_type)


@dataclass(frozen=True)
class Language:
    """Static parameters of an instantiation: effects, δ, arities, K."""

    effects: EffectSignature
    delta: Mapping[str, Type]
    arity: Mapping[str, int]
    kinds: Mapping[str, object]

    def arity_of(self, p: str) -> int:
        return self.arity.get(p, 0)

    def with_delta(self, delta: Mapping[str, Type]) -> "Language":
        return Language(self.effects, dict(delta), self.arity, self.kinds)


class TypingError(TypeError):
    """A failed derivation; ``rule`` names the rule that could not apply."""

    def __init__(self, rule: str, message: str, trace: tuple = ()):
        self.rule, self.trace = rule, tuple(trace)
        super().__init__(f"{rule}: {message}")


@dataclass
class TypingResult:
    type: Type
    effect: Effect
    trace: list = field(default_factory=list)


# --------------------------------------------------------------------------
# Full application of primitives


def spine(t: Term) -> tuple:
    args = []
    while isinstance(t, (App, TyApp)):
        args.append(t.arg)
        t = t.fn
    return t, args[::-1]


def check_full_application(lang: Language, t: Term, sigma: Optional[Mapping] = None) -> None:
    """Rejects primitives of positive arity outside a spine of their arity."""
    head, args = spine(t)
    if isinstance(head, Prim):
        n = lang.arity_of(head.name)
        if n > len(args):
            raise TypingError("T-Prim", f"primitive {head.name} expects {n} arguments, got {len(args)}")
    elif args:
        _sub_full(lang, head)
    else:
        _sub_full(lang, t)
        return
    for a in args:
        if not isinstance(a, (TCon, TApp, TEff, TPi, TVar, TBool, TForall, TUnit, TSing)):
            check_full_application(lang, a)


def _sub_full(lang: Language, t: Term) -> None:
    match t:
        case Lam(_, _, body) | TyLam(_, _, body):
            check_full_application(lang, body)
        case If(c, a, b):
            for x in (c, a, b):
                check_full_application(lang, x)
        case While(c, b):
            check_full_application(lang, c)
            check_full_application(lang, b)
        case App() | TyApp():
            check_full_application(lang, t)


# --------------------------------------------------------------------------
# Kinding


def kind_of(lang: Language, ctx: Ctx, sigma: Mapping, ty: Type, _checker=None):
    chk = _checker or _Infer(lang, sigma)
    match ty:
        case TBool() | TUnit():
            return STAR
        case TCon(n):
            if n not in lang.kinds:
                raise KindError(f"unknown type constructor {n}")
            return lang.kinds[n]
        case TVar(a):
            k = ctx.kind_of(a)
            if k is None:
                raise KindError(f"unbound type variable {a}")
            return k
        case TApp(f, a):
            kf = kind_of(lang, ctx, sigma, f, chk)
            if not isinstance(kf, KArrow):
                raise KindError(f"{show_type(f)} of kind {kf} cannot be applied")
            ka = kind_of(lang, ctx, sigma, a, chk)
            if ka != kf.dom:
                raise KindError(f"argument {show_type(a)} has kind {ka}, expected {kf.dom}")
            return kf.cod
        case TEff(e):
            return kind_effect(ctx, e, lambda v: chk.value_type(ctx, v), lang.arity)
        case TPi(x, dom, eff, cod):
            _expect_star(lang, ctx, sigma, dom, chk)
            inner = ctx.bind(x, dom)
            kind_effect(inner, eff, lambda v: chk.value_type(inner, v), lang.arity)
            _expect_star(lang, inner, sigma, cod, chk)
            return STAR
        case TForall(a, k, eff, body):
            inner = ctx.bind_type(a, k)
            kind_effect(inner, eff, lambda v: chk.value_type(inner, v), lang.arity)
            _expect_star(lang, inner, sigma, body, chk)
            return STAR
        case TSing(v):
            if not is_value(v, lang.arity):
                raise KindError(f"singleton of non-value {v}")
            chk.value_type(ctx, v)
            return STAR
    raise KindError(f"not a type: {ty!r}")


def _expect_star(lang, ctx, sigma, ty, chk):
    k = kind_of(lang, ctx, sigma, ty, chk)
    if k != STAR:
        raise KindError(f"{show_type(ty)} has kind {k}, expected *")


# --------------------------------------------------------------------------
# Type equivalence


def type_equiv(lang: Language, a: Type, b: Type) -> bool:
    """Structural equality up to binder renaming and effect equivalence."""
    return _teq(lang.effects, a, b)


def _teq(sig: EffectSignature, a: Type, b: Type) -> bool:
    match a, b:
        case (TBool(), TBool()) | (TUnit(), TUnit()):
            return True
        case TCon(x), TCon(y):
            return x == y
        case TVar(x), TVar(y):
            return x == y
        case TApp(f1, a1), TApp(f2, a2):
            return _teq(sig, f1, f2) and _teq(sig, a1, a2)
        case TEff(e1), TEff(e2):
            return equiv(sig, e1, e2)
        case TSing(v1), TSing(v2):
            return term_equiv(sig, v1, v2)
        case TPi(x, d1, e1, c1), TPi(y, d2, e2, c2):
            if not _teq(sig, d1, d2):
                return False
            if x != y:
                e2 = subst_term_in_effect(e2, y, Var(x))
                c2 = subst_term_in_type(c2, y, Var(x))
            return equiv(sig, e1, e2) and _teq(sig, c1, c2)
        case TForall(x, k1, e1, t1), TForall(y, k2, e2, t2):
            if k1 != k2:
                return False
            if x != y:
                rep = TEff(EVar(x)) if k1 == EFF else TVar(x)
                e2 = subst_type_in_effect(e2, y, rep)
                t2 = subst_type_in_type(t2, y, rep)
            return equiv(sig, e1, e2) and _teq(sig, t1, t2)
    return False


def term_equiv(sig: EffectSignature, a: Term, b: Term) -> bool:
    """Alpha-equivalence of terms, comparing embedded types with ``type_equiv``."""
    match a, b:
        case (Var(x), Var(y)) | (Prim(x), Prim(y)):
            return x == y
        case BoolLit(x), BoolLit(y):
            return x == y
        case UnitLit(), UnitLit():
            return True
        case Lam(x, t1, b1), Lam(y, t2, b2):
            if (t1 is None) != (t2 is None) or (t1 is not None and not _teq(sig, t1, t2)):
                return False
            return term_equiv(sig, b1, b2 if x == y else subst_term(b2, y, Var(x)))
        case App(f1, a1), App(f2, a2):
            return term_equiv(sig, f1, f2) and term_equiv(sig, a1, a2)
        case If(c1, x1, y1), If(c2, x2, y2):
            return all(term_equiv(sig, p, q) for p, q in ((c1, c2), (x1, x2), (y1, y2)))
        case While(c1, x1), While(c2, x2):
            return term_equiv(sig, c1, c2) and term_equiv(sig, x1, x2)
        case TyLam(x, k1, b1), TyLam(y, k2, b2):
            if k1 != k2:
                return False
            if x != y:
                from .terms import subst_type_in_term
                b2 = subst_type_in_term(b2, y, TEff(EVar(x)) if k1 == EFF else TVar(x))
            return term_equiv(sig, b1, b2)
        case TyApp(f1, t1), TyApp(f2, t2):
            return term_equiv(sig, f1, f2) and _teq(sig, t1, t2)
    return False


# --------------------------------------------------------------------------
# Inference


class _Infer:
    def __init__(self, lang: Language, sigma: Mapping):
        self.lang = lang
        self.sigma = sigma
        self.norm = Normalizer(lang.effects, strict=True)
        self.trace: list = []

    def effect(self, e: Effect, rule: str) -> Effect:
        try:
            return self.norm.to_expr(self.norm.nf(e))
        except TrivialEffect as exc:
            raise TypingError(rule, str(exc), self.trace) from None

    def seq(self, *es: Effect, rule: str) -> Effect:
        es = [e for e in es if not isinstance(e, EUnit)]
        if not es:
            return EUnit()
        out = es[0]
        for e in es[1:]:
            out = ESeq(out, e)
        return self.effect(out, rule)

    def value_type(self, ctx: Ctx, v: Term) -> Type:
        ty, eff = self.infer(ctx, v)
        if not isinstance(eff, EUnit):
            raise KindError(f"value {v} has effect {eff}")
        return ty

    def kind(self, ctx: Ctx, ty: Type, rule: str):
        try:
            return kind_of(self.lang, ctx, self.sigma, ty, self)
        except KindError as exc:
            raise TypingError(rule, f"ill-kinded type {show_type(ty)}: {exc}", self.trace) from None

    def infer(self, ctx: Ctx, t: Term) -> tuple:
        match t:
            case Var(x):
                ty = ctx.lookup(x)
                if ty is None:
                    if x in self.sigma:
                        return self._prim(x)
                    raise TypingError("T-Var", f"unbound identifier {x}", self.trace)
                self.trace.append("T-Var")
                return ty, EUnit()
            case Prim(p):
                return self._prim(p)
            case BoolLit():
                self.trace.append("T-Bool")
                return BOOL, EUnit()
            case UnitLit():
                self.trace.append("T-Unit")
                return UNIT, EUnit()
            case Lam(x, None, _):
                raise TypingError("T-Lam", f"parameter {x} needs a type annotation", self.trace)
            case Lam(x, annot, body):
                self.trace.append("T-Lam")
                if self.kind(ctx, annot, "T-Lam") != STAR:
                    raise TypingError("T-Lam", f"parameter type {show_type(annot)} is not of kind *")
                cod, eff = self.infer(ctx.bind(x, annot), body)
                return TPi(x, annot, eff, cod), EUnit()
            case App(Lam(x, None, body), arg):
                self.trace.append("T-App")
                targ, earg = self.infer(ctx, arg)
                return self._apply(ctx, Lam(x, targ, body), arg, (TPi(x, targ, None, None), EUnit()), targ, earg)
            case App(f, arg):
                self.trace.append("T-App")
                tf, ef = self.infer(ctx, f)
                targ, earg = self.infer(ctx, arg)
                return self._apply(ctx, f, arg, (tf, ef), targ, earg)
            case If(c, a, b):
                self.trace.append("T-If")
                tc, ec = self.infer(ctx, c)
                if not isinstance(tc, TBool):
                    raise TypingError("T-If", f"condition has type {show_type(tc)}, expected bool", self.trace)
                ta, ea = self.infer(ctx, a)
                tb, eb = self.infer(ctx, b)
                if not type_equiv(self.lang, ta, tb):
                    raise TypingError("T-If", f"branches disagree: {show_type(ta)} vs {show_type(tb)}",
                                      self.trace)
                return ta, self.seq(ec, self.effect(EJoin(ea, eb), "T-If"), rule="T-If")
            case While(c, b):
                self.trace.append("T-While")
                tc, ec = self.infer(ctx, c)
                if not isinstance(tc, TBool):
                    raise TypingError("T-While", f"condition has type {show_type(tc)}, expected bool",
                                      self.trace)
                _, eb = self.infer(ctx, b)
                loop = self.effect(EStar(ESeq(eb, ec)), "T-While")
                return UNIT, self.seq(ec, loop, rule="T-While")
            case TyLam(a, k, body):
                self.trace.append("T-TAbs")
                ty, eff = self.infer(ctx.bind_type(a, k), body)
                return TForall(a, k, eff, ty), EUnit()
            case TyApp(f, arg):
                self.trace.append("T-TApp")
                tf, ef = self.infer(ctx, f)
                if not isinstance(tf, TForall):
                    raise TypingError("T-TApp", f"type application of non-polymorphic {show_type(tf)}",
                                      self.trace)
                k = self.kind(ctx, arg, "T-TApp")
                if k != tf.kind:
                    raise TypingError("T-TApp", f"type argument {show_type(arg)} has kind {k}, "
                                      f"expected {tf.kind}", self.trace)
                try:
                    latent = subst_type_in_effect(tf.effect, tf.var, arg)
                    body = subst_type_in_type(tf.body, tf.var, arg)
                except TypeError as exc:
                    raise TypingError("T-TApp", str(exc), self.trace) from None
                return body, self.seq(ef, latent, rule="T-TApp")
        raise TypingError("T-?", f"not a term: {t!r}", self.trace)

    def _prim(self, p: str) -> tuple:
        if p not in self.sigma:
            raise TypingError("T-Prim", f"unknown primitive {p}", self.trace)
        self.trace.append("T-Prim")
        return self.sigma[p], EUnit()

    def _apply(self, ctx, f, arg, fres, targ, earg) -> tuple:
        tf, ef = fres
        if isinstance(f, Lam) and tf.effect is None:
            # Head lambda whose parameter type comes from its argument.
            cod, latent = self.infer(ctx.bind(f.var, targ), f.body)
            tf = TPi(f.var, targ, latent, cod)
        if not isinstance(tf, TPi):
            raise TypingError("T-App", f"application of non-function type {show_type(tf)}", self.trace)
        if not type_equiv(self.lang, targ, tf.dom):
            raise TypingError("T-App", f"argument type {show_type(targ)} does not match "
                              f"{show_type(tf.dom)}", self.trace)
        x = tf.var
        if is_value(arg, self.lang.arity):
            latent = subst_term_in_effect(tf.effect, x, arg)
            cod = subst_term_in_type(tf.cod, x, arg)
        else:
            latent = self.effect(tf.effect, "T-App")
            if x in fv_effect(latent) or x in fv_type(tf.cod):
                raise TypingError("T-App", f"dependent application: {x} occurs in the result but "
                                  f"the argument is not a value", self.trace)
            cod = tf.cod
        return cod, self.seq(ef, earg, latent, rule="T-App")


def infer(lang: Language, term: Term, ctx: Ctx = EMPTY_CTX, sigma: Optional[Mapping] = None) -> TypingResult:
    """Minimal type and effect of ``term``; raises ``TypingError``."""
    sigma = lang.delta if sigma is None else sigma
    check_full_application(lang, term)
    run = _Infer(lang, sigma)
    ty, eff = run.infer(ctx, term)
    return TypingResult(ty, eff, run.trace)


def check_effect_annotation(lang: Language, result: TypingResult, expected: Effect) -> bool:
    """Subsumption at an explicit check site."""
    from .effects import subeffect
    return subeffect(lang.effects, result.effect, expected)


# --------------------------------------------------------------------------
# Primitive tables


def _binders(ty: Type) -> list:
    out = []
    while isinstance(ty, (TPi, TForall)):
        out.append(ty)
        ty = ty.cod if isinstance(ty, TPi) else ty.body
    return out


def check_primitive_table(lang: Language, sigma: Optional[Mapping] = None) -> LawReport:
    """Arity/shape constraints and well-kindedness of every entry."""
    sigma = lang.delta if sigma is None else sigma
    report = LawReport(f"primitives:{lang.effects.name}", mode="table")
    for p, ty in sorted(sigma.items()):
        n = lang.arity_of(p)
        try:
            ok = kind_of(lang, EMPTY_CTX, sigma, ty) == STAR
            detail = "kind *"
        except (KindError, TypingError) as exc:
            ok, detail = False, str(exc)
        report.record("well_kinded", ok, (p,), detail, "kind *")
        if n == 0:
            closed_base = isinstance(ty, (TBool, TUnit))
            report.record("not_closed_base", not closed_base, (p,), show_type(ty),
                          "must not be closed base types")
            report.record("constant_not_function", not isinstance(ty, (TPi, TForall)), (p,),
                          show_type(ty), "non-functional type")
            continue
        binders = _binders(ty)
        report.record("arity_matches", len(binders) >= n, (p,), f"{len(binders)} binders", f"{n}")
        early = binders[:n - 1]
        pure = all(equiv(lang.effects, b.effect, EUnit()) for b in early)
        report.record("partial_latents_unit", pure, (p,), show_type(ty),
                      "latent effects before the last argument are I")
    return report


__all__ = [
    "Language", "TypingError", "TypingResult", "check_effect_annotation", "check_full_application",
    "check_primitive_table", "infer", "kind_of", "spine", "term_equiv", "type_equiv",
]
