"""Syntactic effects: kinding, canonical forms, equivalence, subeffecting
and the nontriviality check.

Canonical forms are sums of products.  A product is a tuple of atoms, each
an effect variable, a non-unit ground element, a starred sum, or (once
distribution grows past ``CAP``) an opaque sum.  Adjacent grounds are folded
with the quantale's sequencing, ground alternatives with its join, and
alternatives sharing a prefix and suffix are factored back through
distributivity.  The result is sound and deliberately incomplete for open
effects; closed effects whose operations are all defined collapse to a
single ground element.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from .indexed import show_elem
from .quantale import EffectQuantale
from .terms import (EFF, EGround, EJoin, ESeq, EStar, EUnit, EVar, Effect, Term, fv_effect, ftv_effect,
                    I, index_values, is_value, show_effect, show_term)

CAP = 256
FACTOR_LIMIT = 64


class EffectError(TypeError):
    """Base class for effect-level failures."""


class TrivialEffect(EffectError):
    """An effect equivalent to one applying an undefined ground operation."""

    def __init__(self, op: str, operands: tuple, show=show_elem):
        self.op, self.operands = op, operands
        shown = ", ".join(show(x) for x in operands)
        super().__init__(f"trivially invalid effect: {op}({shown}) is undefined")


class KindError(TypeError):
    pass


# --------------------------------------------------------------------------
# Effect signatures: a quantale plus named ground constructors


@dataclass(frozen=True)
class EffectSignature:
    """The effect half of an instantiation.

    ``construct(name, args)`` builds a ground element from a constructor name
    and a tuple of value terms, or raises ``KeyError`` for unknown names.
    """

    name: str
    quantale: EffectQuantale
    construct: Callable[[str, tuple], Any]
    show: Callable[[Any], str] = show_elem

    @property
    def unit(self):
        return self.quantale.unit

    def ground(self, name: str, *args) -> EGround:
        return EGround(self.construct(name, tuple(args)))


def constant_signature(q: EffectQuantale, names: Optional[dict] = None) -> EffectSignature:
    """Signature for a non-indexed quantale: nullary constructors only.

    ``names`` maps surface names to elements; by default every enumerated
    element is available under its printed name.
    """
    if names is None:
        names = {q.show(x): x for x in (q.elements or ())}
        names.update({str(x): x for x in (q.elements or ())})

    def construct(name, args):
        if args:
            raise KindError(f"constructor {name} takes no arguments")
        return names[name]
    return EffectSignature(q.name, q, construct, q.show)


# --------------------------------------------------------------------------
# Typing contexts


@dataclass(frozen=True)
class Ctx:
    """Γ: term variables with types and type variables with kinds, newest last."""

    terms: tuple = ()
    types: tuple = ()

    def bind(self, x: str, ty) -> "Ctx":
        return Ctx(self.terms + ((x, ty),), self.types)

    def bind_type(self, a: str, k) -> "Ctx":
        return Ctx(self.terms, self.types + ((a, k),))

    def lookup(self, x: str):
        for y, ty in reversed(self.terms):
            if y == x:
                return ty
        return None

    def kind_of(self, a: str):
        for b, k in reversed(self.types):
            if b == a:
                return k
        return None

    def term_names(self) -> set:
        return {x for x, _ in self.terms}

    def type_names(self) -> set:
        return {a for a, _ in self.types}


EMPTY_CTX = Ctx()


def kind_effect(ctx: Ctx, e: Effect, check_value: Optional[Callable[[Term], Any]] = None,
                arity=None) -> Any:
    """Returns the effect kind or raises ``KindError``.

    ``check_value`` is called on each ground index value and should raise if
    the value is not typeable with the unit effect.
    """
    match e:
        case EUnit():
            return EFF
        case EVar(a):
            k = ctx.kind_of(a)
            if k is None:
                raise KindError(f"unbound effect variable '{a}")
            if k != EFF:
                raise KindError(f"'{a} has kind {k}, expected E")
            return EFF
        case ESeq(l, r) | EJoin(l, r):
            kind_effect(ctx, l, check_value, arity)
            return kind_effect(ctx, r, check_value, arity)
        case EStar(b):
            return kind_effect(ctx, b, check_value, arity)
        case EGround(elem):
            for v in index_values(elem):
                if not is_value(v, arity):
                    raise KindError(f"ground effect argument {show_term(v)} is not a value")
                if check_value is not None:
                    check_value(v)
            return EFF
    raise KindError(f"not an effect: {e!r}")


# --------------------------------------------------------------------------
# Canonical forms


@dataclass(frozen=True)
class NStar:
    body: frozenset


@dataclass(frozen=True)
class NSum:
    body: frozenset


def _is_ground(atom) -> bool:
    return isinstance(atom, EGround)


class Normalizer:
    """Computes canonical forms for one quantale.

    With ``strict`` set, any undefined ground operation met along the way
    raises ``TrivialEffect`` instead of being left symbolic.
    """

    def __init__(self, sig: EffectSignature, strict: bool = False):
        self.sig = sig
        self.q = sig.quantale
        self.strict = strict
        self._memo: dict = {}
        self._canon = self.q.canon or (lambda x: x)

    def _ground(self, x) -> EGround:
        return EGround(self._canon(x))

    # -- products

    def _fail(self, op, *xs):
        if self.strict:
            raise TrivialEffect(op, xs, self.sig.show)

    def _push(self, out: list, atom) -> None:
        if _is_ground(atom) and atom.elem == self.q.unit:
            return
        if out and _is_ground(atom) and _is_ground(out[-1]):
            r = self.q.seq(out[-1].elem, atom.elem)
            if r is None:
                self._fail("seq", out[-1].elem, atom.elem)
                out.append(atom)
                return
            out.pop()
            if r != self.q.unit:
                self._push(out, self._ground(r))
            return
        if out and isinstance(atom, NStar) and out[-1] == atom:
            return
        out.append(atom)

    def concat(self, *ps: tuple) -> tuple:
        out: list = []
        for p in ps:
            for atom in p:
                self._push(out, atom)
        return tuple(out)

    # -- sums

    def seq(self, a: frozenset, b: frozenset) -> frozenset:
        if len(a) * len(b) > CAP:
            return self.simplify(frozenset([self.concat(self._wrap(a), self._wrap(b))]))
        return self.simplify(frozenset(self.concat(p, q) for p in a for q in b))

    def _wrap(self, a: frozenset) -> tuple:
        if len(a) == 1:
            return next(iter(a))
        return (NSum(a),)

    def join(self, a: frozenset, b: frozenset) -> frozenset:
        return self.simplify(a | b)

    def star(self, a: frozenset) -> frozenset:
        body = frozenset(p for p in a if p != ())
        if not body:
            return frozenset([()])
        if len(body) == 1:
            (p,) = body
            if len(p) == 1 and _is_ground(p[0]):
                if self.q.star is None:
                    self._fail("star", p[0].elem)
                    return frozenset([(NStar(body),)])
                s = self.q.star(p[0].elem)
                if s is None:
                    self._fail("star", p[0].elem)
                    return frozenset([(NStar(body),)])
                return frozenset([self.concat((self._ground(s),))])
            if len(p) == 1 and isinstance(p[0], NStar):
                return body
        return frozenset([(NStar(body),)])

    def simplify(self, s: frozenset) -> frozenset:
        while True:
            t = self._absorb(self._merge_grounds(s))
            if len(t) <= FACTOR_LIMIT:
                t = self._factor(t)
            if t == s:
                return s
            s = t

    def _merge_grounds(self, s: frozenset) -> frozenset:
        grounds = [p for p in s if len(p) == 0 or (len(p) == 1 and _is_ground(p[0]))]
        if len(grounds) < 2:
            return s
        rest = [p for p in s if p not in grounds]
        elems = sorted((p[0].elem if p else self.q.unit for p in grounds), key=self.sig.show)
        merged: list = []
        for x in elems:
            for i, y in enumerate(merged):
                j = self.q.join(y, x)
                if j is not None:
                    merged[i] = j
                    break
            else:
                if merged:
                    self._fail("join", merged[0], x)
                merged.append(x)
        out = set(rest)
        for x in merged:
            out.add(self.concat((self._ground(x),)))
        return frozenset(out)

    def _absorb(self, s: frozenset) -> frozenset:
        stars = [p[0].body for p in s if len(p) == 1 and isinstance(p[0], NStar)]
        if not stars:
            return s
        out = set(s)
        out.discard(())
        for body in stars:
            for p in body:
                if (NStar(body),) != p:
                    out.discard(p)
        return frozenset(out)

    def _factor(self, s: frozenset) -> frozenset:
        ps = sorted(s, key=self._key)
        for i, p in enumerate(ps):
            for q in ps[i + 1:]:
                merged = self._factor_pair(p, q)
                if merged is not None:
                    return frozenset((set(s) - {p, q}) | {merged})
        return s

    def _factor_pair(self, p: tuple, q: tuple) -> Optional[tuple]:
        k = 0
        while k < len(p) and k < len(q) and p[k] == q[k]:
            k += 1
        m = 0
        while m < len(p) - k and m < len(q) - k and p[-1 - m] == q[-1 - m]:
            m += 1
        mp, mq = p[k:len(p) - m], q[k:len(q) - m]
        if len(mp) > 1 or len(mq) > 1 or not (mp or mq):
            return None
        if not all(_is_ground(x) for x in mp + mq):
            return None
        x = mp[0].elem if mp else self.q.unit
        y = mq[0].elem if mq else self.q.unit
        j = self.q.join(x, y)
        if j is None:
            self._fail("join", x, y)
            return None
        return self.concat(p[:k], (self._ground(j),), p[len(p) - m:])

    def _key(self, p: tuple) -> str:
        return show_effect(self.product_expr(p), self.sig.show)

    # -- entry points

    def nf(self, e: Effect) -> frozenset:
        hit = self._memo.get(e)
        if hit is not None:
            return hit
        match e:
            case EUnit():
                out = frozenset([()])
            case EVar():
                out = frozenset([(e,)])
            case EGround(elem):
                out = frozenset([self.concat((self._ground(elem),))])
            case ESeq(l, r):
                out = self.seq(self.nf(l), self.nf(r))
            case EJoin(l, r):
                out = self.join(self.nf(l), self.nf(r))
            case EStar(b):
                out = self.star(self.nf(b))
            case _:
                raise EffectError(f"not an effect: {e!r}")
        self._memo[e] = out
        return out

    def product_expr(self, p: tuple) -> Effect:
        parts = [self._atom_expr(a) for a in p]
        if not parts:
            return I
        out = parts[0]
        for x in parts[1:]:
            out = ESeq(out, x)
        return out

    def _atom_expr(self, a) -> Effect:
        match a:
            case NStar(body):
                return EStar(self.to_expr(body))
            case NSum(body):
                return self.to_expr(body)
        return a

    def to_expr(self, s: frozenset) -> Effect:
        exprs = sorted((self.product_expr(p) for p in s), key=lambda x: show_effect(x, self.sig.show))
        out = exprs[0]
        for x in exprs[1:]:
            out = EJoin(out, x)
        return out


def normalize(sig: EffectSignature, e: Effect) -> Effect:
    """Canonical representative; idempotent."""
    n = Normalizer(sig)
    return n.to_expr(n.nf(e))


def canonical_form(sig: EffectSignature, e: Effect) -> frozenset:
    return Normalizer(sig).nf(e)


def equiv(sig: EffectSignature, e1: Effect, e2: Effect) -> bool:
    n = Normalizer(sig)
    return n.nf(e1) == n.nf(e2)


def subeffect(sig: EffectSignature, e1: Effect, e2: Effect) -> bool:
    return equiv(sig, EJoin(e1, e2), e2)


def check_nontrivial(sig: EffectSignature, e: Effect) -> None:
    """Raises ``TrivialEffect`` when ``e`` is trivially invalid."""
    Normalizer(sig, strict=True).nf(e)


def nontrivial(sig: EffectSignature, e: Effect) -> bool:
    try:
        check_nontrivial(sig, e)
    except TrivialEffect:
        return False
    return True


def ground_value(sig: EffectSignature, e: Effect) -> Optional[Any]:
    """The semantic element of a collapsed closed effect, or ``None``."""
    n = Normalizer(sig)
    s = n.nf(e)
    if len(s) != 1:
        return None
    (p,) = s
    if p == ():
        return sig.unit
    if len(p) == 1 and _is_ground(p[0]):
        return p[0].elem
    return None


def evaluate(sig: EffectSignature, e: Effect) -> Optional[Any]:
    """Direct fold of the quantale operations over the tree; the independent
    reference for collapse.  Returns ``None`` if any operation is undefined
    or the effect is open."""
    q = sig.quantale
    match e:
        case EUnit():
            return q.unit
        case EGround(elem):
            return elem
        case EVar():
            return None
        case ESeq(l, r) | EJoin(l, r):
            a, b = evaluate(sig, l), evaluate(sig, r)
            if a is None or b is None:
                return None
            return (q.seq if isinstance(e, ESeq) else q.join)(a, b)
        case EStar(b):
            a = evaluate(sig, b)
            if a is None or q.star is None:
                return None
            return q.star(a)
    return None


def free_effect_vars(e: Effect) -> frozenset:
    return ftv_effect(e)


def free_term_vars(e: Effect) -> frozenset:
    return fv_effect(e)


def show(sig: EffectSignature, e: Effect) -> str:
    return show_effect(e, sig.show)


_LOCKING = re.compile(r"^Locking(\d+)-(\d+)$")


def locking_arity(name: str) -> Optional[tuple]:
    """``Locking2-1`` takes two precondition locks then one postcondition lock."""
    m = _LOCKING.match(name)
    return (int(m.group(1)), int(m.group(2))) if m else None


__all__ = [
    "CAP", "Ctx", "EMPTY_CTX", "EffectError", "EffectSignature", "KindError", "NStar", "NSum",
    "Normalizer", "TrivialEffect", "canonical_form", "check_nontrivial", "constant_signature",
    "equiv", "evaluate", "ground_value", "kind_effect", "locking_arity", "nontrivial", "normalize",
    "show", "subeffect",
]
