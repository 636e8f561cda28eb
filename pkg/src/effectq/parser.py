"""S-expression surface syntax for programs, types and kinds, plus the infix
syntax for effects written between square brackets.

    (lam (x lock) (lam (r (ref (S x) bool))
      (seq (acquire x) (let (y (read x @bool r)) (seq (release x) y)))))

Effects: ``I``, ``'a``, ``e1 ; e2``, ``e1 | e2``, ``e*``, ``Name`` or
``Name(v1, ..., vk)`` and the lock literal ``{x,y}=>{z}``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Optional

from .effects import EffectSignature, locking_arity
from .terms import (BOOL, EFF, FALSE, STAR, TRUE, UNIT, UNIT_V, App, BoolLit, EJoin, ESeq, EStar, EUnit,
                    EVar, If, KArrow, Lam, Prim, TApp, TCon, TEff, TForall, TPi, TSing, TVar, TyApp,
                    TyLam, Var, While, let_term, seq_term)


class ParseError(ValueError):
    pass


@dataclass(frozen=True)
class EffText:
    text: str
    pos: int


@dataclass(frozen=True)
class TyArg:
    sexp: object


_ATOM = re.compile(r"[^\s()\[\]@;]+")


def read_sexps(text: str) -> list:
    """All top-level s-expressions in ``text``; lists become Python lists."""
    pos, stack, out = 0, [[]], None
    n = len(text)
    pending_at = []
    while pos < n:
        c = text[pos]
        if c.isspace():
            pos += 1
        elif c == ";":
            while pos < n and text[pos] != "\n":
                pos += 1
        elif c == "(":
            stack.append([])
            pending_at.append(False)
            pos += 1
        elif c == ")":
            if len(stack) == 1:
                raise ParseError(f"unbalanced ')' at offset {pos}")
            done = stack.pop()
            pending_at.pop()
            _emit(stack, done)
            pos += 1
        elif c == "[":
            depth, start = 1, pos + 1
            pos += 1
            while pos < n and depth:
                if text[pos] == "[":
                    depth += 1
                elif text[pos] == "]":
                    depth -= 1
                pos += 1
            if depth:
                raise ParseError(f"unterminated '[' at offset {start - 1}")
            _emit(stack, EffText(text[start:pos - 1], start))
        elif c == "]":
            raise ParseError(f"unbalanced ']' at offset {pos}")
        elif c == "@":
            stack[-1].append(_AT)
            pos += 1
        else:
            m = _ATOM.match(text, pos)
            _emit(stack, m.group(0))
            pos = m.end()
    if len(stack) != 1:
        raise ParseError("unbalanced '(': input ended inside a list")
    items = stack[0]
    if items and items[-1] is _AT:
        raise ParseError("'@' must be followed by a type")
    return items


class _AtMarker:
    pass


_AT = _AtMarker()


def _emit(stack: list, item) -> None:
    top = stack[-1]
    if top and top[-1] is _AT:
        top[-1] = TyArg(item)
    else:
        top.append(item)


def read_one(text: str):
    items = read_sexps(text)
    if len(items) != 1:
        raise ParseError(f"expected one expression, found {len(items)}")
    return items[0]


# --------------------------------------------------------------------------
# Effects


_ETOK = re.compile(r"\s*(?:(?P<lock>\{[^}]*\}\s*=>\s*\{[^}]*\})|(?P<var>'[A-Za-z_][\w']*)"
                   r"|(?P<name>[A-Za-z_⊤ε∅][\w\-'⊤]*)|(?P<op>[;|*(),]))")


class _EffParser:
    def __init__(self, text: str, scope: "_Scope"):
        self.text, self.scope = text, scope
        self.toks = []
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            m = _ETOK.match(text, pos)
            if not m:
                raise ParseError(f"bad effect syntax near {text[pos:pos + 12]!r}")
            kind = m.lastgroup
            self.toks.append((kind, m.group(kind)))
            pos = m.end()
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None)

    def take(self, value=None):
        tok = self.peek()
        if tok[0] is None or (value is not None and tok[1] != value):
            raise ParseError(f"expected {value or 'effect'} in effect {self.text!r}")
        self.i += 1
        return tok

    def parse(self):
        e = self.join()
        if self.i != len(self.toks):
            raise ParseError(f"trailing input in effect {self.text!r}")
        return e

    def join(self):
        e = self.seq()
        while self.peek() == ("op", "|"):
            self.take()
            e = EJoin(e, self.seq())
        return e

    def seq(self):
        e = self.postfix()
        while self.peek() == ("op", ";"):
            self.take()
            e = ESeq(e, self.postfix())
        return e

    def postfix(self):
        e = self.primary()
        while self.peek() == ("op", "*"):
            self.take()
            e = EStar(e)
        return e

    def primary(self):
        kind, val = self.take()
        if kind == "var":
            return EVar(val[1:])
        if kind == "op" and val == "(":
            if self.peek() == ("op", ")"):
                self.take()
                return EUnit()
            e = self.join()
            self.take(")")
            return e
        if kind == "lock":
            pre, post = (s.strip()[1:-1] for s in val.split("=>"))
            pre_ids = [x.strip() for x in pre.split(",") if x.strip()]
            post_ids = [x.strip() for x in post.split(",") if x.strip()]
            args = [self.scope.value(x) for x in pre_ids + post_ids]
            return self.scope.ground(f"Locking{len(pre_ids)}-{len(post_ids)}", args)
        if kind == "name":
            if val == "I":
                return EUnit()
            args = []
            if self.peek() == ("op", "("):
                self.take()
                if self.peek() != ("op", ")"):
                    args.append(self._arg())
                    while self.peek() == ("op", ","):
                        self.take()
                        args.append(self._arg())
                self.take(")")
            return self.scope.ground(val, args)
        raise ParseError(f"unexpected {val!r} in effect {self.text!r}")

    def _arg(self):
        kind, val = self.take()
        if kind != "name":
            raise ParseError(f"constructor arguments must be identifiers, got {val!r}")
        return self.scope.value(val)


# --------------------------------------------------------------------------
# Scopes


@dataclass(frozen=True)
class _Scope:
    sig: Optional[EffectSignature]
    prims: Mapping[str, int]
    terms: frozenset = frozenset()
    types: tuple = ()

    def bind(self, x: str) -> "_Scope":
        return _Scope(self.sig, self.prims, self.terms | {x}, self.types)

    def bind_type(self, a: str, k) -> "_Scope":
        return _Scope(self.sig, self.prims, self.terms, self.types + ((a, k),))

    def type_kind(self, a: str):
        for b, k in reversed(self.types):
            if b == a:
                return k
        return None

    def value(self, name: str):
        match name:
            case "true":
                return TRUE
            case "false":
                return FALSE
            case "unit":
                return UNIT_V
        if name not in self.terms and name in self.prims:
            return Prim(name)
        return Var(name)

    def ground(self, name: str, args: list):
        if self.sig is None:
            raise ParseError("ground effects need an effect signature")
        try:
            from .terms import EGround
            return EGround(self.sig.construct(name, tuple(args)))
        except KeyError:
            raise ParseError(f"unknown effect constructor {name!r} for {self.sig.name}") from None
        except (TypeError, ValueError) as exc:
            raise ParseError(f"bad effect {name}: {exc}") from None


_IDENT = re.compile(r"^[A-Za-z_][\w\-'.]*$")


def _ident(x, what="identifier") -> str:
    if not isinstance(x, str) or not _IDENT.match(x):
        raise ParseError(f"expected {what}, got {_show(x)}")
    return x


def _show(x) -> str:
    match x:
        case list():
            return "(" + " ".join(_show(y) for y in x) + ")"
        case EffText(t, _):
            return f"[{t}]"
        case TyArg(s):
            return "@" + _show(s)
    return str(x)


# --------------------------------------------------------------------------
# Kinds, effects, types


def parse_kind_sexp(s):
    match s:
        case "*":
            return STAR
        case "E":
            return EFF
        case ["=>", a, b]:
            return KArrow(parse_kind_sexp(a), parse_kind_sexp(b))
        case ["=>", a, *rest] if len(rest) > 1:
            return KArrow(parse_kind_sexp(a), parse_kind_sexp(["=>", *rest]))
    raise ParseError(f"bad kind {_show(s)}")


def parse_effect_sexp(s, scope: _Scope):
    match s:
        case EffText(text, _):
            return _EffParser(text, scope).parse()
        case str() if s == "I":
            return EUnit()
        case str() if s.startswith("'"):
            return EVar(s[1:])
        case str():
            return _EffParser(s, scope).parse()
    raise ParseError(f"bad effect {_show(s)}")


def parse_type_sexp(s, scope: _Scope):
    match s:
        case "bool":
            return BOOL
        case "unit":
            return UNIT
        case EffText():
            return TEff(parse_effect_sexp(s, scope))
        case str():
            name = _ident(s, "type")
            return TVar(name) if scope.type_kind(name) is not None else TCon(name)
        case ["pi", [x, dom], eff, cod]:
            x = _ident(x, "binder")
            inner = scope.bind(x)
            return TPi(x, parse_type_sexp(dom, scope), parse_effect_sexp(eff, inner), parse_type_sexp(cod, inner))
        case ["->", dom, eff, cod]:
            return TPi("_", parse_type_sexp(dom, scope), parse_effect_sexp(eff, scope), parse_type_sexp(cod, scope))
        case ["->", dom, cod]:
            return TPi("_", parse_type_sexp(dom, scope), EUnit(), parse_type_sexp(cod, scope))
        case ["all", [a, k], eff, body]:
            kind = parse_kind_sexp(k)
            inner = scope.bind_type(_ident(a, "type variable"), kind)
            return TForall(a, kind, parse_effect_sexp(eff, inner), parse_type_sexp(body, inner))
        case ["all", [a, k], body]:
            kind = parse_kind_sexp(k)
            inner = scope.bind_type(_ident(a, "type variable"), kind)
            return TForall(a, kind, EUnit(), parse_type_sexp(body, inner))
        case ["S", v]:
            return TSing(parse_term_sexp(v, scope))
        case [head, *args] if args:
            out = parse_type_sexp(head, scope)
            for a in args:
                out = TApp(out, parse_type_sexp(a, scope))
            return out
    raise ParseError(f"bad type {_show(s)}")


# --------------------------------------------------------------------------
# Terms


_KEYWORDS = {"lam", "app", "tylam", "tyapp", "if", "while", "seq", "let"}


def parse_term_sexp(s, scope: _Scope):
    match s:
        case str() if s in ("true", "false", "unit"):
            return scope.value(s)
        case str():
            return scope.value(_ident(s))
        case TyArg() | EffText():
            raise ParseError(f"unexpected {_show(s)} in term position")
        case ["lam", [x, ty], body] if isinstance(x, str):
            x = _ident(x, "binder")
            return Lam(x, parse_type_sexp(ty, scope), parse_term_sexp(body, scope.bind(x)))
        case ["lam", str() as x, body]:
            x = _ident(x, "binder")
            return Lam(x, None, parse_term_sexp(body, scope.bind(x)))
        case ["app", f, *args] if args:
            return _apply(parse_term_sexp(f, scope), args, scope)
        case ["tylam", [a, k], body]:
            kind = parse_kind_sexp(k)
            a = _ident(a, "type variable")
            return TyLam(a, kind, parse_term_sexp(body, scope.bind_type(a, kind)))
        case ["tyapp", f, ty]:
            return TyApp(parse_term_sexp(f, scope), parse_type_sexp(_untyarg(ty), scope))
        case ["if", c, a, b]:
            return If(parse_term_sexp(c, scope), parse_term_sexp(a, scope), parse_term_sexp(b, scope))
        case ["while", c, b]:
            return While(parse_term_sexp(c, scope), parse_term_sexp(b, scope))
        case ["seq", *items] if items:
            terms = [parse_term_sexp(t, scope) for t in items]
            out = terms[-1]
            for t in reversed(terms[:-1]):
                out = seq_term(t, out)
            return out
        case ["let", [x, bound], body]:
            x = _ident(x, "binder")
            return let_term(x, parse_term_sexp(bound, scope), parse_term_sexp(body, scope.bind(x)))
        case ["let", [x, ty, bound], body]:
            x = _ident(x, "binder")
            return let_term(x, parse_term_sexp(bound, scope), parse_term_sexp(body, scope.bind(x)),
                            parse_type_sexp(ty, scope))
        case [head, *args] if args and not (isinstance(head, str) and head in _KEYWORDS):
            return _apply(parse_term_sexp(head, scope), args, scope)
    raise ParseError(f"bad term {_show(s)}")


def _untyarg(x):
    return x.sexp if isinstance(x, TyArg) else x


def _apply(fn, args, scope):
    for a in args:
        if isinstance(a, TyArg):
            fn = TyApp(fn, parse_type_sexp(a.sexp, scope))
        else:
            fn = App(fn, parse_term_sexp(a, scope))
    return fn


# --------------------------------------------------------------------------
# Entry points


def parse_program(text: str, sig: Optional[EffectSignature] = None, prims: Mapping[str, int] = ()):
    scope = _Scope(sig, dict(prims))
    return parse_term_sexp(read_one(text), scope)


def parse_type(text: str, sig: Optional[EffectSignature] = None, prims: Mapping[str, int] = (),
               terms=(), types=()):
    scope = _Scope(sig, dict(prims), frozenset(terms), tuple(types))
    return parse_type_sexp(read_one(text), scope)


def parse_effect(text: str, sig: Optional[EffectSignature] = None, prims: Mapping[str, int] = (),
                 terms=()):
    scope = _Scope(sig, dict(prims), frozenset(terms))
    return _EffParser(text, scope).parse()


def parse_kind(text: str):
    return parse_kind_sexp(read_one(text))


__all__ = ["EffText", "ParseError", "parse_effect", "parse_kind", "parse_program", "parse_type",
           "read_one", "read_sexps"]
