"""Regular languages of finite traces with decidable equality.

Expressions are kept in a light normal form by smart constructors (flattened
concatenation, flattened set-based union, collapsed stars).  Language
equality is decided by building the DFA of Brzozowski derivatives,
minimizing it, and comparing canonical numberings.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Iterable, Iterator, Optional

from .quantale import EffectQuantale


def sym_key(x: Any):
    return (type(x).__name__, str(x))


class Regex:
    __slots__ = ()


def _cached_hash(self) -> int:
    # Derivative and DFA caches hash deep trees repeatedly; remember it.
    h = self.__dict__.get("_hash")
    if h is None:
        h = hash((type(self).__name__,) + tuple(self.__dict__[f] for f in self.__dataclass_fields__))
        object.__setattr__(self, "_hash", h)
    return h


@dataclass(frozen=True)
class Empty(Regex):
    def __str__(self) -> str:
        return "∅"


@dataclass(frozen=True)
class Eps(Regex):
    def __str__(self) -> str:
        return "ε"


@dataclass(frozen=True)
class Sym(Regex):
    sym: Any

    def __str__(self) -> str:
        return str(self.sym)


@dataclass(frozen=True)
class Cat(Regex):
    parts: tuple

    __hash__ = _cached_hash

    def __str__(self) -> str:
        sep = "" if all(_single(p) for p in self.parts) else " "
        return sep.join(_wrap(p, (Alt,)) for p in self.parts)


@dataclass(frozen=True)
class Alt(Regex):
    alts: frozenset

    __hash__ = _cached_hash

    def __str__(self) -> str:
        return "|".join(sorted(_wrap(p, ()) for p in self.alts))


@dataclass(frozen=True)
class Star(Regex):
    body: Regex

    __hash__ = _cached_hash

    def __str__(self) -> str:
        return _wrap(self.body, (Alt, Cat)) + "*"


def _single(r: Regex) -> bool:
    return all(len(str(s)) == 1 for s in symbols(r))


def _wrap(r: Regex, weaker: tuple) -> str:
    return f"({r})" if isinstance(r, weaker) else str(r)


EMPTY = Empty()
EPS = Eps()


def sym(x) -> Regex:
    return Sym(x)


def cat(*rs: Regex) -> Regex:
    parts = []
    for r in rs:
        if isinstance(r, Empty):
            return EMPTY
        if isinstance(r, Eps):
            continue
        if isinstance(r, Cat):
            parts.extend(r.parts)
        else:
            parts.append(r)
    if not parts:
        return EPS
    if len(parts) == 1:
        return parts[0]
    return Cat(tuple(parts))


def alt(*rs: Regex) -> Regex:
    alts = set()
    for r in rs:
        if isinstance(r, Empty):
            continue
        if isinstance(r, Alt):
            alts |= r.alts
        else:
            alts.add(r)
    if not alts:
        return EMPTY
    if len(alts) == 1:
        return next(iter(alts))
    return Alt(frozenset(alts))


def star(r: Regex) -> Regex:
    if isinstance(r, (Empty, Eps)):
        return EPS
    if isinstance(r, Star):
        return r
    return Star(r)


def word(syms: Iterable) -> Regex:
    return cat(*(Sym(s) for s in syms))


@lru_cache(maxsize=None)
def nullable(r: Regex) -> bool:
    match r:
        case Eps() | Star():
            return True
        case Empty() | Sym():
            return False
        case Cat(parts):
            return all(nullable(p) for p in parts)
        case Alt(alts):
            return any(nullable(p) for p in alts)
    raise TypeError(r)


@lru_cache(maxsize=None)
def symbols(r: Regex) -> frozenset:
    match r:
        case Empty() | Eps():
            return frozenset()
        case Sym(s):
            return frozenset([s])
        case Cat(parts):
            return frozenset().union(*(symbols(p) for p in parts))
        case Alt(alts):
            return frozenset().union(*(symbols(p) for p in alts))
        case Star(body):
            return symbols(body)
    raise TypeError(r)


@lru_cache(maxsize=None)
def deriv(r: Regex, a) -> Regex:
    """Brzozowski derivative of ``r`` with respect to symbol ``a``."""
    match r:
        case Empty() | Eps():
            return EMPTY
        case Sym(s):
            return EPS if s == a else EMPTY
        case Alt(alts):
            return alt(*(deriv(p, a) for p in alts))
        case Star(body):
            return cat(deriv(body, a), r)
        case Cat(parts):
            head, rest = parts[0], cat(*parts[1:])
            d = cat(deriv(head, a), rest)
            if nullable(head):
                return alt(d, deriv(rest, a))
            return d
    raise TypeError(r)


def matches(r: Regex, w: Iterable) -> bool:
    for a in w:
        r = deriv(r, a)
        if isinstance(r, Empty):
            return False
    return nullable(r)


@dataclass(frozen=True)
class DFA:
    """Partial DFA: missing transitions go to an implicit rejecting sink."""

    start: int
    accepting: frozenset
    delta: tuple  # per state: tuple of (symbol, target) sorted by symbol

    @property
    def size(self) -> int:
        return len(self.delta)


def build_dfa(r: Regex) -> DFA:
    if isinstance(r, Empty):
        return DFA(0, frozenset(), ())
    alphabet = sorted(symbols(r), key=sym_key)
    index = {r: 0}
    states = [r]
    delta = []
    i = 0
    while i < len(states):
        s = states[i]
        row = []
        for a in alphabet:
            t = deriv(s, a)
            if isinstance(t, Empty):
                continue
            if t not in index:
                index[t] = len(states)
                states.append(t)
            row.append((a, index[t]))
        delta.append(tuple(row))
        i += 1
    acc = frozenset(j for j, s in enumerate(states) if nullable(s))
    return DFA(0, acc, tuple(delta))


def minimize(d: DFA) -> DFA:
    """Moore partition refinement followed by canonical BFS numbering."""
    n = d.size
    if n == 0:
        return d
    block = [1 if q in d.accepting else 0 for q in range(n)]
    while True:
        sigs = {}
        new = []
        for q in range(n):
            sig = (block[q], tuple((a, block[t]) for a, t in d.delta[q]))
            new.append(sigs.setdefault(sig, len(sigs)))
        if len(sigs) == len(set(block)):
            block = new
            break
        block = new
    # Representative transitions per block, then renumber by BFS.
    rep = {}
    for q in range(n):
        rep.setdefault(block[q], q)
    order = {block[d.start]: 0}
    queue = [block[d.start]]
    rows = []
    for b in queue:
        q = rep[b]
        row = []
        for a, t in d.delta[q]:
            tb = block[t]
            if tb not in order:
                order[tb] = len(order)
                queue.append(tb)
            row.append((a, order[tb]))
        rows.append(tuple(row))
    acc = frozenset(order[block[q]] for q in d.accepting)
    return DFA(0, acc, tuple(rows))


@lru_cache(maxsize=65536)
def canonical(r: Regex) -> DFA:
    return minimize(build_dfa(r))


@lru_cache(maxsize=65536)
def dfa_to_regex(d: DFA) -> Regex:
    """State elimination over the canonical numbering, highest state first."""
    if d.size == 0:
        return EMPTY
    start, final = -1, -2
    edges: dict = {}

    def add(i, j, r):
        edges[i, j] = alt(edges.get((i, j), EMPTY), r)

    add(start, d.start, EPS)
    for q, row in enumerate(d.delta):
        for a, t in row:
            add(q, t, Sym(a))
        if q in d.accepting:
            add(q, final, EPS)
    for k in reversed(range(d.size)):
        loop = star(edges.pop((k, k), EMPTY))
        ins = [(i, r) for (i, j), r in edges.items() if j == k]
        outs = [(j, r) for (i, j), r in edges.items() if i == k]
        for key in [key for key in edges if k in key]:
            del edges[key]
        for i, ri in ins:
            for j, rj in outs:
                add(i, j, cat(ri, loop, rj))
    return edges.get((start, final), EMPTY)


def equivalent(a: Regex, b: Regex) -> bool:
    return canonical(a) == canonical(b)


def language_upto(r: Regex, n: int, alphabet: Optional[Iterable] = None) -> set:
    """All words of length at most ``n`` in the language, as tuples."""
    alphabet = sorted(set(alphabet) if alphabet is not None else symbols(r), key=sym_key)
    out = set()
    frontier = [((), r)]
    for depth in range(n + 1):
        nxt = []
        for w, s in frontier:
            if nullable(s):
                out.add(w)
            if depth == n:
                continue
            for a in alphabet:
                t = deriv(s, a)
                if not isinstance(t, Empty):
                    nxt.append((w + (a,), t))
        frontier = nxt
    return out


# --------------------------------------------------------------------------
# Regex values whose equality is language equality


class RegexEffect:
    """A regular language of finite traces; ``==`` compares languages."""

    __slots__ = ("re", "_canon")

    def __init__(self, re: Regex):
        self.re = re
        self._canon = None

    @property
    def dfa(self) -> DFA:
        if self._canon is None:
            self._canon = canonical(self.re)
        return self._canon

    def __eq__(self, other) -> bool:
        if not isinstance(other, RegexEffect):
            return False
        # Syntactic equality after the smart constructors is common and cheap.
        return self.re == other.re or self.dfa == other.dfa

    def __hash__(self) -> int:
        return hash(self.dfa)

    def __repr__(self) -> str:
        return f"RegexEffect({self.re})"

    def __str__(self) -> str:
        return str(self.re)

    def accepts(self, w: Iterable) -> bool:
        return matches(self.re, w)

    def is_empty(self) -> bool:
        return self.dfa.size == 0

    def canonical(self) -> "RegexEffect":
        """The same language, spelled from its minimal automaton."""
        return RegexEffect(dfa_to_regex(self.dfa))

    def map_symbols(self, f) -> "RegexEffect":
        return RegexEffect(_map(self.re, f))


def _map(r: Regex, f) -> Regex:
    match r:
        case Sym(s):
            return Sym(f(s))
        case Cat(parts):
            return cat(*(_map(p, f) for p in parts))
        case Alt(alts):
            return alt(*(_map(p, f) for p in alts))
        case Star(body):
            return star(_map(body, f))
    return r


def R(r: Regex) -> RegexEffect:
    return RegexEffect(r)


REGEX_UNIT = RegexEffect(EPS)


def regex_seq(a: RegexEffect, b: RegexEffect) -> RegexEffect:
    return RegexEffect(cat(a.re, b.re))


def regex_join(a: RegexEffect, b: RegexEffect) -> RegexEffect:
    return RegexEffect(alt(a.re, b.re))


def regex_star(a: RegexEffect) -> RegexEffect:
    return RegexEffect(star(a.re))


def random_regex(rng: random.Random, alphabet: tuple, depth: int = 3,
                 allow_empty: bool = False) -> Regex:
    leaves = [EPS] + [Sym(a) for a in alphabet] * 2
    if allow_empty:
        leaves.append(EMPTY)
    if depth <= 0 or rng.random() < 0.3:
        return rng.choice(leaves)
    k = rng.randrange(3)
    if k == 0:
        return cat(random_regex(rng, alphabet, depth - 1, allow_empty),
                   random_regex(rng, alphabet, depth - 1, allow_empty))
    if k == 1:
        return alt(random_regex(rng, alphabet, depth - 1, allow_empty),
                   random_regex(rng, alphabet, depth - 1, allow_empty))
    return star(random_regex(rng, alphabet, depth - 1, allow_empty))


def regex_quantale(alphabet: tuple = ("a", "b")) -> EffectQuantale:
    """Finite-trace effects: concatenation, union, Kleene star, unit ``ε``."""
    def sample(rng):
        return RegexEffect(random_regex(rng, alphabet))

    def grow(rng, a):
        return RegexEffect(alt(a.re, random_regex(rng, alphabet)))

    syms = [Sym(a) for a in alphabet]
    interesting = [REGEX_UNIT] + [RegexEffect(s) for s in syms]
    interesting += [RegexEffect(star(alt(*syms))), RegexEffect(star(syms[0]))]
    return EffectQuantale(
        name="regex", join=regex_join, seq=regex_seq, unit=REGEX_UNIT, star=regex_star,
        sample=sample, grow=grow, interesting=tuple(interesting), show=str,
        canon=RegexEffect.canonical,
    )


# --------------------------------------------------------------------------
# Surface syntax


class RegexSyntaxError(ValueError):
    pass


def _tokens(text: str) -> Iterator[str]:
    i = 0
    while i < len(text):
        c = text[i]
        if c.isspace():
            i += 1
        elif c in "()|*":
            yield c
            i += 1
        elif c.isalnum() or c in "_ε∅":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] in "_"):
                j += 1
            yield text[i:max(j, i + 1)]
            i = max(j, i + 1)
        else:
            raise RegexSyntaxError(f"unexpected character {c!r}")


def parse_regex(text: str, alphabet: Optional[Iterable[str]] = None) -> Regex:
    """Parse ``a(b|c)*``-style syntax.

    A run of letters is one symbol if it is a declared alphabet symbol and is
    otherwise split into single-letter symbols.  ``ε`` or ``eps`` is the empty
    word, ``∅`` or ``empty`` the empty language.
    """
    alpha = set(alphabet) if alphabet is not None else None
    toks = list(_tokens(text))
    pos = 0

    def peek():
        return toks[pos] if pos < len(toks) else None

    def take():
        nonlocal pos
        t = peek()
        pos += 1
        return t

    def check_sym(s):
        if alpha is not None and s not in alpha:
            raise RegexSyntaxError(f"symbol {s!r} not in alphabet")
        return Sym(s)

    def atom():
        t = take()
        if t is None:
            raise RegexSyntaxError("unexpected end of input")
        if t == "(":
            if peek() == ")":
                take()
                return EPS
            r = alternation()
            if take() != ")":
                raise RegexSyntaxError("expected ')'")
            return r
        if t in ("ε", "eps"):
            return EPS
        if t in ("∅", "empty"):
            return EMPTY
        if t in ")|*":
            raise RegexSyntaxError(f"unexpected {t!r}")
        if alpha is not None and t in alpha:
            return Sym(t)
        return [check_sym(c) for c in t]

    def postfix():
        r = atom()
        # A split run of letters is a concatenation; ``*`` binds to its last letter.
        head = []
        if isinstance(r, list):
            head, r = r[:-1], r[-1]
        while peek() == "*":
            take()
            r = star(r)
        return cat(*head, r)

    def concatenation():
        parts = [postfix()]
        while peek() not in (None, ")", "|"):
            parts.append(postfix())
        return cat(*parts)

    def alternation():
        alts = [concatenation()]
        while peek() == "|":
            take()
            alts.append(concatenation())
        return alt(*alts)

    r = alternation()
    if pos != len(toks):
        raise RegexSyntaxError(f"trailing input at token {toks[pos]!r}")
    return r
