"""Kleene algebras, their law suite, and their reading as iterable effect
quantales with total operations."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Any, Callable, Optional

from .quantale import DEFAULT_SAMPLES, EffectQuantale, LawReport, leq
from .regex import EMPTY, EPS, REGEX_UNIT, RegexEffect, Sym, alt, random_regex, regex_join, regex_seq, regex_star, star


@dataclass(frozen=True)
class KleeneAlgebra:
    name: str
    plus: Callable[[Any, Any], Any]
    times: Callable[[Any, Any], Any]
    star: Callable[[Any], Any]
    zero: Any
    one: Any
    elements: Optional[tuple] = None
    sample: Optional[Callable[[random.Random], Any]] = None
    show: Callable[[Any], str] = str

    def leq(self, a, b) -> bool:
        return self.plus(a, b) == b


def check_ka_laws(k: KleeneAlgebra, samples: Optional[int] = None, seed: int = 0) -> LawReport:
    """Semiring axioms, the unfolding laws and both induction laws.

    Induction is an implication; besides random ``x`` we test solutions
    built to satisfy the premise, so a pass is not vacuous.
    """
    if k.elements is not None and samples is None:
        triples = list(itertools.product(k.elements, repeat=3))
        mode = "exhaustive"
    else:
        n = samples or DEFAULT_SAMPLES
        rng = random.Random(seed)
        triples = [(k.sample(rng), k.sample(rng), k.sample(rng)) for _ in range(n)]
        mode = f"sampled(n={n}, seed={seed})"
    r = LawReport(k.name, mode=mode)
    p, t, s, le = k.plus, k.times, k.star, k.leq
    for a, b, c in triples:
        r.record("plus_associative", p(a, p(b, c)) == p(p(a, b), c), (a, b, c))
        r.record("plus_commutative", p(a, b) == p(b, a), (a, b))
        r.record("plus_idempotent", p(a, a) == a, (a,), p(a, a), a)
        r.record("plus_zero", p(a, k.zero) == a, (a,))
        r.record("times_associative", t(a, t(b, c)) == t(t(a, b), c), (a, b, c))
        r.record("times_one", t(k.one, a) == a and t(a, k.one) == a, (a,))
        r.record("zero_nilpotent", t(k.zero, a) == k.zero and t(a, k.zero) == k.zero, (a,))
        r.record("distributes_left", t(a, p(b, c)) == p(t(a, b), t(a, c)), (a, b, c))
        r.record("distributes_right", t(p(a, b), c) == p(t(a, c), t(b, c)), (a, b, c))
        sa = s(a)
        r.record("star_unfold_left", le(p(k.one, t(a, sa)), sa), (a,))
        r.record("star_unfold_right", le(p(k.one, t(sa, a)), sa), (a,))
        for x in (c, t(sa, p(b, c)), t(s(p(a, c)), b)):
            if le(p(b, t(a, x)), x):
                r.record("star_induction_left", le(t(sa, b), x), (a, b, x))
        for x in (c, t(p(b, c), sa), t(b, s(p(a, c)))):
            if le(p(b, t(x, a)), x):
                r.record("star_induction_right", le(t(b, sa), x), (a, b, x))
    return r


def as_effect_quantale(k: KleeneAlgebra) -> EffectQuantale:
    """Join is plus, sequencing is times, the unit is one; all total."""
    grow = None
    if k.sample is not None:
        def grow(rng, a):
            return k.plus(a, k.sample(rng))
    return EffectQuantale(
        name=f"ka({k.name})", join=k.plus, seq=k.times, unit=k.one, star=k.star,
        elements=k.elements, sample=k.sample, grow=grow,
        interesting=(k.zero, k.one) + tuple(k.elements or ()), show=k.show,
    )


def boolean_ka() -> KleeneAlgebra:
    return KleeneAlgebra("bool", lambda a, b: a | b, lambda a, b: a & b, lambda a: 1, 0, 1, elements=(0, 1))


def regular_language_ka(alphabet=("a", "b")) -> KleeneAlgebra:
    """Regular languages, including the empty language as zero."""
    alphabet = tuple(alphabet)

    def sample(rng):
        return RegexEffect(random_regex(rng, alphabet, allow_empty=True))
    return KleeneAlgebra(f"regular{{{','.join(alphabet)}}}", regex_join, regex_seq, regex_star,
                         RegexEffect(EMPTY), REGEX_UNIT, sample=sample)


def star_is_least_subidempotent(q: EffectQuantale, x, candidates) -> bool:
    """``star(x)`` is subidempotent, lies above ``x`` and the unit, and lies
    below each candidate that does too."""
    s = q.star(x)
    if s is None:
        return False
    ss = q.seq(s, s)
    if ss is None or not leq(q, ss, s) or not leq(q, x, s) or not leq(q, q.unit, s):
        return False
    for y in candidates:
        yy = q.seq(y, y)
        if yy is not None and leq(q, yy, y) and leq(q, x, y) and leq(q, q.unit, y):
            if not leq(q, s, y):
                return False
    return True


def unfold_identity_holds(r: RegexEffect) -> bool:
    """``1 + a·a* = a*`` by automaton equivalence."""
    lhs = RegexEffect(alt(EPS, regex_seq(r, regex_star(r)).re))
    return lhs == regex_star(r)


__all__ = [
    "KleeneAlgebra", "as_effect_quantale", "boolean_ka", "check_ka_laws", "regular_language_ka",
    "star_is_least_subidempotent", "unfold_identity_holds",
]
