"""Effect quantales as executable algebra.

An effect quantale bundles a partial join, a partial sequencing operator and a
unit.  Partiality is always an explicit ``None`` result: no element of any
carrier is ever ``None``.

This module also holds the law-checking engine and the free iteration
construction (least subidempotent element above both ``x`` and the unit).
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Optional, Sequence

Element = Any
BinOp = Callable[[Element, Element], Optional[Element]]
UnOp = Callable[[Element], Optional[Element]]
Sampler = Callable[[random.Random], Element]

DEFAULT_SAMPLES = 1000
MAX_RECORDED_FAILURES = 10
# Laws with this prefix are reported but never make a report fail.
ADVISORY = "advisory:"


class MissingEnumerator(ValueError):
    """Raised when an exhaustive operation is requested on an infinite carrier."""


@dataclass(frozen=True)
class EffectQuantale:
    name: str
    join: BinOp
    seq: BinOp
    unit: Element
    star: Optional[UnOp] = None
    elements: Optional[tuple] = None
    sample: Optional[Sampler] = None
    # Returns some element above its argument; used to build comparable pairs.
    grow: Optional[Callable[[random.Random, Element], Element]] = None
    interesting: tuple = ()
    show: Callable[[Element], str] = str
    # Picks one representative among equal elements with different syntax.
    canon: Optional[UnOp] = None

    @property
    def finite(self) -> bool:
        return self.elements is not None

    def with_star(self, star: Optional[UnOp]) -> "EffectQuantale":
        return _replace(self, star=star)


def _replace(q: EffectQuantale, **changes) -> EffectQuantale:
    import dataclasses

    return dataclasses.replace(q, **changes)


def leq(q: EffectQuantale, a: Element, b: Element) -> bool:
    """The induced order: ``a <= b`` iff ``join(a, b)`` is defined and equals ``b``."""
    j = q.join(a, b)
    return j is not None and j == b


def seq_power(q: EffectQuantale, x: Element, n: int) -> Optional[Element]:
    if n < 0:
        raise ValueError("power must be non-negative")
    acc = q.unit
    for _ in range(n):
        acc = q.seq(acc, x)
        if acc is None:
            return None
    return acc


def seq_all(q: EffectQuantale, xs: Iterable[Element]) -> Optional[Element]:
    acc = q.unit
    for x in xs:
        acc = q.seq(acc, x)
        if acc is None:
            return None
    return acc


def join_all(q: EffectQuantale, xs: Iterable[Element]) -> Optional[Element]:
    it = iter(xs)
    try:
        acc = next(it)
    except StopIteration:
        raise ValueError("join of an empty collection") from None
    for x in it:
        acc = q.join(acc, x)
        if acc is None:
            return None
    return acc


def is_subidempotent(q: EffectQuantale, x: Element) -> bool:
    xx = q.seq(x, x)
    return xx is not None and leq(q, xx, x)


# --------------------------------------------------------------------------
# Reports


@dataclass(frozen=True)
class Counterexample:
    law: str
    witnesses: tuple
    observed: Any
    expected: Any

    def to_json(self, show: Callable[[Element], str] = str) -> dict:
        return {
            "law": self.law,
            "witnesses": [_show_opt(show, w) for w in self.witnesses],
            "observed": _describe(self.observed, show),
            "expected": _describe(self.expected, show),
        }


def _show_opt(show, x) -> Optional[str]:
    return None if x is None else show(x)


def _describe(v, show):
    if isinstance(v, str):
        return v
    return _show_opt(show, v)


@dataclass
class LawResult:
    name: str
    checked: int = 0
    failed: int = 0
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.failed == 0


@dataclass
class LawReport:
    system: str
    laws: dict = field(default_factory=dict)
    mode: str = "exhaustive"

    def law(self, name: str) -> LawResult:
        if name not in self.laws:
            self.laws[name] = LawResult(name)
        return self.laws[name]

    def record(self, name: str, ok: bool, witnesses: tuple, observed=None, expected=None) -> None:
        res = self.law(name)
        res.checked += 1
        if not ok:
            res.failed += 1
            if len(res.failures) < MAX_RECORDED_FAILURES:
                res.failures.append(Counterexample(name, witnesses, observed, expected))

    @property
    def gating(self) -> list:
        return [r for r in self.laws.values() if not r.name.startswith(ADVISORY)]

    @property
    def advisories(self) -> list:
        return [r for r in self.laws.values() if r.name.startswith(ADVISORY)]

    @property
    def counterexamples(self) -> list:
        return [c for r in self.gating for c in r.failures]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.gating)

    def merge(self, other: "LawReport") -> "LawReport":
        for name, res in other.laws.items():
            mine = self.law(name)
            mine.checked += res.checked
            mine.failed += res.failed
            room = MAX_RECORDED_FAILURES - len(mine.failures)
            mine.failures.extend(res.failures[:max(room, 0)])
        return self

    def to_json(self, show: Callable[[Element], str] = str) -> dict:
        def entry(r):
            return {
                "name": r.name,
                "checked": r.checked,
                "failed": r.failed,
                "failures": [c.to_json(show) for c in r.failures],
            }
        doc = {
            "system": self.system,
            "mode": self.mode,
            "pass": self.passed,
            "laws": [entry(r) for r in self.gating],
        }
        if self.advisories:
            doc["advisories"] = [entry(r) for r in self.advisories]
        return doc


# --------------------------------------------------------------------------
# Law checking


def _kleene_eq(a, b) -> bool:
    """Both undefined, or both defined and equal."""
    if a is None or b is None:
        return a is None and b is None
    return a == b


def _either_defined_equal(a, b) -> bool:
    if a is None and b is None:
        return True
    return a is not None and b is not None and a == b


def _opt(op, a, b):
    if a is None or b is None:
        return None
    return op(a, b)


class _Checker:
    """Evaluates individual laws on given witnesses and records outcomes."""

    def __init__(self, q: EffectQuantale, report: LawReport, strict: bool = False):
        self.q = q
        self.r = report
        self.strict = strict

    def pair(self, a, b) -> None:
        q, r = self.q, self.r
        ab, ba = q.join(a, b), q.join(b, a)
        r.record("join_commutative", _kleene_eq(ab, ba), (a, b), ab, ba)

    def single(self, a) -> None:
        q, r = self.q, self.r
        aa = q.join(a, a)
        r.record("join_idempotent", aa is not None and aa == a, (a,), aa, a)
        left, right = q.seq(q.unit, a), q.seq(a, q.unit)
        r.record("unit_left", left is not None and left == a, (a,), left, a)
        r.record("unit_right", right is not None and right == a, (a,), right, a)

    def triple(self, a, b, c) -> None:
        q, r = self.q, self.r
        j1 = _opt(q.join, a, q.join(b, c))
        j2 = _opt(q.join, q.join(a, b), c)
        r.record("join_associative", _kleene_eq(j1, j2), (a, b, c), j1, j2)
        s1 = _opt(q.seq, a, q.seq(b, c))
        s2 = _opt(q.seq, q.seq(a, b), c)
        both = s1 is not None and s2 is not None
        r.record("seq_associative", not both or s1 == s2, (a, b, c), s1, s2)
        # Bracketing-independent definedness is stronger than the partial
        # monoid requirement; it is gating only in strict mode.
        strong = "seq_associative_strict" if self.strict else "advisory:seq_definedness_bracketing"
        r.record(strong, _kleene_eq(s1, s2), (a, b, c), s1, s2)
        d1 = _opt(q.seq, a, q.join(b, c))
        d2 = _opt(q.join, q.seq(a, b), q.seq(a, c))
        r.record("distributes_left", _either_defined_equal(d1, d2), (a, b, c), d1, d2)
        e1 = _opt(q.seq, q.join(a, b), c)
        e2 = _opt(q.join, q.seq(a, c), q.seq(b, c))
        r.record("distributes_right", _either_defined_equal(e1, e2), (a, b, c), e1, e2)

    def ordered(self, a, b, c, d) -> None:
        """Laws quantified over ``a <= b`` and ``c <= d``."""
        q, r = self.q, self.r
        for op, tag in ((q.seq, "seq"), (q.join, "join")):
            hi, lo = op(b, d), op(a, c)
            if hi is not None:
                r.record(f"{tag}_defined_downward", lo is not None, (a, b, c, d), lo, "defined")
                if lo is not None:
                    r.record(f"{tag}_monotone", leq(q, lo, hi), (a, b, c, d), lo, hi)
            if lo is None:
                r.record(f"{tag}_undefined_upward", hi is None, (a, b, c, d), hi, "undefined")


def check_laws(q: EffectQuantale, samples: Optional[int] = None, seed: int = 0,
               exhaustive: Optional[bool] = None, strict: bool = False) -> LawReport:
    """Check every effect-quantale law.

    With ``exhaustive`` (the default for finite carriers) all pairs and triples
    are enumerated, and the monotonicity laws run over all pairs of comparable
    pairs.  Otherwise ``samples`` random witnesses are drawn per law from
    ``q.sample`` (plus ``q.interesting``) with a deterministic seed.

    Associativity is required wherever both bracketings are defined.  With
    ``strict`` the two bracketings must also agree on definedness, which the
    effect-expression normalizer relies on; otherwise that stronger property
    is only reported as an advisory.
    """
    if exhaustive is None:
        exhaustive = q.finite and samples is None
    if exhaustive:
        if q.elements is None:
            raise MissingEnumerator(f"{q.name} has no finite enumerator")
        return _check_exhaustive(q, strict)
    if q.sample is None:
        raise MissingEnumerator(f"{q.name} has neither an enumerator nor a sampler")
    return _check_sampled(q, samples or DEFAULT_SAMPLES, seed, strict)


def _check_exhaustive(q: EffectQuantale, strict: bool) -> LawReport:
    report = LawReport(q.name, mode="exhaustive")
    ck = _Checker(q, report, strict)
    els = q.elements
    for a in els:
        ck.single(a)
    for a, b in itertools.product(els, repeat=2):
        ck.pair(a, b)
    for a, b, c in itertools.product(els, repeat=3):
        ck.triple(a, b, c)
    below = [(a, b) for a, b in itertools.product(els, repeat=2) if leq(q, a, b)]
    for (a, b), (c, d) in itertools.product(below, repeat=2):
        ck.ordered(a, b, c, d)
    return report


def _draw(q: EffectQuantale, rng: random.Random, i: int):
    pool = q.interesting
    if pool and i < len(pool) * 2 and rng.random() < 0.5:
        return pool[rng.randrange(len(pool))]
    return q.sample(rng)


def _above(q: EffectQuantale, rng: random.Random, a):
    if q.grow is not None:
        return q.grow(rng, a)
    b = q.join(a, q.sample(rng))
    return a if b is None else b


def _check_sampled(q: EffectQuantale, n: int, seed: int, strict: bool) -> LawReport:
    report = LawReport(q.name, mode=f"sampled(n={n}, seed={seed})")
    ck = _Checker(q, report, strict)
    rng = random.Random(seed)
    for x in q.interesting:
        ck.single(x)
    for i in range(n):
        ck.single(_draw(q, rng, i))
    for i in range(n):
        ck.pair(_draw(q, rng, i), _draw(q, rng, i))
    for i in range(n):
        ck.triple(_draw(q, rng, i), _draw(q, rng, i), _draw(q, rng, i))
    for i in range(n):
        a = _draw(q, rng, i)
        # Reusing the left witness half the time keeps partial joins defined
        # often enough for the monotonicity laws to bite.
        c = a if rng.random() < 0.5 else _draw(q, rng, i)
        ck.ordered(a, _above(q, rng, a), c, _above(q, rng, c))
    return report


def replay(q: EffectQuantale, cx: Counterexample) -> bool:
    """Re-evaluate a counterexample; true if the failure reproduces."""
    report = LawReport(q.name)
    ck = _Checker(q, report, strict=cx.law == "seq_associative_strict")
    w = cx.witnesses
    if cx.law in ("join_idempotent", "unit_left", "unit_right"):
        ck.single(*w)
    elif cx.law == "join_commutative":
        ck.pair(*w)
    elif cx.law in ("join_associative", "seq_associative", "seq_associative_strict",
                    "advisory:seq_definedness_bracketing", "distributes_left", "distributes_right"):
        ck.triple(*w)
    else:
        ck.ordered(*w)
    res = report.laws.get(cx.law)
    return res is not None and res.failed > 0


# --------------------------------------------------------------------------
# Free iteration


@dataclass(frozen=True)
class StarTable:
    system: str
    table: dict
    laxly_iterable: bool = True
    witness: Optional[Element] = None

    def __call__(self, x: Element) -> Optional[Element]:
        return self.table.get(x)

    @property
    def domain(self) -> list:
        return [x for x, y in self.table.items() if y is not None]

    def to_json(self, show: Callable[[Element], str] = str) -> dict:
        return {
            "system": self.system,
            "star": {show(x): _show_opt(show, y) for x, y in self.table.items()},
            "laxly_iterable": self.laxly_iterable,
        }


def star_candidates(q: EffectQuantale, x: Element, elements: Sequence) -> list:
    """Subidempotent elements above both ``x`` and the unit."""
    return [y for y in elements
            if leq(q, x, y) and leq(q, q.unit, y) and is_subidempotent(q, y)]


def derive_star_finite(q: EffectQuantale) -> StarTable:
    if q.elements is None:
        raise MissingEnumerator(f"{q.name} has no finite enumerator")
    els = q.elements
    table, lax, witness = {}, True, None
    for x in els:
        cands = star_candidates(q, x, els)
        least = [y for y in cands if all(leq(q, y, z) for z in cands)]
        if least:
            table[x] = least[0]
        else:
            table[x] = None
            if cands and lax:
                lax, witness = False, x
    return StarTable(q.name, table, lax, witness)


def with_derived_star(q: EffectQuantale) -> EffectQuantale:
    st = derive_star_finite(q)
    return q.with_star(st)


def check_star_laws(q: EffectQuantale, star: Optional[UnOp] = None, samples: Optional[int] = None,
                    seed: int = 0) -> LawReport:
    """Check extensive, idempotent, monotone, foldable and possibly-empty.

    Every axiom is guarded by definedness of the iterations it mentions.
    """
    star = star or q.star
    if star is None:
        raise ValueError(f"{q.name} has no iteration operator")
    if q.finite and samples is None:
        singles = list(q.elements)
        pairs = [(a, b) for a, b in itertools.product(q.elements, repeat=2) if leq(q, a, b)]
        mode = "exhaustive"
    else:
        if q.sample is None:
            raise MissingEnumerator(f"{q.name} has neither an enumerator nor a sampler")
        n = samples or DEFAULT_SAMPLES
        rng = random.Random(seed)
        singles = list(q.interesting) + [_draw(q, rng, i) for i in range(n)]
        pairs = []
        for i in range(n):
            a = _draw(q, rng, i)
            pairs.append((a, _above(q, rng, a)))
        mode = f"sampled(n={n}, seed={seed})"
    report = LawReport(q.name, mode=mode)
    for e in singles:
        s = star(e)
        if s is None:
            continue
        report.record("star_extensive", leq(q, e, s), (e,), s, "above argument")
        ss = star(s)
        report.record("star_idempotent", ss is not None and ss == s, (e,), ss, s)
        folded = q.seq(s, s)
        report.record("star_foldable", folded is not None and leq(q, folded, s), (e,), folded, s)
        report.record("star_possibly_empty", leq(q, q.unit, s), (e,), s, "above unit")
    for e, f in pairs:
        se, sf = star(e), star(f)
        if se is None or sf is None:
            continue
        report.record("star_monotone", leq(q, se, sf), (e, f), se, sf)
    for law in ("star_extensive", "star_idempotent", "star_foldable",
                "star_possibly_empty", "star_monotone"):
        report.law(law)
    return report


def check_star_precision(q: EffectQuantale, star: Optional[UnOp] = None) -> bool:
    """True iff each defined ``star(x)`` is below every candidate for ``x``,
    and ``star`` is defined wherever some candidate exists."""
    if q.elements is None:
        raise MissingEnumerator(f"{q.name} has no finite enumerator")
    star = star or q.star or derive_star_finite(q)
    for x in q.elements:
        cands = star_candidates(q, x, q.elements)
        s = star(x)
        if s is None:
            if cands:
                return False
            continue
        if s not in cands:
            return False
        if not all(leq(q, s, y) for y in cands):
            return False
    return True


def satisfies_star_axioms(q: EffectQuantale, op: dict) -> bool:
    """Exact check of the five axioms for an operator given as a full table."""
    for e, s in op.items():
        if s is None:
            continue
        if not leq(q, e, s) or not leq(q, q.unit, s):
            return False
        if op.get(s) != s:
            return False
        f = q.seq(s, s)
        if f is None or not leq(q, f, s):
            return False
    for e, f in itertools.product(op, repeat=2):
        se, sf = op[e], op[f]
        if se is not None and sf is not None and leq(q, e, f) and not leq(q, se, sf):
            return False
    return True


def brute_force_precision(q: EffectQuantale, star: Optional[UnOp] = None,
                          max_elements: int = 6) -> bool:
    """Enumerate every partial operator on a small carrier; confirm that each one
    satisfying the iteration axioms is coarser than ``star``."""
    if q.elements is None:
        raise MissingEnumerator(f"{q.name} has no finite enumerator")
    els = list(q.elements)
    if len(els) > max_elements:
        raise ValueError(f"{q.name} has {len(els)} elements; brute force capped at {max_elements}")
    star = star or q.star or derive_star_finite(q)
    # Candidate images per element: values violating extensive/possibly-empty
    # /foldable pointwise are pruned before the product.
    options = []
    for e in els:
        opts = [None] + [s for s in els
                         if leq(q, e, s) and leq(q, q.unit, s) and is_subidempotent(q, s)]
        options.append(opts)
    for images in itertools.product(*options):
        op = dict(zip(els, images))
        if not satisfies_star_axioms(q, op):
            continue
        for e in els:
            other = op[e]
            if other is None:
                continue
            mine = star(e)
            if mine is None or not leq(q, mine, other):
                return False
    return True


def report_json(report: LawReport, table: Optional[StarTable] = None,
                show: Callable[[Element], str] = str) -> str:
    doc = report.to_json(show)
    if table is not None:
        doc["star"] = table.to_json(show)["star"]
        doc["laxly_iterable"] = table.laxly_iterable
    return json.dumps(doc, indent=2, sort_keys=False)
