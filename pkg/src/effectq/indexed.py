"""Value-indexed families of effect quantales, substitution maps and
homomorphism checks.

Index values live inside elements (lock ids inside lock effects, event
symbols inside trace languages).  ``map_index`` pushes a function on index
values through any supported element shape, which is how substitution into
ground effects works.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Any, Callable, Optional

from .instances import DLEffect, LockEffect
from .quantale import (DEFAULT_SAMPLES, EffectQuantale, LawReport, MissingEnumerator, leq)
from .regex import RegexEffect, symbols


def map_index(elem: Any, f: Callable[[Any], Any]) -> Any:
    """Apply ``f`` to every index value inside ``elem``."""
    match elem:
        case LockEffect():
            return elem.map_ids(f)
        case RegexEffect():
            return elem.map_symbols(f)
        case tuple():
            return tuple(map_index(x, f) for x in elem)
    return elem


def index_values(elem: Any) -> list:
    """Index values mentioned by ``elem``, in a deterministic order."""
    match elem:
        case LockEffect():
            out = []
            for k, _ in elem.pre + elem.post:
                if k not in out:
                    out.append(k)
            return out
        case RegexEffect():
            return sorted(symbols(elem.re), key=lambda s: (type(s).__name__, str(s)))
        case tuple():
            out = []
            for x in elem:
                for v in index_values(x):
                    if v not in out:
                        out.append(v)
            return out
    return []


def show_elem(elem: Any) -> str:
    match elem:
        case tuple():
            return "⊗".join(show_elem(x) for x in elem)
        case "TOP":
            return "⊤"
        case "eps":
            return "ε"
    return str(elem)


def map_effect(f: Callable[[Any], Any], elem: Any) -> Any:
    return map_index(elem, f)


@dataclass(frozen=True)
class IndexedQuantale:
    """A family ``at(S)`` of quantales with functorial action ``map``."""

    name: str
    at: Callable[[tuple], EffectQuantale]
    map: Callable[[Callable, Any], Any] = map_effect
    indexed: bool = True


def constant(q: EffectQuantale) -> IndexedQuantale:
    """A plain quantale viewed as an indexed one that ignores its index."""
    return IndexedQuantale(q.name, lambda S: q, lambda f, e: e, indexed=False)


def indexed_lockset() -> IndexedQuantale:
    from .instances import lockset
    return IndexedQuantale("lockset", lambda S: lockset(tuple(S)))


def indexed_regex() -> IndexedQuantale:
    from .regex import regex_quantale
    return IndexedQuantale("regex", lambda S: regex_quantale(tuple(S)))


def indexed_product(p: IndexedQuantale, r: IndexedQuantale) -> IndexedQuantale:
    from .instances import product

    def mapping(f, e):
        return (p.map(f, e[0]), r.map(f, e[1]))
    return IndexedQuantale(f"{p.name}*{r.name}", lambda S: product(p.at(S), r.at(S)), mapping,
                           indexed=p.indexed or r.indexed)


def dl_indexed():
    """Lock-level effects are deliberately not offered as an indexed family:
    merging two locks can break the unique-held-level invariant, so the
    induced maps are not homomorphisms."""
    raise TypeError("deadlock-level effects are only available with fixed lock names")


@dataclass(frozen=True)
class HomomorphismWitness:
    source: EffectQuantale
    target: EffectQuantale
    mapping: Callable[[Any], Any]
    name: str = "m"


def check_homomorphism(w: HomomorphismWitness, samples: Optional[int] = None,
                       seed: int = 0) -> LawReport:
    """Refines sequencing and join, preserves the unit exactly."""
    src, tgt, m = w.source, w.target, w.mapping
    report = LawReport(f"{w.name}:{src.name}->{tgt.name}")
    image_unit = m(src.unit)
    report.record("preserves_unit", image_unit == tgt.unit, (src.unit,), image_unit, tgt.unit)
    if src.elements is not None and samples is None:
        import itertools
        pairs = list(itertools.product(src.elements, repeat=2))
        report.mode = "exhaustive"
    else:
        if src.sample is None:
            raise MissingEnumerator(f"{src.name} has no sampler")
        n = samples or DEFAULT_SAMPLES
        rng = random.Random(seed)
        pairs = []
        for _ in range(n):
            x = src.sample(rng)
            # Related pairs keep partial operations defined often enough.
            y = src.grow(rng, x) if src.grow is not None and rng.random() < 0.5 else src.sample(rng)
            pairs.append((x, y))
        report.mode = f"sampled(n={n}, seed={seed})"
    for x, y in pairs:
        for op_s, op_t, law in ((src.seq, tgt.seq, "refines_seq"), (src.join, tgt.join, "refines_join")):
            z = op_s(x, y)
            if z is None:
                continue
            got = op_t(m(x), m(y))
            ok = got is not None and leq(tgt, got, m(z))
            report.record(law, ok, (x, y), got, m(z))
    for law in ("refines_seq", "refines_join"):
        report.law(law)
    return report


def check_monotone(iq: IndexedQuantale, small: tuple, large: tuple,
                   samples: Optional[int] = None, seed: int = 0) -> LawReport:
    """The inclusion ``small ⊆ large`` acts as the identity on elements and
    preserves definedness of both operations."""
    if not set(small) <= set(large):
        raise ValueError("index sets must be nested")
    qs, ql = iq.at(small), iq.at(large)
    report = LawReport(f"{iq.name}:{len(small)}⊆{len(large)}")
    n = samples or DEFAULT_SAMPLES
    rng = random.Random(seed)
    for _ in range(n):
        x = qs.sample(rng)
        y = qs.grow(rng, x) if qs.grow is not None and rng.random() < 0.5 else qs.sample(rng)
        ix = iq.map(lambda v: v, x)
        report.record("inclusion_is_identity", ix == x, (x,), ix, x)
        for law, op_s, op_l in (("seq_preserved", qs.seq, ql.seq), ("join_preserved", qs.join, ql.join)):
            z = op_s(x, y)
            if z is not None:
                got = op_l(x, y)
                report.record(law, got is not None and got == z, (x, y), got, z)
    report.mode = f"sampled(n={n}, seed={seed})"
    return report


__all__ = [
    "DLEffect", "HomomorphismWitness", "IndexedQuantale", "check_homomorphism", "check_monotone",
    "constant", "dl_indexed", "index_values", "indexed_lockset", "indexed_product", "indexed_regex",
    "map_effect", "map_index", "show_elem",
]
