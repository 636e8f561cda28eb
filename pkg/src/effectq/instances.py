"""Concrete effect quantales: atomicity, Crit, locksets, deadlock levels,
lower-bound counts, plus products and commutative lifts."""

from __future__ import annotations

import itertools
import math
import random
from collections import Counter
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Optional

from .quantale import EffectQuantale, derive_star_finite, leq

INF = math.inf


def id_key(x: Any):
    """Canonical sort key for lock ids and event symbols of mixed kinds."""
    return (type(x).__name__, str(x))


# --------------------------------------------------------------------------
# Atomicity

ATOMICITY = ("B", "L", "R", "A", "TOP")
_ATOM_RANK = {"B": 0, "L": 1, "R": 1, "A": 2, "TOP": 3}

_ATOM_SEQ = {
    "B": {"B": "B", "L": "L", "R": "R", "A": "A", "TOP": "TOP"},
    "R": {"B": "R", "L": "A", "R": "R", "A": "A", "TOP": "TOP"},
    "L": {"B": "L", "L": "L", "R": "TOP", "A": "TOP", "TOP": "TOP"},
    "A": {"B": "A", "L": "A", "R": "TOP", "A": "TOP", "TOP": "TOP"},
    "TOP": {x: "TOP" for x in ATOMICITY},
}


def atomicity_join(a: str, b: str) -> str:
    if a == b:
        return a
    if {a, b} == {"L", "R"}:
        return "A"
    return a if _ATOM_RANK[a] > _ATOM_RANK[b] else b


def atomicity_seq(a: str, b: str) -> str:
    return _ATOM_SEQ[a][b]


_ATOM_STAR = {"B": "B", "L": "L", "R": "R", "A": "TOP", "TOP": "TOP"}


def atomicity_star(a: str) -> str:
    return _ATOM_STAR[a]


def atomicity(star: Optional[Callable] = atomicity_star) -> EffectQuantale:
    return EffectQuantale(
        name="atomicity", join=atomicity_join, seq=atomicity_seq, unit="B",
        star=star, elements=ATOMICITY, interesting=ATOMICITY,
        sample=lambda rng: rng.choice(ATOMICITY),
    )


# --------------------------------------------------------------------------
# Crit

CRIT = ("eps", "locking", "unlocking", "critical", "entrant")

_CRIT_SEQ = {
    "locking": {"unlocking": "entrant", "critical": "locking", "eps": "locking"},
    "unlocking": {"locking": "critical", "entrant": "unlocking", "eps": "unlocking"},
    "critical": {"unlocking": "unlocking", "critical": "critical", "eps": "critical"},
    "entrant": {"locking": "locking", "entrant": "entrant", "eps": "entrant"},
    "eps": {x: x for x in CRIT},
}


def crit_join(a: str, b: str) -> Optional[str]:
    if a == b:
        return a
    if a == "eps" and b in ("critical", "entrant"):
        return b
    if b == "eps" and a in ("critical", "entrant"):
        return a
    return None


def crit_seq(a: str, b: str) -> Optional[str]:
    return _CRIT_SEQ[a].get(b)


def crit_star(a: str) -> Optional[str]:
    return a if a in ("eps", "critical", "entrant") else None


def crit(star: Optional[Callable] = crit_star) -> EffectQuantale:
    return EffectQuantale(
        name="crit", join=crit_join, seq=crit_seq, unit="eps", star=star,
        elements=CRIT, interesting=CRIT, sample=lambda rng: rng.choice(CRIT),
    )


# --------------------------------------------------------------------------
# Lower-bound counts: seq is +, join is min, 0 is the unit and the top.


def count_join(a: int, b: int) -> int:
    return min(a, b)


def count_seq(a: int, b: int) -> int:
    return a + b


def count_star(a: int) -> int:
    return 0


def count(star: Optional[Callable] = count_star) -> EffectQuantale:
    return EffectQuantale(
        name="count", join=count_join, seq=count_seq, unit=0, star=star,
        sample=lambda rng: rng.choice((0, 1, 2, 3, rng.randrange(100))),
        grow=lambda rng, a: rng.randrange(a + 1),
        interesting=(0, 1, 2),
    )


# --------------------------------------------------------------------------
# Multisets and lock effects


def _canon(counts: Counter) -> tuple:
    return tuple(sorted(((k, n) for k, n in counts.items() if n > 0), key=lambda kv: id_key(kv[0])))


def multiset(items: Iterable = ()) -> tuple:
    """Canonical multiset: sorted ``(id, count)`` pairs with positive counts."""
    if isinstance(items, Counter):
        return _canon(items)
    return _canon(Counter(items))


def _pointwise(a: tuple, b: tuple, f) -> tuple:
    """Combine counts id by id, merging the two sorted tuples in one pass."""
    out = []
    i = j = 0
    while i < len(a) or j < len(b):
        if j == len(b):
            k, m, n = a[i][0], a[i][1], 0
            i += 1
        elif i == len(a):
            k, m, n = b[j][0], 0, b[j][1]
            j += 1
        else:
            ka, kb = id_key(a[i][0]), id_key(b[j][0])
            if ka < kb:
                k, m, n = a[i][0], a[i][1], 0
                i += 1
            elif kb < ka:
                k, m, n = b[j][0], 0, b[j][1]
                j += 1
            elif a[i][0] == b[j][0]:
                k, m, n = a[i][0], a[i][1], b[j][1]
                i += 1
                j += 1
            else:
                da, db = dict(a), dict(b)
                return _canon_dict({k: f(da.get(k, 0), db.get(k, 0)) for k in da.keys() | db.keys()})
        v = f(m, n)
        if v > 0:
            out.append((k, v))
    return tuple(out)


def _canon_dict(d: dict) -> tuple:
    return tuple(sorted(((k, n) for k, n in d.items() if n > 0), key=lambda kv: id_key(kv[0])))


def ms_union(a: tuple, b: tuple) -> tuple:
    if not b:
        return a
    if not a:
        return b
    return _pointwise(a, b, lambda m, n: m + n)


def ms_minus(a: tuple, b: tuple) -> tuple:
    """Multiset difference, floored at zero."""
    if not a or not b:
        return a
    return _pointwise(a, b, lambda m, n: m - n)


def ms_max(a: tuple, b: tuple) -> tuple:
    return _pointwise(a, b, max)


def ms_items(a: tuple) -> list:
    return [k for k, n in a for _ in range(n)]


@dataclass(frozen=True)
class LockEffect:
    """Claims on locks required before and held after a computation."""

    pre: tuple = ()
    post: tuple = ()

    @staticmethod
    def of(pre: Iterable = (), post: Iterable = ()) -> "LockEffect":
        return LockEffect(multiset(pre), multiset(post))

    def map_ids(self, f: Callable) -> "LockEffect":
        """Relabel lock ids; multiplicities of merged ids are summed."""
        pre, post = Counter(), Counter()
        for k, n in self.pre:
            pre[f(k)] += n
        for k, n in self.post:
            post[f(k)] += n
        return LockEffect(_canon(pre), _canon(post))

    def ids(self) -> set:
        return {k for k, _ in self.pre} | {k for k, _ in self.post}

    def __str__(self) -> str:
        return f"({_show_ms(self.pre)},{_show_ms(self.post)})"


def _show_ms(m: tuple) -> str:
    if not m:
        return "∅"
    return "{" + ",".join(str(k) for k in ms_items(m)) + "}"


LOCK_UNIT = LockEffect()


def lock_seq(a: LockEffect, b: LockEffect) -> LockEffect:
    # Per lock: claim what ``a`` needs plus whatever ``b`` needs beyond what
    # ``a`` leaves behind, then replay both net changes on that claim.
    if a == LOCK_UNIT:
        return b
    if b == LOCK_UNIT:
        return a
    ap, aq, bp, bq = dict(a.pre), dict(a.post), dict(b.pre), dict(b.post)
    pre, post = {}, {}
    for k in ap.keys() | aq.keys() | bp.keys() | bq.keys():
        x, y, u, v = ap.get(k, 0), aq.get(k, 0), bp.get(k, 0), bq.get(k, 0)
        c = x + max(0, u - y)
        mid = max(0, c - max(0, x - y)) + max(0, y - x)
        pre[k] = c
        post[k] = max(0, mid - max(0, u - v)) + max(0, v - u)
    return LockEffect(_canon_dict(pre), _canon_dict(post))


def lock_join(a: LockEffect, b: LockEffect) -> Optional[LockEffect]:
    if ms_minus(b.pre, b.post) != ms_minus(a.pre, a.post):
        return None
    if ms_minus(b.post, b.pre) != ms_minus(a.post, a.pre):
        return None
    return LockEffect(ms_max(a.pre, b.pre), ms_max(a.post, b.post))


def lock_star(a: LockEffect) -> Optional[LockEffect]:
    return a if a.pre == a.post else None


def _sample_ms(rng: random.Random, ids: tuple, hi: int = 2) -> tuple:
    return _canon(Counter({k: rng.randint(0, hi) for k in ids}))


def lockset(ids: tuple = ("l1", "l2", "l3"), star: Optional[Callable] = lock_star) -> EffectQuantale:
    def sample(rng):
        return LockEffect(_sample_ms(rng, ids), _sample_ms(rng, ids))

    def grow(rng, a):
        extra = _sample_ms(rng, ids, 1)
        return LockEffect(ms_union(a.pre, extra), ms_union(a.post, extra))

    l1 = ids[0]
    return EffectQuantale(
        name="lockset", join=lock_join, seq=lock_seq, unit=LOCK_UNIT, star=star,
        sample=sample, grow=grow, show=str,
        interesting=(LOCK_UNIT, LockEffect.of((), [l1]), LockEffect.of([l1], ()),
                     LockEffect.of([l1], [l1]), LockEffect.of((), [l1, l1])),
    )


# --------------------------------------------------------------------------
# Deadlock-freedom effects with lock levels


@dataclass(frozen=True)
class DLEffect:
    """``(pre, bound, post)``: per-lock ``(level, held)`` maps around a level bound."""

    pre: tuple = ()
    bound: float = INF
    post: tuple = ()

    @staticmethod
    def of(pre: dict, bound, post: dict) -> "DLEffect":
        return DLEffect(_dl_canon(pre), bound, _dl_canon(post))

    @property
    def pre_map(self) -> dict:
        return {k: (lv, h) for k, lv, h in self.pre}

    @property
    def post_map(self) -> dict:
        return {k: (lv, h) for k, lv, h in self.post}

    def __str__(self) -> str:
        return f"({_show_dl(self.pre)},{_show_level(self.bound)},{_show_dl(self.post)})"


def _show_level(lv) -> str:
    return "∞" if lv == INF else str(lv)


def _show_dl(m: tuple) -> str:
    body = ",".join(f"{k}↦({_show_level(lv)},{'held' if h else '1'})" for k, lv, h in m)
    return "{" + body + "}"


def _dl_canon(m: dict) -> tuple:
    return tuple(sorted(((k, lv, bool(h)) for k, (lv, h) in m.items()), key=lambda t: id_key(t[0])))


DL_UNIT = DLEffect((), INF, ())


def _max_held(m: dict) -> float:
    return max((lv for lv, h in m.values() if h), default=-INF)


def _unique_held(m: dict) -> bool:
    levels = [lv for lv, h in m.values() if h]
    return len(levels) == len(set(levels))


def dl_well_formed(e: DLEffect) -> bool:
    x, y = e.pre_map, e.post_map
    if x.keys() != y.keys():
        return False
    if any(x[k][0] != y[k][0] for k in x):
        return False
    if not _max_held(x) < e.bound:
        return False
    return _unique_held(x) and _unique_held(y)


def _compatible_union(a: dict, b: dict) -> Optional[dict]:
    out = dict(a)
    for k, v in b.items():
        if k in out and out[k] != v:
            return None
        out[k] = v
    return out


def _pairs(m: dict) -> set:
    return set(m.items())


def dl_join(a: DLEffect, b: DLEffect) -> Optional[DLEffect]:
    x, y, x2, y2 = a.pre_map, a.post_map, b.pre_map, b.post_map
    if _pairs(x) ^ _pairs(y) != _pairs(x2) ^ _pairs(y2):
        return None
    pre = _compatible_union(x, x2)
    post = _compatible_union(y, y2)
    if pre is None or post is None:
        return None
    out = DLEffect.of(pre, min(a.bound, b.bound), post)
    return out if dl_well_formed(out) else None


def dl_seq(a: DLEffect, b: DLEffect) -> Optional[DLEffect]:
    x, y, x2, y2 = a.pre_map, a.post_map, b.pre_map, b.post_map
    shared = y.keys() & x2.keys()
    if any(y[k] != x2[k] for k in shared):
        return None
    residual = {k: v for k, v in y.items() if (k, v) not in _pairs(x2)}
    if not _max_held(residual) < b.bound:
        return None
    incoming = {k: v for k, v in x2.items() if (k, v) not in _pairs(y)}
    if not _max_held(incoming) < a.bound:
        return None
    pre = dict(x)
    pre.update({k: v for k, v in x2.items() if k not in x})
    # Locks the second effect does not mention pass through unchanged.
    post = {k: v for k, v in y.items() if k not in x2}
    post.update(y2)
    out = DLEffect.of(pre, min(a.bound, b.bound), post)
    return out if dl_well_formed(out) else None


def dl_star(a: DLEffect) -> Optional[DLEffect]:
    return a if a.pre == a.post and dl_well_formed(a) else None


DL_LEVELS = {"x": 1, "y": 2, "z": 3}


def _sample_dl(rng: random.Random) -> DLEffect:
    while True:
        locks = [k for k in DL_LEVELS if rng.random() < 0.5]
        levels = dict(DL_LEVELS)
        if rng.random() < 0.1:
            levels = {k: rng.randint(1, 3) for k in DL_LEVELS}
        pre = {k: (levels[k], rng.random() < 0.5) for k in locks}
        post = {k: (levels[k], rng.random() < 0.5) for k in locks}
        bound = rng.choice((0, 1, 2, 3, 4, INF, INF))
        e = DLEffect.of(pre, bound, post)
        if dl_well_formed(e):
            return e


def _grow_dl(rng: random.Random, a: DLEffect) -> DLEffect:
    pre, post = a.pre_map, a.post_map
    for k, lv in DL_LEVELS.items():
        if k not in pre and rng.random() < 0.5:
            held = rng.random() < 0.3
            pre[k] = (lv, held)
            post[k] = (lv, held)
    bound = min(a.bound, rng.choice((0, 1, 2, 3, 4, INF)))
    b = DLEffect.of(pre, bound, post)
    if dl_well_formed(b) and leq(deadlock(), a, b):
        return b
    return a


def deadlock(star: Optional[Callable] = dl_star) -> EffectQuantale:
    x1 = {"x": (1, True)}
    return EffectQuantale(
        name="dl", join=dl_join, seq=dl_seq, unit=DL_UNIT, star=star,
        sample=_sample_dl, grow=_grow_dl, show=str,
        interesting=(DL_UNIT, DLEffect.of(x1, INF, x1),
                     DLEffect.of({"x": (1, False)}, 2, {"x": (1, True)}),
                     DLEffect.of({"y": (2, True)}, 5, {"y": (2, False)})),
    )


# --------------------------------------------------------------------------
# Constructions


def _opt_pair(op_l, op_r):
    def op(a, b):
        left = op_l(a[0], b[0])
        if left is None:
            return None
        right = op_r(a[1], b[1])
        if right is None:
            return None
        return (left, right)
    return op


def product(q: EffectQuantale, r: EffectQuantale) -> EffectQuantale:
    """Componentwise product; operations defined iff both halves are."""
    star = None
    if q.star is not None and r.star is not None:
        def star(x, qs=q.star, rs=r.star):
            left, right = qs(x[0]), rs(x[1])
            if left is None or right is None:
                return None
            return (left, right)
    elements = None
    if q.elements is not None and r.elements is not None:
        elements = tuple(itertools.product(q.elements, r.elements))
    sample = None
    if q.sample is not None and r.sample is not None:
        def sample(rng):
            return (q.sample(rng), r.sample(rng))

    def grow(rng, a):
        left = q.grow(rng, a[0]) if q.grow else a[0]
        right = r.grow(rng, a[1]) if r.grow else a[1]
        return (left, right)

    canon = None
    if q.canon is not None or r.canon is not None:
        cq, cr = q.canon or (lambda x: x), r.canon or (lambda x: x)

        def canon(x):
            return (cq(x[0]), cr(x[1]))

    interesting = tuple((a, b) for a in q.interesting[:4] for b in r.interesting[:4])
    return EffectQuantale(
        name=f"{q.name}*{r.name}", join=_opt_pair(q.join, r.join), seq=_opt_pair(q.seq, r.seq),
        unit=(q.unit, r.unit), star=star, elements=elements, sample=sample, grow=grow,
        interesting=interesting, show=lambda x: f"{q.show(x[0])}⊗{r.show(x[1])}",
        canon=canon,
    )


@dataclass(frozen=True)
class Semilattice:
    """A finite join-semilattice given by its elements and total join."""

    elements: tuple
    join: Callable[[Any, Any], Any]
    name: str = "semilattice"

    def bottom(self):
        for x in self.elements:
            if all(self.join(x, y) == y for y in self.elements):
                return x
        return None

    def top(self):
        for x in self.elements:
            if all(self.join(x, y) == x for y in self.elements):
                return x
        return None


def powerset_lattice(atoms: Iterable, name: str = "powerset") -> Semilattice:
    atoms = sorted(set(atoms), key=id_key)
    els = tuple(frozenset(c) for n in range(len(atoms) + 1) for c in itertools.combinations(atoms, n))
    return Semilattice(els, lambda a, b: a | b, name)


def lift_semilattice(lat: Semilattice) -> EffectQuantale:
    """Commutative effects: join doubles as sequencing, bottom is the unit."""
    bot, top = lat.bottom(), lat.top()
    if bot is None:
        raise ValueError(f"{lat.name} has no bottom element")
    if top is None:
        raise ValueError(f"{lat.name} has no top element")
    q = EffectQuantale(
        name=f"lift({lat.name})", join=lat.join, seq=lat.join, unit=bot,
        elements=lat.elements, interesting=lat.elements,
        sample=lambda rng: rng.choice(lat.elements),
        show=_show_set,
    )
    return q.with_star(derive_star_finite(q))


def _show_set(x) -> str:
    if isinstance(x, frozenset):
        return "{" + ",".join(sorted(map(str, x))) + "}"
    return str(x)


def trivial() -> EffectQuantale:
    """The one-element quantale."""
    return EffectQuantale(
        name="trivial", join=lambda a, b: a, seq=lambda a, b: a, unit="I",
        star=lambda a: a, elements=("I",), sample=lambda rng: "I", interesting=("I",),
    )
