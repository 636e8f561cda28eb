"""Generators for closed, well-typed test programs, and a fixed λ_trace
corpus.  All generation is driven by a seeded ``random.Random``."""

from __future__ import annotations

import random
from typing import Iterator

from .systems import parse_lambda_trace

# --------------------------------------------------------------------------
# Locks and atomicity

# Each body fragment is a function of (rng, lock names, refs by lock, depth)
# producing an s-expression string.  Lock-held fragments only run while
# their lock is held; acquisitions are never re-entrant.


def _held_stmt(rng: random.Random, lock: str, refs: dict, depth: int) -> str:
    rs = refs.get(lock, [])
    if not rs:
        return "unit"
    r = rng.choice(rs)
    k = rng.randrange(5 if depth > 0 else 3)
    if k == 0:
        return f"(read {lock} @bool {r})"
    if k == 1:
        return f"(write {lock} @bool {r} {rng.choice(['true', 'false'])})"
    if k == 2:
        return f"(seq (write {lock} @bool {r} true) (read {lock} @bool {r}))"
    if k == 3:
        a = _held_stmt(rng, lock, refs, depth - 1)
        b = _held_stmt(rng, lock, refs, depth - 1)
        return f"(if (read {lock} @bool {r}) (seq {a} unit) (seq {b} unit))"
    # A loop that runs at most once: it clears its own guard.
    return f"(while (read {lock} @bool {r}) (write {lock} @bool {r} false))"


def _block(rng: random.Random, lock: str, refs: dict, depth: int) -> str:
    stmts = [_held_stmt(rng, lock, refs, depth) for _ in range(rng.randint(1, 3))]
    return f"(seq (acquire {lock}) {' '.join(stmts)} (release {lock}))"


def _free_stmt(rng: random.Random, locks: list, refs: dict, depth: int) -> str:
    lock = rng.choice(locks)
    k = rng.randrange(4 if depth > 0 else 2)
    if k <= 1:
        return _block(rng, lock, refs, depth)
    if k == 2:
        a = _free_seq(rng, locks, refs, depth - 1)
        b = _free_seq(rng, locks, refs, depth - 1)
        cond = rng.choice(["true", "false"])
        return f"(if {cond} {a} {b})"
    rs = refs.get(lock, [])
    if not rs:
        return _block(rng, lock, refs, depth)
    r = rng.choice(rs)
    guard = f"(seq (acquire {lock}) (let (c (read {lock} @bool {r})) (seq (release {lock}) c)))"
    clear = f"(seq (acquire {lock}) (write {lock} @bool {r} false) (release {lock}))"
    inner = _free_seq(rng, locks, refs, depth - 1)
    return f"(while {guard} (seq {inner} {clear}))"


def _free_seq(rng: random.Random, locks: list, refs: dict, depth: int) -> str:
    stmts = [_free_stmt(rng, locks, refs, depth) for _ in range(rng.randint(1, 2))]
    return f"(seq {' '.join(stmts)} unit)"


def lockatom_program(rng: random.Random, depth: int = 2) -> str:
    """``(λl. body) (new_lock unit)`` nests with refs guarded by each lock."""
    nlocks = rng.randint(1, 2)
    locks = [f"l{i}" for i in range(nlocks)]
    refs = {l: [f"r{l}{j}" for j in range(rng.randint(0, 2))] for l in locks}
    body = _free_seq(rng, locks, refs, depth)
    for l in reversed(locks):
        for r in reversed(refs[l]):
            init = rng.choice(["true", "false"])
            body = f"(let ({r} (alloc {l} @bool {init})) {body})"
    for l in reversed(locks):
        body = f"(app (lam ({l} lock) {body}) (new_lock unit))"
    return body


def lockatom_corpus(n: int = 120, seed: int = 0, depth: int = 2) -> list:
    rng = random.Random(seed)
    return [lockatom_program(rng, depth) for _ in range(n)]


# --------------------------------------------------------------------------
# History effects


def _hist_expr(rng: random.Random, alphabet: tuple, fns: list, depth: int) -> str:
    k = rng.randrange(6 if depth > 0 else 2)
    if k == 0 or k == 1:
        return f"(ev {rng.choice(alphabet)})"
    if k == 2:
        parts = [_hist_expr(rng, alphabet, fns, depth - 1) for _ in range(rng.randint(2, 3))]
        return f"(seq {' '.join(parts)})"
    if k == 3:
        c = rng.choice(["true", "false"])
        return (f"(if {c} {_hist_expr(rng, alphabet, fns, depth - 1)} "
                f"{_hist_expr(rng, alphabet, fns, depth - 1)})")
    if k == 4 and fns:
        return f"({rng.choice(fns)} unit)"
    return f"(seq (while false {_hist_expr(rng, alphabet, fns, depth - 1)}) (ev {rng.choice(alphabet)}))"


def history_program(rng: random.Random, alphabet=("a", "b", "c"), depth: int = 3) -> str:
    """Event sequences, constant conditionals, let-bound thunks and loops
    that never iterate."""
    alphabet = tuple(alphabet)
    fns: list = []
    defs = []
    for i in range(rng.randint(0, 2)):
        body = _hist_expr(rng, alphabet, list(fns), depth - 1)
        defs.append((f"f{i}", body))
        fns.append(f"f{i}")
    main = _hist_expr(rng, alphabet, fns, depth)
    for name, body in reversed(defs):
        main = f"(let ({name} (lam (u unit) {body})) {main})"
    return main


def history_corpus(n: int = 60, seed: int = 0, alphabet=("a", "b", "c")) -> list:
    rng = random.Random(seed)
    return [history_program(rng, alphabet) for _ in range(n)]


# --------------------------------------------------------------------------
# λ_trace

LAMBDA_TRACE_SOURCES = (
    "(ev a)",
    "(let (x unit) x)",
    "(seq (ev a) (ev b))",
    "(if true (ev a) (ev b))",
    "(let (x (lam (y unit) (ev a))) (seq (x unit) (x unit)))",
    "(let (f (lam (u unit) (if false (ev a) (seq (ev b) (ev c))))) (seq (f unit) (ev a)))",
    "((lam (g (-> unit [a ; b] unit)) (seq (g unit) (ev c))) (lam (u unit) (seq (ev a) (ev b))))",
    "(let (e a) (seq (ev a) (ev b) (ev c)))",
    "(if (seq (ev a) true) (ev b) (seq (ev c) (ev c)))",
    "(let (h (lam (u unit) (ev b))) (if false (h unit) (seq (h unit) (h unit))))",
    "((lam (k (-> unit [a | b] unit)) (seq (k unit) (k unit))) (lam (u unit) (if true (ev a) (ev b))))",
    "(let (x (lam (y unit) unit)) (seq (x unit) (ev a) (x unit)))",
)


def lambda_trace_corpus(alphabet=("a", "b", "c")) -> list:
    return [parse_lambda_trace(src, alphabet) for src in LAMBDA_TRACE_SOURCES]


def effect_fuzz(rng: random.Random, depth: int, leaves: list, var_names=("a", "b")) -> "Effect":
    """Random effect trees over ground leaves and variables."""
    from .terms import EJoin, ESeq, EStar, EUnit, EVar
    if depth <= 0 or rng.random() < 0.25:
        k = rng.randrange(len(leaves) + len(var_names) + 1)
        if k < len(leaves):
            return leaves[k]
        if k < len(leaves) + len(var_names):
            return EVar(var_names[k - len(leaves)])
        return EUnit()
    k = rng.randrange(3)
    if k == 0:
        return ESeq(effect_fuzz(rng, depth - 1, leaves, var_names), effect_fuzz(rng, depth - 1, leaves, var_names))
    if k == 1:
        return EJoin(effect_fuzz(rng, depth - 1, leaves, var_names), effect_fuzz(rng, depth - 1, leaves, var_names))
    return EStar(effect_fuzz(rng, depth - 1, leaves, var_names))


__all__ = [
    "LAMBDA_TRACE_SOURCES", "effect_fuzz", "history_corpus", "history_program", "lambda_trace_corpus",
    "lockatom_corpus", "lockatom_program",
]
