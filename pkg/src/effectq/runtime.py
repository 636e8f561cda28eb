"""Labeled small-step semantics ``σ,e →^γ σ′,e′``, fuel-bounded runs, the
safety monitor and the interpretation checker.

Primitive behaviour comes from an ``Instantiation``.  Its semantics report
the dynamic effect of each primitive step on their own, independently of the
δ table used for typing, so a mistyped table can be caught at run time.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Optional

from .checker import Language, TypingError, infer, spine, type_equiv
from .effects import EffectSignature, ground_value
from .quantale import LawReport, leq
from .terms import (FALSE, TRUE, UNIT_V, App, BoolLit, If, Lam, Prim, Term, TyApp, TyLam, Type, Var,
                    While, is_type, is_value, seq_term, show_term, subst_term, subst_type_in_term)


@dataclass(frozen=True)
class PrimResult:
    value: Term
    effect: Any
    state: Any
    sigma_ext: Mapping = field(default_factory=dict)


@dataclass(frozen=True)
class Instantiation:
    """Everything a run needs besides the program.

    ``semantics(p, args, state)`` returns a ``PrimResult`` or ``None`` when
    no rule applies.  ``interpret(effect, pre, post)`` decides membership of
    a state pair in the interpretation of a ground effect.
    """

    name: str
    lang: Language
    initial_state: Callable[[], Any]
    semantics: Callable[[str, tuple, Any], Optional[PrimResult]]
    state_typing: Callable[[Any, Mapping], bool] = lambda s, sigma: True
    interpret: Optional[Callable[[Any, Any, Any], bool]] = None
    show_state: Callable[[Any], str] = str
    sample_state: Optional[Callable[[random.Random], Any]] = None
    between: Optional[Callable[[Any, Any], list]] = None

    @property
    def sig(self) -> EffectSignature:
        return self.lang.effects

    def with_delta(self, delta: Mapping) -> "Instantiation":
        import dataclasses
        return dataclasses.replace(self, lang=self.lang.with_delta(delta))


class Stuck(Exception):
    pass


class PrimFailure(Exception):
    pass


@dataclass(frozen=True)
class Step:
    term: Term
    label: Any
    state: Any
    sigma: Mapping
    rule: str


def _is_value(inst: Instantiation, t: Term) -> bool:
    return is_value(t, inst.lang.arity)


def step(inst: Instantiation, state, sigma: Mapping, t: Term) -> Step:
    """One leftmost reduction; raises ``Stuck`` or ``PrimFailure``."""
    unit = inst.sig.unit
    head, args = spine(t)
    if isinstance(head, Prim) and args:
        n = inst.lang.arity_of(head.name)
        if len(args) >= n > 0:
            saturated, rest = args[:n], args[n:]
            for i, a in enumerate(saturated):
                if not is_type(a) and not _is_value(inst, a):
                    s = step(inst, state, sigma, a)
                    new_args = list(args)
                    new_args[i] = s.term
                    return Step(_respine(head, new_args), s.label, s.state, s.sigma, s.rule)
            res = inst.semantics(head.name, tuple(saturated), state)
            if res is None:
                raise PrimFailure(f"no rule for {show_term(_respine(head, saturated))}")
            new_sigma = dict(sigma)
            new_sigma.update(res.sigma_ext)
            return Step(_respine(res.value, rest), res.effect, res.state, new_sigma, "E-PrimApp")
    match t:
        case App(f, a):
            if not _is_value(inst, f):
                s = step(inst, state, sigma, f)
                return Step(App(s.term, a), s.label, s.state, s.sigma, s.rule)
            if not _is_value(inst, a):
                s = step(inst, state, sigma, a)
                return Step(App(f, s.term), s.label, s.state, s.sigma, s.rule)
            if isinstance(f, Lam):
                return Step(subst_term(f.body, f.var, a), unit, state, sigma, "E-App")
            raise Stuck(f"cannot apply {show_term(f)}")
        case TyApp(f, ty):
            if not _is_value(inst, f):
                s = step(inst, state, sigma, f)
                return Step(TyApp(s.term, ty), s.label, s.state, s.sigma, s.rule)
            if isinstance(f, TyLam):
                return Step(subst_type_in_term(f.body, f.var, ty), unit, state, sigma, "E-TyApp")
            raise Stuck(f"cannot instantiate {show_term(f)}")
        case If(c, a, b):
            if not _is_value(inst, c):
                s = step(inst, state, sigma, c)
                return Step(If(s.term, a, b), s.label, s.state, s.sigma, s.rule)
            match c:
                case BoolLit(True):
                    return Step(a, unit, state, sigma, "E-IfTrue")
                case BoolLit(False):
                    return Step(b, unit, state, sigma, "E-IfFalse")
            raise Stuck(f"non-boolean condition {show_term(c)}")
        case While(c, b):
            return Step(If(c, seq_term(b, t), UNIT_V), unit, state, sigma, "E-While")
    raise Stuck(f"no rule for {show_term(t)}")


def _respine(head: Term, args) -> Term:
    for a in args:
        head = TyApp(head, a) if is_type(a) else App(head, a)
    return head


# --------------------------------------------------------------------------
# Runs


VALUE, OUT_OF_FUEL, STUCK, PRIM_ERROR, FOLD_UNDEFINED = (
    "Value", "OutOfFuel", "Stuck", "PrimError", "FoldUndefined")
DEFAULT_FUEL = 10_000


@dataclass
class RunRecord:
    status: str
    term: Term
    accumulated: Any
    labels: list
    rules: list
    states: Optional[list]
    sigma: Mapping
    error: Optional[str] = None

    @property
    def steps(self) -> int:
        return len(self.labels)

    @property
    def final_state(self):
        return self.states[-1] if self.states else None


def run(inst: Instantiation, program: Term, fuel: int = DEFAULT_FUEL, keep_states: bool = True,
        on_step: Optional[Callable] = None, start: Optional[tuple] = None) -> RunRecord:
    """Iterates ``step`` up to ``fuel`` times, folding labels with ▷.

    ``start`` is an optional ``(state, sigma_extension)`` to begin from
    instead of the instantiation's initial state.
    """
    q = inst.sig.quantale
    state, sigma = inst.initial_state(), dict(inst.lang.delta)
    if start is not None:
        state = start[0]
        sigma.update(start[1])
    t, acc = program, q.unit
    labels, rules = [], []
    states = [state] if keep_states else None
    last_state = state
    status, error = VALUE, None
    for _ in range(fuel + 1):
        if _is_value(inst, t):
            status = VALUE
            break
        if len(labels) >= fuel:
            status = OUT_OF_FUEL
            break
        try:
            s = step(inst, state, sigma, t)
        except Stuck as exc:
            status, error = STUCK, str(exc)
            break
        except PrimFailure as exc:
            status, error = PRIM_ERROR, str(exc)
            break
        labels.append(s.label)
        rules.append(s.rule)
        nxt = q.seq(acc, s.label)
        if on_step is not None:
            on_step(len(labels) - 1, s, t)
        t, state, sigma = s.term, s.state, s.sigma
        last_state = state
        if states is not None:
            states.append(state)
        if nxt is None:
            status, error = FOLD_UNDEFINED, f"accumulated effect undefined after step {len(labels) - 1}"
            break
        acc = nxt
    rec = RunRecord(status, t, acc, labels, rules, states, sigma, error)
    if states is None:
        rec.states = [last_state]
    return rec


# --------------------------------------------------------------------------
# Verdicts


@dataclass(frozen=True)
class Verdict:
    ok: bool
    step: Optional[int] = None
    detail: str = ""
    dynamic: Any = None
    static: Any = None

    def __str__(self) -> str:
        return "pass" if self.ok else f"violation@{self.step}"


PASS = Verdict(True)
NOT_APPLICABLE = "n/a"


@dataclass
class MonitorResult:
    record: RunRecord
    static_type: Type
    static_effect: Any
    safety: Verdict
    interpretation: Any
    audit: Optional[Verdict] = None

    def to_json(self, show: Callable) -> dict:
        return {
            "status": self.record.status,
            "steps": self.record.steps,
            "dynamic_effect": show(self.record.accumulated),
            "static_effect": show(self.static_effect),
            "safety": str(self.safety),
            "interpretation": str(self.interpretation),
        }

    def dumps(self, show: Callable) -> str:
        return json.dumps(self.to_json(show), ensure_ascii=False, sort_keys=True)


def static_ground(inst: Instantiation, program: Term, sigma: Optional[Mapping] = None):
    res = infer(inst.lang, program, sigma=sigma)
    g = ground_value(inst.sig, res.effect)
    return res, g


def monitor_safety(inst: Instantiation, program: Term, fuel: int = DEFAULT_FUEL,
                   semantics_from: Optional[Instantiation] = None, audit: bool = False,
                   start: Optional[tuple] = None) -> MonitorResult:
    """Typechecks ``program`` under ``inst``'s δ, runs it, and checks that the
    dynamic effect stays within the static one.

    ``semantics_from`` supplies the dynamic behaviour when it should differ
    from ``inst`` (used to run a deliberately mistyped table).
    """
    dyn = semantics_from or inst
    sigma0 = dict(inst.lang.delta)
    if start is not None:
        sigma0.update(start[1])
    res, static = static_ground(inst, program, sigma0)
    q = inst.sig.quantale
    runner = Instantiation(dyn.name, inst.lang, dyn.initial_state, dyn.semantics, dyn.state_typing,
                           dyn.interpret, dyn.show_state, dyn.sample_state, dyn.between)
    audit_verdict = [PASS]
    if audit:
        prev = {"type": res.type, "effect": static}

        def on_step(i, s, before):
            if not audit_verdict[0].ok:
                return
            try:
                r2 = infer(inst.lang, s.term, sigma=s.sigma)
            except TypingError as exc:
                audit_verdict[0] = Verdict(False, i, f"residual ill-typed: {exc}")
                return
            g2 = ground_value(inst.sig, r2.effect)
            if g2 is None:
                audit_verdict[0] = Verdict(False, i, "residual effect does not collapse")
                return
            if not type_equiv(inst.lang, r2.type, prev["type"]):
                audit_verdict[0] = Verdict(False, i, "type changed")
                return
            combined = q.seq(s.label, g2)
            if combined is None or not leq(q, combined, prev["effect"]):
                audit_verdict[0] = Verdict(False, i, "label ▷ residual exceeds previous effect",
                                           combined, prev["effect"])
                return
            prev["type"], prev["effect"] = r2.type, g2
        rec = run(runner, program, fuel, on_step=on_step, start=start)
    else:
        rec = run(runner, program, fuel, start=start)
    safety = _safety(inst, rec, static)
    interp = check_interpretation(dyn, rec) if dyn.interpret is not None else NOT_APPLICABLE
    return MonitorResult(rec, res.type, static, safety, interp, audit_verdict[0] if audit else None)


def _safety(inst: Instantiation, rec: RunRecord, static) -> Verdict:
    q = inst.sig.quantale
    k = rec.steps
    if static is None:
        return Verdict(False, 0, "static effect does not collapse to a ground element")
    match rec.status:
        case "Value":
            if leq(q, rec.accumulated, static):
                return PASS
            return Verdict(False, k - 1 if k else 0, "dynamic effect exceeds static effect",
                           rec.accumulated, static)
        case "OutOfFuel":
            try:
                r2 = infer(inst.lang, rec.term, sigma=rec.sigma)
            except TypingError as exc:
                return Verdict(False, k, f"residual ill-typed: {exc}")
            g = ground_value(inst.sig, r2.effect)
            total = q.seq(rec.accumulated, g) if g is not None else None
            if total is not None and leq(q, total, static):
                return PASS
            return Verdict(False, k, "prefix inconsistent with static effect", total, static)
    return Verdict(False, k, f"{rec.status}: {rec.error}", rec.accumulated, static)


def check_interpretation(inst: Instantiation, rec: RunRecord) -> Verdict:
    """Every step's state pair lies in the interpretation of its label, and
    so does the end-to-end pair for the accumulated effect."""
    if inst.interpret is None:
        raise ValueError(f"{inst.name} has no interpretation")
    states = rec.states
    if states is None or len(states) != len(rec.labels) + 1:
        raise ValueError("run was recorded without state snapshots")
    for i, label in enumerate(rec.labels):
        if not inst.interpret(label, states[i], states[i + 1]):
            return Verdict(False, i, "step outside the interpretation of its label", label)
    if not inst.interpret(rec.accumulated, states[0], states[-1]):
        return Verdict(False, len(rec.labels), "run outside the interpretation of its effect",
                       rec.accumulated)
    return PASS


def check_interpretation_laws(inst: Instantiation, samples: int = 200, seed: int = 0,
                              pairs_per_sample: int = 8) -> LawReport:
    """ℐ(I) contains the diagonal, ℐ(x▷y) is relational composition and
    ℐ(x⊔y) is union, by membership queries on sampled state pairs."""
    q = inst.sig.quantale
    rng = random.Random(seed)
    report = LawReport(f"interpretation:{inst.name}", mode=f"sampled(n={samples}, seed={seed})")
    for _ in range(samples):
        x = q.sample(rng)
        y = q.grow(rng, x) if q.grow is not None and rng.random() < 0.5 else q.sample(rng)
        xy, jxy = q.seq(x, y), q.join(x, y)
        for _ in range(pairs_per_sample):
            s = inst.sample_state(rng)
            t = inst.sample_state(rng) if rng.random() < 0.5 else _related(inst, rng, s)
            report.record("unit_diagonal", inst.interpret(q.unit, s, s), (q.unit,))
            if xy is not None:
                lhs = inst.interpret(xy, s, t)
                rhs = any(inst.interpret(x, s, m) and inst.interpret(y, m, t) for m in inst.between(s, t))
                report.record("seq_is_composition", lhs == rhs, (x, y), lhs, rhs)
            if jxy is not None:
                lhs = inst.interpret(jxy, s, t)
                rhs = inst.interpret(x, s, t) or inst.interpret(y, s, t)
                report.record("join_is_union", lhs == rhs, (x, y), lhs, rhs)
                report.record("join_within_union", rhs or not lhs, (x, y), lhs, rhs)
    return report


def _related(inst: Instantiation, rng: random.Random, s):
    mids = inst.between(s, None)
    return rng.choice(mids) if mids else s


__all__ = [
    "DEFAULT_FUEL", "Instantiation", "MonitorResult", "PrimFailure", "PrimResult", "RunRecord", "Step",
    "Stuck", "Verdict", "check_interpretation", "check_interpretation_laws", "monitor_safety", "run",
    "static_ground", "step",
]
