"""The while-language and its fuel transformer.

Programs are closed statements; the fueled variant pairs the same program
with a step budget carried by the context.  The machine is event-driven:
one chargeable step either emits one output event or terminates, so fuel n
yields exactly the first n events (control-flow moves are administrative;
the accounting convention is recorded in demo reports).

Contexts carry no information in the plain language (unit); a fueled
context is exactly the fuel value.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from ..criteria import Bounds, Chain, CriterionId
from ..traces import (
    DIV,
    OPEN,
    TERM,
    Event,
    OutEv,
    TracePrefix,
    Truncated,
)


@dataclass(frozen=True)
class Skip:
    pass


@dataclass(frozen=True)
class Output:
    n: int


@dataclass(frozen=True)
class Seq:
    first: "Stmt"
    second: "Stmt"


@dataclass(frozen=True)
class IfB:
    cond: bool
    then: "Stmt"
    els: "Stmt"


@dataclass(frozen=True)
class WhileTrue:
    body: "Stmt"


Stmt = Union[Skip, Output, Seq, IfB, WhileTrue]


def _admin_step(s: Stmt):
    """One transition: (event-or-None, next-stmt-or-None)."""
    match s:
        case Skip():
            return None, None
        case Output(n):
            return OutEv(Fraction(n)), None
        case Seq(a, b):
            ev, a2 = _admin_step(a)
            return ev, (b if a2 is None else Seq(a2, b))
        case IfB(c, t, e):
            return None, (t if c else e)
        case WhileTrue(body):
            return None, Seq(body, WhileTrue(body))
    raise ValueError(f"unknown statement {s!r}")


def _next_event(s: Optional[Stmt]):
    """Run administrative moves to the next output: ('event', ev, s'),
    ('done',), or ('silent_div',)."""
    seen = set()
    cur = s
    while True:
        if cur is None:
            return ("done",)
        if cur in seen:
            return ("silent_div",)
        seen.add(cur)
        ev, cur = _admin_step(cur)
        if ev is not None:
            return ("event", ev, cur)


@dataclass(frozen=True)
class FuelRun:
    trace: TracePrefix
    proven_infinite: bool = False
    period: Optional[tuple[Event, ...]] = None


def run_stmt(program: Stmt, fuel: Optional[int], max_events: int) -> FuelRun:
    """Fueled runs stop with the termination marker when fuel is exhausted
    (or when a silent loop would drain the remaining fuel).  Unfueled runs
    certify productive infinite loops by configuration repetition at event
    boundaries and report the bounded trace with an Open end."""
    events: list[Event] = []
    cur: Optional[Stmt] = program
    boundary_seen: dict[Stmt, int] = {program: 0}
    certified = False
    period: Optional[tuple[Event, ...]] = None
    period_start = 0
    while True:
        if fuel is not None and len(events) >= fuel:
            return FuelRun(TracePrefix(tuple(events), TERM))
        if len(events) >= max_events:
            if certified:
                return FuelRun(TracePrefix(tuple(events), OPEN), True, period)
            return FuelRun(TracePrefix(tuple(events), Truncated(max_events)))
        outcome = _next_event(cur)
        if outcome[0] == "done":
            return FuelRun(TracePrefix(tuple(events), TERM))
        if outcome[0] == "silent_div":
            if fuel is not None:
                return FuelRun(TracePrefix(tuple(events), TERM))
            return FuelRun(TracePrefix(tuple(events), DIV))
        _, ev, cur = outcome
        events.append(ev)
        if fuel is None and not certified and cur is not None:
            if cur in boundary_seen:
                certified = True
                period_start = boundary_seen[cur]
                period = tuple(events[period_start:])
            else:
                boundary_seen[cur] = len(events)


# ---------------------------------------------------------------- chains

UNIT_CTX = ()


def _plain_behaviors(program: Stmt, ctx, bounds: Bounds):
    del ctx
    return frozenset({run_stmt(program, None, bounds.budget).trace})


def _fueled_behaviors(program: Stmt, fuel: int, bounds: Bounds):
    return frozenset({run_stmt(program, fuel, bounds.budget).trace})


def fuel_rsp_chain() -> Chain:
    """Source is the fueled language, target the plain one; compilation
    erases the fuel.  Safety prefixes back-translate to their length."""

    def backtranslator(criterion: CriterionId, programs, target_ctx, obligation, bounds):
        if criterion.kind not in ("pf-rsp", "pf-rtp") or obligation is None:
            return None
        wanted = obligation[0]
        if len(wanted) != 1:
            return None
        m = wanted[0]
        return len(m.events)

    return Chain(
        name="fuel-rsp",
        compile=lambda p: p,
        source_behaviors=_fueled_behaviors,
        target_behaviors=_plain_behaviors,
        src_ctx_enum=lambda bounds: range(bounds.pool),
        tgt_ctx_enum=lambda bounds: [UNIT_CTX],
        src_enum_complete=False,  # fuel ranges over all naturals
        backtranslator=backtranslator,
        describe_ctx=lambda c: f"fuel {c}" if isinstance(c, int) else "unit",
    )


def fuel_rdp_chain() -> Chain:
    """Source is the plain language, target the fueled one; the compiler is
    the identity and the unit source context is the whole grammar."""
    return Chain(
        name="fuel-rdp",
        compile=lambda p: p,
        source_behaviors=_plain_behaviors,
        target_behaviors=_fueled_behaviors,
        src_ctx_enum=lambda bounds: [UNIT_CTX],
        tgt_ctx_enum=lambda bounds: range(bounds.pool),
        src_enum_complete=True,  # unit is the entire context grammar
        describe_ctx=lambda c: f"fuel {c}" if isinstance(c, int) else "unit",
    )


LOOP_41 = WhileTrue(Output(41))
LOOP_42 = WhileTrue(Output(42))
SILENT_LOOP = WhileTrue(Skip())
FINITE_PROGRAM = Seq(Output(1), Seq(Output(2), Output(3)))
