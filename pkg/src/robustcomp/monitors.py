"""Finite-state prefix acceptors standing in for trace properties.

A monitor runs over the events of a prefix and then classifies by the
terminal mark.  Open (and Truncated) ends get a three-valued open verdict
whose Reject must be extension-closed: once a state rejects open prefixes,
every successor state does too.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Sequence

from .traces import (
    DIV,
    OPEN,
    TERM,
    Event,
    Open,
    SilentDiv,
    Terminated,
    TerminalMark,
    TracePrefix,
    Truncated,
    event_from_json,
)


class Verdict(enum.Enum):
    ACCEPT = "accept"
    REJECT = "reject"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class PropertyMonitor:
    name: str
    states: frozenset
    start: Hashable
    step: Callable[[Hashable, Event], Hashable]
    classify: Callable[[Hashable, TerminalMark], Verdict]
    open_verdict: Callable[[Hashable], Verdict]

    def run(self, events: Iterable[Event]) -> Hashable:
        s = self.start
        for e in events:
            s = self.step(s, e)
        return s

    def successors(self, state, alphabet: Sequence[Event]) -> set:
        return {self.step(state, e) for e in alphabet}

    def check_reject_extension_closed(self, alphabet: Sequence[Event]) -> bool:
        """Graph reachability: open-Reject states only reach open-Reject states."""
        for s in self.states:
            if self.open_verdict(s) is not Verdict.REJECT:
                continue
            seen, frontier = {s}, [s]
            while frontier:
                cur = frontier.pop()
                for nxt in self.successors(cur, alphabet):
                    if nxt not in seen:
                        if self.open_verdict(nxt) is not Verdict.REJECT:
                            return False
                        seen.add(nxt)
                        frontier.append(nxt)
        return True


def monitor_eval(m: PropertyMonitor, p: TracePrefix) -> Verdict:
    """Run the monitor over the events, then classify by the end mark."""
    state = m.run(p.events)
    if isinstance(p.end, (Open, Truncated)):
        return m.open_verdict(state)
    return m.classify(state, p.end)


# ---------------------------------------------------------------- built-ins

def never_event(e: Event) -> PropertyMonitor:
    """The bad event never occurs (a safety property)."""

    def step(s, ev):
        return "bad" if ev == e or s == "bad" else "clean"

    def classify(s, end):
        return Verdict.REJECT if s == "bad" else Verdict.ACCEPT

    def open_verdict(s):
        return Verdict.REJECT if s == "bad" else Verdict.UNKNOWN

    return PropertyMonitor(
        name=f"never[{e!r}]",
        states=frozenset({"clean", "bad"}),
        start="clean",
        step=step,
        classify=classify,
        open_verdict=open_verdict,
    )


def eventually_on_term(e: Event) -> PropertyMonitor:
    """Every terminating trace contains the event (safety in this model)."""

    def step(s, ev):
        return "seen" if ev == e or s == "seen" else "waiting"

    def classify(s, end):
        if s == "seen":
            return Verdict.ACCEPT
        return Verdict.REJECT if isinstance(end, Terminated) else Verdict.ACCEPT

    return PropertyMonitor(
        name=f"eventually-on-term[{e!r}]",
        states=frozenset({"waiting", "seen"}),
        start="waiting",
        step=step,
        classify=classify,
        open_verdict=lambda s: Verdict.UNKNOWN,
    )


def accept_all() -> PropertyMonitor:
    return PropertyMonitor(
        name="accept-all",
        states=frozenset({"s"}),
        start="s",
        step=lambda s, ev: s,
        classify=lambda s, end: Verdict.ACCEPT,
        open_verdict=lambda s: Verdict.UNKNOWN,
    )


def terminating_only() -> PropertyMonitor:
    """Exactly the terminating traces (the minimal dense property)."""
    return PropertyMonitor(
        name="terminating-only",
        states=frozenset({"s"}),
        start="s",
        step=lambda s, ev: s,
        classify=lambda s, end: Verdict.ACCEPT if isinstance(end, Terminated) else Verdict.REJECT,
        open_verdict=lambda s: Verdict.UNKNOWN,
    )


def only_infinite_repeat(e: Event) -> PropertyMonitor:
    """The singleton property containing only the infinite trace e·e·e·…

    Acceptance needs an infinite trace, so at desk scale every complete trace
    is rejected; an all-e open prefix stays Unknown, anything else rejects.
    """

    def step(s, ev):
        return "allgood" if ev == e and s == "allgood" else "broken"

    def classify(s, end):
        return Verdict.REJECT

    def open_verdict(s):
        return Verdict.UNKNOWN if s == "allgood" else Verdict.REJECT

    return PropertyMonitor(
        name=f"only-infinite-repeat[{e!r}]",
        states=frozenset({"allgood", "broken"}),
        start="allgood",
        step=step,
        classify=classify,
        open_verdict=open_verdict,
    )


def monitor_from_json(spec: dict) -> PropertyMonitor:
    kind = spec.get("kind")
    if kind == "never_event":
        return never_event(event_from_json(spec["event"]))
    if kind == "eventually_on_term":
        return eventually_on_term(event_from_json(spec["event"]))
    if kind == "accept_all":
        return accept_all()
    if kind == "only_infinite_repeat":
        return only_infinite_repeat(event_from_json(spec["event"]))
    if kind == "terminating_only":
        return terminating_only()
    raise ValueError(f"unknown monitor spec: {spec!r}")


# ---------------------------------------------------------------- decomposition

def decompose(m: PropertyMonitor) -> tuple[PropertyMonitor, PropertyMonitor]:
    """Split into a safety part and a dense part with πS ∩ πD = π.

    The safety part additionally accepts all non-terminating traces, the
    dense part all terminating ones.  Neither has bad open prefixes: an open
    prefix always extends into the added class, so open verdicts are Unknown.
    """

    def classify_s(s, end):
        if isinstance(end, SilentDiv):
            return Verdict.ACCEPT
        return m.classify(s, end)

    def classify_d(s, end):
        if isinstance(end, Terminated):
            return Verdict.ACCEPT
        return m.classify(s, end)

    ms = PropertyMonitor(
        name=f"safety-part[{m.name}]",
        states=m.states,
        start=m.start,
        step=m.step,
        classify=classify_s,
        open_verdict=lambda s: Verdict.UNKNOWN,
    )
    md = PropertyMonitor(
        name=f"dense-part[{m.name}]",
        states=m.states,
        start=m.start,
        step=m.step,
        classify=classify_d,
        open_verdict=lambda s: Verdict.UNKNOWN,
    )
    return ms, md


# ---------------------------------------------------------------- bounded classification

@dataclass(frozen=True)
class ClassifyResult:
    verdict: Verdict
    witness: TracePrefix | None = None
    saturated: bool = True


def _reachable_states(m: PropertyMonitor, alphabet: Sequence[Event], depth: int):
    """States reachable within `depth` steps, plus whether exploration saturated."""
    seen = {m.start: 0}
    frontier = [m.start]
    for d in range(depth):
        nxt_frontier = []
        for s in frontier:
            for e in alphabet:
                nxt = m.step(s, e)
                if nxt not in seen:
                    seen[nxt] = d + 1
                    nxt_frontier.append(nxt)
        frontier = nxt_frontier
    saturated = not frontier or all(
        m.step(s, e) in seen for s in seen for e in alphabet
    )
    return seen, saturated


def direct_dense_check(m: PropertyMonitor, depth: int, alphabet: Sequence[Event]) -> bool:
    """Direct classification: all reachable states accept termination."""
    seen, _ = _reachable_states(m, alphabet, depth)
    return all(m.classify(s, TERM) is Verdict.ACCEPT for s in seen)


def dense_bounded_check(
    m: PropertyMonitor, depth: int, alphabet: Sequence[Event]
) -> ClassifyResult:
    """Bounded check of the dense characterization: ∀m. ∃t ≥ m. t ∈ π.

    Enumerates every finite prefix up to `depth` (open and terminated) and
    searches for an accepted terminating extension with at most one extra
    event.  Accept is only claimed when the monitor's reachable state set
    saturates within the bound.
    """
    if not alphabet:
        raise ValueError("alphabet must be nonempty")
    alphabet = list(alphabet)
    _, saturated = _reachable_states(m, alphabet, depth)
    for n in range(depth + 1):
        for seq in itertools.product(alphabet, repeat=n):
            state = m.run(seq)
            for mark in (OPEN, TERM):
                pfx = TracePrefix(seq, mark)
                if isinstance(mark, Terminated):
                    ok = m.classify(state, TERM) is Verdict.ACCEPT
                else:
                    # close the prefix, or extend it by one event and close
                    ok = m.classify(state, TERM) is Verdict.ACCEPT or any(
                        m.classify(m.step(state, e), TERM) is Verdict.ACCEPT
                        for e in alphabet
                    )
                if not ok:
                    return ClassifyResult(Verdict.REJECT, witness=pfx, saturated=saturated)
    if saturated:
        return ClassifyResult(Verdict.ACCEPT, saturated=True)
    return ClassifyResult(Verdict.UNKNOWN, saturated=False)


def safety_bounded_check(
    m: PropertyMonitor, depth: int, alphabet: Sequence[Event]
) -> ClassifyResult:
    """Bounded check that the monitored property is safety.

    Rejected terminated traces refute themselves (the terminated prefix is
    the bad prefix), so only rejected silently-divergent traces matter: on
    every path to a div-rejecting state, some state must already reject all
    complete extensions (an extension-closed bad prefix).
    """
    if not alphabet:
        raise ValueError("alphabet must be nonempty")
    alphabet = list(alphabet)
    seen, saturated = _reachable_states(m, alphabet, depth)

    def rejects_all_complete(s0) -> bool:
        stack, visited = [s0], {s0}
        while stack:
            s = stack.pop()
            if m.classify(s, TERM) is Verdict.ACCEPT or m.classify(s, DIV) is Verdict.ACCEPT:
                return False
            for e in alphabet:
                nxt = m.step(s, e)
                if nxt not in visited:
                    visited.add(nxt)
                    stack.append(nxt)
        return True

    bad_prefix = {s: rejects_all_complete(s) for s in seen}
    for n in range(depth + 1):
        for seq in itertools.product(alphabet, repeat=n):
            states = [m.start]
            for e in seq:
                states.append(m.step(states[-1], e))
            if m.classify(states[-1], DIV) is Verdict.REJECT:
                if not any(bad_prefix[s] for s in states if s in bad_prefix):
                    return ClassifyResult(
                        Verdict.REJECT, witness=TracePrefix(seq, DIV), saturated=saturated
                    )
    if saturated:
        return ClassifyResult(Verdict.ACCEPT, saturated=True)
    return ClassifyResult(Verdict.UNKNOWN, saturated=False)
