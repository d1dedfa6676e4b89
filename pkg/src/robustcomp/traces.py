"""Event-based trace model: events, terminal marks, prefixes, behaviors.

Traces are finite event lists closed by a terminal mark.  Open and Truncated
ends may still be extended; Terminated and SilentDiv may not.  Truncated is a
checker artifact (bound exhaustion), not part of the trace model proper;
every checker maps it to Unknown, never to Accept/Reject.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Optional, Union


# ---------------------------------------------------------------- values

@dataclass(frozen=True)
class VNat:
    n: int

    def __repr__(self):
        return str(self.n)


@dataclass(frozen=True)
class VBool:
    b: bool

    def __repr__(self):
        return "true" if self.b else "false"


Value = Union[VNat, VBool]


def value_to_json(v: Value) -> dict:
    if isinstance(v, VNat):
        return {"nat": v.n}
    return {"bool": v.b}


def value_from_json(d: dict) -> Value:
    if "nat" in d:
        return VNat(int(d["nat"]))
    if "bool" in d:
        return VBool(bool(d["bool"]))
    raise ValueError(f"not a value object: {d!r}")


# ---------------------------------------------------------------- events

@dataclass(frozen=True)
class ReadEv:
    n: int

    def __repr__(self):
        return f"rd {self.n}"


@dataclass(frozen=True)
class WriteEv:
    n: int

    def __repr__(self):
        return f"wr {self.n}"


@dataclass(frozen=True)
class PubIn:
    n: int

    def __repr__(self):
        return f"pubin {self.n}"


@dataclass(frozen=True)
class PubOut:
    n: int

    def __repr__(self):
        return f"pubout {self.n}"


@dataclass(frozen=True)
class PrivIn:
    n: int

    def __repr__(self):
        return f"privin {self.n}"


@dataclass(frozen=True)
class OutEv:
    q: Fraction

    def __repr__(self):
        return f"out {self.q}"


@dataclass(frozen=True)
class CallEv:
    fname: str
    value: Value

    def __repr__(self):
        return f"cl({self.fname},{self.value!r})"


@dataclass(frozen=True)
class RetEv:
    value: Value

    def __repr__(self):
        return f"rt({self.value!r})"


@dataclass(frozen=True)
class FailAct:
    def __repr__(self):
        return "failact"


Event = Union[ReadEv, WriteEv, PubIn, PubOut, PrivIn, OutEv, CallEv, RetEv, FailAct]

#: events crossing the context/program boundary; they appear only in
#: informative traces and are erased by projection
BOUNDARY_EVENTS = (CallEv, RetEv)

#: environment-input events, the only nondeterminism source (determinacy)
INPUT_EVENTS = (ReadEv, PubIn, PrivIn)


def is_io_event(e: Event) -> bool:
    return not isinstance(e, BOUNDARY_EVENTS)


# ---------------------------------------------------------------- terminal marks

@dataclass(frozen=True)
class Open:
    def __repr__(self):
        return "∘"


@dataclass(frozen=True)
class Terminated:
    eps: Optional[Value] = None

    def __repr__(self):
        return "⊙" if self.eps is None else f"⊙{self.eps!r}"


@dataclass(frozen=True)
class SilentDiv:
    def __repr__(self):
        return "↻"


@dataclass(frozen=True)
class Truncated:
    steps: int

    def __repr__(self):
        return f"✂{self.steps}"


TerminalMark = Union[Open, Terminated, SilentDiv, Truncated]

OPEN = Open()
TERM = Terminated()
DIV = SilentDiv()


# ---------------------------------------------------------------- prefixes

@dataclass(frozen=True)
class TracePrefix:
    events: tuple[Event, ...]
    end: TerminalMark

    def __repr__(self):
        inner = ", ".join(repr(e) for e in self.events)
        return f"[{inner}]{self.end!r}"

    def is_finpref(self) -> bool:
        return isinstance(self.end, (Open, Terminated))

    def is_xpref(self) -> bool:
        return isinstance(self.end, (Open, Terminated, SilentDiv))

    def is_complete(self) -> bool:
        """Complete at desk scale: cannot or will not be extended here."""
        return not isinstance(self.end, Open)

    def is_terminating(self) -> bool:
        return isinstance(self.end, Terminated)

    def open_prefixes(self) -> Iterator["TracePrefix"]:
        for i in range(len(self.events) + 1):
            yield TracePrefix(self.events[:i], OPEN)


def prefix(events: Iterable[Event] = (), end: TerminalMark = OPEN) -> TracePrefix:
    return TracePrefix(tuple(events), end)


def trace(events: Iterable[Event] = (), end: TerminalMark = TERM) -> TracePrefix:
    return TracePrefix(tuple(events), end)


def prefix_leq(m: TracePrefix, t: TracePrefix) -> bool:
    """The prefix relation m ≤ t.

    Inductively: a terminated prefix only prefixes the identical terminated
    trace; an open prefix prefixes anything extending its events.  Truncated
    ends on t are treated as extendable (like Open) for checker purposes.
    """
    if not m.is_finpref():
        raise ValueError(f"m must be a FinPref, got end {m.end!r}")
    if len(m.events) > len(t.events):
        return False
    if m.events != t.events[: len(m.events)]:
        return False
    if isinstance(m.end, Open):
        return True
    # m terminated: must match t exactly, including the termination payload
    return len(m.events) == len(t.events) and m.end == t.end


# ---------------------------------------------------------------- behaviors

def behavior(traces: Iterable[TracePrefix]) -> frozenset[TracePrefix]:
    """Deduplicated set of complete-at-bound traces."""
    b = frozenset(traces)
    for t in b:
        if isinstance(t.end, Open):
            raise ValueError(f"behaviors contain no open prefixes: {t!r}")
    return b


def observation(prefixes: Iterable[TracePrefix]) -> frozenset[TracePrefix]:
    """A finite set of finite trace prefixes (the refuting evidence for hypersafety)."""
    o = frozenset(prefixes)
    for m in o:
        if not m.is_finpref():
            raise ValueError(f"observations contain only FinPrefs: {m!r}")
    return o


def obs_leq(o: frozenset[TracePrefix], b: frozenset[TracePrefix]) -> bool:
    """o ≤ b: every prefix in o is a prefix of some trace in b."""
    return all(any(prefix_leq(m, t) for t in b) for m in o)


def pub_inputs(t: TracePrefix) -> tuple[Event, ...]:
    return tuple(e for e in t.events if isinstance(e, PubIn))


def pub_events(t: TracePrefix) -> tuple[Event, ...]:
    return tuple(e for e in t.events if isinstance(e, (PubIn, PubOut)))


def tini_member(b: frozenset[TracePrefix]) -> bool:
    """Termination-insensitive noninterference membership of a behavior.

    Terminating traces that agree on their public-input subsequences must
    agree on all public events (inputs and outputs).
    """
    terminating = [t for t in b if t.is_terminating()]
    for t1 in terminating:
        for t2 in terminating:
            if pub_inputs(t1) == pub_inputs(t2) and pub_events(t1) != pub_events(t2):
                return False
    return True


# ---------------------------------------------------------------- JSON lines

def event_to_json(e: Event) -> dict:
    match e:
        case ReadEv(n):
            return {"ev": "rd", "n": n}
        case WriteEv(n):
            return {"ev": "wr", "n": n}
        case PubIn(n):
            return {"ev": "pubin", "n": n}
        case PubOut(n):
            return {"ev": "pubout", "n": n}
        case PrivIn(n):
            return {"ev": "privin", "n": n}
        case OutEv(q):
            return {"ev": "out", "q": str(q)}
        case CallEv(f, v):
            return {"ev": "call", "f": f, "v": value_to_json(v)}
        case RetEv(v):
            return {"ev": "ret", "v": value_to_json(v)}
        case FailAct():
            return {"ev": "failact"}
    raise ValueError(f"unknown event {e!r}")


def event_from_json(d: dict) -> Event:
    kind = d.get("ev")
    if kind == "rd":
        return ReadEv(int(d["n"]))
    if kind == "wr":
        return WriteEv(int(d["n"]))
    if kind == "pubin":
        return PubIn(int(d["n"]))
    if kind == "pubout":
        return PubOut(int(d["n"]))
    if kind == "privin":
        return PrivIn(int(d["n"]))
    if kind == "out":
        return OutEv(Fraction(d["q"]))
    if kind == "call":
        return CallEv(d["f"], value_from_json(d["v"]))
    if kind == "ret":
        return RetEv(value_from_json(d["v"]))
    if kind == "failact":
        return FailAct()
    raise ValueError(f"unknown event object: {d!r}")


def mark_to_json(end: TerminalMark) -> dict:
    match end:
        case Open():
            return {"end": "open"}
        case Terminated(None):
            return {"end": "term"}
        case Terminated(eps):
            return {"end": "term", "eps": value_to_json(eps)}
        case SilentDiv():
            return {"end": "div"}
        case Truncated(steps):
            return {"end": "trunc", "steps": steps}
    raise ValueError(f"unknown mark {end!r}")


def mark_from_json(d: dict) -> TerminalMark:
    kind = d.get("end")
    if kind == "open":
        return OPEN
    if kind == "term":
        eps = d.get("eps")
        return Terminated(value_from_json(eps) if eps is not None else None)
    if kind == "div":
        return DIV
    if kind == "trunc":
        return Truncated(int(d["steps"]))
    raise ValueError(f"unknown terminal object: {d!r}")


def trace_to_jsonl(t: TracePrefix) -> str:
    """One event object per line, final line the terminal mark."""
    lines = [json.dumps(event_to_json(e)) for e in t.events]
    lines.append(json.dumps(mark_to_json(t.end)))
    return "\n".join(lines) + "\n"


def trace_from_jsonl(text: str) -> TracePrefix:
    rows = [json.loads(line) for line in text.splitlines() if line.strip()]
    if not rows or "end" not in rows[-1]:
        raise ValueError("trace must close with a terminal-mark line")
    events = tuple(event_from_json(r) for r in rows[:-1])
    return TracePrefix(events, mark_from_json(rows[-1]))
