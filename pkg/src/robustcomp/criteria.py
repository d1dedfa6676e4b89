"""Bounded, witness-producing checkers for the secure-compilation criteria.

Each property-free criterion yields a set of *obligations*: tuples of
traces or prefixes, one list per program, for which some single source
context must reproduce everything in the tuple (a fresh context may be
chosen per obligation, matching the ∀-data ∃-context shape of the
definitions).  Verdicts are three-valued: Violated needs a literally
exhausted finite context grammar or a chain-level refutation certificate;
Truncated traces force Unknown.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

from .monitors import PropertyMonitor, Verdict as MonitorVerdict, monitor_eval
from .traces import (
    INPUT_EVENTS,
    Open,
    SilentDiv,
    TracePrefix,
    Truncated,
    tini_member,
)


class Status(enum.Enum):
    HOLDS = "holds"
    VIOLATED = "violated"
    UNKNOWN = "unknown"


@dataclass
class Verdict:
    status: Status
    evidence: dict = field(default_factory=dict)
    witness: dict = field(default_factory=dict)
    bound: Optional[dict] = None
    # raw witness objects for re-execution; not serialized
    artifacts: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return {Status.HOLDS: 0, Status.VIOLATED: 1, Status.UNKNOWN: 2}[self.status]

    def to_json(self) -> dict:
        def enc(v):
            if isinstance(v, dict):
                return {k: enc(x) for k, x in v.items()}
            if isinstance(v, (list, tuple)):
                return [enc(x) for x in v]
            if isinstance(v, (str, int, float, bool)) or v is None:
                return v
            return repr(v)

        out = {"status": self.status.value}
        if self.evidence:
            out["evidence"] = enc(self.evidence)
        if self.witness:
            out["witness"] = enc(self.witness)
        if self.bound:
            out["bound"] = enc(self.bound)
        return out


def holds(**kw) -> Verdict:
    return Verdict(Status.HOLDS, evidence=kw)


def violated(_artifacts=None, **kw) -> Verdict:
    return Verdict(Status.VIOLATED, witness=kw, artifacts=_artifacts or {})


def unknown(**kw) -> Verdict:
    return Verdict(Status.UNKNOWN, evidence=kw)


@dataclass(frozen=True)
class Bounds:
    ctx_size: int = 3
    input_len: int = 2
    budget: int = 1000
    pool: int = 50  # cap on enumerated contexts per side

    def to_json(self):
        return {
            "ctx_size": self.ctx_size,
            "input_len": self.input_len,
            "budget": self.budget,
            "pool": self.pool,
        }


@dataclass(frozen=True)
class CriterionId:
    kind: str
    k: Optional[int] = None

    def __str__(self):
        return self.kind if self.k is None else f"{self.kind}({self.k})"


KNOWN_CRITERIA = (
    "pf-rtp", "pf-rsp", "pf-rdp", "pf-rhp", "pf-rschp", "pf-rhsp",
    "pf-r2rtp", "pf-r2rsp", "pf-rkrsp", "pf-rfrxp", "pf-rrhp",
    "rtep", "rtinip",
)


def parse_criterion(text: str) -> CriterionId:
    if "(" in text:
        kind, rest = text.split("(", 1)
        return CriterionId(kind.strip(), int(rest.rstrip(") ")))
    return CriterionId(text.strip())


@dataclass
class Chain:
    """A pluggable compilation chain.

    Behavior functions map (program, context, bounds) to the bounded
    behavior set; enumerators yield contexts deterministically, small
    first.  The backtranslator, when present, takes (criterion, programs,
    target context, obligation) and returns a candidate source context,
    which is always re-verified by replay.  `refute` is the chain-level
    completeness certificate: it may prove that no source context in the
    declared grammar can fulfil an obligation.
    """

    name: str
    compile: Callable
    source_behaviors: Callable  # (P, C, Bounds) -> frozenset[TracePrefix]
    target_behaviors: Callable
    src_ctx_enum: Callable[[Bounds], Iterable]
    tgt_ctx_enum: Callable[[Bounds], Iterable]
    src_linkable: Optional[Callable] = None
    tgt_linkable: Optional[Callable] = None
    src_enum_complete: bool = False
    backtranslator: Optional[Callable] = None
    refute: Optional[Callable] = None
    describe_ctx: Callable = repr

    def __post_init__(self):
        if self.src_linkable is None:
            self.src_linkable = lambda p, c: True
        if self.tgt_linkable is None:
            self.tgt_linkable = lambda p, c: True


def _truncated(traces: Iterable[TracePrefix]) -> bool:
    return any(isinstance(t.end, Truncated) for t in traces)


# ---------------------------------------------------------------- robust satisfaction

def robustly_satisfies(
    chain: Chain,
    side: str,
    program,
    monitor: PropertyMonitor,
    bounds: Bounds,
) -> Verdict:
    """Does the program satisfy the monitored property in every enumerated
    context?  The first monitor rejection wins; truncation without a
    rejection degrades Holds to Unknown."""
    enum = chain.src_ctx_enum if side == "source" else chain.tgt_ctx_enum
    behav = chain.source_behaviors if side == "source" else chain.target_behaviors
    linkable = chain.src_linkable if side == "source" else chain.tgt_linkable
    subject = program if side == "source" else chain.compile(program)
    saw_unknown = False
    count = 0
    for ctx in itertools.islice(enum(bounds), bounds.pool):
        if not linkable(subject, ctx):
            continue
        count += 1
        for t in sorted(behav(subject, ctx, bounds), key=repr):
            v = monitor_eval(monitor, t)
            if v is MonitorVerdict.REJECT:
                return violated(
                    _artifacts={"subject": subject, "context": ctx, "trace": t},
                    context=chain.describe_ctx(ctx),
                    trace=repr(t),
                    side=side,
                )
            if v is not MonitorVerdict.ACCEPT or isinstance(t.end, Truncated):
                saw_unknown = True
    if saw_unknown:
        return unknown(contexts_checked=count, side=side)
    return holds(contexts_checked=count, side=side)


# ---------------------------------------------------------------- obligation machinery

def _produces(behavior: frozenset[TracePrefix], wanted: TracePrefix) -> bool:
    """A trace set witnesses `wanted`: complete traces literally, open
    prefixes as a prefix of some member."""
    if isinstance(wanted.end, Open):
        return any(t.events[: len(wanted.events)] == wanted.events for t in behavior)
    return any(
        t.events == wanted.events and type(t.end) is type(wanted.end)
        for t in behavior
    )


Obligation = tuple[tuple[TracePrefix, ...], ...]  # one trace tuple per program


class _SourceSearch:
    """Enumerated source contexts with memoized behaviors."""

    def __init__(self, chain: Chain, programs: Sequence, bounds: Bounds):
        self.chain = chain
        self.programs = list(programs)
        self.bounds = bounds
        pulled = list(itertools.islice(chain.src_ctx_enum(bounds), bounds.pool + 1))
        self.overflow = len(pulled) > bounds.pool
        self.contexts = pulled[: bounds.pool]
        self.exhausted = chain.src_enum_complete and not self.overflow
        self._cache: dict[tuple[int, int], frozenset[TracePrefix]] = {}

    def behaviors(self, prog_idx: int, ctx_idx: int) -> frozenset[TracePrefix]:
        key = (prog_idx, ctx_idx)
        if key not in self._cache:
            self._cache[key] = self.chain.source_behaviors(
                self.programs[prog_idx], self.contexts[ctx_idx], self.bounds
            )
        return self._cache[key]

    def fulfil(self, obligation: Obligation):
        """First context reproducing every wanted trace per program."""
        for ci, ctx in enumerate(self.contexts):
            if not all(self.chain.src_linkable(p, ctx) for p in self.programs):
                continue
            ok = True
            for pi in range(len(self.programs)):
                b = self.behaviors(pi, ci)
                if not all(_produces(b, w) for w in obligation[pi]):
                    ok = False
                    break
            if ok:
                return ctx
        return None


def _obligations(
    kind: str, k: Optional[int], behaviors: list[frozenset[TracePrefix]]
) -> list[Obligation]:
    def prefixes(b):
        # finite prefixes: all open cuts, plus terminated traces themselves
        out = {p for t in b for p in t.open_prefixes()}
        out |= {t for t in b if t.is_terminating()}
        return sorted(out, key=repr)

    def complete(b):
        return sorted((t for t in b if t.is_complete()), key=repr)

    def traces(b):
        return sorted(b, key=repr)

    if kind == "pf-rtp":
        return [((t,),) for t in complete(behaviors[0])]
    if kind == "pf-rsp":
        return [((m,),) for m in prefixes(behaviors[0])]
    if kind == "pf-rdp":
        return [((t,),) for t in behaviors[0] if isinstance(t.end, SilentDiv)]
    if kind == "pf-rschp":
        return [(tuple(complete(behaviors[0])),)]
    if kind == "pf-rhsp":
        kk = k or 2
        pfx = prefixes(behaviors[0])
        return [((tuple(o)),)  # noqa: B905 - tuple of prefixes as the single-program slot
                for o in itertools.combinations(pfx, min(kk, len(pfx)))]
    if kind == "pf-r2rtp":
        return [
            ((t1,), (t2,))
            for t1 in complete(behaviors[0])
            for t2 in complete(behaviors[1])
        ]
    if kind == "pf-r2rsp":
        return [
            ((m1,), (m2,))
            for m1 in prefixes(behaviors[0])
            for m2 in prefixes(behaviors[1])
        ]
    if kind in ("pf-rkrsp", "pf-rfrxp"):
        per = [prefixes(b) if kind == "pf-rkrsp" else traces(b) for b in behaviors]
        return [tuple((x,) for x in combo) for combo in itertools.product(*per)]
    raise ValueError(f"unsupported criterion {kind}")


def check_criterion(
    chain: Chain,
    criterion: CriterionId,
    programs: Sequence,
    target_ctx=None,
    bounds: Bounds = Bounds(),
) -> Verdict:
    kind = criterion.kind
    if kind in ("pf-rtp", "pf-rsp", "pf-rdp", "pf-rhp", "pf-rschp", "pf-rhsp"):
        if len(programs) != 1:
            raise ValueError(f"{kind} takes exactly one program")
    if kind in ("pf-r2rtp", "pf-r2rsp", "rtep") and len(programs) != 2:
        raise ValueError(f"{kind} takes exactly two programs")
    if kind in ("pf-rkrsp", "pf-rfrxp") and criterion.k not in (None, len(programs)):
        raise ValueError("arity mismatch between criterion and programs")
    if kind not in KNOWN_CRITERIA:
        raise ValueError(f"unknown criterion {kind}")

    if kind == "rtep":
        return _check_rtep(chain, programs, bounds)
    if kind == "rtinip":
        return _check_rtinip(chain, programs, bounds)
    if target_ctx is None:
        raise ValueError(f"{kind} needs a target context")
    if kind in ("pf-rhp", "pf-rrhp"):
        return _check_behavior_equality(chain, kind, programs, target_ctx, bounds)

    behaviors = [
        chain.target_behaviors(chain.compile(p), target_ctx, bounds) for p in programs
    ]
    if any(_truncated(b) for b in behaviors):
        return unknown(reason="target behavior truncated at bound", bound=bounds.to_json())

    obligations = _obligations(kind, criterion.k, behaviors)
    has_open = any(isinstance(t.end, Open) for b in behaviors for t in b)
    if kind == "pf-rdp" and not obligations:
        return unknown(
            reason="no silently-divergent target trace at bound; bounded data "
            "cannot establish dense preservation"
        )

    search = _SourceSearch(chain, programs, bounds)
    fulfilled = []
    for ob in obligations:
        ctx = None
        if chain.backtranslator is not None:
            candidate = chain.backtranslator(criterion, programs, target_ctx, ob, bounds)
            if candidate is not None:
                ok = all(
                    _produces(chain.source_behaviors(p, candidate, bounds), w)
                    for p, slot in zip(programs, ob)
                    for w in slot
                )
                if ok:
                    ctx = candidate
        if ctx is None:
            ctx = search.fulfil(ob)
        if ctx is None:
            detail = {
                "obligation": [[repr(w) for w in slot] for slot in ob],
                "target_context": chain.describe_ctx(target_ctx),
            }
            if chain.refute is not None and chain.refute(criterion, programs, ob):
                return violated(reason="source context space refuted", **detail)
            if search.exhausted:
                return violated(reason="source context grammar exhausted", **detail)
            return unknown(reason="source search inconclusive", **detail)
        fulfilled.append((ob, ctx))
    sample = [
        {
            "obligation": [[repr(w) for w in slot] for slot in ob],
            "source_context": chain.describe_ctx(ctx),
        }
        for ob, ctx in fulfilled[:3]
    ]
    if kind == "pf-rdp":
        # non-terminating traces are unbounded objects: reproducing every
        # divergence witness seen at this bound never amounts to Holds
        return unknown(
            reason="all divergence witnesses reproduced; dense preservation "
            "is not decidable from bounded data",
            obligations=len(fulfilled),
            sample=sample,
        )
    if has_open and kind in ("pf-rtp", "pf-r2rtp", "pf-rschp"):
        return unknown(
            reason="target produced a certified-infinite trace; whole-trace "
            "reproduction is not decidable at this bound",
            obligations=len(fulfilled),
            sample=sample,
        )
    return holds(obligations=len(fulfilled), sample=sample)


def _check_behavior_equality(
    chain: Chain, kind: str, programs, target_ctx, bounds: Bounds
) -> Verdict:
    """pf-rhp (one program) and pf-rrhp (a pool): one source context whose
    bounded behavior equals the target's, per program."""
    target_b = [
        chain.target_behaviors(chain.compile(p), target_ctx, bounds) for p in programs
    ]
    if any(_truncated(b) for b in target_b):
        return unknown(reason="target behavior truncated at bound")

    def equal_for(ctx) -> bool:
        for p, tb in zip(programs, target_b):
            if chain.source_behaviors(p, ctx, bounds) != tb:
                return False
        return True

    if chain.backtranslator is not None:
        candidate = chain.backtranslator(
            CriterionId(kind), programs, target_ctx, None, bounds
        )
        if candidate is not None and equal_for(candidate):
            return holds(source_context=chain.describe_ctx(candidate))
    search = _SourceSearch(chain, programs, bounds)
    for ctx in search.contexts:
        if all(chain.src_linkable(p, ctx) for p in programs) and equal_for(ctx):
            return holds(source_context=chain.describe_ctx(ctx))
    if search.exhausted:
        return violated(target_context=chain.describe_ctx(target_ctx))
    return unknown(reason="source search inconclusive")


def _check_rtep(chain: Chain, programs, bounds: Bounds) -> Verdict:
    """Behavior-equality preservation for a program pair (the relational
    hyperproperty instantiated with equality of bounded behaviors)."""
    p1, p2 = programs
    for ctx in itertools.islice(chain.src_ctx_enum(bounds), bounds.pool):
        if not (chain.src_linkable(p1, ctx) and chain.src_linkable(p2, ctx)):
            continue
        b1 = chain.source_behaviors(p1, ctx, bounds)
        b2 = chain.source_behaviors(p2, ctx, bounds)
        if _truncated(b1) or _truncated(b2):
            return unknown(reason="source behavior truncated at bound")
        if b1 != b2:
            return holds(
                reason="premise fails: programs distinguishable in source",
                source_context=chain.describe_ctx(ctx),
            )
    c1, c2 = chain.compile(p1), chain.compile(p2)
    for ctx in itertools.islice(chain.tgt_ctx_enum(bounds), bounds.pool):
        if not (chain.tgt_linkable(c1, ctx) and chain.tgt_linkable(c2, ctx)):
            continue
        b1 = chain.target_behaviors(c1, ctx, bounds)
        b2 = chain.target_behaviors(c2, ctx, bounds)
        if _truncated(b1) or _truncated(b2):
            return unknown(reason="target behavior truncated at bound")
        if b1 != b2:
            return violated(
                _artifacts={"context": ctx, "compiled": (c1, c2), "behaviors": (b1, b2)},
                target_context=chain.describe_ctx(ctx),
                behavior_1=sorted(map(repr, b1)),
                behavior_2=sorted(map(repr, b2)),
            )
    return holds(reason="no distinguishing target context at bound")


def _check_rtinip(chain: Chain, programs, bounds: Bounds) -> Verdict:
    """Robust termination-insensitive noninterference preservation."""
    for program in programs:
        for ctx in itertools.islice(chain.src_ctx_enum(bounds), bounds.pool):
            if not chain.src_linkable(program, ctx):
                continue
            if not tini_member(chain.source_behaviors(program, ctx, bounds)):
                return holds(
                    reason="premise fails: source not robustly noninterferent",
                    source_context=chain.describe_ctx(ctx),
                )
        compiled = chain.compile(program)
        for ctx in itertools.islice(chain.tgt_ctx_enum(bounds), bounds.pool):
            if not chain.tgt_linkable(compiled, ctx):
                continue
            b = chain.target_behaviors(compiled, ctx, bounds)
            if _truncated(b):
                return unknown(reason="target behavior truncated at bound")
            if not tini_member(b):
                witnesses = sorted((t for t in b if t.is_terminating()), key=repr)
                return violated(
                    _artifacts={"subject": compiled, "context": ctx, "behavior": b},
                    target_context=chain.describe_ctx(ctx),
                    trace_pair=[repr(t) for t in witnesses[:4]],
                )
    return holds(programs_checked=len(programs))


# ---------------------------------------------------------------- language meta-checks

def check_determinacy(
    runner: Callable[[object, Bounds], Iterable[frozenset[TracePrefix]]],
    programs: Sequence,
    bounds: Bounds,
) -> Verdict:
    """Any two traces of one program agree or split at distinct input events."""

    def related(t1: TracePrefix, t2: TracePrefix) -> bool:
        if t1 == t2:
            return True
        n = min(len(t1.events), len(t2.events))
        for i in range(n):
            a, b = t1.events[i], t2.events[i]
            if a != b:
                return isinstance(a, INPUT_EVENTS) and isinstance(b, INPUT_EVENTS)
        if len(t1.events) == len(t2.events):
            # same events, different ends: only truncation may explain it
            return isinstance(t1.end, Truncated) or isinstance(t2.end, Truncated)
        longer, shorter = (t1, t2) if len(t1.events) > len(t2.events) else (t2, t1)
        if isinstance(shorter.end, Truncated):
            return True
        return isinstance(longer.events[n], INPUT_EVENTS)

    for program in programs:
        for b in runner(program, bounds):
            traces = sorted(b, key=repr)
            for i, t1 in enumerate(traces):
                for t2 in traces[i + 1:]:
                    if not related(t1, t2):
                        return violated(trace_1=repr(t1), trace_2=repr(t2))
    return holds(programs_checked=len(programs))


def check_input_totality(
    runner: Callable[[object, Bounds], Iterable[frozenset[TracePrefix]]],
    programs: Sequence,
    input_domain: Sequence[int],
    bounds: Bounds,
) -> Verdict:
    """Wherever a produced prefix ends in an input event, every domain
    substitution at that position is also produced."""
    domain = sorted(set(input_domain))
    for program in programs:
        for b in runner(program, bounds):
            produced = set()
            for t in b:
                produced.update(t.open_prefixes())
            for m in sorted(produced, key=repr):
                if not m.events or not isinstance(m.events[-1], INPUT_EVENTS):
                    continue
                kind = type(m.events[-1])
                for v in domain:
                    sub = TracePrefix(m.events[:-1] + (kind(v),), m.end)
                    if sub not in produced:
                        return violated(prefix=repr(m), missing=repr(sub))
    return holds(programs_checked=len(programs))


def safety_like_counterexample(
    behavior: frozenset[TracePrefix], depth: int
) -> Optional[tuple[tuple, str]]:
    """Safety-like semantics at desk scale: every complete trace over the
    behavior's own event alphabet that is NOT produced must be refuted by
    a produced prefix whose one-step extension along the trace is not
    produced.  Returns a counterexample (events, ending) or None."""
    alphabet = sorted({e for t in behavior for e in t.events}, key=repr)
    produced_prefixes = {t.events[:i] for t in behavior for i in range(len(t.events) + 1)}
    complete = {(t.events, type(t.end).__name__) for t in behavior if t.is_complete()}

    for n in range(depth + 1):
        for seq in itertools.product(alphabet, repeat=n):
            for endname in ("Terminated", "SilentDiv"):
                if (seq, endname) in complete:
                    continue
                refuted = False
                for i in range(len(seq) + 1):
                    if seq[:i] not in produced_prefixes:
                        break
                    if i < len(seq):
                        if seq[: i + 1] not in produced_prefixes:
                            refuted = True
                            break
                    else:
                        # all events produced, only this ending is not: the
                        # ending itself is the unproducible final step
                        refuted = True
                if not refuted:
                    return seq, endname
    return None
