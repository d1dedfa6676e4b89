"""Both back-translations.

Context-based: the universal embedding of dynamic contexts into the typed
language, encoding booleans as 0/1 and naturals shifted by 2, with inline
inject/extract conversions at every typed position.

Trace-based: informative traces are split into a context view and program
segments, a finite set of context views is represented as a tree keyed by
call arguments and return values, and the tree is rewritten to a typed
source context that replays every represented trace (with trailing
ill-typed calls collapsed to the failure action).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

from .compiler import compile_program
from .machine import run_machine, run_whole
from .syntax import (
    BinOp,
    BoolLit,
    Call,
    Check,
    Expr,
    Fail,
    Geq,
    If,
    Iface,
    Let,
    Num,
    Read,
    Ret,
    SrcContext,
    SrcProgram,
    TgtContext,
    TgtProgram,
    Ty,
    Var,
    Write,
    is_value,
    of_value,
    to_value,
    value_has_type,
    var_names,
)
from .traces import (
    DIV,
    OPEN,
    TERM,
    CallEv,
    Event,
    FailAct,
    Open,
    ReadEv,
    RetEv,
    SilentDiv,
    Terminated,
    TracePrefix,
    Truncated,
    Value,
    VBool,
    VNat,
    is_io_event,
)
from .typecheck import link_source, link_target


# ---------------------------------------------------------------- helpers

class _Fresh:
    """Variable names x1, x2, ... avoiding a given set."""

    def __init__(self, avoid: set[str]):
        self.avoid = set(avoid)
        self.counter = 0

    def __call__(self) -> str:
        while True:
            self.counter += 1
            name = f"x{self.counter}"
            if name not in self.avoid:
                self.avoid.add(name)
                return name


def inject_expr(ty: Ty, e: Expr) -> Expr:
    if ty is Ty.NAT:
        return BinOp("+", e, Num(2))
    return If(e, Num(1), Num(0))


def extract_expr(ty: Ty, e: Expr, fresh: _Fresh) -> Expr:
    x = fresh()
    if ty is Ty.NAT:
        return Let(x, Ty.NAT, e, If(Geq(Var(x), Num(2)), BinOp("-", Var(x), Num(2)), Fail()))
    return Let(
        x,
        Ty.NAT,
        e,
        If(
            Geq(Var(x), Num(2)),
            Fail(),
            If(Geq(BinOp("+", Var(x), Num(1)), Num(2)), BoolLit(True), BoolLit(False)),
        ),
    )


def inject_extract_eval(direction: str, ty: Ty, v: Value) -> Optional[Value]:
    """Evaluate the inject/extract helper on a closed value.

    Returns the result value, or None when the evaluation fails.
    """
    fresh = _Fresh(set())
    if direction == "inject":
        e = inject_expr(ty, of_value(v))
    elif direction == "extract":
        e = extract_expr(ty, of_value(v), fresh)
    else:
        raise ValueError("direction must be 'inject' or 'extract'")
    r = run_machine(SrcProgram((), ()), e, [], 1000)
    return None if r.failed or r.final_value is None else r.final_value


# ---------------------------------------------------------------- context-based

class BacktranslateError(Exception):
    pass


def backtranslate_ctx(c: TgtContext, iface: Iface) -> SrcContext:
    """Universal embedding of a target context at the single type Nat."""
    by_name = {entry.fname: entry for entry in iface}
    fresh = _Fresh(var_names(c.body))

    def bt(e: Expr) -> Expr:
        match e:
            case Num(n):
                return Num(n + 2)
            case BoolLit(b):
                return Num(1 if b else 0)
            case Var(x):
                return Var(x)
            case BinOp(op, l, r):
                x1, x2 = fresh(), fresh()
                return Let(
                    x1,
                    Ty.NAT,
                    extract_expr(Ty.NAT, bt(l), fresh),
                    Let(
                        x2,
                        Ty.NAT,
                        extract_expr(Ty.NAT, bt(r), fresh),
                        inject_expr(Ty.NAT, BinOp(op, Var(x1), Var(x2))),
                    ),
                )
            case Geq(l, r):
                x1, x2 = fresh(), fresh()
                return Let(
                    x1,
                    Ty.NAT,
                    extract_expr(Ty.NAT, bt(l), fresh),
                    Let(
                        x2,
                        Ty.NAT,
                        extract_expr(Ty.NAT, bt(r), fresh),
                        inject_expr(Ty.BOOL, Geq(Var(x1), Var(x2))),
                    ),
                )
            case Let(x, _, bound, body):
                return Let(x, Ty.NAT, bt(bound), bt(body))
            case If(c_, t, f):
                return If(extract_expr(Ty.BOOL, bt(c_), fresh), bt(t), bt(f))
            case Check(a, ty):
                x = fresh()
                if ty is Ty.BOOL:
                    branch = If(Geq(Var(x), Num(2)), Num(0), Num(1))
                else:
                    branch = If(Geq(Var(x), Num(2)), Num(1), Num(0))
                return Let(x, Ty.NAT, bt(a), branch)
            case Call(f, a):
                entry = by_name.get(f)
                if entry is None:
                    raise BacktranslateError(f"call to {f} outside the interface")
                return inject_expr(
                    entry.ret_ty, Call(f, extract_expr(entry.arg_ty, bt(a), fresh))
                )
            case Fail():
                return Fail()
            case Read() | Write(_):
                raise BacktranslateError("contexts cannot perform I/O")
            case Ret(_):
                raise BacktranslateError("ret is runtime-only")
        raise BacktranslateError(f"unknown expression {e!r}")

    return SrcContext(bt(c.body))


# ---------------------------------------------------------------- trace views

def project(mu: TracePrefix) -> TracePrefix:
    """Erase boundary call/return events; keep I/O, the failure action,
    and the terminal mark."""
    return TracePrefix(
        tuple(e for e in mu.events if not isinstance(e, (CallEv, RetEv))), mu.end
    )


def ctx_view(mu: TracePrefix) -> TracePrefix:
    """The context-side view: in-call I/O belongs to the program and is
    dropped; boundary events, the failure action, out-of-call I/O (never
    produced by well-formed contexts) and the mark remain."""
    out: list[Event] = []
    in_call = False
    for e in mu.events:
        if isinstance(e, CallEv):
            in_call = True
            out.append(e)
        elif isinstance(e, RetEv):
            in_call = False
            out.append(e)
        elif isinstance(e, FailAct):
            out.append(e)
        elif not in_call:
            out.append(e)
    return TracePrefix(tuple(out), mu.end)


def source_variant(mu: TracePrefix, iface: Iface) -> TracePrefix:
    """μˢ: replace a trailing ill-typed call (optionally followed by the
    failure action) with the failure action alone."""
    by_name = {entry.fname: entry for entry in iface}

    def ill_typed(e: Event) -> bool:
        if not isinstance(e, CallEv):
            return False
        entry = by_name.get(e.fname)
        return entry is None or not value_has_type(e.value, entry.arg_ty)

    ev = mu.events
    if ev and ill_typed(ev[-1]):
        return TracePrefix(ev[:-1] + (FailAct(),), TERM)
    if len(ev) >= 2 and isinstance(ev[-1], FailAct) and ill_typed(ev[-2]):
        return TracePrefix(ev[:-2] + (FailAct(),), TERM)
    return mu


# ---------------------------------------------------------------- partial semantics

def _ctx_step(program, expr: Expr, dynamic: bool):
    """One partial-semantics move of a context expression.

    Returns ('value',), ('silent', e'), ('call', f, v, frames),
    ('fail',), ('io',), or ('stuck',).
    """
    from .machine import _decompose, _rebuild, _apply_op

    if is_value(expr):
        return ("value",)
    frames, redex = _decompose(expr)
    if redex is None:
        return ("stuck",)
    match redex:
        case BinOp(op, l, r):
            if is_value(l) and is_value(r):
                lv, rv = to_value(l), to_value(r)
                if isinstance(lv, VNat) and isinstance(rv, VNat):
                    return ("silent", _rebuild(frames, Num(_apply_op(op, lv.n, rv.n))))
            return ("fail",) if dynamic else ("stuck",)
        case Geq(l, r):
            if is_value(l) and is_value(r):
                lv, rv = to_value(l), to_value(r)
                if isinstance(lv, VNat) and isinstance(rv, VNat):
                    return ("silent", _rebuild(frames, BoolLit(lv.n >= rv.n)))
            return ("fail",) if dynamic else ("stuck",)
        case If(c, t, f):
            cv = to_value(c)
            if isinstance(cv, VBool):
                return ("silent", _rebuild(frames, t if cv.b else f))
            return ("fail",) if dynamic else ("stuck",)
        case Let(x, _, bound, body):
            from .syntax import subst

            return ("silent", _rebuild(frames, subst(body, x, bound)))
        case Check(a, ty):
            is_nat = isinstance(to_value(a), VNat)
            return ("silent", _rebuild(frames, BoolLit(is_nat if ty is Ty.NAT else not is_nat)))
        case Call(f, a):
            return ("call", f, to_value(a), frames)
        case Fail():
            return ("fail",)
        case Read() | Write(_):
            return ("io",)
        case _:
            return ("stuck",)


def ctx_accepts(c: Union[SrcContext, TgtContext], mu: TracePrefix, fuel: int = 100000) -> bool:
    """Replay: can the context produce μ when each call is answered by the
    next return value in μ?  μ must be context-side (no I/O events)."""
    for e in mu.events:
        if not isinstance(e, (CallEv, RetEv, FailAct)):
            return False
    dynamic = isinstance(c, TgtContext)
    from .machine import _rebuild

    expr = c.body
    events = list(mu.events)
    pos = 0
    for _ in range(fuel):
        remaining = len(events) - pos
        step = _ctx_step(None, expr, dynamic)
        kind = step[0]
        if kind == "silent":
            expr = step[1]
            continue
        if kind == "value" or kind == "stuck":
            # stopped without an event: fine for an extendable mark, and a
            # stuck/finished state is exactly termination
            if remaining:
                return False
            return isinstance(mu.end, (Open, Truncated, Terminated))
        if kind == "fail":
            if remaining == 1 and isinstance(events[pos], FailAct):
                return isinstance(mu.end, Terminated)
            if remaining == 0:
                # the failure event is not part of μ, so μ stopped earlier
                return isinstance(mu.end, (Open, Truncated))
            return False
        if kind == "io":
            return False
        if kind == "call":
            _, f, v, frames = step
            if remaining == 0:
                # μ stops before the call fires
                return isinstance(mu.end, (Open, Truncated))
            nxt = events[pos]
            if nxt != CallEv(f, v):
                return False
            pos += 1
            remaining -= 1
            if remaining == 0:
                # pending call: the abstracted program may still run,
                # diverge, or get cut; only termination is impossible
                return isinstance(mu.end, (Open, Truncated, SilentDiv))
            answer = events[pos]
            if isinstance(answer, RetEv):
                pos += 1
                expr = _rebuild(frames, of_value(answer.value))
                continue
            if isinstance(answer, FailAct):
                # the program fails inside the call, halting everything
                pos += 1
                return pos == len(events) and isinstance(mu.end, Terminated)
            return False
    raise RuntimeError("context replay exceeded its fuel")


@dataclass(frozen=True)
class _Segment:
    fname: str
    arg: Value
    inner: tuple[Event, ...]
    ret: Optional[Value]  # None: open final segment


def _segments(mu: TracePrefix) -> tuple[list[_Segment], bool]:
    """Call-delimited segments of an informative trace.  The second
    component says whether the trace ends inside the last segment."""
    segs: list[_Segment] = []
    i = 0
    ev = mu.events
    open_tail = False
    while i < len(ev):
        e = ev[i]
        if not isinstance(e, CallEv):
            i += 1
            continue
        inner: list[Event] = []
        j = i + 1
        ret = None
        while j < len(ev):
            if isinstance(ev[j], RetEv):
                ret = ev[j].value
                j += 1
                break
            inner.append(ev[j])
            j += 1
        segs.append(_Segment(e.fname, e.value, tuple(inner), ret))
        if ret is None:
            open_tail = True
        i = j
    return segs, open_tail


def prg_accepts(
    p: Union[SrcProgram, TgtProgram],
    mu: TracePrefix,
    iface: Iface,
    budget: int = 10000,
) -> bool:
    """Partial program semantics: every call-delimited segment of μ is
    reproduced by running the program on that call alone (closed segments
    exactly, up to the matching return; the final open segment must be
    producible).  Source-side checks skip ill-typed calls."""
    dynamic = isinstance(p, TgtProgram)
    by_name = {entry.fname: entry for entry in iface}
    if dynamic:
        known = set(p.iface)
    else:
        known = {entry.fname for entry in iface}
    segs, open_tail = _segments(mu)
    for idx, seg in enumerate(segs):
        if seg.fname not in known:
            continue
        entry = by_name.get(seg.fname)
        if not dynamic:
            if entry is None or not value_has_type(seg.arg, entry.arg_ty):
                continue
        reads = [e.n for e in seg.inner if isinstance(e, ReadEv)]
        r = run_machine(
            p, Call(seg.fname, of_value(seg.arg)), reads, budget,
            informative=True, dynamic=dynamic,
        )
        if seg.ret is not None:
            wanted = (CallEv(seg.fname, seg.arg),) + seg.inner + (RetEv(seg.ret),)
            if r.trace.events != wanted:
                return False
        else:
            wanted = (CallEv(seg.fname, seg.arg),) + seg.inner
            last = idx == len(segs) - 1
            if isinstance(mu.end, SilentDiv) and last:
                if r.trace.events != wanted or r.trace.end != DIV:
                    return False
            elif isinstance(mu.end, Terminated) and last:
                if r.trace.events != wanted or not isinstance(r.trace.end, Terminated):
                    return False
            else:
                if r.trace.events[: len(wanted)] != wanted:
                    return False
    return True


@dataclass(frozen=True)
class DecomposeResult:
    ctx_ok: bool
    prg_ok: bool


def decompose_trace(program: TgtProgram, context: TgtContext, mu: TracePrefix,
                    iface: Iface, budget: int = 10000) -> DecomposeResult:
    """Check both halves of the decomposition: the context accepts the
    context view of μ and the program accepts its call segments."""
    return DecomposeResult(
        ctx_ok=ctx_accepts(context, ctx_view(mu)),
        prg_ok=prg_accepts(program, mu, iface, budget=budget),
    )


# ---------------------------------------------------------------- trace trees

@dataclass(frozen=True)
class Eps:
    pass


@dataclass(frozen=True)
class TermLeaf:
    pass


@dataclass(frozen=True)
class DivLeaf:
    pass


@dataclass(frozen=True)
class FailLeaf:
    pass


@dataclass(frozen=True)
class CallNode:
    fname: str
    arg: Value
    children: tuple[tuple[Value, "TraceTree"], ...]


TraceTree = Union[Eps, TermLeaf, DivLeaf, FailLeaf, CallNode]


class TreeError(Exception):
    def __init__(self, reason: str, clash=None):
        self.reason = reason
        self.clash = clash
        super().__init__(reason if clash is None else f"{reason}: {clash!r}")


def _is_eps(mu: TracePrefix) -> bool:
    return not mu.events and isinstance(mu.end, (Open, Truncated))


def _value_sort_key(v: Value):
    return (0, v.n, False) if isinstance(v, VNat) else (1, 0, v.b)


def build_tree(traces: Iterable[TracePrefix], iface: Iface) -> TraceTree:
    """Construct the tree representing a set of context-side traces.

    Rule priority: empty, terminated, divergent, failed, ill-typed call,
    call grouped by return value.  Two nonempty traces with differing
    first events violate weak determinacy and have no tree.
    """
    by_name = {entry.fname: entry for entry in iface}
    f_set = list(traces)
    for mu in f_set:
        for e in mu.events:
            if is_io_event(e) and not isinstance(e, FailAct):
                raise TreeError("io_in_context_trace", mu)
    nonempty = [mu for mu in f_set if not _is_eps(mu)]
    if not nonempty:
        return Eps()
    if all(mu == TracePrefix((), TERM) for mu in nonempty):
        return TermLeaf()
    if all(mu == TracePrefix((), DIV) for mu in nonempty):
        return DivLeaf()
    if all(mu == TracePrefix((FailAct(),), TERM) for mu in nonempty):
        return FailLeaf()
    heads = []
    for mu in nonempty:
        if not mu.events:
            heads.append(mu.end)
        else:
            heads.append(mu.events[0])
    first = heads[0]
    for other in heads[1:]:
        if other != first:
            raise TreeError("nondeterministic_set", (first, other))
    if not isinstance(first, CallEv):
        raise TreeError("no_rule_applies", nonempty[0])
    entry = by_name.get(first.fname)
    well_typed = entry is not None and value_has_type(first.value, entry.arg_ty)
    if not well_typed:
        return FailLeaf()
    groups: dict[Value, list[TracePrefix]] = {}
    for mu in nonempty:
        rest = mu.events[1:]
        if not rest:
            if isinstance(mu.end, (Open, Truncated, SilentDiv)):
                continue  # cut call or in-call divergence, absorbed
            raise TreeError("no_rule_applies", mu)
        nxt = rest[0]
        if isinstance(nxt, RetEv):
            groups.setdefault(nxt.value, []).append(TracePrefix(rest[1:], mu.end))
        else:
            raise TreeError("no_rule_applies", mu)
    children = tuple(
        (v, build_tree(groups[v], iface))
        for v in sorted(groups, key=_value_sort_key)
    )
    return CallNode(first.fname, first.value, children)


def tree_backtranslate(t: TraceTree, iface: Iface) -> SrcContext:
    """Rewrite a trace tree into a well-typed, linkable source context.

    Return-value equality is encoded as two comparisons for naturals
    (largest child tested first, so each arm's inner mismatch falls
    through to fail) and as branch dispatch for booleans.
    """
    by_name = {entry.fname: entry for entry in iface}

    def bt(node: TraceTree) -> Expr:
        match node:
            case Eps() | FailLeaf() | DivLeaf():
                return Fail()
            case TermLeaf():
                return Num(0)
            case CallNode(fname, arg, children):
                entry = by_name.get(fname)
                if entry is None or not value_has_type(arg, entry.arg_ty):
                    return Fail()
                x = "x"
                if entry.ret_ty is Ty.BOOL:
                    arms = {v.b: sub for v, sub in children}
                    dispatch = If(
                        Var(x),
                        bt(arms[True]) if True in arms else Fail(),
                        bt(arms[False]) if False in arms else Fail(),
                    )
                else:
                    dispatch = Fail()
                    for v, sub in sorted(children, key=lambda kv: kv[0].n):
                        dispatch = If(
                            Geq(Var(x), Num(v.n)),
                            If(Geq(Num(v.n), Var(x)), bt(sub), Fail()),
                            dispatch,
                        )
                return Let(x, entry.ret_ty, Call(fname, of_value(arg)), dispatch)
        raise TreeError("unknown_tree_node", node)

    return SrcContext(bt(t))


def tree_traces(t: TraceTree) -> list[TracePrefix]:
    """Every context-side trace extracted from a tree (cuts included).

    A bare divergence leaf extracts nothing beyond the empty cut: contexts
    cannot diverge by themselves, so the divergent extraction exists only
    inside a call (the CallNode cl;↻ case)."""
    out = [TracePrefix((), OPEN)]
    match t:
        case Eps() | DivLeaf():
            pass
        case TermLeaf():
            out.append(TracePrefix((), TERM))
        case FailLeaf():
            out.append(TracePrefix((FailAct(),), TERM))
        case CallNode(fname, arg, children):
            head = CallEv(fname, arg)
            out.append(TracePrefix((head,), OPEN))
            out.append(TracePrefix((head,), DIV))
            for v, sub in children:
                for tail in tree_traces(sub):
                    out.append(TracePrefix((head, RetEv(v)) + tail.events, tail.end))
    return out


# ---------------------------------------------------------------- pipeline

@dataclass
class StageRecord:
    name: str
    ok: bool
    detail: str = ""


@dataclass
class ProgramOutcome:
    mu: TracePrefix
    mu_source: TracePrefix
    wanted: TracePrefix
    produced: Optional[TracePrefix]
    ok: bool


@dataclass
class RfrxcReport:
    passed: bool
    stages: list[StageRecord] = field(default_factory=list)
    context: Optional[SrcContext] = None
    tree: Optional[TraceTree] = None
    outcomes: list[ProgramOutcome] = field(default_factory=list)

    def stage(self, name: str, ok: bool, detail: str = ""):
        self.stages.append(StageRecord(name, ok, detail))
        if not ok:
            self.passed = False
        return ok


def reproduces(produced: TracePrefix, wanted: TracePrefix) -> bool:
    """Does a produced trace witness the wanted prefix?  Extendable targets
    need only be passed through; complete ones must match exactly."""
    if isinstance(wanted.end, (Open, Truncated)):
        return produced.events[: len(wanted.events)] == wanted.events
    return produced.events == wanted.events and type(produced.end) is type(wanted.end)


def verify_rfrxc(
    programs: Sequence[SrcProgram],
    target_ctx: TgtContext,
    inputs: Sequence[int],
    budget: int,
) -> RfrxcReport:
    """The whole trace-based pipeline, run as computation: informative runs
    of the compiled programs, decomposition checks, backward-correctness
    checks against the source programs, tree construction from the context
    views, tree back-translation, and replay of every projected source
    variant under the synthesized context."""
    report = RfrxcReport(passed=True)
    if not programs:
        report.stage("programs", False, "need at least one program")
        return report
    iface = programs[0].iface
    if any(p.iface != iface for p in programs):
        report.stage("shared_interface", False, "programs disagree on the interface")
        return report
    report.stage("shared_interface", True)

    compiled = []
    mus: list[TracePrefix] = []
    try:
        for p in programs:
            cp = compile_program(p)
            compiled.append(cp)
            whole = link_target(cp, target_ctx)
            mus.append(run_whole(whole, inputs, budget, informative=True).trace)
    except Exception as exc:  # noqa: BLE001 - reported, not raised
        report.stage("compile_link_run", False, str(exc))
        return report
    report.stage("compile_link_run", True)

    dec_ok = True
    for cp, mu in zip(compiled, mus):
        d = decompose_trace(cp, target_ctx, mu, iface, budget=budget)
        dec_ok = dec_ok and d.ctx_ok and d.prg_ok
    report.stage("decomposition", dec_ok)

    bcc_ok = all(prg_accepts(p, mu, iface, budget=budget) for p, mu in zip(programs, mus))
    report.stage("backward_compiler_correctness", bcc_ok)

    try:
        tree = build_tree([ctx_view(mu) for mu in mus], iface)
    except TreeError as exc:
        report.stage("tree", False, str(exc))
        return report
    report.tree = tree
    report.stage("tree", True)

    c_s = tree_backtranslate(tree, iface)
    report.context = c_s
    try:
        wholes = [link_source(p, c_s) for p in programs]
    except Exception as exc:  # noqa: BLE001
        report.stage("linkable", False, str(exc))
        return report
    report.stage("linkable", True)

    replay_ok = True
    for p, whole, mu in zip(programs, wholes, mus):
        mu_s = source_variant(mu, iface)
        wanted = project(mu_s)
        produced = run_whole(whole, inputs, budget).trace
        ok = reproduces(produced, wanted)
        replay_ok = replay_ok and ok
        report.outcomes.append(ProgramOutcome(mu, mu_s, wanted, produced, ok))
    report.stage("replay", replay_ok)
    return report
