"""Deterministic small-step evaluation for both languages.

One engine serves the typed source and the dynamic target; `dynamic`
selects the target's fail rules (ill-typed operations abort with the
failure action) and the Check primitive.  Evaluation is left-to-right,
call-by-value, substitution-based.

Silent divergence is certified by configuration-cycle detection: a repeat
of the same configuration during a label-free stretch, up to a uniform
growth of the pending-return spine and call stack, implies the machine
repeats that stretch forever.  Budget exhaustion without a certificate
yields the Truncated mark.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence, Union

from .syntax import (
    BinOp,
    BoolLit,
    Call,
    Check,
    Expr,
    Fail,
    Geq,
    If,
    Let,
    Num,
    Read,
    Ret,
    SrcProgram,
    TgtProgram,
    Ty,
    Var,
    Write,
    is_value,
    subst,
    to_value,
)
from .traces import (
    DIV,
    TERM,
    CallEv,
    Event,
    FailAct,
    ReadEv,
    RetEv,
    TracePrefix,
    Truncated,
    Value,
    VBool,
    VNat,
    WriteEv,
)
from .typecheck import TgtWhole, Whole

#: silent steps before cycle detection starts paying attention
_CYCLE_WATCH_AFTER = 16

#: expressions deeper than this are never watched for cycles: repeating
#: configurations reappear shortly after watching starts (the pending-return
#: spine grows by a few nodes per iteration), while accumulator-style
#: divergence grows without repeating and must simply survive to the budget
_CYCLE_WATCH_DEPTH = 160


@dataclass(frozen=True)
class RunResult:
    trace: TracePrefix
    final_value: Optional[Value] = None
    failed: bool = False
    stuck: bool = False
    input_exhausted: bool = False
    steps: int = 0

    @property
    def diverged(self) -> bool:
        return self.trace.end == DIV


# ---------------------------------------------------------------- decomposition

def _decompose(e: Expr):
    """Walk to the redex, collecting rebuild frames (outermost first).
    Returns (frames, redex) or (None, None) when e is a value."""
    frames = []
    while True:
        match e:
            case Num(_) | BoolLit(_):
                return (frames, None) if frames else (None, None)
            case BinOp(op, l, r):
                # the right operand is reachable only past a numeral left
                # operand, so an ill-shaped left operand fails eagerly
                if not is_value(l):
                    frames.append(("binop_l", op, r))
                    e = l
                elif isinstance(l, Num) and not is_value(r):
                    frames.append(("binop_r", op, l))
                    e = r
                else:
                    return frames, e
            case Geq(l, r):
                if not is_value(l):
                    frames.append(("geq_l", r))
                    e = l
                elif isinstance(l, Num) and not is_value(r):
                    frames.append(("geq_r", l))
                    e = r
                else:
                    return frames, e
            case Let(x, ty, bound, body):
                if not is_value(bound):
                    frames.append(("let", x, ty, body))
                    e = bound
                else:
                    return frames, e
            case If(c, _, _):
                if not is_value(c):
                    frames.append(("if", e))
                    e = c
                else:
                    return frames, e
            case Call(f, arg):
                if not is_value(arg):
                    frames.append(("call", f))
                    e = arg
                else:
                    return frames, e
            case Write(a):
                if not is_value(a):
                    frames.append(("write",))
                    e = a
                else:
                    return frames, e
            case Check(a, ty):
                if not is_value(a):
                    frames.append(("check", ty))
                    e = a
                else:
                    return frames, e
            case Ret(inner):
                if not is_value(inner):
                    frames.append(("ret",))
                    e = inner
                else:
                    return frames, e
            case _:
                # Var, Read, Fail: redexes (Var only in ill-formed terms)
                return frames, e


def _rebuild(frames, inner: Expr) -> Expr:
    for frame in reversed(frames):
        match frame:
            case ("binop_l", op, r):
                inner = BinOp(op, inner, r)
            case ("binop_r", op, l):
                inner = BinOp(op, l, inner)
            case ("geq_l", r):
                inner = Geq(inner, r)
            case ("geq_r", l):
                inner = Geq(l, inner)
            case ("let", x, ty, body):
                inner = Let(x, ty, inner, body)
            case ("if", orig):
                inner = If(inner, orig.then, orig.els)
            case ("call", f):
                inner = Call(f, inner)
            case ("write",):
                inner = Write(inner)
            case ("check", ty):
                inner = Check(inner, ty)
            case ("ret",):
                inner = Ret(inner)
    return inner


def _apply_op(op: str, a: int, b: int) -> int:
    if op == "+":
        return a + b
    if op == "-":
        return max(0, a - b)  # natural monus
    if op == "*":
        return a * b
    raise ValueError(f"unknown operator {op}")


# ---------------------------------------------------------------- cycle certificate

def _depth_within(e: Expr, cap: int) -> bool:
    """Iterative depth probe; False as soon as the cap is exceeded."""
    stack = [(e, 1)]
    while stack:
        x, d = stack.pop()
        if d > cap:
            return False
        nxt = d + 1
        match x:
            case BinOp(_, l, r) | Geq(l, r):
                stack.append((l, nxt))
                stack.append((r, nxt))
            case Let(_, _, bound, body):
                stack.append((bound, nxt))
                stack.append((body, nxt))
            case If(c, t, f):
                stack.append((c, nxt))
                stack.append((t, nxt))
                stack.append((f, nxt))
            case Call(_, a) | Write(a) | Check(a, _) | Ret(a):
                stack.append((a, nxt))
            case _:
                pass
    return True


def _scrub(e: Expr) -> Expr:
    """Erase pending-return wrappers for cycle bucketing."""
    match e:
        case Ret(inner):
            return _scrub(inner)
        case BinOp(op, l, r):
            return BinOp(op, _scrub(l), _scrub(r))
        case Geq(l, r):
            return Geq(_scrub(l), _scrub(r))
        case Let(x, ty, bound, body):
            return Let(x, ty, _scrub(bound), _scrub(body))
        case If(c, t, f):
            return If(_scrub(c), _scrub(t), _scrub(f))
        case Call(f, a):
            return Call(f, _scrub(a))
        case Write(a):
            return Write(_scrub(a))
        case Check(a, ty):
            return Check(_scrub(a), ty)
        case _:
            return e


def _extra_rets(e1: Expr, e2: Expr) -> Optional[int]:
    """Number of extra Ret wrappers e2 carries over e1 along one spine,
    or None when the terms differ otherwise."""
    if e1 == e2:
        return 0
    if isinstance(e1, Ret) and isinstance(e2, Ret):
        return _extra_rets(e1.inner, e2.inner)
    if isinstance(e2, Ret):
        k = _extra_rets(e1, e2.inner)
        return None if k is None else k + 1
    if type(e1) is not type(e2):
        return None
    match e1:
        case BinOp(op1, l1, r1):
            if op1 != e2.op:
                return None
            pairs = [(l1, e2.left), (r1, e2.right)]
        case Geq(l1, r1):
            pairs = [(l1, e2.left), (r1, e2.right)]
        case Let(x1, ty1, b1, body1):
            if x1 != e2.var or ty1 != e2.ty:
                return None
            pairs = [(b1, e2.bound), (body1, e2.body)]
        case If(c1, t1, f1):
            pairs = [(c1, e2.cond), (t1, e2.then), (f1, e2.els)]
        case Call(f1, a1):
            if f1 != e2.fname:
                return None
            pairs = [(a1, e2.arg)]
        case Write(a1):
            pairs = [(a1, e2.arg)]
        case Check(a1, ty1):
            if ty1 != e2.ty:
                return None
            pairs = [(a1, e2.arg)]
        case _:
            return None
    total = None
    for c1, c2 in pairs:
        if c1 == c2:
            continue
        if total is not None:
            return None  # more than one differing child
        total = _extra_rets(c1, c2)
        if total is None:
            return None
    return total


def _certified_cycle(prev_stack, prev_expr, stack, expr) -> bool:
    k = _extra_rets(prev_expr, expr)
    if k is None:
        return False
    if k == 0:
        return stack == prev_stack
    return len(stack) == len(prev_stack) + k and stack[: len(prev_stack)] == prev_stack


# ---------------------------------------------------------------- the machine

def run_machine(
    program: Union[SrcProgram, TgtProgram],
    expr: Expr,
    inputs: Sequence[int],
    budget: int,
    informative: bool = False,
    dynamic: bool = False,
) -> RunResult:
    if budget <= 0:
        raise ValueError("budget must be positive")
    stack: tuple[str, ...] = ()
    events: list[Event] = []
    supply = list(inputs)
    pos = 0
    steps = 0
    silent_steps = 0
    watch: dict = {}

    def done(end, final=None, failed=False, stuck=False, exhausted=False):
        return RunResult(
            TracePrefix(tuple(events), end),
            final_value=final,
            failed=failed,
            stuck=stuck,
            input_exhausted=exhausted,
            steps=steps,
        )

    while True:
        if is_value(expr) and not stack:
            return done(TERM, final=to_value(expr))
        if steps >= budget:
            return done(Truncated(steps))

        if silent_steps >= _CYCLE_WATCH_AFTER and _depth_within(expr, _CYCLE_WATCH_DEPTH):
            key = (not stack, _scrub(expr))
            for prev_stack, prev_expr in watch.get(key, ()):
                if _certified_cycle(prev_stack, prev_expr, stack, expr):
                    return done(DIV)
            watch.setdefault(key, []).append((stack, expr))

        frames, redex = _decompose(expr)
        if redex is None:
            # value under pending frames cannot happen: a value is only left
            # bare or under frames that _decompose treats as redex carriers
            return done(TERM, stuck=True)

        label: Optional[Event] = None
        record = True
        match redex:
            case BinOp(op, l, r):
                if is_value(l) and is_value(r):
                    lv, rv = to_value(l), to_value(r)
                    if isinstance(lv, VNat) and isinstance(rv, VNat):
                        expr = _rebuild(frames, Num(_apply_op(op, lv.n, rv.n)))
                    elif dynamic:
                        events.append(FailAct())
                        steps += 1
                        return done(TERM, failed=True)
                    else:
                        return done(TERM, stuck=True)
                elif dynamic:
                    # boolean left operand: fail before touching the right
                    events.append(FailAct())
                    steps += 1
                    return done(TERM, failed=True)
                else:
                    return done(TERM, stuck=True)
            case Geq(l, r):
                if is_value(l) and is_value(r):
                    lv, rv = to_value(l), to_value(r)
                    if isinstance(lv, VNat) and isinstance(rv, VNat):
                        expr = _rebuild(frames, BoolLit(lv.n >= rv.n))
                    elif dynamic:
                        events.append(FailAct())
                        steps += 1
                        return done(TERM, failed=True)
                    else:
                        return done(TERM, stuck=True)
                elif dynamic:
                    events.append(FailAct())
                    steps += 1
                    return done(TERM, failed=True)
                else:
                    return done(TERM, stuck=True)
            case If(c, t, f):
                cv = to_value(c)
                if isinstance(cv, VBool):
                    expr = _rebuild(frames, t if cv.b else f)
                elif dynamic:
                    events.append(FailAct())
                    steps += 1
                    return done(TERM, failed=True)
                else:
                    return done(TERM, stuck=True)
            case Let(x, _, bound, body):
                expr = _rebuild(frames, subst(body, x, bound))
            case Call(fname, arg):
                fun = program.fun(fname)
                if fun is None:
                    return done(TERM, stuck=True)
                body = subst(fun.body, fun.param, arg)
                if not stack:
                    label = CallEv(fname, to_value(arg))
                    record = informative
                stack = stack + (fname,)
                expr = _rebuild(frames, Ret(body))
            case Ret(inner):
                if not stack:
                    return done(TERM, stuck=True)
                if len(stack) == 1:
                    label = RetEv(to_value(inner))
                    record = informative
                stack = stack[:-1]
                expr = _rebuild(frames, inner)
            case Read():
                if pos >= len(supply):
                    return done(Truncated(steps), exhausted=True)
                n = supply[pos]
                pos += 1
                label = ReadEv(n)
                expr = _rebuild(frames, Num(n))
            case Write(a):
                av = to_value(a)
                if isinstance(av, VNat):
                    label = WriteEv(av.n)
                    expr = _rebuild(frames, a)
                elif dynamic:
                    events.append(FailAct())
                    steps += 1
                    return done(TERM, failed=True)
                else:
                    return done(TERM, stuck=True)
            case Check(a, ty):
                is_nat = isinstance(to_value(a), VNat)
                result = is_nat if ty is Ty.NAT else not is_nat
                expr = _rebuild(frames, BoolLit(result))
            case Fail():
                events.append(FailAct())
                steps += 1
                return done(TERM, failed=True)
            case Var(_):
                return done(TERM, stuck=True)
            case _:
                return done(TERM, stuck=True)

        steps += 1
        if label is not None:
            if record:
                events.append(label)
            silent_steps = 0
            watch.clear()
        else:
            silent_steps += 1


def run_whole(
    w: Whole, inputs: Sequence[int], budget: int, informative: bool = False
) -> RunResult:
    dynamic = isinstance(w, TgtWhole)
    return run_machine(
        w.program, w.context.body, inputs, budget, informative=informative, dynamic=dynamic
    )


def behaviors_of(
    w: Whole,
    input_domain: Iterable[int],
    input_len: int,
    budget: int,
    informative: bool = False,
) -> frozenset[TracePrefix]:
    """Run outcomes over all input scripts of length ≤ input_len.

    Input-exhausted runs under shorter-than-maximal scripts are dropped:
    their outcomes are covered by the extension scripts.  Maximal-length
    exhausted runs stay (honest truncation).
    """
    import itertools

    domain = sorted(set(input_domain))
    out = set()
    for n in range(input_len + 1):
        for script in itertools.product(domain, repeat=n):
            r = run_whole(w, script, budget, informative=informative)
            if r.input_exhausted and n < input_len:
                continue
            out.add(r.trace)
    return frozenset(out)
