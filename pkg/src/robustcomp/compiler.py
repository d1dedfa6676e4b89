"""Type-erasing compiler from the typed language to the dynamic one.

Structural translation; the only inserted code is one dynamic argument
check at each function entry, guarding the compiled body with a failure
branch.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

from .machine import run_whole
from .syntax import (
    BinOp,
    BoolLit,
    Call,
    Check,
    Expr,
    Fail,
    Fun,
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
    Var,
    Write,
)
from .traces import Truncated
from .typecheck import link_source, link_target, typecheck_context, typecheck_program


class CheckVerdict(enum.Enum):
    ACCEPT = "accept"
    REJECT = "reject"
    UNKNOWN = "unknown"


def compile_expr(e: Expr) -> Expr:
    match e:
        case Var(_) | Num(_) | BoolLit(_) | Read() | Fail():
            return e
        case BinOp(op, l, r):
            return BinOp(op, compile_expr(l), compile_expr(r))
        case Geq(l, r):
            return Geq(compile_expr(l), compile_expr(r))
        case Let(x, _, bound, body):
            return Let(x, None, compile_expr(bound), compile_expr(body))
        case If(c, t, f):
            return If(compile_expr(c), compile_expr(t), compile_expr(f))
        case Call(f, a):
            return Call(f, compile_expr(a))
        case Write(a):
            return Write(compile_expr(a))
        case Ret(inner):
            return Ret(compile_expr(inner))
    raise ValueError(f"not a source expression: {e!r}")


def compile_fun(f: Fun) -> Fun:
    guarded = If(Check(Var(f.param), f.arg_ty), compile_expr(f.body), Fail())
    return Fun(f.fname, f.param, None, None, guarded)


def compile_program(p: SrcProgram) -> TgtProgram:
    typecheck_program(p)
    return TgtProgram(
        iface=tuple(i.fname for i in p.iface),
        funs=tuple(compile_fun(f) for f in p.funs),
    )


def compile_context(c: SrcContext, iface: Iface) -> TgtContext:
    typecheck_context(c, iface)
    return TgtContext(compile_expr(c.body))


@dataclass(frozen=True)
class CorrectnessReport:
    verdict: CheckVerdict
    source_trace: object
    target_trace: object


def check_correctness(
    p: SrcProgram, c: SrcContext, inputs: Sequence[int], budget: int
) -> CorrectnessReport:
    """Run C[P] and ⦇C⦈[⦇P⦈] on the same inputs and compare traces."""
    src = run_whole(link_source(p, c), inputs, budget)
    tgt = run_whole(
        link_target(compile_program(p), compile_context(c, p.iface)), inputs, budget
    )
    if isinstance(src.trace.end, Truncated) or isinstance(tgt.trace.end, Truncated):
        return CorrectnessReport(CheckVerdict.UNKNOWN, src.trace, tgt.trace)
    verdict = CheckVerdict.ACCEPT if src.trace == tgt.trace else CheckVerdict.REJECT
    return CorrectnessReport(verdict, src.trace, tgt.trace)
