"""The single-function mini-language separating behavior-equivalence
preservation from safety and dense preservation.

A program is one function over a natural or boolean argument; a context is
one call with a literal.  Traces carry exactly one result event, or mark
silent divergence.  The compiler encodes booleans as 0/1 and wraps
boolean-argument programs so that argument 2 re-enters the function
forever and arguments 3 and above yield 42.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from ..criteria import Bounds, Chain
from ..traces import DIV, TERM, OutEv, TracePrefix, VBool, VNat, Value


@dataclass(frozen=True)
class ENum:
    n: int


@dataclass(frozen=True)
class IfVar:
    then: "RtepExpr"
    els: "RtepExpr"


@dataclass(frozen=True)
class IfLt:
    bound: int
    then: "RtepExpr"
    els: "RtepExpr"


@dataclass(frozen=True)
class SelfCall:
    arg: "RtepExpr"


RtepExpr = Union[ENum, IfVar, IfLt, SelfCall]


@dataclass(frozen=True)
class RtepProgram:
    arg_is_bool: bool
    body: RtepExpr


@dataclass(frozen=True)
class RtepCtx:
    arg: Value  # VNat or VBool


def linkable(p: RtepProgram, c: RtepCtx) -> bool:
    return p.arg_is_bool == isinstance(c.arg, VBool)


class _Diverges(Exception):
    pass


def _eval(p: RtepProgram, x: Value, entered: frozenset) -> int:
    def ev(e: RtepExpr) -> int:
        match e:
            case ENum(n):
                return n
            case IfVar(t, f):
                assert isinstance(x, VBool), "IfVar needs a boolean argument"
                return ev(t) if x.b else ev(f)
            case IfLt(bound, t, f):
                assert isinstance(x, VNat), "IfLt needs a natural argument"
                return ev(t) if x.n < bound else ev(f)
            case SelfCall(arg):
                # expressions evaluate to naturals, so boolean-argument
                # programs cannot call themselves
                assert not p.arg_is_bool, "self-call in a boolean-argument program"
                v = VNat(ev(arg))
                if v in entered:
                    raise _Diverges()  # re-entry with a repeated argument
                return _eval(p, v, entered | {v})
        raise ValueError(f"unknown expression {e!r}")

    return ev(p.body)


def run(p: RtepProgram, c: RtepCtx) -> TracePrefix:
    try:
        result = _eval(p, c.arg, frozenset({c.arg}))
    except _Diverges:
        return TracePrefix((), DIV)
    return TracePrefix((OutEv(Fraction(result)),), TERM)


# ---------------------------------------------------------------- compiler

def compile_expr(e: RtepExpr) -> RtepExpr:
    match e:
        case ENum(n):
            return ENum(n)
        case IfVar(t, f):
            return IfLt(1, compile_expr(t), compile_expr(f))
        case IfLt(b, t, f):
            return IfLt(b, compile_expr(t), compile_expr(f))
        case SelfCall(a):
            return SelfCall(compile_expr(a))
    raise ValueError(f"unknown expression {e!r}")


def compile_program(p: RtepProgram) -> RtepProgram:
    body = compile_expr(p.body)
    if p.arg_is_bool:
        body = IfLt(2, body, IfLt(3, SelfCall(ENum(2)), ENum(42)))
    return RtepProgram(False, body)


def compile_ctx(c: RtepCtx) -> RtepCtx:
    if isinstance(c.arg, VBool):
        return RtepCtx(VNat(0 if c.arg.b else 1))
    return RtepCtx(c.arg)


# ---------------------------------------------------------------- chain

def _src_behaviors(p: RtepProgram, c: RtepCtx, bounds: Bounds):
    return frozenset({run(p, c)})


def rtep_chain(max_nat: int = 5) -> Chain:
    def src_enum(bounds: Bounds):
        yield RtepCtx(VBool(True))
        yield RtepCtx(VBool(False))
        for n in range(min(max_nat, bounds.pool) + 1):
            yield RtepCtx(VNat(n))

    def tgt_enum(bounds: Bounds):
        for n in range(min(max_nat, bounds.pool) + 1):
            yield RtepCtx(VNat(n))

    return Chain(
        name="rtep",
        compile=compile_program,
        source_behaviors=_src_behaviors,
        target_behaviors=_src_behaviors,
        src_ctx_enum=src_enum,
        tgt_ctx_enum=tgt_enum,
        src_linkable=linkable,
        tgt_linkable=linkable,
        src_enum_complete=False,  # natural arguments are unbounded
        describe_ctx=lambda c: f"f({c.arg!r})",
    )


#: the canonical counterexample program: constantly 1 over a boolean argument
CONST_ONE_BOOL = RtepProgram(True, ENum(1))
