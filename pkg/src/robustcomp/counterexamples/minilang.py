"""The straight-line integer mini-language family.

Three program shapes over context-supplied functions:

* noninterference: one private input, one public output of f()
* introspection: no input, public write-back of f()
* K-hypersafety: one input in 1..K+1, one rational output of the switch

Source contexts are capability-free constant tables.  Target contexts may
additionally read the program's private input or branch on an opaque
program-identity token assigned at link time (code reading); both
compilers are the identity on programs.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

from ..criteria import Bounds, Chain, CriterionId
from ..traces import (
    TERM,
    OutEv,
    PrivIn,
    PubOut,
    ReadEv,
    TracePrefix,
)


@dataclass(frozen=True)
class MiniProgram:
    shape: str  # "tini" | "introspect" | "khs"
    pid: int = 0  # identity token, assigned at link time
    k: int = 0  # arity of the hypersafety switch
    dead_code: int = 0  # syntactic delta that no source context can see


@dataclass(frozen=True)
class ConstFn:
    """Capability-free context: every f_j is a constant."""

    values: tuple[Fraction, ...]


@dataclass(frozen=True)
class ReadPrivateFn:
    """Target capability: f() returns the program's private input."""


@dataclass(frozen=True)
class CodeReadFn:
    """Target capability: f() branches on the program identity token."""

    by_pid: tuple[tuple[int, int], ...]  # (pid, value) pairs
    default: int = 0

    def lookup(self, pid: int) -> int:
        for p, v in self.by_pid:
            if p == pid:
                return v
        return self.default


@dataclass(frozen=True)
class PrivTableFn:
    """Target capability (hypersafety): each f_j may branch on the input."""

    tables: tuple[tuple[tuple[int, Fraction], ...], ...]

    def value(self, j: int, x: int) -> Fraction:
        for a, v in self.tables[j]:
            if a == x:
                return v
        return Fraction(0)


MiniContext = Union[ConstFn, ReadPrivateFn, CodeReadFn, PrivTableFn]


def _fn_value(ctx: MiniContext, j: int, x: Optional[int], pid: int) -> Fraction:
    match ctx:
        case ConstFn(values):
            return values[j] if j < len(values) else Fraction(0)
        case ReadPrivateFn():
            return Fraction(x if x is not None else 0)
        case CodeReadFn():
            return Fraction(ctx.lookup(pid))
        case PrivTableFn():
            return ctx.value(j, x if x is not None else 0)
    raise ValueError(f"unknown context {ctx!r}")


def run_mini(p: MiniProgram, ctx: MiniContext, inp: Optional[int]) -> TracePrefix:
    if p.shape == "tini":
        x = inp if inp is not None else 0
        y = _fn_value(ctx, 0, x, p.pid)
        return TracePrefix((PrivIn(x), PubOut(int(y))), TERM)
    if p.shape == "introspect":
        y = _fn_value(ctx, 0, None, p.pid)
        return TracePrefix((OutEv(y),), TERM)
    if p.shape == "khs":
        x = inp if inp is not None else 1
        if not 1 <= x <= p.k + 1:
            raise ValueError(f"input {x} outside 1..{p.k + 1}")
        if x <= p.k:
            y = x + sum(
                _fn_value(ctx, j, x, p.pid) for j in range(p.k) if j != x - 1
            )
        else:
            y = 2 + sum(_fn_value(ctx, j, x, p.pid) for j in range(p.k))
        return TracePrefix((ReadEv(x), OutEv(Fraction(y))), TERM)
    raise ValueError(f"unknown shape {p.shape}")


def mini_behaviors(p: MiniProgram, ctx: MiniContext, domain: Sequence[int]):
    if p.shape == "introspect":
        return frozenset({run_mini(p, ctx, None)})
    return frozenset(run_mini(p, ctx, i) for i in domain)


# ---------------------------------------------------------------- chains

def _const_enum(width: int, lo: int = 0, hi: int = 10):
    def enum(bounds: Bounds):
        for c in range(lo, hi + 1):
            yield ConstFn(tuple(Fraction(c) for _ in range(width)))

    return enum


def _demanded_outputs(obligation) -> list[Fraction]:
    """The output values an obligation forces (one per slot that shows an
    output event)."""
    out = []
    for slot in obligation:
        for wanted in slot:
            for e in wanted.events:
                if isinstance(e, (OutEv,)):
                    out.append(Fraction(e.q))
                elif isinstance(e, PubOut):
                    out.append(Fraction(e.n))
    return out


def _const_refute(criterion: CriterionId, programs, obligation) -> bool:
    """Constant contexts hand every program the same values, so the
    write-back shapes force pointwise-equal outputs: demanding two
    different outputs refutes the whole constant-context grammar."""
    outs = _demanded_outputs(obligation)
    return len(set(outs)) > 1


def tini_chain(domain: Sequence[int] = (1, 2)) -> Chain:
    def src_behaviors(p, ctx, bounds):
        return mini_behaviors(p, ctx, domain)

    def backtranslator(criterion, programs, target_ctx, obligation, bounds):
        # a single trace [privin i, pubout o] back-translates to the
        # context whose f() returns o
        if criterion.kind != "pf-rtp" or obligation is None:
            return None
        (wanted,) = obligation
        if len(wanted) != 1:
            return None
        outs = _demanded_outputs(obligation)
        if len(outs) == 1:
            return ConstFn((outs[0],))
        return None

    return Chain(
        name="tini",
        compile=lambda p: p,
        source_behaviors=src_behaviors,
        target_behaviors=src_behaviors,
        src_ctx_enum=_const_enum(1),
        tgt_ctx_enum=lambda bounds: [ReadPrivateFn()] + list(_const_enum(1)(bounds)),
        backtranslator=backtranslator,
        refute=_const_refute,
        describe_ctx=_describe_mini_ctx,
    )


def introspect_chain() -> Chain:
    def src_behaviors(p, ctx, bounds):
        return mini_behaviors(p, ctx, ())

    def backtranslator(criterion, programs, target_ctx, obligation, bounds):
        # for one program, hard-code whatever the code-reading context
        # feeds that program
        if criterion.kind not in ("pf-rhp", "pf-rtp", "pf-rschp") or len(programs) != 1:
            return None
        (p,) = programs
        return ConstFn((_fn_value(target_ctx, 0, None, p.pid),))

    return Chain(
        name="introspect",
        compile=lambda p: p,
        source_behaviors=src_behaviors,
        target_behaviors=src_behaviors,
        src_ctx_enum=_const_enum(1),
        tgt_ctx_enum=lambda bounds: [CodeReadFn(((1, 1), (2, 2)))]
        + list(_const_enum(1)(bounds)),
        backtranslator=backtranslator,
        refute=_const_refute,
        describe_ctx=_describe_mini_ctx,
    )


def khs_chain(k: int) -> Chain:
    domain = tuple(range(1, k + 2))

    def src_behaviors(p, ctx, bounds):
        return mini_behaviors(p, ctx, domain)

    def backtranslator(criterion, programs, target_ctx, obligation, bounds):
        # prefixes [rd a, out b] determine the constant context by the
        # linear-system solver; under-determined systems are completed
        from .khs import prefixes_of_obligation, solve_khs_partial

        if obligation is None:
            return None
        pairs = prefixes_of_obligation(obligation)
        if pairs is None:
            return None
        sol = solve_khs_partial(k, pairs)
        if sol.kind != "solution":
            return None
        return ConstFn(sol.values)

    def refute(criterion, programs, obligation) -> bool:
        from .khs import prefixes_of_obligation, solve_khs_partial

        pairs = prefixes_of_obligation(obligation)
        if pairs is None:
            return False
        return solve_khs_partial(k, pairs).kind == "inconsistent"

    return Chain(
        name=f"khs-{k}",
        compile=lambda p: p,
        source_behaviors=src_behaviors,
        target_behaviors=src_behaviors,
        src_ctx_enum=_const_enum(k),
        tgt_ctx_enum=lambda bounds: [falsifying_context(k)],
        backtranslator=backtranslator,
        refute=refute,
        describe_ctx=_describe_mini_ctx,
    )


def falsifying_context(k: int) -> PrivTableFn:
    """The target context table reproducing the falsifying prefix set:
    f_1 returns 1 except 0 at input K+1; every other f_j returns 1."""
    f1 = tuple(
        (a, Fraction(0) if a == k + 1 else Fraction(1)) for a in range(1, k + 2)
    )
    others = tuple((a, Fraction(1)) for a in range(1, k + 2))
    return PrivTableFn((f1,) + tuple(others for _ in range(k - 1)))


def _describe_mini_ctx(ctx) -> str:
    match ctx:
        case ConstFn(values):
            return "const(" + ", ".join(str(v) for v in values) + ")"
        case ReadPrivateFn():
            return "f() = private x"
        case CodeReadFn():
            return f"f() = by code id {dict(ctx.by_pid)}"
        case PrivTableFn():
            return "per-input tables " + repr(
                [dict((a, str(v)) for a, v in t) for t in ctx.tables]
            )
    return repr(ctx)


TINI_PROGRAM = MiniProgram("tini", pid=1)
INTROSPECT_P1 = MiniProgram("introspect", pid=1, dead_code=0)
INTROSPECT_P2 = MiniProgram("introspect", pid=2, dead_code=1)


def khs_program(k: int) -> MiniProgram:
    return MiniProgram("khs", pid=1, k=k)
