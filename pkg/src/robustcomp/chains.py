"""The typed-to-dynamic compilation chain packaged for the checkers."""

from __future__ import annotations

import itertools
from typing import Optional, Sequence

from .backtranslation import backtranslate_ctx, build_tree, ctx_view, tree_backtranslate
from .compiler import compile_program
from .criteria import Bounds, Chain, CriterionId
from .machine import behaviors_of, run_whole
from .syntax import (
    BinOp,
    BoolLit,
    Call,
    Expr,
    Iface,
    If,
    Let,
    Num,
    SrcContext,
    SrcProgram,
    TgtContext,
    TgtProgram,
    Ty,
    Var,
    context_to_sexpr,
)
from .traces import ReadEv
from .typecheck import LinkError, WfError, link_source, link_target


def _arg_literals(ty: Ty) -> list[Expr]:
    return [Num(0), Num(1), Num(3)] if ty is Ty.NAT else [BoolLit(True), BoolLit(False)]


def src_context_enum(iface: Iface, bounds: Bounds):
    """Small well-typed source contexts, sizes first."""
    yield SrcContext(Num(0))
    yield SrcContext(Num(1))
    for entry in iface:
        for lit in _arg_literals(entry.arg_ty):
            yield SrcContext(Call(entry.fname, lit))
    for entry in iface:
        for lit in _arg_literals(entry.arg_ty)[:2]:
            body = Call(entry.fname, lit)
            if entry.ret_ty is Ty.NAT:
                yield SrcContext(Let("x", Ty.NAT, body, BinOp("+", Var("x"), Num(1))))
            else:
                yield SrcContext(If(body, Num(1), Num(0)))
    for e1 in iface:
        for e2 in iface:
            if e2.arg_ty is e1.ret_ty:
                for lit in _arg_literals(e1.arg_ty)[:2]:
                    yield SrcContext(Call(e2.fname, Call(e1.fname, lit)))


def tgt_context_enum(iface_names: Sequence[str], bounds: Bounds):
    """Small target contexts, including ill-typed ones."""
    yield TgtContext(Num(0))
    yield TgtContext(BoolLit(True))
    for f in iface_names:
        for lit in (Num(0), Num(1), Num(3), BoolLit(True), BoolLit(False)):
            yield TgtContext(Call(f, lit))
    for f in iface_names:
        yield TgtContext(Let("x", None, Call(f, Num(0)), Var("x")))
        yield TgtContext(Call(f, Call(f, Num(1))))
    yield TgtContext(BinOp("+", BoolLit(True), Num(3)))


def lt_ld_chain(iface: Iface, input_domain: Sequence[int] = (0, 1)) -> Chain:
    domain = tuple(input_domain)

    def source_behaviors(p: SrcProgram, c: SrcContext, bounds: Bounds):
        return behaviors_of(link_source(p, c), domain, bounds.input_len, bounds.budget)

    def target_behaviors(p: TgtProgram, c: TgtContext, bounds: Bounds):
        return behaviors_of(link_target(p, c), domain, bounds.input_len, bounds.budget)

    def src_linkable(p, c) -> bool:
        try:
            link_source(p, c)
            return True
        except LinkError:
            return False

    def tgt_linkable(p, c) -> bool:
        try:
            link_target(p, c)
            return True
        except (LinkError, WfError):
            return False

    def backtranslator(
        criterion: CriterionId, programs, target_ctx: TgtContext, obligation, bounds
    ) -> Optional[SrcContext]:
        if criterion.kind in ("pf-rfrxp", "pf-rkrsp", "pf-r2rsp", "pf-r2rtp") and obligation:
            ctx = _tree_context(programs, target_ctx, obligation, bounds)
            if ctx is not None:
                return ctx
        try:
            return backtranslate_ctx(target_ctx, iface)
        except Exception:  # noqa: BLE001 - fall through to enumeration
            return None

    def _tree_context(programs, target_ctx, obligation, bounds) -> Optional[SrcContext]:
        """Per-obligation trace-tree back-translation: rerun each program's
        compiled form on the obligation trace's own input script and build
        the tree from the informative context views."""
        try:
            mus = []
            for p, slot in zip(programs, obligation):
                if len(slot) != 1:
                    return None
                script = [e.n for e in slot[0].events if isinstance(e, ReadEv)]
                whole = link_target(compile_program(p), target_ctx)
                mus.append(run_whole(whole, script, bounds.budget, informative=True).trace)
            tree = build_tree([ctx_view(mu) for mu in mus], iface)
            return tree_backtranslate(tree, iface)
        except Exception:  # noqa: BLE001
            return None

    return Chain(
        name="lt-ld",
        compile=compile_program,
        source_behaviors=source_behaviors,
        target_behaviors=target_behaviors,
        src_ctx_enum=lambda bounds: itertools.islice(
            src_context_enum(iface, bounds), bounds.pool
        ),
        tgt_ctx_enum=lambda bounds: itertools.islice(
            tgt_context_enum(tuple(e.fname for e in iface), bounds), bounds.pool
        ),
        src_linkable=src_linkable,
        tgt_linkable=tgt_linkable,
        src_enum_complete=False,
        backtranslator=backtranslator,
        describe_ctx=lambda c: context_to_sexpr(c),
    )
