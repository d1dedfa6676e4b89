"""Static semantics of the typed source language, plus linking for both.

Program bodies resolve calls against the defined functions; context
expressions resolve them against the interface, under an empty environment.
`fail` types at any type, represented here by None (bottom).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

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
    called_names,
    contains_fail,
    contains_io,
)


class SrcTypeError(Exception):
    def __init__(self, expr: Expr, expected: str, actual: str):
        self.expr = expr
        self.expected = expected
        self.actual = actual
        super().__init__(f"expected {expected}, got {actual} in {expr!r}")


class LinkError(Exception):
    def __init__(self, premise: str, detail: str = ""):
        self.premise = premise
        super().__init__(f"{premise}{': ' + detail if detail else ''}")


class WfError(LinkError):
    pass


MaybeTy = Optional[Ty]  # None is bottom: the type of fail


def _fits(actual: MaybeTy, expected: Ty) -> bool:
    return actual is None or actual is expected


def _name(ty: MaybeTy) -> str:
    return "any" if ty is None else ty.value


def typecheck_expr(
    p: SrcProgram,
    env: dict[str, Ty],
    e: Expr,
    calls: str = "program",
) -> MaybeTy:
    """P;Γ ⊢ e : τ.  `calls` selects whether Call resolves against the
    defined functions (program bodies) or the interface (contexts)."""
    match e:
        case BoolLit(_):
            return Ty.BOOL
        case Num(_):
            return Ty.NAT
        case Var(x):
            if x not in env:
                raise SrcTypeError(e, "bound variable", f"unbound {x}")
            return env[x]
        case BinOp(_, l, r):
            for side in (l, r):
                ty = typecheck_expr(p, env, side, calls)
                if not _fits(ty, Ty.NAT):
                    raise SrcTypeError(side, "nat", _name(ty))
            return Ty.NAT
        case Geq(l, r):
            for side in (l, r):
                ty = typecheck_expr(p, env, side, calls)
                if not _fits(ty, Ty.NAT):
                    raise SrcTypeError(side, "nat", _name(ty))
            return Ty.BOOL
        case Let(x, ty, bound, body):
            if ty is None:
                raise SrcTypeError(e, "annotated let", "unannotated let")
            bound_ty = typecheck_expr(p, env, bound, calls)
            if not _fits(bound_ty, ty):
                raise SrcTypeError(bound, ty.value, _name(bound_ty))
            return typecheck_expr(p, {**env, x: ty}, body, calls)
        case If(c, t, f):
            cty = typecheck_expr(p, env, c, calls)
            if not _fits(cty, Ty.BOOL):
                raise SrcTypeError(c, "bool", _name(cty))
            tty = typecheck_expr(p, env, t, calls)
            fty = typecheck_expr(p, env, f, calls)
            if tty is None:
                return fty
            if fty is None:
                return tty
            if tty is not fty:
                raise SrcTypeError(e, f"both branches {tty.value}", fty.value)
            return tty
        case Call(fname, arg):
            if calls == "program":
                f = p.fun(fname)
                if f is None:
                    raise SrcTypeError(e, "defined function", f"unknown {fname}")
                sig = f.arg_ty, f.ret_ty
            else:
                entry = p.iface_entry(fname)
                if entry is None:
                    raise SrcTypeError(e, "interface function", f"unknown {fname}")
                sig = entry.arg_ty, entry.ret_ty
            arg_ty, ret_ty = sig
            actual = typecheck_expr(p, env, arg, calls)
            if not _fits(actual, arg_ty):
                raise SrcTypeError(arg, arg_ty.value, _name(actual))
            return ret_ty
        case Read():
            return Ty.NAT
        case Write(arg):
            ty = typecheck_expr(p, env, arg, calls)
            if not _fits(ty, Ty.NAT):
                raise SrcTypeError(arg, "nat", _name(ty))
            return Ty.NAT
        case Fail():
            return None
        case Check(_, _):
            raise SrcTypeError(e, "source expression", "check (target-only)")
        case Ret(inner):
            return typecheck_expr(p, env, inner, calls)
    raise SrcTypeError(e, "expression", "unknown form")


def typecheck_program(p: SrcProgram) -> None:
    """⊢ P: every defined name is declared with a matching signature and
    every body checks at its declared return type."""
    declared = {i.fname: (i.arg_ty, i.ret_ty) for i in p.iface}
    if len(declared) != len(p.iface):
        raise SrcTypeError(Var("?"), "distinct interface names", "duplicate")
    for f in p.funs:
        if f.fname not in declared:
            raise SrcTypeError(
                Var(f.fname), "dom(funs) within interface", f"undeclared {f.fname}"
            )
        if declared[f.fname] != (f.arg_ty, f.ret_ty):
            raise SrcTypeError(Var(f.fname), "signature matching interface", "mismatch")
        body_ty = typecheck_expr(p, {f.param: f.arg_ty}, f.body, calls="program")
        if not _fits(body_ty, f.ret_ty):
            raise SrcTypeError(f.body, f.ret_ty.value, _name(body_ty))


def typecheck_context(c: SrcContext, iface: Iface) -> MaybeTy:
    """Context typing under the program interface with empty environment."""
    shell = SrcProgram(iface, ())
    return typecheck_expr(shell, {}, c.body, calls="context")


def link_source(p: SrcProgram, c: SrcContext) -> "SrcWhole":
    try:
        typecheck_program(p)
    except SrcTypeError as exc:
        raise LinkError("program_ill_typed", str(exc)) from exc
    if any(contains_fail(f.body) for f in p.funs):
        raise LinkError("fail_in_program")
    if contains_io(c.body):
        raise LinkError("io_in_context")
    iface_names = {i.fname for i in p.iface}
    unknown = called_names(c.body) - iface_names
    if unknown:
        raise LinkError("unknown_function", ", ".join(sorted(unknown)))
    try:
        typecheck_context(c, p.iface)
    except SrcTypeError as exc:
        raise LinkError("context_ill_typed", str(exc)) from exc
    return SrcWhole(p, c)


def wf_context(c: TgtContext, iface: tuple[str, ...]) -> None:
    """Syntactic well-formedness of a target context."""
    if contains_io(c.body):
        raise WfError("io_in_context")
    unknown = called_names(c.body) - set(iface)
    if unknown:
        raise WfError("unknown_function", ", ".join(sorted(unknown)))


def link_target(p: TgtProgram, c: TgtContext) -> "TgtWhole":
    wf_context(c, p.iface)
    return TgtWhole(p, c)


@dataclass(frozen=True)
class SrcWhole:
    program: SrcProgram
    context: SrcContext


@dataclass(frozen=True)
class TgtWhole:
    program: TgtProgram
    context: TgtContext


Whole = Union[SrcWhole, TgtWhole]
