"""Abstract syntax for the typed source language and the dynamic target.

Both languages share expression constructors; the source carries type
annotations on lets and function signatures, the target instead has the
runtime Check primitive.  Ret is runtime-only and never appears in parsed
programs or contexts.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Union

from .traces import Value, VBool, VNat


class Ty(enum.Enum):
    NAT = "nat"
    BOOL = "bool"

    def __repr__(self):
        return self.value


OPS = ("+", "-", "*")


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Num:
    n: int


@dataclass(frozen=True)
class BoolLit:
    b: bool


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Geq:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Let:
    var: str
    ty: Optional[Ty]  # annotated in source, None in target
    bound: "Expr"
    body: "Expr"


@dataclass(frozen=True)
class If:
    cond: "Expr"
    then: "Expr"
    els: "Expr"


@dataclass(frozen=True)
class Call:
    fname: str
    arg: "Expr"


@dataclass(frozen=True)
class Read:
    pass


@dataclass(frozen=True)
class Write:
    arg: "Expr"


@dataclass(frozen=True)
class Fail:
    pass


@dataclass(frozen=True)
class Check:
    arg: "Expr"
    ty: Ty


@dataclass(frozen=True)
class Ret:
    inner: "Expr"


Expr = Union[Var, Num, BoolLit, BinOp, Geq, Let, If, Call, Read, Write, Fail, Check, Ret]


@dataclass(frozen=True)
class IfaceEntry:
    fname: str
    arg_ty: Ty
    ret_ty: Ty


@dataclass(frozen=True)
class Fun:
    fname: str
    param: str
    arg_ty: Optional[Ty]
    ret_ty: Optional[Ty]
    body: Expr


@dataclass(frozen=True)
class SrcProgram:
    iface: tuple[IfaceEntry, ...]
    funs: tuple[Fun, ...]

    def iface_entry(self, fname: str) -> Optional[IfaceEntry]:
        for entry in self.iface:
            if entry.fname == fname:
                return entry
        return None

    def fun(self, fname: str) -> Optional[Fun]:
        for f in self.funs:
            if f.fname == fname:
                return f
        return None


@dataclass(frozen=True)
class TgtProgram:
    iface: tuple[str, ...]
    funs: tuple[Fun, ...]

    def fun(self, fname: str) -> Optional[Fun]:
        for f in self.funs:
            if f.fname == fname:
                return f
        return None


@dataclass(frozen=True)
class SrcContext:
    body: Expr


@dataclass(frozen=True)
class TgtContext:
    body: Expr


Program = Union[SrcProgram, TgtProgram]
Context = Union[SrcContext, TgtContext]

Iface = tuple[IfaceEntry, ...]


def is_value(e: Expr) -> bool:
    return isinstance(e, (Num, BoolLit))


def to_value(e: Expr) -> Value:
    if isinstance(e, Num):
        return VNat(e.n)
    if isinstance(e, BoolLit):
        return VBool(e.b)
    raise ValueError(f"not a value: {e!r}")


def of_value(v: Value) -> Expr:
    if isinstance(v, VNat):
        return Num(v.n)
    return BoolLit(v.b)


def value_has_type(v: Value, ty: Ty) -> bool:
    return isinstance(v, VNat) if ty is Ty.NAT else isinstance(v, VBool)


def subst(e: Expr, name: str, v: Expr) -> Expr:
    """Capture-free substitution of a closed value for a variable."""
    match e:
        case Var(n):
            return v if n == name else e
        case Num(_) | BoolLit(_) | Read() | Fail():
            return e
        case BinOp(op, l, r):
            return BinOp(op, subst(l, name, v), subst(r, name, v))
        case Geq(l, r):
            return Geq(subst(l, name, v), subst(r, name, v))
        case Let(x, ty, bound, body):
            new_body = body if x == name else subst(body, name, v)
            return Let(x, ty, subst(bound, name, v), new_body)
        case If(c, t, f):
            return If(subst(c, name, v), subst(t, name, v), subst(f, name, v))
        case Call(f, arg):
            return Call(f, subst(arg, name, v))
        case Write(arg):
            return Write(subst(arg, name, v))
        case Check(arg, ty):
            return Check(subst(arg, name, v), ty)
        case Ret(inner):
            return Ret(subst(inner, name, v))
    raise ValueError(f"unknown expression {e!r}")


def called_names(e: Expr) -> set[str]:
    out: set[str] = set()

    def walk(x: Expr):
        match x:
            case Call(f, arg):
                out.add(f)
                walk(arg)
            case BinOp(_, l, r) | Geq(l, r):
                walk(l)
                walk(r)
            case Let(_, _, bound, body):
                walk(bound)
                walk(body)
            case If(c, t, f):
                walk(c)
                walk(t)
                walk(f)
            case Write(a) | Check(a, _) | Ret(a):
                walk(a)
            case _:
                pass

    walk(e)
    return out


def contains_io(e: Expr) -> bool:
    match e:
        case Read():
            return True
        case Write(_):
            return True
        case BinOp(_, l, r) | Geq(l, r):
            return contains_io(l) or contains_io(r)
        case Let(_, _, bound, body):
            return contains_io(bound) or contains_io(body)
        case If(c, t, f):
            return contains_io(c) or contains_io(t) or contains_io(f)
        case Call(_, a) | Check(a, _) | Ret(a):
            return contains_io(a)
        case _:
            return False


def contains_fail(e: Expr) -> bool:
    match e:
        case Fail():
            return True
        case BinOp(_, l, r) | Geq(l, r):
            return contains_fail(l) or contains_fail(r)
        case Let(_, _, bound, body):
            return contains_fail(bound) or contains_fail(body)
        case If(c, t, f):
            return contains_fail(c) or contains_fail(t) or contains_fail(f)
        case Call(_, a) | Write(a) | Check(a, _) | Ret(a):
            return contains_fail(a)
        case _:
            return False


def var_names(e: Expr) -> set[str]:
    """All variable names occurring (bound or free) in an expression."""
    out: set[str] = set()

    def walk(x: Expr):
        match x:
            case Var(n):
                out.add(n)
            case Let(v, _, bound, body):
                out.add(v)
                walk(bound)
                walk(body)
            case BinOp(_, l, r) | Geq(l, r):
                walk(l)
                walk(r)
            case If(c, t, f):
                walk(c)
                walk(t)
                walk(f)
            case Call(_, a) | Write(a) | Check(a, _) | Ret(a):
                walk(a)
            case _:
                pass

    walk(e)
    return out


# ---------------------------------------------------------------- printing

def ty_to_sexpr(ty: Ty) -> str:
    return ty.value


def expr_to_sexpr(e: Expr) -> str:
    match e:
        case Var(n):
            return n
        case Num(n):
            return str(n)
        case BoolLit(b):
            return "true" if b else "false"
        case BinOp(op, l, r):
            return f"({op} {expr_to_sexpr(l)} {expr_to_sexpr(r)})"
        case Geq(l, r):
            return f"(>= {expr_to_sexpr(l)} {expr_to_sexpr(r)})"
        case Let(x, None, bound, body):
            return f"(let {x} {expr_to_sexpr(bound)} {expr_to_sexpr(body)})"
        case Let(x, ty, bound, body):
            return f"(let {x} {ty_to_sexpr(ty)} {expr_to_sexpr(bound)} {expr_to_sexpr(body)})"
        case If(c, t, f):
            return f"(if {expr_to_sexpr(c)} {expr_to_sexpr(t)} {expr_to_sexpr(f)})"
        case Call(f, a):
            return f"(call {f} {expr_to_sexpr(a)})"
        case Read():
            return "(read)"
        case Write(a):
            return f"(write {expr_to_sexpr(a)})"
        case Fail():
            return "fail"
        case Check(a, ty):
            return f"(check {expr_to_sexpr(a)} {ty_to_sexpr(ty)})"
        case Ret(inner):
            return f"(ret {expr_to_sexpr(inner)})"
    raise ValueError(f"unknown expression {e!r}")


def program_to_sexpr(p: Program) -> str:
    if isinstance(p, SrcProgram):
        iface = " ".join(
            f"({i.fname} (-> {ty_to_sexpr(i.arg_ty)} {ty_to_sexpr(i.ret_ty)}))"
            for i in p.iface
        )
        funs = " ".join(
            f"(fun {f.fname} ({f.param} {ty_to_sexpr(f.arg_ty)}) "
            f"{ty_to_sexpr(f.ret_ty)} {expr_to_sexpr(f.body)})"
            for f in p.funs
        )
    else:
        iface = " ".join(p.iface)
        funs = " ".join(
            f"(fun {f.fname} ({f.param}) {expr_to_sexpr(f.body)})" for f in p.funs
        )
    parts = [f"(iface {iface})" if iface else "(iface)"]
    if funs:
        parts.append(funs)
    return f"(program {' '.join(parts)})"


def context_to_sexpr(c: Context) -> str:
    return expr_to_sexpr(c.body)
