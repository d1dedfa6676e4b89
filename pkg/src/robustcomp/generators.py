"""Seeded random generation of well-typed programs, contexts, and scripts.

Generated function bodies only call strictly earlier functions, so every
generated program terminates on every input; divergence is exercised by
hand-written fixtures instead.  All generators take an explicit
random.Random so runs are reproducible from a seed.
"""

from __future__ import annotations

import random
from typing import Optional, Sequence

from .syntax import (
    BinOp,
    BoolLit,
    Call,
    Check,
    Expr,
    Fun,
    Geq,
    If,
    Iface,
    IfaceEntry,
    Let,
    Num,
    Read,
    SrcContext,
    SrcProgram,
    TgtContext,
    TgtProgram,
    Ty,
    Var,
    Write,
)

_FNAMES = ["f", "g", "h", "k"]


def gen_ty(rng: random.Random) -> Ty:
    return rng.choice([Ty.NAT, Ty.BOOL])


def gen_iface(rng: random.Random, max_funs: int = 3) -> Iface:
    n = rng.randint(1, max_funs)
    return tuple(
        IfaceEntry(_FNAMES[i], gen_ty(rng), gen_ty(rng)) for i in range(n)
    )


def gen_src_expr(
    rng: random.Random,
    ty: Ty,
    env: dict[str, Ty],
    callables: Sequence[IfaceEntry],
    depth: int,
    allow_io: bool,
) -> Expr:
    """A well-typed expression of the requested type."""
    vars_of_ty = [x for x, t in env.items() if t is ty]
    if depth <= 0:
        leaves = []
        if ty is Ty.NAT:
            leaves.append(lambda: Num(rng.randint(0, 9)))
            if allow_io:
                leaves.append(lambda: Read())
        else:
            leaves.append(lambda: BoolLit(rng.random() < 0.5))
        if vars_of_ty:
            leaves.append(lambda: Var(rng.choice(vars_of_ty)))
        return rng.choice(leaves)()

    def sub(t: Ty, d: int = depth - 1) -> Expr:
        return gen_src_expr(rng, t, env, callables, d, allow_io)

    choices = []
    if ty is Ty.NAT:
        choices += [
            lambda: Num(rng.randint(0, 9)),
            lambda: BinOp(rng.choice(["+", "-", "*"]), sub(Ty.NAT), sub(Ty.NAT)),
        ]
        if allow_io:
            choices += [lambda: Read(), lambda: Write(sub(Ty.NAT))]
    else:
        choices += [
            lambda: BoolLit(rng.random() < 0.5),
            lambda: Geq(sub(Ty.NAT), sub(Ty.NAT)),
        ]
    if vars_of_ty:
        choices.append(lambda: Var(rng.choice(vars_of_ty)))
    choices.append(lambda: If(sub(Ty.BOOL), sub(ty), sub(ty)))

    def make_let():
        bound_ty = gen_ty(rng)
        x = f"v{rng.randint(0, 99)}"
        bound = sub(bound_ty)
        body = gen_src_expr(rng, ty, {**env, x: bound_ty}, callables, depth - 1, allow_io)
        return Let(x, bound_ty, bound, body)

    choices.append(make_let)
    targets = [c for c in callables if c.ret_ty is ty]
    if targets:
        def make_call():
            entry = rng.choice(targets)
            return Call(entry.fname, sub(entry.arg_ty))
        choices.append(make_call)
        choices.append(make_call)
    return rng.choice(choices)()


def gen_src_program(
    rng: random.Random,
    iface: Optional[Iface] = None,
    depth: int = 3,
    allow_io: bool = True,
) -> SrcProgram:
    if iface is None:
        iface = gen_iface(rng)
    funs = []
    for i, entry in enumerate(iface):
        body = gen_src_expr(
            rng,
            entry.ret_ty,
            {"x": entry.arg_ty},
            iface[:i],  # earlier functions only: no recursion
            depth,
            allow_io,
        )
        funs.append(Fun(entry.fname, "x", entry.arg_ty, entry.ret_ty, body))
    return SrcProgram(iface, tuple(funs))


def gen_src_context(rng: random.Random, iface: Iface, depth: int = 3) -> SrcContext:
    ty = gen_ty(rng)
    return SrcContext(gen_src_expr(rng, ty, {}, iface, depth, allow_io=False))


def gen_tgt_expr(
    rng: random.Random,
    env: list[str],
    callables: Sequence[str],
    depth: int,
    allow_io: bool,
    allow_ill_typed: bool = True,
) -> Expr:
    """An arbitrary (possibly ill-typed) target expression."""
    if depth <= 0:
        leaves = [lambda: Num(rng.randint(0, 9)), lambda: BoolLit(rng.random() < 0.5)]
        if env:
            leaves.append(lambda: Var(rng.choice(env)))
        if allow_io:
            leaves.append(lambda: Read())
        return rng.choice(leaves)()

    def sub(d: int = depth - 1) -> Expr:
        return gen_tgt_expr(rng, env, callables, d, allow_io, allow_ill_typed)

    def num_leaning() -> Expr:
        # mostly well-typed arithmetic operands unless ill-typed is allowed
        if allow_ill_typed and rng.random() < 0.15:
            return sub()
        e = sub()
        return e if not isinstance(e, BoolLit) else Num(rng.randint(0, 9))

    choices = [
        lambda: Num(rng.randint(0, 9)),
        lambda: BoolLit(rng.random() < 0.5),
        lambda: BinOp(rng.choice(["+", "-", "*"]), num_leaning(), num_leaning()),
        lambda: Geq(num_leaning(), num_leaning()),
        lambda: If(Geq(num_leaning(), num_leaning()), sub(), sub()),
        lambda: Check(sub(), rng.choice([Ty.NAT, Ty.BOOL])),
    ]
    if env:
        choices.append(lambda: Var(rng.choice(env)))
    if allow_io:
        choices += [lambda: Read(), lambda: Write(num_leaning())]

    def make_let():
        x = f"v{rng.randint(0, 99)}"
        return Let(x, None, sub(), gen_tgt_expr(rng, env + [x], callables, depth - 1, allow_io, allow_ill_typed))

    choices.append(make_let)
    if callables:
        def make_call():
            return Call(rng.choice(list(callables)), sub())
        choices.append(make_call)
        choices.append(make_call)
    if allow_ill_typed:
        choices.append(lambda: If(sub(), sub(), sub()))
    return rng.choice(choices)()


def gen_tgt_context(
    rng: random.Random,
    iface_names: Sequence[str],
    depth: int = 3,
    allow_ill_typed: bool = True,
) -> TgtContext:
    body = gen_tgt_expr(rng, [], iface_names, depth, allow_io=False, allow_ill_typed=allow_ill_typed)
    return TgtContext(body)


def gen_tgt_program(rng: random.Random, max_funs: int = 3, depth: int = 3) -> TgtProgram:
    n = rng.randint(1, max_funs)
    names = tuple(_FNAMES[:n])
    funs = []
    for i, name in enumerate(names):
        body = gen_tgt_expr(rng, ["x"], names[:i], depth, allow_io=True, allow_ill_typed=True)
        funs.append(Fun(name, "x", None, None, body))
    return TgtProgram(names, tuple(funs))


def gen_script(rng: random.Random, domain: Sequence[int], max_len: int) -> list[int]:
    return [rng.choice(list(domain)) for _ in range(rng.randint(0, max_len))]


def gen_program_pool(
    rng: random.Random, size: int, iface: Optional[Iface] = None, depth: int = 3
) -> list[SrcProgram]:
    """Programs sharing one interface (for the relational criteria)."""
    if iface is None:
        iface = gen_iface(rng)
    return [gen_src_program(rng, iface, depth=depth) for _ in range(size)]
