"""Separation chains: solver vs. oracle, fuel laws, demos."""

import itertools
import random
from fractions import Fraction

import pytest

from oracles import gaussian_solve, khs_equations
from robustcomp.counterexamples import fuel, khs, minilang, rtep
from robustcomp.counterexamples.demos import DEMO_NAMES, run_demo
from robustcomp.traces import DIV, TERM, OutEv, TracePrefix, VBool, VNat


# ------------------------------------------------------------- linear systems

def test_solver_matches_gaussian_oracle_on_spec_example():
    # frozen from the oracle: x1 = 1, x2 = 1
    kind, values = gaussian_solve(khs_equations(2, [(1, 2), (2, 3)]))
    assert (kind, values) == ("solution", (Fraction(1), Fraction(1)))
    sol = khs.solve_khs_system(2, [(1, 2), (2, 3)])
    assert sol.kind == "solution" and sol.values == values


def test_falsifying_sets():
    assert khs.falsifying_set(2) == [(1, Fraction(2)), (2, Fraction(3)), (3, Fraction(3))]
    assert khs.falsifying_set(3) == [
        (1, Fraction(3)),
        (2, Fraction(4)),
        (3, Fraction(5)),
        (4, Fraction(4)),
    ]
    assert khs.falsifying_set(1) == [(1, Fraction(1)), (2, Fraction(2))]


def test_falsifying_set_inconsistent():
    assert khs.solve_khs_system(2, khs.falsifying_set(2)).kind == "inconsistent"
    assert khs.solve_khs_system(3, khs.falsifying_set(3)).kind == "inconsistent"
    assert gaussian_solve(khs_equations(2, khs.falsifying_set(2)))[0] == "inconsistent"
    assert gaussian_solve(khs_equations(3, khs.falsifying_set(3)))[0] == "inconsistent"


def test_solver_not_applicable_cases():
    assert khs.solve_khs_system(2, [(1, 2), (1, 3)]).kind == "not_applicable"
    assert khs.solve_khs_system(2, [(1, 2), (9, 3)]).kind == "not_applicable"
    assert khs.solve_khs_system(2, [(1, 2)]).kind == "not_applicable"


def test_solver_agrees_with_oracle_on_random_systems():
    """K-sized systems with arbitrary rational outputs: the closed-form
    case solver and generic elimination agree exactly."""
    rng = random.Random(43)
    for k in (2, 3, 4):
        for _ in range(120):
            inputs = rng.sample(range(1, k + 2), k)
            pairs = [
                (a, Fraction(rng.randint(-6, 12), rng.choice((1, 1, 2, 3))))
                for a in sorted(inputs)
            ]
            sol = khs.solve_khs_system(k, pairs)
            kind, values = gaussian_solve(khs_equations(k, pairs))
            assert sol.kind == kind, (k, pairs, sol, kind)
            if kind == "solution":
                assert sol.values == values, (k, pairs, sol.values, values)


def test_solver_agrees_with_oracle_on_full_systems():
    rng = random.Random(47)
    for k in (2, 3):
        for _ in range(120):
            pairs = [
                (a, Fraction(rng.randint(-4, 9))) for a in range(1, k + 2)
            ]
            sol = khs.solve_khs_system(k, pairs)
            kind, values = gaussian_solve(khs_equations(k, pairs))
            assert sol.kind == kind, (k, pairs)
            if kind == "solution":
                assert sol.values == values


def test_partial_solver_completions_replay():
    rng = random.Random(53)
    for k in (2, 3):
        program = minilang.khs_program(k)
        for _ in range(60):
            size = rng.randint(0, k)
            inputs = rng.sample(range(1, k + 2), size)
            pairs = [(a, Fraction(rng.randint(0, 6))) for a in sorted(inputs)]
            sol = khs.solve_khs_partial(k, pairs)
            if sol.kind != "solution":
                continue
            ctx = minilang.ConstFn(sol.values)
            for a, b in pairs:
                t = minilang.run_mini(program, ctx, a)
                assert t.events[1] == OutEv(Fraction(b))


def test_khs_completeness_for_reachable_sets():
    """Every K-subset of every reachable prefix set over a small table grid
    solves and replays; uniqueness checked against the oracle."""
    for k in (2, 3):
        program = minilang.khs_program(k)
        grid = [Fraction(0), Fraction(1)]
        tables_space = itertools.product(grid, repeat=k * (k + 1))
        for flat in itertools.islice(tables_space, 0, None, 7 if k == 3 else 1):
            tables = tuple(
                tuple((a, flat[j * (k + 1) + (a - 1)]) for a in range(1, k + 2))
                for j in range(k)
            )
            ctx = minilang.PrivTableFn(tables)
            reach = [
                (t.events[0].n, t.events[1].q)
                for t in (minilang.run_mini(program, ctx, a) for a in range(1, k + 2))
            ]
            for subset in itertools.combinations(reach, k):
                sol = khs.solve_khs_system(k, list(subset))
                kind, values = gaussian_solve(khs_equations(k, list(subset)))
                assert sol.kind == kind == "solution", (k, subset)
                assert sol.values == values
                const = minilang.ConstFn(sol.values)
                for a, b in subset:
                    t = minilang.run_mini(program, const, a)
                    assert t.events[1] == OutEv(Fraction(b))


# ------------------------------------------------------------- fuel language

def test_fuel_monotonicity():
    """The fueled trace's events are a list-prefix of the next fuel level."""
    for program in (fuel.LOOP_41, fuel.LOOP_42, fuel.FINITE_PROGRAM, fuel.SILENT_LOOP):
        for n in range(13):
            a = fuel.run_stmt(program, n, 30).trace.events
            b = fuel.run_stmt(program, n + 1, 30).trace.events
            assert b[: len(a)] == a


def test_fuel_backtranslation_exactness():
    """Fuel |m| reproduces every target prefix m of length ≤ 8 exactly."""
    for program in (fuel.LOOP_41, fuel.LOOP_42, fuel.FINITE_PROGRAM):
        target = fuel.run_stmt(program, None, 8).trace.events
        for n in range(len(target) + 1):
            src = fuel.run_stmt(program, n, 20)
            assert src.trace.events == target[:n]
            assert src.trace.end == TERM


def test_fuel_silent_loop():
    assert fuel.run_stmt(fuel.SILENT_LOOP, None, 10).trace == TracePrefix((), DIV)
    assert fuel.run_stmt(fuel.SILENT_LOOP, 7, 10).trace == TracePrefix((), TERM)


def test_fuel_finite_program_ignores_extra_fuel():
    full = fuel.run_stmt(fuel.FINITE_PROGRAM, 50, 50).trace
    assert full == fuel.run_stmt(fuel.FINITE_PROGRAM, None, 50).trace
    assert full.end == TERM and len(full.events) == 3


# ------------------------------------------------------------- rtep language

def test_rtep_compile_value_table():
    compiled = rtep.compile_program(rtep.CONST_ONE_BOOL)
    expected = {0: 1, 1: 1, 3: 42, 4: 42, 5: 42}
    for n, out in expected.items():
        t = rtep.run(compiled, rtep.RtepCtx(VNat(n)))
        assert t == TracePrefix((OutEv(Fraction(out)),), TERM)
    assert rtep.run(compiled, rtep.RtepCtx(VNat(2))) == TracePrefix((), DIV)


def test_rtep_source_constant():
    for b in (True, False):
        t = rtep.run(rtep.CONST_ONE_BOOL, rtep.RtepCtx(VBool(b)))
        assert t == TracePrefix((OutEv(Fraction(1)),), TERM)


def test_rtep_context_compilation():
    assert rtep.compile_ctx(rtep.RtepCtx(VBool(True))) == rtep.RtepCtx(VNat(0))
    assert rtep.compile_ctx(rtep.RtepCtx(VBool(False))) == rtep.RtepCtx(VNat(1))
    assert rtep.compile_ctx(rtep.RtepCtx(VNat(7))) == rtep.RtepCtx(VNat(7))


def test_rtep_linkability():
    assert rtep.linkable(rtep.CONST_ONE_BOOL, rtep.RtepCtx(VBool(True)))
    assert not rtep.linkable(rtep.CONST_ONE_BOOL, rtep.RtepCtx(VNat(1)))


# ------------------------------------------------------------- mini language

def test_tini_leak_behavior():
    leak = minilang.mini_behaviors(minilang.TINI_PROGRAM, minilang.ReadPrivateFn(), (1, 2))
    assert len(leak) == 2


def test_introspect_dead_code_invisible_to_constants():
    c = minilang.ConstFn((Fraction(5),))
    assert minilang.mini_behaviors(minilang.INTROSPECT_P1, c, ()) == minilang.mini_behaviors(
        minilang.INTROSPECT_P2, c, ()
    )


def test_khs_input_range_enforced():
    with pytest.raises(ValueError):
        minilang.run_mini(minilang.khs_program(2), minilang.ConstFn((Fraction(0), Fraction(0))), 9)


# ------------------------------------------------------------- demos

@pytest.mark.parametrize("name", DEMO_NAMES)
def test_demo_passes(name):
    report = run_demo(name)
    assert report.passed, [c for c in report.checks if not c.passed]


def test_khs_demo_k3():
    assert run_demo("khs_k_not_k1", k=3).passed


def test_demo_unknown_name():
    with pytest.raises(ValueError):
        run_demo("nonsense")
