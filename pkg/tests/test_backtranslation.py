"""Both back-translations: the universal embedding and the trace-tree
pipeline with its partial-semantics predicates."""

import itertools
import random

import pytest

from robustcomp.backtranslation import (
    CallNode,
    DivLeaf,
    Eps,
    FailLeaf,
    TermLeaf,
    TreeError,
    backtranslate_ctx,
    build_tree,
    ctx_accepts,
    ctx_view,
    decompose_trace,
    inject_extract_eval,
    prg_accepts,
    project,
    reproduces,
    source_variant,
    tree_backtranslate,
    tree_traces,
    verify_rfrxc,
)
from robustcomp.compiler import compile_program
from robustcomp.generators import gen_iface, gen_src_program, gen_tgt_context
from robustcomp.machine import behaviors_of, run_whole
from robustcomp.sexpr import parse_context, parse_program
from robustcomp.syntax import (
    IfaceEntry,
    SrcContext,
    TgtContext,
    Ty,
    context_to_sexpr,
)
from robustcomp.traces import (
    DIV,
    OPEN,
    TERM,
    CallEv,
    FailAct,
    ReadEv,
    RetEv,
    TracePrefix,
    VBool,
    VNat,
    WriteEv,
)
from robustcomp.typecheck import LinkError, WfError, link_source, link_target, typecheck_context

IFACE_NN = (IfaceEntry("f", Ty.NAT, Ty.NAT),)
IFACE_BB = (IfaceEntry("f", Ty.BOOL, Ty.BOOL),)
P_ID = parse_program("(program (iface (f (-> nat nat))) (fun f (x nat) nat x))", "src")


def run_src_ctx(ctx: SrcContext, program=P_ID, inputs=(), budget=1000):
    return run_whole(link_source(program, ctx), list(inputs), budget)


# ------------------------------------------------------------- worked examples

def test_backtranslation_of_product_evaluates_to_seventeen():
    ctx = backtranslate_ctx(parse_context("(* 3 5)", "tgt"), P_ID.iface)
    r = run_src_ctx(ctx)
    assert r.final_value == VNat(17)


def test_backtranslation_of_ill_typed_sum_fails():
    ctx = backtranslate_ctx(parse_context("(+ false 3)", "tgt"), P_ID.iface)
    r = run_src_ctx(ctx)
    assert r.failed and r.trace == TracePrefix((FailAct(),), TERM)


def test_backtranslation_check_bool_shape():
    ctx = backtranslate_ctx(parse_context("(check 4 bool)", "tgt"), P_ID.iface)
    # let x:Nat = ⟨⟨4⟩⟩ in if x ≥ 2 then 0 else 1
    assert context_to_sexpr(ctx) == "(let x1 nat 6 (if (>= x1 2) 0 1))"
    assert run_src_ctx(ctx).final_value == VNat(0)


def test_backtranslated_contexts_typecheck_at_nat():
    for text in ("(* 3 5)", "(+ false 3)", "(check 4 bool)", "(call f 2)"):
        ctx = backtranslate_ctx(parse_context(text, "tgt"), P_ID.iface)
        assert typecheck_context(ctx, P_ID.iface) in (Ty.NAT, None)


def test_inject_extract_values():
    assert inject_extract_eval("extract", Ty.NAT, VNat(5)) == VNat(3)
    assert inject_extract_eval("extract", Ty.NAT, VNat(7)) == VNat(5)
    assert inject_extract_eval("extract", Ty.NAT, VNat(0)) is None
    assert inject_extract_eval("extract", Ty.BOOL, VNat(0)) == VBool(False)
    assert inject_extract_eval("extract", Ty.BOOL, VNat(1)) == VBool(True)
    assert inject_extract_eval("extract", Ty.BOOL, VNat(2)) is None
    assert inject_extract_eval("inject", Ty.NAT, VNat(15)) == VNat(17)
    assert inject_extract_eval("inject", Ty.BOOL, VBool(True)) == VNat(1)
    assert inject_extract_eval("inject", Ty.BOOL, VBool(False)) == VNat(0)


def test_backtranslation_avoids_variable_capture():
    # the target binds x1 itself; the generated conversion temporaries must
    # not shadow it
    ctx = backtranslate_ctx(parse_context("(let x1 5 (+ 3 x1))", "tgt"), P_ID.iface)
    r = run_src_ctx(ctx)
    # 3 + 5 = 8 encodes as 10
    assert r.final_value == VNat(10)


# ------------------------------------------------------------- trace views

CL2 = CallEv("f", VNat(2))
RT1 = RetEv(VNat(1))


def test_project_erases_boundary_events():
    mu = TracePrefix((CL2, WriteEv(3), RT1), TERM)
    assert project(mu) == TracePrefix((WriteEv(3),), TERM)
    assert project(TracePrefix((), DIV)) == TracePrefix((), DIV)
    assert project(TracePrefix((CL2,), OPEN)) == TracePrefix((), OPEN)


def test_ctx_view_strips_in_call_io_only():
    mu = TracePrefix((CL2, WriteEv(3), RT1), TERM)
    assert ctx_view(mu) == TracePrefix((CL2, RT1), TERM)
    outside = TracePrefix((WriteEv(9), CL2), OPEN)
    assert ctx_view(outside) == outside


def test_ctx_accepts_single_partial_step():
    c = parse_context("(call f 2)", "tgt")
    assert ctx_accepts(c, TracePrefix((CL2,), OPEN))


def test_ctx_accepts_terminating_after_return():
    c = parse_context("(call f 2)", "tgt")
    mu = TracePrefix((CL2, RetEv(VNat(5))), TERM)
    assert ctx_accepts(c, mu)


def test_ctx_accepts_rejects_without_call():
    c = parse_context("7", "tgt")
    assert not ctx_accepts(c, TracePrefix((CL2,), OPEN))


def test_ctx_accepts_divergence_inside_call():
    c = parse_context("(call f 2)", "tgt")
    assert ctx_accepts(c, TracePrefix((CL2,), DIV))


def test_ctx_accepts_failure_inside_call():
    c = parse_context("(call f 2)", "tgt")
    assert ctx_accepts(c, TracePrefix((CL2, FailAct()), TERM))


def test_prg_accepts_echo_segment():
    p = parse_program("(program (iface f) (fun f (x) x))", "tgt")
    mu = TracePrefix((CallEv("f", VNat(3)), RetEv(VNat(3))), TERM)
    assert prg_accepts(p, mu, IFACE_NN)


def test_prg_accepts_wrong_return_rejected():
    p = parse_program("(program (iface f) (fun f (x) x))", "tgt")
    mu = TracePrefix((CallEv("f", VNat(3)), RetEv(VNat(4))), TERM)
    assert not prg_accepts(p, mu, IFACE_NN)


def test_prg_accepts_source_skips_ill_typed_segments():
    p = parse_program(
        "(program (iface (f (-> bool bool))) (fun f (x bool) bool x))", "src"
    )
    mu = TracePrefix((CallEv("f", VNat(5)), RetEv(VNat(9))), TERM)
    assert prg_accepts(p, mu, IFACE_BB)  # vacuously: the call is ill-typed


def test_decompose_trace_on_real_run():
    compiled = compile_program(P_ID)
    ctx = parse_context("(call f 2)", "tgt")
    mu = run_whole(link_target(compiled, ctx), [], 1000, informative=True).trace
    d = decompose_trace(compiled, ctx, mu, P_ID.iface)
    assert d.ctx_ok and d.prg_ok


def test_decompose_trace_flags_foreign_program():
    compiled = compile_program(P_ID)
    ctx = parse_context("(call f 2)", "tgt")
    mu = TracePrefix((CallEv("f", VNat(2)), RetEv(VNat(99))), TERM)
    d = decompose_trace(compiled, ctx, mu, P_ID.iface)
    assert not d.prg_ok


def test_decompose_trace_flags_outside_io():
    compiled = compile_program(P_ID)
    ctx = parse_context("(call f 2)", "tgt")
    mu = TracePrefix((WriteEv(1), CallEv("f", VNat(2))), OPEN)
    d = decompose_trace(compiled, ctx, mu, P_ID.iface)
    assert not d.ctx_ok


def test_source_variant_cases():
    iface = IFACE_BB
    mu1 = TracePrefix((CallEv("f", VNat(5)),), OPEN)
    assert source_variant(mu1, iface) == TracePrefix((FailAct(),), TERM)
    mu2 = TracePrefix((CallEv("f", VNat(5)), FailAct()), TERM)
    assert source_variant(mu2, iface) == TracePrefix((FailAct(),), TERM)
    ok = TracePrefix((CallEv("f", VBool(True)), RetEv(VBool(True))), TERM)
    assert source_variant(ok, iface) == ok


# ------------------------------------------------------------- trees

def test_build_tree_empty_and_eps():
    assert build_tree([], IFACE_NN) == Eps()
    assert build_tree([TracePrefix((), OPEN)], IFACE_NN) == Eps()


def test_build_tree_call_ret_grouping():
    f1 = TracePrefix((CL2, RetEv(VNat(3))), TERM)
    f2 = TracePrefix((CL2, RetEv(VNat(4)), FailAct()), TERM)
    tree = build_tree([f1, f2], IFACE_NN)
    assert tree == CallNode(
        "f", VNat(2), ((VNat(3), TermLeaf()), (VNat(4), FailLeaf()))
    )


def test_build_tree_nondeterministic_set_rejected():
    f1 = TracePrefix((CallEv("f", VNat(1)),), OPEN)
    f2 = TracePrefix((CallEv("g", VNat(1)),), OPEN)
    iface = IFACE_NN + (IfaceEntry("g", Ty.NAT, Ty.NAT),)
    with pytest.raises(TreeError) as err:
        build_tree([f1, f2], iface)
    assert err.value.reason == "nondeterministic_set"


def test_build_tree_ill_typed_call_becomes_fail_leaf():
    mu = TracePrefix((CallEv("f", VNat(5)),), OPEN)
    assert build_tree([mu], IFACE_BB) == FailLeaf()


def test_tree_backtranslate_leaves():
    assert context_to_sexpr(tree_backtranslate(TermLeaf(), IFACE_NN)) == "0"
    assert context_to_sexpr(tree_backtranslate(DivLeaf(), IFACE_NN)) == "fail"
    assert context_to_sexpr(tree_backtranslate(Eps(), IFACE_NN)) == "fail"
    assert context_to_sexpr(tree_backtranslate(FailLeaf(), IFACE_NN)) == "fail"


def test_tree_backtranslate_call_node_equality_encoding():
    tree = CallNode("f", VNat(2), ((VNat(3), TermLeaf()),))
    ctx = tree_backtranslate(tree, IFACE_NN)
    assert context_to_sexpr(ctx) == (
        "(let x nat (call f 2) (if (>= x 3) (if (>= 3 x) 0 fail) fail))"
    )


def test_tree_backtranslate_bool_dispatch():
    tree = CallNode(
        "f", VBool(True), ((VBool(False), TermLeaf()), (VBool(True), FailLeaf()))
    )
    ctx = tree_backtranslate(tree, IFACE_BB)
    assert context_to_sexpr(ctx) == (
        "(let x bool (call f true) (if x fail 0))"
    )


def _replayable(tree, iface):
    """Every trace extracted from the tree replays through its
    back-translation after the source-variant rewrite."""
    ctx = tree_backtranslate(tree, iface)
    for mu in tree_traces(tree):
        mu_s = source_variant(mu, iface)
        if not ctx_accepts(ctx, mu_s):
            return False, mu
    return True, None


def _enum_trees(depth, values, leaf_pool):
    """Full cartesian enumeration of trees over the given return values."""
    if depth == 0:
        yield from leaf_pool
        return
    yield from leaf_pool
    subtrees = list(_enum_trees(depth - 1, values, leaf_pool))
    for r in range(1, len(values) + 1):
        for chosen in itertools.combinations(values, r):
            for subs in itertools.product(subtrees, repeat=r):
                yield CallNode("f", VNat(2), tuple(zip(chosen, subs)))


def test_tree_soundness_exhaustive_small():
    """All trees of depth ≤ 2 with fan-out ≤ 2 over two return values."""
    leaves = (Eps(), TermLeaf(), DivLeaf(), FailLeaf())
    values = (VNat(0), VNat(1))
    count = 0
    for tree in _enum_trees(2, values, leaves):
        ok, bad = _replayable(tree, IFACE_NN)
        assert ok, (tree, bad)
        count += 1
    assert count == 844


def test_tree_soundness_path_trees_depth3():
    """Every dispatch-path shape to depth 3, fan-out ≤ 3, with off-path
    siblings stubbed by termination leaves."""
    leaves = (Eps(), TermLeaf(), DivLeaf(), FailLeaf())
    values = (VNat(0), VNat(1), VNat(2))

    def paths(depth):
        if depth == 0:
            for leaf in leaves:
                yield leaf
            return
        for leaf in leaves:
            yield leaf
        for r in range(1, len(values) + 1):
            for chosen in itertools.combinations(values, r):
                for on_path in chosen:
                    for sub in paths(depth - 1):
                        children = tuple(
                            (v, sub if v == on_path else TermLeaf()) for v in chosen
                        )
                        yield CallNode("f", VNat(2), children)

    count = 0
    for tree in paths(3):
        ok, bad = _replayable(tree, IFACE_NN)
        assert ok, (tree, bad)
        count += 1
    assert count > 5000


# ------------------------------------------------------------- pipeline

def test_verify_rfrxc_single_program():
    report = verify_rfrxc([P_ID], parse_context("(call f 2)", "tgt"), [], 1000)
    assert report.passed
    assert report.outcomes[0].wanted == TracePrefix((), TERM)


def test_verify_rfrxc_branching_two_programs():
    p1 = parse_program(
        "(program (iface (f (-> nat nat))) (fun f (x nat) nat 3))", "src"
    )
    p2 = parse_program(
        "(program (iface (f (-> nat nat))) (fun f (x nat) nat 4))", "src"
    )
    report = verify_rfrxc(
        [p1, p2], parse_context("(call f (call f 2))", "tgt"), [], 1000
    )
    assert report.passed
    assert isinstance(report.tree, CallNode)
    assert len(report.tree.children) == 2


def test_verify_rfrxc_ill_typed_call_gives_fail_context():
    p = parse_program(
        "(program (iface (f (-> bool bool))) (fun f (x bool) bool x))", "src"
    )
    report = verify_rfrxc([p], parse_context("(call f 5)", "tgt"), [], 1000)
    assert report.passed
    assert context_to_sexpr(report.context) == "fail"
    assert report.outcomes[0].wanted == TracePrefix((FailAct(),), TERM)


def test_verify_rfrxc_with_io_and_inputs():
    p = parse_program(
        "(program (iface (f (-> nat nat))) (fun f (x nat) nat (write (read))))",
        "src",
    )
    report = verify_rfrxc([p], parse_context("(call f 0)", "tgt"), [5], 1000)
    assert report.passed
    assert report.outcomes[0].wanted == TracePrefix((ReadEv(5), WriteEv(5)), TERM)


def test_verify_rfrxc_divergence_inside_call():
    p = parse_program(
        "(program (iface (f (-> nat nat))) (fun f (x nat) nat (call f x)))", "src"
    )
    report = verify_rfrxc([p], parse_context("(call f 1)", "tgt"), [], 1000)
    assert report.passed
    assert report.outcomes[0].wanted.end == DIV


def test_pipeline_random_instances():
    """Composition: the final stage never fails when earlier stages pass."""
    rng = random.Random(31)
    passed = 0
    while passed < 40:
        iface = gen_iface(rng, max_funs=2)
        k = rng.randint(1, 4)
        programs = [gen_src_program(rng, iface, depth=2) for _ in range(k)]
        ctx = gen_tgt_context(rng, [e.fname for e in iface], depth=2)
        script = [rng.choice((0, 1)) for _ in range(3)]
        report = verify_rfrxc(programs, ctx, script, 2000)
        stages = {s.name: s.ok for s in report.stages}
        if not stages.get("compile_link_run", False):
            continue
        assert report.passed, (
            [s for s in report.stages if not s.ok],
            context_to_sexpr(ctx.body) if hasattr(ctx, "body") else ctx,
            report.outcomes,
        )
        passed += 1


def test_bounded_rrhp_behavior_equality():
    """Behaviors of C_T[⦇P⦈] and ⟨⟨C_T⟩⟩[P] agree over bounded scripts."""
    rng = random.Random(37)
    passed = 0
    while passed < 25:
        iface = gen_iface(rng, max_funs=2)
        pool = [gen_src_program(rng, iface, depth=2) for _ in range(4)]
        tgt_ctx = gen_tgt_context(rng, [e.fname for e in iface], depth=2)
        try:
            src_ctx = backtranslate_ctx(tgt_ctx, iface)
        except Exception:
            continue
        ok_instance = True
        for p in pool:
            tgt_b = behaviors_of(
                link_target(compile_program(p), tgt_ctx), (0, 1), 3, 1500
            )
            src_b = behaviors_of(link_source(p, src_ctx), (0, 1), 3, 1500)
            if tgt_b != src_b:
                ok_instance = False
                break
        assert ok_instance, (
            context_to_sexpr(tgt_ctx),
            sorted(map(repr, tgt_b)),
            sorted(map(repr, src_b)),
        )
        passed += 1


def test_backward_compiler_correctness_harvested():
    """Compiled and source programs agree on the program-side partial
    semantics for traces harvested from real runs."""
    rng = random.Random(73)
    checked = 0
    while checked < 200:
        iface = gen_iface(rng, max_funs=2)
        program = gen_src_program(rng, iface, depth=2)
        ctx = gen_tgt_context(rng, [e.fname for e in iface], depth=2)
        compiled = compile_program(program)
        try:
            whole = link_target(compiled, ctx)
        except Exception:
            continue
        script = [rng.choice((0, 1)) for _ in range(3)]
        mu = run_whole(whole, script, 2000, informative=True).trace
        assert prg_accepts(compiled, mu, iface, budget=2000)
        assert prg_accepts(program, mu, iface, budget=2000)
        checked += 1
