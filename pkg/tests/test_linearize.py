import random

import pytest

from conftest import proc
from deacp import gen as G
from deacp import terms as T
from deacp.bisim import decide_rb
from deacp.errors import CfarInapplicableError, UnsupportedFragmentError
from deacp.linear import (
    analyze_clusters,
    apply_cfar,
    cluster_of,
    linearize,
    normalize_bool_conditional,
    prove_equal,
    replay_certificate,
)
from deacp.parser import render_term
from deacp.sos_sigma import build_lts


CLUSTER_SRC = (
    "rec X where { X = [true] -> a . Y + [true] -> b . Z,"
    " Y = [true] -> a . X + [true] -> c . Z, Z = [true] -> epsilon }"
)


def hide_a(spec, text):
    return proc(spec, f"hide{{a}}({text})")


def oracle_equal(t, spec_var, ctx):
    spec, var = spec_var
    return decide_rb(t, T.RecConst(var, spec), ctx)


def test_linearize_sequential_chain(base_spec, ctx):
    spec, var = linearize(proc(base_spec, "a . b"), ctx)
    assert T.is_guarded_linear_spec(spec)
    # three equations: a-step, b-step, termination
    order = list(spec.variables)
    assert len(order) == 3
    lts = build_lts(T.RecConst(var, spec), ctx)
    assert len(lts.states) == 3 and lts.num_transitions == 2


def test_linearize_subtraction_example(base_spec, ctx):
    t = proc(
        base_spec,
        "eval{sigma}(d := i . ([d >= j] -> d := d - j + [d < j] -> d := j - d))",
    )
    spec, var = linearize(t, ctx)
    lts = build_lts(T.RecConst(var, spec), ctx)
    from deacp.parser import render_action

    labels = []
    sid = lts.root
    while lts.transitions[sid]:
        assert len(lts.transitions[sid]) == 1
        _, action, sid = lts.transitions[sid][0]
        labels.append(render_action(action))
    assert labels == ["d := 11", "d := 8"]


def test_linearize_left_merge_oracle(base_spec, ctx):
    spec, var = linearize(proc(base_spec, "a ||_ b"), ctx)
    assert decide_rb(T.RecConst(var, spec), proc(base_spec, "a . b"), ctx).equivalent


def test_linearize_outputs_are_guarded_linear_and_equivalent(small_ctx):
    rng = random.Random(55)
    cfg = G.GenConfig(max_depth=2)
    for _ in range(40):
        t = G.random_proc(rng, cfg, small_ctx, rng.randint(0, 3))
        spec, var = linearize(t, small_ctx)
        assert T.is_guarded_linear_spec(spec)
        assert decide_rb(T.RecConst(var, spec), t, small_ctx).equivalent, render_term(t)


def test_linearize_rejects_abstraction(base_spec, ctx):
    with pytest.raises(UnsupportedFragmentError):
        linearize(proc(base_spec, "hide{a}(a)"), ctx)


def test_analyze_clusters_on_the_cycle_example(base_spec, ctx):
    const = proc(base_spec, CLUSTER_SRC)
    patterns = (T.ActionPattern("name", "a"),)
    analysis = analyze_clusters(const.spec, patterns)
    cyclic = [c for c in analysis.clusters if c.cyclic]
    assert len(cyclic) == 1
    cluster = cyclic[0]
    assert set(cluster.members) == {"X", "Y"}
    assert [render_term(t) for t in cluster.exit_terms] == [
        "[true] -> b . Z",
        "[true] -> c . Z",
    ]
    assert cluster.conservative


def test_analyze_clusters_singletons_without_hiding(base_spec, ctx):
    const = proc(
        base_spec,
        "rec X where { X = [true] -> a . Y, Y = [true] -> epsilon }",
    )
    analysis = analyze_clusters(const.spec, ())
    assert [c.members for c in analysis.clusters] == [("X",), ("Y",)]
    assert all(not c.cyclic and c.conservative for c in analysis.clusters)


def test_cluster_of_flags_unreachable_exit(base_spec, ctx):
    # Y cannot reach the exit carried by X, so {X, Y} is not conservative.
    const = proc(
        base_spec,
        "rec X where { X = [true] -> a . Y + [true] -> b . Z,"
        " Y = [true] -> a . Y, Z = [true] -> epsilon }",
    )
    info = cluster_of(const.spec, (T.ActionPattern("name", "a"),), ("X", "Y"))
    assert info.is_cluster
    assert not info.conservative


def test_apply_cfar_on_the_paper_shape(base_spec, ctx):
    const = proc(base_spec, CLUSTER_SRC)
    patterns = (T.ActionPattern("name", "a"),)
    rhs, step = apply_cfar(const.spec, "X", patterns, ctx)
    assert step.details["cluster"] == ["X", "Y"]
    assert step.details["exits"] == ["[true] -> b . Z", "[true] -> c . Z"]
    # the rewritten side is the silent prefix over the abstracted exit sum
    assert isinstance(rhs, T.Seq) and isinstance(rhs.left.action, T.TauAction)
    assert decide_rb(step.before, step.after, ctx).equivalent


def test_apply_cfar_degenerate_singleton(base_spec, ctx):
    const = proc(
        base_spec,
        "rec X where { X = [true] -> a . X + [true] -> b . Z, Z = [true] -> epsilon }",
    )
    rhs, step = apply_cfar(const.spec, "X", (T.ActionPattern("name", "a"),), ctx)
    assert step.details["cluster"] == ["X"]
    assert decide_rb(step.before, step.after, ctx).equivalent


def test_apply_cfar_livelock_yields_inaction_sum(base_spec, ctx):
    const = proc(base_spec, "rec X where { X = [true] -> a . X }")
    rhs, step = apply_cfar(const.spec, "X", (T.ActionPattern("name", "a"),), ctx)
    assert render_term(rhs) == "tau . hide{a}(delta)"
    assert decide_rb(step.before, step.after, ctx).equivalent


def test_apply_cfar_requires_a_conservative_cluster(base_spec, ctx):
    const = proc(
        base_spec,
        "rec X where { X = [true] -> a . Y + [true] -> b . X,"
        " Y = [true] -> a . X, Z = [true] -> epsilon }",
    )
    with pytest.raises(CfarInapplicableError):
        apply_cfar(const.spec, "X", (T.ActionPattern("name", "a"),), ctx)


def test_normalize_cfar_example(base_spec, ctx):
    spec, var, cert = normalize_bool_conditional(hide_a(base_spec, CLUSTER_SRC), ctx)
    assert T.is_guarded_linear_spec(spec)
    assert decide_rb(
        T.RecConst(var, spec), proc(base_spec, "b + tau . (b + c)"), ctx
    ).equivalent
    assert any(s.rule == "CFAR" for s in cert.steps)


def test_normalize_empty_hide(base_spec, ctx):
    spec, var, _ = normalize_bool_conditional(proc(base_spec, "hide{}(a . b)"), ctx)
    assert decide_rb(T.RecConst(var, spec), proc(base_spec, "a . b"), ctx).equivalent


def test_normalize_hidden_atom_is_silent_step(base_spec, ctx):
    spec, var, _ = normalize_bool_conditional(proc(base_spec, "hide{a}(a)"), ctx)
    assert decide_rb(T.RecConst(var, spec), proc(base_spec, "tau"), ctx).equivalent


def test_normalize_rejects_contingent_conditions(base_spec, ctx):
    with pytest.raises(UnsupportedFragmentError):
        normalize_bool_conditional(proc(base_spec, "hide{a}([v = 0] -> a)"), ctx)


def test_prove_cites_single_axiom(base_spec, ctx):
    result = prove_equal(proc(base_spec, "a + delta"), proc(base_spec, "a"), ctx)
    assert result.equal
    assert [s.rule for s in result.certificate.steps] == ["A6"]
    ok, issues = replay_certificate(result.certificate, ctx)
    assert ok, issues


def test_prove_subtraction_example(base_spec, ctx):
    left = proc(
        base_spec,
        "eval{sigma}(d := i . ([d >= j] -> d := d - j + [d < j] -> d := j - d))",
    )
    right = proc(base_spec, "d := 11 . d := 8")
    result = prove_equal(left, right, ctx)
    assert result.equal
    ok, issues = replay_certificate(result.certificate, ctx)
    assert ok, issues


def test_prove_division_recursion_equals_its_chain(base_spec, ctx):
    left = proc(
        base_spec,
        "eval{sigma}(q := 0 . r := i . rec Q where {"
        " Q = [r >= j] -> q := q + 1 . R + [r < j] -> epsilon,"
        " R = [true] -> r := r - j . Q })",
    )
    right = proc(
        base_spec,
        "q := 0 . r := 11 . q := 1 . r := 8 . q := 2 . r := 5 . q := 3 . r := 2",
    )
    result = prove_equal(left, right, ctx)
    assert result.equal
    ok, issues = replay_certificate(result.certificate, ctx)
    assert ok, issues


def test_prove_distinguishes(base_spec, ctx):
    result = prove_equal(proc(base_spec, "a"), proc(base_spec, "b"), ctx)
    assert not result.equal
    assert result.counterexample is not None


def test_prove_bool_conditional_with_hiding(base_spec, ctx):
    left = hide_a(base_spec, CLUSTER_SRC)
    right = proc(base_spec, "b + tau . (b + c)")
    result = prove_equal(left, right, ctx)
    assert result.equal
    rules = [s.rule for s in result.certificate.steps]
    assert "RSP" in rules and "CFAR" in rules
    ok, issues = replay_certificate(result.certificate, ctx)
    assert ok, issues


def test_certificates_replay_on_rewritten_pairs(small_ctx):
    rng = random.Random(77)
    cfg = G.GenConfig(max_depth=2, allow_abstr=False)
    for _ in range(15):
        t1, t2, _ = G.rewritten_pair(rng, cfg, small_ctx)
        result = prove_equal(t1, t2, small_ctx)
        assert result.equal
        ok, issues = replay_certificate(result.certificate, small_ctx)
        assert ok, issues
