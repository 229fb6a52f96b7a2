import json
from pathlib import Path

import pytest

from conftest import fixture
from mixtest.checker import (
    CONCURRENCY_BUG,
    MIXING_BUG,
    NO_BUG,
    concurrency_bug,
    lint_const_mutable,
    mixing_bug,
    translate_outcome,
)
from mixtest.litmus import parse_source
from mixtest.mixer import compile_whole
from mixtest.oracle import saturate_fences
from mixtest.profiles import bundled_profile

GOLDEN = Path(__file__).parent / "golden"
V8 = "clang-armv8-O3"


def profiles(*names):
    return [bundled_profile(n) for n in names]


def test_whole_armv7_compilation_is_correct(sb):
    c = compile_whole(sb, bundled_profile("clang-armv7a-O3-buggy"))
    bug, evidence = concurrency_bug(sb, c)
    assert not bug and not evidence


def test_mixed_fig1_is_a_concurrency_bug(sb):
    bug, evidence = concurrency_bug(sb, fixture("SB-mixed"))
    assert bug
    assert all(sb.pred.holds(o) for o in evidence)
    assert {(dict(o)["P0:t"], dict(o)["P1:u"]) for o in evidence} == {(0, 0)}


def test_saturated_compilation_has_no_bug(sb):
    for name in ("clang-armv8-O3", "proposed-rcpc", "clang-armv7a-O3-buggy"):
        c = saturate_fences(compile_whole(sb, bundled_profile(name)))
        assert not concurrency_bug(sb, c)[0]


def test_translate_outcome_reads_observation_map(sb):
    c = fixture("SB-mixed")
    o = (("P0:R0", 0), ("P1:R0", 1), ("P0:X1", 7), ("x", 1), ("y", 1))
    assert translate_outcome(sb, c, o) == (("P0:t", 0), ("P1:u", 1), ("x", 1), ("y", 1))


def test_translate_128_bit_register_pair():
    s = fixture("SB-128")
    c = compile_whole(s, bundled_profile("clang-armv8.4-O3-buggy"))
    lo, hi = c.obs_map.lookup(0, "r0")
    o = ((f"P0:X{lo}", 1), (f"P0:X{hi}", 2), (f"P1:X{lo}", 0), (f"P1:X{hi}", 0), ("x", 1), ("y", 1))
    got = dict(translate_outcome(s, c, o))
    assert got["P0:r0"] == 1 | 2 << 64


def test_fig1_report(sb):
    r = mixing_bug(sb, profiles(V8, "clang-armv7a-O3-buggy"))
    assert r.verdict == MIXING_BUG and r.exit_code == 1
    assert r.stats["assignments"] == 16
    members = [a.as_dict() for w in r.witnesses for a in w.assignments]
    assert {V8: ["P0_0", "P1_0"], "clang-armv7a-O3-buggy": ["P0_1", "P1_1"]} in members
    assert not any(w.pure for w in r.witnesses)
    assert all(w.predicate_satisfied for w in r.witnesses)


def test_fig1_fixed(sb):
    r = mixing_bug(sb, profiles(V8, "clang-armv7a-O3-fixed"))
    assert r.verdict == NO_BUG and r.exit_code == 0 and not r.witnesses


def test_pure_assignments_are_no_bug(sb):
    for name in (V8, "clang-armv7a-O3-buggy", "proposed-rcpc"):
        assert mixing_bug(sb, profiles(name)).verdict == NO_BUG


def test_rcpc_mixing(sb):
    r = mixing_bug(sb, profiles(V8, "proposed-rcpc"))
    assert r.verdict == MIXING_BUG


def test_swp_concurrency_bug():
    for name in ("MP-RMW", "MP-RMW-fence"):
        t = fixture(name)
        assert mixing_bug(t, profiles("clang-armv8.2-swp-buggy")).verdict == CONCURRENCY_BUG
        assert mixing_bug(t, profiles("clang-armv8.2-swp-fixed")).verdict == NO_BUG


def test_concurrency_bug_wins_over_mixing():
    r = mixing_bug(fixture("MP-RMW"), profiles("clang-armv8.2-swp-buggy", "clang-armv8.2-swp-fixed"))
    assert r.verdict == CONCURRENCY_BUG
    assert any(w.pure for w in r.witnesses)
    # the group holding the pure buggy compilation also holds mixed members
    # that pick the same code for the exchange
    assert any(not a.is_pure for w in r.witnesses for a in w.assignments)


def test_128_bit_mixing():
    r = mixing_bug(fixture("SB-128"), profiles("clang-armv8-base-128", "clang-armv8.4-O3-buggy"))
    assert r.verdict == MIXING_BUG
    want = {"clang-armv8.4-O3-buggy": ["P0_0", "P0_1", "P1_1"], "clang-armv8-base-128": ["P1_0"]}
    assert want in [a.as_dict() for w in r.witnesses for a in w.assignments]


def test_golden_text(sb):
    r = mixing_bug(sb, profiles(V8, "clang-armv7a-O3-buggy"))
    assert r.to_text() == (GOLDEN / "fig1-buggy.txt").read_text()


def test_golden_json(sb):
    r = mixing_bug(sb, profiles(V8, "clang-armv7a-O3-buggy"))
    assert r.to_json() + "\n" == (GOLDEN / "fig1-buggy.json").read_text()
    doc = json.loads(r.to_json())
    assert set(doc) == {"test", "profiles", "verdict", "witnesses", "stats", "warnings"}


def test_timing_is_opt_in(sb):
    r = mixing_bug(sb, profiles(V8), timing=True)
    assert "wall_time" in r.stats
    assert "wall_time" not in mixing_bug(sb, profiles(V8)).stats


def test_jobs_do_not_change_report(sb):
    ps = profiles(V8, "clang-armv7a-O3-buggy")
    assert mixing_bug(sb, ps, jobs=1).to_json() == mixing_bug(sb, ps, jobs=4).to_json()


def test_lint_exclusive_loop_load():
    t = fixture("CONST-128")
    warnings = lint_const_mutable(t, bundled_profile("clang-armv8-base-128"))
    assert len(warnings) == 1 and "STXP" in warnings[0] and "P0_0" in warnings[0]
    assert lint_const_mutable(t, bundled_profile("clang-armv8.1-lse")) == []


def test_lint_needs_read_only_marker():
    t = fixture("SB-128")
    assert lint_const_mutable(t, bundled_profile("clang-armv8-base-128")) == []


def test_lint_golden():
    r = mixing_bug(fixture("CONST-128"), profiles("clang-armv8-base-128"))
    assert r.to_text() == (GOLDEN / "const-128.txt").read_text()


def test_models_must_match_levels(sb):
    with pytest.raises(ValueError):
        mixing_bug(sb, profiles(V8), source_model="arm")


def test_discarded_result_source():
    t = parse_source(
        "C D\n{ x:32=0; }\nP0 {\n  _ = exchange(x, 1, relaxed);\n}\nP1 {\n  r0 = load(x, relaxed);\n}\nexists (P1:r0=1)\n"
    )
    assert mixing_bug(t, profiles(V8, "clang-armv8.1-lse")).verdict == NO_BUG


def test_relaxed_load_buffering_is_reported():
    # The source model forbids relaxed load buffering outright (po and rf
    # together must be acyclic) while the hardware model allows it, so a
    # plain LDR/STR compilation is flagged by every profile.  This is a
    # property of the source model, not of any mapping.
    t = parse_source(
        "C LB\n{ x:32=0; y:32=0; }\n"
        "P0 {\n  r0 = load(x, relaxed);\n  store(y, 1, relaxed);\n}\n"
        "P1 {\n  r0 = load(y, relaxed);\n  store(x, 1, relaxed);\n}\n"
        "exists (P0:r0=1 /\\ P1:r0=1)\n"
    )
    for name in (V8, "clang-armv8.1-lse", "clang-armv7a-O3-fixed"):
        r = mixing_bug(t, profiles(name))
        assert r.verdict == CONCURRENCY_BUG
        assert all(w.predicate_satisfied for w in r.witnesses)
