import itertools
from importlib import resources

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import fixture
from mixtest.engine import outcomes
from mixtest.litmus import canonical_hash, parse_source, render_asm
from mixtest.mixer import (
    MixAssignment,
    MixError,
    combine,
    compile_test,
    compile_whole,
    enumerate_assignments,
    insert_branch_glue,
    missing_mappings,
    mix,
    split,
    split_units,
)
from mixtest.profiles import bundled_profile, load_profile

V8 = "clang-armv8-O3"
V7 = "clang-armv7a-O3-buggy"

COND = """C COND
{ x:32=0; y:32=0; }
P0 {
  r0 = load(x, acquire);
  if (r0 == 1) {
    store(y, 1, relaxed);
  }
}
P1 {
  store(x, 1, release);
}
exists (P0:r0=1 /\\ y=1)
"""


def fig1_profiles():
    return [bundled_profile(V8), bundled_profile(V7)]


def fig1d_assignment():
    return MixAssignment.from_dict({V8: {"P0_0", "P1_0"}, V7: {"P0_1", "P1_1"}})


def test_split_fig1(sb):
    assert [iid for iid, _ in split(sb)] == ["P0_0", "P0_1", "P1_0", "P1_1"]


def test_split_single_instruction():
    t = parse_source("C ONE\n{ x:32=0; }\nP0 {\n  store(x, 1, relaxed);\n}\nexists (x=1)\n")
    assert [iid for iid, _ in split(t)] == ["P0_0"]


def test_split_counts_conditional_block():
    # hand count: load, the if header, the store inside it, the other thread's store
    t = parse_source(COND)
    assert [iid for iid, _ in split(t)] == ["P0_0", "P0_1", "P0_2", "P1_0"]
    assert split_units(t, "thread") == [("P0_0", "P0_1", "P0_2"), ("P1_0",)]


@pytest.mark.parametrize("n_profiles, n_iids", [(1, 4), (2, 4), (3, 2), (2, 1), (3, 3), (4, 2), (2, 6)])
def test_count_law(n_profiles, n_iids):
    iids = [f"P0_{k}" for k in range(n_iids)]
    names = [f"p{k}" for k in range(n_profiles)]
    got = enumerate_assignments(iids, names)
    assert len(got) == n_profiles**n_iids
    assert len(set(got)) == len(got)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), st.integers(1, 5))
def test_assignments_partition_the_iids(n_profiles, n_iids):
    iids = [f"P{k % 2}_{k // 2}" for k in range(n_iids)]
    names = [f"p{k}" for k in range(n_profiles)]
    for a in enumerate_assignments(iids, names):
        seen = [iid for _, group in a.groups for iid in group]
        assert sorted(seen) == sorted(iids)
        assert all(a.profile_of(i) in names for i in iids)


def test_assignment_order_is_lexicographic_and_stable():
    iids = ["P0_0", "P0_1", "P1_0"]
    first = enumerate_assignments(iids, ["b", "a"])
    assert first == enumerate_assignments(iids, ["a", "b"])
    choices = [tuple(a.profile_of(i) for i in iids) for a in first]
    assert choices == list(itertools.product("ab", repeat=3))


def test_cap():
    with pytest.raises(MixError, match="cap"):
        enumerate_assignments([f"P0_{k}" for k in range(11)], ["a", "b"], cap=1000)
    assert len(enumerate_assignments(["P0_0"], ["a", "b"], cap=2)) == 2


def test_assignment_text():
    a = fig1d_assignment()
    assert str(a) == "{clang-armv7a-O3-buggy -> {P0_1,P1_1}; clang-armv8-O3 -> {P0_0,P1_0}}"
    assert not a.is_pure
    assert MixAssignment.from_dict(a.as_dict()) == a


def test_compile_fig1_mixed_matches_fixture(sb):
    profiles = fig1_profiles()
    a = fig1d_assignment()
    frags, layouts = compile_test(sb, a, profiles)
    c = combine(sb, a, frags, layouts, profiles)
    ref = fixture("SB-mixed")
    alias = {"STL": "STLR"}
    assert [alias.get(i.op, i.op) for i in c.threads[0].instrs] == [
        alias.get(i.op, i.op) for i in ref.threads[0].instrs
    ]
    pred = {(0, 0): "t", (1, 0): "u"}
    assert {(pred[(x.thread, 0)], x.value) for x in c.pred.atoms} == {("t", 0), ("u", 0)}
    assert outcomes(c, "arm") == outcomes(ref, "arm")


def test_compile_per_instruction_profile(sb):
    a = fig1d_assignment()
    frags, _ = compile_test(sb, a, fig1_profiles())
    by_iid = frags
    assert [str(i) for i in by_iid["P0_1"].instrs] == ["LDR R0,[R2]", "DMB ISH"]
    assert [i.op for i in by_iid["P0_0"].instrs] == ["MOV", "STLR"]


def test_combine_preserves_init_and_predicate(sb):
    cs = mix(sb, fig1_profiles())
    for e in cs.entries:
        assert e.test.init == sb.init
        assert [a.value for a in e.test.pred.atoms] == [0, 0]
        assert e.test.obs_map.registers()


def test_single_profile_equals_whole_compilation(sb):
    p = bundled_profile(V8)
    cs = mix(sb, [p])
    assert len(cs) == 1 and len(cs.entries) == 1
    assert render_asm(cs.entries[0].test) == render_asm(compile_whole(sb, p))


def test_fig1_counts(sb):
    cs = mix(sb, fig1_profiles())
    assert len(cs.entries) == 16
    # every assignment yields a different program text here
    assert len(cs) == 16


def test_identical_profiles_collapse_to_one_group(sb):
    src = (resources.files("mixtest") / "data" / "profiles" / f"{V8}.profile").read_text()
    twin = load_profile(src.replace(f"profile {V8}", "profile twin"))
    cs = mix(sb, [bundled_profile(V8), twin])
    assert len(cs.entries) == 16
    assert len(cs) == 1


def test_buggy_and_fixed_armv7_dedup(sb):
    cs = mix(sb, [bundled_profile(V7), bundled_profile("clang-armv7a-O3-fixed")])
    assert len(cs.entries) == 16
    assert len(cs) == 4


def test_order_preserved_within_threads(sb):
    cs = mix(sb, fig1_profiles())
    for e in cs.entries:
        for th in e.test.threads:
            origins = [i.origin for i in th.instrs if i.origin]
            assert origins == sorted(origins, key=lambda o: int(o.split("_")[1]))


def test_unsupported_mapping_names_iid():
    t = fixture("SB-128")
    with pytest.raises(MixError, match="P0_0"):
        mix(t, [bundled_profile(V7)])
    missing = missing_mappings(t, [bundled_profile(V7)])
    assert missing[0][:2] == ("P0_0", V7)


def test_conditional_compiles_to_compare_and_branch():
    t = parse_source(COND)
    c = compile_whole(t, bundled_profile(V8))
    ops = [i.op for i in c.threads[0].instrs]
    assert ops[:4] == ["LDAR", "CMP", "B.NE", "MOV"]
    assert ops[-1] == "LABEL"
    assert outcomes(c, "arm")


def test_glue_layout_and_neutrality(sb):
    profiles = fig1_profiles()
    a = fig1d_assignment()
    frags, layouts = compile_test(sb, a, profiles)
    plain = combine(sb, a, frags, layouts, profiles)
    glued = combine(sb, a, frags, layouts, profiles, glue=True)
    ops = [str(i) for i in glued.threads[0].instrs]
    assert ops[:3] == ["BL F0", "BL F1", "B FEND"]
    assert ops[-1] == "FEND:"
    assert ops.count("RET") == 2
    assert outcomes(glued, "arm") == outcomes(plain, "arm")
    assert canonical_hash(glued) != canonical_hash(plain)


def test_glue_is_idempotent(sb):
    glued = compile_whole(sb, bundled_profile(V8), glue=True)
    assert insert_branch_glue(glued) == glued


def test_glue_on_empty_fragment():
    t = parse_source("C F\n{ x:32=0; }\nP0 {\n  fence(acquire);\n  store(x, 1, relaxed);\n}\nexists (x=1)\n")
    p = load_profile(
        "profile nofence arch=aarch64\n"
        "map fence mo=acquire:\nend\n"
        "map store w=32 mo=relaxed:\n STR WZR, [{addr}]\nend\n"
    )
    plain = compile_whole(t, p)
    glued = compile_whole(t, p, glue=True)
    assert outcomes(glued, "arm") == outcomes(plain, "arm")


def test_glue_needs_fragment_boundaries():
    with pytest.raises(MixError, match="fragment boundaries"):
        insert_branch_glue(fixture("SB-mixed"))


def test_thread_granularity(sb):
    cs = mix(sb, fig1_profiles(), granularity="thread")
    assert len(cs.entries) == 4
    for e in cs.entries:
        a = e.mixtest.assignment
        assert a.profile_of("P0_0") == a.profile_of("P0_1")
