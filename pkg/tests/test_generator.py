import pytest

from conftest import fixture

from mixtest.engine import outcomes
from mixtest.generator import (
    SHAPES,
    canonical_symmetry_key,
    generate,
    instantiate_shape,
    symmetry_reduce,
    template,
)
from mixtest.litmus import parse_source, render_source, validate_source
from mixtest.profiles import bundled_profile


def swapped(t):
    """The same test with its two threads exchanged and renumbered."""
    text = render_source(t)
    p0 = text.index("P0 {")
    p1 = text.index("P1 {")
    end = text.index("exists")
    a, b = text[p0 + 4 : p1], text[p1 + 4 : end]
    out = text[:p0] + "P0 {" + b + "P1 {" + a + text[end:]
    out = out.replace("P0:", "Q:").replace("P1:", "P0:").replace("Q:", "P1:")
    return parse_source(out)


def test_sb_seq_cst_32_is_fig1(sb):
    got = generate([32], ["seq_cst"], ["SB"])
    assert len(got) == 1
    t = got[0]
    assert t.threads == sb.threads and t.init == sb.init and t.pred == sb.pred


def test_sb_rmw_128():
    ps = [bundled_profile("clang-armv8-base-128"), bundled_profile("clang-armv8.4-O3-buggy")]
    got = generate([128], ["seq_cst"], ["SB-RMW"], profiles=ps)
    assert [t.name for t in got] == ["SB-RMW-128-sc-sc-sc-sc"]
    assert not any(got[0].pred.holds(o) for o in outcomes(got[0], "rc11"))


def test_mp_rmw_shape_matches_fixture():
    got = generate([32], ["relaxed", "release", "acq_rel"], ["MP-RMW"], reduce=False)
    ref = fixture("MP-RMW")
    match = [t for t in got if t.threads == ref.threads and t.pred == ref.pred]
    assert len(match) == 1
    assert not any(ref.pred.holds(o) for o in outcomes(match[0], "rc11"))


def test_every_generated_test_validates():
    for t in generate([32, 64], ["relaxed", "seq_cst"], rmw_ops=["exchange", "fetch_add", "cas"]):
        validate_source(t)
        assert parse_source(render_source(t)) == t


def test_invalid_orders_are_skipped():
    got = generate([32], ["release"], ["MP"])
    # loads cannot be release, so no MP test can be built from release alone
    assert got == []


def test_fetch_add_skipped_at_128():
    got = generate([128], ["seq_cst"], ["SB-RMW"], rmw_ops=["fetch_add", "exchange"])
    assert [t.name for t in got] == ["SB-RMW-128-sc-sc-sc-sc"]


def test_profile_filter():
    v7 = bundled_profile("clang-armv7a-O3-buggy")
    got = generate([32, 64], ["seq_cst"], ["SB", "SB-RMW"], profiles=[v7])
    assert [t.name for t in got] == ["SB-32-sc-sc-sc-sc"]


def test_matrix_size():
    orders = ["relaxed", "acquire", "release", "acq_rel", "seq_cst"]
    full = generate([32, 64], orders, reduce=False)
    reduced = generate([32, 64], orders)
    assert len(full) == 1206
    assert len(reduced) == 852


def test_empty_matrix_rejected():
    with pytest.raises(ValueError):
        generate([], ["seq_cst"])
    with pytest.raises(ValueError):
        template("IRIW")


def test_symmetry_swapped_sb_collapses(sb):
    twin = swapped(sb)
    assert twin != sb
    assert canonical_symmetry_key(twin) == canonical_symmetry_key(sb)
    assert symmetry_reduce([sb, twin]) == [sb]


def test_symmetry_keeps_distinct_shapes(sb):
    mp = generate([32], ["seq_cst"], ["MP"])[0]
    assert symmetry_reduce([sb, mp]) == [sb, mp]
    assert symmetry_reduce([mp]) == [mp]


def test_asymmetric_orders_survive():
    a = instantiate_shape(template("SB"), 32, ["seq_cst", "relaxed", "seq_cst", "seq_cst"], ["store", "load"] * 2)
    b = instantiate_shape(template("SB"), 32, ["seq_cst", "seq_cst", "seq_cst", "relaxed"], ["store", "load"] * 2)
    assert symmetry_reduce([a, b]) == [a]


def test_shapes_listed():
    assert set(SHAPES) == {"SB", "MP", "LB", "SB-RMW", "MP-RMW"}
