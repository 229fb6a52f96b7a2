import pytest

from mixtest.profiles import (
    Binding,
    MappingKey,
    ProfileError,
    RegisterPool,
    UnsupportedMapping,
    bundled_names,
    bundled_profile,
    instantiate,
    load_profile,
    lookup,
    resolve_profile,
)


def ops(profile, key, **kw):
    entry = lookup(profile, key)
    pool = RegisterPool(kw.pop("first", 2))
    b = Binding(addr=1, width=key.width or 32, pool=pool, value=1, arch=profile.arch, **kw)
    return [str(i) for i in instantiate(entry, b)]


def test_all_bundled_profiles_load():
    names = bundled_names()
    assert "clang-armv8-O3" in names and "proposed-rcpc" in names
    for n in names:
        assert bundled_profile(n).name == n


def test_armv8_sc_load_is_ldar(profile):
    p = profile("clang-armv8-O3")
    assert lookup(p, MappingKey("load", 32, "seq_cst")).templates == ("LDAR {dst}, [{addr}]",)
    assert ops(p, MappingKey("load", 32, "seq_cst"), dst=(0,)) == ["LDAR W0,[X1]"]


def test_armv7_sc_store():
    p = bundled_profile("clang-armv7a-O3-buggy")
    got = ops(p, MappingKey("store", 32, "seq_cst"))
    assert [g.split()[0] for g in got] == ["MOV", "DMB", "STR", "DMB"]
    assert got[2] == "STR R2,[R1]"


def test_armv7_sc_load_buggy_vs_fixed():
    key = MappingKey("load", 32, "seq_cst")
    buggy = ops(bundled_profile("clang-armv7a-O3-buggy"), key, dst=(0,))
    fixed = ops(bundled_profile("clang-armv7a-O3-fixed"), key, dst=(0,))
    assert buggy == ["LDR R0,[R1]", "DMB ISH"]
    assert fixed == ["DMB ISH", "LDR R0,[R1]", "DMB ISH"]


def test_rcpc_sc_load():
    got = ops(bundled_profile("proposed-rcpc"), MappingKey("load", 32, "seq_cst"), dst=(0,))
    assert got == ["LDAPR W0,[X1]"]


def test_lse_release_exchange_with_unused_result():
    p = bundled_profile("clang-armv8.1-lse")
    got = ops(p, MappingKey("exchange", 32, "release", used=False))
    assert got[0] == "MOV W2,#1"
    assert got[1].startswith("SWPL W2,W")
    assert lookup(p, MappingKey("exchange", 32, "release", used=False)).derived


def test_exclusive_loop_instantiation():
    p = bundled_profile("clang-armv8-O3")
    got = ops(p, MappingKey("exchange", 32, "release"), dst=(4,))
    assert got == ["MOV W2,#1", "L0:", "LDXR W4,[X1]", "STLXR W3,W2,[X1]", "CBNZ W3,L0"]


def test_buggy_swp_discards_to_zero_register():
    p = bundled_profile("clang-armv8.2-swp-buggy")
    got = ops(p, MappingKey("exchange", 32, "acq_rel", used=False))
    assert got == ["MOV W2,#1", "SWPL W2,WZR,[X1]", "DMB ISHLD"]
    fixed = ops(bundled_profile("clang-armv8.2-swp-fixed"), MappingKey("exchange", 32, "acq_rel", used=False))
    assert "WZR" not in " ".join(fixed)


def test_fresh_labels_per_instantiation():
    p = bundled_profile("clang-armv8-O3")
    pool = RegisterPool(2)
    key = MappingKey("fetch_add", 32, "relaxed")
    first = instantiate(lookup(p, key), Binding(1, 32, pool, 1, dst=(0,)))
    second = instantiate(lookup(p, key), Binding(1, 32, pool, 1, dst=(5,)))
    assert str(first[0]) == "L0:" and str(second[0]) == "L1:"
    assert pool.next > 4


def test_unsupported_key_has_no_fallback():
    p = bundled_profile("clang-armv7a-O3-buggy")
    with pytest.raises(UnsupportedMapping):
        lookup(p, MappingKey("exchange", 128, "seq_cst"))
    with pytest.raises(UnsupportedMapping):
        lookup(p, MappingKey("load", 64, "seq_cst"))


HEAD = "profile t arch=aarch64\n"


def test_duplicate_key_rejected():
    text = HEAD + "map load w=32 mo=relaxed:\n LDR {dst}, [{addr}]\nend\n" * 2
    with pytest.raises(ProfileError, match="duplicate"):
        load_profile(text)


def test_store_needs_self_contained_template():
    ok = HEAD + "map store w=32 mo=relaxed:\n STR WZR, [{addr}]\nend\n"
    assert load_profile(ok).supports(MappingKey("store", 32, "relaxed"))
    bad = HEAD + "map store w=32 mo=relaxed:\n STR {tmp0}, [{addr}]\nend\n"
    with pytest.raises(ProfileError, match="before writing"):
        load_profile(bad)


@pytest.mark.parametrize(
    "body, msg",
    [
        ("map load w=32 mo=release:\n LDR {dst}, [{addr}]\nend\n", "cannot be"),
        ("map load w=32 mo=relaxed:\n MOV {tmp0}, #1\nend\n", "dst"),
        ("map load w=32 mo=relaxed:\n LDR {dst}, [{addr}]\n", "missing 'end'"),
        ("map load w=32 mo=relaxed:\n FROB {dst}, [{addr}]\nend\n", "does not instantiate"),
        ("map load w=32 mo=relaxed:\n LDR {bogus}, [{addr}]\nend\n", "placeholder"),
        ("map load w=32 mo=relaxed:\n B elsewhere\n LDR {dst}, [{addr}]\nend\n", "outside the fragment"),
        ("map fence w=32 mo=seq_cst:\n DMB ISH\nend\n", "no width"),
        ("map store w=32 mo=relaxed unused:\n STR WZR, [{addr}]\nend\n", "no result"),
    ],
)
def test_profile_validation(body, msg):
    with pytest.raises(ProfileError, match=msg):
        load_profile(HEAD + body)


def test_header_required():
    with pytest.raises(ProfileError, match="header"):
        load_profile("map load w=32 mo=relaxed:\n LDR {dst}, [{addr}]\nend\n")
    with pytest.raises(ProfileError, match="arch"):
        load_profile("profile t arch=x86\n")


def test_resolve_profile(tmp_path):
    f = tmp_path / "mine.profile"
    f.write_text(HEAD + "map fence mo=seq_cst:\n DMB ISH\nend\n")
    assert resolve_profile(str(f)).name == "t"
    assert resolve_profile("clang-armv8-O3").arch == "aarch64"
    with pytest.raises(ProfileError):
        resolve_profile(str(tmp_path / "absent.profile"))
    with pytest.raises(ProfileError):
        resolve_profile("no-such-profile")
