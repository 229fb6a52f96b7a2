import pytest

from conftest import fixture, fixture_text
from mixtest.engine import outcomes
from mixtest.generator import generate
from mixtest.litmus import parse_asm, parse_source


def allowed(test, model):
    return any(test.pred.holds(o) for o in outcomes(test, model))


def src(body, pred, init="x:32=0; y:32=0;"):
    return parse_source(f"C T\n{{ {init} }}\n{body}exists ({pred})\n")


MP = """P0 {{
  store(x, 1, relaxed);
  store(y, 1, {w});
}}
P1 {{
  r0 = load(y, {r});
  r1 = load(x, relaxed);
}}
"""

LB = """P0 {
  r0 = load(x, relaxed);
  store(y, 1, relaxed);
}
P1 {
  r0 = load(y, relaxed);
  store(x, 1, relaxed);
}
"""


def test_sb_sc_forbidden(sb):
    assert not allowed(sb, "rc11")
    assert not allowed(sb, "rc11-psc")


def test_mp_release_acquire():
    assert not allowed(src(MP.format(w="release", r="acquire"), "P1:r0=1 /\\ P1:r1=0"), "rc11")
    assert allowed(src(MP.format(w="relaxed", r="acquire"), "P1:r0=1 /\\ P1:r1=0"), "rc11")
    assert allowed(src(MP.format(w="release", r="relaxed"), "P1:r0=1 /\\ P1:r1=0"), "rc11")


def test_relaxed_lb_forbidden():
    assert not allowed(src(LB, "P0:r0=1 /\\ P1:r0=1"), "rc11")


def test_relaxed_sb_allowed():
    body = fixture_text("SB").split("}", 1)[1].rsplit("exists", 1)[0].replace("seq_cst", "relaxed")
    assert allowed(src(body, "P0:t=0 /\\ P1:u=0"), "rc11")


def test_mp_rmw_forbidden_at_source():
    assert not allowed(fixture("MP-RMW"), "rc11")
    assert not allowed(fixture("MP-RMW-fence"), "rc11")


@pytest.mark.parametrize(
    "name, expected",
    [
        ("SB-armv7", False),
        ("SB-armv8", False),
        ("SB-mixed", True),
        ("SB-rcpc-mixed", True),
        ("LB", True),
        ("LB-glue", True),
        ("MP-SWP", True),
    ],
)
def test_arm_verdicts(name, expected):
    assert allowed(fixture(name), "arm") is expected


def test_ldapr_is_weaker_than_ldar():
    weak = fixture("SB-rcpc-mixed")
    strong = parse_asm(fixture_text("SB-rcpc-mixed").replace("LDAPR W0,[X2]", "LDAR W0,[X2] "))
    assert outcomes(strong, "arm") <= outcomes(weak, "arm")
    assert not allowed(strong, "arm")


def test_leading_barrier_fixes_mixed_sb():
    text = fixture_text("SB-mixed")
    fixed = text.replace(" LDR R0,[R3] | LDR R0,[R2] ;", " DMB ISH     | DMB ISH     ;\n LDR R0,[R3] | LDR R0,[R2] ;")
    assert allowed(parse_asm(text), "arm")
    assert not allowed(parse_asm(fixed), "arm")


def test_zero_register_swap_escapes_load_barrier():
    text = fixture_text("MP-SWP")
    assert allowed(parse_asm(text), "arm")
    assert not allowed(parse_asm(text.replace("SWPL W3,WZR,[X2]", "SWPL W3,W4,[X2] ")), "arm")
    assert not allowed(parse_asm(text.replace("DMB ISHLD", "DMB ISH  ")), "arm")


def test_barriers_restore_sc():
    text = fixture_text("LB")
    fenced = text.replace(" MOV X3,#1    | MOV X3,#1    ;", " DMB ISH      | DMB ISH      ;\n MOV X3,#1    | MOV X3,#1    ;")
    assert not allowed(parse_asm(fenced), "arm")


def test_rc11_and_psc_agree_on_generated_tests():
    tests = generate([32], ["relaxed", "release", "acquire", "seq_cst"], ["SB", "MP", "SB-RMW"])
    assert len(tests) > 40
    for t in tests:
        assert outcomes(t, "rc11") == outcomes(t, "rc11-psc"), t.name
