"""
Store buffering across two mapping tables
=========================================

Walk through the store-buffering test with every seq_cst access, compile it
one instruction at a time with two profiles, and look at which mixes let
both loads read zero.
"""

from importlib import resources

from mixtest.checker import mixing_bug
from mixtest.engine import format_outcome, outcomes
from mixtest.litmus import load_test, render_asm
from mixtest.mixer import mix
from mixtest.profiles import bundled_profile

FIXTURES = resources.files("mixtest") / "data" / "tests"
sb = load_test((FIXTURES / "SB.litmus").read_text())

# Under the source model the predicate t=0, u=0 never holds
for o in sorted(outcomes(sb, "rc11")):
    print(format_outcome(o))

# Two profiles and four instructions give 2**4 assignments
v8 = bundled_profile("clang-armv8-O3")
v7 = bundled_profile("clang-armv7a-O3-buggy")
cs = mix(sb, [v8, v7])
print(len(cs.entries), "assignments,", len(cs), "distinct programs")

# The mix where both stores come from armv8 and both loads from armv7
for e in cs.entries:
    if str(e.mixtest.assignment) == "{clang-armv7a-O3-buggy -> {P0_1,P1_1}; clang-armv8-O3 -> {P0_0,P1_0}}":
        print(render_asm(e.test))
        allowed = outcomes(e.test, "arm")
        print("predicate reachable:", any(e.test.pred.holds(o) for o in allowed))

# The full report; swap in the fixed armv7 table and the bug goes away
print(mixing_bug(sb, [v8, v7]).to_text())
print(mixing_bug(sb, [v8, bundled_profile("clang-armv7a-O3-fixed")]).to_text())
