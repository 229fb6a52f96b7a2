"""
A swap whose result goes to the zero register
=============================================

An acq_rel exchange with an unused result, lowered to SWPL writing WZR and
a trailing DMB ISHLD.  The load barrier only orders earlier reads, and a
swap into the zero register does not count as one.
"""

from importlib import resources

from mixtest.checker import mixing_bug
from mixtest.engine import outcomes, project
from mixtest.litmus import load_test, render_asm, render_source
from mixtest.mixer import compile_whole
from mixtest.profiles import bundled_profile

FIXTURES = resources.files("mixtest") / "data" / "tests"
mp = load_test((FIXTURES / "MP-RMW.litmus").read_text())
print(render_source(mp))

keys = ["P1:r0", "y"]
print("source:", sorted(project(outcomes(mp, "rc11"), keys)))

buggy = bundled_profile("clang-armv8.2-swp-buggy")
fixed = bundled_profile("clang-armv8.2-swp-fixed")
c = compile_whole(mp, buggy)
print(render_asm(c))

# No mixing is needed here: a single profile already breaks the test
for p in (buggy, fixed):
    r = mixing_bug(mp, [p])
    print(p.name, r.verdict)
