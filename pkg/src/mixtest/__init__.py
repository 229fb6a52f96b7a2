"""Mix testing of C/C++ atomics mappings.

A source litmus test is split into its instructions, each instruction is
compiled with one of several compiler profiles, and every combination is
reassembled into an assembly litmus test.  Comparing the outcomes of the
source test under RC11 with those of each combination under an Arm model
exposes bugs that only appear when code from different compilers is linked
together.
"""

__version__ = "0.1.0"

from .checker import BugReport, concurrency_bug, lint_const_mutable, mixing_bug  # noqa: E402
from .engine import enumerate_executions, outcomes, thread_paths  # noqa: E402
from .generator import generate, symmetry_reduce  # noqa: E402
from .litmus import canonical_hash, load_test, parse_asm, parse_source, render_asm, render_source  # noqa: E402
from .mixer import MixAssignment, combine, compile_instruction, enumerate_assignments, insert_branch_glue, mix, split  # noqa: E402
from .models import MODELS, get_model  # noqa: E402
from .oracle import sc_outcomes  # noqa: E402
from .profiles import bundled_profile, load_profile, resolve_profile  # noqa: E402

__all__ = [
    "BugReport",
    "MODELS",
    "MixAssignment",
    "bundled_profile",
    "canonical_hash",
    "combine",
    "compile_instruction",
    "concurrency_bug",
    "enumerate_assignments",
    "enumerate_executions",
    "generate",
    "get_model",
    "insert_branch_glue",
    "lint_const_mutable",
    "load_profile",
    "load_test",
    "mix",
    "mixing_bug",
    "outcomes",
    "parse_asm",
    "parse_source",
    "render_asm",
    "render_source",
    "resolve_profile",
    "sc_outcomes",
    "split",
    "symmetry_reduce",
    "thread_paths",
]
