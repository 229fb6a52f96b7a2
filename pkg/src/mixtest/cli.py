"""Command-line driver.

    mixtest mix TEST --profiles A B [--out DIR]
    mixtest simulate TEST [--model NAME]
    mixtest check TEST_OR_DIR --profiles A B [--jobs N] [--format structured]
    mixtest gen --shapes SB MP --orders seq_cst --widths 32 64 --out DIR
    mixtest hash ASM_TEST

Profiles are given as ``.profile`` files or by the name of a bundled
profile.  Exit status: 0 no bug (or success), 1 bug found, 2 error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .checker import mixing_bug
from .engine import DEFAULT_MAX_CANDIDATES, DEFAULT_UNROLL, EngineError, format_outcome, outcomes, project
from .generator import DEFAULT_ORDERS, DEFAULT_RMW_OPS, SHAPES, generate
from .litmus import AsmLitmusTest, LitmusError, SourceLitmusTest, canonical_hash, load_test, render_asm, render_source
from .mixer import DEFAULT_MAX_ASSIGNMENTS, MixError, missing_mappings, mix
from .models import get_model
from .profiles import ProfileError, bundled_names, resolve_profile

EXIT_OK, EXIT_BUG, EXIT_ERROR = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    profiles: list = field(default_factory=list)
    source_model: str = "rc11"
    target_model: str = "arm"
    unroll: int = DEFAULT_UNROLL
    max_assignments: int = DEFAULT_MAX_ASSIGNMENTS
    max_candidates: int = DEFAULT_MAX_CANDIDATES
    jobs: int = 1
    glue: bool = False
    output_format: str = "text"

    def validate(self):
        for name in ("unroll", "max_assignments", "max_candidates", "jobs"):
            if getattr(self, name) < 1:
                raise UsageError(f"--{name.replace('_', '-')} must be positive")
        get_model(self.source_model)
        get_model(self.target_model)


def _config(args):
    cfg = RunConfig(
        profiles=list(getattr(args, "profiles", None) or []),
        source_model=getattr(args, "source_model", "rc11"),
        target_model=getattr(args, "target_model", "arm"),
        unroll=args.unroll,
        max_assignments=getattr(args, "max_assignments", DEFAULT_MAX_ASSIGNMENTS),
        max_candidates=args.max_candidates,
        jobs=getattr(args, "jobs", 1),
        glue=getattr(args, "glue", False),
        output_format=getattr(args, "format", "text"),
    )
    cfg.validate()
    return cfg


def _load_profiles(specs):
    if not specs:
        raise UsageError("at least one --profiles entry is required")
    return [resolve_profile(p) for p in specs]


def _read_test(path):
    return load_test(Path(path).read_text())


def _source_test(path):
    t = _read_test(path)
    if not isinstance(t, SourceLitmusTest):
        raise UsageError(f"{path}: expected a C source litmus test")
    return t


# --------------------------------------------------------------------------
# subcommands


def cmd_mix(args, out):
    cfg = _config(args)
    s = _source_test(args.test)
    profiles = _load_profiles(cfg.profiles)
    cs = mix(s, profiles, cfg.max_assignments, cfg.glue, args.granularity)
    dest = Path(args.out or f"{s.name}-mix")
    dest.mkdir(parents=True, exist_ok=True)
    groups = []
    for digest, members in cs.groups().items():
        rep = cs.representative(digest).test
        fname = f"{s.name}-{digest[:16]}.litmus"
        (dest / fname).write_text(render_asm(rep))
        groups.append(
            {
                "digest": digest,
                "file": fname,
                "members": [m.mixtest.assignment.as_dict() for m in members],
            }
        )
    manifest = {
        "test": s.name,
        "profiles": cs.profiles,
        "assignments": len(cs.entries),
        "groups": groups,
    }
    (dest / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(f"{s.name}: {len(cs.entries)} assignments, {len(groups)} distinct tests written to {dest}", file=out)
    return EXIT_OK


def cmd_simulate(args, out):
    t = _read_test(args.test)
    model = args.model or ("rc11" if isinstance(t, SourceLitmusTest) else "arm")
    outs = outcomes(t, model, args.unroll, args.max_candidates)
    shown = project(outs, [a.key for a in t.pred.atoms]) if args.project else outs
    print(f"Test {t.name} ({model})", file=out)
    print(f"States {len(shown)}", file=out)
    for o in sorted(shown):
        print(format_outcome(o), file=out)
    sat = any(t.pred.holds(o) for o in outs)
    print("Ok" if sat else "No", file=out)
    cond = " /\\ ".join(str(a) for a in t.pred.atoms)
    print(f"Condition exists ({cond}) is {'' if sat else 'not '}satisfied", file=out)
    return EXIT_OK


def _check_targets(path):
    p = Path(path)
    if p.is_dir():
        files = sorted(f for f in p.iterdir() if f.suffix == ".litmus")
        tests = [load_test(f.read_text()) for f in files]
        tests = [t for t in tests if isinstance(t, SourceLitmusTest)]
        if not tests:
            raise UsageError(f"{path}: no source litmus tests found")
        return tests, True
    if not p.is_file():
        raise UsageError(f"{path}: no such file or directory")
    return [_source_test(p)], False


def cmd_check(args, out):
    cfg = _config(args)
    profiles = _load_profiles(cfg.profiles)
    tests, many = _check_targets(args.test)
    reports, skipped = [], []
    for s in tests:
        missing = missing_mappings(s, profiles)
        if many and missing:
            iid, pname, key = missing[0]
            skipped.append(f"Test {s.name}: skipped, {pname} has no mapping for {key} ({iid})")
            continue
        reports.append(
            mixing_bug(
                s,
                profiles,
                cfg.source_model,
                cfg.target_model,
                cfg.unroll,
                cfg.max_assignments,
                cfg.max_candidates,
                cfg.glue,
                cfg.jobs,
                args.granularity,
                timing=args.timing,
            )
        )
    if cfg.output_format == "structured":
        if many:
            doc = {"reports": [r.to_dict() for r in reports], "skipped": skipped}
        else:
            doc = reports[0].to_dict()
        out.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    else:
        out.write("\n".join(r.to_text() for r in reports))
        out.write("".join(line + "\n" for line in skipped))
    return EXIT_BUG if any(r.exit_code for r in reports) else EXIT_OK


def _split_list(values, flag):
    items = [v for raw in values or [] for v in raw.split(",") if v.strip()]
    if not items:
        raise UsageError(f"{flag} needs at least one value")
    return items


def cmd_gen(args, out):
    shapes = _split_list(args.shapes, "--shapes")
    orders = _split_list(args.orders, "--orders")
    widths = [int(w) for w in _split_list(args.widths, "--widths")]
    rmw_ops = _split_list(args.rmw_ops, "--rmw-ops")
    profiles = [resolve_profile(p) for p in args.profiles] if args.profiles else None
    tests = generate(widths, orders, shapes, rmw_ops, profiles)
    dest = Path(args.out)
    dest.mkdir(parents=True, exist_ok=True)
    for t in tests:
        (dest / f"{t.name}.litmus").write_text(render_source(t))
    print(f"{len(tests)} tests written to {dest}", file=out)
    return EXIT_OK


def cmd_hash(args, out):
    t = _read_test(args.test)
    if not isinstance(t, AsmLitmusTest):
        raise UsageError(f"{args.test}: hash takes an assembly litmus test")
    print(canonical_hash(t), file=out)
    return EXIT_OK


def cmd_import_profile(args, out):
    print(
        "import-profile is not implemented; write a .profile file by hand "
        f"(bundled examples: {', '.join(bundled_names())})",
        file=sys.stderr,
    )
    return EXIT_ERROR


# --------------------------------------------------------------------------
# argument parsing


def _add_sim_flags(p):
    p.add_argument("--unroll", type=int, default=DEFAULT_UNROLL, help="loop unrolling bound (default %(default)s)")
    p.add_argument("--max-candidates", type=int, default=DEFAULT_MAX_CANDIDATES, help="candidate execution cap per test")


def _add_mix_flags(p):
    p.add_argument("--profiles", nargs="+", metavar="PROFILE", help="profile files or bundled profile names")
    p.add_argument("--max-assignments", type=int, default=DEFAULT_MAX_ASSIGNMENTS, help="refuse to enumerate more assignments than this")
    p.add_argument("--glue", action="store_true", help="call each fragment through BL/RET as separate compilation would")
    p.add_argument(
        "--granularity",
        choices=("instruction", "thread"),
        default="instruction",
        help="assign profiles per instruction (default) or per thread",
    )


def build_parser():
    parser = argparse.ArgumentParser(prog="mixtest", description="Mix testing for atomics mappings.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mix", help="compile every profile assignment and write the distinct tests")
    p.add_argument("test")
    p.add_argument("--out", help="output directory (default NAME-mix)")
    _add_mix_flags(p)
    _add_sim_flags(p)
    p.set_defaults(func=cmd_mix)

    p = sub.add_parser("simulate", help="list a test's outcomes under a model")
    p.add_argument("test")
    p.add_argument("--model", help="model name (default rc11 for C tests, arm for assembly)")
    p.add_argument("--project", action="store_true", help="show only the variables the predicate names")
    _add_sim_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("check", help="look for mixing bugs")
    p.add_argument("test", help="a C litmus test or a directory of them")
    _add_mix_flags(p)
    _add_sim_flags(p)
    p.add_argument("--source-model", default="rc11")
    p.add_argument("--target-model", default="arm")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (never changes the output)")
    p.add_argument("--format", choices=("text", "structured"), default="text")
    p.add_argument("--timing", action="store_true", help="include wall time in the report stats")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("gen", help="generate source tests from shape templates")
    p.add_argument("--shapes", nargs="*", default=list(SHAPES), help=f"any of {', '.join(SHAPES)}")
    p.add_argument("--orders", nargs="*", default=list(DEFAULT_ORDERS))
    p.add_argument("--widths", nargs="*", default=["32", "64"])
    p.add_argument("--rmw-ops", nargs="*", default=list(DEFAULT_RMW_OPS))
    p.add_argument("--profiles", nargs="+", help="keep only tests these profiles can compile")
    p.add_argument("--out", default="generated")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("hash", help="print the canonical hash of an assembly test")
    p.add_argument("test")
    p.set_defaults(func=cmd_hash)

    p = sub.add_parser("import-profile", help="(not implemented) derive a profile from compiler output")
    p.add_argument("args", nargs="*")
    p.set_defaults(func=cmd_import_profile)
    return parser


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_ERROR
    try:
        return args.func(args, out)
    except UsageError as e:
        print(f"mixtest: {e}", file=sys.stderr)
        return EXIT_ERROR
    except (LitmusError, ProfileError, MixError, EngineError, OSError, ValueError) as e:
        print(f"mixtest: error: {e}", file=sys.stderr)
        return EXIT_ERROR


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
