"""Bug verdicts for compiled and mixed tests.

A compiled test ``c`` of a source test ``s`` has a concurrency bug when
some outcome the target model allows for ``c``, read back into source
terms through the observation map, is not an outcome the source model
allows for ``s``.  ``mixing_bug`` asks that question for one
representative of every hash group produced by the mixer.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .engine import DEFAULT_MAX_CANDIDATES, DEFAULT_UNROLL, format_outcome, observables, outcomes
from .isa import parse_reg
from .litmus import LitmusError, parse_asm, render_asm
from .mixer import DEFAULT_MAX_ASSIGNMENTS, mix
from .profiles import Binding, MappingKey, RegisterPool, instantiate, lookup, writes_memory

NO_BUG = "no-bug"
CONCURRENCY_BUG = "concurrency-bug"
MIXING_BUG = "mixing-bug"


def translate_outcome(s, c, outcome):
    """Rewrite a target outcome of ``c`` in the vocabulary of ``s``.

    Keeps the source predicate's registers and all memory locations;
    scratch registers introduced by the mappings are dropped.
    """
    regs, mem = {}, []
    for key, value in outcome:
        if key.startswith("P") and ":" in key:
            t, name = key[1:].split(":", 1)
            num = parse_reg(name).num
            regs.setdefault((int(t), num), value)
        else:
            mem.append((key, value))
    items = []
    for t, name in observables(s):
        nums = c.obs_map.lookup(t, name)
        try:
            vals = [regs[(t, n)] for n in nums]
        except KeyError:
            raise LitmusError(f"P{t}:{name} is mapped to registers the compiled test does not observe") from None
        v = vals[0] if len(vals) == 1 else vals[0] | vals[1] << 64
        items.append((f"P{t}:{name}", v))
    return tuple(items + sorted(mem))


def translate(s, c, outs):
    return frozenset(translate_outcome(s, c, o) for o in outs)


def concurrency_bug(
    s,
    c,
    source_model="rc11",
    target_model="arm",
    unroll=DEFAULT_UNROLL,
    max_candidates=DEFAULT_MAX_CANDIDATES,
    source_outcomes=None,
):
    """(bug?, violating outcomes) for the compiled test ``c`` of ``s``."""
    if source_outcomes is None:
        source_outcomes = outcomes(s, source_model, unroll, max_candidates)
    target = translate(s, c, outcomes(c, target_model, unroll, max_candidates))
    evidence = target - source_outcomes
    return bool(evidence), evidence


# --------------------------------------------------------------------------
# reports


@dataclass
class Witness:
    digest: str
    assignments: list  # every member assignment of the hash group
    outcomes: list  # violating outcomes, sorted
    predicate_satisfied: bool
    pure: bool  # some member compiles the whole test with one profile


@dataclass
class BugReport:
    test: str
    profiles: list
    verdict: str
    witnesses: list = field(default_factory=list)
    stats: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    @property
    def exit_code(self):
        return 0 if self.verdict == NO_BUG else 1

    def to_dict(self):
        return {
            "test": self.test,
            "profiles": list(self.profiles),
            "verdict": self.verdict,
            "witnesses": [
                {
                    "digest": w.digest,
                    "pure": w.pure,
                    "predicate_satisfied": w.predicate_satisfied,
                    "outcomes": [dict(o) for o in w.outcomes],
                    "assignments": [a.as_dict() for a in w.assignments],
                }
                for w in self.witnesses
            ],
            "stats": dict(self.stats),
            "warnings": list(self.warnings),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_text(self):
        lines = [f"Test {self.test}: {self.verdict}"]
        lines.append(f"Profiles: {', '.join(self.profiles)}")
        lines.append("Stats: " + " ".join(f"{k}={v}" for k, v in sorted(self.stats.items())))
        for w in self.warnings:
            lines.append(f"Warning: {w}")
        for w in self.witnesses:
            kind = "pure" if w.pure else "mixed"
            sat = "satisfies" if w.predicate_satisfied else "does not satisfy"
            lines.append(f"Witness {w.digest[:16]} ({kind}, {sat} the predicate)")
            for o in w.outcomes:
                lines.append(f"  allowed {format_outcome(o)}")
            for a in w.assignments:
                lines.append(f"  from {a}")
        return "\n".join(lines) + "\n"


def _check_one(task):
    s, c, target_model, unroll, max_candidates, source_outs = task
    _, evidence = concurrency_bug(s, c, None, target_model, unroll, max_candidates, source_outs)
    return evidence


def _confirm(s, c, evidence, target_model, unroll, max_candidates):
    """Re-simulate a witness from its rendered text; the evidence must reappear."""
    again = parse_asm(render_asm(c))
    again_outs = translate(s, again, outcomes(again, target_model, unroll, max_candidates))
    if not evidence <= again_outs:
        raise AssertionError(f"witness {c.name} did not reproduce on re-simulation")


def mixing_bug(
    s,
    profiles,
    source_model="rc11",
    target_model="arm",
    unroll=DEFAULT_UNROLL,
    max_assignments=DEFAULT_MAX_ASSIGNMENTS,
    max_candidates=DEFAULT_MAX_CANDIDATES,
    glue=False,
    jobs=1,
    granularity="instruction",
    timing=False,
    combined=None,
):
    """Mix ``s`` over ``profiles`` and check one representative per hash group."""
    start = time.perf_counter()
    cs = combined if combined is not None else mix(s, profiles, max_assignments, glue, granularity)
    groups = cs.groups()
    source_outs = outcomes(s, source_model, unroll, max_candidates)
    digests = list(groups)
    tasks = [(s, cs.representative(d).test, target_model, unroll, max_candidates, source_outs) for d in digests]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_check_one, tasks))
    else:
        results = [_check_one(t) for t in tasks]

    witnesses = []
    for d, evidence in zip(digests, results):
        if not evidence:
            continue
        _confirm(s, cs.representative(d).test, evidence, target_model, unroll, max_candidates)
        members = [e.mixtest.assignment for e in groups[d]]
        outs = sorted(evidence)
        witnesses.append(
            Witness(
                digest=d,
                assignments=members,
                outcomes=outs,
                predicate_satisfied=any(s.pred.holds(o) for o in outs),
                pure=any(a.is_pure for a in members),
            )
        )
    if any(w.pure for w in witnesses):
        verdict = CONCURRENCY_BUG
    elif witnesses:
        verdict = MIXING_BUG
    else:
        verdict = NO_BUG
    stats = {
        "assignments": len(cs.entries),
        "groups": len(groups),
        "simulations": len(tasks) + len(witnesses) + 1,
        "violating_groups": len(witnesses),
    }
    if timing:
        stats["wall_time"] = round(time.perf_counter() - start, 3)
    warnings = [w for p in sorted(profiles, key=lambda p: p.name) for w in lint_const_mutable(s, p)]
    return BugReport(s.name, list(cs.profiles), verdict, witnesses, stats, warnings)


# --------------------------------------------------------------------------
# const lint


def lint_const_mutable(test, profile):
    """Warn where a load of a read-only location compiles to a store.

    Read-only data may live in non-writable pages, so a load mapping that
    writes memory (say an exclusive load/store loop) faults at run time.
    """
    warnings = []
    for i in test.instructions():
        if i.op != "load" or not test.init[i.loc].const:
            continue
        width = test.init[i.loc].width
        key = MappingKey("load", width, i.mo, i.has_result)
        try:
            entry = lookup(profile, key)
        except ValueError:
            continue
        pool = RegisterPool(4)
        code = instantiate(entry, Binding(addr=2, width=width, pool=pool, dst=(0, 1) if i.has_result else None, arch=profile.arch))
        stores = writes_memory(code)
        if stores:
            ops = ", ".join(sorted({x.op for x in stores}))
            warnings.append(
                f"{i.iid}: load of read-only location {i.loc} compiles to a memory write ({ops}) "
                f"under {profile.name}; it will fault if {i.loc} is mapped read-only"
            )
    return warnings


__all__ = [
    "CONCURRENCY_BUG",
    "MIXING_BUG",
    "NO_BUG",
    "BugReport",
    "Witness",
    "concurrency_bug",
    "lint_const_mutable",
    "mixing_bug",
    "translate",
    "translate_outcome",
]
