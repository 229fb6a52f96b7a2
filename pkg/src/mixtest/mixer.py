"""Split a source test, compile each piece with some profile, recombine.

``mix(s, profiles)`` enumerates every way of assigning a profile to each
instruction, compiles and combines each assignment into an assembly test,
and groups the results by canonical hash.

Register convention, per thread: source result registers take the lowest
numbers (two for a 128-bit value), then one address register per location
the thread touches, then fresh temporaries up to X28.  With this fixed
layout every fragment compiled for a thread agrees on where its operands
live, and the observation map is known before any code is generated.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .isa import AsmInstr, Imm, Label, Opt, Reg
from .litmus import (
    RESULT_OPS,
    AsmLitmusTest,
    AsmThread,
    Atom,
    ObservationMap,
    Predicate,
    canonical_hash,
    validate_asm,
)
from .profiles import Binding, MappingKey, RegisterPool, default_form, instantiate, lookup

DEFAULT_MAX_ASSIGNMENTS = 10**6
GLUE_PREFIX = "F"


class MixError(ValueError):
    pass


# --------------------------------------------------------------------------
# splitting and assignments


def split(s):
    """The test's instructions keyed by Iid, threads then position order.

    A conditional counts as one instruction and its block contributes its
    own Iids.
    """
    return [(i.iid, i) for t in s.threads for i in t.flat()]


def _iid_key(iid):
    t, k = iid[1:].split("_")
    return int(t), int(k)


def split_units(s, granularity="instruction"):
    """Groups of Iids that must share a profile."""
    if granularity == "instruction":
        return [(iid,) for iid, _ in split(s)]
    if granularity == "thread":
        return [tuple(i.iid for i in t.flat()) for t in s.threads if t.instrs]
    raise MixError(f"unknown granularity {granularity!r}")


@dataclass(frozen=True)
class MixAssignment:
    """Profile name -> set of Iids; the sets partition the test's Iids."""

    groups: tuple  # ((profile name, frozenset of iids), ...) sorted by name

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(sorted((name, frozenset(iids)) for name, iids in d.items())))

    def as_dict(self):
        return {name: sorted(iids, key=_iid_key) for name, iids in self.groups if iids}

    def profile_of(self, iid):
        for name, iids in self.groups:
            if iid in iids:
                return name
        raise MixError(f"{iid} is not assigned")

    @property
    def is_pure(self):
        return sum(1 for _, iids in self.groups if iids) == 1

    def __str__(self):
        parts = [f"{name} -> {{{','.join(iids)}}}" for name, iids in self.as_dict().items()]
        return "{" + "; ".join(parts) + "}"


@dataclass(frozen=True)
class MixTest:
    test: object
    assignment: MixAssignment


def assignment_count(n_units, n_profiles):
    return n_profiles**n_units


def iter_assignments(units, profile_names):
    """Assignments in lexicographic order (units as given, profiles by name)."""
    names = sorted(profile_names)
    units = sorted(units, key=lambda u: _iid_key(u[0]))
    for choice in itertools.product(range(len(names)), repeat=len(units)):
        d = {n: set() for n in names}
        for unit, p in zip(units, choice):
            d[names[p]].update(unit)
        yield MixAssignment.from_dict(d)


def enumerate_assignments(iids, profiles, cap=DEFAULT_MAX_ASSIGNMENTS):
    """All |P|^|I| assignments of profiles to Iids, lexicographically ordered.

    ``iids`` may be plain Iids or tuples of Iids that move together.
    """
    names = [p if isinstance(p, str) else p.name for p in profiles]
    if not names:
        raise MixError("at least one profile is needed")
    if len(set(names)) != len(names):
        raise MixError("profile names must be distinct")
    units = [u if isinstance(u, tuple) else (u,) for u in iids]
    total = assignment_count(len(units), len(names))
    if total > cap:
        raise MixError(
            f"{len(names)}^{len(units)} = {total} assignments exceed the cap of {cap}; "
            "use fewer profiles, a smaller test or --max-assignments"
        )
    return list(iter_assignments(units, names))


# --------------------------------------------------------------------------
# per-thread layout and compilation


@dataclass
class ThreadLayout:
    result: dict  # source register -> register numbers
    width: dict  # source register -> width
    addr: dict  # location -> register number
    first_temp: int


def thread_layout(s, tid):
    result, width = {}, {}
    for i in s.threads[tid].flat():
        if i.has_result:
            w = s.init[i.loc].width
            width[i.reg] = max(width.get(i.reg, 0), w)
    nxt = 0
    for reg in width:
        n = 2 if width[reg] == 128 else 1
        result[reg] = tuple(range(nxt, nxt + n))
        nxt += n
    locs = sorted({i.loc for i in s.threads[tid].flat() if i.loc is not None})
    addr = {}
    for loc in locs:
        addr[loc] = nxt
        nxt += 1
    return ThreadLayout(result, width, addr, nxt)


@dataclass
class Fragment:
    """The code one source instruction compiles to.

    A conditional header puts its compare-and-branch in ``instrs`` and the
    join label in ``tail``; its block's fragments go in between.
    """

    iid: str
    profile: str
    instrs: list
    tail: list = field(default_factory=list)
    wrappable: bool = True


@dataclass
class CompileContext:
    test: object
    tid: int
    layout: ThreadLayout
    pool: RegisterPool


def mapping_key(s, i):
    """The profile key a (non-conditional) source instruction compiles through."""
    if i.op == "fence":
        return MappingKey("fence", None, i.mo)
    used = i.has_result if i.op in RESULT_OPS else True
    return MappingKey(i.op, s.init[i.loc].width, i.mo, used)


def missing_mappings(s, profiles):
    """(Iid, profile name, key) for every mapping some profile lacks."""
    out = []
    for p in profiles:
        for i in s.instructions():
            if i.op != "if" and not p.supports(mapping_key(s, i)):
                out.append((i.iid, p.name, mapping_key(s, i)))
    return out


def compile_instruction(i, p, ctx):
    """Compile one source instruction with profile ``p``."""
    s, lay = ctx.test, ctx.layout
    if i.op == "if":
        w = lay.width.get(i.reg, 32)
        nums = lay.result[i.reg]
        form = default_form(p.arch, w)
        join = ctx.pool.label()
        if len(nums) == 2:
            lo, hi = i.value & ((1 << 64) - 1), i.value >> 64
            head = [
                AsmInstr("CMP", (Reg("X", nums[0]), Imm(lo)), i.iid),
                AsmInstr("CCMP", (Reg("X", nums[1]), Imm(hi), Imm(0), Opt("EQ")), i.iid),
            ]
        else:
            head = [AsmInstr("CMP", (Reg(form, nums[0]), Imm(i.value)), i.iid)]
        head.append(AsmInstr("B.NE", (Label(join),), i.iid))
        return Fragment(i.iid, p.name, head, [AsmInstr("LABEL", (Label(join),), i.iid)], wrappable=False)
    key = mapping_key(s, i)
    if i.op == "fence":
        binding = Binding(addr=0, width=None, pool=ctx.pool, arch=p.arch)
    else:
        width = s.init[i.loc].width
        used = i.has_result
        binding = Binding(
            addr=lay.addr[i.loc],
            width=width,
            pool=ctx.pool,
            value=i.value or 0,
            expected=i.expected or 0,
            dst=lay.result[i.reg] if used else None,
            arch=p.arch,
        )
    try:
        entry = lookup(p, key)
    except ValueError as e:
        raise MixError(f"{i.iid}: {e}") from None
    instrs = instantiate(entry, binding, origin=i.iid)
    return Fragment(i.iid, p.name, instrs)


def compile_test(s, assignment, profiles):
    """Fragments for every Iid, compiled thread by thread in source order."""
    by_name = {p.name: p for p in profiles}
    frags, layouts = {}, []
    for tid in range(len(s.threads)):
        lay = thread_layout(s, tid)
        layouts.append(lay)
        ctx = CompileContext(s, tid, lay, RegisterPool(lay.first_temp))
        for i in s.threads[tid].flat():
            p = by_name[assignment.profile_of(i.iid)]
            frags[i.iid] = compile_instruction(i, p, ctx)
    return frags, layouts


# --------------------------------------------------------------------------
# combining


def _glue(units, existing_labels):
    """Lay out a thread as calls to out-of-line fragments.

    ``units`` is a list of (wrap?, instrs).  Wrapped units become ``BL Fk``
    in line and ``Fk: ...; RET`` after the thread's main body.
    """
    main, subs, k = [], [], 0
    for wrap, instrs in units:
        if not wrap:
            main.extend(instrs)
            continue
        name = f"{GLUE_PREFIX}{k}"
        while name in existing_labels:
            k += 1
            name = f"{GLUE_PREFIX}{k}"
        k += 1
        origin = instrs[0].origin if instrs else None
        main.append(AsmInstr("BL", (Label(name),), origin))
        subs.append(AsmInstr("LABEL", (Label(name),), origin))
        subs.extend(instrs)
        subs.append(AsmInstr("RET", (), origin))
    if not subs:
        return main
    end = f"{GLUE_PREFIX}END"
    return main + [AsmInstr("B", (Label(end),))] + subs + [AsmInstr("LABEL", (Label(end),))]


def _labels_in(instrs):
    return {i.args[0].name for i in instrs if i.is_label}


def combine(s, assignment, fragments, layouts, profiles, glue=False):
    """Concatenate fragments per thread into one assembly test."""
    by_name = {p.name: p for p in profiles}
    threads, bindings, obs = [], [], []
    atoms = []
    for tid, th in enumerate(s.threads):
        lay = layouts[tid]
        units = []

        def emit(seq):
            for i in seq:
                try:
                    f = fragments[i.iid]
                except KeyError:
                    raise MixError(f"missing fragment for {i.iid}") from None
                if i.op == "if":
                    units.append((False, f.instrs))
                    emit(i.body)
                    units.append((False, f.tail))
                else:
                    units.append((glue and f.wrappable, list(f.instrs)))

        emit(th.instrs)
        flat = [x for _, seq in units for x in seq]
        code = _glue(units, _labels_in(flat)) if glue else flat
        threads.append(AsmThread(th.tid, tuple(code)))

        arches = {by_name[assignment.profile_of(i.iid)].arch for i in th.flat()}
        aform = "R" if arches == {"armv7"} else "X"
        bindings.append({loc: Reg(aform, n) for loc, n in lay.addr.items()})
        obs.append(dict(lay.result))

    # the source predicate, through the observation map
    for a in s.pred.atoms:
        if a.thread is None:
            atoms.append(a)
            continue
        lay = layouts[a.thread]
        nums = lay.result[a.name]
        if len(nums) == 2:
            atoms.append(Atom(a.thread, f"X{nums[0]}", a.value & ((1 << 64) - 1)))
            atoms.append(Atom(a.thread, f"X{nums[1]}", a.value >> 64))
        else:
            form = _register_form(s, a.thread, a.name, assignment, by_name, lay)
            atoms.append(Atom(a.thread, f"{form}{nums[0]}", a.value))

    t = AsmLitmusTest(
        s.name,
        dict(s.init),
        tuple(bindings),
        tuple(threads),
        Predicate(tuple(atoms)),
        ObservationMap(tuple(obs)),
    )
    validate_asm(t)
    return t


def _register_form(s, tid, reg, assignment, by_name, lay):
    for i in s.threads[tid].flat():
        if i.has_result and i.reg == reg:
            return default_form(by_name[assignment.profile_of(i.iid)].arch, lay.width[reg])
    return "X"


def translate_predicate(pred, obs_map, forms=None):
    """Source predicate -> predicate over architectural registers."""
    atoms = []
    for a in pred.atoms:
        if a.thread is None:
            atoms.append(a)
            continue
        nums = obs_map.lookup(a.thread, a.name)
        if len(nums) == 2:
            atoms.append(Atom(a.thread, f"X{nums[0]}", a.value & ((1 << 64) - 1)))
            atoms.append(Atom(a.thread, f"X{nums[1]}", a.value >> 64))
        else:
            form = (forms or {}).get((a.thread, a.name), "W")
            atoms.append(Atom(a.thread, f"{form}{nums[0]}", a.value))
    return Predicate(tuple(atoms))


def insert_branch_glue(t):
    """Move each self-contained fragment out of line behind ``BL``/``RET``.

    Fragment boundaries come from the instructions' origin tags.  A test
    that already calls out (contains ``BL``) is returned unchanged.
    """
    new_threads = []
    for th in t.threads:
        if any(i.op == "BL" for i in th.instrs):
            new_threads.append(th)
            continue
        if th.instrs and all(i.origin is None for i in th.instrs):
            raise MixError(f"{th.tid}: no fragment boundaries recorded; glue needs a combined test")
        runs = []
        for i in th.instrs:
            if runs and runs[-1][0] == i.origin:
                runs[-1][1].append(i)
            else:
                runs.append((i.origin, [i]))
        units = []
        for idx, (origin, instrs) in enumerate(runs):
            inside = _labels_in(instrs)
            outside = set()
            for j, (_, other) in enumerate(runs):
                if j != idx:
                    outside |= {a.name for x in other for a in x.args if isinstance(a, Label) and not x.is_label}
            targets = {a.name for x in instrs for a in x.args if isinstance(a, Label) and not x.is_label}
            contained = origin is not None and targets <= inside and not (inside & outside)
            units.append((contained, instrs))
        new_threads.append(AsmThread(th.tid, tuple(_glue(units, _labels_in(th.instrs)))))
    out = AsmLitmusTest(t.name, t.init, t.bindings, tuple(new_threads), t.pred, t.obs_map, t.arch)
    validate_asm(out)
    return out


# --------------------------------------------------------------------------
# the whole pipeline


@dataclass
class CombinedEntry:
    mixtest: MixTest
    test: AsmLitmusTest
    digest: str


@dataclass
class CombinedSet:
    source: object
    profiles: list
    entries: list
    index: dict  # digest -> position of the group's representative

    def groups(self):
        """digest -> member entries, digests in sorted order."""
        out = {}
        for e in self.entries:
            out.setdefault(e.digest, []).append(e)
        return {d: out[d] for d in sorted(out)}

    def representative(self, digest):
        return self.entries[self.index[digest]]

    def __len__(self):
        return len(self.index)


def mix(s, profiles, max_assignments=DEFAULT_MAX_ASSIGNMENTS, glue=False, granularity="instruction"):
    """split -> enumerate assignments -> compile -> combine -> group by hash."""
    profiles = sorted(profiles, key=lambda p: p.name)
    units = split_units(s, granularity)
    assignments = enumerate_assignments(units, profiles, max_assignments)
    entries, index = [], {}
    for a in assignments:
        frags, layouts = compile_test(s, a, profiles)
        c = combine(s, a, frags, layouts, profiles, glue=glue)
        d = canonical_hash(c)
        index.setdefault(d, len(entries))
        entries.append(CombinedEntry(MixTest(s, a), c, d))
    return CombinedSet(s, [p.name for p in profiles], entries, index)


def compile_whole(s, profile, glue=False):
    """Compile the entire test with one profile."""
    a = MixAssignment.from_dict({profile.name: {iid for iid, _ in split(s)}})
    frags, layouts = compile_test(s, a, [profile])
    return combine(s, a, frags, layouts, [profile], glue=glue)
