"""Candidate-execution enumeration for source and assembly litmus tests.

Each thread is first run symbolically on its own: reads return fresh
symbols, branches on symbolic values fork the path and record a
constraint, and exclusive stores fork into success and failure.  Paths
that visit any label more than ``unroll`` times are incomplete and never
contribute outcomes.

A candidate execution is then one path per thread, a coherence order per
location and a reads-from choice per read.  Reads are resolved one at a
time so that infeasible branch constraints prune the search early.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

from .isa import SEMANTICS, Imm, parse_reg
from .litmus import AsmLitmusTest, SourceLitmusTest
from .relations import Relation, mask_of

DEFAULT_UNROLL = 2
DEFAULT_MAX_CANDIDATES = 10**7
_STEP_LIMIT = 10_000


class EngineError(RuntimeError):
    pass


class CapExceeded(EngineError):
    pass


# --------------------------------------------------------------------------
# symbolic values
#
# A value is an int, a bool (conditions only) or a tuple node:
#   ("rd", tid, k)              k-th read of thread tid
#   ("add", a, b, bits)         (a + b) mod 2**bits
#   ("bits", e, shift, width)   bit-field of e
#   ("cat", lo, hi, half)       lo | hi << half
#   ("eq", a, b) ("not", c) ("and", a, b) ("ite", c, a, b)


class Unresolved(Exception):
    pass


class ValueCycle(Exception):
    pass


def _is_const(v):
    return not isinstance(v, tuple)


def mk_add(a, b, bits):
    if _is_const(a) and _is_const(b):
        return (a + b) % (1 << bits)
    return ("add", a, b, bits)


def mk_bits(e, shift, width):
    if _is_const(e):
        return (e >> shift) & ((1 << width) - 1)
    if e[0] == "cat" and shift == 0 and width == e[3]:
        return e[1]
    if e[0] == "cat" and shift == e[3] and width == e[3]:
        return e[2]
    return ("bits", e, shift, width)


def mk_cat(lo, hi, half):
    if _is_const(lo) and _is_const(hi):
        return lo | hi << half
    return ("cat", lo, hi, half)


def mk_eq(a, b):
    if _is_const(a) and _is_const(b):
        return a == b
    return ("eq", a, b)


def mk_not(c):
    if isinstance(c, bool):
        return not c
    return ("not", c)


def mk_ite(c, a, b):
    if isinstance(c, bool):
        return a if c else b
    return ("ite", c, a, b)


def evaluate(e, lookup):
    """Evaluate ``e``; ``lookup(tid, k)`` supplies read values."""
    if not isinstance(e, tuple):
        return e
    tag = e[0]
    if tag == "rd":
        return lookup(e[1], e[2])
    if tag == "add":
        return (evaluate(e[1], lookup) + evaluate(e[2], lookup)) % (1 << e[3])
    if tag == "bits":
        return (evaluate(e[1], lookup) >> e[2]) & ((1 << e[3]) - 1)
    if tag == "cat":
        return evaluate(e[1], lookup) | evaluate(e[2], lookup) << e[3]
    if tag == "eq":
        return evaluate(e[1], lookup) == evaluate(e[2], lookup)
    if tag == "not":
        return not evaluate(e[1], lookup)
    if tag == "and":
        return evaluate(e[1], lookup) and evaluate(e[2], lookup)
    if tag == "ite":
        return evaluate(e[2], lookup) if evaluate(e[1], lookup) else evaluate(e[3], lookup)
    raise AssertionError(tag)


def reads_of(e, acc=None):
    acc = set() if acc is None else acc
    if isinstance(e, tuple):
        if e[0] == "rd":
            acc.add((e[1], e[2]))
        else:
            for sub in e[1:]:
                reads_of(sub, acc)
    return acc


# --------------------------------------------------------------------------
# events and per-thread paths


@dataclass(frozen=True)
class Event:
    eid: int
    tid: int  # -1 for the initial write of a location
    kind: str  # "R", "W" or "F"
    loc: str | None = None
    mo: str | None = None  # source events
    acquire: bool = False  # target events from here on
    acquire_pc: bool = False
    release: bool = False
    barrier: str | None = None
    ld_visible: bool = True
    exclusive: bool = False
    rmw: int | None = None  # eid of the other half of an RMW pair
    origin: str | None = None
    po: int = 0

    @property
    def is_init(self):
        return self.tid < 0

    @property
    def label(self):
        if self.kind in ("R", "W") and self.rmw is not None:
            return "RMW-" + self.kind
        return self.kind


@dataclass
class PathEvent:
    kind: str
    loc: str | None = None
    value: object = None  # written value, or the read's own symbol
    attrs: dict = field(default_factory=dict)
    rmw: int | None = None  # index of the partner read within the path
    origin: str | None = None
    ctrl: frozenset = frozenset()


@dataclass
class Path:
    tid: int
    events: list
    constraints: list
    regs: dict
    complete: bool = True
    nreads: int = 0


class _State:
    __slots__ = ("pc", "regs", "flags", "lr", "events", "constraints", "visits", "monitor", "ctrl", "nreads", "steps")

    def __init__(self):
        self.pc = 0
        self.regs = {}
        self.flags = None
        self.lr = None
        self.events = []
        self.constraints = []
        self.visits = {}
        self.monitor = None
        self.ctrl = frozenset()
        self.nreads = 0
        self.steps = 0

    def copy(self):
        s = _State.__new__(_State)
        s.pc, s.flags, s.lr, s.monitor, s.ctrl = self.pc, self.flags, self.lr, self.monitor, self.ctrl
        s.nreads, s.steps = self.nreads, self.steps
        s.regs = dict(self.regs)
        s.events = list(self.events)
        s.constraints = list(self.constraints)
        s.visits = dict(self.visits)
        return s

    def read(self, tid, loc, attrs, origin):
        sym = ("rd", tid, self.nreads)
        self.nreads += 1
        self.events.append(PathEvent("R", loc, sym, attrs, origin=origin, ctrl=self.ctrl))
        return sym

    def write(self, loc, value, attrs, origin, rmw=None):
        self.events.append(PathEvent("W", loc, value, attrs, rmw=rmw, origin=origin, ctrl=self.ctrl))


# ----- source threads

_RMW_READ_MO = {"relaxed": "relaxed", "acquire": "acquire", "release": "relaxed", "acq_rel": "acquire", "seq_cst": "seq_cst"}
_RMW_WRITE_MO = {"relaxed": "relaxed", "acquire": "relaxed", "release": "release", "acq_rel": "release", "seq_cst": "seq_cst"}
_CAS_FAIL_MO = _RMW_READ_MO


def _source_paths(test, tid):
    thread = test.threads[tid]
    out = []

    def run(seq, idx, st, k):
        # k continues with the remaining statements of enclosing blocks
        while idx < len(seq):
            i = seq[idx]
            idx += 1
            if i.op == "if":
                cond = mk_eq(st.regs.get(i.reg, 0), i.value)
                if isinstance(cond, bool):
                    if cond:
                        run(i.body, 0, st, lambda s, seq=seq, idx=idx, k=k: run(seq, idx, s, k))
                        return
                    continue
                yes, no = st, st.copy()
                yes.constraints.append(cond)
                no.constraints.append(mk_not(cond))
                run(i.body, 0, yes, lambda s, seq=seq, idx=idx, k=k: run(seq, idx, s, k))
                run(seq, idx, no, k)
                return
            branches = _source_step(test, tid, i, st)
            if branches is not None:
                for b in branches:
                    run(seq, idx, b, k)
                return
        k(st)

    def finish(st):
        out.append(Path(tid, st.events, st.constraints, st.regs, True, st.nreads))

    run(thread.instrs, 0, _State(), finish)
    return out


def _source_step(test, tid, i, st):
    """Execute one non-conditional statement; return forked states or None."""
    if i.op == "fence":
        st.events.append(PathEvent("F", attrs={"mo": i.mo}, origin=i.iid))
        return None
    width = test.init[i.loc].width
    if i.op == "store":
        st.write(i.loc, i.value, {"mo": i.mo}, i.iid)
        return None
    if i.op == "load":
        v = st.read(tid, i.loc, {"mo": i.mo}, i.iid)
        _set_src(st, i.reg, v)
        return None
    if i.op in ("exchange", "fetch_add"):
        ridx = len(st.events)
        v = st.read(tid, i.loc, {"mo": _RMW_READ_MO[i.mo]}, i.iid)
        new = i.value if i.op == "exchange" else mk_add(v, i.value, width)
        st.write(i.loc, new, {"mo": _RMW_WRITE_MO[i.mo]}, i.iid, rmw=ridx)
        _set_src(st, i.reg, v)
        return None
    if i.op == "cas":
        # the success and failure reads carry different orders, so the
        # read is created separately on each side of the fork
        out = []
        for ok in (True, False):
            s = st.copy()
            ridx = len(s.events)
            mo = _RMW_READ_MO[i.mo] if ok else _CAS_FAIL_MO[i.mo]
            v = s.read(tid, i.loc, {"mo": mo}, i.iid)
            cond = mk_eq(v, i.expected)
            s.constraints.append(cond if ok else mk_not(cond))
            if ok:
                s.write(i.loc, i.value, {"mo": _RMW_WRITE_MO[i.mo]}, i.iid, rmw=ridx)
            _set_src(s, i.reg, v)
            out.append(s)
        return out
    raise EngineError(f"unknown source op {i.op}")


def _set_src(st, reg, v):
    if reg and reg != "_":
        st.regs[reg] = v


# ----- assembly threads


def _reg_bits(r):
    return 64 if r.form == "X" else 32


def _asm_paths(test, tid, unroll):
    instrs = test.threads[tid].instrs
    labels = {i.args[0].name: k for k, i in enumerate(instrs) if i.is_label}
    addr_of = {r.num: loc for loc, r in test.bindings[tid].items()}
    out = []

    def val(st, a):
        if isinstance(a, Imm):
            return a.value
        if a.is_zero:
            return 0
        v = st.regs.get(a.num, 0)
        return mk_bits(v, 0, _reg_bits(a)) if _reg_bits(a) < 64 else v

    def setr(st, r, v):
        if r.is_zero:
            return
        if r.num in addr_of:
            raise EngineError(f"P{tid}: instruction overwrites address register {r}")
        st.regs[r.num] = mk_bits(v, 0, _reg_bits(r)) if not _is_const(v) or v >= 1 << _reg_bits(r) else v

    def loc_of(m):
        try:
            return addr_of[m.base.num]
        except KeyError:
            raise EngineError(f"P{tid}: register {m.base} holds no address") from None

    stack = [_State()]
    while stack:
        st = stack.pop()
        while True:
            st.steps += 1
            if st.steps > _STEP_LIMIT:
                raise EngineError(f"P{tid}: step limit exceeded")
            if st.pc >= len(instrs):
                out.append(Path(tid, st.events, st.constraints, st.regs, True, st.nreads))
                break
            ins = instrs[st.pc]
            op, args = ins.op, ins.args
            st.pc += 1
            if op == "LABEL":
                name = args[0].name
                st.visits[name] = st.visits.get(name, 0) + 1
                if st.visits[name] > unroll:
                    out.append(Path(tid, st.events, st.constraints, st.regs, False, st.nreads))
                    break
                continue
            if op == "MOV":
                setr(st, args[0], val(st, args[1]))
                continue
            if op == "ADD":
                setr(st, args[0], mk_add(val(st, args[1]), val(st, args[2]), _reg_bits(args[0])))
                continue
            if op == "CMP":
                st.flags = mk_eq(val(st, args[0]), val(st, args[1]))
                continue
            if op == "CCMP":
                holds = _cond(st, args[3].name, tid)
                st.flags = mk_ite(holds, mk_eq(val(st, args[0]), val(st, args[1])), bool(args[2].value & 4))
                continue
            if op == "B":
                st.pc = labels[args[0].name]
                continue
            if op == "BL":
                st.lr = st.pc
                st.pc = labels[args[0].name]
                continue
            if op == "RET":
                if st.lr is None:
                    raise EngineError(f"P{tid}: RET without a return address")
                st.pc, st.lr = st.lr, None
                continue
            if op in ("CBZ", "CBNZ", "B.EQ", "B.NE"):
                if op in ("CBZ", "CBNZ"):
                    cond = mk_eq(val(st, args[0]), 0)
                    if op == "CBNZ":
                        cond = mk_not(cond)
                else:
                    cond = _cond(st, op[2:], tid)
                target = labels[args[-1].name]
                if isinstance(cond, bool):
                    if cond:
                        st.pc = target
                    continue
                deps = frozenset(reads_of(cond))
                other = st.copy()
                st.constraints.append(cond)
                st.pc = target
                other.constraints.append(mk_not(cond))
                st.ctrl = st.ctrl | deps
                other.ctrl = other.ctrl | deps
                stack.append(other)
                continue
            if op == "DMB":
                st.events.append(PathEvent("F", attrs={"barrier": args[0].name}, origin=ins.origin, ctrl=st.ctrl))
                continue
            sem = SEMANTICS.get(op)
            if sem is None:
                raise EngineError(f"no semantics for {op}")
            succ = _asm_access(test, tid, ins, sem, st, val, setr, loc_of)
            if succ is not None:
                stack.extend(reversed(succ))
                break
    return out


def _cond(st, name, tid):
    if st.flags is None:
        raise EngineError(f"P{tid}: conditional use of unset flags")
    return st.flags if name == "EQ" else mk_not(st.flags)


def _feasible(c):
    return not (isinstance(c, bool) and not c)


def _asm_access(test, tid, ins, sem, st, val, setr, loc_of):
    """Execute one memory instruction.

    Returns None when ``st`` simply continues, or the list of successor
    states when the instruction forks.
    """
    args = ins.args
    loc = loc_of(args[-1])
    width = test.init[loc].width
    half = width // 2
    rattrs = {"acquire": sem.acquire, "acquire_pc": sem.acquire_pc}
    wattrs = {"release": sem.release}
    origin = ins.origin
    kind = sem.kind

    def narrow(v):
        return mk_bits(v, 0, width) if width < 64 else v

    if kind in ("load", "ldex"):
        if kind == "ldex":
            rattrs["exclusive"] = True
            st.monitor = (loc, len(st.events))
        v = st.read(tid, loc, rattrs, origin)
        if sem.pair:
            setr(st, args[0], mk_bits(v, 0, half))
            setr(st, args[1], mk_bits(v, half, half))
        else:
            setr(st, args[0], v)
        return None

    if kind == "store":
        if sem.pair:
            value = mk_cat(val(st, args[0]), val(st, args[1]), half)
        else:
            value = narrow(val(st, args[0]))
        st.write(loc, value, wattrs, origin)
        return None

    if kind == "stex":
        status = args[0]
        if sem.pair:
            value = mk_cat(val(st, args[1]), val(st, args[2]), half)
        else:
            value = narrow(val(st, args[1]))
        monitor, st.monitor = st.monitor, None
        # an exclusive store may always fail; it can succeed only when the
        # last exclusive load on this path was to the same location
        fail = st.copy()
        setr(fail, status, 1)
        if monitor is None or monitor[0] != loc:
            return [fail]
        wattrs["exclusive"] = True
        st.write(loc, value, wattrs, origin, rmw=monitor[1])
        setr(st, status, 0)
        return [st, fail]

    if kind in ("swp", "ldadd", "cas"):
        if kind == "cas":
            if sem.pair:
                cmp = mk_cat(val(st, args[0]), val(st, args[1]), half)
                new = mk_cat(val(st, args[2]), val(st, args[3]), half)
                dests = (args[0], args[1])
            else:
                cmp, new, dests = narrow(val(st, args[0])), narrow(val(st, args[1])), (args[0],)
        else:
            src = narrow(val(st, args[0]))
            dests = (args[1],)
        rattrs["ld_visible"] = not all(d.is_zero for d in dests)
        ridx = len(st.events)
        v = st.read(tid, loc, rattrs, origin)
        succ = [st]
        if kind == "swp":
            st.write(loc, src, wattrs, origin, rmw=ridx)
        elif kind == "ldadd":
            st.write(loc, mk_add(v, src, width), wattrs, origin, rmw=ridx)
        else:
            cond = mk_eq(v, cmp)
            fail = st.copy()
            fail.constraints.append(mk_not(cond))
            st.constraints.append(cond)
            st.write(loc, new, wattrs, origin, rmw=ridx)
            succ = [s for s in (st, fail) if _feasible(s.constraints[-1])]
        for s in succ:
            if len(dests) == 2:
                setr(s, dests[0], mk_bits(v, 0, half))
                setr(s, dests[1], mk_bits(v, half, half))
            else:
                setr(s, dests[0], v)
        return succ if kind == "cas" else None
    raise EngineError(f"no semantics for {ins.op}")


def thread_paths(test, tid, unroll=DEFAULT_UNROLL):
    """All control paths of one thread, incomplete ones included (flagged)."""
    if unroll < 1:
        raise ValueError("unroll must be positive")
    if isinstance(test, SourceLitmusTest):
        return _source_paths(test, tid)
    return _asm_paths(test, tid, unroll)


# --------------------------------------------------------------------------
# executions


class Execution:
    """One candidate execution: events with po, rf and co fixed.

    Derived relations are computed on first use and cached.
    """

    def __init__(self, events, threads, rf, co, values, registers, data=(), ctrl=()):
        self.events = events
        self.threads = threads  # per thread, eids in program order
        self.rf = rf  # read eid -> write eid
        self.co = co  # loc -> tuple of write eids, initial write first
        self.values = values  # eid -> value read or written
        self.registers = registers  # per thread, register -> final value
        self.data_pairs = tuple(data)
        self.ctrl_pairs = tuple(ctrl)
        self.n = len(events)

    def mask(self, pred):
        return mask_of(e.eid for e in self.events if pred(e))

    @cached_property
    def reads(self):
        return self.mask(lambda e: e.kind == "R")

    @cached_property
    def writes(self):
        return self.mask(lambda e: e.kind == "W")

    @cached_property
    def fences(self):
        return self.mask(lambda e: e.kind == "F")

    @cached_property
    def po(self):
        rel = Relation(self.n)
        for eids in self.threads:
            later = 0
            for e in reversed(eids):
                rel.rows[e] = later
                later |= 1 << e
        return rel

    @cached_property
    def same_loc(self):
        by_loc = {}
        for e in self.events:
            if e.loc is not None:
                by_loc[e.loc] = by_loc.get(e.loc, 0) | 1 << e.eid
        return Relation(self.n, [by_loc.get(e.loc, 0) for e in self.events])

    @cached_property
    def same_thread(self):
        by_tid = {}
        for e in self.events:
            by_tid[e.tid] = by_tid.get(e.tid, 0) | 1 << e.eid
        return Relation(self.n, [by_tid[e.tid] if not e.is_init else 0 for e in self.events])

    @cached_property
    def po_loc(self):
        return self.po & self.same_loc

    @cached_property
    def rf_rel(self):
        return Relation.from_pairs(self.n, [(w, r) for r, w in self.rf.items()])

    @cached_property
    def co_rel(self):
        rel = Relation(self.n)
        for order in self.co.values():
            later = 0
            for w in reversed(order):
                rel.rows[w] = later
                later |= 1 << w
        return rel

    @cached_property
    def fr(self):
        return self.rf_rel.inverse().seq(self.co_rel)

    @cached_property
    def rmw_rel(self):
        return Relation.from_pairs(
            self.n, [(e.eid, e.rmw) for e in self.events if e.kind == "R" and e.rmw is not None]
        )

    @cached_property
    def data(self):
        return Relation.from_pairs(self.n, self.data_pairs)

    @cached_property
    def ctrl(self):
        return Relation.from_pairs(self.n, self.ctrl_pairs)

    @cached_property
    def addr(self):
        # address registers are fixed per thread, so there are none
        return Relation(self.n)

    def external(self, rel):
        return rel - self.same_thread

    def internal(self, rel):
        return rel & self.same_thread

    @cached_property
    def memory(self):
        return {loc: self.values[order[-1]] for loc, order in self.co.items()}

    def atomicity_ok(self):
        """Each RMW read takes its value from the write just before its own in co."""
        for e in self.events:
            if e.kind == "R" and e.rmw is not None:
                order = self.co[e.loc]
                k = order.index(e.rmw)
                if k == 0 or order[k - 1] != self.rf[e.eid]:
                    return False
        return True


_EVENT_KEYS = {"mo", "acquire", "acquire_pc", "release", "barrier", "ld_visible", "exclusive"}


def _build(test, combo):
    """Lay out events for one path per thread."""
    locs = sorted(test.init)
    events = [Event(k, -1, "W", loc) for k, loc in enumerate(locs)]
    wvalue = {k: test.init[loc].value for k, loc in enumerate(locs)}
    init_eid = {loc: k for k, loc in enumerate(locs)}
    key_to_eid, threads, data, ctrl_src = {}, [], [], []
    constraints = []
    for t, path in enumerate(combo):
        base = len(events)
        partner = {}
        for j, pe in enumerate(path.events):
            if pe.rmw is not None:
                partner[base + j] = base + pe.rmw
                partner[base + pe.rmw] = base + j
        eids = []
        for j, pe in enumerate(path.events):
            eid = base + j
            attrs = {k: v for k, v in pe.attrs.items() if k in _EVENT_KEYS}
            events.append(Event(eid, t, pe.kind, pe.loc, rmw=partner.get(eid), origin=pe.origin, po=j, **attrs))
            eids.append(eid)
            if pe.kind == "R":
                key_to_eid[(pe.value[1], pe.value[2])] = eid
            elif pe.kind == "W":
                wvalue[eid] = pe.value
            for key in pe.ctrl:
                ctrl_src.append((key, eid))
        threads.append(eids)
        constraints.extend(path.constraints)
    for eid, v in list(wvalue.items()):
        for key in reads_of(v):
            data.append((key_to_eid[key], eid))
    ctrl = [(key_to_eid[k], e) for k, e in ctrl_src]
    return events, threads, init_eid, key_to_eid, wvalue, constraints, data, ctrl


def enumerate_executions(test, unroll=DEFAULT_UNROLL, max_candidates=DEFAULT_MAX_CANDIDATES, prune=False):
    """Yield every candidate execution of ``test``.

    Candidates satisfy path constraints, value coherence of rf and RMW
    atomicity.  With ``prune`` the enumeration also skips candidates that
    break per-location coherence, which every registered model requires.
    """
    per_thread = [[p for p in thread_paths(test, t, unroll) if p.complete] for t in range(len(test.threads))]
    count = 0
    for combo in itertools.product(*per_thread):
        for ex in _combo_candidates(test, combo, prune):
            count += 1
            if count > max_candidates:
                raise CapExceeded(f"more than {max_candidates} candidate executions; raise --max-candidates")
            yield ex


def _combo_candidates(test, combo, prune):
    events, threads, init_eid, key_to_eid, wvalue, constraints, data, ctrl = _build(test, combo)
    locs = sorted(test.init)
    writes_at = {loc: [e.eid for e in events if e.kind == "W" and not e.is_init and e.loc == loc] for loc in locs}
    reads = [e.eid for e in events if e.kind == "R"]
    eid_key = {eid: key for key, eid in key_to_eid.items()}
    ev = events

    def po_before(a, b):
        return ev[a].tid == ev[b].tid and ev[a].po < ev[b].po

    # per-read neighbourhoods used by the coherence pruning
    prior_w, later_w, prior_r = {}, {}, {}
    for r in reads:
        same = [e.eid for e in events if e.tid == ev[r].tid and e.loc == ev[r].loc and e.eid != r]
        prior_w[r] = [x for x in same if ev[x].kind == "W" and po_before(x, r)]
        later_w[r] = [x for x in same if ev[x].kind == "W" and po_before(r, x)]
        prior_r[r] = [x for x in same if ev[x].kind == "R" and po_before(x, r)]

    def co_orders(loc):
        ws = writes_at[loc]
        for perm in itertools.permutations(ws):
            if prune and any(po_before(perm[j], perm[i]) for i in range(len(perm)) for j in range(i + 1, len(perm))):
                continue
            yield (init_eid[loc],) + perm

    co_choices = [list(co_orders(loc)) for loc in locs]
    cons = [(c, reads_of(c)) for c in constraints]

    for co_tuple in itertools.product(*co_choices):
        co = dict(zip(locs, co_tuple))
        pos = {w: k for order in co_tuple for k, w in enumerate(order)}
        rf = {}

        def lookup_factory(memo, visiting):
            def lookup(t, k):
                r = key_to_eid[(t, k)]
                if r in memo:
                    return memo[r]
                if r not in rf:
                    raise Unresolved
                if r in visiting:
                    raise ValueCycle
                visiting.add(r)
                v = evaluate(wvalue[rf[r]], lookup)
                visiting.discard(r)
                memo[r] = v
                return v

            return lookup

        def feasible():
            lookup = lookup_factory({}, set())
            for c, _ in cons:
                try:
                    if not evaluate(c, lookup):
                        return False
                except Unresolved:
                    continue
                except ValueCycle:
                    return False
            return True

        def choices(r):
            e = ev[r]
            order = co[e.loc]
            if e.rmw is not None:
                k = order.index(e.rmw)
                opts = [order[k - 1]] if k > 0 else []
            else:
                opts = list(order)
            if not prune:
                return opts
            out = []
            for w in opts:
                if ev[w].tid == e.tid and ev[w].po > e.po:
                    continue
                if any(pos[w] < pos[x] for x in prior_w[r]):
                    continue
                if any(pos[w] >= pos[x] for x in later_w[r]):
                    continue
                if any(pos[w] < pos[rf[x]] for x in prior_r[r]):
                    continue
                out.append(w)
            return out

        def leaf():
            memo = {}
            lookup = lookup_factory(memo, set())
            try:
                values = {}
                for r in reads:
                    values[r] = lookup(*eid_key[r])
                for w, v in wvalue.items():
                    values[w] = evaluate(v, lookup)
                regs = []
                for path in combo:
                    regs.append({name: evaluate(v, lookup) for name, v in path.regs.items()})
            except ValueCycle:
                return None
            return Execution(events, threads, dict(rf), co, values, regs, data, ctrl)

        def walk(i):
            if i == len(reads):
                ex = leaf()
                if ex is not None:
                    yield ex
                return
            r = reads[i]
            for w in choices(r):
                rf[r] = w
                if feasible():
                    yield from walk(i + 1)
                del rf[r]

        yield from walk(0)


# --------------------------------------------------------------------------
# outcomes


def observables(test):
    """Registers an outcome records, as (thread, name) pairs.

    Source tests observe the registers named in the predicate.  Assembly
    tests observe those plus every register in the observation map, each
    register number listed once.
    """
    keys = []
    seen = set()
    for t, name in sorted(set(test.pred.registers())):
        keys.append((t, name))
        if isinstance(test, AsmLitmusTest):
            seen.add((t, parse_reg(name).num))
    if isinstance(test, AsmLitmusTest):
        for t, num in sorted(test.obs_map.registers()):
            if (t, num) not in seen:
                keys.append((t, f"X{num}"))
                seen.add((t, num))
    return keys


def _register_value(test, regs, name):
    if isinstance(test, SourceLitmusTest):
        return regs.get(name, 0)
    r = parse_reg(name)
    if r.is_zero:
        return 0
    v = regs.get(r.num, 0)
    return v & ((1 << _reg_bits(r)) - 1)


def extract(test, ex, observe=None):
    """The outcome of one execution: observed registers then all memory."""
    observe = observables(test) if observe is None else observe
    items = [(f"P{t}:{name}", _register_value(test, ex.registers[t], name)) for t, name in observe]
    items += [(loc, ex.memory[loc]) for loc in sorted(ex.memory)]
    return tuple(items)


def outcomes(test, model, unroll=DEFAULT_UNROLL, max_candidates=DEFAULT_MAX_CANDIDATES, observe=None):
    """The set of outcomes of ``test`` allowed by ``model``."""
    from .models import get_model

    m = get_model(model) if isinstance(model, str) else model
    m.check_applicable(test)
    observe = observables(test) if observe is None else observe
    found = set()
    for ex in enumerate_executions(test, unroll, max_candidates, prune=m.requires_coherence):
        if m.consistent(ex):
            found.add(extract(test, ex, observe))
    return frozenset(found)


def format_outcome(outcome, keys=None):
    """Render as ``{P0:t=0; P1:u=0; x=1}``, optionally projected onto ``keys``."""
    items = outcome if keys is None else [(k, v) for k, v in outcome if k in keys]
    return "{" + "; ".join(f"{k}={v}" for k, v in items) + "}"


def project(outcomes_, keys):
    keys = set(keys)
    return frozenset(tuple((k, v) for k, v in o if k in keys) for o in outcomes_)
