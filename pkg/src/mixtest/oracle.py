"""A brute-force sequential-consistency oracle.

Runs a litmus test by interleaving whole instructions in every possible
order over one shared memory, with concrete values throughout.  It shares
no code with the candidate-execution engine (no events, no relations), so
agreement between the two is meaningful evidence.

Assembly tests are run with a per-thread exclusive monitor: a store
exclusive may succeed only if no write to the monitored location happened
since the matching load exclusive, and it may always fail.  Label visits
are bounded the same way as in the engine, and runs that exceed the bound
are dropped.
"""

from __future__ import annotations

from .engine import DEFAULT_UNROLL, observables
from .isa import SEMANTICS, AsmInstr, Imm, Opt, parse_reg
from .litmus import AsmLitmusTest, AsmThread, SourceLitmusTest

class OracleError(RuntimeError):
    pass


def _mask(width):
    return (1 << width) - 1


# --------------------------------------------------------------------------
# source tests


def _linearize(seq, out):
    """Flatten a statement list into (kind, ...) steps with jumps for ``if``."""
    for i in seq:
        if i.op == "if":
            at = len(out)
            out.append(None)  # patched below
            _linearize(i.body, out)
            out[at] = ("skip_unless", i.reg, i.value, len(out))
        else:
            out.append(("do", i))
    return out


def _source_step(test, i, regs, mem):
    """Apply one source instruction atomically; returns (regs, mem)."""
    if i.op == "fence":
        return regs, mem
    width = test.init[i.loc].width
    old = mem[i.loc]
    new = None
    result = old
    if i.op == "store":
        new = i.value
    elif i.op == "exchange":
        new = i.value
    elif i.op == "fetch_add":
        new = (old + i.value) & _mask(width)
    elif i.op == "cas":
        if old == i.expected:
            new = i.value
    if new is not None:
        mem = dict(mem)
        mem[i.loc] = new
    if i.has_result and i.reg != "_":
        regs = dict(regs)
        regs[i.reg] = result
    return regs, mem


def _source_outcomes(test):
    progs = [_linearize(t.instrs, []) for t in test.threads]
    keys = observables(test)
    init_mem = {loc: l.value for loc, l in test.init.items()}
    seen, found = set(), set()
    start = (tuple(0 for _ in progs), tuple({} for _ in progs), init_mem)
    stack = [start]
    while stack:
        pcs, regs, mem = stack.pop()
        key = (pcs, tuple(tuple(sorted(r.items())) for r in regs), tuple(sorted(mem.items())))
        if key in seen:
            continue
        seen.add(key)
        done = True
        for t, prog in enumerate(progs):
            pc = pcs[t]
            if pc >= len(prog):
                continue
            done = False
            step = prog[pc]
            r = regs[t]
            m = mem
            if step[0] == "skip_unless":
                _, reg, value, target = step
                nxt = pc + 1 if r.get(reg, 0) == value else target
            else:
                r, m = _source_step(test, step[1], r, mem)
                nxt = pc + 1
            stack.append((pcs[:t] + (nxt,) + pcs[t + 1 :], regs[:t] + (r,) + regs[t + 1 :], m))
        if done:
            items = [(f"P{t}:{name}", regs[t].get(name, 0)) for t, name in keys]
            items += sorted(mem.items())
            found.add(tuple(items))
    return frozenset(found)


# --------------------------------------------------------------------------
# assembly tests


def _bits(reg):
    return 64 if reg.form == "X" else 32


class _Thread:
    """Per-thread machine state.  Successors get a ``clone``; ``key`` is its hashable form."""

    __slots__ = ("pc", "regs", "z", "lr", "visits", "monitor")

    def __init__(self, pc=0, regs=None, z=None, lr=None, visits=None, monitor=None):
        self.pc = pc
        self.regs = regs or {}
        self.z = z
        self.lr = lr
        self.visits = visits or {}
        self.monitor = monitor

    def clone(self):
        return _Thread(self.pc, dict(self.regs), self.z, self.lr, dict(self.visits), self.monitor)

    def key(self):
        return (self.pc, tuple(sorted(self.regs.items())), self.z, self.lr, tuple(sorted(self.visits.items())), self.monitor)


class _AsmRunner:
    def __init__(self, test, unroll):
        self.test = test
        self.unroll = unroll
        self.code = [th.instrs for th in test.threads]
        self.labels = [{i.args[0].name: k for k, i in enumerate(c) if i.is_label} for c in self.code]
        self.loc_of = [{r.num: loc for loc, r in b.items()} for b in test.bindings]

    def get(self, th, a):
        if isinstance(a, Imm):
            return a.value
        if a.is_zero:
            return 0
        return th.regs.get(a.num, 0) & _mask(_bits(a))

    def put(self, th, r, v):
        if not r.is_zero:
            th.regs[r.num] = v & _mask(_bits(r))

    def run_local(self, t, th):
        """Advance through instructions that touch no memory.

        Returns the thread state parked at its next memory access (or at its
        end), or None when the unroll bound cut the run short.
        """
        code, labels = self.code[t], self.labels[t]
        steps = 0
        while th.pc < len(code):
            steps += 1
            if steps > 10_000:
                raise OracleError(f"P{t}: no progress")
            ins = code[th.pc]
            op, args = ins.op, ins.args
            if op in SEMANTICS:
                return th
            th.pc += 1
            if op == "LABEL":
                n = th.visits.get(args[0].name, 0) + 1
                th.visits[args[0].name] = n
                if n > self.unroll:
                    return None
            elif op == "MOV":
                self.put(th, args[0], self.get(th, args[1]))
            elif op == "ADD":
                self.put(th, args[0], self.get(th, args[1]) + self.get(th, args[2]))
            elif op == "CMP":
                th.z = self.get(th, args[0]) == self.get(th, args[1])
            elif op == "CCMP":
                if self._cond(th, args[3].name):
                    th.z = self.get(th, args[0]) == self.get(th, args[1])
                else:
                    th.z = bool(args[2].value & 4)
            elif op == "B":
                th.pc = labels[args[0].name]
            elif op == "BL":
                th.lr = th.pc
                th.pc = labels[args[0].name]
            elif op == "RET":
                th.pc, th.lr = th.lr, None
            elif op in ("CBZ", "CBNZ"):
                zero = self.get(th, args[0]) == 0
                if zero == (op == "CBZ"):
                    th.pc = labels[args[1].name]
            elif op in ("B.EQ", "B.NE"):
                if self._cond(th, op[2:]):
                    th.pc = labels[args[0].name]
            elif op == "DMB":
                pass
            else:
                raise OracleError(f"unsupported instruction {ins}")
        return th

    def _cond(self, th, name):
        if th.z is None:
            raise OracleError("flags used before being set")
        return th.z if name == "EQ" else not th.z

    def access(self, t, th, mem, wcount):
        """All successors of executing the memory access at ``th.pc``."""
        ins = self.code[t][th.pc]
        sem = SEMANTICS[ins.op]
        args = ins.args
        loc = self.loc_of[t][args[-1].base.num]
        width = self.test.init[loc].width
        half = width // 2
        old = mem[loc]
        out = []

        def after(new_th, new_val=None):
            m, w = mem, wcount
            if new_val is not None:
                m = dict(mem)
                m[loc] = new_val & _mask(width)
                w = dict(wcount)
                w[loc] = w.get(loc, 0) + 1
            new_th.pc += 1
            out.append((new_th, m, w))

        def cat(lo, hi):
            return (lo & _mask(half)) | ((hi & _mask(half)) << half)

        def split_into(th2, r0, r1, v):
            self.put(th2, r0, v & _mask(half))
            self.put(th2, r1, v >> half)

        kind = sem.kind
        if kind in ("load", "ldex"):
            n = th.clone()
            if sem.pair:
                split_into(n, args[0], args[1], old)
            else:
                self.put(n, args[0], old)
            if kind == "ldex":
                n.monitor = (loc, wcount.get(loc, 0))
            after(n)
        elif kind == "store":
            val = cat(self.get(th, args[0]), self.get(th, args[1])) if sem.pair else self.get(th, args[0])
            after(th.clone(), val)
        elif kind == "stex":
            val = cat(self.get(th, args[1]), self.get(th, args[2])) if sem.pair else self.get(th, args[1])
            fail = th.clone()
            fail.monitor = None
            self.put(fail, args[0], 1)
            after(fail)
            if th.monitor == (loc, wcount.get(loc, 0)):
                ok = th.clone()
                ok.monitor = None
                self.put(ok, args[0], 0)
                after(ok, val)
        elif kind in ("swp", "ldadd"):
            src = self.get(th, args[0])
            n = th.clone()
            self.put(n, args[1], old)
            after(n, src if kind == "swp" else old + src)
        elif kind == "cas":
            if sem.pair:
                cmp = cat(self.get(th, args[0]), self.get(th, args[1]))
                new = cat(self.get(th, args[2]), self.get(th, args[3]))
            else:
                cmp = self.get(th, args[0]) & _mask(width)
                new = self.get(th, args[1])
            n = th.clone()
            if sem.pair:
                split_into(n, args[0], args[1], old)
            else:
                self.put(n, args[0], old)
            after(n, new if old == cmp else None)
        else:
            raise OracleError(f"unsupported access {ins}")
        return out

    def outcomes(self):
        test = self.test
        keys = observables(test)
        mem0 = {loc: l.value for loc, l in test.init.items()}
        threads = []
        for t in range(len(self.code)):
            th = self.run_local(t, _Thread())
            if th is None:
                return frozenset()
            threads.append(th)
        stack = [(tuple(threads), mem0, {})]
        seen, found = set(), set()
        while stack:
            ths, mem, wc = stack.pop()
            key = (tuple(th.key() for th in ths), tuple(sorted(mem.items())), tuple(sorted(wc.items())))
            if key in seen:
                continue
            seen.add(key)
            done = True
            for t, th in enumerate(ths):
                if th.pc >= len(self.code[t]):
                    continue
                done = False
                for nth, m, w in self.access(t, th, mem, wc):
                    nth = self.run_local(t, nth)
                    if nth is not None:
                        stack.append((ths[:t] + (nth,) + ths[t + 1 :], m, w))
            if done:
                items = []
                for t, name in keys:
                    r = parse_reg(name)
                    v = 0 if r.is_zero else ths[t].regs.get(r.num, 0) & _mask(_bits(r))
                    items.append((f"P{t}:{name}", v))
                items += sorted(mem.items())
                found.add(tuple(items))
        return frozenset(found)


def sc_outcomes(test, unroll=DEFAULT_UNROLL):
    """Outcomes of ``test`` under sequential consistency, by enumeration."""
    if unroll < 1:
        raise ValueError("unroll must be positive")
    if isinstance(test, SourceLitmusTest):
        return _source_outcomes(test)
    return _AsmRunner(test, unroll).outcomes()


def saturate_fences(test):
    """Put ``DMB ISH`` after every memory access of every thread."""
    threads = []
    for th in test.threads:
        code = []
        for i in th.instrs:
            code.append(i)
            if i.op in SEMANTICS:
                code.append(AsmInstr("DMB", (Opt("ISH"),), i.origin))
        threads.append(AsmThread(th.tid, tuple(code)))
    return AsmLitmusTest(test.name, test.init, test.bindings, tuple(threads), test.pred, test.obs_map, test.arch)


__all__ = ["OracleError", "saturate_fences", "sc_outcomes"]
