"""Litmus tests at source (C-like) and assembly level.

Both kinds are labelled records of an initial state, a program of threads
and an existential predicate over the final state.  This module holds the
data types, the two parsers and printers, and the canonical hash used to
group identical compiled tests.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field

from .isa import AsmInstr, AsmSyntaxError, Label, Mem, Reg, parse_instr, parse_reg, split_labelled

ORDERS = ("relaxed", "acquire", "release", "acq_rel", "seq_cst")
WIDTHS = (8, 16, 32, 64, 128)
OPS = ("store", "load", "exchange", "fetch_add", "cas", "fence", "if")
RESULT_OPS = ("load", "exchange", "fetch_add", "cas")
RMW_OPS = ("exchange", "fetch_add", "cas")
DISCARD = "_"

MAX_THREADS = 5
MAX_INSTRS = 20
MAX_IF_DEPTH = 2

_LOAD_ORDERS = ("relaxed", "acquire", "seq_cst")
_STORE_ORDERS = ("relaxed", "release", "seq_cst")
_WIDTH128_OPS = ("load", "store", "cas", "exchange")


class LitmusError(ValueError):
    """A test that violates a structural invariant."""


class ParseError(LitmusError):
    def __init__(self, message, line=None, col=None):
        self.line, self.col = line, col
        where = f"{line}:{col}: " if line is not None else ""
        super().__init__(where + message)


def valid_order(op, mo):
    """Whether memory order ``mo`` may annotate operation ``op``."""
    if mo not in ORDERS:
        return False
    if op == "load":
        return mo in _LOAD_ORDERS
    if op == "store":
        return mo in _STORE_ORDERS
    return True


def valid_width(op, width):
    if width not in WIDTHS:
        return False
    return width != 128 or op in _WIDTH128_OPS


@dataclass(frozen=True)
class Location:
    width: int = 32
    value: int = 0
    const: bool = False


@dataclass(frozen=True)
class SourceInstr:
    """One source statement.

    ``reg`` is the result register (``"_"`` discards it) or, for ``if``,
    the register tested.  ``value`` is the stored/added/desired value or
    the constant an ``if`` compares against; ``expected`` is the cas
    comparand.
    """

    iid: str
    op: str
    loc: str | None = None
    reg: str | None = None
    value: int | None = None
    expected: int | None = None
    mo: str | None = None
    body: tuple = ()

    @property
    def has_result(self):
        return self.op in RESULT_OPS and self.reg not in (None, DISCARD)


@dataclass(frozen=True)
class Thread:
    tid: str
    instrs: tuple

    def flat(self):
        """Instructions in pre-order, conditional bodies included."""
        out = []

        def walk(seq):
            for i in seq:
                out.append(i)
                if i.op == "if":
                    walk(i.body)

        walk(self.instrs)
        return out


@dataclass(frozen=True)
class Atom:
    thread: int | None  # None for a memory location
    name: str
    value: int

    @property
    def key(self):
        return self.name if self.thread is None else f"P{self.thread}:{self.name}"

    def __str__(self):
        return f"{self.key}={self.value}"


@dataclass(frozen=True)
class Predicate:
    atoms: tuple

    def holds(self, outcome):
        d = dict(outcome)
        return all(d.get(a.key) == a.value for a in self.atoms)

    def registers(self):
        return [(a.thread, a.name) for a in self.atoms if a.thread is not None]

    def locations(self):
        return [a.name for a in self.atoms if a.thread is None]


@dataclass(frozen=True)
class SourceLitmusTest:
    name: str
    init: dict
    threads: tuple
    pred: Predicate

    def instructions(self):
        return [i for t in self.threads for i in t.flat()]

    def iids(self):
        return [i.iid for i in self.instructions()]

    def width_of(self, loc):
        return self.init[loc].width


# --------------------------------------------------------------------------
# source parser

_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<comment>//[^\n]*)"
    r"|(?P<and>/\\)|(?P<eqeq>==)|(?P<int>-?(?:0x[0-9a-fA-F]+|\d+))"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<punct>[{}();,=:])"
)


class _Tokens:
    def __init__(self, text, line0=1):
        self.toks = []
        line, col, pos = line0, 1, 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if not m:
                raise ParseError(f"unexpected character {text[pos]!r}", line, col)
            kind = m.lastgroup
            if kind == "nl":
                line, col = line + 1, 1
            elif kind not in ("ws", "comment"):
                self.toks.append((kind, m.group(), line, col))
            col += m.end() - m.start()
            pos = m.end()
        self.i = 0
        self.end = (line, col)

    def peek(self, k=0):
        j = self.i + k
        return self.toks[j] if j < len(self.toks) else ("eof", "", *self.end)

    def next(self):
        tok = self.peek()
        self.i += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        return ParseError(message, tok[2], tok[3])

    def expect(self, value=None, kind=None):
        tok = self.next()
        if (value is not None and tok[1] != value) or (kind is not None and tok[0] != kind):
            want = repr(value) if value is not None else kind
            raise self.error(f"expected {want}, got {tok[1] or 'end of input'!r}", tok)
        return tok

    def accept(self, value):
        if self.peek()[1] == value:
            return self.next()
        return None


def parse_source(text):
    """Parse a C-like source litmus test."""
    lines = text.split("\n")
    head_idx = next((k for k, l in enumerate(lines) if l.strip() and not l.strip().startswith("//")), None)
    if head_idx is None:
        raise ParseError("empty input", 1, 1)
    head = lines[head_idx].split()
    if len(head) != 2 or head[0] != "C":
        raise ParseError("header must be 'C NAME'", head_idx + 1, 1)
    name = head[1]
    toks = _Tokens("\n".join(lines[head_idx + 1 :]), line0=head_idx + 2)

    init = _parse_source_init(toks)
    threads = []
    while re.fullmatch(r"P\d+", toks.peek()[1] or ""):
        threads.append(_parse_source_thread(toks, len(threads)))
    if not threads:
        raise toks.error("no threads")
    toks.expect("exists")
    atoms = _parse_atoms(toks)
    if toks.peek()[0] != "eof":
        raise toks.error(f"trailing input {toks.peek()[1]!r}")
    test = SourceLitmusTest(name, init, tuple(threads), Predicate(tuple(atoms)))
    validate_source(test)
    return test


def _parse_source_init(toks):
    toks.expect("{")
    init = {}
    while not toks.accept("}"):
        const = bool(toks.accept("const"))
        tok = toks.expect(kind="name")
        loc = tok[1]
        if loc in init:
            raise toks.error(f"location {loc} declared twice", tok)
        toks.expect(":")
        wtok = toks.expect(kind="int")
        toks.expect("=")
        vtok = toks.expect(kind="int")
        toks.expect(";")
        width = int(wtok[1], 0)
        if width not in WIDTHS:
            raise toks.error(f"bad width {width}", wtok)
        init[loc] = Location(width, int(vtok[1], 0), const)
    return init


def _parse_source_thread(toks, index):
    tok = toks.next()
    if tok[1] != f"P{index}":
        raise toks.error(f"expected thread P{index}, got {tok[1]}", tok)
    toks.expect("{")
    counter = [0]
    instrs = _parse_block(toks, tok[1], counter, depth=0)
    return Thread(tok[1], tuple(instrs))


def _parse_block(toks, tid, counter, depth):
    out = []
    while not toks.accept("}"):
        out.append(_parse_stmt(toks, tid, counter, depth))
    return out


def _fresh_iid(tid, counter):
    iid = f"{tid}_{counter[0]}"
    counter[0] += 1
    return iid


def _parse_mo(toks):
    tok = toks.expect(kind="name")
    if tok[1] not in ORDERS:
        raise toks.error(f"unknown memory order {tok[1]!r}", tok)
    return tok[1]


def _parse_int(toks):
    return int(toks.expect(kind="int")[1], 0)


def _parse_stmt(toks, tid, counter, depth):
    tok = toks.peek()
    if tok[1] == "if":
        if depth >= MAX_IF_DEPTH:
            raise toks.error(f"conditionals nest at most {MAX_IF_DEPTH} deep")
        toks.next()
        iid = _fresh_iid(tid, counter)
        toks.expect("(")
        reg = toks.expect(kind="name")[1]
        toks.expect("==")
        const = _parse_int(toks)
        toks.expect(")")
        toks.expect("{")
        body = _parse_block(toks, tid, counter, depth + 1)
        return SourceInstr(iid, "if", reg=reg, value=const, body=tuple(body))

    if tok[1] in ("store", "fence"):
        toks.next()
        iid = _fresh_iid(tid, counter)
        toks.expect("(")
        if tok[1] == "fence":
            mo = _parse_mo(toks)
            toks.expect(")")
            toks.expect(";")
            return SourceInstr(iid, "fence", mo=mo)
        loc = toks.expect(kind="name")[1]
        toks.expect(",")
        val = _parse_int(toks)
        toks.expect(",")
        mo = _parse_mo(toks)
        toks.expect(")")
        toks.expect(";")
        if not valid_order("store", mo):
            raise toks.error(f"store cannot be {mo}", tok)
        return SourceInstr(iid, "store", loc=loc, value=val, mo=mo)

    reg_tok = toks.expect(kind="name")
    toks.expect("=")
    op_tok = toks.expect(kind="name")
    op = op_tok[1]
    if op not in RESULT_OPS:
        raise toks.error(f"unknown operation {op!r}", op_tok)
    iid = _fresh_iid(tid, counter)
    toks.expect("(")
    loc = toks.expect(kind="name")[1]
    val = exp = None
    if op in ("exchange", "fetch_add"):
        toks.expect(",")
        val = _parse_int(toks)
    elif op == "cas":
        toks.expect(",")
        exp = _parse_int(toks)
        toks.expect(",")
        val = _parse_int(toks)
    toks.expect(",")
    mo = _parse_mo(toks)
    toks.expect(")")
    toks.expect(";")
    if not valid_order(op, mo):
        raise toks.error(f"{op} cannot be {mo}", op_tok)
    return SourceInstr(iid, op, loc=loc, reg=reg_tok[1], value=val, expected=exp, mo=mo)


def _parse_atoms(toks):
    toks.expect("(")
    atoms = [_parse_atom(toks)]
    while toks.accept("/\\"):
        atoms.append(_parse_atom(toks))
    toks.expect(")")
    return atoms


def _parse_atom(toks):
    first = toks.next()
    if first[0] == "int" or re.fullmatch(r"P\d+", first[1]):
        if toks.peek()[1] == ":":
            toks.next()
            thread = int(first[1].lstrip("P"))
            name = toks.expect(kind="name")[1]
            toks.expect("=")
            return Atom(thread, name, _parse_int(toks))
    if first[0] != "name":
        raise toks.error(f"bad predicate atom at {first[1]!r}", first)
    toks.expect("=")
    return Atom(None, first[1], _parse_int(toks))


def validate_source(test):
    """Raise :class:`LitmusError` on any violated structural invariant."""
    if not test.threads:
        raise LitmusError("no threads")
    if len(test.threads) > MAX_THREADS:
        raise LitmusError(f"at most {MAX_THREADS} threads allowed")
    total = len(test.instructions())
    if total > MAX_INSTRS:
        raise LitmusError(f"at most {MAX_INSTRS} instructions allowed, got {total}")
    for loc, l in test.init.items():
        if l.width not in WIDTHS:
            raise LitmusError(f"{loc}: bad width {l.width}")
        if not 0 <= l.value < 2**l.width:
            raise LitmusError(f"{loc}: initial value out of range")
    regs_by_thread = []
    for k, th in enumerate(test.threads):
        if th.tid != f"P{k}":
            raise LitmusError(f"thread {k} must be named P{k}")
        for pos, i in enumerate(th.flat()):
            if i.iid != f"{th.tid}_{pos}":
                raise LitmusError(f"iid {i.iid} does not match position {pos}")
        assigned = set()
        _validate_block(test, th.instrs, assigned, depth=0)
        regs_by_thread.append(assigned)
    for a in test.pred.atoms:
        if a.thread is None:
            if a.name not in test.init:
                raise LitmusError(f"predicate names undeclared location {a.name}")
        elif a.thread >= len(test.threads) or a.name not in regs_by_thread[a.thread]:
            raise LitmusError(f"predicate names unknown register P{a.thread}:{a.name}")


def _validate_block(test, seq, assigned, depth):
    if depth > MAX_IF_DEPTH:
        raise LitmusError(f"conditionals nest at most {MAX_IF_DEPTH} deep")
    for i in seq:
        if i.op not in OPS:
            raise LitmusError(f"{i.iid}: unknown op {i.op}")
        if i.op == "if":
            if i.reg not in assigned:
                raise LitmusError(f"{i.iid}: register {i.reg} used before assignment")
            _validate_block(test, i.body, set(assigned), depth + 1)
            # a register assigned only under a branch still reads 0 otherwise
            inner = set(assigned)
            _collect_regs(i.body, inner)
            assigned |= inner
            continue
        if i.op != "fence":
            if i.loc not in test.init:
                raise LitmusError(f"{i.iid}: undeclared location {i.loc}")
            width = test.init[i.loc].width
            if not valid_width(i.op, width):
                raise LitmusError(f"{i.iid}: {i.op} not available at width {width}")
            for v in (i.value, i.expected):
                if v is not None and not 0 <= v < 2**width:
                    raise LitmusError(f"{i.iid}: value {v} does not fit in {width} bits")
        if not valid_order(i.op, i.mo):
            raise LitmusError(f"{i.iid}: {i.op} cannot be {i.mo}")
        if i.op in RESULT_OPS:
            if not i.reg:
                raise LitmusError(f"{i.iid}: missing result register")
            if i.reg != DISCARD:
                assigned.add(i.reg)


def _collect_regs(seq, acc):
    for i in seq:
        if i.op == "if":
            _collect_regs(i.body, acc)
        elif i.has_result:
            acc.add(i.reg)


# --------------------------------------------------------------------------
# source printer


def _render_stmt(i, indent):
    pad = "  " * indent
    if i.op == "if":
        lines = [f"{pad}if ({i.reg} == {i.value}) {{"]
        for j in i.body:
            lines.extend(_render_stmt(j, indent + 1))
        lines.append(f"{pad}}}")
        return lines
    if i.op == "fence":
        return [f"{pad}fence({i.mo});"]
    if i.op == "store":
        return [f"{pad}store({i.loc}, {i.value}, {i.mo});"]
    if i.op == "load":
        return [f"{pad}{i.reg} = load({i.loc}, {i.mo});"]
    if i.op == "cas":
        return [f"{pad}{i.reg} = cas({i.loc}, {i.expected}, {i.value}, {i.mo});"]
    return [f"{pad}{i.reg} = {i.op}({i.loc}, {i.value}, {i.mo});"]


def _render_init(init):
    items = []
    for loc in sorted(init):
        l = init[loc]
        items.append(f"{'const ' if l.const else ''}{loc}:{l.width}={l.value};")
    return items


def render_source(test):
    out = [f"C {test.name}", "{ " + " ".join(_render_init(test.init)) + " }"]
    for th in test.threads:
        out.append(f"{th.tid} {{")
        for i in th.instrs:
            out.extend(_render_stmt(i, 1))
        out.append("}")
    out.append("exists (" + " /\\ ".join(str(a) for a in test.pred.atoms) + ")")
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------
# assembly tests


@dataclass(frozen=True)
class AsmThread:
    tid: str
    instrs: tuple


@dataclass(frozen=True)
class ObservationMap:
    """Per thread, source register -> architectural register numbers.

    A 128-bit source register maps to a (low, high) register pair.
    """

    entries: tuple = ()

    def lookup(self, thread, reg):
        try:
            return self.entries[thread][reg]
        except (IndexError, KeyError):
            raise LitmusError(f"no observation entry for P{thread}:{reg}") from None

    def registers(self):
        return {(t, n) for t, e in enumerate(self.entries) for nums in e.values() for n in nums}

    def validate(self):
        for t, e in enumerate(self.entries):
            seen = [n for nums in e.values() for n in nums]
            if len(seen) != len(set(seen)):
                raise LitmusError(f"observation map for P{t} is not injective")


@dataclass(frozen=True)
class AsmLitmusTest:
    name: str
    init: dict  # loc -> Location
    bindings: tuple  # per thread: dict loc -> Reg holding its address
    threads: tuple
    pred: Predicate
    obs_map: ObservationMap = field(default_factory=ObservationMap)
    arch: str = "ARM"

    def address_registers(self, thread):
        return {r.num for r in self.bindings[thread].values()}


def parse_asm(text):
    """Parse a herd-style assembly litmus test."""
    lines = text.split("\n")
    k = 0
    while k < len(lines) and not lines[k].strip():
        k += 1
    if k == len(lines):
        raise ParseError("empty input", 1, 1)
    head = lines[k].split()
    if len(head) != 2:
        raise ParseError("header must be 'ARM NAME'", k + 1, 1)
    arch, name = head
    if arch.upper() not in ("ARM", "AARCH64"):
        raise ParseError(f"unsupported architecture {arch!r}", k + 1, 1)
    k += 1

    # init block: everything between the first '{' and the matching '}'
    rest = "\n".join(lines[k:])
    lb, rb = rest.find("{"), rest.find("}")
    if lb < 0 or rb < lb or rest[:lb].strip():
        raise ParseError("missing init block", k + 1, 1)
    init_text = rest[lb + 1 : rb]
    init, raw_bindings = _parse_asm_init(init_text, k + 1)
    after = rest[rb + 1 :].split("\n")
    body_line0 = k + 1 + rest[: rb + 1].count("\n")

    rows, tail = [], []
    for off, line in enumerate(after):
        s = line.strip()
        if not s:
            continue
        if s.startswith(("exists", "observe")) or tail:
            tail.append((body_line0 + off, s))
        else:
            rows.append((body_line0 + off, line))
    if not rows:
        raise ParseError("no threads", body_line0, 1)
    header_line, header = rows[0]
    cols = [c.strip() for c in header.strip().rstrip(";").split("|")]
    if not cols or any(c != f"P{n}" for n, c in enumerate(cols)):
        raise ParseError("thread header must read 'P0 | P1 | ... ;'", header_line, 1)
    columns = [[] for _ in cols]
    for lineno, row in rows[1:]:
        cells = row.strip().rstrip(";").split("|")
        if len(cells) > len(cols):
            raise ParseError("too many columns", lineno, 1)
        for t, cell in enumerate(cells):
            if not cell.strip():
                continue
            for piece in split_labelled(cell.strip()):
                try:
                    columns[t].append(parse_instr(piece))
                except AsmSyntaxError as e:
                    raise ParseError(str(e), lineno, 1) from None

    obs, pred = None, None
    for lineno, s in tail:
        if s.startswith("observe"):
            obs = _parse_observe(s[len("observe") :], lineno, len(cols))
        elif s.startswith("exists"):
            toks = _Tokens(s[len("exists") :], lineno)
            atoms = _parse_atoms(toks)
            if toks.peek()[0] != "eof":
                raise toks.error("trailing input after predicate")
            pred = Predicate(tuple(atoms))
        else:
            raise ParseError(f"unexpected line {s!r}", lineno, 1)
    if pred is None:
        raise ParseError("missing exists clause", len(lines), 1)

    bindings = []
    for t in range(len(cols)):
        b = raw_bindings.get(t, {})
        for loc in b:
            init.setdefault(loc, Location(64, 0))
        bindings.append(b)
    if obs is None:
        obs = _identity_obs(pred, len(cols))
    test = AsmLitmusTest(
        name,
        init,
        tuple(bindings),
        tuple(AsmThread(f"P{t}", tuple(c)) for t, c in enumerate(columns)),
        pred,
        obs,
        arch.upper(),
    )
    validate_asm(test)
    return test


def _parse_asm_init(text, line0):
    init, bindings = {}, {}
    for item in text.replace("\n", " ").split(";"):
        item = item.strip()
        if not item:
            continue
        m = re.fullmatch(r"(\d+)\s*:\s*([A-Za-z0-9]+)\s*=\s*([A-Za-z_][A-Za-z0-9_]*)", item)
        if m:
            try:
                reg = parse_reg(m.group(2))
            except AsmSyntaxError as e:
                raise ParseError(str(e), line0, 1) from None
            bindings.setdefault(int(m.group(1)), {})[m.group(3)] = reg
            continue
        m = re.fullmatch(r"(const\s+)?([A-Za-z_][A-Za-z0-9_]*)\s*(?::\s*(\d+))?\s*=\s*(-?\w+)", item)
        if not m:
            raise ParseError(f"bad init item {item!r}", line0, 1)
        width = int(m.group(3)) if m.group(3) else 64
        if width not in WIDTHS:
            raise ParseError(f"bad width {width}", line0, 1)
        init[m.group(2)] = Location(width, int(m.group(4), 0), bool(m.group(1)))
    return init, bindings


def _parse_observe(text, lineno, nthreads):
    entries = [dict() for _ in range(nthreads)]
    body = text.strip()
    if not (body.startswith("(") and body.endswith(")")):
        raise ParseError("observe clause must be parenthesised", lineno, 1)
    for item in body[1:-1].split("/\\"):
        m = re.fullmatch(r"\s*P?(\d+)\s*:\s*(\w+)\s*=\s*([A-Za-z0-9:]+)\s*", item)
        if not m:
            raise ParseError(f"bad observe item {item.strip()!r}", lineno, 1)
        t = int(m.group(1))
        if t >= nthreads:
            raise ParseError(f"observe names unknown thread {t}", lineno, 1)
        try:
            nums = tuple(parse_reg(r).num for r in m.group(3).split(":"))
        except AsmSyntaxError as e:
            raise ParseError(str(e), lineno, 1) from None
        entries[t][m.group(2)] = nums
    return ObservationMap(tuple(entries))


def _identity_obs(pred, nthreads):
    entries = [dict() for _ in range(nthreads)]
    for t, name in pred.registers():
        if t < nthreads:
            try:
                entries[t][name] = (parse_reg(name).num,)
            except AsmSyntaxError:
                pass
    return ObservationMap(tuple(entries))


def validate_asm(test):
    if not test.threads:
        raise LitmusError("no threads")
    if len(test.threads) > MAX_THREADS:
        raise LitmusError(f"at most {MAX_THREADS} threads allowed")
    for t, th in enumerate(test.threads):
        labels = [i.args[0].name for i in th.instrs if i.is_label]
        if len(labels) != len(set(labels)):
            raise LitmusError(f"P{t}: duplicate label")
        bound = test.address_registers(t)
        seen_ldex = False
        for i in th.instrs:
            for a in i.args:
                if isinstance(a, Label) and not i.is_label and a.name not in labels:
                    raise LitmusError(f"P{t}: branch to undefined label {a.name}")
                if isinstance(a, Mem) and a.base.num not in bound:
                    raise LitmusError(f"P{t}: {i} addresses through unbound register {a.base}")
            if i.op in ("LDXR", "LDAXR", "LDXP", "LDAXP"):
                seen_ldex = True
            if i.op in ("STXR", "STLXR", "STXP", "STLXP") and not seen_ldex:
                raise LitmusError(f"P{t}: {i} has no preceding exclusive load")
    for a in test.pred.atoms:
        if a.thread is None:
            if a.name not in test.init:
                raise LitmusError(f"predicate names undeclared location {a.name}")
        else:
            if a.thread >= len(test.threads):
                raise LitmusError(f"predicate names unknown thread {a.thread}")
            try:
                parse_reg(a.name)
            except AsmSyntaxError:
                raise LitmusError(f"predicate register {a.name} is not architectural") from None
    test.obs_map.validate()
    covered = test.obs_map.registers()
    for t, name in test.pred.registers():
        if (t, parse_reg(name).num) not in covered:
            raise LitmusError(f"observation map misses P{t}:{name}")


def _asm_init_items(test):
    items = []
    for t, b in enumerate(test.bindings):
        for loc in sorted(b):
            items.append(f"{t}:{b[loc]}={loc};")
    return items + _render_init(test.init)


def render_asm(test):
    out = [f"{test.arch} {test.name}", "{", " ".join(_asm_init_items(test)), "}"]
    cols = [[f"P{t}"] + [str(i) for i in th.instrs] for t, th in enumerate(test.threads)]
    height = max(len(c) for c in cols)
    widths = [max(len(s) for s in c) for c in cols]
    for r in range(height):
        cells = [(c[r] if r < len(c) else "").ljust(w) for c, w in zip(cols, widths)]
        out.append(" " + " | ".join(cells) + " ;")
    obs = []
    for t, e in enumerate(test.obs_map.entries):
        for reg in sorted(e):
            obs.append(f"{t}:{reg}={':'.join(f'X{n}' for n in e[reg])}")
    if obs:
        out.append("observe (" + " /\\ ".join(obs) + ")")
    atoms = [a.name + "=" + str(a.value) if a.thread is None else f"{a.thread}:{a.name}={a.value}" for a in test.pred.atoms]
    out.append("exists (" + " /\\ ".join(atoms) + ")")
    return "\n".join(out) + "\n"


# --------------------------------------------------------------------------
# canonical form and hashing


def canonical_form(test):
    """Text that is equal for tests equal up to label and temporary naming."""
    lines = ["init"]
    for loc in sorted(test.init):
        l = test.init[loc]
        lines.append(f"{'const ' if l.const else ''}{loc}:{l.width}={l.value}")
    observed = test.obs_map.registers() | {
        (t, parse_reg(n).num) for t, n in test.pred.registers()
    }
    for t, th in enumerate(test.threads):
        b = test.bindings[t]
        lines.append(f"thread {t}")
        for loc in sorted(b):
            lines.append(f"bind {b[loc]}={loc}")
        fixed = test.address_registers(t) | {n for (tt, n) in observed if tt == t}
        labels, temps = {}, {}

        def lab(name):
            return labels.setdefault(name, f"L{len(labels)}")

        def reg(r):
            if r.is_zero or r.num in fixed:
                return str(r)
            return f"{r.form}t{temps.setdefault(r.num, len(temps))}"

        for i in th.instrs:
            args = []
            for a in i.args:
                if isinstance(a, Label):
                    args.append(lab(a.name))
                elif isinstance(a, Reg):
                    args.append(reg(a))
                elif isinstance(a, Mem):
                    args.append(f"[{reg(a.base)}]")
                else:
                    args.append(str(a))
            lines.append(f"{args[0]}:" if i.is_label else " ".join([i.op, ",".join(args)]).strip())
    for t, e in enumerate(test.obs_map.entries):
        for r in sorted(e):
            lines.append(f"obs {t}:{r}=" + ":".join(str(n) for n in e[r]))
    atoms = sorted(f"{a.thread}:{a.name}={a.value}" if a.thread is not None else str(a) for a in test.pred.atoms)
    lines.append("exists " + " & ".join(atoms))
    return "\n".join(lines) + "\n"


def canonical_hash(test):
    """SHA-256 hex digest of :func:`canonical_form`."""
    return hashlib.sha256(canonical_form(test).encode()).hexdigest()


def load_test(text):
    """Parse either kind of test, dispatching on the header line."""
    first = next((l for l in text.split("\n") if l.strip() and not l.strip().startswith("//")), "")
    if first.split()[:1] == ["C"]:
        return parse_source(text)
    return parse_asm(text)
