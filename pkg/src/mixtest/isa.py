"""Assembly vocabulary shared by the AArch32-style and AArch64 listings.

One table maps each mnemonic to its operand signature and its memory
attributes (acquire, release, exclusive, ...).  Everything else in the
package is architecture-neutral.
"""

from __future__ import annotations

import functools
import re
from dataclasses import dataclass, field

ZR = None  # register number of WZR/XZR


class AsmSyntaxError(ValueError):
    pass


@dataclass(frozen=True)
class Reg:
    form: str  # "W", "X" or "R"
    num: int | None  # None is the zero register

    def __str__(self):
        if self.num is None:
            return "XZR" if self.form == "X" else "WZR"
        return f"{self.form}{self.num}"

    @property
    def is_zero(self):
        return self.num is None


@dataclass(frozen=True)
class Imm:
    value: int

    def __str__(self):
        return f"#{self.value}"


@dataclass(frozen=True)
class Mem:
    base: Reg

    def __str__(self):
        return f"[{self.base}]"


@dataclass(frozen=True)
class Label:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Opt:
    name: str  # barrier domain (ISH, ISHLD, ISHST) or condition (EQ, NE)

    def __str__(self):
        return self.name


BARRIERS = ("ISH", "ISHLD", "ISHST")
CONDITIONS = ("EQ", "NE")

# signature letters: r register, i immediate, v register-or-immediate,
# m memory, l label, b barrier option, c condition
_SIGS = {
    "MOV": "rv",
    "ADD": "rrv",
    "CMP": "rv",
    "CCMP": "rvic",
    "LDR": "rm", "LDA": "rm", "LDAR": "rm", "LDAPR": "rm",
    "STR": "rm", "STL": "rm", "STLR": "rm",
    "LDXR": "rm", "LDAXR": "rm",
    "STXR": "rrm", "STLXR": "rrm",
    "LDP": "rrm", "STP": "rrm",
    "LDXP": "rrm", "LDAXP": "rrm",
    "STXP": "rrrm", "STLXP": "rrrm",
    "SWP": "rrm", "SWPA": "rrm", "SWPL": "rrm", "SWPAL": "rrm",
    "CAS": "rrm", "CASA": "rrm", "CASL": "rrm", "CASAL": "rrm",
    "CASP": "rrrrm", "CASPA": "rrrrm", "CASPL": "rrrrm", "CASPAL": "rrrrm",
    "LDADD": "rrm", "LDADDA": "rrm", "LDADDL": "rrm", "LDADDAL": "rrm",
    "DMB": "b",
    "CBZ": "rl", "CBNZ": "rl",
    "B": "l", "BL": "l", "B.EQ": "l", "B.NE": "l",
    "RET": "",
}

MNEMONICS = frozenset(_SIGS)


@dataclass(frozen=True)
class MemSemantics:
    """How an access mnemonic touches memory."""

    kind: str  # "load", "store", "ldex", "stex", "swp", "cas", "ldadd"
    pair: bool = False  # 128-bit register pair
    acquire: bool = False  # LDAR family (RCsc)
    acquire_pc: bool = False  # LDAPR (RCpc)
    release: bool = False


def _sem_table():
    t = {
        "LDR": MemSemantics("load"),
        "LDA": MemSemantics("load", acquire=True),
        "LDAR": MemSemantics("load", acquire=True),
        "LDAPR": MemSemantics("load", acquire_pc=True),
        "STR": MemSemantics("store"),
        "STL": MemSemantics("store", release=True),
        "STLR": MemSemantics("store", release=True),
        "LDXR": MemSemantics("ldex"),
        "LDAXR": MemSemantics("ldex", acquire=True),
        "STXR": MemSemantics("stex"),
        "STLXR": MemSemantics("stex", release=True),
        "LDP": MemSemantics("load", pair=True),
        "STP": MemSemantics("store", pair=True),
        "LDXP": MemSemantics("ldex", pair=True),
        "LDAXP": MemSemantics("ldex", pair=True, acquire=True),
        "STXP": MemSemantics("stex", pair=True),
        "STLXP": MemSemantics("stex", pair=True, release=True),
    }
    for base, kind in (("SWP", "swp"), ("CAS", "cas"), ("LDADD", "ldadd"), ("CASP", "cas")):
        for suffix in ("", "A", "L", "AL"):
            t[base + suffix] = MemSemantics(
                kind,
                pair=base == "CASP",
                acquire="A" in suffix,
                release="L" in suffix,
            )
    return t


SEMANTICS = _sem_table()
WRITING = frozenset(m for m, s in SEMANTICS.items() if s.kind != "load" and s.kind != "ldex")
BRANCHES = frozenset({"CBZ", "CBNZ", "B", "BL", "B.EQ", "B.NE"})


@dataclass(frozen=True)
class AsmInstr:
    """One assembly instruction, or a label definition when ``op == "LABEL"``.

    ``origin`` records which source instruction the line was compiled from;
    it is bookkeeping only and takes no part in equality.
    """

    op: str
    args: tuple = ()
    origin: str | None = field(default=None, compare=False)

    def __str__(self):
        if self.op == "LABEL":
            return f"{self.args[0]}:"
        if not self.args:
            return self.op
        return f"{self.op} {','.join(str(a) for a in self.args)}"

    @property
    def is_label(self):
        return self.op == "LABEL"

    @property
    def is_access(self):
        return self.op in SEMANTICS

    def with_origin(self, origin):
        return AsmInstr(self.op, self.args, origin)


_REG_RE = re.compile(r"^(?:([WXR])(\d+)|([WX])ZR)$", re.IGNORECASE)
_LABEL_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_.]*$")


def parse_reg(text):
    m = _REG_RE.match(text.strip())
    if not m:
        raise AsmSyntaxError(f"bad register {text!r}")
    if m.group(3):
        return Reg(m.group(3).upper(), ZR)
    num = int(m.group(2))
    if num > 30:
        raise AsmSyntaxError(f"register out of range: {text!r}")
    return Reg(m.group(1).upper(), num)


def _split_operands(text):
    out, depth, cur = [], 0, []
    for ch in text:
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        if ch == "," and depth == 0:
            out.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    if "".join(cur).strip():
        out.append("".join(cur).strip())
    return out


def _parse_operand(kind, text, op):
    if kind == "r":
        return parse_reg(text)
    if kind == "i":
        if not text.startswith("#"):
            raise AsmSyntaxError(f"{op}: expected immediate, got {text!r}")
        return Imm(int(text[1:], 0))
    if kind == "v":
        return _parse_operand("i" if text.startswith("#") else "r", text, op)
    if kind == "m":
        if not (text.startswith("[") and text.endswith("]")):
            raise AsmSyntaxError(f"{op}: expected [reg], got {text!r}")
        base = parse_reg(text[1:-1])
        if base.is_zero:
            raise AsmSyntaxError(f"{op}: zero register cannot address memory")
        return Mem(base)
    if kind == "l":
        if not _LABEL_RE.match(text):
            raise AsmSyntaxError(f"{op}: bad label {text!r}")
        return Label(text)
    if kind == "b":
        if text.upper() not in BARRIERS:
            raise AsmSyntaxError(f"unknown barrier option {text!r}")
        return Opt(text.upper())
    if kind == "c":
        if text.upper() not in CONDITIONS:
            raise AsmSyntaxError(f"unknown condition {text!r}")
        return Opt(text.upper())
    raise AssertionError(kind)


def parse_instr(text, origin=None):
    """Parse one instruction line such as ``STLXR W3,W2,[X1]`` or ``L0:``."""
    instr = _parse_cached(text.strip())
    return instr if origin is None else instr.with_origin(origin)


@functools.lru_cache(maxsize=4096)
def _parse_cached(text):
    # the mixer instantiates the same few template lines over and over
    if text.endswith(":") and _LABEL_RE.match(text[:-1]):
        return AsmInstr("LABEL", (Label(text[:-1]),))
    head, _, rest = text.partition(" ")
    op = head.upper()
    if op not in _SIGS:
        raise AsmSyntaxError(f"unknown mnemonic {head!r}")
    sig = _SIGS[op]
    operands = _split_operands(rest)
    if len(operands) != len(sig):
        raise AsmSyntaxError(f"{op} takes {len(sig)} operands, got {len(operands)}: {text!r}")
    args = tuple(_parse_operand(k, o, op) for k, o in zip(sig, operands))
    return AsmInstr(op, args)


def split_labelled(text):
    """Split ``"L0: LDXR W4,[X1]"`` into a label line and an instruction line."""
    m = re.match(r"^\s*([A-Za-z_][A-Za-z0-9_.]*):\s*(.*)$", text)
    if m and m.group(2):
        return [m.group(1) + ":", m.group(2)]
    return [text]


def registers_of(instr):
    return [a for a in instr.args if isinstance(a, Reg)] + [
        a.base for a in instr.args if isinstance(a, Mem)
    ]


# operand positions (by signature index) that an instruction writes
_DEFS = {
    "MOV": (0,), "ADD": (0,),
    "LDR": (0,), "LDA": (0,), "LDAR": (0,), "LDAPR": (0,),
    "LDXR": (0,), "LDAXR": (0,),
    "STXR": (0,), "STLXR": (0,),
    "LDP": (0, 1), "LDXP": (0, 1), "LDAXP": (0, 1),
    "STXP": (0,), "STLXP": (0,),
}
for _base in ("SWP", "LDADD"):
    for _sfx in ("", "A", "L", "AL"):
        _DEFS[_base + _sfx] = (1,)
for _sfx in ("", "A", "L", "AL"):
    _DEFS["CAS" + _sfx] = (0,)
    _DEFS["CASP" + _sfx] = (0, 1)


def defs_uses(instr):
    """Registers written and read by ``instr`` (address bases count as reads)."""
    defs, uses = [], []
    written = _DEFS.get(instr.op, ())
    for k, a in enumerate(instr.args):
        if isinstance(a, Reg):
            if k in written:
                defs.append(a)
                # compare-and-swap also reads its comparand registers
                if instr.op.startswith("CAS"):
                    uses.append(a)
            else:
                uses.append(a)
        elif isinstance(a, Mem):
            uses.append(a.base)
    return defs, uses
