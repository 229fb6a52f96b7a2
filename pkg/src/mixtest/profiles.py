"""Compiler profiles: mapping tables from atomic operations to assembly.

A profile file looks like::

    profile clang-armv8-O3 arch=aarch64
    map load w=32,64 mo=seq_cst:
      LDAR {dst}, [{addr}]
    end

Lines starting with ``//`` are comments.  Each ``map`` block gives the
instruction templates for one or more keys (the ``w=`` and ``mo=`` fields
accept comma-separated lists).  Adding
``unused`` makes the entry apply only when the result register is
discarded.  Placeholders:

``{addr}``          the location's address register
``{val}`` ``{valhi}``  stored/added/desired value (low and high 64 bits)
``{exp}`` ``{exphi}``  cas comparand
``{dst}`` ``{dsthi}``  result register (pair for 128-bit)
``{tmpN}``          N-th fresh temporary of the fragment
``{lblN}``          N-th fresh label of the fragment

A register placeholder may carry a form suffix, as in ``{tmp1:w}``.
Without one the form follows the access width and the profile's arch.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .isa import WRITING, AsmSyntaxError, Label, defs_uses, parse_instr
from .litmus import ORDERS, RESULT_OPS, valid_order, valid_width

OPS = ("load", "store", "exchange", "fetch_add", "cas", "fence")
ARCHES = ("armv7", "aarch64")
FIRST_TEMP_LIMIT = 29  # X29 and X30 are reserved for the frame and link registers

_PLACEHOLDER = re.compile(r"\{([a-z]+)(\d*)(?::([wxr]))?\}")
_NAMES = {"addr", "val", "valhi", "exp", "exphi", "dst", "dsthi", "tmp", "lbl"}


class ProfileError(ValueError):
    pass


class UnsupportedMapping(ProfileError):
    pass


@dataclass(frozen=True, order=True)
class MappingKey:
    op: str
    width: int | None  # None for fences
    mo: str
    used: bool = True  # False when the result register is discarded

    def __str__(self):
        w = "" if self.width is None else f" w={self.width}"
        return f"{self.op}{w} mo={self.mo}{'' if self.used else ' unused'}"


@dataclass(frozen=True)
class MappingEntry:
    templates: tuple
    derived: bool = False  # an unused-result entry copied from the used one

    @property
    def uses_exclusives(self):
        return any(re.match(r"\s*(LD|ST)A?L?X", t) for t in self.templates)

    @property
    def n_temps(self):
        idx = [int(m.group(2) or 0) for t in self.templates for m in _PLACEHOLDER.finditer(t) if m.group(1) == "tmp"]
        return max(idx) + 1 if idx else 0

    def mentions(self, name):
        return any(m.group(1) == name for t in self.templates for m in _PLACEHOLDER.finditer(t))


@dataclass(frozen=True)
class CompilerProfile:
    name: str
    arch: str
    table: dict

    def supports(self, key):
        return key in self.table

    def keys(self):
        return sorted(self.table, key=lambda k: (k.op, k.width or 0, k.mo, k.used))


def lookup(profile, key):
    """The mapping for ``key``; unsupported keys are an error, never a fallback."""
    try:
        return profile.table[key]
    except KeyError:
        raise UnsupportedMapping(f"profile {profile.name} has no mapping for {key}") from None


# --------------------------------------------------------------------------
# instantiation


class RegisterPool:
    """Fresh temporaries and labels for one thread."""

    def __init__(self, first, limit=FIRST_TEMP_LIMIT, label_prefix="L"):
        self.next, self.limit = first, limit
        self.labels = 0
        self.prefix = label_prefix

    def take(self):
        if self.next >= self.limit:
            raise ProfileError("register pool exhausted: fragment needs more temporaries than are free")
        n = self.next
        self.next += 1
        return n

    def label(self):
        name = f"{self.prefix}{self.labels}"
        self.labels += 1
        return name


@dataclass
class Binding:
    """Operands for one instantiation."""

    addr: int  # address register number
    width: int
    pool: RegisterPool
    value: int = 0
    expected: int = 0
    dst: tuple | None = None  # result register numbers, None to discard
    arch: str = "aarch64"


def default_form(arch, width):
    if arch == "armv7":
        return "R"
    return "W" if width is not None and width <= 32 else "X"


def instantiate(entry, binding, origin=None):
    """Fill in an entry's templates; returns the instruction list."""
    temps = [binding.pool.take() for _ in range(entry.n_temps)]
    dst = binding.dst
    if dst is None and (entry.mentions("dst") or entry.mentions("dsthi")):
        dst = tuple(binding.pool.take() for _ in range(2 if entry.mentions("dsthi") else 1))
    labels = {}
    lo_mask = (1 << 64) - 1
    values = {
        "val": binding.value & lo_mask,
        "valhi": binding.value >> 64,
        "exp": binding.expected & lo_mask,
        "exphi": binding.expected >> 64,
    }
    base_form = default_form(binding.arch, binding.width)
    addr_form = "R" if binding.arch == "armv7" else "X"

    def sub(m):
        name, idx, form = m.group(1), m.group(2), m.group(3)
        k = int(idx or 0)
        if name in values:
            return str(values[name])
        if name == "lbl":
            if k not in labels:
                labels[k] = binding.pool.label()
            return labels[k]
        if name == "addr":
            return f"{(form or addr_form).upper()}{binding.addr}"
        if name == "tmp":
            num = temps[k]
        elif name == "dst":
            num = dst[0]
        elif name == "dsthi":
            num = dst[1] if len(dst) > 1 else dst[0] + 1
        else:
            raise ProfileError(f"bad placeholder {m.group(0)}")
        return f"{(form or base_form).upper()}{num}"

    out = []
    for t in entry.templates:
        text = _PLACEHOLDER.sub(sub, t)
        try:
            out.append(parse_instr(text, origin))
        except AsmSyntaxError as e:
            raise ProfileError(f"template {t!r} does not instantiate: {e}") from None
    return out


# --------------------------------------------------------------------------
# loading


def load_profile(text, source="<string>"):
    """Parse a profile file; every template is validated by instantiation."""
    name = arch = None
    table = {}
    lines = text.split("\n")
    k = 0

    def err(msg, lineno):
        return ProfileError(f"{source}:{lineno}: {msg}")

    while k < len(lines):
        raw = lines[k]
        line = raw.split("//", 1)[0].strip()
        k += 1
        if not line:
            continue
        if line.startswith("profile "):
            m = re.fullmatch(r"profile\s+(\S+)\s+arch=(\S+)", line)
            if not m or name is not None:
                raise err("expected a single 'profile NAME arch=LABEL' header", k)
            name, arch = m.group(1), m.group(2)
            if arch not in ARCHES:
                raise err(f"unknown arch {arch!r}", k)
            continue
        if name is None:
            raise err("file must start with a profile header", k)
        m = re.fullmatch(r"map\s+(\w+)((?:\s+\w+=[\w,]+)*)(\s+unused)?\s*:", line)
        if not m:
            raise err(f"expected 'map OP w=WIDTH mo=MO [unused]:', got {line!r}", k)
        op, fields, unused = m.group(1), m.group(2), bool(m.group(3))
        header_line = k
        opts = dict(f.split("=", 1) for f in fields.split())
        if op not in OPS:
            raise err(f"unknown op {op!r}", header_line)
        if set(opts) - {"w", "mo"} or "mo" not in opts:
            raise err("map header takes mo= and (except fences) w=", header_line)
        if op == "fence":
            if "w" in opts:
                raise err("fences take no width", header_line)
            widths = [None]
        else:
            if "w" not in opts:
                raise err(f"{op} needs w=", header_line)
            widths = [int(w) for w in opts["w"].split(",")]
        mos = opts["mo"].split(",")
        if unused and op not in RESULT_OPS:
            raise err(f"{op} has no result to discard", header_line)
        body = []
        while True:
            if k >= len(lines):
                raise err("missing 'end'", header_line)
            text_line = lines[k].split("//", 1)[0].strip()
            k += 1
            if text_line == "end":
                break
            if text_line:
                body.append(" ".join(text_line.split()))
        if not body and op != "fence":
            raise err("empty mapping", header_line)
        for w in widths:
            for mo in mos:
                if mo not in ORDERS or not valid_order(op, mo):
                    raise err(f"{op} cannot be {mo}", header_line)
                if w is not None and not valid_width(op, w):
                    raise err(f"{op} not available at width {w}", header_line)
                key = MappingKey(op, w, mo, not unused)
                if key in table:
                    raise err(f"duplicate mapping for {key}", header_line)
                entry = MappingEntry(tuple(body))
                _validate_entry(key, entry, arch, lambda msg: err(msg, header_line))
                table[key] = entry
    if name is None:
        raise ProfileError(f"{source}: no profile header")
    # a discarded result can always go to a scratch register
    for key in list(table):
        if key.op in RESULT_OPS and key.used:
            spare = MappingKey(key.op, key.width, key.mo, False)
            if spare not in table:
                table[spare] = MappingEntry(table[key].templates, derived=True)
    return CompilerProfile(name, arch, table)


def _validate_entry(key, entry, arch, err):
    for t in entry.templates:
        for m in _PLACEHOLDER.finditer(t):
            if m.group(1) not in _NAMES:
                raise err(f"unknown placeholder {m.group(0)}")
            if m.group(2) and m.group(1) not in ("tmp", "lbl"):
                raise err(f"placeholder {m.group(0)} takes no index")
    has_dst = entry.mentions("dst")
    if key.op in RESULT_OPS and key.used and not has_dst:
        raise err(f"{key} must write {{dst}}")
    if key.op not in RESULT_OPS and has_dst:
        raise err(f"{key} has no result but mentions {{dst}}")
    pool = RegisterPool(2)
    dst = (0, 1) if key.used and key.op in RESULT_OPS else None
    try:
        instrs = instantiate(entry, Binding(addr=1, width=key.width or 64, pool=pool, value=1, dst=dst, arch=arch))
    except ProfileError as e:
        raise err(str(e)) from None
    # self-containment: a temporary must be written before it is read
    defined = {0, 1} if dst else {1}
    labels = {i.args[0].name for i in instrs if i.is_label}
    for i in instrs:
        defs, uses = defs_uses(i)
        for r in uses:
            if not r.is_zero and r.num not in defined:
                raise err(f"template reads {r} before writing it")
        defined.update(r.num for r in defs if not r.is_zero)
        for a in i.args:
            if isinstance(a, Label) and not i.is_label and a.name not in labels:
                raise err(f"branch to a label outside the fragment: {a.name}")


def load_profile_file(path):
    path = Path(path)
    return load_profile(path.read_text(), str(path))


def bundled_names():
    root = resources.files("mixtest") / "data" / "profiles"
    return sorted(p.name[: -len(".profile")] for p in root.iterdir() if p.name.endswith(".profile"))


def bundled_profile(name):
    root = resources.files("mixtest") / "data" / "profiles"
    f = root / f"{name}.profile"
    if not f.is_file():
        raise ProfileError(f"no bundled profile named {name!r}")
    return load_profile(f.read_text(), f"{name}.profile")


def resolve_profile(spec):
    """A profile from a file path, or from the bundled set by name."""
    p = Path(spec)
    if p.is_file():
        return load_profile_file(p)
    if p.suffix == ".profile" or "/" in spec:
        raise ProfileError(f"profile file not found: {spec}")
    return bundled_profile(spec)


def writes_memory(instrs):
    """Instructions that may write memory (stores, exclusive stores, RMWs)."""
    return [i for i in instrs if i.op in WRITING]


__all__ = [
    "Binding",
    "CompilerProfile",
    "MappingEntry",
    "MappingKey",
    "ProfileError",
    "RegisterPool",
    "UnsupportedMapping",
    "bundled_names",
    "bundled_profile",
    "default_form",
    "instantiate",
    "load_profile",
    "load_profile_file",
    "lookup",
    "resolve_profile",
    "writes_memory",
]
