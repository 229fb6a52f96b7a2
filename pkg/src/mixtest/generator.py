"""Template-based source test generation.

Each shape is a small fixed program whose memory orders (and, for the RMW
shapes, read-modify-write operations) are holes.  ``generate`` fills the
holes with every combination from the requested matrix and drops tests that
are the same up to swapping threads and renaming locations.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .litmus import (
    DISCARD,
    Atom,
    Location,
    Predicate,
    SourceInstr,
    SourceLitmusTest,
    Thread,
    valid_order,
    valid_width,
    validate_source,
)
from .mixer import missing_mappings

SHAPES = ("SB", "MP", "LB", "SB-RMW", "MP-RMW")
DEFAULT_ORDERS = ("relaxed", "acquire", "release", "acq_rel", "seq_cst")
DEFAULT_RMW_OPS = ("exchange",)


@dataclass(frozen=True)
class Hole:
    """One access of a shape: (thread, op, location, result register, value)."""

    thread: int
    op: str  # "store", "load" or "rmw"
    loc: str
    reg: str | None = None
    value: int | None = None


@dataclass(frozen=True)
class ShapeTemplate:
    name: str
    holes: tuple
    pred: tuple  # ((thread or None, name, value), ...)


_TEMPLATES = {
    "SB": ShapeTemplate(
        "SB",
        (Hole(0, "store", "x", value=1), Hole(0, "load", "y", "t"), Hole(1, "store", "y", value=1), Hole(1, "load", "x", "u")),
        ((0, "t", 0), (1, "u", 0)),
    ),
    "MP": ShapeTemplate(
        "MP",
        (Hole(0, "store", "x", value=1), Hole(0, "store", "y", value=1), Hole(1, "load", "y", "r0"), Hole(1, "load", "x", "r1")),
        ((1, "r0", 1), (1, "r1", 0)),
    ),
    "LB": ShapeTemplate(
        "LB",
        (Hole(0, "load", "x", "r0"), Hole(0, "store", "y", value=1), Hole(1, "load", "y", "r0"), Hole(1, "store", "x", value=1)),
        ((0, "r0", 1), (1, "r0", 1)),
    ),
    "SB-RMW": ShapeTemplate(
        "SB-RMW",
        (Hole(0, "rmw", "x", value=1), Hole(0, "load", "y", "r0"), Hole(1, "rmw", "y", value=1), Hole(1, "load", "x", "r0")),
        ((0, "r0", 0), (1, "r0", 0)),
    ),
    "MP-RMW": ShapeTemplate(
        "MP-RMW",
        (Hole(0, "store", "x", value=1), Hole(0, "store", "y", value=1), Hole(1, "rmw", "y", value=2), Hole(1, "load", "x", "r0")),
        ((1, "r0", 0), (None, "y", 2)),
    ),
}


def template(name):
    try:
        return _TEMPLATES[name]
    except KeyError:
        raise ValueError(f"unknown shape {name!r}; choose from {', '.join(SHAPES)}") from None


def _instr(hole, iid, op, mo):
    if op == "store":
        return SourceInstr(iid, "store", loc=hole.loc, value=hole.value, mo=mo)
    if op == "load":
        return SourceInstr(iid, "load", loc=hole.loc, reg=hole.reg, mo=mo)
    if op == "cas":
        return SourceInstr(iid, "cas", loc=hole.loc, reg=DISCARD, value=hole.value, expected=0, mo=mo)
    return SourceInstr(iid, op, loc=hole.loc, reg=DISCARD, value=hole.value, mo=mo)


def instantiate_shape(shape, width, orders, ops):
    """One test from a shape: ``orders`` and ``ops`` give one entry per hole."""
    threads = {}
    for hole, mo, op in zip(shape.holes, orders, ops):
        body = threads.setdefault(hole.thread, [])
        body.append(_instr(hole, f"P{hole.thread}_{len(body)}", op, mo))
    locs = sorted({h.loc for h in shape.holes})
    init = {loc: Location(width, 0) for loc in locs}
    tag = "-".join(_SHORT[mo] for mo in orders)
    rmw = [_SHORT_OP[op] for op in ops if op in _SHORT_OP]
    name = f"{shape.name}-{width}-{tag}" + ("-" + "-".join(rmw) if any(r != "xchg" for r in rmw) else "")
    atoms = tuple(Atom(t, n, v) for t, n, v in shape.pred)
    test = SourceLitmusTest(
        name,
        init,
        tuple(Thread(f"P{t}", tuple(threads[t])) for t in sorted(threads)),
        Predicate(atoms),
    )
    validate_source(test)
    return test


_SHORT = {"relaxed": "rlx", "acquire": "acq", "release": "rel", "acq_rel": "ar", "seq_cst": "sc"}
_SHORT_OP = {"exchange": "xchg", "fetch_add": "fadd", "cas": "cas"}


def generate(widths, orders, shapes=SHAPES, rmw_ops=DEFAULT_RMW_OPS, profiles=None, reduce=True):
    """Every instantiation of ``shapes`` over the matrix.

    Orders a hole's operation cannot take, and operations that do not
    exist at a width, are skipped.  When ``profiles``
    is given, only tests every profile can compile are kept (so widths 8
    and 16 appear only if the profiles map them).
    """
    if not widths or not orders or not shapes or not rmw_ops:
        raise ValueError("widths, orders, shapes and rmw ops must all be non-empty")
    out = []
    for name in shapes:
        shape = template(name)
        for width in widths:
            op_choices = [rmw_ops if h.op == "rmw" else (h.op,) for h in shape.holes]
            for ops in itertools.product(*op_choices):
                if not all(valid_width(op, width) for op in ops):
                    continue
                mo_choices = [[mo for mo in orders if valid_order(op, mo)] for op in ops]
                for mos in itertools.product(*mo_choices):
                    test = instantiate_shape(shape, width, mos, ops)
                    if profiles is None or not missing_mappings(test, profiles):
                        out.append(test)
    return symmetry_reduce(out) if reduce else out


# --------------------------------------------------------------------------
# symmetry


def _stmt_key(i, locs, regs):
    if i.op == "if":
        return ("if", regs.get(i.reg, i.reg), i.value, tuple(_stmt_key(j, locs, regs) for j in i.body))
    reg = i.reg
    if reg not in (None, DISCARD):
        reg = regs.setdefault(reg, f"r{len(regs)}")
    fields = (locs.get(i.loc), reg, i.value, i.expected, i.mo)
    return (i.op,) + tuple("" if f is None else f for f in fields)


def symmetry_key(test, perm):
    """The test's shape with threads reordered by ``perm`` and names normalised."""
    locs = {}
    for t in perm:
        for i in test.threads[t].flat():
            if i.loc is not None and i.loc not in locs:
                locs[i.loc] = f"l{len(locs)}"
    thread_keys, reg_maps = [], []
    for t in perm:
        regs = {}
        thread_keys.append(tuple(_stmt_key(i, locs, regs) for i in test.threads[t].instrs))
        reg_maps.append(regs)
    new_index = {old: new for new, old in enumerate(perm)}
    atoms = []
    for a in test.pred.atoms:
        if a.thread is None:
            atoms.append((-1, locs.get(a.name, a.name), a.value))
        else:
            atoms.append((new_index[a.thread], reg_maps[new_index[a.thread]].get(a.name, a.name), a.value))
    init = tuple(sorted((locs.get(k, k), v.width, v.value, v.const) for k, v in test.init.items()))
    return (init, tuple(thread_keys), tuple(sorted(atoms)))


def canonical_symmetry_key(test):
    return min(symmetry_key(test, p) for p in itertools.permutations(range(len(test.threads))))


def symmetry_reduce(tests):
    """Drop tests equal to an earlier one up to thread order and location names."""
    seen, out = set(), []
    for t in tests:
        k = canonical_symmetry_key(t)
        if k not in seen:
            seen.add(k)
            out.append(t)
    return out


__all__ = [
    "SHAPES",
    "Hole",
    "ShapeTemplate",
    "canonical_symmetry_key",
    "generate",
    "instantiate_shape",
    "symmetry_reduce",
    "template",
]
