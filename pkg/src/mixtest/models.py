"""Consistency predicates over candidate executions.

``rc11`` judges source tests and ``arm`` judges assembly tests.  Both are
plain functions from an :class:`~mixtest.engine.Execution` to a boolean,
wrapped in a small registry so the command line can pick them by name.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .litmus import AsmLitmusTest, SourceLitmusTest
from .relations import Relation

_REL = ("release", "acq_rel", "seq_cst")
_ACQ = ("acquire", "acq_rel", "seq_cst")


def _ident(n, mask):
    return Relation(n, [(1 << a) if mask >> a & 1 else 0 for a in range(n)])


# --------------------------------------------------------------------------
# RC11


def _rc11_base(ex):
    """Shared pieces of the RC11 axioms: (sb, hb, eco)."""
    n = ex.n
    sb, rf, co, fr = ex.po, ex.rf_rel, ex.co_rel, ex.fr
    eco = (rf | co | fr).plus()

    W, R, F = ex.writes, ex.reads, ex.fences
    rel = ex.mask(lambda e: e.mo in _REL)
    acq = ex.mask(lambda e: e.mo in _ACQ)

    # rs = [W]; (sb|loc)?; [W]; (rf; rmw)*
    sb_loc = (sb & ex.same_loc).opt().restrict(W, W)
    rs = sb_loc.seq(rf.seq(ex.rmw_rel).star())

    # sw = [E_rel]; ([F]; sb)?; rs; rf; [R]; (sb; [F])?; [E_acq]
    left = _ident(n, rel) | _ident(n, rel & F).seq(sb)
    right = _ident(n, R & acq) | sb.restrict(R, F & acq)
    sw = left.seq(rs).seq(rf).seq(right)
    hb = (sb | sw).plus()
    return sb, hb, eco


def rc11_consistent(ex, full_psc=False):
    """RC11 with the simplified SC axiom ``[sc];(hb | eco);[sc]`` acyclic.

    With ``full_psc`` the SC axiom is RC11's partial-SC relation instead.
    """
    if not ex.atomicity_ok():
        return False
    sb, hb, eco = _rc11_base(ex)
    # coherence: hb ; eco? irreflexive
    if not hb.irreflexive() or not hb.seq(eco).irreflexive():
        return False
    sc = ex.mask(lambda e: e.mo == "seq_cst")
    if full_psc:
        if not _psc(ex, sb, hb).acyclic():
            return False
    elif not (hb | eco).restrict(sc, sc).acyclic():
        return False
    return (sb | ex.rf_rel).acyclic()


def _psc(ex, sb, hb):
    n = ex.n
    sc = ex.mask(lambda e: e.mo == "seq_cst")
    fsc = sc & ex.fences
    esc = sc & ~ex.fences
    sb_neq = sb - ex.same_loc
    scb = sb | sb_neq.seq(hb).seq(sb_neq) | (hb & ex.same_loc) | ex.co_rel | ex.fr
    hb_opt = hb.opt()
    pre = _ident(n, esc) | _ident(n, fsc).seq(hb_opt)
    post = _ident(n, esc) | hb_opt.seq(_ident(n, fsc))
    psc_base = pre.seq(scb).seq(post)
    eco = (ex.rf_rel | ex.co_rel | ex.fr).plus()
    psc_f = (hb | hb.seq(eco).seq(hb)).restrict(fsc, fsc)
    return psc_base | psc_f


# --------------------------------------------------------------------------
# Arm


def local_order(ex):
    """The ``lob`` relation: same-thread orderings imposed by the thread itself."""
    ev = ex.events
    lob = Relation(ex.n)
    for eids in ex.threads:
        for i, a in enumerate(eids):
            ea = ev[a]
            if ea.kind == "F":
                continue
            ish = ishld = ishst = False
            for b in eids[i + 1 :]:
                eb = ev[b]
                if eb.kind == "F":
                    ish |= eb.barrier == "ISH"
                    ishld |= eb.barrier == "ISHLD"
                    ishst |= eb.barrier == "ISHST"
                    continue
                if (
                    ish
                    or (ishld and ea.kind == "R" and ea.ld_visible)
                    or (ishst and ea.kind == "W" and eb.kind == "W")
                    or (ea.kind == "R" and (ea.acquire or ea.acquire_pc))
                    or (eb.kind == "W" and eb.release)
                    or (ea.kind == "W" and ea.release and eb.kind == "R" and eb.acquire)
                    or (ea.kind == "R" and ea.rmw == b)
                ):
                    lob.add(a, b)
    for r, w in ex.data_pairs:
        lob.add(r, w)
    for r, e in ex.ctrl_pairs:
        if ev[e].kind == "W":
            lob.add(r, e)
    return lob | ex.addr


def arm_consistent(ex):
    """Simplified Arm model: SC-per-location, atomicity and external order."""
    if not ex.atomicity_ok():
        return False
    rf, co, fr = ex.rf_rel, ex.co_rel, ex.fr
    if not (ex.po_loc | rf | co | fr).acyclic():
        return False
    ob = local_order(ex) | ex.external(rf) | ex.external(co) | ex.external(fr)
    return ob.acyclic()


# --------------------------------------------------------------------------
# registry


@dataclass(frozen=True)
class Model:
    name: str
    level: str  # "source" or "target"
    consistent: Callable
    requires_coherence: bool = True  # lets the engine skip incoherent candidates

    def check_applicable(self, test):
        want = SourceLitmusTest if self.level == "source" else AsmLitmusTest
        if not isinstance(test, want):
            kind = "source" if self.level == "source" else "assembly"
            raise ValueError(f"model {self.name} applies to {kind} tests only")


MODELS = {
    "rc11": Model("rc11", "source", rc11_consistent),
    "rc11-psc": Model("rc11-psc", "source", lambda ex: rc11_consistent(ex, full_psc=True)),
    "arm": Model("arm", "target", arm_consistent),
}


def get_model(name):
    try:
        return MODELS[name]
    except KeyError:
        raise ValueError(f"unknown model {name!r}; choose from {', '.join(sorted(MODELS))}") from None
