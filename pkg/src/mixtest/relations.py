"""Binary relations over a small event universe, stored as bitmask rows.

Candidate executions rarely have more than a few dozen events, so each
relation is a list of Python ints where bit ``j`` of ``rows[i]`` means
``(i, j)`` is in the relation.  Closure is Warshall's algorithm.
"""

from __future__ import annotations


class Relation:
    __slots__ = ("n", "rows")

    def __init__(self, n, rows=None):
        self.n = n
        self.rows = list(rows) if rows is not None else [0] * n

    @classmethod
    def from_pairs(cls, n, pairs):
        r = cls(n)
        for a, b in pairs:
            r.rows[a] |= 1 << b
        return r

    @classmethod
    def identity(cls, n, members):
        r = cls(n)
        for a in members:
            r.rows[a] |= 1 << a
        return r

    def add(self, a, b):
        self.rows[a] |= 1 << b

    def __contains__(self, pair):
        a, b = pair
        return bool(self.rows[a] >> b & 1)

    def pairs(self):
        out = []
        for a, row in enumerate(self.rows):
            b = 0
            while row:
                if row & 1:
                    out.append((a, b))
                row >>= 1
                b += 1
        return out

    def __len__(self):
        return sum(bin(r).count("1") for r in self.rows)

    def __eq__(self, other):
        return isinstance(other, Relation) and self.rows == other.rows

    def __or__(self, other):
        return Relation(self.n, [a | b for a, b in zip(self.rows, other.rows)])

    def __and__(self, other):
        return Relation(self.n, [a & b for a, b in zip(self.rows, other.rows)])

    def __sub__(self, other):
        return Relation(self.n, [a & ~b for a, b in zip(self.rows, other.rows)])

    def seq(self, other):
        """Relational composition ``self ; other``."""
        out = [0] * self.n
        orows = other.rows
        for a, row in enumerate(self.rows):
            acc, b = 0, 0
            while row:
                if row & 1:
                    acc |= orows[b]
                row >>= 1
                b += 1
            out[a] = acc
        return Relation(self.n, out)

    def inverse(self):
        out = [0] * self.n
        for a, row in enumerate(self.rows):
            b = 0
            while row:
                if row & 1:
                    out[b] |= 1 << a
                row >>= 1
                b += 1
        return Relation(self.n, out)

    def restrict(self, dom_mask=-1, rng_mask=-1):
        """Keep pairs whose source is in ``dom_mask`` and target in ``rng_mask``."""
        return Relation(
            self.n, [(row & rng_mask) if dom_mask >> a & 1 else 0 for a, row in enumerate(self.rows)]
        )

    def plus(self):
        """Transitive closure."""
        rows = list(self.rows)
        n = self.n
        for k in range(n):
            bit = 1 << k
            rk = rows[k]
            if not rk:
                continue
            for i in range(n):
                if rows[i] & bit:
                    rows[i] |= rk
        return Relation(n, rows)

    def star(self):
        r = self.plus()
        for a in range(self.n):
            r.rows[a] |= 1 << a
        return r

    def opt(self):
        r = Relation(self.n, self.rows)
        for a in range(self.n):
            r.rows[a] |= 1 << a
        return r

    def irreflexive(self):
        return not any(row >> a & 1 for a, row in enumerate(self.rows))

    def acyclic(self):
        """True iff the relation has no cycle (its closure is irreflexive)."""
        # Kahn-style peeling is cheaper than a full closure.
        indeg = [0] * self.n
        for row in self.rows:
            b = 0
            while row:
                if row & 1:
                    indeg[b] += 1
                row >>= 1
                b += 1
        stack = [a for a in range(self.n) if indeg[a] == 0]
        seen = 0
        while stack:
            a = stack.pop()
            seen += 1
            row, b = self.rows[a], 0
            while row:
                if row & 1:
                    indeg[b] -= 1
                    if indeg[b] == 0:
                        stack.append(b)
                row >>= 1
                b += 1
        return seen == self.n

    def is_empty(self):
        return not any(self.rows)


def mask_of(ids):
    m = 0
    for i in ids:
        m |= 1 << i
    return m


def _universe(pairs):
    nodes = sorted({x for p in pairs for x in p}, key=repr)
    return nodes, {x: k for k, x in enumerate(nodes)}


def closure(pairs):
    """Transitive closure of a relation given as a set of pairs."""
    nodes, index = _universe(pairs)
    rel = Relation.from_pairs(len(nodes), [(index[a], index[b]) for a, b in pairs]).plus()
    return {(nodes[a], nodes[b]) for a, b in rel.pairs()}


def acyclic(pairs):
    """Whether a relation given as a set of pairs has no cycle."""
    nodes, index = _universe(pairs)
    return Relation.from_pairs(len(nodes), [(index[a], index[b]) for a, b in pairs]).acyclic()
