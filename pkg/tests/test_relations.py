from hypothesis import given
from hypothesis import strategies as st

from mixtest.relations import Relation, acyclic, closure


def test_empty_relation_is_acyclic():
    assert acyclic(set())
    assert Relation(3).acyclic()


def test_two_cycle():
    assert not acyclic({("a", "b"), ("b", "a")})


def test_self_loop():
    assert not acyclic({("a", "a")})


def test_chain_closure_size():
    for n in range(1, 9):
        chain = {(k, k + 1) for k in range(n - 1)}
        assert len(closure(chain)) == n * (n - 1) // 2


def test_seq_and_inverse():
    r = Relation.from_pairs(3, [(0, 1)])
    s = Relation.from_pairs(3, [(1, 2)])
    assert r.seq(s).pairs() == [(0, 2)]
    assert r.inverse().pairs() == [(1, 0)]
    assert (r | s).plus().pairs() == [(0, 1), (0, 2), (1, 2)]


def test_restrict_and_opt():
    r = Relation.from_pairs(3, [(0, 1), (1, 2)])
    assert r.restrict(0b001, -1).pairs() == [(0, 1)]
    assert r.restrict(-1, 0b100).pairs() == [(1, 2)]
    assert (0, 0) in r.opt() and (0, 0) not in r


edges = st.sets(st.tuples(st.integers(0, 6), st.integers(0, 6)), max_size=20)


@given(edges)
def test_acyclic_iff_closure_irreflexive(pairs):
    c = closure(pairs)
    assert acyclic(pairs) == all(a != b for a, b in c)


@given(edges)
def test_closure_is_transitive_and_minimal(pairs):
    c = closure(pairs)
    assert set(pairs) <= c
    for a, b in c:
        for b2, d in c:
            if b == b2:
                assert (a, d) in c
    assert closure(c) == c
