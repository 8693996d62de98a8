import itertools
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from latfold.encoders import turn_circuit as tc
from latfold.encoders.base import ANCILLA, EncodedProblem
from latfold.errors import CapExceeded
from latfold.pbp import Polynomial, literal
from latfold.reduction import expand_ancillas, reduce_problem, reduce_to_quadratic, verify_reduction
from latfold.solve import energy_table, exhaustive_solve

from conftest import hp_matrix


@st.composite
def high_order(draw, n=8, max_deg=4):
    terms = {}
    for _ in range(draw(st.integers(1, 10))):
        k = draw(st.integers(1, max_deg))
        idx = tuple(sorted(draw(st.sets(st.integers(0, n - 1), min_size=k, max_size=k))))
        terms[idx] = terms.get(idx, 0) + Fraction(draw(st.integers(-20, 20)), draw(st.sampled_from([1, 4, 10])))
    return Polynomial(terms)


def projected_min_table(reduced, n, total):
    t, den = energy_table(reduced, total)
    return t.reshape(-1, 1 << n).min(axis=0), den


def test_quadratic_input_unchanged():
    p = Polynomial({(0, 1): 3, (2,): -1, (): 4})
    q, subs = reduce_to_quadratic(p)
    assert q == p and subs == []


@pytest.mark.parametrize("c", [5, -5, Fraction(-7, 2)])
def test_single_cubic_term(c):
    p = Polynomial({(0, 1, 2): c})
    q, subs = reduce_to_quadratic(p)
    assert len(subs) == 1
    w, u, v, m = subs[0].ancilla, subs[0].u, subs[0].v, subs[0].weight
    assert (w, u, v) == (3, 0, 1)
    assert m == 1 + 2 * abs(c)
    gadget = m * (literal(0) * literal(1) - 2 * literal(0) * literal(3) - 2 * literal(1) * literal(3) + 3 * literal(3))
    assert q == c * literal(3) * literal(2) + gadget
    for x in itertools.product((0, 1), repeat=3):
        assert min(q.evaluate(list(x) + [b]) for b in (0, 1)) == p.evaluate(x)
    assert verify_reduction(p, q, subs).ok


def test_pair_choice_is_most_frequent_then_lowest():
    p = Polynomial({(0, 2, 3): 1, (1, 2, 3): 1, (0, 1, 4): 1})
    _, subs = reduce_to_quadratic(p)
    assert (subs[0].u, subs[0].v) == (2, 3)
    p = Polynomial({(0, 1, 2): 1, (3, 4, 5): 1})
    _, subs = reduce_to_quadratic(p)
    assert (subs[0].u, subs[0].v) == (0, 1)


@given(high_order())
def test_min_over_ancillas_preserves_every_value(p):
    n = 8
    q, subs = reduce_to_quadratic(p, start_index=n)
    assert q.degree <= 2
    total = n + len(subs)
    if total > 20:
        return
    proj, rden = projected_min_table(q, n, total)
    orig, oden = energy_table(p, n)
    assert (proj * oden == orig * rden).all()
    rep = verify_reduction(p, q, subs, num_original=n)
    assert rep.ok
    for x in range(0, 1 << n, 37):
        bits = [(x >> i) & 1 for i in range(n)]
        assert q.evaluate(expand_ancillas(bits, subs)) == p.evaluate(bits)


@given(high_order())
def test_idempotent(p):
    q, subs = reduce_to_quadratic(p)
    q2, subs2 = reduce_to_quadratic(q)
    assert q2 == q and subs2 == []


@given(high_order())
def test_gadget_weights_dominate(p):
    q, subs = reduce_to_quadratic(p)
    for s in subs:
        assert s.weight > 0


def test_cap():
    # 24 variables plus one ancilla per cubic term
    p = Polynomial({tuple(range(k, k + 3)): 1 for k in range(0, 24, 3)})
    q, subs = reduce_to_quadratic(p)
    with pytest.raises(CapExceeded):
        verify_reduction(p, q, subs)


def test_reduce_problem_registry_and_round_trip():
    a = tc.encode("HPPHP", hp_matrix("HPPHP"))
    r = reduce_problem(a)
    assert r.polynomial.degree <= 2
    assert r.registry.count(ANCILLA) == len(r.reduction) == r.metadata["gadgets"]
    assert r.turn_indices() == a.turn_indices()
    for s in r.reduction:
        role = r.registry[s.ancilla]
        assert role.kind == ANCILLA and role.key == (s.u, s.v)
    back = EncodedProblem.from_text(r.to_text())
    assert back.reduction == r.reduction
    assert back.polynomial == r.polynomial
    rep = verify_reduction(a.polynomial, r.polynomial, r.reduction, num_original=a.num_vars)
    assert rep.ok and rep.original_min == -1


def test_decode_ignores_ancillas():
    a = tc.encode("HPPHP", hp_matrix("HPPHP"))
    r = reduce_problem(a)
    res = exhaustive_solve(r)
    assert res.energy == exhaustive_solve(a).energy
    for bits in res.argmin[:5]:
        f = r.decode(bits)
        assert f.is_valid
