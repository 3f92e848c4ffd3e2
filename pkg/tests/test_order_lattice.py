import itertools
import random
from fractions import Fraction

import numpy as np
import pytest

from supnorm.errors import ClosureError, ParameterError, RankError, ResourceError, StabilizationError
from supnorm.order_lattice import (
    CosetPolicy,
    NormSlice,
    enumerate_norm,
    hermite_normal_form,
    is_left_unit_equivalent,
    is_maximal_candidate,
    majorant_form,
    reduced_discriminant,
    unit_cosets,
    verify_order,
)
from supnorm.quat_core import RationalQuaternion, embed_real, embed_split, reduced_norm

H = Fraction(1, 2)


def test_verify_examples(alg, order, std_order):
    assert std_order.bad_modulus_q == 12
    assert order.bad_modulus_q == 6
    e4 = order.basis[3]
    assert e4 * e4 == e4 + RationalQuaternion(alg, 1)
    with pytest.raises(ClosureError) as err:
        verify_order(alg, [alg.one(), alg.element(0, H), alg.Omega(), alg.omega_Omega()])
    assert err.value.pair == (1, 1)


def test_rank_error(alg):
    with pytest.raises(RankError):
        verify_order(alg, [alg.one(), alg.omega(), alg.one(), alg.Omega()])


def test_discriminants(order, std_order):
    assert reduced_discriminant(std_order) == 12
    assert reduced_discriminant(order) == 6
    assert is_maximal_candidate(order)
    assert not is_maximal_candidate(std_order)


def test_index_law(alg, order):
    # Z + 2O has index 8 in the standard order O
    sub = verify_order(alg, [alg.one(), alg.element(0, 2), alg.element(0, 0, 2),
                             alg.element(0, 0, 0, 2)])
    assert reduced_discriminant(sub) == 8 * 12


def test_q_override(alg):
    o = verify_order(alg, [alg.one(), alg.omega(), alg.Omega(), alg.omega_Omega()], 7)
    assert o.bad_modulus_q == 7


def test_majorant_positive_definite_and_matches_frobenius(order):
    m = majorant_form(order)
    for c in itertools.product(range(-2, 3), repeat=4):
        if not any(c):
            continue
        g = embed_real(order.element(c), 80)
        # b = -1 makes the rational majorant equal to the squared matrix norm
        assert float(m(c)) == pytest.approx(float(g.norm()) ** 2, rel=1e-12)


def _brute(order, n, T):
    m = majorant_form(order)
    out = set()
    for c in itertools.product(range(-6, 7), repeat=4):
        if order.element(c).norm() == n and m(c) <= T * T:
            out.add(order.element(c))
    return out


def test_enumeration_matches_brute_force(order, alg):
    sl = enumerate_norm(order, 1, 4)
    assert set(sl.elements) == _brute(order, 1, 4)
    assert len(sl) == 52
    for x in [alg.one(), alg.Omega(), alg.element(2, 1), alg.Omega() * alg.element(2, 1)]:
        assert x in sl.elements and -x in sl.elements
    sl2 = enumerate_norm(order, 2, 5)
    assert set(sl2.elements) == _brute(order, 2, 5)


def test_enumeration_invariants(order):
    small = enumerate_norm(order, 3, 5)
    big = enumerate_norm(order, 3, 10)
    assert set(small.elements) <= set(big.elements)
    for e in big.elements:
        assert embed_split(e).det().u == 3 and embed_split(e).det().v == 0
    keys = [tuple(e.coords) for e in big.elements]
    assert keys == sorted(keys)


def test_empty_below_majorant_floor(order):
    # ||g||^2 >= 2 det g, so no element of norm n has majorant below 2n
    for n in (1, 2, 5):
        T = Fraction(2 * n * 999, 1000) ** 0.5
        assert len(enumerate_norm(order, n, Fraction(T).limit_denominator(10 ** 6))) == 0
        assert not _brute(order, n, T)


def test_resource_error(order):
    with pytest.raises(ResourceError) as err:
        enumerate_norm(order, 1, 10 ** 4, memory_budget=10 ** 5)
    assert err.value.estimate > 10 ** 5


def test_bad_inputs(order):
    with pytest.raises(ParameterError):
        enumerate_norm(order, 0, 3)
    with pytest.raises(ParameterError):
        enumerate_norm(order, 1, 0)


def test_unit_equivalence(order, alg):
    sl = enumerate_norm(order, 2, 6)
    g = sl.elements[0]
    assert is_left_unit_equivalent(g, g, order)
    assert is_left_unit_equivalent(alg.Omega() * g, g, order)
    with pytest.raises(ParameterError):
        is_left_unit_equivalent(g, alg.one(), order)
    rng = random.Random(5)
    els = sl.elements
    for _ in range(60):
        x, y, z = (rng.choice(els) for _ in range(3))
        assert is_left_unit_equivalent(x, y, order) == is_left_unit_equivalent(y, x, order)
        if is_left_unit_equivalent(x, y, order) and is_left_unit_equivalent(y, z, order):
            assert is_left_unit_equivalent(x, z, order)


def test_cosets_small(order):
    assert unit_cosets(order, 1).coset_count == 1
    for n, want in [(2, 1), (3, 1), (4, 1), (5, 6), (6, 1), (7, 8), (35, 48)]:
        sl = unit_cosets(order, n)
        assert sl.coset_count == want, n
        assert sl.stabilized and sl.status() == "stabilized (heuristic)"


def test_coset_partition_property(order):
    sl = unit_cosets(order, 5)
    reps = sl.representative_elements()
    for i, j in itertools.combinations(range(len(reps)), 2):
        assert not is_left_unit_equivalent(reps[i], reps[j], order)
    seen = sorted(i for c in sl.cosets for i in c)
    assert seen == list(range(len(sl)))
    for ci, members in enumerate(sl.cosets):
        for m in members[:5]:
            hits = [is_left_unit_equivalent(sl.elements[m], r, order) for r in reps]
            assert hits.count(True) == 1 and hits[ci]
    q = sl.majorant_values
    for ci, members in enumerate(sl.cosets):
        assert q[sl.representatives[ci]] == min(q[m] for m in members)


def test_representatives_stable_under_doubling(order):
    a = unit_cosets(order, 7)
    b = unit_cosets(order, 7, CosetPolicy(initial_T=a.majorant_radius_T * 2))
    assert a.representative_elements() == b.representative_elements()


def test_stabilization_error(order):
    with pytest.raises(StabilizationError) as err:
        unit_cosets(order, 5, CosetPolicy(max_rounds=1))
    assert isinstance(err.value.partial, NormSlice)


def test_json_round_trip(order):
    sl = unit_cosets(order, 5)
    text = sl.to_json()
    back = NormSlice.from_json(text)
    assert back.to_json() == text
    assert back.elements == sl.elements
    assert np.array_equal(back.lattice, sl.lattice)


def test_hnf():
    assert hermite_normal_form([[2, 0], [0, 3]]) == hermite_normal_form([[2, 3], [0, 3]])
