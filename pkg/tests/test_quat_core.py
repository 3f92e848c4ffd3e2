import random
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from supnorm.errors import ParameterError, UnsupportedAlgebraError
from supnorm.quat_core import (
    INFINITY,
    AlgebraParams,
    QSqrt,
    RationalQuaternion,
    SplitMatrix,
    conjugate,
    embed_real,
    embed_split,
    hilbert_symbol,
    is_division,
    is_indefinite,
    is_squarefree,
    multiply,
    product_formula_holds,
    ramified_primes,
    reduced_norm,
    reduced_trace,
)

A = AlgebraParams(3, -1)
fracs = st.fractions(min_value=-20, max_value=20, max_denominator=12)
quats = st.tuples(fracs, fracs, fracs, fracs).map(lambda c: RationalQuaternion(A, *c))


def q(*c):
    return RationalQuaternion(A, *c)


def test_defining_relations():
    w, W = A.omega(), A.Omega()
    assert w * W == A.omega_Omega()
    assert W * w == -A.omega_Omega()
    assert w * w == q(3)
    assert W * W == q(-1)


def test_conjugate_trace_norm_examples():
    assert conjugate(q(1, 1)) == q(1, -1)
    assert reduced_norm(A.Omega()) == 1
    assert reduced_norm(q(1, 1)) == -2
    assert reduced_trace(q(Fraction(5, 2), 1, 2, 3)) == 5


def test_norm_equals_alpha_alpha_bar():
    x = q(1, 2, -3, Fraction(1, 2))
    assert multiply(x, conjugate(x)) == q(reduced_norm(x))


def test_mismatched_algebra_rejected():
    other = AlgebraParams(2, -1)
    with pytest.raises(ParameterError):
        multiply(q(1), RationalQuaternion(other, 1))


@pytest.mark.parametrize("a,b", [(4, 3), (3, 8), (0, 1), (1, 0)])
def test_bad_params_rejected(a, b):
    with pytest.raises(ParameterError):
        AlgebraParams(a, b)


def test_definite_rejected():
    with pytest.raises(UnsupportedAlgebraError):
        AlgebraParams(-1, -1)


@settings(max_examples=150, deadline=None)
@given(quats, quats, quats)
def test_algebra_laws(x, y, z):
    assert (x * y) * z == x * (y * z)
    assert reduced_norm(x * y) == reduced_norm(x) * reduced_norm(y)
    assert conjugate(x * y) == conjugate(y) * conjugate(x)
    assert conjugate(conjugate(x)) == x
    assert reduced_trace(x) == 2 * x.coords[0]


@settings(max_examples=150, deadline=None)
@given(quats, quats)
def test_embedding_homomorphism(x, y):
    assert embed_split(x * y) == embed_split(x) @ embed_split(y)
    assert embed_split(x + y).entries() == tuple(
        u + v for u, v in zip(embed_split(x).entries(), embed_split(y).entries()))
    d = embed_split(x).det()
    assert d.v == 0 and d.u == reduced_norm(x)


def test_embedding_examples():
    m = embed_split(A.Omega())
    assert [(e.u, e.v) for e in m.entries()] == [(0, 0), (1, 0), (-1, 0), (0, 0)]
    assert m.det() == QSqrt(Fraction(1), Fraction(0), 3)
    m = embed_split(A.omega())
    assert [(e.u, e.v) for e in m.entries()] == [(0, -1), (0, 0), (0, 0), (0, 1)]
    assert m.det().u == -3 == reduced_norm(A.omega())


def test_embed_real_matches_split():
    x = q(Fraction(1, 3), 2, Fraction(-5, 7), 1)
    r = embed_real(x, 200)
    with mpmath.workprec(200):
        for e, v in zip(embed_split(x).entries(), r.entries):
            assert abs(e.to_mpf() - v) < mpmath.mpf(2) ** (-196)
        assert abs(r.numeric_det() - mpmath.mpf(r.det.numerator) / r.det.denominator) < mpmath.mpf(2) ** -100
    assert r.det == reduced_norm(x)
    assert float(embed_real(A.Omega()).norm()) == pytest.approx(2 ** 0.5)


def test_hilbert_examples():
    assert hilbert_symbol(3, -1, 3) == -1
    assert hilbert_symbol(3, -1, INFINITY) == 1
    assert hilbert_symbol(3, -1, 2) == -1
    assert ramified_primes(A) == [2, 3]
    assert is_division(A) and is_indefinite(A)
    assert not is_division(AlgebraParams(1, 1))


def _local_oracle(a, b, p):
    """Primitive solution of z^2 = a x^2 + b y^2 modulo p^3 (p odd) or 64 (p = 2)."""
    m = 64 if p == 2 else p ** 3
    r = np.arange(m)
    sq = r * r % m
    roots: dict[int, bool] = {}
    for zv in range(m):
        roots[int(sq[zv])] = roots.get(int(sq[zv]), False) or zv % p != 0
    x, y = np.meshgrid(r, r, indexing="ij")
    rhs = (a * sq[x] + b * sq[y]) % m
    prim = (x % p != 0) | (y % p != 0)
    for val, pr in zip(rhs.ravel().tolist(), prim.ravel().tolist()):
        if val in roots and (pr or roots[val]):
            return 1
    return -1


SQUAREFREE = [v for v in range(-11, 12) if v and is_squarefree(abs(v))]


@pytest.mark.parametrize("a", [1, 2, 3, 5, 6, 7])
def test_hilbert_against_local_solubility(a):
    for b in SQUAREFREE:
        for p in (2, 3, 5, 7):
            assert hilbert_symbol(a, b, p) == _local_oracle(a, b, p), (a, b, p)


def test_product_formula_sweep():
    for a in [1, 2, 3, 5, 6, 7, 10, 11]:
        for b in SQUAREFREE:
            assert product_formula_holds(a, b)
            alg = AlgebraParams(a, b)
            assert len(ramified_primes(alg)) % 2 == 0


def test_rationals_stay_exact():
    rng = random.Random(3)
    x = q(*(Fraction(rng.randint(-9, 9), rng.randint(1, 9)) for _ in range(4)))
    y = x * x.inverse()
    assert y == q(1)
    assert all(isinstance(c, Fraction) for c in y.coords)
