import json
import math
from fractions import Fraction

import mpmath
import pytest

from supnorm.amplifier import (
    admissible_prime_count,
    amplified_value,
    amplifier_coeffs,
    binomial_floor,
    exponent,
    exponent_ledger,
    hecke_extend,
    normalize,
    prime_pi,
    primes_upto,
    sato_tate_sample,
    sigma0,
    theorem_bound,
)
from supnorm.errors import InputError, ParameterError


def test_helpers():
    assert primes_upto(30) == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    assert prime_pi(100) == 25 and prime_pi(10 ** 4) == 1229
    assert [sigma0(n) for n in (1, 2, 6, 12, 36, 97)] == [1, 2, 4, 6, 9, 2]


def test_normalize():
    assert normalize(1, 1, 12) == 1
    with mpmath.workprec(128):
        lam = mpmath.mpf(5) ** mpmath.mpf(5.5)
    assert abs(normalize(lam, 5, 12) - 1) < 1e-30
    assert normalize(24, 2, 11) == mpmath.mpf("0.75")


def test_hecke_extend_examples():
    e = hecke_extend({p: 2 for p in primes_upto(50)}, 50)
    assert (e[4], e[8], e[27]) == (3, 4, 4)
    assert e[6] == e[2] * e[3]
    th = 0.7
    c = Fraction(2 * math.cos(th))
    e = hecke_extend({p: c for p in primes_upto(10)}, 10)
    assert float(e[4]) == pytest.approx(2 * math.cos(2 * th) + 1, abs=1e-15)
    with pytest.raises(InputError):
        hecke_extend({2: 1}, 10)


def test_full_hecke_relation():
    e = sato_tate_sample(7, 3600)
    assert e.hecke_violations(60) == []


def test_sato_tate_contract_and_determinism():
    a = sato_tate_sample(42, 2000, q=6)
    b = sato_tate_sample(42, 2000, q=6)
    assert a.values == b.values
    assert a.provenance == "synthetic-sato-tate"
    for p in primes_upto(2000):
        assert abs(a[p]) <= 2
        if p * p <= 2000:
            assert abs(a[p * p]) <= 3
    assert a.deligne_violations() == []
    assert sato_tate_sample(43, 2000).values != a.values


def test_sato_tate_distribution():
    e = sato_tate_sample(1, 200000)
    vals = [float(e[p]) for p in primes_upto(200000)]
    # semicircle moments: E[eta] = 0, E[eta^2] = 1, E[eta^4] = 2
    m1 = sum(vals) / len(vals)
    m2 = sum(v * v for v in vals) / len(vals)
    m4 = sum(v ** 4 for v in vals) / len(vals)
    assert abs(m1) < 0.03 and abs(m2 - 1) < 0.03 and abs(m4 - 2) < 0.08


def test_amplifier_examples():
    e = sato_tate_sample(3, 100, q=6)
    a = amplifier_coeffs(e, 100, 6)
    assert sorted(a.alpha) == [5, 7, 25, 49]
    assert amplified_value(a, e) == 2
    assert amplified_value(amplifier_coeffs(e, 4, 6), e) == 0
    assert admissible_prime_count(4, 6) == 0
    bound = sum(sigma0(p) ** 2 for p in primes_upto(10)) + prime_pi(10)
    assert a.l2_mass() <= bound


def test_amplifier_missing_values():
    # coefficients only read eta(p); the amplified value needs eta(p^2) too
    e = sato_tate_sample(3, 30, q=6)
    a = amplifier_coeffs(e, 100, 6)
    with pytest.raises(InputError):
        amplified_value(a, e)


def test_binomial_floor():
    assert binomial_floor(10, 2, 1) == (1024, 45, True)
    assert binomial_floor(5, 5, 1)[2]
    with pytest.raises(ParameterError):
        binomial_floor(3, 4, 1)
    with pytest.raises(ParameterError):
        binomial_floor(8, 2, 0)


def test_exponent_values():
    assert exponent(4) == Fraction(31, 66) == Fraction(1, 2) - Fraction(1, 33)
    assert exponent_ledger(4).display(4) == ".4697"
    assert exponent_ledger(100).display(5) == ".46879"
    vals = [exponent(M) for M in range(1, 200)]
    assert all(x > y for x, y in zip(vals, vals[1:]))
    assert all(v > Fraction(1, 2) - Fraction(1, 32) for v in vals)
    assert float(exponent(10 ** 6)) == pytest.approx(0.5 - 1 / 32, abs=1e-7)


def test_ledger_json_and_k_constraint():
    led = exponent_ledger(4, k=100)
    doc = json.loads(led.to_json())
    assert doc["exponent_exact"] == "31/66" and doc["k0"] == 4 and doc["kappa"] == 48
    assert doc["beta"] == pytest.approx(2 - 1e-3)
    with pytest.raises(ParameterError, match="k - k0 > 2M"):
        exponent_ledger(4, k=12)


def test_theorem_bound_balance():
    for M in (1, 4, 100):
        tb = theorem_bound(10 ** 4, M)
        assert tb.balanced
        assert tb.diagonal_exponent == tb.off_diagonal_exponent
        assert tb.bound_exponent == exponent(M)
    assert theorem_bound(10 ** 4, 4, epsilon=0.01).balanced
    json.loads(theorem_bound(1000, 4).to_json())
