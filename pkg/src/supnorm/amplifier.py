"""Normalized Hecke eigenvalue sequences, the prime amplifier, and exponent bookkeeping.

Sequences are held as exact rationals: synthetic eta(p) = 2cos(theta_p) is
rounded once to a Fraction and everything downstream (Hecke recursion,
amplified value) is exact, so identities hold with no rounding slack.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import mpmath
import numpy as np

from .errors import InputError, ParameterError

__all__ = [
    "EigenSequence",
    "AmplifierCoeffs",
    "ExponentLedger",
    "normalize",
    "hecke_extend",
    "sato_tate_sample",
    "amplifier_coeffs",
    "amplified_value",
    "admissible_prime_count",
    "binomial_floor",
    "exponent",
    "exponent_ledger",
    "theorem_bound",
    "sigma0",
    "primes_upto",
    "prime_pi",
]


# --- arithmetic helpers ------------------------------------------------------


def primes_upto(n: int) -> list[int]:
    if n < 2:
        return []
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, math.isqrt(n) + 1):
        if sieve[p]:
            sieve[p * p::p] = False
    return np.flatnonzero(sieve).tolist()


def prime_pi(x) -> int:
    return len(primes_upto(int(math.floor(x))))


def _smallest_factors(n: int) -> np.ndarray:
    spf = np.zeros(n + 1, dtype=np.int64)
    for p in primes_upto(n):
        block = spf[p::p]
        block[block == 0] = p
    return spf


def sigma0(n: int) -> int:
    if n < 1:
        raise ParameterError("sigma0 needs n >= 1")
    total, m, p = 1, n, 2
    while p * p <= m:
        e = 0
        while m % p == 0:
            m //= p
            e += 1
        total *= e + 1
        p += 1
    return total * (2 if m > 1 else 1)


def normalize(lam, n: int, k: int, precision: int = 128):
    """lambda / n^((k-1)/2)."""
    if n < 1:
        raise ParameterError("normalize needs n >= 1")
    with mpmath.workprec(precision):
        if isinstance(lam, Fraction):
            lam = mpmath.mpf(lam.numerator) / lam.denominator
        return mpmath.mpf(lam) / mpmath.power(n, mpmath.mpf(k - 1) / 2)


# --- sequences ---------------------------------------------------------------


@dataclass
class EigenSequence:
    values: dict[int, Fraction]  # n -> eta(n), 1 <= n <= n_max
    n_max: int
    q: int = 1
    k: int | None = None
    provenance: str = "user-supplied"

    def __getitem__(self, n: int) -> Fraction:
        try:
            return self.values[n]
        except KeyError:
            raise InputError(f"eta({n}) is not available (n_max={self.n_max})") from None

    def deligne_violations(self) -> list[int]:
        """n coprime to q with |eta(n)| > sigma0(n)."""
        return [n for n, v in self.values.items()
                if math.gcd(n, self.q) == 1 and abs(v) > sigma0(n)]

    def hecke_violations(self, m_max: int = 60) -> list[tuple[int, int]]:
        """(m, n) pairs breaking eta(m) eta(n) = sum_{d | (m,n)} eta(mn/d^2)."""
        bad = []
        top = min(m_max, self.n_max)
        for m in range(1, top + 1):
            for n in range(1, top + 1):
                if m * n > self.n_max:
                    continue
                g = math.gcd(m, n)
                rhs = sum(self.values[m * n // (d * d)] for d in range(1, g + 1) if g % d == 0)
                if self.values[m] * self.values[n] != rhs:
                    bad.append((m, n))
        return bad


def hecke_extend(prime_values: Mapping[int, object], n_max: int, q: int = 1,
                 k: int | None = None, provenance: str = "user-supplied") -> EigenSequence:
    """Extend eta from primes to 1..n_max multiplicatively.

    eta(p^(r+1)) = eta(p) eta(p^r) - eta(p^(r-1)), eta(mn) = eta(m) eta(n) for (m, n) = 1.
    """
    if n_max < 1:
        raise ParameterError("n_max must be >= 1")
    missing = [p for p in primes_upto(n_max) if p not in prime_values]
    if missing:
        raise InputError(f"eta(p) missing for primes {missing[:5]}{'...' if len(missing) > 5 else ''}")
    spf = _smallest_factors(n_max)
    vals: dict[int, Fraction] = {1: Fraction(1)}
    for n in range(2, n_max + 1):
        p = int(spf[n])
        m, pr = n, 1
        while m % p == 0:
            m //= p
            pr *= p
        if m > 1:
            vals[n] = vals[pr] * vals[m]
        elif pr == p:
            vals[n] = Fraction(prime_values[p])
        else:
            vals[n] = Fraction(prime_values[p]) * vals[pr // p] - vals[pr // (p * p)]
    return EigenSequence(vals, n_max, q, k, provenance)


def sato_tate_sample(seed: int, n_max: int, q: int = 1, k: int | None = None,
                     denominator_bits: int = 52) -> EigenSequence:
    """eta(p) = 2cos(theta_p), theta_p drawn from (2/pi) sin^2(theta) on [0, pi]."""
    rng = np.random.default_rng(seed)
    primes = primes_upto(n_max)
    thetas = []
    # rejection sampling against the uniform envelope (acceptance 1/2)
    while len(thetas) < len(primes):
        th = rng.uniform(0.0, math.pi, size=2 * (len(primes) - len(thetas)) + 8)
        keep = rng.uniform(0.0, 1.0, size=th.size) < np.sin(th) ** 2
        thetas.extend(th[keep].tolist())
    den = 1 << denominator_bits
    prime_values = {}
    for p, th in zip(primes, thetas):
        v = Fraction(round(2 * math.cos(th) * den), den)
        prime_values[p] = max(Fraction(-2), min(Fraction(2), v))
    return hecke_extend(prime_values, n_max, q, k, provenance="synthetic-sato-tate")


# --- amplifier ---------------------------------------------------------------


@dataclass
class AmplifierCoeffs:
    N: int
    q: int
    alpha: dict[int, Fraction] = field(default_factory=dict)  # support only

    def l2_mass(self) -> Fraction:
        return sum((v * v for v in self.alpha.values()), Fraction(0))


def _admissible_primes(N: int, q: int) -> list[int]:
    return [p for p in primes_upto(math.isqrt(N)) if q % p]


def admissible_prime_count(N: int, q: int) -> int:
    """#{p <= sqrt(N) : p does not divide q}."""
    return len(_admissible_primes(N, q))


def amplifier_coeffs(eta: EigenSequence, N: int, q: int) -> AmplifierCoeffs:
    """alpha(p) = eta(p), alpha(p^2) = -1 for primes p <= sqrt(N), p not dividing q."""
    if N < 1 or q < 1:
        raise ParameterError("amplifier needs N >= 1 and q >= 1")
    alpha: dict[int, Fraction] = {}
    for p in _admissible_primes(N, q):
        alpha[p] = eta[p]
        alpha[p * p] = Fraction(-1)
    return AmplifierCoeffs(N, q, alpha)


def amplified_value(alpha: AmplifierCoeffs, eta: EigenSequence) -> Fraction:
    """sum_n alpha(n) eta(n); exact."""
    return sum((a * eta[n] for n, a in alpha.alpha.items()), Fraction(0))


# --- binomial floor ----------------------------------------------------------


def binomial_floor(kappa: int, M: int, x) -> tuple[Fraction, Fraction, bool]:
    """(1 + x)^kappa >= C(kappa, M) x^M, compared exactly for rational x."""
    if not (isinstance(kappa, int) and isinstance(M, int)) or M < 1 or kappa < M:
        raise ParameterError("binomial_floor needs integers kappa >= M >= 1")
    x = Fraction(x)
    if x <= 0:
        raise ParameterError("binomial_floor needs x > 0")
    lhs = (1 + x) ** kappa
    rhs = math.comb(kappa, M) * x ** M
    return lhs, rhs, lhs >= rhs


# --- exponent ledger ---------------------------------------------------------


def exponent(M: int) -> Fraction:
    """e(M) = 1/2 - (M/4)/(1 + 8M)."""
    if not isinstance(M, int) or M < 1:
        raise ParameterError("M must be a positive integer")
    return Fraction(1, 2) - Fraction(M, 4 * (1 + 8 * M))


def _decimal(x: Fraction, places: int) -> str:
    s = f"{float(x):.{places}f}"
    return s[1:] if s.startswith("0.") else s


@dataclass
class ExponentLedger:
    M: int
    epsilon: float
    eps_prime: float
    beta: float
    k: int | None
    k0: int | None
    kappa: int | None
    N_of_k: float | None
    exponent: Fraction

    def display(self, places: int = 4) -> str:
        return _decimal(self.exponent, places)

    def to_json(self) -> str:
        doc = {
            "M": self.M,
            "beta": self.beta,
            "eps": self.epsilon,
            "eps_prime": self.eps_prime,
            "k": self.k,
            "k0": self.k0,
            "kappa": self.kappa,
            "N_of_k": {"form": "k^(M/(1+8M+eps))", "power": _n_power(self.M, self.epsilon),
                       "value": self.N_of_k},
            "exponent_exact": f"{self.exponent.numerator}/{self.exponent.denominator}",
            "exponent_decimal": float(self.exponent),
            "exponent_display_4": self.display(4),
            "exponent_display_5": self.display(5),
        }
        return json.dumps(doc, sort_keys=True, indent=1)


def _n_power(M: int, eps: float) -> float:
    return M / (1 + 8 * M + eps)


def _k0_for(k: int, M: int) -> int:
    k0 = 4 if k % 2 == 0 else 3
    if k - k0 <= 2 * M:
        raise ParameterError(
            f"k={k} too small for M={M}: need k - k0 > 2M with k0 = {k0} (kappa = (k-k0)/2 > M)")
    return k0


def exponent_ledger(M: int, epsilon: float = 0.0, k: int | None = None,
                    eps_prime: float = 1e-3) -> ExponentLedger:
    e = exponent(M)
    if epsilon < 0 or eps_prime <= 0:
        raise ParameterError("epsilon must be >= 0 and eps_prime > 0")
    k0 = kappa = n_of_k = None
    if k is not None:
        k0 = _k0_for(k, M)
        kappa = (k - k0) // 2
        n_of_k = float(k) ** _n_power(M, epsilon)
    return ExponentLedger(M, epsilon, eps_prime, 2 - eps_prime, k, k0, kappa, n_of_k, e)


@dataclass
class TheoremBound:
    ledger: ExponentLedger
    N: float
    nu: object  # N = k^nu; a Fraction when eps = 0
    diagonal_exponent: object  # log_k of k N^(-1/2+eps)
    off_diagonal_exponent: object  # log_k of N^(1/2+8M+eps) / k^(M-1)
    log_ratio_kappa: float  # log_k of the off-diagonal term with the actual kappa^(M-1)
    balanced: bool
    bound_exponent: object  # half the larger exponent: ||f||_inf << k^(this)

    def to_json(self) -> str:
        doc = json.loads(self.ledger.to_json())
        doc.update({
            "N": self.N,
            "nu": str(self.nu),
            "diagonal_exponent": str(self.diagonal_exponent),
            "off_diagonal_exponent": str(self.off_diagonal_exponent),
            "off_diagonal_exponent_actual_kappa": self.log_ratio_kappa,
            "balanced": self.balanced,
            "bound_exponent": str(self.bound_exponent),
        })
        return json.dumps(doc, sort_keys=True, indent=1)


def theorem_bound(k: int, M: int, epsilon: float = 0.0, eps_prime: float = 1e-3) -> TheoremBound:
    """Exponents of k for the two competing terms at N = k^(M/(1+8M+eps)).

    The terms are k N^(-1/2+eps) and N^(1/2+8M+eps) / kappa^(M-1); with
    kappa ~ k their k-exponents coincide when eps = 0, and the sup-norm bound
    is the square root of the common size, k^(e(M)).  The constant (k/kappa)^(M-1)
    is reported separately through the actual-kappa exponent.
    """
    led = exponent_ledger(M, epsilon, k, eps_prime)
    eps = Fraction(0) if epsilon == 0 else epsilon
    nu = Fraction(M, 1 + 8 * M) if epsilon == 0 else _n_power(M, epsilon)
    diag = 1 + nu * (eps - Fraction(1, 2))
    off = nu * (Fraction(1, 2) + 8 * M + eps) - (M - 1)
    lk = math.log(k)
    off_kappa = float(nu * (Fraction(1, 2) + 8 * M + eps)) - (M - 1) * math.log(led.kappa) / lk
    balanced = abs(float(off - diag)) <= float(epsilon) * (1 + 8 * M) + 1e-12
    bound = max(diag, off) / 2
    return TheoremBound(led, float(k) ** float(nu), nu, diag, off, off_kappa, balanced, bound)
