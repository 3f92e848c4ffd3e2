"""Exact arithmetic in the quaternion algebra (a, b / Q).

Elements are written x0 + x1*w + x2*W + x3*wW with w^2 = a, W^2 = b and
wW = -Ww.  Coordinates are :class:`fractions.Fraction` throughout; the only
floating point lives in :func:`embed_real`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import mpmath

from .errors import ParameterError, UnsupportedAlgebraError

__all__ = [
    "INFINITY",
    "AlgebraParams",
    "RationalQuaternion",
    "QSqrt",
    "SplitMatrix",
    "RealMoebius",
    "is_squarefree",
    "multiply",
    "conjugate",
    "reduced_trace",
    "reduced_norm",
    "embed_split",
    "embed_real",
    "hilbert_symbol",
    "ramified_primes",
    "is_division",
]


class _Infinity:
    """Marker for the archimedean place."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFINITY"

    def __str__(self):
        return "inf"

    def __reduce__(self):
        return (_Infinity, ())


INFINITY = _Infinity()


def is_squarefree(n: int) -> bool:
    if n == 0:
        return False
    n = abs(n)
    d = 2
    while d * d <= n:
        if n % (d * d) == 0:
            return False
        d += 1
    return True


def _prime_factors(n: int) -> list[int]:
    n = abs(n)
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


@dataclass(frozen=True)
class AlgebraParams:
    """Structure constants of A = (a, b / Q); a > 0 so that A is indefinite."""

    a: int
    b: int

    def __post_init__(self):
        if not isinstance(self.a, int) or not isinstance(self.b, int):
            raise ParameterError("a and b must be integers")
        if self.a == 0 or self.b == 0:
            raise ParameterError("a and b must be nonzero")
        if not is_squarefree(self.a):
            raise ParameterError(f"a={self.a} is not square-free")
        if not is_squarefree(self.b):
            raise ParameterError(f"b={self.b} is not square-free")
        if self.a < 0:
            raise UnsupportedAlgebraError(
                f"a={self.a} < 0: definite or non-real embedding unsupported"
            )

    # convenience constructors for the basis elements
    def one(self) -> "RationalQuaternion":
        return RationalQuaternion(self, 1, 0, 0, 0)

    def omega(self) -> "RationalQuaternion":
        return RationalQuaternion(self, 0, 1, 0, 0)

    def Omega(self) -> "RationalQuaternion":
        return RationalQuaternion(self, 0, 0, 1, 0)

    def omega_Omega(self) -> "RationalQuaternion":
        return RationalQuaternion(self, 0, 0, 0, 1)

    def element(self, *coords) -> "RationalQuaternion":
        return RationalQuaternion(self, *coords)


class RationalQuaternion:
    """Immutable element of (a, b / Q) with exact rational coordinates."""

    __slots__ = ("algebra", "coords")

    def __init__(self, algebra: AlgebraParams, x0=0, x1=0, x2=0, x3=0):
        object.__setattr__(self, "algebra", algebra)
        object.__setattr__(
            self, "coords", tuple(Fraction(c) for c in (x0, x1, x2, x3))
        )

    def __setattr__(self, name, value):
        raise AttributeError("RationalQuaternion is immutable")

    @classmethod
    def from_coords(cls, algebra: AlgebraParams, coords: Iterable) -> "RationalQuaternion":
        return cls(algebra, *coords)

    x0 = property(lambda self: self.coords[0])
    x1 = property(lambda self: self.coords[1])
    x2 = property(lambda self: self.coords[2])
    x3 = property(lambda self: self.coords[3])

    def __repr__(self):
        return "RationalQuaternion({}, {})".format(
            (self.algebra.a, self.algebra.b), ", ".join(str(c) for c in self.coords)
        )

    def __eq__(self, other):
        if not isinstance(other, RationalQuaternion):
            return NotImplemented
        return self.algebra == other.algebra and self.coords == other.coords

    def __hash__(self):
        return hash((self.algebra, self.coords))

    def _check(self, other):
        if self.algebra != other.algebra:
            raise ParameterError(
                f"algebra mismatch: {self.algebra} vs {other.algebra}"
            )

    def _lift(self, other):
        if isinstance(other, RationalQuaternion):
            self._check(other)
            return other
        if isinstance(other, (int, Fraction)):
            return RationalQuaternion(self.algebra, other)
        return NotImplemented

    def __add__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return RationalQuaternion(
            self.algebra, *(p + q for p, q in zip(self.coords, other.coords))
        )

    __radd__ = __add__

    def __neg__(self):
        return RationalQuaternion(self.algebra, *(-c for c in self.coords))

    def __sub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return RationalQuaternion(self.algebra, *(c * other for c in self.coords))
        if isinstance(other, RationalQuaternion):
            return multiply(self, other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return RationalQuaternion(self.algebra, *(c * other for c in self.coords))
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Fraction(other)
            if other == 0:
                raise ZeroDivisionError("division by zero")
            return RationalQuaternion(self.algebra, *(c / other for c in self.coords))
        return NotImplemented

    def conjugate(self) -> "RationalQuaternion":
        return conjugate(self)

    def trace(self) -> Fraction:
        return reduced_trace(self)

    def norm(self) -> Fraction:
        return reduced_norm(self)

    def inverse(self) -> "RationalQuaternion":
        n = reduced_norm(self)
        if n == 0:
            raise ZeroDivisionError("element has zero reduced norm")
        return conjugate(self) / n


def multiply(p: RationalQuaternion, q: RationalQuaternion) -> RationalQuaternion:
    """Product in (a, b / Q)."""
    if p.algebra != q.algebra:
        raise ParameterError(f"algebra mismatch: {p.algebra} vs {q.algebra}")
    a, b = p.algebra.a, p.algebra.b
    p0, p1, p2, p3 = p.coords
    q0, q1, q2, q3 = q.coords
    # Products of basis pairs:
    #   w*w = a, W*W = b, (wW)^2 = -ab, w*W = wW, W*w = -wW,
    #   w*wW = aW, wW*w = -aW, W*wW = -bw, wW*W = bw.
    r0 = p0 * q0 + a * p1 * q1 + b * p2 * q2 - a * b * p3 * q3
    r1 = p0 * q1 + p1 * q0 - b * p2 * q3 + b * p3 * q2
    r2 = p0 * q2 + p2 * q0 + a * p1 * q3 - a * p3 * q1
    r3 = p0 * q3 + p3 * q0 + p1 * q2 - p2 * q1
    return RationalQuaternion(p.algebra, r0, r1, r2, r3)


def conjugate(q: RationalQuaternion) -> RationalQuaternion:
    x0, x1, x2, x3 = q.coords
    return RationalQuaternion(q.algebra, x0, -x1, -x2, -x3)


def reduced_trace(q: RationalQuaternion) -> Fraction:
    return 2 * q.coords[0]


def reduced_norm(q: RationalQuaternion) -> Fraction:
    a, b = q.algebra.a, q.algebra.b
    x0, x1, x2, x3 = q.coords
    return x0 * x0 - a * x1 * x1 - b * x2 * x2 + a * b * x3 * x3


# --- Q(sqrt a) and the split embedding -------------------------------------


@dataclass(frozen=True)
class QSqrt:
    """Element u + v*sqrt(d) of Q(sqrt d)."""

    u: Fraction
    v: Fraction
    d: int

    def __add__(self, other):
        return QSqrt(self.u + other.u, self.v + other.v, self.d)

    def __sub__(self, other):
        return QSqrt(self.u - other.u, self.v - other.v, self.d)

    def __mul__(self, other):
        if isinstance(other, QSqrt):
            return QSqrt(
                self.u * other.u + self.d * self.v * other.v,
                self.u * other.v + self.v * other.u,
                self.d,
            )
        other = Fraction(other)
        return QSqrt(self.u * other, self.v * other, self.d)

    __rmul__ = __mul__

    def conj(self) -> "QSqrt":
        return QSqrt(self.u, -self.v, self.d)

    def is_rational(self) -> bool:
        return self.v == 0

    def to_mpf(self):
        return mpmath.mpf(self.u.numerator) / self.u.denominator + (
            mpmath.mpf(self.v.numerator) / self.v.denominator
        ) * mpmath.sqrt(self.d)


@dataclass(frozen=True)
class SplitMatrix:
    """2x2 matrix over Q(sqrt a), entries ((p, q), (r, s))."""

    p: QSqrt
    q: QSqrt
    r: QSqrt
    s: QSqrt

    def det(self) -> QSqrt:
        return self.p * self.s - self.q * self.r

    def __matmul__(self, other: "SplitMatrix") -> "SplitMatrix":
        return SplitMatrix(
            self.p * other.p + self.q * other.r,
            self.p * other.q + self.q * other.s,
            self.r * other.p + self.s * other.r,
            self.r * other.q + self.s * other.s,
        )

    def entries(self) -> tuple[QSqrt, QSqrt, QSqrt, QSqrt]:
        return (self.p, self.q, self.r, self.s)


def embed_split(q: RationalQuaternion) -> SplitMatrix:
    """Ring homomorphism A -> M_2(Q(sqrt a)).

    phi(q) = [[xi', eta], [b*eta', xi]] with xi = x0 + x1 sqrt(a) and
    eta = x2 - x3 sqrt(a) (primes denote Galois conjugation).  The minus
    sign on x3 is what makes phi multiplicative, phi(w)phi(W) = phi(wW).
    """
    alg = q.algebra
    if alg.a <= 0:
        raise UnsupportedAlgebraError("embedding needs a > 0")
    x0, x1, x2, x3 = q.coords
    d = alg.a
    xi = QSqrt(x0, x1, d)
    eta = QSqrt(x2, -x3, d)
    return SplitMatrix(xi.conj(), eta, eta.conj() * alg.b, xi)


@dataclass(frozen=True)
class RealMoebius:
    """Real 2x2 matrix (mpmath entries) approximating an exact embedding."""

    entries: tuple  # (a, b, c, d) as mpf
    det: Fraction
    precision: int

    @property
    def a(self):
        return self.entries[0]

    @property
    def b(self):
        return self.entries[1]

    @property
    def c(self):
        return self.entries[2]

    @property
    def d(self):
        return self.entries[3]

    def numeric_det(self):
        a, b, c, d = self.entries
        return a * d - b * c

    def norm(self):
        """Frobenius norm (a^2 + b^2 + c^2 + d^2)^(1/2)."""
        return mpmath.sqrt(sum(e * e for e in self.entries))

    def act(self, z):
        a, b, c, d = self.entries
        return (a * z + b) / (c * z + d)


def embed_real(q: RationalQuaternion, precision: int = 128) -> RealMoebius:
    """Evaluate :func:`embed_split` at the positive real sqrt(a)."""
    m = embed_split(q)
    with mpmath.workprec(precision + 16):
        vals = tuple(e.to_mpf() for e in m.entries())
    with mpmath.workprec(precision):
        vals = tuple(+v for v in vals)
    det = m.det()
    return RealMoebius(vals, det.u, precision)


# --- local invariants ------------------------------------------------------


def _valuation(n: int, p: int) -> int:
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def _legendre(u: int, p: int) -> int:
    r = pow(u % p, (p - 1) // 2, p)
    return -1 if r == p - 1 else r


def hilbert_symbol(a: int, b: int, p) -> int:
    """Hilbert symbol (a, b)_p for square-free nonzero a, b.

    ``p`` is a rational prime or :data:`INFINITY`.
    """
    if a == 0 or b == 0:
        raise ParameterError("hilbert symbol needs nonzero arguments")
    if not is_squarefree(a) or not is_squarefree(b):
        raise ParameterError(f"({a}, {b}) not square-free")
    if p is INFINITY:
        return -1 if (a < 0 and b < 0) else 1
    if not isinstance(p, int) or p < 2 or _prime_factors(p) != [p]:
        raise ParameterError(f"{p!r} is neither a prime nor INFINITY")
    alpha, beta = _valuation(a, p), _valuation(b, p)
    u, v = a // p**alpha, b // p**beta
    if p == 2:
        eps_u, eps_v = ((u - 1) // 2) % 2, ((v - 1) // 2) % 2
        om_u, om_v = ((u * u - 1) // 8) % 2, ((v * v - 1) // 8) % 2
        e = (eps_u * eps_v + alpha * om_v + beta * om_u) % 2
        return -1 if e else 1
    eps_p = ((p - 1) // 2) % 2
    sign = -1 if (alpha * beta * eps_p) % 2 else 1
    return sign * _legendre(u, p) ** beta * _legendre(v, p) ** alpha


def _candidate_places(a: int, b: int) -> list:
    primes = sorted(set(_prime_factors(2 * a * b)))
    return primes + [INFINITY]


def ramified_primes(algebra: AlgebraParams) -> list:
    """Places where (a, b / Q) ramifies; finite primes first, then INFINITY."""
    return [
        p for p in _candidate_places(algebra.a, algebra.b)
        if hilbert_symbol(algebra.a, algebra.b, p) == -1
    ]


def product_formula_holds(a: int, b: int) -> bool:
    return math.prod(hilbert_symbol(a, b, p) for p in _candidate_places(a, b)) == 1


def is_division(algebra: AlgebraParams) -> bool:
    return bool(ramified_primes(algebra))


def is_indefinite(algebra: AlgebraParams) -> bool:
    return hilbert_symbol(algebra.a, algebra.b, INFINITY) == 1


def discriminant(algebra: AlgebraParams) -> int:
    """Product of the finite ramified primes."""
    return math.prod(p for p in ramified_primes(algebra) if p is not INFINITY)


def norm_form_display(algebra: AlgebraParams) -> str:
    a, b = algebra.a, algebra.b

    def term(coef, var):
        sign = "-" if coef < 0 else "+"
        mag = abs(coef)
        return f" {sign} {'' if mag == 1 else mag}{var}^2"

    return "x0^2" + term(-a, "x1") + term(-b, "x2") + term(a * b, "x3")


def as_quaternions(algebra: AlgebraParams, rows: Sequence[Sequence]) -> list[RationalQuaternion]:
    return [RationalQuaternion(algebra, *row) for row in rows]
