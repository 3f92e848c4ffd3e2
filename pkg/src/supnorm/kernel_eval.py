"""Hecke-transformed Bergman kernel sums over R(n).

For gamma = [[a, b], [c, d]] in R(n) (real embedding) the summand of
h^n_k(z, w) is

    n^(k/2) (c conj(w) + d)^(-k) ((z - gamma conj(w)) / 2i)^(-k),

which we write as exp(k * log(sqrt(n) * g)) with
g = 2i / (z (c conj(w) + d) - (a conj(w) + b)).  On the diagonal
y * g = h_gamma(z).  Sums are truncated at majorant radius T and T is
doubled until the partial sum settles; this is a heuristic, not a tail
bound, and reports say so.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np
from flint import acb, arb, ctx as flint_ctx, fmpz

from .errors import ParameterError, StabilizationError
from .order_lattice import (
    NormSlice,
    QuaternionOrder,
    enumerate_norm,
    float_embedding,
    unit_cosets,
    CosetPolicy,
)
from .quat_core import RationalQuaternion, RealMoebius, embed_real

__all__ = [
    "UpperHalfPoint",
    "TruncationPolicy",
    "KernelEvaluation",
    "TermLedger",
    "h_gamma",
    "kernel_diag",
    "kernel_offdiag",
    "kernel_majorant",
    "hecke_identity_residual",
    "godement_ratio",
    "convexity_bound",
    "fit_scaled_bound",
    "choose_k0",
]


@dataclass(frozen=True)
class UpperHalfPoint:
    x: object
    y: object

    def __post_init__(self):
        object.__setattr__(self, "x", mpmath.mpf(self.x) if not isinstance(self.x, Fraction)
                           else mpmath.mpf(self.x.numerator) / self.x.denominator)
        object.__setattr__(self, "y", mpmath.mpf(self.y) if not isinstance(self.y, Fraction)
                           else mpmath.mpf(self.y.numerator) / self.y.denominator)
        if not self.y > 0:
            raise ParameterError(f"point must lie in the upper half plane, got y={self.y}")

    @classmethod
    def from_complex(cls, z) -> "UpperHalfPoint":
        if isinstance(z, UpperHalfPoint):
            return z
        if isinstance(z, (tuple, list)):
            return cls(*z)
        z = mpmath.mpc(z)
        return cls(z.real, z.imag)

    @property
    def z(self):
        return mpmath.mpc(self.x, self.y)

    def __complex__(self):
        return complex(float(self.x), float(self.y))

    def as_pair(self) -> tuple[float, float]:
        return float(self.x), float(self.y)


@dataclass(frozen=True)
class TruncationPolicy:
    tol: float = 1e-13
    stable_rounds: int = 1
    min_rounds: int = 3
    max_rounds: int = 10
    initial_T: float | None = None
    precision: int = 128


@dataclass
class TermLedger:
    """Per-element records: coords, |h_gamma|, k*log10|h_gamma|, arg(h_gamma^k), |gamma z - z|."""

    k: int
    n: int
    records: list[tuple] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x0", "x1", "x2", "x3", "abs_h_gamma", "log10_term_magnitude", "phase"])
        for coords, absh, logmag, phase, _ in self.records:
            w.writerow([str(c) for c in coords]
                       + [f"{absh:.17e}", f"{logmag:.17e}", f"{phase:.17e}"])
        return buf.getvalue()

    def abs_values(self) -> np.ndarray:
        return np.array([r[1] for r in self.records])

    def displacements(self) -> np.ndarray:
        return np.array([r[4] for r in self.records])

    def bound_violations(self, deltas: Sequence[float] = (0.5, 0.1, 0.01),
                         slack: float = 1e-12) -> dict:
        """Records breaking |h| <= n^(-1/2), or |h| <= (1+delta^2)^(-1/2) when |gamma z - z| > delta.

        Returns {"n^-1/2": [...], delta: [...]} with the offending records.
        """
        out = {"n^-1/2": [r for r in self.records if r[1] > self.n ** -0.5 * (1 + slack)]}
        for delta in deltas:
            cap = (1 + delta * delta) ** -0.5 * (1 + slack)
            out[delta] = [r for r in self.records if r[4] > delta and r[1] > cap]
        return out


@dataclass
class KernelEvaluation:
    n: int
    k: int
    z: UpperHalfPoint
    w: UpperHalfPoint
    value: object  # mpc
    terms_used: int
    radius_T: float
    doubling_history: list[tuple[float, object]]
    stabilized: bool
    max_term_magnitude: float
    stabilizer_order: int = 0
    tail_bound: float = 0.0
    ledger: TermLedger | None = None
    precision: int = 128
    rounding_radius: float = 0.0

    def is_diagonal(self) -> bool:
        return self.z == self.w

    def to_json(self) -> str:
        doc = {
            "n": self.n,
            "k": self.k,
            "z": [mpmath.nstr(self.z.x, 30), mpmath.nstr(self.z.y, 30)],
            "w": [mpmath.nstr(self.w.x, 30), mpmath.nstr(self.w.y, 30)],
            "value": [mpmath.nstr(mpmath.re(self.value), 30), mpmath.nstr(mpmath.im(self.value), 30)],
            "terms_used": self.terms_used,
            "radius_T": self.radius_T,
            "doubling_history": [
                [t, mpmath.nstr(mpmath.re(v), 30), mpmath.nstr(mpmath.im(v), 30)]
                for t, v in self.doubling_history
            ],
            "stabilized": self.stabilized,
            "truncation": "stabilized (heuristic)" if self.stabilized else "not stabilized",
            "max_term_magnitude": self.max_term_magnitude,
            "stabilizer_order": self.stabilizer_order,
            "tail_bound": self.tail_bound,
            "precision": self.precision,
            "rounding_radius": self.rounding_radius,
        }
        return json.dumps(doc, sort_keys=True, indent=1)


def choose_k0(k: int, M: int = 1) -> int:
    """Smallest even k0 > 2 with k0 = k (mod 2) and k - k0 > 2M."""
    k0 = 4 if k % 2 == 0 else 3
    if k - k0 <= 2 * M:
        raise ParameterError(f"k={k} too small: need k - k0 > 2M with k0={k0}, M={M}")
    return k0


# --- single terms -----------------------------------------------------------


def _as_moebius(gamma, precision) -> RealMoebius | tuple:
    if isinstance(gamma, RationalQuaternion):
        return embed_real(gamma, precision)
    return gamma


def _entries(gamma):
    if isinstance(gamma, RealMoebius):
        return gamma.entries
    a, b, c, d = gamma if len(gamma) == 4 else (*gamma[0], *gamma[1])
    return tuple(mpmath.mpf(v) for v in (a, b, c, d))


def h_gamma(z, gamma, n: int | None = None, precision: int = 128):
    """h_gamma(z) = y / ((z - gamma conj(z))/2i * (c conj(z) + d))."""
    z = UpperHalfPoint.from_complex(z)
    with mpmath.workprec(precision + 16):
        a, b, c, d = _entries(_as_moebius(gamma, precision))
        det = a * d - b * c
        if det <= 0:
            raise ParameterError("h_gamma needs a matrix of positive determinant")
        if n is not None and abs(det - n) > mpmath.mpf(2) ** (-precision // 2) * max(1, n):
            raise ParameterError(f"matrix determinant {det} does not match n={n}")
        zz = z.z
        zb = mpmath.conj(zz)
        denom = zz * (c * zb + d) - (a * zb + b)
        val = 2j * z.y / denom
    with mpmath.workprec(precision):
        return +val


# --- summation machinery -----------------------------------------------------
#
# Hot loops run in Arb ball arithmetic (python-flint): each summand carries a
# rigorous radius, so the accumulated radius bounds the rounding error of the
# whole sum.  Values are handed back as mpmath numbers.


def _arb_to_mpf(x: arb):
    man, exp = x.mid().man_exp()
    return mpmath.mpf((int(man), int(exp)))


def _acb_to_mpc(x: acb):
    return mpmath.mpc(_arb_to_mpf(x.real), _arb_to_mpf(x.imag))


def _mpf_to_arb(x) -> arb:
    sign, man, exp, _ = mpmath.mpf(x)._mpf_
    if not man:
        return arb(0)
    return arb((fmpz(-int(man) if sign else int(man)), fmpz(int(exp))))


def _point_to_acb(p: UpperHalfPoint) -> acb:
    return acb(_mpf_to_arb(p.x), _mpf_to_arb(p.y))


class _Terms:
    """Ball-arithmetic real matrices of an enumerated slice, cached across doublings."""

    def __init__(self, order: QuaternionOrder, n: int, precision: int):
        self.order = order
        self.n = n
        self.precision = precision
        self.cache: dict[tuple, tuple] = {}
        self.den = math.lcm(*(x.denominator for row in order.basis_matrix for x in row))
        self.ib = order.integral_basis
        with _prec(precision + 32):
            self.sqrt_a = arb(order.algebra.a).sqrt()

    def matrices(self, sl: NormSlice) -> list[tuple]:
        """(key, (a, b, c, d)) for each element, in the slice's canonical order."""
        out = []
        b_alg = self.order.algebra.b
        xs = (sl.lattice @ self.ib).tolist()
        with _prec(self.precision + 32):
            r = self.sqrt_a
            den = arb(self.den)
            for key, x in zip(map(tuple, sl.lattice.tolist()), xs):
                m = self.cache.get(key)
                if m is None:
                    x0, x1, x2, x3 = x
                    m = ((x0 - x1 * r) / den, (x2 - x3 * r) / den,
                         b_alg * (x2 + x3 * r) / den, (x0 + x1 * r) / den)
                    self.cache[key] = m
                out.append((key, m))
        return out

    def float_matrices(self, sl: NormSlice) -> np.ndarray:
        return float_embedding(self.order, sl.lattice)


class _prec:
    """Temporarily set the Arb working precision."""

    def __init__(self, bits):
        self.bits = bits

    def __enter__(self):
        self.saved = flint_ctx.prec
        flint_ctx.prec = self.bits

    def __exit__(self, *exc):
        flint_ctx.prec = self.saved


def _initial_T(n: int, z: UpperHalfPoint, w: UpperHalfPoint, policy: TruncationPolicy) -> Fraction:
    if policy.initial_T:
        return Fraction(policy.initial_T)
    # ||g|| >= sqrt(2n) always; scale a little with how far z, w sit from i.
    spread = max(float(z.y), 1 / float(z.y), float(w.y), 1 / float(w.y), 1.0)
    spread *= 1 + max(abs(float(z.x)), abs(float(w.x)))
    return Fraction(math.ceil(2 * math.sqrt(n) * math.sqrt(spread)))


def _check_weight(k: int, minimum: int = 4):
    if not isinstance(k, int) or k % 2 or k < minimum:
        raise ParameterError(f"weight k must be an even integer >= {minimum}, got {k}")


def _negated(key: tuple) -> tuple:
    return tuple(-c for c in key)


def _evaluate(order: QuaternionOrder, n: int, k: int, z: UpperHalfPoint, w: UpperHalfPoint,
              policy: TruncationPolicy, keep_ledger: bool,
              terms: _Terms | None = None) -> KernelEvaluation:
    prec = policy.precision
    terms = terms or _Terms(order, n, prec)
    T = _initial_T(n, z, w, policy)
    history: list[tuple[float, object]] = []
    summands: dict[tuple, acb] = {}
    diag = z == w
    stable = 0
    value = None
    rounds = 0
    with _prec(prec + 16):
        zz, wb = _point_to_acb(z), _point_to_acb(w).conjugate()
        # n^(k/2) (2i)^k, exact for even k
        numer = acb(arb(n) ** (k // 2) * arb(2) ** k * (-1) ** (k // 2))
        yk = _mpf_to_arb(z.y) ** k
        for rounds in range(1, policy.max_rounds + 1):
            sl = enumerate_norm(order, n, T)
            mats = terms.matrices(sl)
            new_keys = []
            for key, (a, b, c, d) in mats:
                if key in summands:
                    continue
                twin = summands.get(_negated(key))
                if twin is not None:
                    # (-D)^k = D^k for even k, so -gamma repeats gamma's summand
                    summands[key] = twin
                else:
                    summands[key] = numer / (zz * (c * wb + d) - (a * wb + b)) ** k
                new_keys.append(key)
            acc = acb(0)
            for key, _ in mats:  # canonical order fixes the accumulation sequence
                acc += summands[key]
            new_value = acc * yk if diag else acc
            history.append((float(T), _acb_to_mpc(new_value)))
            if value is not None and _close(new_value, value, policy.tol):
                stable += 1
            else:
                stable = 0
            value = new_value
            if stable >= policy.stable_rounds and rounds >= policy.min_rounds:
                break
            T *= 2
        else:
            raise StabilizationError(
                f"kernel sum (n={n}, k={k}) did not stabilize in {policy.max_rounds} rounds",
                partial=_acb_to_mpc(value), history=history,
            )

        max_mag = 0.0
        ledger = TermLedger(k, n) if keep_ledger else None
        stab = 0
        sqrt_n = arb(n).sqrt()
        y = _mpf_to_arb(z.y)
        threshold = arb(2) ** (-(prec // 2))
        for key, m in mats:
            mag = abs(summands[key]) * (yk if diag else 1)
            max_mag = max(max_mag, float(mag.mid()))
            if diag:
                h = _h_acb(zz, y, m)
                absh = abs(h)
                if abs(absh * sqrt_n - 1) < threshold:
                    stab += 1
                if ledger is not None:
                    ah = float(absh.mid())
                    a, b, c, d = m
                    disp = abs((a * zz + b) / (c * zz + d) - zz)
                    ledger.records.append((
                        order.element(key).coords, ah,
                        k * math.log10(ah) if ah > 0 else float("-inf"),
                        float((h ** k).arg().mid()), float(disp.mid()),
                    ))
        # tail diagnostic on the newest shell: |h| <= 2 / (u + n/u), u = |c conj(z) + d|
        tail = 0.0
        zb = zz.conjugate()
        for key in new_keys:
            a, b, c, d = terms.cache[key]
            u = float(abs(c * zb + d).mid())
            tail = max(tail, (math.sqrt(n) * 2 / (u + n / u)) ** k)
        radius = float(max(value.real.rad(), value.imag.rad()))
    return KernelEvaluation(
        n=n, k=k, z=z, w=w, value=_acb_to_mpc(value), terms_used=len(mats), radius_T=float(T),
        doubling_history=history, stabilized=True, max_term_magnitude=max_mag,
        stabilizer_order=stab if (diag and n == 1) else 0, tail_bound=tail,
        ledger=ledger, precision=prec, rounding_radius=radius,
    )


def _close(new: acb, old: acb, tol: float) -> bool:
    diff = abs(new - old).mid()
    return float(diff) < tol * (1 + float(abs(new).mid()))


def _h_acb(z: acb, y: arb, m) -> acb:
    a, b, c, d = m
    zb = z.conjugate()
    return acb(0, 2) * y / (z * (c * zb + d) - (a * zb + b))


def kernel_diag(order: QuaternionOrder, n: int, k: int, z, policy: TruncationPolicy | None = None,
                keep_ledger: bool = False) -> KernelEvaluation:
    """y^k h^n_k(z, z) = n^(k/2) sum_{gamma in R(n)} h_gamma(z)^k."""
    _check_weight(k)
    if n < 1:
        raise ParameterError("n must be >= 1")
    z = UpperHalfPoint.from_complex(z)
    return _evaluate(order, n, k, z, z, policy or TruncationPolicy(), keep_ledger)


def kernel_offdiag(order: QuaternionOrder, n: int, k: int, z, w,
                   policy: TruncationPolicy | None = None,
                   keep_ledger: bool = False) -> KernelEvaluation:
    """h^n_k(z, w), holomorphic in z and antiholomorphic in w (no y^k factor)."""
    _check_weight(k)
    if n < 1:
        raise ParameterError("n must be >= 1")
    z = UpperHalfPoint.from_complex(z)
    w = UpperHalfPoint.from_complex(w)
    ev = _evaluate(order, n, k, z, w, policy or TruncationPolicy(), keep_ledger)
    if z == w:
        # keep the value unscaled so that h^n_k(z, z) = kernel_diag / y^k
        with mpmath.workprec(ev.precision + 16):
            yk = z.y ** k
            ev.value = ev.value / yk
            ev.doubling_history = [(t, v / yk) for t, v in ev.doubling_history]
    return ev


# --- Hecke identity ---------------------------------------------------------


def _slash_parts(order, reps, n, k, z, w, policy):
    """(h_k(z, .) |_k gamma_i)(w) for each representative, slash taken in the antiholomorphic slot."""
    terms1 = _Terms(order, 1, policy.precision)
    parts = []
    with mpmath.workprec(policy.precision + 16):
        ww = w.z
        for rep in reps:
            a, b, c, d = embed_real(rep, policy.precision + 16).entries
            gw = (a * ww + b) / (c * ww + d)
            inner = _evaluate(order, 1, k, z, UpperHalfPoint(mpmath.re(gw), mpmath.im(gw)),
                              policy, False, terms1)
            factor = mpmath.mpf(n) ** (k // 2) * (c * mpmath.conj(ww) + d) ** (-k)
            parts.append(factor * inner.value)
    return parts


def hecke_identity_residual(order: QuaternionOrder, n: int, k: int, z, w,
                            policy: TruncationPolicy | None = None,
                            coset_policy: CosetPolicy | None = None,
                            drop_coset: int | None = None,
                            details: bool = False):
    """Relative gap between n^(k/2-1) h^n_k(z, w) and h_k(z, .)|T(n) evaluated at w.

    The right side sums h_k at the translated points gamma_i w, one per coset
    representative, so it shares no truncation with the left side.  With
    ``drop_coset`` set, that coset is omitted (negative control).
    """
    _check_weight(k)
    policy = policy or TruncationPolicy()
    z = UpperHalfPoint.from_complex(z)
    w = UpperHalfPoint.from_complex(w)
    if n == 1 and drop_coset is None:
        return (0.0, {"cosets": 1}) if details else 0.0
    sl = unit_cosets(order, n, coset_policy)
    parts = _slash_parts(order, sl.representative_elements(), n, k, z, w, policy)
    lhs_eval = kernel_offdiag(order, n, k, z, w, policy)
    with mpmath.workprec(policy.precision + 16):
        scale = mpmath.mpf(n) ** (mpmath.mpf(k) / 2 - 1)
        kept = [p for i, p in enumerate(parts) if i != drop_coset]
        lhs = scale * lhs_eval.value
        rhs = scale * mpmath.fsum(kept)
        resid = abs(lhs - rhs) / max(abs(lhs), abs(rhs))
    info = {"lhs": lhs, "rhs": rhs, "cosets": sl.coset_count, "parts": parts}
    return (float(resid), info) if details else float(resid)


# --- majorants ----------------------------------------------------------------


def _float_abs_g(mats: np.ndarray, z: complex, w: complex) -> np.ndarray:
    a, b, c, d = mats.T
    wb = np.conj(w)
    return np.abs(2.0 / (z * (c * wb + d) - (a * wb + b)))


def kernel_majorant(order: QuaternionOrder, n: int, k: int, z, w,
                    policy: TruncationPolicy | None = None) -> tuple[float, list]:
    """log of sum_gamma |summand| for h^n_k(z, w), in double precision."""
    policy = policy or TruncationPolicy(tol=1e-10)
    z = UpperHalfPoint.from_complex(z)
    w = UpperHalfPoint.from_complex(w)
    terms = _Terms(order, n, 53)
    T = _initial_T(n, z, w, policy)
    prev = None
    stable = 0
    history = []
    zc, wc = complex(z), complex(w)
    for _ in range(policy.max_rounds):
        sl = enumerate_norm(order, n, T)
        g = _float_abs_g(terms.float_matrices(sl), zc, wc)
        logs = k * (np.log(g) + 0.5 * math.log(n))
        top = logs.max()
        val = top + math.log(np.exp(logs - top).sum())
        history.append((float(T), val))
        if prev is not None and abs(math.expm1(val - prev)) < policy.tol:
            stable += 1
        else:
            stable = 0
        prev = val
        if stable >= policy.stable_rounds:
            return val, history
        T *= 2
    raise StabilizationError("majorant did not stabilize", partial=prev, history=history)


def godement_ratio(order: QuaternionOrder, k: int, z, w,
                   policy: TruncationPolicy | None = None) -> float:
    """(k - 1) Im(w)^(k/2) * ceil(h_k)(z, w), the quantity bounded by alpha(K)."""
    _check_weight(k)
    w = UpperHalfPoint.from_complex(w)
    logmaj, _ = kernel_majorant(order, 1, k, z, w, policy)
    return float(math.exp(math.log(k - 1) + k / 2 * math.log(float(w.y)) + logmaj))


# --- convexity -------------------------------------------------------------------


@dataclass
class ConvexityReport:
    k: int
    grid: list[tuple[float, float]]
    majorant_bound: list[float]   # ((k-1)/2) (stab + max|h|^(k-4) sum|h|^4) per point
    diagonal: list[float]         # ((k-1)/2) y^k h_k(z, z) per point
    stabilizer_orders: list[int]
    sup_majorant: float = 0.0
    sup_diagonal: float = 0.0

    @property
    def ratio_majorant(self) -> float:
        return self.sup_majorant / self.k

    @property
    def ratio_diagonal(self) -> float:
        return self.sup_diagonal / self.k


def _fourth_power_sum(order, z, policy) -> tuple[float, float, int]:
    """(sum over non-stabilizers of |h|^4, max non-stabilizer |h|, stabilizer count) at n = 1."""
    terms = _Terms(order, 1, 53)
    zc = complex(z)
    y = float(z.y)
    T = _initial_T(1, z, z, policy)
    prev = None
    for _ in range(policy.max_rounds):
        sl = enumerate_norm(order, 1, T)
        h = y * _float_abs_g(terms.float_matrices(sl), zc, zc)
        fixed = np.abs(h - 1.0) < 1e-9
        rest = h[~fixed]
        s4 = float(np.sum(rest ** 4))
        if prev is not None and abs(s4 - prev) < policy.tol * (1 + s4):
            return s4, float(rest.max()), int(fixed.sum())
        prev = s4
        T *= 2
    raise StabilizationError("fourth-power majorant did not stabilize", partial=prev)


def convexity_bound(order: QuaternionOrder, k: int, z_grid: Sequence,
                    policy: TruncationPolicy | None = None,
                    majorant_policy: TruncationPolicy | None = None) -> ConvexityReport:
    """Grid sup of the convexity majorant and, independently, of ((k-1)/2) y^k h_k(z, z)."""
    _check_weight(k, minimum=8)
    policy = policy or TruncationPolicy()
    majorant_policy = majorant_policy or TruncationPolicy(tol=2e-2, stable_rounds=1, max_rounds=12)
    pts = [UpperHalfPoint.from_complex(z) for z in z_grid]
    rep = ConvexityReport(k, [p.as_pair() for p in pts], [], [], [])
    for p in pts:
        s4, hmax, nstab = _fourth_power_sum(order, p, majorant_policy)
        rep.majorant_bound.append((k - 1) / 2 * (nstab + hmax ** (k - 4) * s4))
        ev = kernel_diag(order, 1, k, p, policy)
        rep.diagonal.append(float(mpmath.re(ev.value)) * (k - 1) / 2)
        rep.stabilizer_orders.append(nstab)
    rep.sup_majorant = max(rep.majorant_bound)
    rep.sup_diagonal = max(rep.diagonal)
    return rep


def sample_grid(x_range=(-0.5, 0.5), y_range=(0.8, 1.6), nx=5, ny=5) -> list[tuple[float, float]]:
    xs = np.linspace(x_range[0], x_range[1], nx)
    ys = np.linspace(y_range[0], y_range[1], ny)
    return [(float(x), float(y)) for y in ys for x in xs]


# --- envelope fit -------------------------------------------------------------


def fit_scaled_bound(samples: Sequence[tuple[int, int, float]], C: float, beta: float,
                     k0: int = 4, eps: float = 0.1) -> tuple[float, float]:
    """Fit C1, C2 >= 0 so that v <= C1 n^(1-beta/4+eps) + C2 n^(1+eps)(1+C n^(-2beta))^(-(k-k0)/2).

    ``samples`` are (n, k, |y^k h^n_k(z, z)|).  Nonnegative least squares on the
    log-scale slack, then inflated so that every sample is covered.
    """
    from scipy.optimize import nnls

    rows, rhs = [], []
    for n, k, v in samples:
        f1 = n ** (1 - beta / 4 + eps)
        f2 = n ** (1 + eps) * (1 + C * n ** (-2 * beta)) ** (-(k - k0) / 2)
        rows.append([f1 / v, f2 / v])
        rhs.append(1.0)
    coef, _ = nnls(np.array(rows), np.array(rhs))
    c1, c2 = (float(x) for x in coef)
    worst = max(v / (c1 * n ** (1 - beta / 4 + eps)
                     + c2 * n ** (1 + eps) * (1 + C * n ** (-2 * beta)) ** (-(k - k0) / 2))
                for n, k, v in samples) if (c1 or c2) else float("inf")
    if worst > 1:
        c1, c2 = c1 * worst, c2 * worst
    return c1, c2
