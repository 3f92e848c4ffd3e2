"""Near-identity counting: stabilizer forms, K_z, Iwasawa factors and counts.

K_z is the stabilizer of z in SL(2, R).  With the binary quadratic form
[alpha, beta, gamma_c] vanishing at z,

    alpha = 1/(2y),  beta = -x/y,  gamma_c = (x^2 + y^2)/(2y),

K_z = {[[(t - beta u)/2, -gamma_c u], [alpha u, (t + beta u)/2]] : t^2 + u^2 = 4}.
Counts use the Euclidean displacement |gamma z - z| of the Moebius action.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import mpmath
import numpy as np

from .errors import ParameterError
from .order_lattice import QuaternionOrder, enumerate_lattice_norms, float_embedding
from .quat_core import RationalQuaternion, embed_real

log = logging.getLogger(__name__)

__all__ = [
    "StabilizerForm",
    "CountRecord",
    "CountingTable",
    "stabilizer_form",
    "k_z_matrix",
    "iwasawa_at_i",
    "distance_to_Kz",
    "coordinate_constraints",
    "branch_selector",
    "count_near",
    "counting_experiment",
    "counting_radius_squared",
    "representation_count",
]

_EXACT = (int, Fraction)


def _mpf(v):
    if isinstance(v, Fraction):
        return mpmath.mpf(v.numerator) / v.denominator
    return mpmath.mpf(v)


def _split_point(z):
    if isinstance(z, tuple):
        x, y = z
    elif hasattr(z, "x") and hasattr(z, "y"):
        x, y = z.x, z.y
    else:
        z = complex(z)
        x, y = z.real, z.imag
    if y <= 0:
        raise ParameterError("z must lie in the upper half-plane")
    return x, y


@dataclass(frozen=True)
class StabilizerForm:
    alpha: object
    beta: object
    gamma_c: object
    x: object
    y: object
    exact: bool

    @property
    def discriminant(self):
        return self.beta ** 2 - 4 * self.alpha * self.gamma_c

    def as_floats(self) -> tuple[float, float, float]:
        return float(self.alpha), float(self.beta), float(self.gamma_c)


def stabilizer_form(z, precision: int = 128) -> StabilizerForm:
    """[alpha, beta, gamma_c] with alpha z^2 + beta z + gamma_c = 0; exact for rational z."""
    x, y = _split_point(z)
    if isinstance(x, _EXACT) and isinstance(y, _EXACT):
        x, y = Fraction(x), Fraction(y)
        return StabilizerForm(1 / (2 * y), -x / y, (x * x + y * y) / (2 * y), x, y, True)
    with mpmath.workprec(precision):
        x, y = _mpf(x), _mpf(y)
        return StabilizerForm(1 / (2 * y), -x / y, (x * x + y * y) / (2 * y), x, y, False)


def k_z_matrix(z, t, u, tol: float = 1e-12, precision: int = 128):
    """The element of K_z with parameters (t, u), t^2 + u^2 = 4, as a 2x2 tuple."""
    form = z if isinstance(z, StabilizerForm) else stabilizer_form(z, precision)
    if abs(t * t + u * u - 4) > tol:
        raise ParameterError(f"k_z needs t^2 + u^2 = 4, got {t * t + u * u}")
    al, be, ga = form.alpha, form.beta, form.gamma_c
    if not form.exact or not (isinstance(t, _EXACT) and isinstance(u, _EXACT)):
        with mpmath.workprec(precision):
            al, be, ga, t, u = (_mpf(v) for v in (al, be, ga, t, u))
            return ((t - be * u) / 2, -ga * u), (al * u, (t + be * u) / 2)
    return ((t - be * u) / 2, -ga * u), (al * u, (t + be * u) / 2)


def _mat(g):
    if isinstance(g, RationalQuaternion):
        return embed_real(g).entries
    if len(g) == 2:
        return (*g[0], *g[1])
    return tuple(g)


def iwasawa_at_i(g, precision: int = 128, tol: float | None = None):
    """g = n(alpha') a(beta') k with n = [[1, alpha'], [0, 1]], a = diag(beta', 1/beta').

    Returns (alpha', beta', k) with k a rotation matrix, so that g i = alpha' + beta'^2 i.
    """
    with mpmath.workprec(precision + 16):
        a, b, c, d = (_mpf(v) for v in _mat(g))
        det = a * d - b * c
        tol = tol if tol is not None else mpmath.mpf(2) ** (-precision // 2)
        if abs(det - 1) > tol:
            raise ParameterError(f"iwasawa_at_i needs det g = 1, got {det}")
        den = c * c + d * d
        alpha_p = (a * c + b * d) / den  # Re(g i)
        beta_p = 1 / mpmath.sqrt(den)  # Im(g i) = 1 / (c^2 + d^2)
        # k = a^-1 n^-1 g
        n_inv_g = (a - alpha_p * c, b - alpha_p * d, c, d)
        k = ((n_inv_g[0] / beta_p, n_inv_g[1] / beta_p),
             (n_inv_g[2] * beta_p, n_inv_g[3] * beta_p))
    with mpmath.workprec(precision):
        return +alpha_p, +beta_p, tuple(tuple(+v for v in row) for row in k)


# --- distance to K_z ---------------------------------------------------------


def _kz_objective_coeffs(G: np.ndarray, form: StabilizerForm):
    """||G - K(2cos th, 2sin th)||^2 = c0 - 4p cos - 4q sin + 2cos^2 + 4 jj sin^2."""
    al, be, ga = form.as_floats()
    J = np.array([-be / 2, -ga, al, be / 2])
    c0 = np.einsum("ij,ij->i", G, G)
    p = (G[:, 0] + G[:, 3]) / 2
    q = G @ J
    jj = float(J @ J)
    return c0, p, q, jj


def _kz_residual(G: np.ndarray, form: StabilizerForm, th: np.ndarray) -> np.ndarray:
    al, be, ga = form.as_floats()
    t, u = 2 * np.cos(th), 2 * np.sin(th)
    K = np.stack([(t - be * u) / 2, -ga * u, al * u, (t + be * u) / 2], axis=1)
    return np.sqrt(np.einsum("ij,ij->i", G - K, G - K))


def _minimize_theta(G: np.ndarray, form: StabilizerForm, samples: int = 64,
                    golden_steps: int = 40) -> np.ndarray:
    """Optimal angle per row of G: coarse samples, golden section, then Newton polish."""
    c0, p, q, jj = _kz_objective_coeffs(G, form)

    def f(th):
        return -4 * p * np.cos(th) - 4 * q * np.sin(th) + 2 * np.cos(th) ** 2 + 4 * jj * np.sin(th) ** 2

    grid = np.linspace(-math.pi, math.pi, samples, endpoint=False)
    vals = np.stack([f(np.full_like(p, g)) for g in grid], axis=1)
    best = grid[np.argmin(vals, axis=1)]
    step = 2 * math.pi / samples
    lo, hi = best - step, best + step
    ratio = (math.sqrt(5) - 1) / 2
    for _ in range(golden_steps):
        m1 = hi - ratio * (hi - lo)
        m2 = lo + ratio * (hi - lo)
        left = f(m1) < f(m2)
        hi = np.where(left, m2, hi)
        lo = np.where(left, lo, m1)
    th = (lo + hi) / 2
    kappa = 8 * jj - 4
    for _ in range(3):
        d1 = 4 * p * np.sin(th) - 4 * q * np.cos(th) + kappa * np.sin(th) * np.cos(th)
        d2 = 4 * p * np.cos(th) + 4 * q * np.sin(th) + kappa * np.cos(2 * th)
        safe = d2 > 1e-12
        th = np.where(safe, th - np.where(safe, d1 / np.where(safe, d2, 1), 0), th)
    return th


def _normalized(G: np.ndarray, n) -> np.ndarray:
    return np.asarray(G, dtype=np.float64) / math.sqrt(n)


def _as_rows(gamma) -> np.ndarray:
    return np.array([[float(v) for v in _mat(gamma)]])


def distance_to_Kz(gamma, n: int, z, with_params: bool = False):
    """min over t^2+u^2=4 of ||gamma/sqrt(n) - k_z(t, u)|| (Frobenius norm)."""
    form = stabilizer_form(z)
    G = _normalized(_as_rows(gamma), n)
    th = _minimize_theta(G, form)
    dist = float(_kz_residual(G, form, th)[0])
    if with_params:
        return dist, 2 * math.cos(th[0]), 2 * math.sin(th[0])
    return dist


def _distance_batch(mats: np.ndarray, n: int, form: StabilizerForm) -> tuple[np.ndarray, np.ndarray]:
    G = _normalized(mats, n)
    th = _minimize_theta(G, form)
    return _kz_residual(G, form, th), th


def coordinate_constraints(gamma: RationalQuaternion, n: int, z) -> np.ndarray:
    """Residuals of the four coordinate relations at the optimal (t, u).

    The matrix convention here has upper-right entry x2 - x3 sqrt(a), so the
    x3 relation reads 2 x3 sqrt(a)/sqrt(n) = (gamma_c + alpha/b) u.
    """
    if not isinstance(gamma, RationalQuaternion):
        raise ParameterError("coordinate_constraints needs a quaternion (integer coordinates)")
    form = stabilizer_form(z)
    al, be, ga = form.as_floats()
    a, b = gamma.algebra.a, gamma.algebra.b
    _, t, u = distance_to_Kz(gamma, n, z, with_params=True)
    x0, x1, x2, x3 = (float(c) for c in gamma.coords)
    rn, ra = math.sqrt(n), math.sqrt(a)
    return np.array([
        abs(2 * x0 / rn - t),
        abs(2 * x1 * ra / rn - be * u),
        abs(2 * x2 / rn + (ga - al / b) * u),
        abs(2 * x3 * ra / rn - (ga + al / b) * u),
    ])


def branch_selector(z, b: int) -> tuple[str, float]:
    """Which of |gamma_c +- alpha/b| is bounded below by 1/sqrt|b| (chosen by the sign of b)."""
    al, _, ga = stabilizer_form(z).as_floats()
    if b > 0:
        name, val = "gamma+alpha/b", abs(ga + al / b)
    else:
        name, val = "gamma-alpha/b", abs(ga - al / b)
    if val < 1 / math.sqrt(abs(b)) * (1 - 1e-12):
        raise ParameterError(f"branch {name} = {val} below 1/sqrt|b|; inconsistent form")
    return name, val


# --- counting ----------------------------------------------------------------


def counting_radius_squared(order: QuaternionOrder, n: int, z, delta: float) -> Fraction:
    """Majorant bound T^2 covering every gamma in R(n) with |gamma z - z| <= delta.

    For g = gamma/sqrt(n) in SL(2,R), ||g||^2 <= ||p||^2 ||p^-1||^2 * 2cosh d(gz, z)
    where p i = z, ||p||^2 = ||p^-1||^2 = (1 + x^2 + y^2)/y, and
    cosh d = 1 + |gz - z|^2 / (2 y Im gz) <= 1 + delta^2 / (2y(y - delta)).
    The majorant exceeds the squared Frobenius norm by at most a factor
    1 + |b^2 - 1|/2.  Requires y > delta.
    """
    x, y = _split_point(z)
    x, y, delta = Fraction(x), Fraction(y), Fraction(delta)
    if y <= delta:
        raise ParameterError(f"counting radius needs y > delta (y={float(y)}, delta={float(delta)})")
    pnorm = (1 + x * x + y * y) / y
    cosh = 1 + delta * delta / (2 * y * (y - delta))
    b = order.algebra.b
    factor = 1 + Fraction(abs(b * b - 1), 2)
    # tiny relative slack absorbs the float -> Fraction conversion of z
    return n * pnorm * pnorm * 2 * cosh * factor * (1 + Fraction(1, 10 ** 9))


def _displacements(mats: np.ndarray, z: complex) -> np.ndarray:
    a, b, c, d = mats.T
    return np.abs((a * z + b) / (c * z + d) - z)


def _hyperbolic(mats: np.ndarray, z: complex) -> np.ndarray:
    a, b, c, d = mats.T
    gz = (a * z + b) / (c * z + d)
    u = np.abs(gz - z) ** 2 / (2 * z.imag * gz.imag)
    return np.arccosh(1 + u)


def _exact_displacement(mat_row: np.ndarray, lattice_row, order: QuaternionOrder, z, prec=128):
    g = embed_real(order.element(lattice_row), prec)
    with mpmath.workprec(prec):
        zz = mpmath.mpc(*map(_mpf, _split_point(z)))
        return float(abs(g.act(zz) - zz))


@dataclass
class CountRecord:
    n: int
    delta: float
    z: tuple[float, float]
    count: int
    envelope: float
    ratio: float
    max_dist_over_sqrt_delta: float = 0.0
    branch: str = ""
    max_hyperbolic: float = 0.0


def _envelope(n: int, delta: float, eps: float) -> float:
    return n ** eps * (n * delta ** 0.25 + 1)


def _count_from(order, n, z, delta, lattice, mats, eps, form, branch) -> CountRecord:
    zc = complex(*map(float, _split_point(z)))
    disp = _displacements(mats, zc) if len(mats) else np.zeros(0)
    # settle near-ties with the exact entries at higher precision
    close = np.flatnonzero(np.abs(disp - delta) < 1e-9)
    for i in close:
        disp[i] = _exact_displacement(mats[i], lattice[i], order, z)
    sel = disp <= delta
    count = int(sel.sum())
    dmax = hmax = 0.0
    if count:
        dist, _ = _distance_batch(mats[sel], n, form)
        dmax = float(dist.max() / math.sqrt(delta))
        hmax = float(_hyperbolic(mats[sel], zc).max())
    env = _envelope(n, delta, eps)
    return CountRecord(n, float(delta), (float(zc.real), float(zc.imag)), count, env, count / env,
                       dmax, branch, hmax)


def count_near(order: QuaternionOrder, n: int, z, delta: float, eps: float = 0.1,
               box: tuple | None = None) -> CountRecord:
    """#{gamma in R(n) : |gamma z - z| <= delta} with a provably sufficient enumeration radius."""
    if not 0 < delta < 1:
        raise ParameterError(f"delta must lie in (0, 1), got {delta}")
    if n < 1:
        raise ParameterError("n must be >= 1")
    _check_box(z, box)
    t2 = counting_radius_squared(order, n, z, delta)
    lattice = enumerate_lattice_norms(order, [n], _sqrt_upper(t2))[n]
    mats = float_embedding(order, lattice) if len(lattice) else np.zeros((0, 4))
    form = stabilizer_form(z)
    branch, _ = branch_selector(z, order.algebra.b)
    return _count_from(order, n, z, delta, lattice, mats, eps, form, branch)


def _sqrt_upper(t2: Fraction) -> Fraction:
    """A rational T with T^2 >= t2."""
    num = math.isqrt(t2.numerator * 10 ** 12 // t2.denominator) + 1
    return Fraction(num, 10 ** 6)


def _check_box(z, box):
    if box is None:
        return
    (x0, x1), (y0, y1) = box
    x, y = _split_point(z)
    if not (x0 <= x <= x1 and y0 <= y <= y1):
        raise ParameterError(f"z = ({float(x)}, {float(y)}) outside the sample box {box}")


@dataclass
class CountingTable:
    records: list[CountRecord]
    eps: float
    branch_log: dict = field(default_factory=dict)

    @property
    def sup_ratio(self) -> float:
        return max((r.ratio for r in self.records), default=0.0)

    @property
    def distance_constant(self) -> float:
        """Single C with distance_to_Kz <= C sqrt(delta) over every counted gamma."""
        return max((r.max_dist_over_sqrt_delta for r in self.records), default=0.0)

    def restricted(self, n_max: int) -> "CountingTable":
        return CountingTable([r for r in self.records if r.n <= n_max], self.eps, self.branch_log)

    def growth_exponents(self) -> dict[float, float]:
        """Least-squares slope of log(max_z count) against log n, per delta."""
        out = {}
        for delta in sorted({r.delta for r in self.records}):
            per_n: dict[int, int] = {}
            for r in self.records:
                if r.delta == delta:
                    per_n[r.n] = max(per_n.get(r.n, 0), r.count)
            ns = np.array([n for n, c in sorted(per_n.items()) if c > 0], dtype=float)
            cs = np.array([c for n, c in sorted(per_n.items()) if c > 0], dtype=float)
            if len(ns) >= 2 and np.ptp(ns) > 0:
                out[delta] = float(np.polyfit(np.log(ns), np.log(cs), 1)[0])
        return out

    def split_constants(self) -> tuple[float, float]:
        """Sup ratio on the two halves of the z-sample set (by sample order)."""
        zs = sorted({r.z for r in self.records})
        half = set(zs[: (len(zs) + 1) // 2])
        a = max((r.ratio for r in self.records if r.z in half), default=0.0)
        b = max((r.ratio for r in self.records if r.z not in half), default=0.0)
        return a, b

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "delta", "x", "y", "count", "envelope", "ratio",
                    "max_dist_over_sqrt_delta", "branch"])
        for r in self.records:
            w.writerow([r.n, repr(r.delta), f"{r.z[0]:.17g}", f"{r.z[1]:.17g}", r.count,
                        f"{r.envelope:.17e}", f"{r.ratio:.17e}",
                        f"{r.max_dist_over_sqrt_delta:.17e}", r.branch])
        return buf.getvalue()


def counting_experiment(order: QuaternionOrder, n_range: Iterable[int], deltas: Sequence[float],
                        z_samples: Sequence, eps: float = 0.1,
                        box: tuple | None = None) -> CountingTable:
    """Counts over the (n, delta, z) grid; one enumeration per sample point."""
    ns = sorted(set(int(n) for n in n_range))
    if not ns or ns[0] < 1:
        raise ParameterError("n_range must contain positive integers")
    for d in deltas:
        if not 0 < d < 1:
            raise ParameterError(f"delta must lie in (0, 1), got {d}")
    records = []
    branches = {}
    dmax = max(deltas)
    for z in z_samples:
        _check_box(z, box)
        form = stabilizer_form(z)
        branch, val = branch_selector(z, order.algebra.b)
        branches[tuple(map(float, _split_point(z)))] = (branch, val)
        log.debug("z=%s: branch %s = %.6g", z, branch, val)
        t2 = counting_radius_squared(order, ns[-1], z, dmax)
        found = enumerate_lattice_norms(order, ns, _sqrt_upper(t2))
        for n in ns:
            lattice = found[n]
            mats = float_embedding(order, lattice) if len(lattice) else np.zeros((0, 4))
            for delta in deltas:
                records.append(_count_from(order, n, z, delta, lattice, mats, eps, form, branch))
    records.sort(key=lambda r: (r.n, -r.delta, r.z))
    return CountingTable(records, eps, branches)


def representation_count(q: int, p: int, m: int) -> int:
    """#{(r, s) in Z^2 : q r^2 + p s^2 = m}; for p = 0 only s = 0 is counted."""
    if q < 1 or p < 0 or m < 0:
        raise ParameterError("representation_count needs q >= 1, p >= 0, m >= 0")
    total = 0
    rmax = math.isqrt(m // q)
    for r in range(-rmax, rmax + 1):
        rest = m - q * r * r
        if p == 0:
            total += rest == 0
            continue
        if rest % p:
            continue
        s2 = rest // p
        s = math.isqrt(s2)
        if s * s == s2:
            total += 1 if s == 0 else 2
    return total
