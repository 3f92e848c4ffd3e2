"""Orders in (a, b / Q), norm slices R(n) and their left unit cosets.

Enumeration works in lattice coordinates c (integer vectors with
element = sum c_i e_i).  Three coordinates are walked Fincke-Pohst style
inside the majorant ellipsoid Q+(c) <= T^2; the fourth is solved exactly
from the norm equation N(c) = n.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import ClosureError, ParameterError, RankError, ResourceError, StabilizationError
from .quat_core import (
    AlgebraParams,
    INFINITY,
    RationalQuaternion,
    multiply,
    conjugate,
    ramified_primes,
    reduced_norm,
    reduced_trace,
)

log = logging.getLogger(__name__)

DEFAULT_MEMORY_BUDGET = 40_000_000  # lattice points walked per enumeration


# --- small exact linear algebra --------------------------------------------


def _det(m: Sequence[Sequence[Fraction]]) -> Fraction:
    """Determinant by fraction-exact Gaussian elimination."""
    a = [list(map(Fraction, row)) for row in m]
    size = len(a)
    det = Fraction(1)
    for col in range(size):
        piv = next((r for r in range(col, size) if a[r][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            det = -det
        det *= a[col][col]
        for r in range(col + 1, size):
            f = a[r][col] / a[col][col]
            if f:
                for c in range(col, size):
                    a[r][c] -= f * a[col][c]
    return det


def _inverse(m: Sequence[Sequence[Fraction]]) -> list[list[Fraction]]:
    size = len(m)
    a = [list(map(Fraction, row)) + [Fraction(int(i == j)) for j in range(size)]
         for i, row in enumerate(m)]
    for col in range(size):
        piv = next(r for r in range(col, size) if a[r][col] != 0)
        a[col], a[piv] = a[piv], a[col]
        p = a[col][col]
        a[col] = [x / p for x in a[col]]
        for r in range(size):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [row[size:] for row in a]


def hermite_normal_form(rows: Sequence[Sequence[int]]) -> tuple[tuple[int, ...], ...]:
    """Row-style HNF of a full-rank square integer matrix.

    Upper triangular, positive pivots, entries above each pivot reduced
    into [0, pivot).  Two matrices span the same lattice iff their HNFs agree.
    """
    a = [list(map(int, r)) for r in rows]
    size = len(a)
    ncols = len(a[0])
    r = 0
    for col in range(ncols):
        # Euclid on column `col` among rows r..end
        while True:
            nz = [i for i in range(r, size) if a[i][col] != 0]
            if not nz:
                break
            i_min = min(nz, key=lambda i: abs(a[i][col]))
            a[r], a[i_min] = a[i_min], a[r]
            done = True
            for i in range(r + 1, size):
                if a[i][col]:
                    f = a[i][col] // a[r][col]
                    a[i] = [x - f * y for x, y in zip(a[i], a[r])]
                    if a[i][col]:
                        done = False
            if done:
                break
        if r < size and a[r][col] != 0:
            if a[r][col] < 0:
                a[r] = [-x for x in a[r]]
            p = a[r][col]
            for i in range(r):
                f = a[i][col] // p
                if f:
                    a[i] = [x - f * y for x, y in zip(a[i], a[r])]
            r += 1
        if r == size:
            break
    return tuple(tuple(row) for row in a)


# --- orders -----------------------------------------------------------------


@dataclass(frozen=True)
class QuaternionOrder:
    algebra: AlgebraParams
    basis: tuple[RationalQuaternion, ...]
    bad_modulus_q: int
    closure_certificate: tuple  # S[i][j] = lattice coords of e_i e_j

    @cached_property
    def basis_matrix(self) -> tuple[tuple[Fraction, ...], ...]:
        return tuple(e.coords for e in self.basis)

    @cached_property
    def _inverse_basis(self):
        return _inverse(self.basis_matrix)

    def lattice_coords(self, q: RationalQuaternion) -> tuple[Fraction, ...]:
        """Coordinates of q in the order basis (rational in general)."""
        inv = self._inverse_basis
        x = q.coords
        return tuple(sum(x[i] * inv[i][j] for i in range(4)) for j in range(4))

    def contains(self, q: RationalQuaternion) -> bool:
        return all(c.denominator == 1 for c in self.lattice_coords(q))

    def element(self, c: Sequence[int]) -> RationalQuaternion:
        coords = [sum(Fraction(c[i]) * self.basis[i].coords[j] for i in range(4))
                  for j in range(4)]
        return RationalQuaternion(self.algebra, *coords)

    @cached_property
    def structure_tensor(self) -> np.ndarray:
        return np.array(self.closure_certificate, dtype=np.int64)

    @cached_property
    def majorant(self) -> "MajorantForm":
        return majorant_form(self)

    @cached_property
    def integral_basis(self) -> np.ndarray:
        """Basis coordinates times their common denominator, as int64."""
        den = math.lcm(*(x.denominator for row in self.basis_matrix for x in row))
        return np.array([[int(x * den) for x in row] for row in self.basis_matrix], dtype=np.int64)

    @cached_property
    def majorant_int(self) -> np.ndarray:
        return _integer_scaled(self.majorant.gram)[0]

    @cached_property
    def majorant_scale(self) -> int:
        return _integer_scaled(self.majorant.gram)[1]

    @cached_property
    def norm_gram(self) -> tuple[tuple[Fraction, ...], ...]:
        a, b = self.algebra.a, self.algebra.b
        return _gram(self.basis_matrix, (1, -a, -b, a * b))


def verify_order(algebra: AlgebraParams, basis: Sequence, bad_modulus_q: int | None = None) -> QuaternionOrder:
    """Certify that ``basis`` spans an order; raise with a witness otherwise."""
    basis = tuple(
        e if isinstance(e, RationalQuaternion) else RationalQuaternion(algebra, *e)
        for e in basis
    )
    if len(basis) != 4:
        raise RankError(f"expected 4 basis elements, got {len(basis)}")
    for e in basis:
        if e.algebra != algebra:
            raise ParameterError("basis element over a different algebra")
    mat = [e.coords for e in basis]
    if _det(mat) == 0:
        raise RankError("basis is not of rank 4")
    inv = _inverse(mat)

    def coords(q):
        return [sum(q.coords[i] * inv[i][j] for i in range(4)) for j in range(4)]

    one = coords(algebra.one())
    if any(c.denominator != 1 for c in one):
        raise ClosureError("1 is not in the lattice", pair=None, product=algebra.one())
    table = []
    for i in range(4):
        row = []
        for j in range(4):
            prod = multiply(basis[i], basis[j])
            c = coords(prod)
            if any(x.denominator != 1 for x in c):
                raise ClosureError(
                    f"e{i}*e{j} = {prod} not in lattice", pair=(i, j), product=prod
                )
            row.append(tuple(int(x) for x in c))
        table.append(tuple(row))
    for e in basis:
        if reduced_trace(e).denominator != 1 or reduced_norm(e).denominator != 1:
            raise ClosureError(f"{e} has non-integral trace or norm", product=e)
    order = QuaternionOrder(algebra, basis, 1, tuple(table))
    if bad_modulus_q is None:
        bad_modulus_q = reduced_discriminant(order)
    if bad_modulus_q < 1:
        raise ParameterError("bad modulus q must be positive")
    return QuaternionOrder(algebra, basis, int(bad_modulus_q), tuple(table))


def reduced_discriminant(order: QuaternionOrder) -> int:
    """sqrt|det(T(e_i conj(e_j)))|."""
    m = [[reduced_trace(multiply(ei, conjugate(ej))) for ej in order.basis]
         for ei in order.basis]
    d = abs(_det(m))
    assert d.denominator == 1
    r = math.isqrt(int(d))
    if r * r != d:
        raise ParameterError(f"trace-pairing determinant {d} is not a square")
    return r


def is_maximal_candidate(order: QuaternionOrder) -> bool:
    disc = math.prod(p for p in ramified_primes(order.algebra) if p is not INFINITY)
    return reduced_discriminant(order) == disc


def standard_order(algebra: AlgebraParams) -> QuaternionOrder:
    return verify_order(algebra, [algebra.one(), algebra.omega(), algebra.Omega(),
                                  algebra.omega_Omega()])


def disc6_order(bad_modulus_q: int | None = None) -> QuaternionOrder:
    """The order Z<1, w, W, (1+w+W+wW)/2> in (3, -1 / Q), reduced discriminant 6."""
    alg = AlgebraParams(3, -1)
    half = Fraction(1, 2)
    return verify_order(
        alg,
        [alg.one(), alg.omega(), alg.Omega(), alg.element(half, half, half, half)],
        bad_modulus_q,
    )


# --- quadratic forms in lattice coordinates ---------------------------------


def _gram(basis_matrix, diag) -> tuple[tuple[Fraction, ...], ...]:
    return tuple(
        tuple(sum(Fraction(diag[k]) * bi[k] * bj[k] for k in range(4)) for bj in basis_matrix)
        for bi in basis_matrix
    )


@dataclass(frozen=True)
class MajorantForm:
    """Q+(c) = ||phi(c)||^2, the squared Frobenius norm of the real embedding."""

    gram: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        for k in range(1, 5):
            if _det([row[:k] for row in self.gram[:k]]) <= 0:
                raise ParameterError("majorant form is not positive definite")

    def __call__(self, c: Sequence) -> Fraction:
        g = self.gram
        return sum(g[i][j] * c[i] * c[j] for i in range(4) for j in range(4))


def majorant_form(order: QuaternionOrder) -> MajorantForm:
    a, b = order.algebra.a, order.algebra.b
    # ||phi||^2 = 2(x0^2 + a x1^2) + (1 + b^2)(x2^2 + a x3^2); cross terms cancel.
    return MajorantForm(_gram(order.basis_matrix, (2, 2 * a, 1 + b * b, a * (1 + b * b))))


def _integer_scaled(gram) -> tuple[np.ndarray, int]:
    scale = 1
    for row in gram:
        for x in row:
            scale = scale * x.denominator // math.gcd(scale, x.denominator)
    return np.array([[int(x * scale) for x in row] for row in gram], dtype=np.int64), scale


# --- enumeration -------------------------------------------------------------


def _isqrt_vec(v: np.ndarray) -> np.ndarray:
    r = np.floor(np.sqrt(v.astype(np.float64))).astype(np.int64)
    r = np.where(r * r > v, r - 1, r)
    r = np.where(r * r > v, r - 1, r)
    r = np.where((r + 1) * (r + 1) <= v, r + 1, r)
    r = np.where((r + 1) * (r + 1) <= v, r + 1, r)
    return r


def _fincke_pohst_params(g: np.ndarray):
    """q[i][i], q[i][j] of Q(c) = sum_i q_ii (c_i + sum_{j>i} q_ij c_j)^2."""
    r = np.linalg.cholesky(g).T  # upper triangular, g = r^T r
    q = np.zeros_like(r)
    for i in range(len(g)):
        q[i, i] = r[i, i] ** 2
        for j in range(i + 1, len(g)):
            q[i, j] = r[i, j] / r[i, i]
    return q


def _bound_squared(T) -> Fraction:
    t = Fraction(T)
    if t <= 0:
        raise ParameterError("majorant radius T must be positive")
    return t * t


def enumerate_lattice_norms(order: QuaternionOrder, norms: Iterable[int], T,
                            memory_budget: int = DEFAULT_MEMORY_BUDGET) -> dict[int, np.ndarray]:
    """All c in Z^4 with N(c) in ``norms`` and Q+(c) <= T^2.

    Returns norm -> (m, 4) int64 array of lattice coordinates, unsorted.
    """
    norms = sorted(set(int(n) for n in norms))
    if not norms or norms[0] < 1:
        raise ParameterError("norms must be positive integers")
    t2 = _bound_squared(T)
    mq, sq = _integer_scaled(order.majorant.gram)
    mn, sn = _integer_scaled(order.norm_gram)
    # solve for the coordinate with the largest |N(e_i)| (nonzero in a division algebra)
    solve = max(range(4), key=lambda i: (mn[i, i] != 0, -abs(int(mq[i, i]))))
    if mn[solve, solve] == 0:
        raise ParameterError("norm form has no anisotropic basis direction")
    perm = [solve] + [i for i in range(4) if i != solve]
    mq = mq[np.ix_(perm, perm)]
    mn = mn[np.ix_(perm, perm)]
    g = mq.astype(np.float64) / sq
    q = _fincke_pohst_params(g)
    tf = float(t2) * (1 + 1e-12) + 1e-12
    limit = int(math.floor(t2 * sq))

    # projected 3-dim volume estimate for the memory check
    sub = g[1:, 1:] - np.outer(g[1:, 0], g[0, 1:]) / g[0, 0]
    est = 4.0 / 3.0 * math.pi * tf ** 1.5 / math.sqrt(np.linalg.det(sub))
    if est > memory_budget:
        raise ResourceError(
            f"T={float(T):.4g} would walk ~{est:.3g} lattice points (budget {memory_budget})",
            estimate=est,
        )

    A = int(mn[0, 0])
    targets = np.array([n * sn for n in norms], dtype=np.int64)
    found: dict[int, list[np.ndarray]] = {n: [] for n in norms}

    r3 = math.sqrt(tf / q[3, 3])
    for c3 in range(-int(math.floor(r3)) - 1, int(math.floor(r3)) + 2):
        rem3 = tf - q[3, 3] * c3 * c3
        if rem3 < 0:
            continue
        ctr2 = -q[2, 3] * c3
        w2 = math.sqrt(rem3 / q[2, 2])
        c2 = np.arange(math.floor(ctr2 - w2) - 1, math.ceil(ctr2 + w2) + 2, dtype=np.int64)
        rem2 = rem3 - q[2, 2] * (c2 + q[2, 3] * c3) ** 2
        c2 = c2[rem2 >= 0]
        rem2 = rem2[rem2 >= 0]
        if not len(c2):
            continue
        ctr1 = -(q[1, 2] * c2 + q[1, 3] * c3)
        w1 = np.sqrt(rem2 / q[1, 1])
        lo = np.floor(ctr1 - w1).astype(np.int64) - 1
        hi = np.ceil(ctr1 + w1).astype(np.int64) + 1
        cnt = hi - lo + 1
        total = int(cnt.sum())
        c2r = np.repeat(c2, cnt)
        offs = np.arange(total) - np.repeat(np.cumsum(cnt) - cnt, cnt)
        c1r = np.repeat(lo, cnt) + offs
        c3r = np.full(total, c3, dtype=np.int64)
        # N * sn = A c0^2 + 2 B c0 + C0
        B = mn[0, 1] * c1r + mn[0, 2] * c2r + mn[0, 3] * c3r
        C0 = (mn[1, 1] * c1r * c1r + mn[2, 2] * c2r * c2r + mn[3, 3] * c3r * c3r
              + 2 * (mn[1, 2] * c1r * c2r + mn[1, 3] * c1r * c3r + mn[2, 3] * c2r * c3r))
        for n, tgt in zip(norms, targets):
            disc = B * B - A * (C0 - tgt)
            ok = disc >= 0
            if not ok.any():
                continue
            bb, dd = B[ok], disc[ok]
            s = _isqrt_vec(dd)
            sq_ok = s * s == dd
            if not sq_ok.any():
                continue
            bb, s = bb[sq_ok], s[sq_ok]
            idx = np.flatnonzero(ok)[sq_ok]
            for sign in (1, -1):
                num = -bb + sign * s
                div = num % A == 0
                if sign == -1:
                    div &= s != 0  # avoid the double root twice
                if not div.any():
                    continue
                c0 = num[div] // A
                pts = np.stack([c0, c1r[idx[div]], c2r[idx[div]], c3r[idx[div]]], axis=1)
                qv = np.einsum("ij,jk,ik->i", pts, mq, pts)
                pts = pts[qv <= limit]
                if len(pts):
                    found[n].append(pts)
    inv_perm = np.argsort(perm)
    out = {}
    for n in norms:
        arr = np.concatenate(found[n]) if found[n] else np.zeros((0, 4), dtype=np.int64)
        out[n] = np.ascontiguousarray(arr[:, inv_perm])
    return out


def _canonical_sort(order: QuaternionOrder, coords: np.ndarray) -> np.ndarray:
    """Sort lattice points lexicographically on their exact algebra coordinates."""
    if not len(coords):
        return coords
    scaled = coords @ order.integral_basis  # common positive denominator preserves order
    idx = np.lexsort(scaled.T[::-1])
    return coords[idx]


@dataclass
class NormSlice:
    order: QuaternionOrder
    n: int
    majorant_radius_T: Fraction
    lattice: np.ndarray = field(repr=False)  # canonical order, one row per element
    cosets: list[list[int]] | None = None  # indices into elements, per coset
    representatives: list[int] | None = None  # index of each coset's representative
    stabilized: bool = False
    doubling_history: list[tuple[float, int]] = field(default_factory=list)

    def __len__(self):
        return len(self.lattice)

    @cached_property
    def elements(self) -> list[RationalQuaternion]:
        return [self.order.element(c) for c in self.lattice.tolist()]

    @cached_property
    def majorant_values(self) -> np.ndarray:
        """Q+ of every element, scaled by ``order.majorant_scale`` (exact integers)."""
        return np.einsum("ij,jk,ik->i", self.lattice, self.order.majorant_int, self.lattice)

    @property
    def coset_count(self) -> int:
        return len(self.cosets) if self.cosets is not None else 0

    def representative_elements(self) -> list[RationalQuaternion]:
        return [self.elements[i] for i in (self.representatives or [])]

    def status(self) -> str:
        return "stabilized (heuristic)" if self.stabilized else "not stabilized"

    # --- JSON -----------------------------------------------------------------
    def to_json(self) -> str:
        doc = {
            "algebra": {"a": self.order.algebra.a, "b": self.order.algebra.b},
            "basis": [[_frac_pair(x) for x in e.coords] for e in self.order.basis],
            "bad_modulus_q": self.order.bad_modulus_q,
            "n": self.n,
            "T": _frac_pair(Fraction(self.majorant_radius_T)),
            "elements": [[_frac_pair(x) for x in e.coords] for e in self.elements],
            "cosets": self.cosets,
            "representatives": self.representatives,
            "stabilized": self.stabilized,
            "doubling_history": [[_float_repr(t), c] for t, c in self.doubling_history],
        }
        return json.dumps(doc, sort_keys=True, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "NormSlice":
        doc = json.loads(text)
        alg = AlgebraParams(doc["algebra"]["a"], doc["algebra"]["b"])
        basis = [[Fraction(p, q) for p, q in e] for e in doc["basis"]]
        order = verify_order(alg, basis, doc["bad_modulus_q"])
        elements = [RationalQuaternion(alg, *(Fraction(p, q) for p, q in e))
                    for e in doc["elements"]]
        lattice = np.array(
            [[int(c) for c in order.lattice_coords(e)] for e in elements], dtype=np.int64
        ).reshape(-1, 4)
        sl = cls(
            order=order,
            n=doc["n"],
            majorant_radius_T=Fraction(*doc["T"]),
            lattice=lattice,
            cosets=doc["cosets"],
            representatives=doc["representatives"],
            stabilized=doc["stabilized"],
            doubling_history=[(float(t), c) for t, c in doc["doubling_history"]],
        )
        sl.elements = elements
        return sl


def _frac_pair(x: Fraction) -> list[int]:
    return [x.numerator, x.denominator]


def _float_repr(t) -> float:
    return float(t)


def enumerate_norm(order: QuaternionOrder, n: int, T,
                   memory_budget: int = DEFAULT_MEMORY_BUDGET) -> NormSlice:
    """Elements of R(n) with majorant at most T^2, canonically sorted."""
    if n < 1:
        raise ParameterError("n must be >= 1")
    coords = enumerate_lattice_norms(order, [n], T, memory_budget)[n]
    return NormSlice(order, n, Fraction(T), _canonical_sort(order, coords))


def float_embedding(order: QuaternionOrder, lattice: np.ndarray) -> np.ndarray:
    """Rows (a, b, c, d) of the real matrices of lattice points, in float64."""
    den = math.lcm(*(x.denominator for row in order.basis_matrix for x in row))
    x = (np.asarray(lattice, dtype=np.int64) @ order.integral_basis).astype(np.float64) / den
    r = math.sqrt(order.algebra.a)
    b = order.algebra.b
    return np.stack([x[:, 0] - x[:, 1] * r, x[:, 2] - x[:, 3] * r,
                     b * (x[:, 2] + x[:, 3] * r), x[:, 0] + x[:, 1] * r], axis=1)


def right_mult_matrix(order: QuaternionOrder, c: Sequence[int]) -> np.ndarray:
    """Integer matrix whose i-th row is the lattice coords of e_i * gamma."""
    return np.einsum("j,ijk->ik", np.asarray(c, dtype=np.int64), order.structure_tensor)


def coset_key(order: QuaternionOrder, c: Sequence[int]) -> tuple:
    """HNF of the left ideal R*gamma; equal keys <=> same left R(1)-orbit (same norm)."""
    return hermite_normal_form(right_mult_matrix(order, c).tolist())


def is_left_unit_equivalent(g1: RationalQuaternion, g2: RationalQuaternion,
                            order: QuaternionOrder) -> bool:
    """True iff g1 = u g2 with u in R(1)."""
    n1, n2 = reduced_norm(g1), reduced_norm(g2)
    if n1 != n2:
        raise ParameterError(f"norm mismatch {n1} != {n2}")
    if n1 == 0:
        raise ParameterError("zero-norm elements")
    u = multiply(g1, conjugate(g2)) / n1
    return order.contains(u) and reduced_norm(u) == 1


@dataclass(frozen=True)
class CosetPolicy:
    stable_rounds: int = 2
    max_rounds: int = 8
    initial_T: float | None = None
    memory_budget: int = DEFAULT_MEMORY_BUDGET


def _partition(order: QuaternionOrder, sl: NormSlice) -> None:
    groups: dict[tuple, list[int]] = {}
    for i, c in enumerate(sl.lattice.tolist()):
        groups.setdefault(coset_key(order, c), []).append(i)
    qv = sl.majorant_values.tolist()
    cosets = []
    reps = []
    for members in groups.values():
        # members are already in canonical order, so min() breaks ties canonically
        rep = min(members, key=lambda i: (qv[i], i))
        cosets.append(members)
        reps.append(rep)
    order_idx = sorted(range(len(cosets)), key=lambda j: reps[j])
    sl.cosets = [cosets[j] for j in order_idx]
    sl.representatives = [reps[j] for j in order_idx]


def partition_cosets(sl: NormSlice) -> NormSlice:
    _partition(sl.order, sl)
    return sl


def unit_cosets(order: QuaternionOrder, n: int, policy: CosetPolicy | None = None) -> NormSlice:
    """R(1)\\R(n) by T-doubling until the coset count is stable."""
    policy = policy or CosetPolicy()
    if n < 1:
        raise ParameterError("n must be >= 1")
    T = Fraction(policy.initial_T) if policy.initial_T else _initial_T(n)
    history: list[tuple[float, int]] = []
    sl = None
    for _ in range(policy.max_rounds):
        sl = enumerate_norm(order, n, T, policy.memory_budget)
        _partition(order, sl)
        history.append((float(T), sl.coset_count))
        sl.doubling_history = list(history)
        tail = [c for _, c in history[-(policy.stable_rounds + 1):]]
        if len(tail) == policy.stable_rounds + 1 and len(set(tail)) == 1 and tail[0] > 0:
            sl.stabilized = True
            log.debug("R(1)\\R(%d): %d cosets, history %s", n, sl.coset_count, history)
            return sl
        T *= 2
    raise StabilizationError(
        f"coset count for n={n} did not stabilize in {policy.max_rounds} rounds",
        partial=sl, history=history,
    )


def _initial_T(n: int) -> Fraction:
    # ||gamma||^2 >= 2 det for any real 2x2 matrix; start just above that floor.
    return Fraction(math.isqrt(4 * n) + 1)
