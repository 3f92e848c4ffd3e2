"""Acceptance suite: one test and one PASS/FAIL line per criterion.

Run directly (``python tests/test_acceptance.py``) or through pytest; the lines are
printed as they are produced and repeated in the terminal summary.
"""
import math
import random
import sys
import time
from fractions import Fraction
from pathlib import Path

import mpmath
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import ACCEPTANCE_LINES, GENERIC_Z  # noqa: E402
from supnorm import amplifier as amp  # noqa: E402
from supnorm import counting_box as cb  # noqa: E402
from supnorm import kernel_eval as ke  # noqa: E402
from supnorm import order_lattice as ol  # noqa: E402
from supnorm.quat_core import AlgebraParams, RationalQuaternion, embed_split, ramified_primes  # noqa: E402


def record(num: int, ok: bool, detail: str, seconds: float):
    line = f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}  [{seconds:.1f}s]"
    ACCEPTANCE_LINES[num] = line
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def order():
    return ol.disc6_order()


@pytest.fixture(scope="module")
def counting_tables(order):
    t0 = time.perf_counter()
    grid = ke.sample_grid(nx=3, ny=3)
    full = cb.counting_experiment(order, range(1, 101), [0.5, 0.1, 0.01], grid)
    return full, full.restricted(50), time.perf_counter() - t0


def test_c01_exponent_ledger():
    t0 = time.perf_counter()
    e4, e100 = amp.exponent_ledger(4), amp.exponent_ledger(100)
    d4, d100 = e4.display(4), e100.display(5)
    ok = d4 == ".4697" and d100 == ".46879" and e4.exponent == Fraction(1, 2) - Fraction(1, 33)
    dt = time.perf_counter() - t0
    record(1, ok and dt < 1, f"e(4)={d4} ({e4.exponent}), e(100)={d100}", dt)


def test_c02_embedding_determinant():
    t0 = time.perf_counter()
    alg = AlgebraParams(3, -1)
    rng = random.Random(2024)
    bad = 0
    for _ in range(1000):
        x = RationalQuaternion(alg, *(Fraction(rng.randint(-99, 99), rng.randint(1, 30))
                                      for _ in range(4)))
        d = embed_split(x).det()
        bad += not (d.v == 0 and d.u == x.norm())
    dt = time.perf_counter() - t0
    record(2, bad == 0 and dt < 1, f"{1000 - bad}/1000 exact det = N", dt)


def test_c03_order_suite():
    t0 = time.perf_counter()
    alg = AlgebraParams(3, -1)
    d6 = ol.reduced_discriminant(ol.disc6_order())
    d12 = ol.reduced_discriminant(ol.standard_order(alg))
    ram = math.prod(ramified_primes(alg))
    dt = time.perf_counter() - t0
    record(3, d6 == 6 == ram and d12 == 12 and dt < 1,
           f"disc={d6} (ramified product {ram}), standard basis disc={d12}", dt)


def test_c04_coset_multiplicativity(order):
    t0 = time.perf_counter()
    counts = {}
    for n in range(1, 101):
        sl = ol.unit_cosets(order, n)
        assert sl.stabilized
        counts[n] = sl.coset_count
    mult = counts[5] * counts[7] == counts[35]
    C = max(c / n ** 1.1 for n, c in counts.items())
    C_half = max(c / n ** 1.1 for n, c in counts.items() if n <= 50)
    dt = time.perf_counter() - t0
    record(4, mult and C < 2 * C_half and dt < 120,
           f"{counts[5]}*{counts[7]}={counts[35]}, max count/n^1.1 = {C:.3f} (n<=50: {C_half:.3f})",
           dt)


def _suite_ledgers(order):
    pts = [GENERIC_Z, (0, 1)] + ke.sample_grid(nx=3, ny=3)
    for n in (1, 2, 5):
        for z in pts:
            yield n, z, ke.kernel_diag(order, n, 20, z, keep_ledger=True).ledger


def test_c05_kernel_term_bounds(order):
    t0 = time.perf_counter()
    tally = {"n^-1/2": 0, 0.5: 0, 0.1: 0, 0.01: 0}
    worst = None
    ledgers = 0
    for n, z, led in _suite_ledgers(order):
        ledgers += 1
        for key, rows in led.bound_violations((0.5, 0.1, 0.01)).items():
            tally[key] += len(rows)
            if key == 0.5 and rows and worst is None:
                worst = (n, z, rows[0])
    detail = ", ".join(f"{k}: {v} violations" for k, v in tally.items())
    if worst:
        n, z, r = worst
        detail += (f"; e.g. n={n} z={z} coords={tuple(str(c) for c in r[0])} "
                   f"|h|={r[1]:.5f} disp={r[4]:.5f}")
    record(5, not any(tally.values()), f"{ledgers} ledgers; {detail}", time.perf_counter() - t0)


def test_c06_diagonal_limit(order):
    t0 = time.perf_counter()
    vals = []
    for k in (20, 40, 80):
        ev = ke.kernel_diag(order, 1, k, GENERIC_Z)
        assert ev.stabilized
        vals.append(float(mpmath.re(ev.value)))
    at_i = float(mpmath.re(ke.kernel_diag(order, 1, 80, (0, 1)).value))
    gaps = [abs(v - 2) for v in vals]
    ok = (abs(vals[-1] - 2) <= 0.05 and all(a > b for a, b in zip(gaps, gaps[1:]))
          and abs(at_i - 4) <= 0.05)
    dt = time.perf_counter() - t0
    record(6, ok and dt < 120,
           f"k=20,40,80: {', '.join(f'{v:.4f}' for v in vals)}; z=i, k=80: {at_i:.4f}", dt)


def test_c07_hecke_identity(order):
    t0 = time.perf_counter()
    rng = random.Random(7)
    pairs = [tuple((round(rng.uniform(-0.5, 0.5), 3), round(rng.uniform(0.8, 1.6), 3))
                   for _ in range(2)) for _ in range(2)]
    pol = ke.TruncationPolicy(tol=1e-12)
    worst = 0.0
    for n in (2, 3, 5):
        for k in (12, 20):
            for z, w in pairs:
                worst = max(worst, ke.hecke_identity_residual(order, n, k, z, w, pol))
    z, w = pairs[0]
    ctrl = ke.hecke_identity_residual(order, 5, 12, z, w, pol, drop_coset=2)
    record(7, worst < 1e-10 and ctrl > 1e-3,
           f"max residual {worst:.2e}; dropped-coset control {ctrl:.2e}", time.perf_counter() - t0)


def test_c08_convexity(order):
    t0 = time.perf_counter()
    grid = ke.sample_grid(nx=5, ny=5)
    ratios = [ke.convexity_bound(order, k, grid).ratio_diagonal for k in (20, 40, 80)]
    dt = time.perf_counter() - t0
    record(8, all(0.5 <= r <= 50 for r in ratios) and dt < 300,
           f"sup ((k-1)/2) y^k h / k for k=20,40,80: {', '.join(f'{r:.4f}' for r in ratios)}", dt)


def test_c09_counting_envelope(order, counting_tables):
    full, half, dt = counting_tables
    t0 = time.perf_counter()
    c_gen = cb.count_near(order, 1, GENERIC_Z, 0.01).count
    c_i = cb.count_near(order, 1, (0, 1), 0.01).count
    s50, s100 = half.sup_ratio, full.sup_ratio
    ok = math.isfinite(s100) and s100 < 2 * s50 and c_gen == 2 and c_i == 4
    dt += time.perf_counter() - t0
    record(9, ok and dt < 600,
           f"sup ratio n<=50: {s50:.4f}, n<=100: {s100:.4f}; counts {c_gen} (generic), {c_i} (i)", dt)


def test_c10_kz_diagnostics(counting_tables):
    full, _, _ = counting_tables
    t0 = time.perf_counter()
    rng = random.Random(10)
    bad = 0
    for _ in range(100):
        z = (Fraction(rng.randint(-99, 99), rng.randint(1, 99)),
             Fraction(rng.randint(1, 199), rng.randint(1, 99)))
        bad += cb.stabilizer_form(z).discriminant != -1
    C = full.distance_constant
    record(10, bad == 0 and math.isfinite(C),
           f"discriminant -1 for {100 - bad}/100 rational z; C = {C:.4f} over the sweep",
           time.perf_counter() - t0)


def test_c11_amplifier_exactness():
    t0 = time.perf_counter()
    q, bad, deligne = 6, 0, 0
    for seed in range(100):
        eta = amp.sato_tate_sample(seed, 10 ** 4, q=q)
        deligne += len(eta.deligne_violations())
        for N in (100, 10 ** 4):
            val = amp.amplified_value(amp.amplifier_coeffs(eta, N, q), eta)
            bad += val != amp.admissible_prime_count(N, q)
    record(11, bad == 0 and deligne == 0,
           f"200/200 exact ({bad} mismatches), {deligne} Deligne violations",
           time.perf_counter() - t0)


def test_c12_binomial_floor():
    t0 = time.perf_counter()
    xs = [Fraction(m) * Fraction(10) ** e for e in range(-3, 3) for m in (1, 2, 5)] + [Fraction(1000)]
    fails = [(kappa, M, x) for kappa in range(8, 257) for M in range(1, 9) for x in xs
             if not amp.binomial_floor(kappa, M, x)[2]]
    record(12, not fails, f"{249 * 8 * len(xs)} cases, {len(fails)} failures",
           time.perf_counter() - t0)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
