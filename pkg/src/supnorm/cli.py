"""Command-line harness: ``supnorm <command> [--config FILE] [--out DIR] ...``.

Every command writes ``<command>.json`` (and CSVs where useful) into the
output directory.  Reports embed the effective configuration and a content
hash of it; wall-clock timing goes to a separate ``<command>.timing.json`` so
the main artifacts stay byte-identical across runs.

Exit codes: 0 ok, 2 configuration/parameter error, 3 stabilization failure,
4 invariant violation.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

import mpmath

from . import amplifier as amp
from . import counting_box as cb
from . import kernel_eval as ke
from . import order_lattice as ol
from . import quat_core as qc
from .errors import InputError, ParameterError, ResourceError, StabilizationError, SupnormError

log = logging.getLogger("supnorm")

EXIT_OK, EXIT_CONFIG, EXIT_STABILIZATION, EXIT_INVARIANT = 0, 2, 3, 4

DEFAULT_BASIS = "1 0 0 0; 0 1 0 0; 0 0 1 0; 1/2 1/2 1/2 1/2"


class ConfigError(SupnormError):
    pass


# --- configuration ------------------------------------------------------------

# section -> key -> (parser, default)
_SCHEMA: dict[str, dict[str, tuple[Callable[[str], Any], Any]]] = {
    "algebra": {"a": (int, 3), "b": (int, -1)},
    "order": {"basis": (str, DEFAULT_BASIS), "q": (int, None)},
    "precision": {"bits": (int, 128)},
    "truncation": {"tol": (float, 1e-13), "stable_rounds": (int, 1), "min_rounds": (int, 3),
                   "max_rounds": (int, 10)},
    "box": {"x_min": (float, -0.5), "x_max": (float, 0.5), "y_min": (float, 0.8),
            "y_max": (float, 1.6), "nx": (int, 5), "ny": (int, 5)},
    "seeds": {"seed": (int, 0)},
}


@dataclass
class RunConfig:
    a: int = 3
    b: int = -1
    basis: str = DEFAULT_BASIS
    q: int | None = None
    bits: int = 128
    tol: float = 1e-13
    stable_rounds: int = 1
    min_rounds: int = 3
    max_rounds: int = 10
    x_min: float = -0.5
    x_max: float = 0.5
    y_min: float = 0.8
    y_max: float = 1.6
    nx: int = 5
    ny: int = 5
    seed: int = 0

    def validate(self):
        if self.bits < 53:
            raise ConfigError("precision bits must be >= 53")
        if not 0 < self.tol < 1:
            raise ConfigError("truncation tol must lie in (0, 1)")
        if self.stable_rounds < 1 or self.max_rounds < 1 or self.min_rounds < 1:
            raise ConfigError("round counts must be >= 1")
        if self.x_min > self.x_max or not 0 < self.y_min <= self.y_max:
            raise ConfigError("sample box must have x_min <= x_max and 0 < y_min <= y_max")
        if self.nx < 1 or self.ny < 1:
            raise ConfigError("grid counts must be >= 1")
        if self.q is not None and self.q < 1:
            raise ConfigError("q override must be positive")
        parse_basis(self.basis)
        return self

    def basis_rows(self) -> list[list[Fraction]]:
        return parse_basis(self.basis)

    def algebra(self) -> qc.AlgebraParams:
        return qc.AlgebraParams(self.a, self.b)

    def order(self) -> ol.QuaternionOrder:
        return ol.verify_order(self.algebra(), self.basis_rows(), self.q)

    def truncation(self) -> ke.TruncationPolicy:
        return ke.TruncationPolicy(tol=self.tol, stable_rounds=self.stable_rounds,
                                   min_rounds=self.min_rounds, max_rounds=self.max_rounds,
                                   precision=self.bits)

    def box(self):
        return (self.x_min, self.x_max), (self.y_min, self.y_max)

    def grid(self, nx=None, ny=None):
        return ke.sample_grid((self.x_min, self.x_max), (self.y_min, self.y_max),
                              nx or self.nx, ny or self.ny)

    def content_hash(self, extra: dict) -> str:
        blob = json.dumps({"config": asdict(self), "args": extra}, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()


def parse_basis(text: str) -> list[list[Fraction]]:
    try:
        rows = [[Fraction(tok) for tok in row.split()] for row in text.split(";")]
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad order basis {text!r}: {exc}") from None
    if len(rows) != 4 or any(len(r) != 4 for r in rows):
        raise ConfigError("order basis must be 4 rows of 4 rationals separated by ';'")
    return rows


def load_config(path: str | None) -> RunConfig:
    cfg = RunConfig()
    if path is None:
        return cfg
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown config key {section}.{key}")
            conv = _SCHEMA[section][key][0]
            try:
                setattr(cfg, key, conv(raw.strip()))
            except ValueError:
                raise ConfigError(f"{section}.{key}: cannot parse {raw!r}") from None
    return cfg


# --- output helpers ---------------------------------------------------------------


def _jsonable(x):
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}" if x.denominator != 1 else x.numerator
    if isinstance(x, (mpmath.mpf,)):
        return mpmath.nstr(x, 30)
    if isinstance(x, mpmath.mpc):
        return [mpmath.nstr(x.real, 30), mpmath.nstr(x.imag, 30)]
    if x is qc.INFINITY:
        return "inf"
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


class Report:
    def __init__(self, command: str, cfg: RunConfig, args: dict, out: Path | None):
        self.command = command
        self.cfg = cfg
        self.args = args
        self.out = out
        self.results: dict[str, Any] = {}
        self.checks: dict[str, bool] = {}
        self.files: dict[str, str] = {}

    def check(self, name: str, ok: bool):
        self.checks[name] = bool(ok)

    def attach(self, name: str, text: str):
        self.files[name] = text

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def document(self) -> dict:
        return {
            "command": self.command,
            "config": asdict(self.cfg),
            "args": self.args,
            "content_hash": self.cfg.content_hash(self.args),
            "results": _jsonable(self.results),
            "checks": self.checks,
            "status": "ok" if self.ok else "invariant violation",
        }

    def write(self, elapsed: float):
        text = json.dumps(self.document(), sort_keys=True, indent=1) + "\n"
        if self.out is None:
            return text
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / f"{self.command}.json").write_text(text, encoding="utf-8")
        for name, body in self.files.items():
            (self.out / name).write_text(body, encoding="utf-8")
        (self.out / f"{self.command}.timing.json").write_text(
            json.dumps({"command": self.command, "seconds": round(elapsed, 3)}) + "\n",
            encoding="utf-8")
        return text


def _point(text: str):
    try:
        x, y = (Fraction(t) for t in text.split(","))
    except ValueError:
        raise ConfigError(f"point must be 'x,y', got {text!r}") from None
    if y <= 0:
        raise ConfigError("point must have y > 0")
    return x, y


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated integers, got {text!r}") from None


# --- commands ------------------------------------------------------------------------


def cmd_algebra(cfg: RunConfig, args, rep: Report):
    alg = cfg.algebra()
    ram = qc.ramified_primes(alg)
    rep.results.update({
        "a": alg.a, "b": alg.b,
        "division": qc.is_division(alg),
        "indefinite": qc.is_indefinite(alg),
        "ramified": ram,
        "discriminant": qc.discriminant(alg),
        "norm_form": qc.norm_form_display(alg),
    })
    rep.check("product_formula", qc.product_formula_holds(alg.a, alg.b))
    rep.check("ramified_set_even", len(ram) % 2 == 0)


def cmd_order(cfg: RunConfig, args, rep: Report):
    order = cfg.order()
    disc = ol.reduced_discriminant(order)
    rep.results.update({
        "basis": [list(e.coords) for e in order.basis],
        "reduced_discriminant": disc,
        "ramified_product": qc.discriminant(order.algebra),
        "maximal_candidate": ol.is_maximal_candidate(order),
        "q": order.bad_modulus_q,
    })
    rep.check("closure", True)
    rep.check("discriminant_multiple_of_ramified",
              disc % qc.discriminant(order.algebra) == 0)


def _division_order(cfg: RunConfig) -> ol.QuaternionOrder:
    order = cfg.order()
    if not qc.is_division(order.algebra):
        raise ParameterError("this command needs a division algebra (norm form anisotropic)")
    return order


def cmd_enumerate(cfg: RunConfig, args, rep: Report):
    order = _division_order(cfg)
    sl = ol.enumerate_norm(order, args.n, Fraction(args.T))
    norms_ok = all(qc.reduced_norm(e) == args.n for e in sl.elements)
    bound = Fraction(args.T) ** 2 * order.majorant_scale
    maj_ok = all(v <= bound for v in sl.majorant_values.tolist())
    rep.results.update({"n": args.n, "T": args.T, "count": len(sl)})
    rep.attach(f"enumerate_n{args.n}.json", sl.to_json() + "\n")
    rep.check("norms_exact", norms_ok)
    rep.check("within_majorant", maj_ok)


def cmd_cosets(cfg: RunConfig, args, rep: Report):
    order = _division_order(cfg)
    rows = []
    for n in args.n:
        try:
            sl = ol.unit_cosets(order, n)
        except StabilizationError as exc:
            if exc.partial is not None:
                rep.attach(f"cosets_n{n}.partial.json", exc.partial.to_json() + "\n")
            raise
        reps = sl.representative_elements()
        rows.append({"n": n, "cosets": sl.coset_count, "status": sl.status(),
                     "history": sl.doubling_history,
                     "representatives": [list(r.coords) for r in reps]})
        distinct = all(not ol.is_left_unit_equivalent(reps[i], reps[j], order)
                       for i in range(len(reps)) for j in range(i))
        rep.check(f"representatives_distinct_n{n}", distinct)
    rep.results["cosets"] = rows


def _ledger_checks(rep: Report, ev: ke.KernelEvaluation, tag: str, deltas=(0.5, 0.1, 0.01)):
    viol = ev.ledger.bound_violations(deltas)
    rep.check(f"abs_h_le_1{tag}", bool((ev.ledger.abs_values() <= 1 + 1e-12).all()))
    rep.check(f"abs_h_le_n^-1/2{tag}", not viol["n^-1/2"])
    for d in deltas:
        rep.check(f"abs_h_le_(1+d^2)^-1/2_d{d}{tag}", not viol[d])
    return {str(k): [[_jsonable(list(r[0])), r[1], r[4]] for r in v] for k, v in viol.items()}


def cmd_kernel(cfg: RunConfig, args, rep: Report):
    order = _division_order(cfg)
    pol = cfg.truncation()
    z = _point(args.z)
    w = _point(args.w) if args.w else None
    if w is None or w == z:
        ev = ke.kernel_diag(order, args.n, args.k, z, pol, keep_ledger=True)
        rep.attach(f"kernel_ledger_n{args.n}_k{args.k}.csv", ev.ledger.to_csv())
        rep.results["term_bound_violations"] = _ledger_checks(rep, ev, "")
        tol = pol.tol * (1 + abs(ev.value)) + ev.rounding_radius
        if args.n == 1:  # for n > 1 Hecke eigenvalues weight the sum with either sign
            rep.check("diagonal_real_nonnegative", mpmath.re(ev.value) >= -tol)
        rep.check("diagonal_imag_small", abs(mpmath.im(ev.value)) <= tol)
    else:
        ev = ke.kernel_offdiag(order, args.n, args.k, z, w, pol)
        ev2 = ke.kernel_offdiag(order, args.n, args.k, w, z, pol)
        sym = abs(ev.value - mpmath.conj(ev2.value)) / max(abs(ev.value), mpmath.mpf(1e-300))
        rep.results["symmetry_residual"] = float(sym)
        rep.check("symmetry", sym < 1e3 * pol.tol)
    rep.results["evaluation"] = json.loads(ev.to_json())
    rep.check("stabilized", ev.stabilized)


def cmd_hecke(cfg: RunConfig, args, rep: Report):
    order = _division_order(cfg)
    pol = cfg.truncation()
    z, w = _point(args.z), _point(args.w)
    res = ke.hecke_identity_residual(order, args.n, args.k, z, w, pol)
    rep.results.update({"n": args.n, "k": args.k, "residual": res})
    rep.check("residual_small", res < args.threshold)
    if args.n > 1:
        ctrl = ke.hecke_identity_residual(order, args.n, args.k, z, w, pol, drop_coset=0)
        rep.results["negative_control_residual"] = ctrl
        rep.check("negative_control_fails", ctrl > 1e-3)


def cmd_godement(cfg: RunConfig, args, rep: Report):
    order = _division_order(cfg)
    z, w = _point(args.z), _point(args.w)
    rows = [{"k": k, "ratio": ke.godement_ratio(order, k, z, w)} for k in args.k]
    rep.results.update({"z": z, "w": w, "ratios": rows,
                        "max_ratio": max(r["ratio"] for r in rows)})
    rep.check("finite", all(r["ratio"] < float("inf") for r in rows))


def cmd_convexity(cfg: RunConfig, args, rep: Report):
    order = _division_order(cfg)
    grid = cfg.grid()
    rows = []
    for k in args.k:
        r = ke.convexity_bound(order, k, grid, cfg.truncation())
        rows.append({"k": k, "sup_diagonal": r.sup_diagonal, "sup_majorant": r.sup_majorant,
                     "ratio_diagonal": r.ratio_diagonal, "ratio_majorant": r.ratio_majorant,
                     "stabilizer_orders": r.stabilizer_orders})
        rep.check(f"diagonal_nonnegative_k{k}", min(r.diagonal) >= -cfg.tol * k)
        rep.check(f"ratio_in_[{args.lo},{args.hi}]_k{k}", args.lo <= r.ratio_diagonal <= args.hi)
    rep.results["convexity"] = rows


def cmd_counting(cfg: RunConfig, args, rep: Report):
    order = _division_order(cfg)
    deltas = _floats(args.deltas)
    grid = cfg.grid(args.nx, args.ny)
    table = cb.counting_experiment(order, range(1, args.n_max + 1), deltas, grid,
                                   args.eps, cfg.box())
    rep.attach("counting.csv", table.to_csv())
    half = table.restricted(max(1, args.n_max // 2))
    rep.results.update({
        "sup_ratio": table.sup_ratio,
        "sup_ratio_half_range": half.sup_ratio,
        "distance_constant": table.distance_constant,
        "growth_exponents": table.growth_exponents(),
        "split_constants": table.split_constants(),
        "branches": {f"{x},{y}": v for (x, y), v in table.branch_log.items()},
    })
    rep.check("sup_ratio_stable_2x", table.sup_ratio < 2 * max(half.sup_ratio, 1e-300))
    a, b = table.split_constants()
    rep.check("split_constants_within_2x", max(a, b) <= 2 * min(a, b))


def cmd_amplifier(cfg: RunConfig, args, rep: Report):
    rows = []
    for s in range(args.seeds):
        seed = cfg.seed + s
        for N in args.N:
            eta = amp.sato_tate_sample(seed, N, q=args.q)
            val = amp.amplified_value(amp.amplifier_coeffs(eta, N, args.q), eta)
            want = amp.admissible_prime_count(N, args.q)
            rows.append({"seed": seed, "N": N, "value": val, "expected": want})
            rep.check(f"exact_seed{seed}_N{N}", val == want)
            rep.check(f"deligne_seed{seed}_N{N}", not eta.deligne_violations())
    rep.results["amplifier"] = rows


def cmd_ledger(cfg: RunConfig, args, rep: Report):
    led = amp.exponent_ledger(args.M, args.epsilon, args.k, args.eps_prime)
    rep.results["ledger"] = json.loads(led.to_json())
    if args.k is not None:
        rep.results["theorem_bound"] = json.loads(
            amp.theorem_bound(args.k, args.M, args.epsilon, args.eps_prime).to_json())
    rep.check("exponent_formula", led.exponent == Fraction(1, 2) - Fraction(args.M, 4 * (1 + 8 * args.M)))
    print(f"M={args.M} exponent {led.display(4)} ({led.exponent})")


COMMANDS = {
    "algebra": cmd_algebra,
    "order": cmd_order,
    "enumerate": cmd_enumerate,
    "cosets": cmd_cosets,
    "kernel": cmd_kernel,
    "hecke": cmd_hecke,
    "godement": cmd_godement,
    "convexity": cmd_convexity,
    "counting": cmd_counting,
    "amplifier": cmd_amplifier,
    "ledger": cmd_ledger,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI config file ([algebra], [order], ...)")
    common.add_argument("--out", help="output directory for JSON/CSV artifacts")
    common.add_argument("--precision", type=int, help="working precision in bits")
    common.add_argument("--seed", type=int, help="base RNG seed")
    common.add_argument("-a", type=int, help="algebra parameter a")
    common.add_argument("-b", type=int, help="algebra parameter b")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="supnorm", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("algebra", parents=[common], help="ramification and division test")
    sub.add_parser("order", parents=[common], help="verify the configured order")
    s = sub.add_parser("enumerate", parents=[common], help="elements of norm n")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--T", type=str, default="8", help="majorant radius")
    s = sub.add_parser("cosets", parents=[common], help="unit cosets R(1)\\R(n)")
    s.add_argument("--n", type=_ints, required=True, help="comma-separated norms")
    s = sub.add_parser("kernel", parents=[common], help="Hecke-transformed kernel sum")
    s.add_argument("--n", type=int, default=1)
    s.add_argument("--k", type=int, default=20)
    s.add_argument("--z", default="31/100,117/100")
    s.add_argument("--w", default=None)
    s = sub.add_parser("hecke", parents=[common], help="Hecke/coset identity residual")
    s.add_argument("--n", type=int, default=2)
    s.add_argument("--k", type=int, default=12)
    s.add_argument("--z", default="3/25,21/20")
    s.add_argument("--w", default="-1/5,93/100")
    s.add_argument("--threshold", type=float, default=1e-10)
    s = sub.add_parser("godement", parents=[common], help="majorant ratio sweep")
    s.add_argument("--k", type=_ints, default=[10, 20, 40, 60])
    s.add_argument("--z", default="31/100,117/100")
    s.add_argument("--w", default="31/100,117/100")
    s = sub.add_parser("convexity", parents=[common], help="convexity quantity over the box grid")
    s.add_argument("--k", type=_ints, default=[20, 40, 80])
    s.add_argument("--lo", type=float, default=0.5)
    s.add_argument("--hi", type=float, default=50.0)
    s = sub.add_parser("counting", parents=[common], help="near-identity counting sweep")
    s.add_argument("--n-max", type=int, default=50)
    s.add_argument("--deltas", default="0.5,0.1,0.01")
    s.add_argument("--eps", type=float, default=0.1)
    s.add_argument("--nx", type=int, default=3)
    s.add_argument("--ny", type=int, default=3)
    s = sub.add_parser("amplifier", parents=[common], help="amplifier exactness over seeds")
    s.add_argument("--N", type=_ints, default=[100, 10000])
    s.add_argument("--q", type=int, default=6)
    s.add_argument("--seeds", type=int, default=10)
    s = sub.add_parser("ledger", parents=[common], help="exponent ledger for M")
    s.add_argument("--M", type=int, default=4)
    s.add_argument("--epsilon", type=float, default=0.0)
    s.add_argument("--eps-prime", type=float, default=1e-3)
    s.add_argument("--k", type=int, default=None)
    return p


def _effective_config(args) -> RunConfig:
    cfg = load_config(args.config)
    if args.precision is not None:
        cfg.bits = args.precision
    if args.seed is not None:
        cfg.seed = args.seed
    if args.a is not None:
        cfg.a = args.a
    if args.b is not None:
        cfg.b = args.b
    return cfg.validate()


def _arg_echo(args) -> dict:
    skip = {"config", "out", "verbose", "command", "precision", "seed", "a", "b"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = Path(args.out) if args.out else None
    t0 = time.perf_counter()
    rep = None
    try:
        cfg = _effective_config(args)
        rep = Report(args.command, cfg, _arg_echo(args), out)
        COMMANDS[args.command](cfg, args, rep)
    except StabilizationError as exc:
        print(f"stabilization failure: {exc}", file=sys.stderr)
        if rep is not None:
            rep.results["error"] = str(exc)
            rep.results["history"] = _jsonable(exc.history)
            rep.check("stabilized", False)
            rep.write(time.perf_counter() - t0)
        return EXIT_STABILIZATION
    except (ConfigError, ParameterError, InputError, ResourceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = rep.write(time.perf_counter() - t0)
    if out is None:
        sys.stdout.write(text)
    if not rep.ok:
        failed = [k for k, v in rep.checks.items() if not v]
        print(f"invariant violation: {', '.join(failed)}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
