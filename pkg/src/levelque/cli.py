"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 invalid input,
3 numerical capability failure.  JSON records carry ``schema_version`` and
the resolved configuration; tables are CSV with a single header line.
"""

import argparse
import configparser
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .arith import primes_up_to
from .eisenstein import coset_sum_eval, eval_eisenstein, scattering_matrix
from .errors import NUMERICAL_ERRORS, DomainError, MapsToCuspError
from .halfplane import (
    Cusp,
    HalfPlanePoint,
    check_level,
    cusps,
    in_fundamental_domain,
    mobius_act,
    random_gamma0,
)
from .heckeseries import (
    ALPHA_READINGS,
    TILDE_CONVENTIONS,
    OldformCoefficients,
    decay_scan,
    lambda_at,
    lemma24_euler_factor_check,
    make_hecke_sequence,
)
from .quadrature import Region, TestFunction, constant_term_ratio, default_test_function, luo_sarnak_scan, que_ratio

SCHEMA_VERSION = 1
THREADS_ENV = "LEVELQUE_THREADS"

DEFAULT_A = "0,0.4,1.2,2.0"
DEFAULT_B = "-0.5,0.5,1.0,3.0"


class VerificationFailure(Exception):
    pass


# ---------------------------------------------------------------- helpers


def _int_list(text):
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text):
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _positive(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("tolerances must be positive")
    return v


def _levels(values):
    return [check_level(q) for q in values]


def _pmap(fn, items):
    """Map preserving input order; threads from ``LEVELQUE_THREADS``."""
    items = list(items)
    try:
        workers = int(os.environ.get(THREADS_ENV, "1"))
    except ValueError:
        raise DomainError(f"{THREADS_ENV} must be an integer") from None
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _config_dict(args):
    skip = {"func", "config", "out"}
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in skip:
            continue
        out[k] = v
    return out


def _finite_or_none(v):
    return v if math.isfinite(v) else None


def _complex_pair(z):
    return [float(z.real), float(z.imag)]


class _Output:
    def __init__(self, path):
        self.path = path
        self.buf = io.StringIO()

    def json(self, record):
        self.buf.write(json.dumps(record, sort_keys=True) + "\n")

    def csv(self, header, rows):
        w = csv.writer(self.buf, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow(r)

    def flush(self):
        text = self.buf.getvalue()
        if self.path:
            with open(self.path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
            sys.stdout.flush()


def _record(args, command, **fields):
    rec = {"schema_version": SCHEMA_VERSION, "command": command, "config": _config_dict(args)}
    rec.update(fields)
    return rec


def _announce(args, command):
    # configuration for table outputs goes to stderr so the CSV keeps one header line
    sys.stderr.write(json.dumps({"schema_version": SCHEMA_VERSION, "command": command,
                                 "config": _config_dict(args)}, sort_keys=True) + "\n")


# --------------------------------------------------------------- commands


def cmd_eval(args, out):
    q = check_level(args.q)
    kappa = Cusp.parse(args.cusp)
    if kappa not in cusps(q):
        raise DomainError("level 1 has a single cusp (infinity)")
    z = HalfPlanePoint(args.x, args.y)
    s = complex(0.5, args.t)
    val = eval_eisenstein(q, kappa, z, s, args.tol)
    out.json(_record(args, "eval", s=_complex_pair(s), value=_complex_pair(val), abs2=abs(val) ** 2))
    return 0


def _random_point_in_f(rng):
    while True:
        z = HalfPlanePoint(rng.uniform(-0.5, 0.5), rng.uniform(math.sqrt(3) / 2, 2.5))
        if in_fundamental_domain(z):
            return z


def _suite_invariance(args):
    rng = np.random.default_rng(args.seed)
    checks = []
    for q in _levels(args.levels):
        for t in args.t_values:
            for kappa in cusps(q):
                worst = 0.0
                for _ in range(args.trials):
                    g = random_gamma0(rng, q)
                    z = HalfPlanePoint(rng.uniform(-0.5, 0.5), rng.uniform(0.25, 1.2))
                    a = abs(eval_eisenstein(q, kappa, z, complex(0.5, t), route="direct")) ** 2
                    b = abs(eval_eisenstein(q, kappa, mobius_act(g, z), complex(0.5, t), route="reduce")) ** 2
                    worst = max(worst, abs(a - b) / max(abs(a), 1e-300))
                checks.append({"check": "invariance", "q": q, "t": t, "cusp": kappa.value,
                               "max_deviation": worst, "tolerance": args.tol, "passed": worst <= args.tol})
    return checks


def _suite_oracle(args):
    rng = np.random.default_rng(args.seed)
    checks = []
    for q in _levels(args.levels):
        for kappa in cusps(q):
            worst, ok = 0.0, True
            for _ in range(args.points):
                z = _random_point_in_f(rng)
                o = coset_sum_eval(q, kappa, z, 2.0, args.bound, args.window)
                v = eval_eisenstein(q, kappa, z, 2.0)
                dev = abs(v - o.value)
                ok &= dev <= o.tail_bound + 1e-8
                worst = max(worst, dev)
            checks.append({"check": "oracle", "q": q, "cusp": kappa.value, "max_deviation": worst,
                           "passed": bool(ok)})
    return checks


def _suite_scattering(args):
    checks = []
    for q in _levels(args.levels):
        for t in args.t_values:
            phi = scattering_matrix(q, complex(0.5, t))
            dev = float(np.linalg.norm(phi @ phi.conj().T - np.eye(len(phi))))
            checks.append({"check": "scattering", "q": q, "t": t, "max_deviation": dev,
                           "tolerance": args.tol, "passed": dev <= args.tol})
    return checks


def _suite_lemma24(args):
    checks = []
    primes = [int(p) for p in primes_up_to(args.primes)]
    nus = [0.0, -0.4, -1.4j]
    displays = tuple(args.displays)
    for seed in range(args.seeds):
        seq = make_hecke_sequence(seed, max(args.primes, 101))
        worst = {d: 0.0 for d in displays}
        for p in primes:
            # p as the level (the q-local factor) and p away from the level
            other = 11 if p != 11 else 13
            for q in (p, other):
                old = OldformCoefficients(seq, q)
                for nu in nus:
                    res = lemma24_euler_factor_check(old, p, args.order, nu, displays, args.tilde,
                                                     args.form, args.alpha)
                    for d, dev in res.per_display.items():
                        worst[d] = max(worst[d], dev)
        for d in displays:
            checks.append({"check": "lemma24", "display": d, "seed": seed, "form": args.form,
                           "max_deviation": worst[d], "tolerance": args.tol, "passed": worst[d] < args.tol})
    return checks


def _suite_hecke(args):
    from math import gcd

    checks = []
    for seed in range(args.seeds):
        rng = np.random.default_rng(seed)
        seq = make_hecke_sequence(seed, 1000)
        mult, comp = 0.0, 0.0
        for _ in range(args.pairs):
            m, n = (int(v) for v in rng.integers(1, 1000, 2))
            if gcd(m, n) == 1 and m * n <= 10**6:
                mult = max(mult, abs(lambda_at(seq, m * n) - lambda_at(seq, m) * lambda_at(seq, n)))
            m, n = (int(v) for v in rng.integers(1, 200, 2))
            g = gcd(m, n)
            rhs = math.fsum(lambda_at(seq, m * n // (d * d)) for d in range(1, g + 1) if g % d == 0)
            comp = max(comp, abs(lambda_at(seq, m) * lambda_at(seq, n) - rhs))
        checks.append({"check": "hecke-multiplicativity", "seed": seed, "max_deviation": mult,
                       "passed": mult == 0.0 or mult <= 1e-12})
        checks.append({"check": "hecke-composition", "seed": seed, "max_deviation": comp,
                       "passed": comp <= 1e-10})
    return checks


SUITES = {
    "invariance": _suite_invariance,
    "oracle": _suite_oracle,
    "scattering": _suite_scattering,
    "lemma24": _suite_lemma24,
    "hecke": _suite_hecke,
}


def cmd_verify(args, out):
    checks = SUITES[args.suite](args)
    ok = all(c["passed"] for c in checks)
    for c in checks:
        out.json({"schema_version": SCHEMA_VERSION, **c})
    out.json(_record(args, "verify", suite=args.suite, passed=ok, checks=len(checks),
                     max_deviation=max((c["max_deviation"] for c in checks), default=0.0)))
    return 0 if ok else 1


def cmd_que_ratio(args, out):
    levels = _levels(args.levels)
    kappa = Cusp.parse(args.cusp)
    if args.region:
        if len(args.region) > 2:
            raise DomainError("--region may be given at most twice (A then B)")
        args.region_a = args.region[0]
        if len(args.region) == 2:
            args.region_b = args.region[1]
        args.region = None
    ra, rb = Region.parse(args.region_a), Region.parse(args.region_b)

    def row(q):
        if kappa not in cusps(q):
            raise DomainError("level 1 has a single cusp (infinity)")
        res = que_ratio(q, kappa, args.t, ra, rb, args.tol)
        pred = constant_term_ratio(q, kappa, args.t, ra, rb)
        return [q, res.integral_a.value, res.integral_b.value, res.ratio, res.target,
                abs(res.ratio - res.target), pred]

    rows = _pmap(row, levels)
    header = ["q", "integral_a", "integral_b", "ratio", "target", "abs_deviation", "constant_term_ratio"]
    if args.format == "json":
        out.json(_record(args, "que-ratio", columns=header, rows=rows))
    else:
        _announce(args, "que-ratio")
        out.csv(header, [[repr(v) if isinstance(v, float) else v for v in r] for r in rows])
    return 0


def parse_phi(text, scale=1.0):
    """``default``, ``profile:a,b`` or ``indicator:x1,x2,y1,y2[;...]:delta``."""
    text = text.strip()
    if text == "default":
        phi = default_test_function()
    elif text.startswith("profile:"):
        a, b = _float_list(text.split(":", 1)[1])
        phi = TestFunction.vertical_profile(a, b)
    elif text.startswith("indicator:"):
        _, boxes, delta = text.split(":")
        phi = TestFunction.smoothed_indicator(Region.parse(boxes), float(delta))
    else:
        raise DomainError(f"unknown test function {text!r}")
    return phi * scale


def cmd_ls_scan(args, out):
    if args.step <= 0 or args.t_max < args.t_min:
        raise DomainError("need step > 0 and t_max >= t_min")
    count = int(math.floor((args.t_max - args.t_min) / args.step + 1e-9)) + 1
    ts = [args.t_min + k * args.step for k in range(count)]
    phi = parse_phi(args.phi, args.scale)
    scans = _pmap(lambda t: luo_sarnak_scan([t], phi, args.tol), ts)
    rows = [sc.rows[0] for sc in scans]
    mass = scans[0].mass
    x = np.array([math.log(0.25 + r[0] ** 2) for r in rows])
    slope = float(np.polyfit(x, np.array([r[1] for r in rows]), 1)[0]) if len(rows) > 1 else float("nan")
    summary = {"slope": _finite_or_none(slope),
               "normalized_slope": _finite_or_none(slope / mass) if mass else None,
               "mass": mass, "target": 3.0 / math.pi}
    header = ["t", "lhs", "predicted"]
    if args.format == "json":
        out.json(_record(args, "ls-scan", columns=header, rows=[list(r) for r in rows], **summary))
    else:
        _announce(args, "ls-scan")
        out.csv(header, [[repr(v) for v in r] for r in rows])
        sys.stderr.write(json.dumps(summary, sort_keys=True) + "\n")
    return 0


def cmd_oldform_decay(args, out):
    levels = _levels(args.levels)
    if 1 in levels:
        raise DomainError("oldform levels must be prime")
    rows, exponent = decay_scan(levels, list(range(args.seeds)), args.theta, args.s, args.t,
                                force_tau_q_zero=args.force_tau_q_zero)
    summary = {"fitted_exponent": _finite_or_none(exponent), "expected": args.theta - 0.5}
    header = ["q", "leading"]
    if args.format == "json":
        out.json(_record(args, "oldform-decay", columns=header, rows=[list(r) for r in rows], **summary))
    else:
        _announce(args, "oldform-decay")
        out.csv(header, [[q, repr(v)] for q, v in rows])
        sys.stderr.write(json.dumps(summary, sort_keys=True) + "\n")
    return 0


# ----------------------------------------------------------------- parser


def build_parser():
    parser = argparse.ArgumentParser(prog="levelque", description="Eisenstein series on Gamma_0(q): "
                                     "evaluation, verification suites and equidistribution experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="INI file; keys in a [levelque] section override defaults")
    parser.add_argument("--out", help="write output here instead of stdout")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="value of E and |E|^2 at one point")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--cusp", default="inf")
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--y", type=float, required=True)
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--tol", type=_positive, default=1e-10)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("verify", help="run an invariant suite; JSON lines, exit 1 on failure")
    p.add_argument("suite", choices=sorted(SUITES))
    p.add_argument("--levels", "--q", type=_int_list, default=None)
    p.add_argument("--t", "--t-values", dest="t_values", type=_float_list, default=None)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--points", type=int, default=20)
    p.add_argument("--bound", type=float, default=300.0)
    p.add_argument("--window", type=int, default=3000)
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--primes", type=int, default=50)
    p.add_argument("--order", type=int, default=10)
    p.add_argument("--pairs", type=int, default=200)
    p.add_argument("--displays", type=_int_list, default=[1, 2])
    p.add_argument("--tilde", choices=TILDE_CONVENTIONS, default="normalized")
    p.add_argument("--alpha", choices=ALPHA_READINGS, default="valuation")
    p.add_argument("--form", choices=("printed", "derived"), default="printed")
    p.add_argument("--tol", type=_positive, default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("que-ratio", help="ratio of |E|^2 integrals over two regions, per level")
    p.add_argument("--levels", type=_int_list, default=[11, 101, 1009])
    p.add_argument("--cusp", default="inf")
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--region-a", default=DEFAULT_A)
    p.add_argument("--region-b", default=DEFAULT_B)
    p.add_argument("--region", action="append", default=None,
                   help="repeatable; first occurrence replaces region A, second region B")
    p.add_argument("--tol", type=_positive, default=1e-8)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_que_ratio)

    p = sub.add_parser("ls-scan", help="<|E|^2, phi> at level 1 over a range of t")
    p.add_argument("--t-min", type=float, default=10.0)
    p.add_argument("--t-max", type=float, default=40.0)
    p.add_argument("--step", type=float, default=5.0)
    p.add_argument("--phi", default="default")
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--tol", type=_positive, default=1e-6)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_ls_scan)

    p = sub.add_parser("oldform-decay", help="size of the oldform leading term across levels")
    p.add_argument("--levels", type=_int_list, default=[11, 101, 1009, 10007])
    p.add_argument("--seeds", type=int, default=64)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--s", type=float, default=0.5)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--force-tau-q-zero", action="store_true")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_oldform_decay)
    return parser


_VERIFY_DEFAULTS = {
    "invariance": {"levels": [11], "t_values": [1.0], "tol": 1e-7},
    "oracle": {"levels": [1, 5, 11], "tol": 1e-8},
    "scattering": {"levels": [5, 11], "t_values": [1.0, 5.0, 10.0], "tol": 1e-6},
    "lemma24": {"tol": 1e-12},
    "hecke": {"tol": 1e-10},
}


def _apply_config(parser, argv):
    pre, _ = parser.parse_known_args(argv)
    if not pre.config:
        return parser.parse_args(argv)
    cp = configparser.ConfigParser()
    if not cp.read(pre.config):
        raise DomainError(f"cannot read config file {pre.config!r}")
    if "levelque" not in cp:
        raise DomainError("config file needs a [levelque] section")
    # re-parse with config values inserted before the explicit flags, so flags win
    extra = []
    for key, value in cp["levelque"].items():
        extra += [f"--{key.replace('_', '-')}", value]
    cmd_index = next(i for i, a in enumerate(argv) if a == pre.command)
    head, tail = argv[: cmd_index + 1], argv[cmd_index + 1 :]
    if pre.command == "verify":
        head, tail = argv[: cmd_index + 2], argv[cmd_index + 2 :]
    return parser.parse_args(head + extra + tail)


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        if args.command == "verify":
            for k, v in _VERIFY_DEFAULTS[args.suite].items():
                if getattr(args, k, None) is None:
                    setattr(args, k, v)
            if args.levels is None:
                args.levels = [11]
            if args.t_values is None:
                args.t_values = [1.0]
        out = _Output(args.out)
        code = args.func(args, out)
        out.flush()
        return code
    except (DomainError, MapsToCuspError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except NUMERICAL_ERRORS as exc:
        sys.stderr.write(f"numerical error: {exc}\n")
        return 3


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
