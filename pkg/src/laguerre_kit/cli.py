"""Command-line entry point: evaluations, verification sweeps and reports.

Exit status: 0 when nothing is violated, 2 when a check fails (a violation
certificate is written to stderr and into the report), 64 on usage errors.
Reports are JSON (default) or CSV; the payload depends only on the config
and seed.  LAGUERRE_KIT_THREADS sets the worker count for bound sweeps.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from . import checks
from .claims import CLAIMS, default_claims, run_claim
from .errors import DomainError, UnsupportedClaimError, UsageError
from .grid import Grid, GridFunction, TimeQuadrature, log_linear_breaks
from .heat import SweepGrid, log_abs_kernel_1d, log_abs_kernel_nd
from .operators import (
    default_test_family,
    gaussian_maximal,
    hl_maximal,
    maximal_semigroup,
    op_norm_probe,
    riesz_apply_quadrature,
    square_G,
    square_S,
    tail_operators,
)
from .spectral import evaluate, expand, riesz_apply_spectral, synthesize
from .specfun import as_nu, laguerre_function, laguerre_function_nd
from .weights import WeightSpec, power_weight_class, refinement_study, theorem_range

EX_OK, EX_VIOLATION, EX_USAGE = 0, 2, 64
COMMANDS = ("eval-phi", "heat-kernel", "verify-bounds", "verify-identities", "riesz", "square", "maximal",
            "weight-check", "range", "probe-norms")

# acceptance criterion -> the one command that runs it
CRITERION_COMMANDS = {
    1: "verify-identities --set orthonormality",
    2: "verify-identities --set routes",
    3: "verify-identities --set chapman-kolmogorov",
    4: "verify-identities --set intertwining",
    5: "verify-identities --set factorization",
    6: "verify-bounds --all",
    7: "verify-identities --set derivatives",
    8: "riesz --closed-forms",
    9: "probe-norms --offdiag",
    10: "weight-check --acceptance",
    11: "verify-identities --set commutation",
}

IDENTITY_SETS = {
    "orthonormality": (checks.check_orthonormality, "orthonormality"),
    "routes": (checks.check_route_agreement, "routes"),
    "chapman-kolmogorov": (checks.check_chapman_kolmogorov, "chapman_kolmogorov"),
    "intertwining": (checks.check_intertwining, "intertwining"),
    "factorization": (checks.check_factorization, "factorization"),
    "derivatives": (checks.check_derivative_kernels, "derivatives"),
    "commutation": (checks.check_commutation_identities, "commutation"),
}


class CliUsage(Exception):
    pass


# ---------------------------------------------------------------- config


def _floats(text):
    return [float(v) for v in str(text).replace(";", ",").split(",") if v.strip()]


@dataclass
class SweepConfig:
    seed: int = 12345
    format: str = "json"
    output: str = "-"
    nu: tuple = (-0.75,)
    t_min: float = 1e-3
    t_max: float = 10.0
    t_count: int = 40
    x_min: float = 1e-3
    x_max: float = 8.0
    x_count: int = 60
    c_candidates: tuple = (1.0, 2.0, 4.0, 8.0, 16.0, 32.0)
    tq_min: float = 1e-5
    tq_max: float = 50.0
    tq_count: int = 160
    spectral_N: int = 40
    tolerances: dict = field(default_factory=lambda: dict(checks.TOLERANCES))

    @classmethod
    def parse(cls, text: str, base: "SweepConfig | None" = None) -> "SweepConfig":
        cfg = base or cls()
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise CliUsage(f"config line {lineno}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            cfg.set(key, val, lineno)
        return cfg

    def set(self, key, val, lineno=None):
        where = f"config line {lineno}: " if lineno else ""
        try:
            if key.startswith("tol_"):
                name = key[4:]
                if name not in self.tolerances:
                    raise CliUsage(f"{where}unknown tolerance {key!r}")
                self.tolerances[name] = float(val)
            elif key in ("nu", "c_candidates"):
                setattr(self, key, tuple(_floats(val)))
            elif key in ("seed", "t_count", "x_count", "tq_count", "spectral_N"):
                setattr(self, key, int(val))
            elif key in ("format", "output"):
                setattr(self, key, val)
            elif key in ("t_min", "t_max", "x_min", "x_max", "tq_min", "tq_max"):
                setattr(self, key, float(val))
            else:
                raise CliUsage(f"{where}unknown key {key!r}")
        except ValueError as exc:
            raise CliUsage(f"{where}bad value for {key}: {exc}") from None
        if self.format not in ("json", "csv"):
            raise CliUsage(f"{where}format must be json or csv")

    @classmethod
    def load(cls, path: str | None = None) -> "SweepConfig":
        text = resources.files(__package__).joinpath("default.cfg").read_text()
        cfg = cls.parse(text, cls())
        if path:
            try:
                with open(path) as fh:
                    cfg = cls.parse(fh.read(), cfg)
            except OSError as exc:
                raise CliUsage(f"cannot read config: {exc}") from None
        return cfg

    def sweep(self, n: int = 1) -> SweepGrid:
        if min(self.t_count, self.x_count) < 1 or not (0 < self.t_min <= self.t_max) or not (0 < self.x_min <= self.x_max):
            raise CliUsage("invalid sweep grid in config")
        t = np.geomspace(self.t_min, self.t_max, self.t_count)
        x = np.geomspace(self.x_min, self.x_max, self.x_count)
        return SweepGrid(t, x, x.copy(), n)

    def time_quadrature(self) -> TimeQuadrature:
        return TimeQuadrature(self.tq_min, self.tq_max, self.tq_count)


# ---------------------------------------------------------------- output


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def _csv_cell(v):
    if isinstance(v, dict):
        return json.dumps(v, sort_keys=True)
    if isinstance(v, list):
        return ";".join(_csv_cell(u) for u in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render(report: dict, fmt: str) -> str:
    report = _clean(report)
    if fmt == "json":
        return json.dumps(report, indent=2, sort_keys=True) + "\n"
    rows = report.get("rows") or [{k: v for k, v in report.items() if not isinstance(v, (dict, list))}]
    keys = []
    for r in rows:
        for k in r:
            if k not in keys:
                keys.append(k)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _csv_cell(r.get(k, "")) for k in keys})
    return buf.getvalue()


# ---------------------------------------------------------------- helpers


def _points(text, n):
    """'0.5,1,2' for n = 1; '0.5,1;2,3' (points separated by ';') for n > 1."""
    if n == 1:
        return np.array(_floats(text))
    pts = [[float(v) for v in p.split(",")] for p in text.split(";") if p.strip()]
    if any(len(p) != n for p in pts):
        raise CliUsage(f"each point needs {n} coordinates")
    return np.array(pts)


def _nu(args, cfg):
    return as_nu(tuple(_floats(args.nu)) if args.nu is not None else cfg.nu)


def _input_function(spec: str, nu: float, grid):
    """'phi:k' or 'indicator:a,b' on ``grid``."""
    kind, _, arg = spec.partition(":")
    if kind == "phi":
        k = int(arg or 0)
        return GridFunction.from_callable(grid, lambda v: laguerre_function(k, nu, v)), f"phi_{k}"
    if kind == "indicator":
        a, b = _floats(arg)
        return GridFunction.from_callable(grid, lambda v: ((v >= a) & (v <= b)).astype(float), jumps=(a, b)), f"1[{a:g},{b:g}]"
    raise CliUsage("input must be phi:k or indicator:a,b")


def _status(report: dict, claim_id: str) -> int:
    if report.get("passed", True):
        return EX_OK
    if "certificate" not in report:
        rows = report.get("rows", [])
        report["certificate"] = {"claim_id": claim_id, "measured": report.get("measured"), "tol": report.get("tol"),
                                 "ratio": (report.get("measured") or 0) / (report.get("tol") or 1),
                                 "worst_point": rows[0] if rows else None}
    return EX_VIOLATION


def _one_dim(nu):
    if nu.n != 1:
        raise CliUsage("this command works with a one-dimensional nu")
    return nu[0]


# ---------------------------------------------------------------- commands


def cmd_eval_phi(args, cfg):
    if args.orthonormality:
        r = checks.check_orthonormality(tol=cfg.tolerances["orthonormality"])
        return r, _status(r, "orthonormality")
    nu = _nu(args, cfg)
    k = [int(v) for v in _floats(args.k)]
    if len(k) != nu.n:
        raise CliUsage("k and nu must have the same length")
    x = _points(args.x, nu.n)
    vals = laguerre_function(k[0], nu[0], x) if nu.n == 1 else laguerre_function_nd(k, nu, x)
    rows = [{"x": np.atleast_1d(p).tolist(), "phi": float(v)} for p, v in zip(x, np.atleast_1d(vals))]
    return {"command": "eval-phi", "nu": list(nu.values), "k": k, "rows": rows}, EX_OK


def cmd_heat_kernel(args, cfg):
    nu = _nu(args, cfg)
    x = _points(args.x, nu.n)
    y = _points(args.y, nu.n)
    if len(x) != len(y):
        raise CliUsage("x and y need the same number of points")
    if nu.n == 1:
        lk = log_abs_kernel_1d(args.kind, nu[0], args.t, x, y)
        sign = np.ones_like(lk)
        if args.kind != "p":
            from . import heat

            fn = {"delta": heat.delta_heat_kernel_1d, "delta_star": heat.delta_star_heat_kernel_1d,
                  "dt": heat.dt_heat_kernel_1d, "delta_dt": heat.delta_dt_heat_kernel_1d,
                  "delta_star_dt": heat.delta_star_dt_heat_kernel_1d}[args.kind]
            sign = np.sign(fn(nu[0], args.t, x, y))
    else:
        if args.kind not in ("p", "dt", "delta"):
            raise CliUsage("n-D kernels: kind must be p, dt or delta")
        lk = log_abs_kernel_nd(args.kind, nu, args.t, x, y)
        sign = np.ones_like(lk)
        if args.kind != "p":
            raise CliUsage("signed n-D derivative kernels are not reported; use kind p")
    rows = [{"x": np.atleast_1d(a).tolist(), "y": np.atleast_1d(b).tolist(), "log_abs": float(l), "value": float(s * np.exp(l))}
            for a, b, l, s in zip(x, y, lk, sign)]
    return {"command": "heat-kernel", "nu": list(nu.values), "t": args.t, "kind": args.kind, "rows": rows}, EX_OK


def _bound_job(cfg, cid, nu):
    cl = CLAIMS[cid]
    return run_claim(cid, nu, cfg.sweep(cl.n), cfg.c_candidates).as_dict()


def cmd_verify_bounds(args, cfg):
    if args.all:
        jobs = default_claims()
    elif args.claim:
        if args.claim not in CLAIMS:
            raise CliUsage(f"unknown claim {args.claim!r}; known: {', '.join(CLAIMS)}")
        nu = tuple(_floats(args.nu)) if args.nu is not None else CLAIMS[args.claim].default_nu
        jobs = [(args.claim, nu)]
    else:
        raise CliUsage("verify-bounds needs --claim ID or --all")
    threads = max(1, int(os.environ.get("LAGUERRE_KIT_THREADS", "1") or 1))
    with ThreadPoolExecutor(threads) as pool:
        rows = list(pool.map(lambda j: _bound_job(cfg, *j), jobs))
    bad = [r for r in rows if r["violated"] or not np.isfinite(r["best_C"])]
    report = {"command": "verify-bounds", "c_candidates": list(cfg.c_candidates), "passed": not bad, "rows": rows}
    if bad:
        report["certificate"] = {"claim_id": bad[0]["claim_id"], "worst_point": bad[0]["worst_point"], "ratio": bad[0]["best_C"]}
    return report, _status(report, "verify-bounds")


def cmd_verify_identities(args, cfg):
    fn, tol_key = IDENTITY_SETS[args.set]
    kw = {"tol": cfg.tolerances[tol_key]}
    if args.set == "commutation":
        kw["N"] = cfg.spectral_N
    if args.set in ("routes", "derivatives"):
        kw["seed"] = cfg.seed
    r = fn(**kw)
    r["command"] = f"verify-identities --set {args.set}"
    return r, _status(r, args.set)


def cmd_riesz(args, cfg):
    if args.closed_forms:
        r = checks.check_closed_forms(tq=cfg.time_quadrature(), tol_riesz=cfg.tolerances["riesz"],
                                      tol_square=cfg.tolerances["square"])
        return r, _status(r, "closed-forms")
    nu = _one_dim(_nu(args, cfg))
    g = Grid.default()
    f, label = _input_function(args.input, nu, g)
    x = np.array(_floats(args.x))
    rows = []
    spec = evaluate(riesz_apply_spectral(expand(f, nu, cfg.spectral_N)), x) if args.route in ("spectral", "both") else None
    quad = riesz_apply_quadrature(f, nu, 0, cfg.time_quadrature(), x) if args.route in ("quadrature", "both") else None
    for i, xi in enumerate(x):
        row = {"x": float(xi)}
        if spec is not None:
            row["spectral"] = float(spec[i])
        if quad is not None:
            row["quadrature"] = float(quad[i])
        rows.append(row)
    return {"command": "riesz", "nu": nu, "input": label, "route": args.route, "rows": rows}, EX_OK


def cmd_square(args, cfg):
    nu = _one_dim(_nu(args, cfg))
    g = Grid.default()
    f, label = _input_function(args.input, nu, g)
    x = np.array(_floats(args.x))
    tq = cfg.time_quadrature()
    if args.kind == "S":
        vals = square_S(f, nu, 0, tq, x)
    else:
        vals = square_G(f, nu, tq, x, N=cfg.spectral_N, route=args.route)
    rows = [{"x": float(a), args.kind: float(v)} for a, v in zip(x, vals)]
    return {"command": "square", "kind": args.kind, "nu": nu, "input": label, "rows": rows}, EX_OK


def cmd_maximal(args, cfg):
    """Semigroup maximal function with its domination by M + T2 + T3 and the Gaussian maximal bound."""
    nu = _one_dim(_nu(args, cfg))
    g = Grid.default(x_max=16.0)
    f, label = _input_function(args.input, nu, g)
    x = np.array(_floats(args.x))
    tq = TimeQuadrature(max(cfg.tq_min, 1e-4), min(cfg.tq_max, 20.0), cfg.tq_count)
    ms = maximal_semigroup(f, nu, tq, x)
    hl = hl_maximal(f, 1.0, x)
    t2, t3 = tail_operators(f, max(-0.5 - nu, 0.0), x)
    gm = gaussian_maximal(f, tq, 4.0, x)
    rows = [{"x": float(a), "maximal": float(m), "M": float(h), "T2": float(b), "T3": float(c), "gaussian": float(q)}
            for a, m, h, b, c, q in zip(x, ms, hl, t2, t3, gm)]
    C_dec = float(np.max(ms / (hl + t2 + t3)))
    C_gauss = float(np.max(gm / hl))
    ok = np.isfinite(C_dec) and np.isfinite(C_gauss)
    report = {"command": "maximal", "nu": nu, "input": label, "C_decomposition": C_dec, "C_gaussian": C_gauss,
              "passed": bool(ok), "rows": rows}
    return report, _status(report, "maximal")


def cmd_weight_check(args, cfg):
    if args.acceptance:
        r = checks.check_weights(seed=cfg.seed)
        return r, _status(r, "weights")
    if args.sigma is None or args.p is None or args.q is None:
        raise CliUsage("weight-check needs --sigma, --p and --q (or --acceptance)")
    rec = power_weight_class(args.sigma, args.p, args.q, args.n)
    report = {"command": "weight-check", "sigma": args.sigma, "p": args.p, "q": args.q, "n": args.n,
              "in_Ap": rec.in_Ap, "in_RHq": rec.in_RHq}
    if args.refine:
        st = refinement_study(WeightSpec("power", args.sigma), args.p, args.q, n=args.n)
        report["refinement"] = st
        report["passed"] = bool(st["stable"]["Ap"] == rec.in_Ap and st["stable"]["RHq"] == rec.in_RHq)
    return report, _status(report, "weight-check")


def cmd_range(args, cfg):
    nu = _nu(args, cfg)
    j = args.j - 1
    r = theorem_range(nu, args.op, j)
    text = f"({r.p_lo:.16g}, {'inf' if math.isinf(r.p_hi) else f'{r.p_hi:.16g}'})"
    report = {"command": "range", "nu": list(nu.values), "op": args.op, "j": args.j, "range": [r.p_lo, r.p_hi],
              "text": text, "weights": r.describe(args.p)}
    if args.p is not None:
        report["contains"] = r.contains(args.p)
        if r.contains(args.p):
            report["A_index"] = r.ap_index(args.p)
            report["RH_index"] = r.rh_index(args.p)
    return report, EX_OK


def cmd_probe_norms(args, cfg):
    if args.offdiag:
        r = checks.check_offdiagonal(c_candidates=cfg.c_candidates)
        return r, _status(r, "offdiag")
    nu = _one_dim(_nu(args, cfg))
    g = Grid(log_linear_breaks(x_min=1e-6, x_max=12.0, per_decade=2, width=0.25), order=16)
    fam = default_test_family(g, nu, cfg.seed)
    N = cfg.spectral_N
    if args.op == "riesz":
        op = lambda f: synthesize(riesz_apply_spectral(expand(f, nu, N)), g)
    elif args.op == "squareG":
        op = lambda f: square_G(f, nu, cfg.time_quadrature(), N=N)
    else:
        raise CliUsage("probe-norms --op must be riesz or squareG")
    outs = [op(f) for f in fam]
    w = None if args.sigma == 0 else (lambda x: x**args.sigma)
    rows = [{"p": p, "sigma": args.sigma, "ratio": op_norm_probe(op, p, w, fam, outs)} for p in _floats(args.p)]
    return {"command": "probe-norms", "op": args.op, "nu": nu, "N": N, "rows": rows}, EX_OK


# ---------------------------------------------------------------- parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliUsage(f"{self.format_usage()}{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    epilog = "acceptance criteria:\n" + "\n".join(f"  {k:>2}: laguerre-kit {v}" for k, v in CRITERION_COMMANDS.items())
    p = _Parser(prog="laguerre-kit", description="Laguerre heat kernels, identities and weighted estimates.",
                epilog=epilog, formatter_class=argparse.RawDescriptionHelpFormatter)
    common = _Parser(add_help=False)
    common.add_argument("--config", help="flat key = value file overriding default.cfg")
    common.add_argument("--format", choices=("json", "csv"))
    common.add_argument("--out", help="output path ('-' for stdout)")
    common.add_argument("--seed", type=int)
    common.add_argument("--nu", help="order, comma separated for n > 1")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("eval-phi", parents=[common], help="Laguerre functions")
    s.add_argument("--k", default="0")
    s.add_argument("--x", default="1")
    s.add_argument("--orthonormality", action="store_true")

    s = sub.add_parser("heat-kernel", parents=[common], help="heat kernel and derivative kernels")
    s.add_argument("--t", type=float, default=0.25)
    s.add_argument("--x", default="1")
    s.add_argument("--y", default="1")
    s.add_argument("--kind", default="p", choices=("p", "delta", "delta_star", "dt", "delta_dt", "delta_star_dt"))

    s = sub.add_parser("verify-bounds", parents=[common], help="fit kernel bound constants")
    s.add_argument("--claim", help=f"one of: {', '.join(CLAIMS)}")
    s.add_argument("--all", action="store_true")

    s = sub.add_parser("verify-identities", parents=[common], help="identity checks")
    s.add_argument("--set", required=True, choices=tuple(IDENTITY_SETS))

    s = sub.add_parser("riesz", parents=[common], help="Riesz transform")
    s.add_argument("--input", default="phi:1")
    s.add_argument("--x", default="0.5,1,2")
    s.add_argument("--route", default="both", choices=("spectral", "quadrature", "both"))
    s.add_argument("--closed-forms", action="store_true")

    s = sub.add_parser("square", parents=[common], help="square functions S and G")
    s.add_argument("--kind", default="G", choices=("S", "G"))
    s.add_argument("--input", default="phi:1")
    s.add_argument("--x", default="0.5,1,2")
    s.add_argument("--route", default="spectral", choices=("spectral", "kernel"))

    s = sub.add_parser("maximal", parents=[common], help="maximal functions")
    s.add_argument("--input", default="indicator:1,2")
    s.add_argument("--x", default="0.01,0.1,0.5,1,1.5,2,3,5")

    s = sub.add_parser("weight-check", parents=[common], help="power weight classes")
    s.add_argument("--sigma", type=float)
    s.add_argument("--p", type=float)
    s.add_argument("--q", type=float)
    s.add_argument("--n", type=int, default=1)
    s.add_argument("--refine", action="store_true")
    s.add_argument("--acceptance", action="store_true")

    s = sub.add_parser("range", parents=[common], help="admissible exponent range")
    s.add_argument("--op", required=True, choices=("maximal", "riesz", "squareS", "squareG"))
    s.add_argument("--j", type=int, default=1, help="coordinate index, 1-based")
    s.add_argument("--p", type=float)

    s = sub.add_parser("probe-norms", parents=[common], help="empirical weighted norm ratios")
    s.add_argument("--op", default="riesz")
    s.add_argument("--p", default="1.25,1.5,2,4,8")
    s.add_argument("--sigma", type=float, default=0.0)
    s.add_argument("--offdiag", action="store_true")
    return p


HANDLERS = {
    "eval-phi": cmd_eval_phi,
    "heat-kernel": cmd_heat_kernel,
    "verify-bounds": cmd_verify_bounds,
    "verify-identities": cmd_verify_identities,
    "riesz": cmd_riesz,
    "square": cmd_square,
    "maximal": cmd_maximal,
    "weight-check": cmd_weight_check,
    "range": cmd_range,
    "probe-norms": cmd_probe_norms,
}


def _join_negative_values(argv):
    # "--nu -0.75,0.4" would otherwise be read as an option
    out = []
    for tok in argv:
        if out and out[-1].startswith("--") and "=" not in out[-1] and re.match(r"^-[\d.]", tok):
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    argv = _join_negative_values(sys.argv[1:] if argv is None else list(argv))
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise CliUsage(parser.format_usage() + "laguerre-kit: error: a command is required")
        cfg = SweepConfig.load(args.config)
        if args.format:
            cfg.format = args.format
        if args.out:
            cfg.output = args.out
        if args.seed is not None:
            cfg.seed = args.seed
        report, status = HANDLERS[args.command](args, cfg)
    except (CliUsage, UsageError, DomainError, UnsupportedClaimError) as exc:
        stderr.write(f"{exc}\n")
        if not isinstance(exc, CliUsage):
            stderr.write(parser.format_usage())
        return EX_USAGE
    text = render(report, cfg.format)
    if cfg.output in ("-", ""):
        stdout.write(text)
    else:
        with open(cfg.output, "w") as fh:
            fh.write(text)
    if status == EX_VIOLATION:
        stderr.write("violation: " + json.dumps(_clean(report.get("certificate", {})), sort_keys=True) + "\n")
    return status


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
