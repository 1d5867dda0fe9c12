"""Command-line front end: body inspection, transforms, bound checks, discrepancy runs."""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from . import bodies as B
from . import bounds as V
from . import discrepancy as D
from . import fourier as F
from .errors import AccuracyError, ConfigurationError, DisclabError, UnsupportedBodyError
from .reports import atomic_write, dumps, rows_to_csv, to_jsonable

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _add_output(p):
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--no-timestamp", action="store_true", help="omit the timestamp field")
    p.add_argument("--threads", type=int, default=1, help="upper bound on worker threads")


def _add_body(p, required=True):
    p.add_argument("--body", required=required, help="body JSON file or inline JSON object")


def _add_grid(p, rho_min, rho_max, steps):
    p.add_argument("--theta-count", type=int, default=64)
    p.add_argument("--rho-min", type=float, default=rho_min)
    p.add_argument("--rho-max", type=float, default=rho_max)
    p.add_argument("--rho-steps", type=int, default=steps)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="disclab", description="Fourier decay of convex bodies and L2 discrepancy experiments")
    ap.add_argument("--version", action="version", version=f"disclab {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("body", help="geometric summary of a body")
    _add_body(p)
    p.add_argument("--theta", help="direction as comma-separated components")
    p.add_argument("--samples", type=int, default=11, help="section samples across the support")
    _add_output(p)

    p = sub.add_parser("fourier", help="evaluate the transform of the indicator along a ray")
    _add_body(p)
    p.add_argument("--theta", help="direction (default: first coordinate axis)")
    p.add_argument("--rho", type=float, nargs="+", help="explicit radii (overrides the grid)")
    p.add_argument("--rho-min", type=float, default=1.0)
    p.add_argument("--rho-max", type=float, default=512.0)
    p.add_argument("--rho-steps", type=int, default=10)
    p.add_argument("--method", choices=("section", "surface", "closed", "leading", "all"), default="section")
    p.add_argument("--tol", type=float, default=1e-10)
    _add_output(p)

    p = sub.add_parser("verify", help="run inequality checks")
    _add_body(p)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--check", choices=V.CHECK_NAMES, action="append")
    g.add_argument("--all", action="store_true")
    _add_grid(p, 8.0, 256.0, 11)
    p.add_argument("--alpha", type=float, default=0.25)
    p.add_argument("--beta", type=float, default=4.0)
    p.add_argument("--gamma", type=float)
    p.add_argument("--kappa", type=float, default=8.0)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--grid-size", type=int, default=1000)
    p.add_argument("--directions", type=int, default=10, help="random directions for the pointwise checks")
    p.add_argument("--seed", type=int, default=0)
    _add_output(p)

    p = sub.add_parser("discrepancy", help="L2 discrepancy of a point set")
    _add_body(p)
    p.add_argument("--gen", choices=D.GENERATORS, default="uniform-random")
    p.add_argument("--points", help="CSV point file (overrides --gen)")
    p.add_argument("--N", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--method", choices=("parseval", "mc", "both", "pairs", "shell"), default="both")
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--M", type=float, help="initial lattice truncation / outer shell radius")
    p.add_argument("--H", type=float, default=4.0, help="inner shell radius")
    p.add_argument("--floor", type=float, default=0.1, help="pass floor for the shell ratio")
    p.add_argument("--outer-radius", type=float, default=0.25, help="rescale the body to this outer radius; 0 keeps it")
    _add_output(p)

    p = sub.add_parser("experiment", help="D^2(N) scaling across generators")
    _add_body(p)
    p.add_argument("--gen", default="grid,kronecker,uniform-random", help="comma-separated generators")
    p.add_argument("--N", default="16,64,256,1024,4096", help="comma-separated increasing sizes")
    p.add_argument("--repeats", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--outer-radius", type=float, default=0.25)
    _add_output(p)
    return ap


def load_body(text: str) -> B.BodySpec:
    if text.lstrip().startswith("{"):
        obj = json.loads(text)
    else:
        path = Path(text)
        if not path.exists():
            raise ConfigurationError(f"body file not found: {text}")
        obj = json.loads(path.read_text())
    return B.body_from_json(obj)


def _vector(text: str | None, d: int) -> np.ndarray:
    if text is None:
        return np.eye(d)[0]
    try:
        v = np.array([float(x) for x in text.split(",")])
    except ValueError as exc:
        raise ConfigurationError(f"bad vector {text!r}") from exc
    return B.as_direction(v, d)


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigurationError(f"bad integer list {text!r}") from exc


def _resolved(args) -> dict:
    cfg = {k: v for k, v in vars(args).items() if k not in ("out", "format", "no_timestamp")}
    return to_jsonable(cfg)


def _fit(body: B.BodySpec, outer: float) -> B.BodySpec:
    return body if outer == 0 else D.fit_to_torus(body, outer)


# ---------------------------------------------------------------------------
# Subcommands; each returns (passed, payload, csv rows)
# ---------------------------------------------------------------------------

def cmd_body(args, body):
    info = {
        "body": B.body_to_json(body), "volume": B.volume(body), "inner_radius": B.inner_radius(body),
        "outer_radius": B.outer_radius(body), "diameter": B.diameter(body), "smooth": body.smooth,
    }
    if body.smooth:
        info["min_curvature_radius"] = B.min_curvature_radius(body)
    rows = []
    if args.theta is not None:
        th = _vector(args.theta, body.dimension)
        sup = B.support_interval(body, th)
        info["theta"] = th
        info["support"] = {"a": sup.a, "b": sup.b}
        if body.smooth:
            info["normal_point"] = B.normal_point(body, th)
            info["gauss_curvature"] = B.gauss_curvature(body, th)
        t = np.linspace(-sup.a, sup.b, max(args.samples, 2))
        vals = B.section_function(body, th, t)
        rows = [{"t": float(ti), "section": float(v)} for ti, v in zip(t, vals)]
        info["sections"] = rows
    return True, info, rows or [{k: v for k, v in info.items() if not isinstance(v, (dict, list, np.ndarray))}]


def cmd_fourier(args, body):
    th = _vector(args.theta, body.dimension)
    rhos = np.asarray(args.rho if args.rho else np.geomspace(args.rho_min, args.rho_max, args.rho_steps))
    methods = ("section", "surface", "closed", "leading") if args.method == "all" else (args.method,)
    cols = {}
    for m in methods:
        if m == "section":
            cols[m] = F.ft_via_section_many(body, th, rhos, args.tol)
        elif m == "closed":
            if not F.closed_form_available(body, th):
                raise UnsupportedBodyError(f"no closed form for {body.kind} in this direction")
            cols[m] = F.ft_closed_form_many(body, th, rhos)
        elif m == "leading":
            cols[m] = F.herz_leading_term_many(body, th, rhos)
        else:
            cols[m] = np.array([F.ft_via_surface(F.FourierQuery(body, th, float(r), args.tol)) for r in rhos])
    rows = []
    for i, r in enumerate(rhos):
        row = {"rho": float(r)}
        for m, v in cols.items():
            row[f"{m}_re"] = float(v[i].real)
            row[f"{m}_im"] = float(v[i].imag)
        rows.append(row)
    return True, {"body": B.body_to_json(body), "theta": th, "rows": rows}, rows


def cmd_verify(args, body):
    if args.all:
        checks = V.CHECK_NAMES
    else:
        checks = tuple(dict.fromkeys(args.check))
    scan = V.RatioScan.build(body, args.theta_count, args.rho_min, args.rho_max, args.rho_steps,
                             alpha=args.alpha, beta=args.beta, gamma=args.gamma, kappa=args.kappa,
                             tolerance=args.tol)
    reports, skipped = [], []
    for name in checks:
        try:
            reports.extend(V.run_suite(scan, (name,), args.directions, args.grid_size, args.seed))
        except UnsupportedBodyError as exc:
            if not args.all:
                raise
            skipped.append({"check": name, "reason": str(exc)})
    passed = all(r.passed for r in reports)
    for r in reports:
        print(r.summary(), file=sys.stderr)
    rows = [{"check": r.name, **row} for r in reports for row in r.rows]
    payload = {"body": B.body_to_json(body), "reports": [r.to_dict() for r in reports], "skipped": skipped,
               "passed": passed}
    return passed, payload, rows


def cmd_discrepancy(args, body):
    body = _fit(body, args.outer_radius)
    d = body.dimension
    if args.points:
        pts = D.PointSet.from_csv(Path(args.points).read_text())
    else:
        pts = D.generate_points(args.gen, args.N, d, args.seed)
    results = []
    passed = True
    details = {}
    if args.method in ("parseval", "both"):
        results.append(D.l2_discrepancy_parseval(pts, body, args.M))
    if args.method in ("mc", "both"):
        results.append(D.l2_discrepancy_mc(pts, body, args.samples, args.seed, threads=args.threads))
    if args.method == "pairs":
        results.append(D.l2_discrepancy_pairs(pts, body))
    if args.method == "both":
        pa, mc = results
        gap = abs(pa.value - mc.value)
        bound = 3.0 * (pa.error + mc.error)
        passed = gap <= bound
        details = {"difference": gap, "allowed": bound, "agree": passed}
    if args.method == "shell":
        M = args.M if args.M is not None else 4.0 * pts.N ** (1.0 / d)
        total, rep = D.cassels_montgomery(pts, D.LatticeShell(args.H, M), args.floor)
        passed = rep.passed
        details = rep.to_dict()
    records = [{**r.to_record(), "body": B.body_to_json(body), "generator": pts.generator} for r in results]
    payload = {"body": B.body_to_json(body), "N": pts.N, "generator": pts.generator, "results": records,
               "comparison": details, "passed": passed}
    rows = [{k: v for k, v in r.items() if k not in ("body", "history")} for r in records] or \
        [{k: v for k, v in details.items() if not isinstance(v, (dict, list))}]
    return passed, payload, rows


def cmd_experiment(args, body):
    body = _fit(body, args.outer_radius)
    gens = [g.strip() for g in args.gen.split(",") if g.strip()]
    for g in gens:
        if g not in D.GENERATORS:
            raise ConfigurationError(f"unknown generator {g!r}")
    res = D.scaling_experiment(body, gens, _int_list(args.N), args.repeats, args.seed)
    return res["passed"], res, res["rows"]


COMMANDS = {"body": cmd_body, "fourier": cmd_fourier, "verify": cmd_verify, "discrepancy": cmd_discrepancy,
            "experiment": cmd_experiment}


def _emit(args, payload: dict, rows: list[dict]):
    config = _resolved(args)
    if args.format == "json":
        doc = {"config": config, "result": payload, "version": __version__}
        if not args.no_timestamp:
            doc["timestamp"] = datetime.now(timezone.utc).isoformat()
        text = dumps(doc)
    else:
        header = {"config": config, "version": __version__}
        if not args.no_timestamp:
            header["timestamp"] = datetime.now(timezone.utc).isoformat()
        text = "# " + json.dumps(to_jsonable(header), sort_keys=True) + "\n" + rows_to_csv(rows)
    if args.out:
        atomic_write(args.out, text)
    else:
        sys.stdout.write(text)


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if hasattr(args, "seed") and os.environ.get("DISCLAB_SEED"):
        try:
            args.seed = int(os.environ["DISCLAB_SEED"])
        except ValueError:
            print("configuration error: DISCLAB_SEED must be an integer", file=sys.stderr)
            return EXIT_USAGE
    if args.threads < 1:
        print("configuration error: --threads must be positive", file=sys.stderr)
        return EXIT_USAGE
    body = None
    try:
        body = load_body(args.body)
        passed, payload, rows = COMMANDS[args.command](args, body)
    except UnsupportedBodyError as exc:
        smooth = body is None or body.smooth
        print(f"unsupported: {exc}" if smooth else "unsupported: non-smooth body", file=sys.stderr)
        return EXIT_USAGE
    except AccuracyError as exc:
        print(f"accuracy failure: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (DisclabError, ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _emit(args, payload, rows)
    return EXIT_PASS if passed else EXIT_FAIL


def main() -> None:
    sys.exit(run())
