"""``sphbm`` command-line front end.

Exit codes: 0 success, 1 a validation check failed, 2 usage or
configuration error, 3 numeric or convergence failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from contextlib import contextmanager

import numpy as np

from .errors import ConvergenceError, DomainError, RegimeError
from .rng import RngStream

EXIT_OK, EXIT_FAILED, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


class ConfigError(Exception):
    """Bad flags or input files."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def _default_seed() -> int:
    raw = os.environ.get("SPHBM_SEED")
    if raw is None or raw == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"SPHBM_SEED must be an integer, got {raw!r}") from None


def _positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"must be positive and finite: {text!r}")
    return v


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text!r}")
    return v


def _vector(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {text!r}") from None


def _fmt(v) -> str:
    return repr(float(v))


@contextmanager
def _output(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        try:
            fh = open(path, "w", newline="")
        except OSError as exc:
            raise ConfigError(f"cannot open output {path}: {exc}") from exc
        with fh:
            yield fh


def _add_common(p, fmt_choices=("csv", "jsonl", "svg")):
    p.add_argument("-t", type=_positive_float, required=True, help="time horizon")
    p.add_argument("-N", type=_positive_int, default=1, help="number of draws")
    p.add_argument("--seed", type=int, default=None, help="seed (default: $SPHBM_SEED or 0)")
    p.add_argument("--approx", action="store_true", help="allow the Gaussian lineage approximation below the exact floor")
    p.add_argument("-o", "--output", default=None, help="output file (default: stdout)")
    p.add_argument("--format", choices=fmt_choices, default=fmt_choices[0])


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sphbm", description="Exact Brownian motion on spheres and projective spaces.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sample-sphere", help="draw increments on S^(d-1)")
    p.add_argument("-d", type=int, required=True, help="ambient dimension (sphere S^(d-1))")
    _add_common(p)
    p.add_argument("--start", type=_vector, default=None, help="comma-separated start (default e_d)")
    p.add_argument("--radius", type=_positive_float, default=1.0)
    p.add_argument("--instrument", action="store_true", help="add X and cos_dist columns")
    p.add_argument("--bins", type=_positive_int, default=50, help="histogram bins for --format svg")

    p = sub.add_parser("sample-projective", help="draw increments on FP^n")
    p.add_argument("--field", required=True, help="R, C or H")
    p.add_argument("-n", type=int, required=True, help="projective dimension")
    _add_common(p, ("jsonl", "csv"))
    p.add_argument("--start", type=_vector, default=None, help="representative of the start (default e_(n+1))")

    p = sub.add_parser("pmf", help="mass function of the lineage count A_inf(t)")
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("-t", type=_positive_float, required=True)
    p.add_argument("--mc-fallback", action="store_true",
                   help="estimate by simulating the death process if the series does not converge")
    p.add_argument("-N", type=_positive_int, default=10_000, help="Monte Carlo draws for --mc-fallback")
    p.add_argument("--lineages", type=_positive_int, default=None,
                   help="initial lineages for --mc-fallback (default max(1000, 20/t))")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("-o", "--output", default=None)

    p = sub.add_parser("validate", help="run a test manifest")
    p.add_argument("manifest", nargs="?", default=None, help="manifest JSON (default: the shipped one)")
    p.add_argument("--only", default=None, help="run only entries of this test")
    p.add_argument("-o", "--output", default=None, help="JSONL report (default: stdout)")

    p = sub.add_parser("bench", help="time the exact sampler")
    p.add_argument("-N", type=_positive_int, default=2000, help="increments per timing")
    p.add_argument("--repeats", type=_positive_int, default=5)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--ts", type=_vector, default=None, help="comma-separated times")
    p.add_argument("--ds", type=_vector, default=None, help="comma-separated dimensions")
    p.add_argument("--dt", type=_positive_float, default=1e-4, help="Euler-Maruyama step for the contrast row")
    p.add_argument("--no-em", action="store_true", help="skip the Euler-Maruyama contrast row")
    p.add_argument("-o", "--output", default=None)

    p = sub.add_parser("plot", help="SVG histogram of cos_dist from a sample-sphere CSV")
    p.add_argument("input", help="CSV written by sample-sphere")
    p.add_argument("--start", type=_vector, default=None, help="start used for the sample (default e_d)")
    p.add_argument("--bins", type=_positive_int, default=50)
    p.add_argument("-o", "--output", default=None)
    return parser


def _seed(args) -> int:
    return _default_seed() if args.seed is None else args.seed


def _start_vector(start, d: int, radius: float = 1.0) -> np.ndarray:
    if start is None:
        z = np.zeros(d)
        z[-1] = radius
        return z
    if start.size != d:
        raise ConfigError(f"--start has {start.size} coordinates, expected {d}")
    return start


def _cos_svg(cos_dist, d: int, t: float, bins: int) -> str:
    from .svgplot import cos_dist_density, histogram_svg

    edges = np.linspace(-1.0, 1.0, bins + 1)
    curve = cos_dist_density(d, t, edges) if d >= 2 else None
    return histogram_svg(cos_dist, edges, curve, title=f"cos_dist, d={d}, t={t:g}, N={len(cos_dist)}")


def cmd_sample_sphere(args) -> int:
    from .sphere import sample_increment

    d = args.d
    if d < 2:
        raise ConfigError("-d must be >= 2")
    z = _start_vector(args.start, d, args.radius)
    rng = RngStream(_seed(args))
    # radius R runs the unit motion for t / R^2; X and cos_dist refer to it
    draw = sample_increment(z / args.radius, args.t / args.radius**2, rng, args.N, approx=args.approx)
    points, x, cos = args.radius * draw.point, np.asarray(draw.radial), draw.cos_dist
    with _output(args.output) as fh:
        if args.format == "svg":
            fh.write(_cos_svg(cos, d, args.t / args.radius**2, args.bins))
        elif args.format == "jsonl":
            for i in range(args.N):
                rec = {"t": args.t, "point": [float(v) for v in points[i]]}
                if args.instrument:
                    rec["X"] = float(x[i])
                    rec["cos_dist"] = float(cos[i])
                fh.write(json.dumps(rec) + "\n")
        else:
            w = csv.writer(fh, lineterminator="\n")
            header = ["sample_id", "t"] + [f"x{j}" for j in range(1, d + 1)]
            if args.instrument:
                header += ["X", "cos_dist"]
            w.writerow(header)
            tt = _fmt(args.t)
            for i in range(args.N):
                row = [str(i), tt] + [_fmt(v) for v in points[i]]
                if args.instrument:
                    row += [_fmt(x[i]), _fmt(cos[i])]
                w.writerow(row)
    return EXIT_OK


def cmd_sample_projective(args) -> int:
    from .projective import ProjectivePoint, sample_projective_increment, sphere_dimension

    field_tag = args.field
    d = sphere_dimension(field_tag, args.n)
    start = ProjectivePoint(field_tag, args.n, _start_vector(args.start, d))
    reps = sample_projective_increment(start, args.t, RngStream(_seed(args)), args.N, approx=args.approx)
    with _output(args.output) as fh:
        if args.format == "jsonl":
            for rep in reps:
                fh.write(json.dumps({"field": field_tag, "n": args.n, "t": args.t,
                                     "rep": [float(v) for v in rep]}) + "\n")
        else:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["sample_id", "field", "n", "t"] + [f"r{j}" for j in range(1, d + 1)])
            for i, rep in enumerate(reps):
                w.writerow([str(i), field_tag, str(args.n), _fmt(args.t)] + [_fmt(v) for v in rep])
    return EXIT_OK


def cmd_pmf(args) -> int:
    from .wright_fisher import DeathProcessLaw, simulate_death_process, write_pmf_csv

    law = DeathProcessLaw(args.theta, args.t)
    try:
        text = write_pmf_csv(law)
    except ConvergenceError as exc:
        if not args.mc_fallback:
            raise
        n = args.lineages or max(1000, math.ceil(20.0 / args.t))
        print(f"sphbm pmf: {exc}; estimating from {args.N} death-process runs with {n} lineages",
              file=sys.stderr)
        sim = simulate_death_process(n, args.theta, args.t, RngStream(_seed(args)), args.N,
                                     entrance=True, chunk=max(1, 4_000_000 // n))
        q = np.bincount(sim) / sim.size
        lo = int(np.flatnonzero(q)[0])
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["m", "q"])
        for m in range(lo, q.size):
            w.writerow([m, f"{q[m]:.17g}"])
        text = buf.getvalue()
    with _output(args.output) as fh:
        fh.write(text)
    return EXIT_OK


def cmd_validate(args) -> int:
    from .suite import default_manifest_path, load_manifest, run_manifest

    entries = load_manifest(args.manifest or default_manifest_path())
    if args.only is not None and not any(e["test"] == args.only for e in entries):
        raise ConfigError(f"no manifest entries for test {args.only!r}")
    reports = run_manifest(entries, only=args.only, log=lambda line: print(line, file=sys.stderr))
    with _output(args.output) as fh:
        for rep in reports:
            fh.write(rep.to_json() + "\n")
    failed = sum(not r.passed for r in reports)
    print(f"{len(reports) - failed}/{len(reports)} checks passed", file=sys.stderr)
    return EXIT_OK if failed == 0 else EXIT_FAILED


def cmd_bench(args) -> int:
    from .bench import DEFAULT_DS, DEFAULT_TS, bench_trends, rows_to_csv, run_bench

    ts = tuple(float(v) for v in args.ts) if args.ts is not None else DEFAULT_TS
    ds = tuple(int(v) for v in args.ds) if args.ds is not None else DEFAULT_DS
    if any(v <= 0 for v in ts) or any(v < 2 for v in ds):
        raise ConfigError("--ts must be positive and --ds must be >= 2")
    rows = run_bench(ts, ds, n=args.N, repeats=args.repeats, seed=_seed(args),
                     em_dt=None if args.no_em else args.dt)
    with _output(args.output) as fh:
        fh.write(rows_to_csv(rows))
    for name, ok in bench_trends(rows).items():
        print(f"{name}: {'yes' if ok else 'no'}", file=sys.stderr)
    return EXIT_OK


def _read_sample_csv(path):
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    if len(rows) < 2:
        raise ConfigError(f"{path} holds no samples")
    header = rows[0]
    coords = [i for i, h in enumerate(header) if h.startswith("x") and h[1:].isdigit()]
    if "t" not in header or len(coords) < 2:
        raise ConfigError(f"{path} is not a sample-sphere CSV (need t and x1..xd columns)")
    try:
        data = np.array([[float(r[i]) for i in range(len(header))] for r in rows[1:]])
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"{path}: malformed row ({exc})") from exc
    return header, coords, data


def cmd_plot(args) -> int:
    header, coords, data = _read_sample_csv(args.input)
    ts = data[:, header.index("t")]
    if not np.all(ts == ts[0]) or not ts[0] > 0:
        raise ConfigError("plot needs a single positive time horizon in the input")
    d = len(coords)
    pts = data[:, coords]
    radius = float(np.linalg.norm(pts[0]))
    if "cos_dist" in header:
        cos = data[:, header.index("cos_dist")]
    else:
        z = _start_vector(args.start, d, radius)
        cos = pts @ z / radius**2
    with _output(args.output) as fh:
        fh.write(_cos_svg(np.clip(cos, -1.0, 1.0), d, float(ts[0]) / radius**2, args.bins))
    return EXIT_OK


COMMANDS = {
    "sample-sphere": cmd_sample_sphere,
    "sample-projective": cmd_sample_projective,
    "pmf": cmd_pmf,
    "validate": cmd_validate,
    "bench": cmd_bench,
    "plot": cmd_plot,
}


def main(argv=None) -> int:
    from .suite import ManifestError

    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except RegimeError as exc:
        print(f"sphbm: error: {exc} (CLI flag: --approx)", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, ManifestError, DomainError) as exc:
        print(f"sphbm: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, ArithmeticError, FloatingPointError) as exc:
        print(f"sphbm: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
