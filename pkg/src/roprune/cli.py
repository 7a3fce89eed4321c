"""Command-line front end: ``roprune {select,hull,lp2,lp3,gen,bench}``.

Exit status: 0 success, 1 oracle mismatch or infeasible LP, 2 usage error or
malformed input.
"""

import argparse
import csv
import hashlib
import io
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .formats import fmt_real, json_real, read_any, write_csv, write_rops
from .selection import SelectConfig, choose_k, k_from_epsilon, select_index
from .workspace import FormatError, WorkspaceMeter

REPORT_FIELDS = ("algorithm", "n", "k", "peak_words", "input_reads", "wall_time_ms", "digest")


@dataclass
class RunReport:
    algorithm: str
    n: int
    k: int
    peak_words: int
    input_reads: int
    wall_time_ms: float
    digest: str


class Mismatch(Exception):
    pass


# --- runs ---------------------------------------------------------------------


def _depth(args, n):
    if args.k is not None:
        return args.k
    if args.epsilon is not None:
        return k_from_epsilon(args.epsilon)
    return choose_k(max(n, 2))


def run_select(view, r, k, batch=1, oracle=False):
    meter = WorkspaceMeter()
    n = view.length
    if n == 0:
        raise ValueError("selection from an empty file")
    if not 1 <= r <= n:
        raise ValueError(f"rank {r} outside [1, {n}]")
    v, _ = select_index(view, r, SelectConfig(k=k, batch=batch), meter)
    text = fmt_real(v) + "\n"
    if oracle:
        from .testkit import oracle_select

        if oracle_select(view.data[:, 0].tolist(), r) != v:
            raise Mismatch("selection differs from the sorted-copy oracle")
    return text, meter


def run_hull(view, sorted_input, k, oracle=False):
    meter = WorkspaceMeter()
    if sorted_input:
        from .hull_sorted import convex_hull

        idx = convex_hull(view, k=k, meter=meter)
    else:
        from .hull_blocks import hull_unsorted

        idx = hull_unsorted(view, k=k, meter=meter)
    data = view.data
    pts = [(float(data[i, 0]), float(data[i, 1])) for i in idx]
    text = "".join(fmt_real(x) + "," + fmt_real(y) + "\n" for x, y in pts)
    if oracle:
        from .testkit import oracle_hull

        if oracle_hull(data.tolist()) != pts:
            raise Mismatch("hull differs from the monotone-chain oracle")
    return text, meter


def run_lp(view, objective, dim, k, oracle=False):
    meter = WorkspaceMeter()
    if dim == 2:
        from .lp2d import solve_lp2 as solve
    else:
        from .lp3d import solve_lp3 as solve
    res = solve(view, objective, k=k, meter=meter)
    out = {"status": res.status}
    if res.status == "optimal":
        out["x"] = [json_real(v) for v in res.x]
        out["value"] = json_real(res.value)
    text = json.dumps(out, separators=(",", ":")) + "\n"
    if oracle:
        from .testkit import oracle_lp2, oracle_lp3, same_lp

        ref = (oracle_lp2 if dim == 2 else oracle_lp3)(view.data, objective)
        if not same_lp(ref, res, 1e-9 if dim == 2 else 1e-8):
            raise Mismatch(f"LP result differs from the oracle ({ref.status})")
    return text, meter, res.status


# --- subcommands --------------------------------------------------------------


def _emit(args, text):
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _report(args, algorithm, view, k, meter, t0, text):
    rep = RunReport(
        algorithm=algorithm,
        n=view.length,
        k=k,
        peak_words=meter.peak_words,
        input_reads=view.reads,
        wall_time_ms=round((time.perf_counter() - t0) * 1000.0, 3),
        digest=hashlib.sha256(text.encode()).hexdigest(),
    )
    if args.meter is None:
        return
    blob = json.dumps(asdict(rep), sort_keys=True) + "\n"
    if args.meter == "-":
        sys.stderr.write(blob)
    else:
        with open(args.meter, "w", encoding="utf-8") as fh:
            fh.write(blob)


def cmd_select(args):
    view = read_any(args.file, 1)
    k = _depth(args, view.length)
    t0 = time.perf_counter()
    text, meter = run_select(view, args.r, k, args.batch, args.oracle_check)
    _emit(args, text)
    _report(args, "select", view, k, meter, t0, text)
    return 0


def cmd_hull(args):
    view = read_any(args.file, 2)
    k = _depth(args, view.length)
    t0 = time.perf_counter()
    text, meter = run_hull(view, args.sorted, k, args.oracle_check)
    _emit(args, text)
    _report(args, "hull-sorted" if args.sorted else "hull-unsorted", view, k, meter, t0, text)
    return 0


def _cmd_lp(args, dim, objective):
    view = read_any(args.file, dim + 1)
    k = _depth(args, view.length)
    t0 = time.perf_counter()
    text, meter, status = run_lp(view, objective, dim, k, args.oracle_check)
    _emit(args, text)
    _report(args, "lp%d" % dim, view, k, meter, t0, text)
    return 1 if status == "infeasible" else 0


def cmd_lp2(args):
    return _cmd_lp(args, 2, (args.c1, args.c2))


def cmd_lp3(args):
    return _cmd_lp(args, 3, (args.d1, args.d2, args.d3))


def cmd_gen(args):
    from .testkit import InstanceSpec, generate

    spec = InstanceSpec(
        kind=args.kind, n=args.n, seed=args.seed, bound=args.bound, dup_x=args.dup_x,
        collinear=args.collinear, parallel=args.parallel, mode=args.mode,
    )
    inst = generate(spec)
    if spec.kind in ("lp2", "lp3"):
        records, objective = inst
        sys.stderr.write("objective " + " ".join(fmt_real(v) for v in objective) + "\n")
    else:
        records = inst
    arity = {"points": 2, "points-sorted": 2, "lp2": 3, "lp3": 4}[spec.kind]
    if args.format == "rops":
        if not args.out:
            raise ValueError("binary output needs --out")
        write_rops(args.out, records, arity)
    elif args.out:
        write_csv(args.out, records)
    else:
        buf = io.StringIO()
        for row in np.asarray(records).reshape(-1, arity):
            buf.write(",".join(fmt_real(v) for v in row) + "\n")
        sys.stdout.write(buf.getvalue())
    return 0


def bench_one(algorithm, n, seed, k, batch):
    """One metered run on a generated instance; returns a :class:`RunReport`."""
    from .testkit import InstanceSpec, generate
    from .workspace import view_over_array

    kind = {"select": "points", "hull-sorted": "points-sorted", "hull-unsorted": "points",
            "lp2": "lp2", "lp3": "lp3"}[algorithm]
    bound = 2**20 if kind.startswith("points") else 1000
    inst = generate(InstanceSpec(kind, n, seed=seed, bound=bound, mode="optimal"))
    kk = k if k is not None else choose_k(max(n, 2))
    t0 = time.perf_counter()
    if algorithm == "select":
        view = view_over_array(inst[:, 0], 1)
        text, meter = run_select(view, (n + 1) // 2, kk, batch or 1)
    elif algorithm.startswith("hull"):
        view = view_over_array(inst, 2)
        if algorithm == "hull-sorted":
            from .hull_sorted import convex_hull

            meter = WorkspaceMeter()
            idx = convex_hull(view, k=kk, batch=batch, meter=meter)
        else:
            from .hull_blocks import hull_unsorted

            meter = WorkspaceMeter()
            idx = hull_unsorted(view, k=kk, batch=batch, meter=meter)
        text = "".join("%d\n" % i for i in idx)
    else:
        rows, objective = inst
        dim = 2 if algorithm == "lp2" else 3
        view = view_over_array(rows, dim + 1)
        text, meter, _ = run_lp(view, objective, dim, kk)
    return RunReport(
        algorithm=algorithm, n=n, k=kk, peak_words=meter.peak_words, input_reads=view.reads,
        wall_time_ms=round((time.perf_counter() - t0) * 1000.0, 3),
        digest=hashlib.sha256(text.encode()).hexdigest(),
    )


def cmd_bench(args):
    sizes = [2**e for e in range(args.min_exp, args.max_exp + 1)]
    jobs = [(args.algorithm, n, args.seed + r, args.k, args.batch)
            for n in sizes for r in range(args.repeats)]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as ex:
            reports = list(ex.map(bench_one, *zip(*jobs)))
    else:
        reports = [bench_one(*j) for j in jobs]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_FIELDS)
    for rep in reports:
        w.writerow([getattr(rep, f) for f in REPORT_FIELDS])
    _emit(args, buf.getvalue())
    return 0


# --- argument parsing -----------------------------------------------------------


def _common(p):
    p.add_argument("--k", type=int, default=None, help="recursion depth (default: choose_k(n))")
    p.add_argument("--epsilon", type=float, default=None, help="space exponent; k = 1/epsilon - 1")
    p.add_argument("--meter", nargs="?", const="-", default=None, metavar="FILE",
                   help="write the run report as JSON (stderr if no FILE)")
    p.add_argument("--oracle-check", action="store_true", help="compare with the testkit oracle")
    p.add_argument("--out", default=None, help="write results here instead of stdout")


def build_parser():
    ap = argparse.ArgumentParser(prog="roprune", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("select", help="r-th smallest value of a one-column file")
    p.add_argument("file")
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--batch", type=int, default=1)
    _common(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("hull", help="convex hull of a point file")
    p.add_argument("file")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--sorted", action="store_true", help="points are sorted by x")
    g.add_argument("--unsorted", dest="sorted", action="store_false")
    _common(p)
    p.set_defaults(func=cmd_hull)

    p = sub.add_parser("lp2", help="minimise c1 x1 + c2 x2 over rows a,b,beta (a x1 + b x2 >= beta)")
    p.add_argument("file")
    p.add_argument("--c1", type=float, required=True)
    p.add_argument("--c2", type=float, required=True)
    _common(p)
    p.set_defaults(func=cmd_lp2)

    p = sub.add_parser("lp3", help="minimise d . x over rows a,b,c,beta")
    p.add_argument("file")
    p.add_argument("--d1", type=float, required=True)
    p.add_argument("--d2", type=float, required=True)
    p.add_argument("--d3", type=float, required=True)
    _common(p)
    p.set_defaults(func=cmd_lp3)

    p = sub.add_parser("gen", help="write a generated instance")
    p.add_argument("--kind", required=True, choices=["points-sorted", "points", "lp2", "lp3"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bound", type=int, default=1000)
    p.add_argument("--dup-x", type=float, default=0.0)
    p.add_argument("--collinear", type=float, default=0.0)
    p.add_argument("--parallel", type=float, default=0.0)
    p.add_argument("--mode", default="mixed", choices=["optimal", "infeasible", "unbounded", "mixed"])
    p.add_argument("--format", default="csv", choices=["csv", "rops"])
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="CSV of run reports over n = 2**min_exp .. 2**max_exp")
    p.add_argument("--algorithm", required=True,
                   choices=["select", "hull-sorted", "hull-unsorted", "lp2", "lp3"])
    p.add_argument("--min-exp", type=int, default=10)
    p.add_argument("--max-exp", type=int, default=14)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--batch", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except Mismatch as e:
        sys.stderr.write(f"roprune: mismatch: {e}\n")
        return 1
    except (FormatError, ValueError, OSError) as e:
        sys.stderr.write(f"roprune: {e}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
