"""Command line: ``fskmc {run,verify,benchmark,balance-demo,exact}``.

Exit codes: 0 success, 1 usage or configuration error, 2 verification failure.
"""
from __future__ import annotations

import argparse
import csv
import sys
import time


from .config import ConfigError, load_config

EXIT_OK, EXIT_USAGE, EXIT_VERIFY = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fskmc", description="Fractional-step parallel kinetic Monte Carlo")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="simulate a configuration file")
    run.add_argument("--config", required=True)
    run.add_argument("--seed", type=int)
    run.add_argument("--workers", type=int)
    run.add_argument("--output")
    run.add_argument("--schedule", choices=["lie", "strang", "random"])
    run.add_argument("--dt", type=float)
    run.add_argument("--time", type=float, dest="T")

    ver = sub.add_parser("verify", help="exact-matrix checks on a small ring")
    ver.add_argument("--size", type=int, default=6, help="ring length (oracle scale)")
    ver.add_argument("--cell", type=int, default=3)
    ver.add_argument("--beta", type=float, default=1.0)
    ver.add_argument("--K", type=float, default=1.0)
    ver.add_argument("--h", type=float, default=0.0)
    ver.add_argument("--rate", type=float, default=0.1, help="c_a = c_d for the defect-order checks")
    ver.add_argument("--dt", type=float, default=0.2)

    ben = sub.add_parser("benchmark", help="wall time of serial and partitioned runs")
    ben.add_argument("--config", help="take model, dt and T from a config file")
    ben.add_argument("--sizes", type=_ints, default=[2**13, 2**14, 2**15, 2**16, 2**17])
    ben.add_argument("--workers", type=_ints, default=[1, 2])
    ben.add_argument("--cell", type=int, default=16)
    ben.add_argument("--dt", type=float, default=1.0)
    ben.add_argument("--time", type=float, dest="T", default=10.0)
    ben.add_argument("--schedule", choices=["lie", "strang", "random"], default="lie")
    ben.add_argument("--model", choices=["arrhenius", "zgb"], default="arrhenius")
    ben.add_argument("--seed", type=int, default=0)
    ben.add_argument("--repeats", type=int, default=3)
    ben.add_argument("--output", default="benchmark.csv")

    bal = sub.add_parser("balance-demo", help="workload re-balancing on a 1D coverage gradient")
    bal.add_argument("--size", type=int, default=1536)
    bal.add_argument("--cells", type=int, default=12)
    bal.add_argument("--workers", type=int, default=4)
    bal.add_argument("--dt", type=float, default=0.5)
    bal.add_argument("--seed", type=int, default=0)
    bal.add_argument("--output", help="workload CSV")

    ex = sub.add_parser("exact", help="tables of the exact equilibrium solutions")
    ex.add_argument("--beta", type=_floats, default=[1.0, 2.0])
    ex.add_argument("--K", type=float, default=1.0)
    ex.add_argument("--h", type=_floats, default=[0.0, 0.5, 1.0, 1.5, 2.0])
    ex.add_argument("--k-max", type=int, default=5)
    ex.add_argument("--output")
    return p


def cmd_run(args) -> int:
    from .experiments import run_config, write_run_outputs

    cfg = load_config(args.config).with_overrides(seed=args.seed, workers=args.workers, output=args.output,
                                                   schedule=args.schedule, dt=args.dt, T=args.T)
    out = run_config(cfg)
    write_run_outputs(out, cfg.output, cfg.workload_output)
    print(f"wrote {cfg.output} ({len(out.rows)} rows, {out.jumps} jumps, {out.wall_seconds:.2f} s)")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .lattice import Lattice
    from .models import ArrheniusModel, ArrheniusParams
    from .partition import strip_partition
    from . import verification as V

    lat = Lattice((args.size,))
    edges = list(range(0, args.size + 1, args.cell))
    model = ArrheniusModel(ArrheniusParams(1.0, 1.0, args.beta, args.K, args.h))
    slow = ArrheniusModel(ArrheniusParams(args.rate, args.rate, args.beta, args.K, args.h))
    flat = ArrheniusModel(ArrheniusParams(1.0, 1.0, 0.0, args.K, args.h))
    part = strip_partition(lat, edges)
    lines: list[tuple[str, float, str, bool]] = []

    def check(name, value, tol, ok):
        lines.append((name, value, tol, bool(ok)))

    t0 = time.perf_counter()
    v = V.generator_additivity(model, part)
    check("generator additivity max|Q - sum Q_m|", v, "<= 1e-12", v <= 1e-12)
    for dt in (0.1, 1.0):
        v = V.same_color_factorization(model, part, dt, "E")
        check(f"same-color factorization dt={dt}", v, "<= 1e-10", v <= 1e-10)
    rep = V.commutator_support_check(model, part)
    check("commutator = boundary commutator", rep.full_vs_boundary, "<= 1e-10", rep.full_vs_boundary <= 1e-10)
    for k, val in rep.interior_terms.items():
        check(f"interior commutator {k}", val, "<= 1e-10", val <= 1e-10)
    G = V.split_generators(slow, part)
    r = V.defect_ratio(G, args.dt, "lie")
    check(f"Lie defect ratio dt={args.dt}", r, "in [3.3, 4.7]", 3.3 <= r <= 4.7)
    r = V.defect_ratio(G, args.dt, "strang")
    check(f"Strang defect ratio dt={args.dt}", r, "in [6, 10]", 6 <= r <= 10)
    r = V.defect_ratio(G, args.dt, "random")
    check(f"random-schedule defect ratio dt={args.dt}", r, "in [3.3, 4.7]", 3.3 <= r <= 4.7)
    v = V.averaged_generator_gap(G)
    check("averaged generator (Q^E+Q^O)/2 = Q/2", v, "<= 1e-12", v <= 1e-12)
    Gc = V.split_generators(flat, part)
    v = V.splitting_defect(Gc, 1.0, "lie")
    check("commuting case (beta=0) Lie defect", v, "<= 1e-10", v <= 1e-10)
    elapsed = time.perf_counter() - t0
    failed = 0
    for name, value, tol, ok in lines:
        failed += not ok
        print(f"{'PASS' if ok else 'FAIL'}  {name:45s} {value:.3e}  ({tol})")
    print(f"{len(lines) - failed}/{len(lines)} checks passed in {elapsed:.1f} s")
    return EXIT_OK if failed == 0 else EXIT_VERIFY


def cmd_benchmark(args) -> int:
    from .experiments import BENCH_HEADER, benchmark_partitioned, benchmark_serial, loglog_slope

    dt, T, sched, model = args.dt, args.T, args.schedule, args.model
    if args.config:
        cfg = load_config(args.config)
        dt, T, sched, model = cfg.dt, cfg.T, cfg.schedule, ("zgb" if cfg.model.name == "zgb" else "arrhenius")
    rows = []
    part_times = {}
    for n in args.sizes:
        dims = (n,) if model == "arrhenius" else (int(round(n**0.5)),) * 2
        serial = benchmark_serial(dims, T, model, args.seed, args.repeats)
        rows.append(serial)
        for w in args.workers:
            row = benchmark_partitioned(dims, args.cell, w, dt, T, model, args.seed, sched, args.repeats)
            rows.append(row)
            if w == args.workers[0]:
                part_times[row.size] = row.wall_seconds
            print(f"N={row.size:8d} workers={w} wall={row.wall_seconds:.3f}s  serial={serial.wall_seconds:.3f}s")
    with open(args.output, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(BENCH_HEADER)
        wr.writerows(r.as_tuple() for r in rows)
    if len(part_times) > 1:
        print(f"log-log slope of partitioned wall time vs N: {loglog_slope(list(part_times), list(part_times.values())):.3f}")
    print(f"wrote {args.output}")
    return EXIT_OK


def cmd_balance_demo(args) -> int:
    from .experiments import balance_demo

    rep = balance_demo(args.size, args.cells, args.workers, args.dt, seed=args.seed)
    print("cell workload shares:", " ".join(f"{w:.3f}" for w in rep.weights))
    print(f"imbalance (max share x cells): {rep.imbalance:.2f}")
    print(f"equal-count assignment  {rep.before.groups}  max load {rep.max_before:.3f}")
    print(f"re-balanced assignment  {rep.after.groups}  max load {rep.max_after:.3f}")
    print(f"exhaustive contiguous optimum max load {rep.exhaustive_best:.3f}")
    print(f"max-load ratio after/before: {rep.reduction:.3f}")
    print(f"strip edges {rep.old_edges} -> {rep.new_edges}")
    print("jumps on resized strips over one window:", " ".join(str(int(c)) for c in rep.strip_counts_after))
    if args.output:
        with open(args.output, "w", newline="", encoding="utf-8") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["window", "cell", "jumps"])
            wr.writerows((0, m, int(j)) for m, j in enumerate(rep.counts))
    return EXIT_OK


def cmd_exact(args) -> int:
    from .exact import IsingExactParams, critical_beta, exact_1d_correlation, exact_1d_coverage, exact_2d_coverage

    header = ["dimension", "beta", "K", "h", "coverage"] + [f"lambda_{k}" for k in range(args.k_max + 1)]
    rows = []
    for b in args.beta:
        for h in args.h:
            p = IsingExactParams(b, args.K, h)
            rows.append(["1", b, args.K, h, exact_1d_coverage(p)]
                        + [exact_1d_correlation(p, 0, k) for k in range(args.k_max + 1)])
    for b in args.beta:
        p = IsingExactParams(b, args.K, 2 * args.K)
        rows.append(["2", b, args.K, 2 * args.K, exact_2d_coverage(p)] + [""] * (args.k_max + 1))
    fh = open(args.output, "w", newline="", encoding="utf-8") if args.output else sys.stdout
    try:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for r in rows:
            wr.writerow([f"{x:.6f}" if isinstance(x, float) else x for x in r])
    finally:
        if args.output:
            fh.close()
    print(f"# 2D critical beta for K={args.K}: {critical_beta(args.K):.6f}", file=sys.stderr)
    return EXIT_OK


COMMANDS = {"run": cmd_run, "verify": cmd_verify, "benchmark": cmd_benchmark,
            "balance-demo": cmd_balance_demo, "exact": cmd_exact}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
