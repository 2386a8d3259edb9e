"""Command-line entry points: derive instances, solve, benchmark, validate."""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

from . import bnb, instances, validate
from .heuristic_pricer import AghParams

CSV_FIELDS = [
    "instance", "mode", "n", "Q", "lp", "lp_time", "lpc", "lpc_time",
    "ip", "ip_time", "vehicles", "splits", "nodes", "cuts", "status",
]


@dataclass
class RunRecord:
    instance: str
    mode: str
    n: int
    Q: int
    lp: float | None
    lp_time: float
    lpc: float | None
    lpc_time: float
    ip: float | None
    ip_time: float
    vehicles: int
    splits: int
    nodes: int
    cuts: int
    status: str

    def row(self) -> dict:
        def fmt(x):
            return "" if x is None else f"{x:.1f}"

        return {
            "instance": self.instance,
            "mode": self.mode,
            "n": self.n,
            "Q": self.Q,
            "lp": fmt(self.lp),
            "lp_time": f"{self.lp_time:.1f}",
            "lpc": fmt(self.lpc),
            "lpc_time": f"{self.lpc_time:.1f}",
            "ip": fmt(self.ip),
            "ip_time": f"{self.ip_time:.1f}",
            "vehicles": self.vehicles,
            "splits": self.splits,
            "nodes": self.nodes,
            "cuts": self.cuts,
            "status": self.status,
        }


def params_from_args(args) -> bnb.RunParams:
    agh = AghParams(max_iter=args.agh_max_iter)
    return bnb.RunParams(
        time_limit=args.time_limit,
        use_cuts=args.cuts == "on",
        use_agh=args.agh == "on",
        bidirectional=args.bidir == "on",
        max_columns=args.max_columns,
        agh=agh,
        seed=args.seed,
    )


def add_solver_flags(p):
    p.add_argument("--time-limit", type=float, default=3600.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cuts", choices=("on", "off"), default="on")
    p.add_argument("--bidir", choices=("on", "off"), default="on")
    p.add_argument("--agh", choices=("on", "off"), default="on")
    p.add_argument("--agh-max-iter", type=int, default=None,
                   help="override the 25n heuristic-cycle budget")
    p.add_argument("--max-columns", type=int, default=200)


def load_instance(path, mode=None) -> instances.Instance:
    inst = instances.Instance.load(path)
    if mode and mode != inst.mode:
        if mode == "scvrptwl":
            a, b = Fraction(1), Fraction(inst.Q, 4)
        else:
            a, b = Fraction(0), Fraction(1)
        inst = instances.Instance(
            name=inst.name, demands=inst.d, dist=inst.dist, time=inst.time,
            e=inst.e, l=inst.l, s=inst.s, Q=inst.Q, a=a, b=b,
            dist_scale=inst.dist_scale, mode=mode, coords=inst.coords,
        )
    return inst


def solve_instance(inst, params) -> tuple[RunRecord, bnb.SearchResult]:
    t0 = time.time()
    res = bnb.search(inst, params)
    record = RunRecord(
        instance=inst.name,
        mode=inst.mode,
        n=inst.n,
        Q=inst.Q,
        lp=inst.to_paper(res.root_lp) if res.root_lp is not None else None,
        lp_time=res.root_lp_time,
        lpc=inst.to_paper(res.root_lpc) if res.root_lpc is not None else None,
        lpc_time=res.root_lpc_time,
        ip=inst.to_paper(res.objective) if res.objective is not None else None,
        ip_time=time.time() - t0,
        vehicles=res.vehicles,
        splits=res.splits,
        nodes=res.nodes,
        cuts=res.cuts,
        status=res.status,
    )
    return record, res


def write_solution(path, res: bnb.SearchResult):
    with open(path, "w", encoding="utf-8") as fh:
        for route, quantities in res.solution or []:
            parts = []
            for v in route:
                q = quantities.get(v, 0.0)
                parts.append(f"{v}:{q:g}" if q else str(v))
            fh.write(" ".join(parts) + "\n")


def read_solution(path):
    solution = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            route = []
            quantities = {}
            for token in line.split():
                if ":" in token:
                    v, q = token.split(":")
                    route.append(int(v))
                    quantities[int(v)] = float(q)
                else:
                    route.append(int(token))
            solution.append((tuple(route), quantities))
    return solution


def cmd_derive(args) -> int:
    raw = instances.load_solomon(args.input)
    inst = instances.derive(
        raw, args.n, args.capacity, args.mode,
        depot_due=args.depot_due, repair=not args.no_repair,
    )
    out = args.output or f"{inst.name}.json"
    inst.save(out)
    print(f"wrote {out} (n={inst.n}, Q={inst.Q}, a={inst.a}, b={inst.b})")
    return 0


def cmd_solve(args) -> int:
    inst = load_instance(args.instance, args.mode)
    params = params_from_args(args)
    if args.trace:
        params = bnb.RunParams(**{**params.__dict__, "log": sys.stderr})
    record, res = solve_instance(inst, params)
    if res.solution is not None:
        validate.validate_solution(res.solution, inst, expected_cost=res.objective)
        if args.solution:
            write_solution(args.solution, res)
    print(json.dumps(record.row(), indent=None))
    if res.status == "time_limit":
        return 2
    return 0 if res.status == "optimal" else 1


def _bench_one(task):
    path, mode, args_dict = task
    ns = argparse.Namespace(**args_dict)
    try:
        inst = load_instance(path, mode)
        record, res = solve_instance(inst, params_from_args(ns))
        if res.solution is not None:
            validate.validate_solution(res.solution, inst, expected_cost=res.objective)
        return record.row()
    except Exception as exc:  # record the failure, never abort the sweep
        return {
            "instance": path, "mode": mode or "", "status": f"error: {exc}",
            **{k: "" for k in CSV_FIELDS if k not in ("instance", "mode", "status")},
        }


def cmd_bench(args) -> int:
    tasks = []
    with open(args.manifest, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split()
            path = fields[0]
            mode = fields[1] if len(fields) > 1 else None
            tasks.append((path, mode, vars(args)))
    if args.parallel > 1:
        with ProcessPoolExecutor(max_workers=args.parallel) as pool:
            rows = list(pool.map(_bench_one, tasks))
    else:
        rows = [_bench_one(t) for t in tasks]
    groups: dict[str, list[dict]] = {}
    for row in rows:
        name = str(row["instance"])
        parts = name.split("-")
        if len(parts) == 3:
            group = f"{parts[0].rstrip('0123456789')}-{parts[1]}-{parts[2]}"
        else:
            group = name
        groups.setdefault(group, []).append(row)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
        for group, members in groups.items():
            solved = [m for m in members if m["status"] == "optimal"]
            summary = {k: "" for k in CSV_FIELDS}
            summary["instance"] = f"summary:{group}"
            summary["status"] = f"solved {len(solved)}/{len(members)}"
            if solved:
                for key in ("lp_time", "lpc_time", "ip_time"):
                    summary[key] = f"{sum(float(m[key]) for m in solved) / len(solved):.1f}"
                for key in ("nodes", "cuts"):
                    summary[key] = f"{sum(int(m[key]) for m in solved) / len(solved):.1f}"
            writer.writerow(summary)
    print(f"wrote {args.out} ({len(rows)} rows)")
    return 0


def cmd_validate(args) -> int:
    inst = instances.Instance.load(args.instance)
    solution = read_solution(args.solution)
    cost = validate.validate_solution(solution, inst)
    print(f"valid solution, cost {inst.to_paper(cost):.1f}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="splitvrp",
        description="Exact solver for split-collection VRPTW with load-dependent edge costs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("derive", help="derive an instance from a Solomon file")
    p.add_argument("input")
    p.add_argument("--n", type=int, choices=(25, 50, 100), required=True)
    p.add_argument("--capacity", type=int, choices=(30, 50, 100), required=True)
    p.add_argument("--mode", choices=("scvrptwl", "sdvrptw"), default="scvrptwl")
    p.add_argument("--depot-due", choices=("infinite", "file"), default="infinite")
    p.add_argument("--no-repair", action="store_true")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("solve", help="solve one derived instance")
    p.add_argument("instance")
    p.add_argument("--mode", choices=("scvrptwl", "sdvrptw"))
    p.add_argument("--solution", help="write the solution file here")
    p.add_argument("--trace", action="store_true")
    add_solver_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="run a manifest of instances, write CSV")
    p.add_argument("manifest")
    p.add_argument("--out", required=True)
    p.add_argument("--parallel", type=int, default=1)
    add_solver_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("validate", help="validate a solution file")
    p.add_argument("instance")
    p.add_argument("solution")
    p.set_defaults(func=cmd_validate)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (instances.ParseError, validate.ValidationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
