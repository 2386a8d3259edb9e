"""Best-first branch-and-bound over the column-generation master.

Each node is evaluated by column generation followed by cut rounds until no
violated inequality remains.  Branching follows the rule order: total vehicle
count, per-customer visit counts, per-edge flows, consecutive edge pairs.
Structural single-use violations (a multi-customer route used twice, a
customer-customer edge with flow two) cannot be separated by floor/ceil
branching and are excluded by their valid upper-bound rows instead.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field

from . import cuts as cuts_mod
from .heuristic_pricer import AghParams
from .master import (
    Master,
    NodeConstraints,
    check_integral,
    extract_solution,
    route_aggregates,
)

MAX_CUT_ROUNDS = 20


@dataclass(frozen=True)
class RunParams:
    time_limit: float = 3600.0
    use_cuts: bool = True
    use_agh: bool = True
    bidirectional: bool = True
    decremental: bool = True
    max_columns: int = 200
    agh: AghParams = field(default_factory=AghParams)
    seed: int = 0
    smv_at_root: bool | None = None  # None: by instance mode
    log: object = None


@dataclass
class BnbNode:
    bound: float
    depth: int
    serial: int
    constraints: NodeConstraints

    def __lt__(self, other):
        return (self.bound, -self.depth, self.serial) < (
            other.bound,
            -other.depth,
            other.serial,
        )


@dataclass
class SearchResult:
    status: str  # optimal | time_limit | infeasible
    objective: float | None  # scaled units
    solution: list | None
    root_lp: float | None
    root_lpc: float | None
    nodes: int
    cuts: int
    vehicles: int = 0
    splits: int = 0
    root_lp_time: float = 0.0
    root_lpc_time: float = 0.0
    total_time: float = 0.0


def _log(params, msg):
    if params.log is not None:
        params.log.write(msg + "\n")


def edge_flows(columns, primal):
    flows: dict[tuple, float] = {}
    for route, theta in route_aggregates(columns, primal).items():
        for e in zip(route, route[1:]):
            flows[e] = flows.get(e, 0.0) + theta
    return flows


def evaluate_node(master: Master, node: NodeConstraints, params: RunParams,
                  collect_root=None):
    """Column generation plus cut rounds; returns the final CgResult."""
    res = master.solve_rlmp(node, params)
    if collect_root is not None:
        collect_root["lp"] = res.objective
        collect_root["lp_time"] = time.time() - collect_root["t0"]
    if res.status != "optimal" or not params.use_cuts:
        return res
    for _ in range(MAX_CUT_ROUNDS):
        flows = edge_flows(master.columns, res.primal)
        new_rows = 0
        for cut in cuts_mod.separate_kpath(flows, master.inst, master.kpath_sets):
            if master.add_kpath(cut):
                new_rows += 1
        if master.inst.mode != "scvrptwl" or params.smv_at_root is False:
            for i in cuts_mod.separate_smv(
                master.columns, res.primal, master.inst, master.smv_rows
            ):
                master.smv_rows.add(i)
                new_rows += 1
        if new_rows == 0:
            break
        res = master.solve_rlmp(node, params)
        if res.status != "optimal":
            return res
    return res


def search(inst, params: RunParams | None = None) -> SearchResult:
    """Exact solve; objective reported in scaled integer cost units."""
    params = params or RunParams()
    t_start = time.time()
    master = Master(inst, use_smv_at_root=params.smv_at_root, seed=params.seed)
    incumbent = math.inf
    incumbent_solution = None
    serial = 0
    root_info = {"t0": t_start}
    root = BnbNode(-math.inf, 0, serial, NodeConstraints())
    heap = [root]
    nodes_explored = 0
    root_lp = None
    root_lpc = None
    root_lpc_time = 0.0
    status = "optimal"
    while heap:
        node = heapq.heappop(heap)
        if node.bound >= incumbent - 0.99:
            continue  # integer-valued objective: cannot improve the incumbent
        nodes_explored += 1
        res = evaluate_node(
            master, node.constraints, params,
            collect_root=root_info if nodes_explored == 1 else None,
        )
        if nodes_explored == 1:
            root_lp = root_info.get("lp")
            if res.status == "optimal":
                root_lpc = res.objective
            root_lpc_time = time.time() - t_start
        if res.status == "infeasible":
            continue
        bound = res.objective
        if math.ceil(bound - 0.01) >= incumbent - 0.01:
            continue
        report = check_integral(master.columns, res.primal, inst)
        if report.integral:
            if bound < incumbent - 0.5:
                incumbent = round(bound)
                incumbent_solution = extract_solution(master.columns, res.primal, inst)
                _log(params, f"incumbent {inst.to_paper(incumbent):.1f} at node {nodes_explored}")
            continue
        if report.witness_kind in ("p2row", "p3row"):
            # enforce the single-use property with a valid row and re-queue
            serial += 1
            if report.witness_kind == "p2row":
                child = node.constraints.child()
                child.route_hi[report.witness_data] = 1
            else:
                child = node.constraints.child()
                child.edge_hi[report.witness_data] = 1
            heapq.heappush(heap, BnbNode(bound, node.depth, serial, child))
            continue
        for child_constraints in branch(report, node.constraints, inst):
            serial += 1
            heapq.heappush(
                heap, BnbNode(bound, node.depth + 1, serial, child_constraints)
            )
        if time.time() - t_start > params.time_limit:
            status = "time_limit" if heap else "optimal"
            break
    total_time = time.time() - t_start
    if incumbent is math.inf:
        return SearchResult(
            "infeasible" if status == "optimal" else status,
            None, None, root_lp, root_lpc, nodes_explored,
            len(master.kpath_cuts), total_time=total_time,
            root_lp_time=root_info.get("lp_time", 0.0), root_lpc_time=root_lpc_time,
        )
    vehicles = len(incumbent_solution)
    splits = count_splits(incumbent_solution, inst)
    return SearchResult(
        status, incumbent, incumbent_solution, root_lp, root_lpc,
        nodes_explored, len(master.kpath_cuts), vehicles, splits,
        root_info.get("lp_time", 0.0), root_lpc_time, total_time,
    )


def count_splits(solution, inst) -> int:
    """Customers served by more than one vehicle."""
    served: dict[int, int] = {}
    for _, quantities in solution:
        for v, q in quantities.items():
            if q > 1e-9:
                served[v] = served.get(v, 0) + 1
    return sum(1 for v, k in served.items() if k > 1)


def branch(report, constraints: NodeConstraints, inst):
    """Two children per the paper's four rules, floor/ceil on the witness."""
    v = report.witness_value
    lo, hi = math.floor(v), math.ceil(v)
    kind, data = report.witness_kind, report.witness_data
    if kind == "veh":
        return (
            constraints.child(veh_hi=lo if constraints.veh_hi is None else min(constraints.veh_hi, lo)),
            constraints.child(veh_lo=hi if constraints.veh_lo is None else max(constraints.veh_lo, hi)),
        )
    if kind == "visit":
        left = constraints.child()
        left.visit_hi[data] = min(left.visit_hi.get(data, lo), lo)
        right = constraints.child()
        right.visit_lo[data] = max(right.visit_lo.get(data, hi), hi)
        return left, right
    if kind == "edge":
        left = constraints.child()
        if lo == 0:
            left = constraints.child(
                forbidden_edges=constraints.forbidden_edges | {data}
            )
        else:
            left.edge_hi[data] = min(left.edge_hi.get(data, lo), lo)
        right = constraints.child()
        right.edge_lo[data] = max(right.edge_lo.get(data, hi), hi)
        return left, right
    if kind == "pair":
        left = constraints.child(
            forbidden_pairs=constraints.forbidden_pairs | {data}
        )
        right = constraints.child()
        right.pair_lo[data] = max(right.pair_lo.get(data, hi), hi)
        return left, right
    raise AssertionError(f"no branching rule for witness {kind}")
