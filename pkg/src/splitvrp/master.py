"""Restricted linear master problem and the column-generation loop.

Rows: demand covering (>= d_i, duals pi), visit-count strengthening
(>= ceil(d_i/Q), duals mu), split-visit rows (>= 2, duals gamma), capacity
cuts, and branching rows.  Columns are collection patterns; the loop
alternates LP solves with the adaptive greedy heuristic and falls back to the
exact bidirectional labeling when the heuristic comes up empty.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from . import cuts as cuts_mod
from . import heuristic_pricer
from .duals import DualContext
from .labeling import EPS_TERM, PricingConfig, solve_pricing
from .lp import LpModel

EPS_INT = 1e-6
EPS_THETA = 1e-9


class ModelInfeasible(Exception):
    pass


@dataclass(frozen=True)
class Column:
    route: tuple[int, ...]
    quantities: tuple[tuple[int, int], ...]  # sorted (vertex, qty)
    cost: int  # scaled true cost
    route_set: frozenset[int] = field(default=frozenset(), compare=False)

    @staticmethod
    def make(inst, route, quantities) -> "Column":
        quantities = {v: q for v, q in quantities.items() if q}
        cost = inst.pattern_cost(route, quantities)
        return Column(
            tuple(route),
            tuple(sorted(quantities.items())),
            cost,
            frozenset(v for v in route if 1 <= v <= inst.n),
        )

    @property
    def qty(self) -> dict[int, int]:
        return dict(self.quantities)

    def edges(self):
        return tuple(zip(self.route, self.route[1:]))

    def is_multi(self) -> bool:
        return len(self.route_set) > 1


@dataclass
class NodeConstraints:
    """Branching decisions accumulated along a branch-and-bound path."""

    veh_lo: int | None = None
    veh_hi: int | None = None
    visit_lo: dict[int, int] = field(default_factory=dict)
    visit_hi: dict[int, int] = field(default_factory=dict)
    edge_lo: dict[tuple[int, int], int] = field(default_factory=dict)
    edge_hi: dict[tuple[int, int], int] = field(default_factory=dict)
    forbidden_edges: frozenset = frozenset()
    pair_lo: dict[tuple[int, int, int], int] = field(default_factory=dict)
    forbidden_pairs: frozenset = frozenset()
    route_hi: dict[tuple[int, ...], int] = field(default_factory=dict)

    def child(self, **updates) -> "NodeConstraints":
        base = NodeConstraints(
            veh_lo=self.veh_lo,
            veh_hi=self.veh_hi,
            visit_lo=dict(self.visit_lo),
            visit_hi=dict(self.visit_hi),
            edge_lo=dict(self.edge_lo),
            edge_hi=dict(self.edge_hi),
            forbidden_edges=self.forbidden_edges,
            pair_lo=dict(self.pair_lo),
            forbidden_pairs=self.forbidden_pairs,
            route_hi=dict(self.route_hi),
        )
        for key, value in updates.items():
            setattr(base, key, value)
        return base

    def allows(self, col: Column) -> bool:
        for e in col.edges():
            if e in self.forbidden_edges:
                return False
        if self.forbidden_pairs:
            r = col.route
            for a, b, c in zip(r, r[1:], r[2:]):
                if (a, b, c) in self.forbidden_pairs:
                    return False
        return True


def column_uses_pair(col: Column, pair) -> bool:
    r = col.route
    return any((a, b, c) == pair for a, b, c in zip(r, r[1:], r[2:]))


@dataclass
class CgStats:
    iterations: int = 0
    exact_calls: int = 0
    agh_calls: int = 0
    columns_added: int = 0
    labels: int = 0


@dataclass
class CgResult:
    status: str  # optimal | infeasible
    objective: float | None = None
    primal: list[float] | None = None
    duals: DualContext | None = None
    stats: CgStats | None = None


class Master:
    """Shared column pool plus per-evaluation LP assembly."""

    def __init__(self, inst, use_smv_at_root: bool | None = None, seed: int = 0):
        self.inst = inst
        self.columns: list[Column] = []
        self.column_keys: set = set()
        self.kpath_cuts: list[cuts_mod.KPathCut] = []
        self.kpath_sets: set = set()
        self.smv_rows: set[int] = set()
        self.rng = random.Random(seed)
        if use_smv_at_root is None:
            use_smv_at_root = inst.mode == "scvrptwl"
        if use_smv_at_root:
            self.smv_rows = set(inst.V_S)
        self._build_initial_columns()

    def _build_initial_columns(self):
        inst = self.inst
        end = inst.n + 1
        for i in range(1, inst.n + 1):
            if i not in inst.succ[0] or end not in inst.succ[i]:
                raise ModelInfeasible(f"customer {i} unreachable within its window")
            qty = {i: min(inst.d[i], inst.Q)}
            self.add_column(Column.make(inst, (0, i, end), qty))

    def add_column(self, col: Column) -> bool:
        key = (col.route, col.quantities)
        if key in self.column_keys:
            return False
        self.column_keys.add(key)
        self.columns.append(col)
        return True

    def add_kpath(self, cut: cuts_mod.KPathCut) -> bool:
        if cut.S in self.kpath_sets:
            return False
        self.kpath_sets.add(cut.S)
        self.kpath_cuts.append(cut)
        return True

    # ---- LP assembly ----

    def artificial_cost(self) -> float:
        """Per-unit cost exceeding any real column's per-unit covering cost,
        so artificials stay out of any feasible optimum."""
        inst = self.inst
        maxdist = max(max(row) for row in inst.dist)
        return float((inst.a_num * inst.Q + inst.b_num) * (inst.n + 2) * maxdist + 1)

    def build_lp(self, node: NodeConstraints):
        inst = self.inst
        model = LpModel()
        rows = []  # (kind, data)

        def add_row(kind, data, sense, rhs):
            rows.append((kind, data))
            return model.add_row(sense, rhs)

        for i in range(1, inst.n + 1):
            add_row("demand", i, ">=", inst.d[i])
        for i in range(1, inst.n + 1):
            add_row("count", i, ">=", -(-inst.d[i] // inst.Q))
        for i in sorted(self.smv_rows):
            add_row("smv", i, ">=", 2)
        for cut in self.kpath_cuts:
            add_row("kpath", (cut.S, frozenset(cut.edge_set(inst))), ">=", cut.rhs)
        if node.veh_lo is not None:
            add_row("veh", None, ">=", node.veh_lo)
        if node.veh_hi is not None:
            add_row("veh", None, "<=", node.veh_hi)
        for i, k in node.visit_lo.items():
            add_row("visit", i, ">=", k)
        for i, k in node.visit_hi.items():
            add_row("visit", i, "<=", k)
        for e, k in node.edge_lo.items():
            add_row("edge", e, ">=", k)
        for e, k in node.edge_hi.items():
            add_row("edge", e, "<=", k)
        for p, k in node.pair_lo.items():
            add_row("pair", p, ">=", k)
        for r, k in node.route_hi.items():
            add_row("route", r, "<=", k)
        for col in self.columns:
            entries = self._column_entries(col, rows)
            hi = 0.0 if not node.allows(col) else None
            model.add_column(float(col.cost), entries, 0.0, hi)
        # artificial slack per >= row keeps the restricted LP feasible while
        # columns are still being generated; basic artificials at convergence
        # prove the node infeasible
        big = self.artificial_cost()
        artificials = []
        for ridx, _ in enumerate(rows):
            if model.row_sense[ridx] == ">=":
                artificials.append(model.add_column(big, {ridx: 1.0}))
        return model, rows, artificials

    def _column_entries(self, col: Column, rows) -> dict[int, float]:
        inst = self.inst
        qty = dict(col.quantities)
        edges = col.edges()
        entries: dict[int, float] = {}
        for ridx, (kind, data) in enumerate(rows):
            if kind == "demand":
                v = qty.get(data, 0)
                if v:
                    entries[ridx] = float(v)
            elif kind in ("count", "visit"):
                if data in col.route_set:
                    entries[ridx] = 1.0
            elif kind == "smv":
                if data in col.route_set:
                    entries[ridx] = 2.0 if qty.get(data, 0) == inst.d[data] else 1.0
            elif kind == "kpath":
                _, eset = data
                v = sum(1 for e in edges if e in eset)
                if v:
                    entries[ridx] = float(v)
            elif kind == "veh":
                entries[ridx] = 1.0
            elif kind == "edge":
                v = sum(1 for e in edges if e == data)
                if v:
                    entries[ridx] = float(v)
            elif kind == "pair":
                if column_uses_pair(col, data):
                    entries[ridx] = 1.0
            elif kind == "route":
                if col.route == data:
                    entries[ridx] = 1.0
        return entries

    def extract_duals(self, rows, dual_values) -> DualContext:
        inst = self.inst
        duals = DualContext.zeros(inst)
        duals.gamma_set = frozenset(self.smv_rows)
        edge: dict = {}
        for (kind, data), y in zip(rows, dual_values):
            if y == 0.0:
                continue
            if kind == "demand":
                duals.pi[data] = y
            elif kind == "count" or kind == "visit":
                duals.mu[data] += y
            elif kind == "smv":
                duals.gamma[data] = duals.gamma[data] + y
            elif kind == "kpath":
                _, eset = data
                for e in eset:
                    edge[e] = edge.get(e, 0.0) + y
            elif kind == "veh":
                duals.veh += y
            elif kind == "edge":
                edge[data] = edge.get(data, 0.0) + y
            elif kind == "pair":
                duals.pair[data] = duals.pair.get(data, 0.0) + y
            elif kind == "route":
                duals.route[data] = duals.route.get(data, 0.0) + y
        duals.edge = edge
        return duals

    # ---- column generation ----

    def solve_rlmp(self, node: NodeConstraints, params) -> CgResult:
        inst = self.inst
        stats = CgStats()
        pricing_cfg = PricingConfig(
            max_columns=params.max_columns,
            bidirectional=params.bidirectional,
            decremental=params.decremental,
            forbidden_edges=node.forbidden_edges,
            forbidden_pairs=node.forbidden_pairs,
        )
        model, rows, artificials = self.build_lp(node)
        lp_index = list(range(len(self.columns)))

        def add_pool_column(col: Column) -> bool:
            if not self.add_column(col):
                return False
            entries = self._column_entries(col, rows)
            hi = None if node.allows(col) else 0.0
            lp_index.append(model.add_column(float(col.cost), entries, 0.0, hi))
            return True

        def finish(res, duals):
            art_mass = sum(res.primal[a] for a in artificials)
            if art_mass > 1e-7:
                return CgResult("infeasible", stats=stats)
            primal = [res.primal[k] for k in lp_index]
            objective = sum(
                c.cost * t for c, t in zip(self.columns, primal) if t > EPS_THETA
            )
            return CgResult("optimal", objective, primal, duals, stats)

        while True:
            stats.iterations += 1
            res = model.solve()
            if res.status == "infeasible":
                return CgResult("infeasible", stats=stats)
            if res.status != "optimal":
                raise RuntimeError(f"unexpected LP status {res.status}")
            duals = self.extract_duals(rows, res.dual)
            new_cands = []
            if params.use_agh:
                stats.agh_calls += 1
                basis_routes = [
                    col.route
                    for col, k in zip(self.columns, lp_index)
                    if res.primal[k] > EPS_THETA and node.allows(col)
                ]
                new_cands = [
                    c
                    for c in heuristic_pricer.agh(
                        basis_routes, inst, duals, params.agh, self.rng
                    )
                    if _candidate_allowed(c, node)
                ]
            exact_done = False
            if not new_cands:
                stats.exact_calls += 1
                pricing = solve_pricing(inst, duals, pricing_cfg)
                stats.labels += pricing.labels
                new_cands = pricing.candidates
                exact_done = True
                if pricing.min_value >= -EPS_TERM:
                    return finish(res, duals)
            added = sum(
                1 for cand in new_cands
                if add_pool_column(Column.make(inst, cand.route, cand.quantities))
            )
            stats.columns_added += added
            if added == 0:
                if exact_done:
                    # every exact candidate already present: the LP cannot
                    # move, so pricing has stalled; accept convergence
                    return finish(res, duals)
                stats.exact_calls += 1
                pricing = solve_pricing(inst, duals, pricing_cfg)
                stats.labels += pricing.labels
                if pricing.min_value >= -EPS_TERM:
                    return finish(res, duals)
                added = sum(
                    1 for cand in pricing.candidates
                    if add_pool_column(Column.make(inst, cand.route, cand.quantities))
                )
                stats.columns_added += added
                if added == 0:
                    return finish(res, duals)


def _candidate_allowed(cand, node: NodeConstraints) -> bool:
    r = cand.route
    for e in zip(r, r[1:]):
        if e in node.forbidden_edges:
            return False
    if node.forbidden_pairs:
        for p in zip(r, r[1:], r[2:]):
            if p in node.forbidden_pairs:
                return False
    return True


# ---- integrality ----


@dataclass
class IntegralityReport:
    integral: bool
    witness_kind: str | None = None  # veh | visit | edge | pair | p2row | p3row
    witness_data: object = None
    witness_value: float = 0.0
    vehicles: float = 0.0


def route_aggregates(columns, primal):
    by_route: dict[tuple, float] = {}
    for col, theta in zip(columns, primal):
        if theta > EPS_THETA:
            by_route[col.route] = by_route.get(col.route, 0.0) + theta
    return by_route


def check_integral(columns, primal, inst) -> IntegralityReport:
    """Integral iff per-route vehicle counts are integral, multi-customer
    routes are used at most once, and customer-customer edges carry at most
    unit flow; otherwise reports the highest-priority branching witness."""
    by_route = route_aggregates(columns, primal)
    total = sum(by_route.values())

    def frac(x):
        return abs(x - round(x))

    if frac(total) > EPS_INT:
        return IntegralityReport(False, "veh", None, total, total)
    visits: dict[int, float] = {}
    flows: dict[tuple, float] = {}
    for route, theta in by_route.items():
        for v in route:
            if 1 <= v <= inst.n:
                visits[v] = visits.get(v, 0.0) + theta
        for e in zip(route, route[1:]):
            flows[e] = flows.get(e, 0.0) + theta
    worst = None
    for i, v in visits.items():
        if frac(v) > EPS_INT and (worst is None or frac(v) > worst[1]):
            worst = (i, frac(v), v)
    if worst:
        return IntegralityReport(False, "visit", worst[0], worst[2], total)
    worst = None
    for e, f in flows.items():
        if frac(f) > EPS_INT and (worst is None or frac(f) > worst[1]):
            worst = (e, frac(f), f)
    if worst:
        return IntegralityReport(False, "edge", worst[0], worst[2], total)
    # pair flows (two consecutive edges)
    pair_flows: dict[tuple, float] = {}
    for route, theta in by_route.items():
        for p in zip(route, route[1:], route[2:]):
            pair_flows[p] = pair_flows.get(p, 0.0) + theta
    worst = None
    for p, f in pair_flows.items():
        if frac(f) > EPS_INT and (worst is None or frac(f) > worst[1]):
            worst = (p, frac(f), f)
    if worst:
        return IntegralityReport(False, "pair", worst[0], worst[2], total)
    # integral aggregates: screen the structural single-use properties
    for route, theta in by_route.items():
        if len([v for v in route if 1 <= v <= inst.n]) > 1 and round(theta) > 1:
            return IntegralityReport(False, "p2row", route, theta, total)
    for e, f in flows.items():
        if 1 <= e[0] <= inst.n and 1 <= e[1] <= inst.n and round(f) > 1:
            return IntegralityReport(False, "p3row", e, f, total)
    return IntegralityReport(True, vehicles=total)


def extract_solution(columns, primal, inst):
    """Integer solution as (route, quantities) pairs with float quantities.

    Fractional patterns on one route merge by convex combination; integral
    multiplicities of single-customer routes split their total evenly."""
    by_route: dict[tuple, list] = {}
    for col, theta in zip(columns, primal):
        if theta > EPS_THETA:
            by_route.setdefault(col.route, []).append((col, theta))
    out = []
    for route, cols in by_route.items():
        total_theta = sum(t for _, t in cols)
        k = round(total_theta)
        merged: dict[int, float] = {}
        for col, theta in cols:
            for v, q in col.quantities:
                merged[v] = merged.get(v, 0.0) + theta * q
        if k <= 0:
            continue
        share = {v: q / k for v, q in merged.items()}
        for _ in range(k):
            out.append((route, dict(share)))
    return out
