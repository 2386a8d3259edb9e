"""Brute-force ground truth for small instances.

brute_price enumerates every elementary time-feasible route and evaluates its
best collection pattern directly; brute_solve solves the arc-flow model
exactly with a MIP backend.  Both are deliberately independent of the
label-setting machinery.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, linprog, milp
from scipy.sparse import csr_matrix

from . import costfn
from .instances import Instance, build_instance

MAX_PRICE_N = 8
MAX_SOLVE_N = 4


@dataclass(frozen=True)
class TinyInstanceSpec:
    n: int
    seed: int
    coord_range: int = 20
    demand_range: tuple[int, int] = (3, 12)
    capacity: int = 10
    window_width: tuple[int, int] = (8, 40)
    horizon: int = 60
    service_range: tuple[int, int] = (1, 4)
    mode: str = "scvrptwl"


def random_tiny_instance(spec: TinyInstanceSpec) -> Instance:
    """Random instance where every customer is reachable alone from the depot."""
    rng = random.Random(spec.seed)
    n = spec.n
    coords = [(0.0, 0.0)]
    for _ in range(n):
        coords.append((rng.uniform(0, spec.coord_range), rng.uniform(0, spec.coord_range)))
    demands = [rng.randint(*spec.demand_range) for _ in range(n)]
    service = [rng.randint(*spec.service_range) for _ in range(n)]
    e, l = [], []
    for i in range(1, n + 1):
        direct = math.hypot(coords[i][0] - coords[0][0], coords[i][1] - coords[0][1])
        open_at = rng.randint(0, spec.horizon)
        width = rng.randint(*spec.window_width)
        close_at = max(open_at, int(math.ceil(direct))) + width
        e.append(open_at)
        l.append(close_at)
    Q = spec.capacity
    if spec.mode == "scvrptwl":
        a, b = Fraction(1), Fraction(Q, 4)
    else:
        a, b = Fraction(0), Fraction(1)
    return build_instance(
        name=f"tiny-{spec.n}-{spec.seed}",
        coords=coords,
        demands=demands,
        Q=Q,
        a=a,
        b=b,
        e=e,
        l=l,
        s=service,
        dist_scale=10,
        mode=spec.mode,
    )


def random_duals(inst, seed, with_cuts=False, smv=True):
    """Random dual vectors in scaled units, roughly sized like route costs."""
    from .duals import DualContext

    rng = random.Random(seed)
    magnitude = inst.b_num * max(max(row) for row in inst.dist)
    duals = DualContext.zeros(inst)
    for i in range(1, inst.n + 1):
        duals.pi[i] = rng.uniform(0, 2.0 * magnitude / max(inst.d[i], 1))
        duals.mu[i] = rng.uniform(0, 0.5 * magnitude)
    if smv:
        duals.gamma_set = frozenset(inst.V_S)
        for i in inst.V_S:
            duals.gamma[i] = rng.uniform(0, 0.25 * magnitude) if rng.random() < 0.5 else 0.0
    if with_cuts:
        customers = list(range(1, inst.n + 1))
        for _ in range(rng.randint(1, 3)):
            size = rng.randint(1, max(1, inst.n - 1))
            S = frozenset(rng.sample(customers, size))
            lam = rng.uniform(0, 0.3 * magnitude)
            for i in S:
                for j in range(1, inst.n + 2):
                    if j != i and j not in S:
                        duals.edge[(i, j)] = duals.edge.get((i, j), 0.0) + lam
    return duals


def enumerate_routes(inst, forbidden_edges=frozenset()):
    """All elementary time-feasible routes (0, c1, ..., ck, n+1), k >= 1."""
    if inst.n > MAX_PRICE_N:
        raise ValueError(f"route enumeration refused for n={inst.n} > {MAX_PRICE_N}")
    n = inst.n
    routes = []
    end = n + 1

    def dfs(vertex, tau, visited, path):
        if (vertex, end) not in forbidden_edges and end in inst.succ[vertex] and len(path) > 1:
            routes.append(tuple(path + [end]))
        for j in inst.succ[vertex]:
            if j == end or j in visited or (vertex, j) in forbidden_edges:
                continue
            arrive = max(inst.e[j], tau + inst.s[vertex] + inst.time[vertex][j])
            if arrive > inst.l[j]:
                continue
            visited.add(j)
            path.append(j)
            dfs(j, arrive, visited, path)
            path.pop()
            visited.remove(j)

    dfs(0, inst.e[0], set(), [0])
    return routes


def brute_price(inst, duals, forbidden_edges=frozenset()):
    """Exact minimum reduced cost over all elementary routes and patterns."""
    best = None
    for route in enumerate_routes(inst, forbidden_edges):
        value, q_star, forced = costfn.best_route_value(route, inst, duals, exact_smv=True)
        if best is None or value < best[0]:
            best = (value, route, q_star, forced)
    if best is None:
        raise ValueError("instance admits no feasible route")
    return best


# ---- exact full solve: arc-flow MIP ----


def brute_solve(inst, return_solution=False):
    """Optimal total cost (scaled units) of the full problem via the arc-flow
    model: binary edge use x, continuous loads w and service starts per
    vehicle, big-M time propagation, demand covering."""
    if inst.n > MAX_SOLVE_N:
        raise ValueError(f"arc-flow oracle refused for n={inst.n} > {MAX_SOLVE_N}")
    n = inst.n
    end = n + 1
    edges = [
        (i, j)
        for i in range(n + 1)
        for j in inst.succ[i]
    ]
    eidx = {e: k for k, e in enumerate(edges)}
    m = sum(-(-inst.d[i] // inst.Q) for i in range(1, n + 1)) + 2
    nE = len(edges)
    # variable layout per vehicle: [x(0..nE-1), w(0..nE-1), a(0..n+1)]
    per = 2 * nE + (n + 2)
    nvar = per * m
    BIGT = inst.T + max(max(row) for row in inst.time) + max(inst.s) + 1
    M = BIGT

    def xv(k, e):
        return k * per + eidx[e]

    def wv(k, e):
        return k * per + nE + eidx[e]

    def av(k, i):
        return k * per + 2 * nE + i

    obj = np.zeros(nvar)
    for k in range(m):
        for (i, j) in edges:
            obj[xv(k, (i, j))] = inst.dist[i][j] * inst.b_num
            obj[wv(k, (i, j))] = inst.dist[i][j] * inst.a_num

    rows, cols, vals, lbs, ubs = [], [], [], [], []
    r = 0

    def add(entries, lo, hi):
        nonlocal r
        for c, v in entries:
            rows.append(r)
            cols.append(c)
            vals.append(v)
        lbs.append(lo)
        ubs.append(hi)
        r += 1

    inf = np.inf
    # demand covering: sum_k (outflow - inflow at i) >= d_i
    for i in range(1, n + 1):
        entries = []
        for k in range(m):
            for j in inst.succ[i]:
                entries.append((wv(k, (i, j)), 1.0))
            for h in inst.pred[i]:
                entries.append((wv(k, (h, i)), -1.0))
        add(entries, inst.d[i], inf)
    # visit count strengthening: sum_k sum_j x_ijk >= ceil(d_i/Q)
    for i in range(1, n + 1):
        entries = []
        for k in range(m):
            for j in inst.succ[i]:
                entries.append((xv(k, (i, j)), 1.0))
        add(entries, -(-inst.d[i] // inst.Q), inf)
    for k in range(m):
        # leave depot exactly once / enter end depot exactly once
        add([(xv(k, (0, j)), 1.0) for j in inst.succ[0]], 1, 1)
        add([(xv(k, (i, end)), 1.0) for i in inst.pred[end]], 1, 1)
        for i in range(1, n + 1):
            out = [(xv(k, (i, j)), 1.0) for j in inst.succ[i]]
            inc = [(xv(k, (h, i)), 1.0) for h in inst.pred[i]]
            add(out + [(c, -v) for c, v in inc], 0, 0)  # flow conservation
            add(out, -inf, 1)  # visit at most once
        for (i, j) in edges:
            # load limit: w <= Q x
            add([(wv(k, (i, j)), 1.0), (xv(k, (i, j)), -inst.Q)], -inf, 0)
            # time propagation: a_j - a_i - M x >= s_i + t_ij - M
            add(
                [(av(k, j), 1.0), (av(k, i), -1.0), (xv(k, (i, j)), -M)],
                inst.s[i] + inst.time[i][j] - M,
                inf,
            )
        # nonincreasing use of vehicles (symmetry breaking): empty flags sorted
        if k + 1 < m:
            add([(xv(k, (0, end)), 1.0), (xv(k + 1, (0, end)), -1.0)], -inf, 0)

    A = csr_matrix((vals, (rows, cols)), shape=(r, nvar))
    lb = np.full(nvar, 0.0)
    ub = np.full(nvar, inf)
    integrality = np.zeros(nvar)
    for k in range(m):
        for e in edges:
            ub[xv(k, e)] = 1.0
            integrality[xv(k, e)] = 1
        for i in range(n + 2):
            lb[av(k, i)] = inst.e[i]
            ub[av(k, i)] = min(inst.l[i], BIGT)
    res = milp(
        c=obj,
        constraints=LinearConstraint(A, np.array(lbs), np.array(ubs)),
        integrality=integrality,
        bounds=Bounds(lb, ub),
        options={"mip_rel_gap": 0.0},
    )
    if res.status != 0:
        raise RuntimeError(f"arc-flow oracle failed: {res.message}")
    value = float(res.fun)
    # collections can be chosen integral (transportation-polytope vertices),
    # so the optimum is an integer in scaled units; strip MIP solver noise
    if abs(value - round(value)) < 1e-4:
        value = float(round(value))
    if not return_solution:
        return value
    # reconstruct routes and collected quantities per vehicle
    x = res.x
    solution = []
    for k in range(m):
        if x[xv(k, (0, end))] > 0.5:
            continue
        route = [0]
        quantities = {}
        cur = 0
        while cur != end:
            nxt = None
            for j in inst.succ[cur]:
                if x[xv(k, (cur, j))] > 0.5:
                    nxt = j
                    break
            if nxt is None:
                raise RuntimeError("disconnected vehicle route in oracle solution")
            outw = sum(x[wv(k, (nxt, j))] for j in inst.succ[nxt]) if nxt != end else 0.0
            inw = x[wv(k, (cur, nxt))]
            route.append(nxt)
            if 1 <= nxt <= n:
                quantities[nxt] = outw - inw
            cur = nxt
        solution.append((tuple(route), {v: round(q, 6) for v, q in quantities.items()}))
    return value, solution


def brute_solve_enum(inst):
    """Cross-check enumerator: route multisets + continuous allocation LP.

    Exponential; intended for n <= 3 to validate the arc-flow oracle once."""
    if inst.n > 3:
        raise ValueError("multiset enumeration refused for n > 3")
    routes = enumerate_routes(inst)
    m_max = sum(-(-inst.d[i] // inst.Q) for i in range(1, inst.n + 1)) + 1
    best = np.inf
    n = inst.n
    for count in range(1, m_max + 1):
        for combo in itertools.combinations_with_replacement(range(len(routes)), count):
            chosen = [routes[k] for k in combo]
            covered = set().union(*(set(r) for r in chosen))
            if any(i not in covered for i in range(1, n + 1)):
                continue
            fixed = sum(inst.route_empty_cost(r) for r in chosen)
            if fixed >= best:
                continue
            value = _allocation_lp(inst, chosen, fixed)
            if value is not None and value < best:
                best = value
    return best


def _allocation_lp(inst, chosen, fixed):
    """min load-dependent cost of quantity allocation over fixed routes."""
    var = []  # (route_idx, vertex, remaining distance to route end)
    for ridx, route in enumerate(chosen):
        tail = 0
        rem = {}
        for u, v in zip(reversed(route[:-1]), reversed(route[1:])):
            tail += inst.dist[u][v]
            rem[u] = tail
        for v in route[1:-1]:
            var.append((ridx, v, rem[v]))
    if not var:
        return None
    obj = np.array([inst.a_num * r for (_, _, r) in var], dtype=float)
    A_rows, b_ub = [], []
    for ridx in range(len(chosen)):
        A_rows.append([1.0 if x[0] == ridx else 0.0 for x in var])
        b_ub.append(float(inst.Q))
    for i in range(1, inst.n + 1):
        row = [-1.0 if x[1] == i else 0.0 for x in var]
        A_rows.append(row)
        b_ub.append(-float(inst.d[i]))
    bounds = [(0, inst.d[v]) for (_, v, _) in var]
    res = linprog(obj, A_ub=np.array(A_rows), b_ub=np.array(b_ub), bounds=bounds, method="highs")
    if res.status != 0:
        return None
    return fixed + float(res.fun)
