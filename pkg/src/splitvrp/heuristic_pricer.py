"""Adaptive greedy heuristic column generator.

Runs before exact pricing at every column-generation iteration: starting from
zero-reduced-cost routes of the current basis, repeatedly inserts promising
customers (profitability-ordered with multiplicative valuation decay) and
removes customers greedily or at random when the queue empties.

Route values here use the split/zero split-visit coefficient, an upper bound
on the true best pattern value, so every pooled route is guaranteed negative;
patterns only achievable with forced-full collections are left to the exact
pricer.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .costfn import pattern_from_route
from .labeling import Candidate

EPS_NEG = 1e-7


@dataclass(frozen=True)
class AghParams:
    max_col: int = 1000
    max_iter_factor: int = 25  # per-seed cycle budget = factor * n
    eta: float = 0.15
    max_iter: int | None = None


class _Evaluator:
    """Fast reduced-cost upper bound and feasibility checks for routes."""

    def __init__(self, inst, duals):
        self.inst = inst
        self.duals = duals
        self.cache: dict[tuple, float | None] = {}
        self.profile_cache: dict[tuple, tuple] = {}
        self.insert_cache: dict[tuple, tuple | None] = {}
        # per-vertex fixed-cost contribution (visit duals)
        mu, gamma, gset = duals.mu, duals.gamma, duals.gamma_set
        self.visit_cost = [
            mu[v] + (gamma[v] if v in gset else 0.0) for v in range(inst.n + 2)
        ]

    def feasible(self, route) -> bool:
        inst = self.inst
        tau = inst.e[0]
        for u, v in zip(route, route[1:]):
            tau += inst.s[u] + inst.time[u][v]
            if tau < inst.e[v]:
                tau = inst.e[v]
            if tau > inst.l[v]:
                return False
        return True

    def time_profile(self, route):
        """(arrival times, latest feasible service starts) along the route."""
        cached = self.profile_cache.get(route)
        if cached is not None:
            return cached
        inst = self.inst
        k = len(route)
        tau = [0] * k
        t = inst.e[0]
        for idx in range(1, k):
            u, v = route[idx - 1], route[idx]
            t += inst.s[u] + inst.time[u][v]
            if t < inst.e[v]:
                t = inst.e[v]
            tau[idx] = t
        latest = [0] * k
        latest[-1] = inst.l[route[-1]]
        for idx in range(k - 2, -1, -1):
            u, v = route[idx], route[idx + 1]
            latest[idx] = min(inst.l[u], latest[idx + 1] - inst.s[u] - inst.time[u][v])
        out = (tau, latest)
        self.profile_cache[route] = out
        return out

    def value(self, route):
        cache = self.cache
        val = cache.get(route)
        if val is not None:
            return val
        inst, duals = self.inst, self.duals
        A, B = inst.a_num, inst.b_num
        dist = inst.dist
        visit_cost = self.visit_cost
        pi = duals.pi
        d = inst.d
        fixed = -duals.veh
        edge = duals.edge
        cum = 0
        cums = []
        prev = route[0]
        if edge:
            for v in route[1:]:
                cums.append(cum)
                c = dist[prev][v]
                cum += c
                fixed += c * B - edge.get((prev, v), 0.0)
                prev = v
        else:
            for v in route[1:]:
                cums.append(cum)
                c = dist[prev][v]
                cum += c
                fixed += c * B
                prev = v
        total = cum
        gs = []
        for idx in range(1, len(route) - 1):
            v = route[idx]
            fixed -= visit_cost[v]
            gs.append((pi[v] - A * (total - cums[idx]), d[v]))
        gs.sort(reverse=True)
        budget = inst.Q
        profit = 0.0
        for g, cap in gs:
            if g <= 0 or budget <= 0:
                break
            take = cap if cap < budget else budget
            profit += take * g
            budget -= take
        val = fixed - profit
        if duals.route:
            val -= duals.route.get(route, 0.0)
        cache[route] = val
        return val


def greedy_insert(route, u, ev: _Evaluator):
    """Best feasible insertion of u between consecutive vertices, or None."""
    if u in route:
        return None
    key = (route, u)
    hit = ev.insert_cache.get(key, "miss")
    if hit != "miss":
        return hit
    inst = ev.inst
    tau, latest = ev.time_profile(route)
    e_u, l_u, s_u = inst.e[u], inst.l[u], inst.s[u]
    time = inst.time
    best = None
    best_value = None
    for pos in range(1, len(route)):
        x, y = route[pos - 1], route[pos]
        arrive = tau[pos - 1] + inst.s[x] + time[x][u]
        if arrive < e_u:
            arrive = e_u
        if arrive > l_u:
            continue
        if arrive + s_u + time[u][y] > latest[pos]:
            continue
        cand = route[:pos] + (u,) + route[pos:]
        val = ev.value(cand)
        if best_value is None or val < best_value:
            best, best_value = cand, val
    ev.insert_cache[key] = best
    return best


def greedy_remove(route, ev: _Evaluator, valuations, eta):
    """Remove the customer whose removal minimizes the route value; decays the
    removed customer's valuation."""
    if len(route) <= 3:
        if len(route) == 3:
            v = route[1]
            valuations[v] *= eta
            return route[:1] + route[2:]
        raise ValueError("no removable customer")
    best = None
    best_value = None
    removed = None
    for pos in range(1, len(route) - 1):
        cand = route[:pos] + route[pos + 1:]
        val = ev.value(cand)
        if best_value is None or val < best_value or (
            val == best_value and route[pos] < removed
        ):
            best, best_value, removed = cand, val, route[pos]
    valuations[removed] *= eta
    return best


def agh(routes0, inst, duals, params: AghParams, rng: random.Random):
    """Adaptive greedy heuristic: pool of negative-reduced-cost routes."""
    n = inst.n
    end = n + 1
    ev = _Evaluator(inst, duals)
    R0 = [tuple(r) for r in routes0]
    if not R0:
        R0 = [(0, i, end) for i in range(1, n + 1) if i in inst.succ[0]]
    if not R0:
        return []
    max_iter = params.max_iter if params.max_iter is not None else params.max_iter_factor * n
    eta = params.eta
    pool: dict[tuple, Candidate] = {}

    def pooled(route):
        val = ev.value(route)
        if val < -EPS_NEG and route not in pool:
            quantities = pattern_from_route(route, inst, duals)
            pool[route] = Candidate(route, quantities, val, True)
        return len(pool)

    flag = False
    k = max_iter
    r_star = R0[0]
    r = r_star
    valuations = [1.0] * (n + 2)
    queue: list[int] = []
    while k <= max_iter and R0:
        if k == max_iter:
            k = 1
            r = R0.pop(rng.randrange(len(R0)))
            valuations = [1.0] * (n + 2)
            queue = [i for i in range(1, n + 1) if i not in r]
            queue.sort(key=lambda i: -duals.pi[i] * valuations[i])
        while queue:
            u = queue.pop(0)
            r_new = greedy_insert(r, u, ev)
            if r_new is not None and ev.value(r_new) < ev.value(r_star):
                r = r_new
            if r_new is not None and ev.value(r_new) < -EPS_NEG:
                if pooled(r_new) >= params.max_col:
                    return sorted(pool.values(), key=lambda c: c.value)
                if ev.value(r_new) < ev.value(r_star):
                    r_star = r_new
                    valuations[u] /= eta
        if not flag:
            if len(r) > 2:
                r = greedy_remove(r, ev, valuations, eta)
            queue = [i for i in range(1, n + 1) if i not in r]
            queue.sort(key=lambda i: -inst.d[i] * duals.pi[i] * valuations[i])
            flag = True
        else:
            inner = [v for v in r if 1 <= v <= n]
            if inner:
                u = rng.choice(inner)
                idx = r.index(u)
                r = r[:idx] + r[idx + 1:]
                valuations[u] *= eta
            queue = [i for i in range(1, n + 1) if i not in r]
            queue.sort(key=lambda i: -duals.pi[i] * valuations[i])
            flag = False
        k += 1
    return sorted(pool.values(), key=lambda c: c.value)
