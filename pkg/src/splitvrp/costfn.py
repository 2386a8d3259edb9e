"""Convex piecewise-linear reduced-cost functions for collection routes.

A route's reduced cost as a function of the collected quantity q is
G(q) = fixed - (best profit of allocating q units over per-vertex items),
where each item has a slope g (profit per unit) and a capacity (the vertex
demand).  The greedy allocation by decreasing slope is exact, so G is convex
and piecewise linear.  Customers whose collection is *forced* to be full
contribute a constant credit and consume capacity up front.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

INF = float("inf")


@dataclass(frozen=True)
class CostItem:
    g: float
    cap: int | None  # None = unbounded (the backward slack)
    vertex: int


@dataclass(frozen=True)
class PiecewiseCost:
    fixed: float
    items: tuple[CostItem, ...]
    forced_qty: int = 0
    forced_credit: float = 0.0

    def total_cap(self) -> float:
        total = 0
        for it in self.items:
            if it.cap is None:
                return INF
            total += it.cap
        return total


def _sorted_items(items):
    # decreasing slope, ties broken by vertex index for determinism
    return sorted(items, key=lambda it: (-it.g, it.vertex))


def eval_greedy(pc: PiecewiseCost, q) -> float:
    """G at free quantity q: allocate exactly q units greedily over the items
    (forced collections are already folded into forced_credit)."""
    if q < 0 or q > pc.total_cap():
        raise ValueError(f"quantity {q} outside [0, {pc.total_cap()}]")
    remaining = q
    profit = 0.0
    for it in _sorted_items(pc.items):
        if remaining <= 0:
            break
        take = remaining if it.cap is None else min(it.cap, remaining)
        profit += take * it.g
        remaining -= take
    return pc.fixed - pc.forced_credit - profit


def min_over_capacity(pc: PiecewiseCost, Q) -> tuple[float, int]:
    """min of G over total quantity <= Q; only profitable items collect.

    Returns (value, q*) with q* the total collected quantity including any
    forced quantity."""
    budget = Q - pc.forced_qty
    if budget < 0:
        raise ValueError("forced quantity exceeds capacity")
    profit = 0.0
    used = 0
    for it in _sorted_items(pc.items):
        if it.g <= 0 or budget <= 0:
            break
        take = budget if it.cap is None else min(it.cap, budget)
        profit += take * it.g
        used += take
        budget -= take
    return pc.fixed - pc.forced_credit - profit, pc.forced_qty + used


def clamp(pc: PiecewiseCost) -> PiecewiseCost:
    """Replace negative slopes with zero slopes: G becomes the running minimum
    (an 'allowable capacity' function, nonincreasing)."""
    items = tuple(
        it if it.g >= 0 else CostItem(0.0, it.cap, it.vertex) for it in pc.items
    )
    return PiecewiseCost(pc.fixed, items, pc.forced_qty, pc.forced_credit)


# ---- explicit piecewise-linear functions (for dominance comparisons) ----
#
# A PwFn is (q0, qs, vs): +inf for q < q0, linear between knots, constant
# after the last knot.  qs[0] == q0.  All dominance functions are clamped,
# hence nonincreasing.


def breakpoints(pc: PiecewiseCost, Q) -> tuple[float, list, list]:
    """Clamped breakpoint form of pc restricted to [0, Q]."""
    q0 = pc.forced_qty
    v0 = pc.fixed - pc.forced_credit
    qs = [float(q0)]
    vs = [v0]
    q = float(q0)
    v = v0
    for it in _sorted_items(pc.items):
        if it.g <= 0 or q >= Q:
            break
        step = (Q - q) if it.cap is None else min(it.cap, Q - q)
        q += step
        v -= step * it.g
        qs.append(q)
        vs.append(v)
    return q0, qs, vs


def pw_eval(fn, q) -> float:
    q0, qs, vs = fn
    if q < q0 - 1e-12:
        return INF
    if q >= qs[-1]:
        return vs[-1]
    # linear interpolation on the containing segment
    lo, hi = 0, len(qs) - 1
    while lo + 1 < hi:
        mid = (lo + hi) // 2
        if qs[mid] <= q:
            lo = mid
        else:
            hi = mid
    if qs[hi] == qs[lo]:
        return min(vs[lo], vs[hi])
    t = (q - qs[lo]) / (qs[hi] - qs[lo])
    return vs[lo] + t * (vs[hi] - vs[lo])


def pw_le(f_lo, f_hi, Q, eps: float = 0.0) -> bool:
    """f_lo(q) <= f_hi(q) + eps for all q in [0, Q] (inf <= inf allowed).

    Both arguments must carry all their kinks as knots (true for breakpoint
    forms and for pw_min results), so checking merged knots is exact."""
    q0_hi = f_hi[0]
    if f_lo[0] > q0_hi + 1e-12:
        return False
    knots = {q0_hi, float(Q)}
    for f in (f_lo, f_hi):
        knots.update(q for q in f[1] if q0_hi <= q <= Q)
    for q in knots:
        if pw_eval(f_lo, q) > pw_eval(f_hi, q) + eps:
            return False
    return True


def pw_min(f1, f2):
    """Pointwise minimum of two piecewise-linear functions, with crossing
    points added as knots so the result is again exactly piecewise linear."""
    q0 = min(f1[0], f2[0])
    knots = sorted(set(f1[1]) | set(f2[1]))
    qs_out: list[float] = []
    vs_out: list[float] = []

    def push(q, v):
        if qs_out and abs(qs_out[-1] - q) < 1e-12:
            vs_out[-1] = min(vs_out[-1], v)
            return
        # drop collinear middle points
        if len(qs_out) >= 2:
            q1, q2 = qs_out[-2], qs_out[-1]
            v1, v2 = vs_out[-2], vs_out[-1]
            if q2 > q1 and v1 != INF and v2 != INF and v != INF:
                slope_a = (v2 - v1) / (q2 - q1)
                interp = v2 + slope_a * (q - q2)
                if abs(interp - v) < 1e-9:
                    qs_out.pop()
                    vs_out.pop()
        qs_out.append(q)
        vs_out.append(v)

    for qa, qb in zip(knots, knots[1:]):
        va1, vb1 = pw_eval(f1, qa), pw_eval(f1, qb)
        va2, vb2 = pw_eval(f2, qa), pw_eval(f2, qb)
        push(qa, min(va1, va2))
        # crossing inside the open segment?
        if va1 != INF and va2 != INF and vb1 != INF and vb2 != INF:
            d_a = va1 - va2
            d_b = vb1 - vb2
            if (d_a > 0 > d_b) or (d_a < 0 < d_b):
                t = d_a / (d_a - d_b)
                qc = qa + t * (qb - qa)
                vc = va1 + t * (vb1 - va1)
                push(qc, vc)
    last = knots[-1]
    push(last, min(pw_eval(f1, last), pw_eval(f2, last)))
    return (q0, qs_out, vs_out)


def envelope(pcs, Q):
    """Pointwise-minimum function of a set of cost functions on [0, Q].

    Accepts PiecewiseCost values or breakpoint forms; returns a PwFn
    (not necessarily convex)."""
    fns = [
        breakpoints(pc, Q) if isinstance(pc, PiecewiseCost) else pc for pc in pcs
    ]
    if not fns:
        raise ValueError("envelope of an empty set")
    out = fns[0]
    for fn in fns[1:]:
        out = pw_min(out, fn)
    return out


def lies_below(pc2: PiecewiseCost, pc1: PiecewiseCost, Q, eps: float = 0.0) -> bool:
    """True iff clamped pc2 lies pointwise at-or-below clamped pc1 on [0, Q]."""
    return pw_le(breakpoints(clamp(pc2), Q), breakpoints(clamp(pc1), Q), Q, eps)


# ---- route-level coefficient construction ----


def forward_coeffs(route, inst, duals, forced=()) -> PiecewiseCost:
    """Cost function of a (partial) route starting at vertex 0.

    Item slopes are profit-per-unit for collecting at each visited customer,
    discounted by the load cost over the remaining distance to the route end."""
    if len(route) < 2:
        raise ValueError("route must have at least two vertices")
    if route[0] != 0:
        raise ValueError("forward route must start at the depot")
    A, B = inst.a_num, inst.b_num
    dist = inst.dist
    cum = [0] * len(route)
    fixed = -duals.veh
    for idx in range(1, len(route)):
        c = dist[route[idx - 1]][route[idx]]
        cum[idx] = cum[idx - 1] + c
        fixed += c * B - duals.edge_dual(route[idx - 1], route[idx])
    fixed -= sum(duals.mu[v] for v in route)
    total = cum[-1]
    items = []
    forced_qty = 0
    forced_credit = 0.0
    forced = set(forced)
    for idx, v in enumerate(route):
        if not (1 <= v <= inst.n):
            continue
        g = duals.pi[v] - A * (total - cum[idx])
        if v in forced:
            forced_qty += inst.d[v]
            forced_credit += inst.d[v] * g
        else:
            items.append(CostItem(g, inst.d[v], v))
    return PiecewiseCost(fixed, tuple(items), forced_qty, forced_credit)


def backward_coeffs(route, inst, duals, forced=()) -> PiecewiseCost:
    """Cost function of a backward partial route ending at vertex n+1,
    parameterized by the allowable capacity Q - (incoming flow).

    Every unit flowing in from the forward part pays the load cost over the
    whole backward distance; that is captured by a fixed (aQ+b) charge per
    edge plus an unbounded zero-base 'slack' item whose slope is the load cost
    of the full backward distance."""
    if len(route) < 1 or route[-1] != inst.n + 1:
        raise ValueError("backward route must end at the return depot")
    A, B = inst.a_num, inst.b_num
    dist = inst.dist
    cum = [0] * len(route)
    fixed = 0.0
    for idx in range(1, len(route)):
        c = dist[route[idx - 1]][route[idx]]
        cum[idx] = cum[idx - 1] + c
        fixed += c * (A * inst.Q + B) - duals.edge_dual(route[idx - 1], route[idx])
    fixed -= sum(duals.mu[v] for v in route[:-1])
    total = cum[-1]
    items = []
    forced_qty = 0
    forced_credit = 0.0
    forced = set(forced)
    for idx, v in enumerate(route):
        if not (1 <= v <= inst.n):
            continue
        g = duals.pi[v] + A * cum[idx]  # cum[idx] = distance from route start to v
        if v in forced:
            forced_qty += inst.d[v]
            forced_credit += inst.d[v] * g
        else:
            items.append(CostItem(g, inst.d[v], v))
    items.append(CostItem(float(A * total), None, inst.n + 1))
    return PiecewiseCost(fixed, tuple(items), forced_qty, forced_credit)


def best_route_value(route, inst, duals, exact_smv: bool = False):
    """Best reduced cost over all collection patterns of a complete route.

    With exact_smv the forced-full choice is enumerated over visited
    customers carrying a positive split-visit dual (exact, exponential in
    their count); otherwise those customers keep the split/zero coefficient,
    which upper-bounds the true best value."""
    smv_candidates = [
        v
        for v in route
        if 1 <= v <= inst.n and v in duals.gamma_set and duals.gamma[v] > 0
    ]
    base_discount = sum(duals.gamma[v] for v in smv_candidates)
    best = None
    subsets = (
        itertools.chain.from_iterable(
            itertools.combinations(smv_candidates, k)
            for k in range(len(smv_candidates) + 1)
        )
        if exact_smv
        else [()]
    )
    for forced in subsets:
        pc = forward_coeffs(route, inst, duals, forced=forced)
        if pc.forced_qty > inst.Q:
            continue
        fixed = pc.fixed - base_discount - sum(duals.gamma[v] for v in forced)
        pc = PiecewiseCost(fixed, pc.items, pc.forced_qty, pc.forced_credit)
        value, q_star = min_over_capacity(pc, inst.Q)
        value -= duals.route_dual(tuple(route))
        if best is None or value < best[0]:
            best = (value, q_star, forced)
    return best


def pattern_from_route(route, inst, duals, forced=()):
    """Greedy extreme pattern realizing min_over_capacity for the route."""
    pc = forward_coeffs(route, inst, duals, forced=forced)
    budget = inst.Q - pc.forced_qty
    quantities = {v: inst.d[v] for v in forced}
    for it in _sorted_items(pc.items):
        if it.g <= 0 or budget <= 0:
            break
        take = budget if it.cap is None else min(it.cap, budget)
        if take > 0:
            quantities[it.vertex] = quantities.get(it.vertex, 0) + take
            budget -= take
    return quantities
