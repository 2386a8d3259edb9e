"""Independent feasibility and cost validation for columns and solutions."""

from __future__ import annotations


class ValidationError(ValueError):
    pass


def check_route_times(route, inst):
    tau = inst.e[0]
    for u, v in zip(route, route[1:]):
        tau += inst.s[u] + inst.time[u][v]
        if tau < inst.e[v]:
            tau = inst.e[v]
        if tau > inst.l[v]:
            raise ValidationError(f"window violated at vertex {v} (t={tau} > {inst.l[v]})")
    return tau


def check_route_shape(route, inst, elementary=True):
    if route[0] != 0 or route[-1] != inst.n + 1:
        raise ValidationError("route must run depot to depot")
    inner = route[1:-1]
    if not inner:
        raise ValidationError("empty route")
    if any(not 1 <= v <= inst.n for v in inner):
        raise ValidationError("route revisits a depot")
    if elementary and len(set(inner)) != len(inner):
        raise ValidationError("route visits a customer twice")
    for u, v in zip(route, route[1:]):
        if v not in inst.succ[u]:
            raise ValidationError(f"edge ({u},{v}) infeasible or missing")


def validate_column(route, quantities, inst, extreme=True):
    """Feasibility of one collection pattern; optionally requires the
    zero/full/at-most-one-split shape."""
    check_route_shape(route, inst)
    check_route_times(route, inst)
    total = 0
    splits = 0
    for v, q in quantities.items():
        if not 1 <= v <= inst.n:
            raise ValidationError(f"collection at non-customer {v}")
        if v not in route:
            raise ValidationError(f"collection at unvisited customer {v}")
        if q < -1e-9 or q > inst.d[v] + 1e-9:
            raise ValidationError(f"quantity {q} outside [0, d_{v}]")
        total += q
        if 1e-9 < q < inst.d[v] - 1e-9:
            splits += 1
    if total > inst.Q + 1e-9:
        raise ValidationError(f"capacity exceeded: {total} > {inst.Q}")
    if extreme and splits > 1:
        raise ValidationError(f"{splits} split collections in one pattern")


def validate_solution(solution, inst, expected_cost=None, tol=1e-6):
    """Covering, per-vehicle feasibility, and exact cost recomputation.

    solution: list of (route, {vertex: quantity}) with float quantities."""
    collected = {i: 0.0 for i in range(1, inst.n + 1)}
    total_cost = 0.0
    for route, quantities in solution:
        validate_column(route, quantities, inst, extreme=False)
        for v, q in quantities.items():
            collected[v] += q
        load = 0.0
        for u, v in zip(route, route[1:]):
            load += quantities.get(u, 0.0)
            total_cost += inst.dist[u][v] * (inst.a_num * load + inst.b_num)
    for i, got in collected.items():
        if got < inst.d[i] - 1e-6:
            raise ValidationError(f"demand of customer {i} not covered ({got} < {inst.d[i]})")
    if expected_cost is not None and abs(total_cost - expected_cost) > tol * max(1.0, abs(expected_cost)):
        raise ValidationError(
            f"cost mismatch: recomputed {total_cost} vs reported {expected_cost}"
        )
    return total_cost
