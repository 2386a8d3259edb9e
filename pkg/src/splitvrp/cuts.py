"""Valid inequalities: capacity (k-path) cuts and split-visit (SMV) rows.

k-path: the flow leaving a customer set S must be at least ceil(d(S)/Q).
Separation is heuristic: singletons, pairs and triples over nearest-neighbor
candidate lists, and connected components of the thresholded support graph.

SMV: every customer with demand <= Q needs weighted visits >= 2, where a full
collection counts twice and a split or zero collection once.
"""

from __future__ import annotations

from dataclasses import dataclass

EPS_CUT = 1e-4
SUPPORT_THRESHOLD = 0.1
NEIGHBOR_LIST = 8
MAX_CUTS_PER_ROUND = 50


@dataclass(frozen=True)
class KPathCut:
    S: frozenset[int]
    rhs: int

    def edge_set(self, inst):
        """E-(S): edges from inside S to outside (including the end depot)."""
        out = []
        for i in self.S:
            for j in inst.succ[i]:
                if j not in self.S:
                    out.append((i, j))
        return tuple(out)


def kpath_rhs(S, inst) -> int:
    total = sum(inst.d[i] for i in S)
    return -(-total // inst.Q)


def _flow_leaving(S, flows) -> float:
    return sum(f for (i, j), f in flows.items() if i in S and j not in S)


def separate_kpath(flows, inst, existing, max_cuts: int = MAX_CUTS_PER_ROUND):
    """Violated k-path cuts for a fractional solution's edge flows."""
    n = inst.n
    candidates: set[frozenset[int]] = set()
    for i in range(1, n + 1):
        candidates.add(frozenset((i,)))
    # nearest-neighbor pairs and triples
    for i in range(1, n + 1):
        near = sorted(
            (j for j in range(1, n + 1) if j != i),
            key=lambda j: inst.dist[i][j],
        )[:NEIGHBOR_LIST]
        for a in range(len(near)):
            candidates.add(frozenset((i, near[a])))
            for b in range(a + 1, len(near)):
                candidates.add(frozenset((i, near[a], near[b])))
    # connected components of the support graph over customers
    adj = [[] for _ in range(n + 1)]
    for (i, j), f in flows.items():
        if f >= SUPPORT_THRESHOLD and 1 <= i <= n and 1 <= j <= n:
            adj[i].append(j)
            adj[j].append(i)
    seen = set()
    for i in range(1, n + 1):
        if i in seen:
            continue
        comp = {i}
        stack = [i]
        seen.add(i)
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    comp.add(v)
                    stack.append(v)
        if len(comp) > 1:
            candidates.add(frozenset(comp))
    violated = []
    for S in candidates:
        if S in existing:
            continue
        rhs = kpath_rhs(S, inst)
        slack = rhs - _flow_leaving(S, flows)
        if slack > EPS_CUT:
            violated.append((slack, KPathCut(S, rhs)))
    violated.sort(key=lambda x: -x[0])
    return [cut for _, cut in violated[:max_cuts]]


def smv_coefficient(col, i, inst) -> int:
    """2 for a full collection at i, 1 for a split-or-zero visit, else 0."""
    if i not in col.route_set:
        return 0
    return 2 if col.qty.get(i, 0) == inst.d[i] else 1


def separate_smv(columns, primal, inst, existing):
    """Customers in V_S whose weighted-visit count falls below 2."""
    totals = {i: 0.0 for i in inst.V_S if i not in existing}
    if not totals:
        return []
    for col, theta in zip(columns, primal):
        if theta <= 1e-9:
            continue
        for i in col.route_set:
            if i in totals:
                totals[i] += theta * smv_coefficient(col, i, inst)
    return [i for i, tot in totals.items() if tot < 2 - EPS_CUT]
