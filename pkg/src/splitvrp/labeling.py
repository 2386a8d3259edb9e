"""Exact pricing by bounded bidirectional label setting.

Forward labels extend from the depot, backward labels from the return depot;
both carry a convex piecewise-linear cost-of-collection function encoded as
per-vertex items.  Item slopes change by a*c on every traversed edge, so each
item stores a distance-invariant base value: the effective slope at a label
with cumulative distance D is base - a*D (forward) or base + a*D (backward),
which makes extensions O(1) per item.

Dominance uses a per-vertex directed graph whose nodes group labels by
(earliest time, reachable set); each node keeps the lower envelope of its own
and its ancestors' cost functions, so a new label is discarded when the
envelope of any applicable node lies below its function on [0, Q].
"""

from __future__ import annotations

import heapq
from bisect import bisect_left
from dataclasses import dataclass, field

from .costfn import INF, pw_le, pw_min

EPS_DOM = 1e-6
EPS_CAND = 1e-7
EPS_TERM = 1e-4


@dataclass(frozen=True)
class PricingConfig:
    max_columns: int = 200
    bidirectional: bool = True
    decremental: bool = True
    dominance: bool = True
    literal_join: bool = False
    forbidden_edges: frozenset = frozenset()
    forbidden_pairs: frozenset = frozenset()


@dataclass
class Candidate:
    route: tuple
    quantities: dict
    value: float  # reduced cost, route-row adjusted
    elementary: bool


@dataclass
class PricingResult:
    candidates: list  # elementary, negative, best-first
    min_value: float  # exact minimum reduced cost when exact=True
    exact: bool
    rounds: int = 1
    labels: int = 0


class Label:
    __slots__ = (
        "vertex", "tau", "visited", "reach", "F", "D",
        "items", "forced", "q_forced", "parent", "pred", "sgn",
        "dead", "fn", "bound",
    )

    def __init__(self, vertex, tau, visited, reach, F, D, items, forced,
                 q_forced, parent, pred, sgn):
        self.vertex = vertex
        self.tau = tau
        self.visited = visited
        self.reach = reach
        self.F = F
        self.D = D
        self.items = items      # tuple of (base, cap(None=inf), vertex)
        self.forced = forced    # tuple of (base, qty, vertex)
        self.q_forced = q_forced
        self.parent = parent
        self.pred = pred
        self.sgn = sgn          # -1 forward, +1 backward (slope = base + sgn*A*D)
        self.dead = False
        self.fn = None
        self.bound = None

    def slopes(self, A):
        shift = self.sgn * A * self.D
        return [(base + shift, cap, v) for base, cap, v in self.items]

    def forced_credit(self, A):
        shift = self.sgn * A * self.D
        return sum(qty * (base + shift) for base, qty, v in self.forced)

    def make_fn(self, Q, A):
        """Clamped breakpoint form of this label's cost function on [0, Q]."""
        if self.fn is not None:
            return self.fn
        q0 = float(self.q_forced)
        v0 = self.F - self.forced_credit(A)
        qs = [q0]
        vs = [v0]
        q, v = q0, v0
        for g, cap, _ in sorted(self.slopes(A), key=lambda t: -t[0]):
            if g <= 0 or q >= Q:
                break
            step = (Q - q) if cap is None else min(cap, Q - q)
            q += step
            v -= step * g
            qs.append(q)
            vs.append(v)
        self.fn = (q0, qs, vs)
        return self.fn

    def make_bound(self, Q, A):
        """Lower bound on the label's contribution to any join value."""
        if self.bound is None:
            q0, qs, vs = self.make_fn(Q, A)
            self.bound = vs[-1]  # clamped functions are nonincreasing
        return self.bound

    def route(self):
        seq = []
        lab = self
        while lab is not None:
            seq.append(lab.vertex)
            lab = lab.parent
        if self.sgn < 0:
            seq.reverse()
        return seq


# ---- dominance graph (per vertex, per predecessor class) ----


class DomNode:
    __slots__ = ("tau", "reach", "labels", "env", "children", "parents")

    def __init__(self, tau, reach, label, fn):
        self.tau = tau
        self.reach = reach
        self.labels = [label]
        self.env = fn
        self.children = []
        self.parents = []


def _leq(tau_a, reach_a, tau_b, reach_b):
    """Order-dominance (allows equality): earlier time, larger reachable set."""
    return tau_a <= tau_b and (reach_a | reach_b) == reach_a


class DomGraph:
    def __init__(self, Q, eps=EPS_DOM):
        self.Q = Q
        self.eps = eps
        self.by_key = {}
        self.tops = []

    def insert(self, label, fn) -> bool:
        """Algorithm: check set dominance, then insert and purge."""
        key = (label.tau, label.reach)
        node = self.by_key.get(key)
        if node is not None:
            # node env is exactly the envelope of all labels with
            # order-dominating (tau, V), including equal keys
            if pw_le(node.env, fn, self.Q, self.eps):
                return False
        else:
            seen = set()
            for top in list(self.tops):
                if _leq(top.tau, top.reach, label.tau, label.reach) and \
                        self._check(top, label.tau, label.reach, fn, seen):
                    return False
        if node is None:
            node = self._create_node(label, fn)
        else:
            node.labels.append(label)
            self._refresh_env(node, fn)
        self._purge_siblings(node)
        self._push_down(node)
        return True

    def _check(self, u, tau, reach, fn, seen) -> bool:
        descended = False
        for v in u.children:
            if id(v) in seen:
                continue
            seen.add(id(v))
            if (v.tau, v.reach) != (tau, reach) and _leq(v.tau, v.reach, tau, reach):
                descended = True
                if self._check(v, tau, reach, fn, seen):
                    return True
        if not descended:
            return pw_le(u.env, fn, self.Q, self.eps)
        return False

    def _create_node(self, label, fn) -> DomNode:
        w = DomNode(label.tau, label.reach, label, fn)
        self.by_key[(label.tau, label.reach)] = w
        seen = set()
        for top in list(self.tops):
            if (top.tau, top.reach) != (w.tau, w.reach) and \
                    _leq(top.tau, top.reach, w.tau, w.reach):
                self._attach(top, w, seen)
        if not w.parents:
            self.tops.append(w)
        # existing tops that belong below the new node
        for t in list(self.tops):
            if t is not w and _leq(w.tau, w.reach, t.tau, t.reach):
                self._add_edge(w, t)
                self.tops.remove(t)
        env = fn
        for p in w.parents:
            env = pw_min(env, p.env)
        w.env = env
        return w

    def _attach(self, u, w, seen):
        descended = False
        for v in list(u.children):
            if id(v) in seen:
                if (v.tau, v.reach) != (w.tau, w.reach) and \
                        _leq(v.tau, v.reach, w.tau, w.reach):
                    descended = True
                continue
            seen.add(id(v))
            if (v.tau, v.reach) != (w.tau, w.reach) and \
                    _leq(v.tau, v.reach, w.tau, w.reach):
                descended = True
                self._attach(v, w, seen)
        if not descended:
            self._add_edge(u, w)
            for v in list(u.children):
                if v is not w and _leq(w.tau, w.reach, v.tau, v.reach):
                    u.children.remove(v)
                    v.parents.remove(u)
                    self._add_edge(w, v)

    @staticmethod
    def _add_edge(u, v):
        if v not in u.children:
            u.children.append(v)
            v.parents.append(u)

    def _refresh_env(self, node, new_fn):
        node.env = pw_min(node.env, new_fn)

    def _purge_siblings(self, node):
        """Drop labels of the node made redundant by the node envelope minus
        their own contribution (keeps one representative of equal functions)."""
        if len(node.labels) <= 1:
            return
        alive = list(node.labels)
        for lab in list(alive):
            if len(alive) == 1:
                break
            others = [l.fn for l in alive if l is not lab]
            env = others[0]
            for f in others[1:]:
                env = pw_min(env, f)
            for p in node.parents:
                env = pw_min(env, p.env)
            if pw_le(env, lab.fn, self.Q, self.eps):
                lab.dead = True
                alive.remove(lab)
        node.labels = alive

    def _push_down(self, start):
        stack = [start]
        while stack:
            u = stack.pop()
            for v in u.children:
                cand = pw_min(v.env, u.env)
                if self._improves(cand, v.env):
                    survivors = []
                    for lab in v.labels:
                        if not lab.dead and pw_le(u.env, lab.fn, self.Q, self.eps):
                            lab.dead = True
                        else:
                            survivors.append(lab)
                    v.labels = survivors
                    v.env = cand
                    stack.append(v)

    @staticmethod
    def _improves(cand, old) -> bool:
        if cand[1] == old[1] and cand[2] == old[2]:
            return False
        for q, val in zip(cand[1], cand[2]):
            if val < _pw_eval(old, q) - 1e-9:
                return True
        return False

    def all_labels(self):
        for node in self.by_key.values():
            yield from node.labels


def _pw_eval(fn, q):
    from .costfn import pw_eval

    return pw_eval(fn, q)


# ---- static per-instance tables ----


class PricingContext:
    """Instance-level tables reused across pricing calls."""

    _cache: dict = {}

    def __init__(self, inst):
        self.inst = inst
        n = inst.n
        self.n = n
        self.depot_bit = 1
        self.end_bit = 1 << (n + 1)
        self.customer_mask = sum(1 << v for v in range(1, n + 1))
        t = inst.time
        # forward kill tables: at vertex j with start time tau, every k with
        # l_k - s_j - t[j][k] < tau is unreachable for the rest of the route
        self.fwd_thr = []
        self.fwd_masks = []
        for j in range(n + 2):
            pairs = []
            for k in range(1, n + 2):
                if k == j:
                    continue
                pairs.append((inst.l[k] - inst.s[j] - t[j][k], 1 << k))
            pairs.sort()
            thr = [p[0] for p in pairs]
            masks = [0]
            acc = 0
            for _, bit in pairs:
                acc |= bit
                masks.append(acc)
            self.fwd_thr.append(thr)
            self.fwd_masks.append(masks)
        # backward kill tables: at vertex i with consumed time tau_b, every k
        # with (T - e_k - s_k) - s_i - t[k][i] < tau_b cannot precede i
        T = inst.T
        self.bwd_thr = []
        self.bwd_masks = []
        for i in range(n + 2):
            pairs = []
            for k in list(range(1, n + 1)) + [0]:
                if k == i:
                    continue
                pairs.append((T - inst.e[k] - inst.s[k] - inst.s[i] - t[k][i], 1 << k))
            pairs.sort()
            thr = [p[0] for p in pairs]
            masks = [0]
            acc = 0
            for _, bit in pairs:
                acc |= bit
                masks.append(acc)
            self.bwd_thr.append(thr)
            self.bwd_masks.append(masks)

    @classmethod
    def get(cls, inst) -> "PricingContext":
        ctx = cls._cache.get(id(inst))
        if ctx is None or ctx.inst is not inst:
            ctx = cls(inst)
            cls._cache[id(inst)] = ctx
        return ctx

    def fwd_kill(self, j, tau):
        thr = self.fwd_thr[j]
        return self.fwd_masks[j][bisect_left(thr, tau)]

    def bwd_kill(self, i, tau):
        thr = self.bwd_thr[i]
        return self.bwd_masks[i][bisect_left(thr, tau)]


# ---- extension functions ----


def extend_forward(label, j, inst, duals, ctx, enforced_mask, smv_full):
    """Extend a forward label along (i, j).  smv_full selects the forced-full
    variant (type 2).  Returns the new label or None when infeasible."""
    i = label.vertex
    bit = 1 << j
    if label.visited & bit and enforced_mask & bit:
        return None
    t = inst.time[i][j]
    tau = label.tau + inst.s[i] + t
    if tau < inst.e[j]:
        tau = inst.e[j]
    if tau > inst.l[j]:
        return None
    c = inst.dist[i][j]
    A = inst.a_num
    F = label.F + inst.b_num * c - duals.edge_dual(i, j) - duals.mu[j]
    if label.pred >= 0 and duals.pair:
        F -= duals.pair_dual(label.pred, i, j)
    gamma = duals.gamma[j] if j in duals.gamma_set else 0.0
    D = label.D + c
    base = duals.pi[j] + A * D  # effective slope at D' >= D is base - A*D'
    reach = label.reach & ~ctx.fwd_kill(j, tau)
    if enforced_mask & bit:
        reach &= ~bit
    if not reach & ctx.end_bit:
        return None
    visited = label.visited | bit
    if smv_full:
        if gamma <= 0 or inst.d[j] > inst.Q - label.q_forced:
            return None
        return Label(
            j, tau, visited, reach, F - 2 * gamma, D,
            label.items, label.forced + ((base, inst.d[j], j),),
            label.q_forced + inst.d[j], label, i, -1,
        )
    return Label(
        j, tau, visited, reach, F - gamma, D,
        label.items + ((base, inst.d[j], j),), label.forced,
        label.q_forced, label, i, -1,
    )


def extend_backward(label, i, inst, duals, ctx, enforced_mask, smv_full):
    """Extend a backward label from its vertex j back to vertex i."""
    j = label.vertex
    bit = 1 << i
    if label.visited & bit and enforced_mask & bit:
        return None
    t = inst.time[i][j]
    tau = label.tau + inst.s[j] + t
    lo = inst.T - inst.l[i] - inst.s[i]
    if tau < lo:
        tau = lo
    if tau > inst.T - inst.e[i] - inst.s[i]:
        return None
    c = inst.dist[i][j]
    A = inst.a_num
    F = label.F + (A * inst.Q + inst.b_num) * c - duals.edge_dual(i, j) - duals.mu[i]
    if label.pred >= 0 and duals.pair:
        F -= duals.pair_dual(i, j, label.pred)
    gamma = duals.gamma[i] if i in duals.gamma_set else 0.0
    D = label.D + c
    base = duals.pi[i] - A * D  # effective slope at D' >= D is base + A*D'
    reach = label.reach & ~ctx.bwd_kill(i, tau)
    if enforced_mask & bit:
        reach &= ~bit
    if not reach & ctx.depot_bit:
        return None
    visited = label.visited | bit
    if smv_full:
        if gamma <= 0 or inst.d[i] > inst.Q - label.q_forced:
            return None
        return Label(
            i, tau, visited, reach, F - 2 * gamma, D,
            label.items, label.forced + ((base, inst.d[i], i),),
            label.q_forced + inst.d[i], label, j, +1,
        )
    return Label(
        i, tau, visited, reach, F - gamma, D,
        label.items + ((base, inst.d[i], i),), label.forced,
        label.q_forced, label, j, +1,
    )


def initial_forward(inst, duals, ctx):
    reach = ctx.customer_mask | ctx.end_bit
    reach &= ~ctx.fwd_kill(0, inst.e[0])
    return Label(0, inst.e[0], 1, reach, -duals.veh, 0, (), (), 0, None, -1, -1)


def initial_backward(inst, duals, ctx):
    reach = ctx.customer_mask | ctx.depot_bit
    reach &= ~ctx.bwd_kill(inst.n + 1, 0)
    items = ((0.0, None, inst.n + 1),)  # slack: slope a * (backward distance)
    return Label(inst.n + 1, 0, ctx.end_bit, reach, 0.0, 0, items, (), 0, None, -1, +1)


# ---- label-setting passes ----


def _run_pass(inst, duals, ctx, cfg, enforced_mask, split_set, forward: bool):
    """Label-setting sweep in one direction; returns live labels per vertex."""
    n = inst.n
    store: list[list[Label]] = [[] for _ in range(n + 2)]
    graphs: dict = {}
    forbidden = cfg.forbidden_edges
    if forward:
        init = initial_forward(inst, duals, ctx)
        targets = [
            [j for j in inst.succ[i] if 1 <= j <= n and (i, j) not in forbidden]
            for i in range(n + 2)
        ]
        extend = extend_forward
    else:
        init = initial_backward(inst, duals, ctx)
        targets = [
            [i for i in inst.pred[j] if 1 <= i <= n and (i, j) not in forbidden]
            for j in range(n + 2)
        ]
        extend = extend_backward
    store[init.vertex].append(init)
    heap = [(init.tau, 0, init)]
    seq = 1
    created = 1
    T = inst.T
    gamma_set = duals.gamma_set
    gamma = duals.gamma
    while heap:
        tau, _, lab = heapq.heappop(heap)
        if lab.dead:
            continue
        if cfg.bidirectional and 2 * tau > T:
            continue
        for v in targets[lab.vertex]:
            variants = (False, True) if (v in gamma_set and gamma[v] > 0) else (False,)
            for smv_full in variants:
                new = extend(lab, v, inst, duals, ctx, enforced_mask, smv_full)
                if new is None:
                    continue
                if cfg.dominance:
                    cls = new.pred if v in split_set else -1
                    graph = graphs.get((v, cls))
                    if graph is None:
                        graph = DomGraph(inst.Q)
                        graphs[(v, cls)] = graph
                    if not graph.insert(new, new.make_fn(inst.Q, inst.a_num)):
                        continue
                created += 1
                store[v].append(new)
                heap_entry = (new.tau, seq, new)
                seq += 1
                heapq.heappush(heap, heap_entry)
    for v in range(n + 2):
        store[v] = [l for l in store[v] if not l.dead]
    return store, created


def _route_of_join(fwd: Label, bwd: Label):
    return tuple(fwd.route() + bwd.route())


def _is_elementary(route, n) -> bool:
    seen = 0
    for v in route:
        if 1 <= v <= n:
            bit = 1 << v
            if seen & bit:
                return False
            seen |= bit
    return True


def _join_all(inst, duals, ctx, cfg, enforced_mask, fwd_store, bwd_store, pool):
    """Enumerate forward x backward joins over every connecting edge.

    Updates `pool` (dict keyed by (route, pattern)) with elementary negative
    candidates and returns (exact minimum value, minimizing route)."""
    n = inst.n
    A, B, Q = inst.a_num, inst.b_num, inst.Q
    Tmax = inst.T
    time = inst.time
    dist = inst.dist
    cust_mask = ctx.customer_mask
    cur_min = INF
    cur_min_route = None
    fwd_sorted: list = []
    for i in range(n + 1):
        labs = [l for l in fwd_store[i] if not l.dead]
        for l in labs:
            l.make_bound(Q, A)
        labs.sort(key=lambda l: l.bound)
        fwd_sorted.append(labs)
    bwd_sorted: dict = {}
    for j in range(1, n + 2):
        labs = [l for l in bwd_store[j] if not l.dead]
        for l in labs:
            l.make_bound(Q, A)
        bwd_sorted[j] = labs
    forbidden_pairs = cfg.forbidden_pairs
    have_pairs = bool(duals.pair) or bool(forbidden_pairs)
    for i in range(n + 1):
        flist = fwd_sorted[i]
        if not flist:
            continue
        s_i = inst.s[i]
        for j in inst.succ[i]:
            if j == 0 or (i == 0 and j == n + 1):
                continue
            if (i, j) in cfg.forbidden_edges:
                continue
            blist = bwd_sorted.get(j)
            if not blist:
                continue
            c = dist[i][j]
            # backward tau is measured from the departure at j, so the join
            # budget must also cover j's own service time
            t_edge = s_i + time[i][j] + inst.s[j]
            const = B * c - duals.edge_dual(i, j)
            carry = A * c
            bkeyed = sorted(((b.bound - carry * b.q_forced, b) for b in blist),
                            key=lambda x: x[0])
            bkey0 = bkeyed[0][0]
            for f in flist:
                # evaluate a pair when it may beat the incumbent minimum or be
                # a negative candidate; both thresholds only shrink over time
                threshold = cur_min if cur_min > -EPS_CAND else -EPS_CAND
                if f.bound + bkey0 + const >= threshold:
                    break
                tau_limit = Tmax - f.tau - t_edge
                for bkey, b in bkeyed:
                    if f.bound + bkey + const >= threshold:
                        break
                    if b.tau > tau_limit:
                        continue
                    if f.visited & b.visited & enforced_mask & cust_mask:
                        continue
                    if have_pairs:
                        if (f.pred, i, j) in forbidden_pairs:
                            continue
                        if (i, j, b.pred) in forbidden_pairs:
                            continue
                    value = _join_value(f, b, inst, duals, c, const, carry, cfg)
                    if value >= threshold:
                        continue
                    route = _route_of_join(f, b)
                    adjusted = value - duals.route_dual(route)
                    if adjusted < cur_min:
                        cur_min = adjusted
                        cur_min_route = route
                    if adjusted < -EPS_CAND and _is_elementary(route, n):
                        quantities = _join_pattern(f, b, inst, c)
                        key = (route, tuple(sorted(quantities.items())))
                        old = pool.get(key)
                        if old is None or adjusted < old.value:
                            pool[key] = Candidate(route, quantities, adjusted, True)
    return cur_min, cur_min_route


def _merged_items(f: Label, b: Label, inst, c):
    """Effective (slope, cap, vertex) triples of the joined label pair; the
    backward part is carried over the connecting edge (slopes gain a*c)."""
    A = inst.a_num
    items = [(base - A * f.D, cap, v) for base, cap, v in f.items]
    shift = A * (b.D + c)
    items += [(base + shift, cap, v) for base, cap, v in b.items]
    return items


def _join_value(f: Label, b: Label, inst, duals, c, const, carry, cfg):
    A, Q = inst.a_num, inst.Q
    if cfg.literal_join:
        # paper-text form: backward slopes not carried across the join edge
        items = [(base - A * f.D, cap, v) for base, cap, v in f.items]
        items += [(base + A * b.D, cap, v) for base, cap, v in b.items]
        fixed = f.F + b.F + const
        credit = f.forced_credit(A) + b.forced_credit(A)
    else:
        items = _merged_items(f, b, inst, c)
        fixed = f.F + b.F + carry * Q + const
        credit = f.forced_credit(A) + b.forced_credit(A) + carry * b.q_forced
    if duals.pair:
        if f.pred >= 0:
            fixed -= duals.pair_dual(f.pred, f.vertex, b.vertex)
        if b.pred >= 0:
            fixed -= duals.pair_dual(f.vertex, b.vertex, b.pred)
    budget = Q - f.q_forced - b.q_forced
    if budget < 0:
        return INF
    # fill the budget exactly; the infinite slack item absorbs the remainder,
    # so items below the slack slope are never collected
    items.sort(key=lambda it: (-it[0], it[1] is not None, it[2]))
    profit = 0.0
    for g, cap, _ in items:
        if budget <= 0:
            break
        take = budget if cap is None else min(cap, budget)
        profit += take * g
        budget -= take
    return fixed - credit - profit


def _join_pattern(f: Label, b: Label, inst, c):
    """Extreme collection pattern realizing the join value."""
    A, Q = inst.a_num, inst.Q
    items = _merged_items(f, b, inst, c)
    items.sort(key=lambda it: (-it[0], it[1] is not None, it[2]))
    quantities = {v: qty for _, qty, v in f.forced}
    for _, qty, v in b.forced:
        quantities[v] = quantities.get(v, 0) + qty
    budget = inst.Q - f.q_forced - b.q_forced
    end = inst.n + 1
    for g, cap, v in items:
        if budget <= 0:
            break
        take = budget if cap is None else min(cap, budget)
        if v != end and take > 0:
            quantities[v] = quantities.get(v, 0) + take
        budget -= take
    return quantities


def solve_pricing(inst, duals, config: PricingConfig | None = None) -> PricingResult:
    """Exact pricing: minimum-reduced-cost collection pattern and a pool of
    negative candidates.  Elementarity starts relaxed and is enforced
    incrementally on multiply-visited customers of the incumbent optimum."""
    cfg = config or PricingConfig()
    ctx = PricingContext.get(inst)
    split_set = frozenset(j for (_, j, _) in cfg.forbidden_pairs) | duals.pair_middles()
    enforced = 0 if cfg.decremental else ctx.customer_mask
    pool: dict = {}
    rounds = 0
    total_labels = 0
    while True:
        rounds += 1
        fwd_store, nf = _run_pass(inst, duals, ctx, cfg, enforced, split_set, True)
        if cfg.bidirectional:
            bwd_store, nb = _run_pass(inst, duals, ctx, cfg, enforced, split_set, False)
        else:
            bwd_store = [[] for _ in range(inst.n + 2)]
            bwd_store[inst.n + 1].append(initial_backward(inst, duals, ctx))
            nb = 1
        total_labels += nf + nb
        min_val, min_route = _join_all(
            inst, duals, ctx, cfg, enforced, fwd_store, bwd_store, pool
        )
        if min_route is not None and not _is_elementary(min_route, inst.n):
            add = 0
            counts: dict[int, int] = {}
            for v in min_route:
                if 1 <= v <= inst.n:
                    counts[v] = counts.get(v, 0) + 1
            for v, k in counts.items():
                if k > 1:
                    enforced |= 1 << v
                    add += 1
            if add:
                continue
        break
    cands = sorted(pool.values(), key=lambda cand: cand.value)[: cfg.max_columns]
    return PricingResult(cands, min_val, True, rounds, total_labels)
