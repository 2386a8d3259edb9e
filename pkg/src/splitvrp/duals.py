"""Dual values handed from the restricted master to the pricing solvers.

All values are in scaled cost units.  pi/mu/gamma are indexed by vertex with
zeros at both depots.  Edge duals accumulate every row whose column
coefficient is an edge indicator (capacity cuts, edge-flow branching rows,
edge-upper-bound rows); they are subtracted once per traversal of the edge.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class DualContext:
    pi: list[float]
    mu: list[float]
    gamma: list[float]
    gamma_set: frozenset[int] = frozenset()
    edge: dict[tuple[int, int], float] = field(default_factory=dict)
    veh: float = 0.0
    pair: dict[tuple[int, int, int], float] = field(default_factory=dict)
    route: dict[tuple[int, ...], float] = field(default_factory=dict)

    @classmethod
    def zeros(cls, inst) -> "DualContext":
        N = inst.N
        return cls(pi=[0.0] * N, mu=[0.0] * N, gamma=[0.0] * N)

    def edge_dual(self, i: int, j: int) -> float:
        if not self.edge:
            return 0.0
        return self.edge.get((i, j), 0.0)

    def pair_dual(self, i: int, j: int, k: int) -> float:
        if not self.pair:
            return 0.0
        return self.pair.get((i, j, k), 0.0)

    def route_dual(self, route: tuple[int, ...]) -> float:
        if not self.route:
            return 0.0
        return self.route.get(route, 0.0)

    def pair_middles(self) -> frozenset[int]:
        """Vertices that appear as the middle of an active consecutive-pair
        row; labels at those vertices must keep their predecessor in the
        dominance key."""
        return frozenset(j for (_, j, _) in self.pair)
