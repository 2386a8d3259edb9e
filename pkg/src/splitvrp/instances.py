"""Benchmark instance handling: Solomon parsing, derivation, exact rounding.

All distances and times are stored as integers in units of 1/dist_scale
(tenths for Solomon-derived instances).  Edge costs are linear in the load,
cost(i,j,w) = c_ij * (a*w + b), and a, b are kept as exact rationals
(a_num/cost_den, b_num/cost_den) so that every pattern cost is an exact
integer in "scaled" units: scaled = paper_value * dist_scale * cost_den.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

INF_TIME = 10**9


class ParseError(ValueError):
    """Raised for malformed Solomon files; message names the line."""


@dataclass(frozen=True)
class SolomonVertex:
    id: int
    x: float
    y: float
    demand: int
    window_open: int
    window_close: int
    service: int


@dataclass(frozen=True)
class RawSolomon:
    name: str
    vehicle_capacity: int
    vertices: tuple[SolomonVertex, ...]

    @property
    def customers(self) -> int:
        return len(self.vertices) - 1


def parse_solomon(text: str) -> RawSolomon:
    """Parse a Solomon-format benchmark file (name, vehicle line, customer table)."""
    lines = text.splitlines()
    name = None
    capacity = None
    vertices: list[SolomonVertex] = []
    expect_vehicle_numbers = False
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        upper = line.upper()
        if name is None:
            name = line.split()[0]
            continue
        if upper.startswith("VEHICLE") or upper.startswith("CUSTOMER"):
            continue
        if "NUMBER" in upper and "CAPACITY" in upper:
            expect_vehicle_numbers = True
            continue
        if "CUST" in upper and "COORD" in upper.replace(".", ""):
            continue
        fields = line.split()
        if expect_vehicle_numbers and capacity is None:
            if len(fields) != 2:
                raise ParseError(f"line {lineno}: expected vehicle count and capacity")
            try:
                capacity = int(float(fields[1]))
            except ValueError as exc:
                raise ParseError(f"line {lineno}: non-numeric capacity") from exc
            continue
        if len(fields) != 7:
            raise ParseError(f"line {lineno}: expected 7 customer fields, got {len(fields)}")
        try:
            values = [float(f) for f in fields]
        except ValueError as exc:
            raise ParseError(f"line {lineno}: non-numeric field") from exc
        vid = int(values[0])
        if vid != len(vertices):
            raise ParseError(f"line {lineno}: vertex id {vid} out of order")
        vertices.append(
            SolomonVertex(
                id=vid,
                x=values[1],
                y=values[2],
                demand=int(values[3]),
                window_open=int(values[4]),
                window_close=int(values[5]),
                service=int(values[6]),
            )
        )
    if name is None:
        raise ParseError("empty file")
    if capacity is None:
        raise ParseError("missing vehicle capacity line")
    if not vertices:
        raise ParseError("missing customer table")
    depot = vertices[0]
    if depot.demand != 0 or depot.service != 0:
        raise ParseError("vertex 0 is not a depot row (demand/service must be 0)")
    for v in vertices:
        if v.demand < 0:
            raise ParseError(f"vertex {v.id}: negative demand")
        if v.window_open > v.window_close:
            raise ParseError(f"vertex {v.id}: window opens after it closes")
    return RawSolomon(name=name, vehicle_capacity=capacity, vertices=tuple(vertices))


def load_solomon(path) -> RawSolomon:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_solomon(fh.read())


def round_half_up_scaled(value: float, scale: int) -> int:
    """round-half-up(scale * value) computed in double precision."""
    return int(math.floor(value * scale + 0.5))


def repair_triangle(dist) -> list[list[int]]:
    """All-pairs-shortest-path closure of a square nonnegative integer matrix."""
    m = np.asarray(dist, dtype=np.int64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("distance matrix must be square")
    if (m < 0).any():
        raise ValueError("distance matrix must be nonnegative")
    n = m.shape[0]
    for k in range(n):
        np.minimum(m, m[:, k, None] + m[None, k, :], out=m)
    return m.tolist()


class Instance:
    """A derived instance over vertices 0..n+1 (0 and n+1 are depot copies)."""

    def __init__(
        self,
        name: str,
        demands: list[int],
        dist: list[list[int]],
        time: list[list[int]],
        e: list[int],
        l: list[int],
        s: list[int],
        Q: int,
        a: Fraction,
        b: Fraction,
        dist_scale: int,
        mode: str = "custom",
        coords=None,
    ):
        self.name = name
        self.n = len(demands) - 2
        self.N = self.n + 2
        self.d = list(demands)
        self.dist = [list(row) for row in dist]
        self.time = [list(row) for row in time]
        self.e = list(e)
        self.l = list(l)
        self.s = list(s)
        self.Q = int(Q)
        self.mode = mode
        self.coords = coords
        self.dist_scale = int(dist_scale)
        a = Fraction(a)
        b = Fraction(b)
        self.a = a
        self.b = b
        den = (a.denominator * b.denominator) // math.gcd(a.denominator, b.denominator)
        self.cost_den = den
        self.a_num = int(a * den)
        self.b_num = int(b * den)
        # scaled cost units per paper cost unit
        self.cost_scale = self.dist_scale * self.cost_den
        self._validate()
        self._precompute()

    def _validate(self):
        if self.d[0] != 0:
            raise ValueError("depot demand must be 0")
        if self.s[0] != 0 or self.s[self.n + 1] != 0:
            raise ValueError("depot service time must be 0")
        if any(di <= 0 for di in self.d[1 : self.n + 1]):
            raise ValueError("customer demands must be positive")
        if self.Q <= 0:
            raise ValueError("capacity must be positive")
        for i in range(self.N):
            if self.e[i] > self.l[i]:
                raise ValueError(f"vertex {i}: window opens after it closes")

    def _precompute(self):
        n = self.n
        t = self.time
        # successors V+(i) / predecessors V-(i): edge exists and window-compatible
        self.succ: list[list[int]] = [[] for _ in range(self.N)]
        self.pred: list[list[int]] = [[] for _ in range(self.N)]
        for i in range(n + 1):  # i != n+1
            for j in range(1, n + 2):  # j != 0
                if i == j:
                    continue
                if i == 0 and j == n + 1:
                    pass  # empty route edge is allowed
                if self.e[i] + self.s[i] + t[i][j] <= self.l[j]:
                    self.succ[i].append(j)
                    self.pred[j].append(i)
        self.T = max(
            (self.l[i] + self.s[i] + t[i][n + 1] for i in range(1, n + 1)),
            default=0,
        )
        self.V_S = tuple(i for i in range(1, n + 1) if self.d[i] <= self.Q)

    # ---- cost helpers (scaled integer units) ----

    def edge_cost(self, i: int, j: int, load: int) -> int:
        return self.dist[i][j] * (self.a_num * load + self.b_num)

    def route_empty_cost(self, route) -> int:
        """b-cost of traversing the route with zero load, scaled."""
        return sum(self.dist[u][v] * self.b_num for u, v in zip(route, route[1:]))

    def pattern_cost(self, route, quantities) -> int:
        """Exact scaled cost of a collection pattern (Eq.-(1) semantics)."""
        load = 0
        total = 0
        for u, v in zip(route, route[1:]):
            load += quantities.get(u, 0)
            total += self.dist[u][v] * (self.a_num * load + self.b_num)
        return total

    def to_paper(self, scaled) -> float:
        return scaled / self.cost_scale

    def from_paper(self, value: float) -> float:
        return value * self.cost_scale

    # ---- serialization ----

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "n": self.n,
            "Q": self.Q,
            "mode": self.mode,
            "a": [self.a.numerator, self.a.denominator],
            "b": [self.b.numerator, self.b.denominator],
            "dist_scale": self.dist_scale,
            "demands": self.d,
            "e": self.e,
            "l": self.l,
            "s": self.s,
            "dist": self.dist,
            "time": self.time,
            "coords": self.coords,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Instance":
        return cls(
            name=data["name"],
            demands=data["demands"],
            dist=data["dist"],
            time=data["time"],
            e=data["e"],
            l=data["l"],
            s=data["s"],
            Q=data["Q"],
            a=Fraction(data["a"][0], data["a"][1]),
            b=Fraction(data["b"][0], data["b"][1]),
            dist_scale=data["dist_scale"],
            mode=data.get("mode", "custom"),
            coords=data.get("coords"),
        )

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path) -> "Instance":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def derive(
    raw: RawSolomon,
    n: int,
    Q: int,
    mode: str,
    depot_due: str = "infinite",
    repair: bool = True,
) -> Instance:
    """Derive an instance from a Solomon file: first n customers, depot copy
    appended as vertex n+1, distances rounded to tenths, triangle repair."""
    if n > raw.customers:
        raise ValueError(f"instance has only {raw.customers} customers, asked for {n}")
    if mode not in ("scvrptwl", "sdvrptw"):
        raise ValueError(f"unknown mode {mode!r}")
    verts = list(raw.vertices[: n + 1]) + [raw.vertices[0]]
    scale = 10
    N = n + 2
    dist = [[0] * N for _ in range(N)]
    for i in range(N):
        for j in range(N):
            if i == j:
                continue
            dx = verts[i].x - verts[j].x
            dy = verts[i].y - verts[j].y
            dist[i][j] = round_half_up_scaled(math.hypot(dx, dy), scale)
    if repair:
        dist = repair_triangle(dist)
    time = [row[:] for row in dist]  # Solomon convention: travel time = distance
    demands = [v.demand for v in verts]
    demands[n + 1] = 0
    e = [v.window_open * scale for v in verts]
    s = [v.service * scale for v in verts]
    s[n + 1] = 0
    l = [v.window_close * scale for v in verts]
    if depot_due == "infinite":
        l[n + 1] = INF_TIME
    elif depot_due != "file":
        raise ValueError("depot_due must be 'infinite' or 'file'")
    if mode == "scvrptwl":
        a, b = Fraction(1), Fraction(Q, 4)
    else:
        a, b = Fraction(0), Fraction(1)
    return Instance(
        name=f"{raw.name}-{n}-{Q}",
        demands=demands,
        dist=dist,
        time=time,
        e=e,
        l=l,
        s=s,
        Q=Q,
        a=a,
        b=b,
        dist_scale=scale,
        mode=mode,
        coords=[(v.x, v.y) for v in verts],
    )


def build_instance(
    name: str,
    coords: list[tuple[float, float]],
    demands: list[int],
    Q: int,
    a,
    b,
    e=None,
    l=None,
    s=None,
    dist_scale: int = 10,
    mode: str = "custom",
    repair: bool = True,
) -> Instance:
    """Build an instance from explicit vertex data.  coords[0] is the depot;
    a copy is appended as the return depot.  Windows default to [0, inf)."""
    n = len(coords) - 1
    pts = list(coords) + [coords[0]]
    N = n + 2
    dist = [[0] * N for _ in range(N)]
    for i in range(N):
        for j in range(N):
            if i != j:
                dx = pts[i][0] - pts[j][0]
                dy = pts[i][1] - pts[j][1]
                dist[i][j] = round_half_up_scaled(math.hypot(dx, dy), dist_scale)
    if repair:
        dist = repair_triangle(dist)
    time = [row[:] for row in dist]
    dem = [0] + list(demands) + [0]
    e_full = [0] * N if e is None else [0] + [x * dist_scale for x in e] + [0]
    if l is None:
        l_full = [INF_TIME] * N
    else:
        l_full = [INF_TIME] + [x * dist_scale for x in l] + [INF_TIME]
    s_full = [0] * N if s is None else [0] + [x * dist_scale for x in s] + [0]
    return Instance(
        name=name,
        demands=dem,
        dist=dist,
        time=time,
        e=e_full,
        l=l_full,
        s=s_full,
        Q=Q,
        a=a,
        b=b,
        dist_scale=dist_scale,
        mode=mode,
        coords=pts,
    )
