"""LP backend used by the restricted master problem.

The model is an incremental column/row store solved through HiGHS
(scipy.optimize.linprog).  Duals are normalized to the convention
reduced_cost_j = obj_j - sum_i y_i * a_ij  and  objective = sum_i y_i * rhs_i
for models whose columns are bounded below by 0 (plus finite-bound terms
otherwise).  An LP-format export is provided for external cross-checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import csc_matrix


class LpError(RuntimeError):
    """Numerical failure reported by the backend (never silent garbage)."""


@dataclass
class LpResult:
    status: str  # optimal | infeasible | unbounded
    objective: float | None
    primal: list[float] | None
    dual: list[float] | None
    reduced: list[float] | None


class LpModel:
    def __init__(self):
        self.row_sense: list[str] = []  # '>=', '<=', '='
        self.row_rhs: list[float] = []
        self.col_obj: list[float] = []
        self.col_entries: list[dict[int, float]] = []
        self.col_lo: list[float] = []
        self.col_hi: list[float | None] = []

    @property
    def num_rows(self) -> int:
        return len(self.row_rhs)

    @property
    def num_cols(self) -> int:
        return len(self.col_obj)

    def add_row(self, sense: str, rhs: float) -> int:
        if sense not in (">=", "<=", "="):
            raise ValueError(f"bad row sense {sense!r}")
        self.row_sense.append(sense)
        self.row_rhs.append(float(rhs))
        return len(self.row_rhs) - 1

    def add_column(self, obj: float, entries: dict[int, float], lo: float = 0.0, hi=None) -> int:
        for r in entries:
            if not 0 <= r < self.num_rows:
                raise ValueError(f"entry references unknown row {r}")
        self.col_obj.append(float(obj))
        self.col_entries.append({r: float(v) for r, v in entries.items() if v != 0.0})
        self.col_lo.append(float(lo))
        self.col_hi.append(hi)
        return len(self.col_obj) - 1

    def set_col_bounds(self, col: int, lo: float = 0.0, hi=None):
        self.col_lo[col] = float(lo)
        self.col_hi[col] = hi

    def solve(self) -> LpResult:
        n_rows, n_cols = self.num_rows, self.num_cols
        if n_cols == 0:
            raise LpError("model has no columns")
        data, ri, ci = [], [], []
        for j, entries in enumerate(self.col_entries):
            for r, v in entries.items():
                ri.append(r)
                ci.append(j)
                data.append(v)
        a_full = csc_matrix((data, (ri, ci)), shape=(n_rows, n_cols))
        ub_rows = [i for i in range(n_rows) if self.row_sense[i] != "="]
        eq_rows = [i for i in range(n_rows) if self.row_sense[i] == "="]
        ub_sign = np.array([1.0 if self.row_sense[i] == "<=" else -1.0 for i in ub_rows])
        kw = {}
        if ub_rows:
            kw["A_ub"] = a_full[ub_rows, :].multiply(ub_sign[:, None]).tocsc()
            kw["b_ub"] = np.array([self.row_rhs[i] for i in ub_rows]) * ub_sign
        if eq_rows:
            kw["A_eq"] = a_full[eq_rows, :]
            kw["b_eq"] = np.array([self.row_rhs[i] for i in eq_rows])
        bounds = list(zip(self.col_lo, self.col_hi))
        res = linprog(np.array(self.col_obj), bounds=bounds, method="highs", **kw)
        if res.status == 2:
            return LpResult("infeasible", None, None, None, None)
        if res.status == 3:
            return LpResult("unbounded", None, None, None, None)
        if res.status != 0:
            raise LpError(f"backend failure (status {res.status}): {res.message}")
        dual = [0.0] * n_rows
        if ub_rows:
            for k, i in enumerate(ub_rows):
                dual[i] = float(res.ineqlin.marginals[k]) * ub_sign[k]
        if eq_rows:
            for k, i in enumerate(eq_rows):
                dual[i] = float(res.eqlin.marginals[k])
        y = np.array(dual)
        reduced = np.array(self.col_obj) - a_full.T.dot(y)
        return LpResult(
            "optimal",
            float(res.fun),
            [float(v) for v in res.x],
            dual,
            [float(v) for v in reduced],
        )

    def write_lp(self, path):
        """Export in CPLEX LP text format for external verification."""
        lines = ["Minimize", " obj: " + _expr({j: c for j, c in enumerate(self.col_obj)})]
        lines.append("Subject To")
        by_row: list[dict[int, float]] = [dict() for _ in range(self.num_rows)]
        for j, entries in enumerate(self.col_entries):
            for r, v in entries.items():
                by_row[r][j] = v
        op = {">=": ">=", "<=": "<=", "=": "="}
        for i, entries in enumerate(by_row):
            lines.append(f" r{i}: {_expr(entries)} {op[self.row_sense[i]]} {self.row_rhs[i]}")
        lines.append("Bounds")
        for j in range(self.num_cols):
            hi = "+inf" if self.col_hi[j] is None else str(self.col_hi[j])
            lines.append(f" {self.col_lo[j]} <= x{j} <= {hi}")
        lines.append("End")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")


def _expr(entries: dict[int, float]) -> str:
    if not entries:
        return "0 x0"
    parts = []
    for j in sorted(entries):
        v = entries[j]
        sign = "+" if v >= 0 else "-"
        parts.append(f"{sign} {abs(v)} x{j}")
    out = " ".join(parts)
    return out[2:] if out.startswith("+ ") else out
