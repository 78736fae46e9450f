"""Dense two-phase simplex for the small LPs built by the solvers.

Models are maximization problems. Large models can optionally be routed to
scipy's HiGHS dual simplex, which also returns a basic solution.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-7
# Tableaus larger than this (rows x columns) go to HiGHS under method="auto".
AUTO_CELLS = 500_000

RELATIONS = ("<=", "=", ">=")


class LpModelError(ValueError):
    """Malformed model: bad index, unknown relation or non-finite data."""


class LpFailure(RuntimeError):
    """Raised by callers when an LP that must be solvable is not."""


@dataclass(frozen=True)
class Constraint:
    coeffs: Mapping[int, float]
    relation: str
    rhs: float


@dataclass
class LpModel:
    """max c.x subject to linear rows and per-variable bounds.

    ``lower[j] = None`` makes x_j free below; ``upper[j] = None`` means no upper bound.
    """

    num_vars: int
    objective: Sequence[float]
    constraints: list = field(default_factory=list)
    lower: list | None = None
    upper: list | None = None
    names: list | None = None

    def add(self, coeffs: Mapping[int, float], relation: str, rhs: float) -> None:
        self.constraints.append(Constraint(dict(coeffs), relation, float(rhs)))

    def bounds(self) -> tuple[list, list]:
        lo = list(self.lower) if self.lower is not None else [0.0] * self.num_vars
        hi = list(self.upper) if self.upper is not None else [None] * self.num_vars
        return lo, hi

    def validate(self) -> None:
        if self.num_vars < 1:
            raise LpModelError("model needs at least one variable")
        if len(self.objective) != self.num_vars:
            raise LpModelError("objective length differs from num_vars")
        if not all(math.isfinite(c) for c in self.objective):
            raise LpModelError("objective has non-finite coefficients")
        lo, hi = self.bounds()
        if len(lo) != self.num_vars or len(hi) != self.num_vars:
            raise LpModelError("bounds length differs from num_vars")
        for j, (a, b) in enumerate(zip(lo, hi)):
            if a is not None and not math.isfinite(a):
                raise LpModelError(f"lower bound of x{j} is not finite")
            if b is not None and not math.isfinite(b):
                raise LpModelError(f"upper bound of x{j} is not finite")
        for k, row in enumerate(self.constraints):
            if row.relation not in RELATIONS:
                raise LpModelError(f"row {k}: unknown relation {row.relation!r}")
            if not math.isfinite(row.rhs):
                raise LpModelError(f"row {k}: non-finite rhs")
            for j, a in row.coeffs.items():
                if not 0 <= j < self.num_vars:
                    raise LpModelError(f"row {k}: variable index {j} out of range")
                if not math.isfinite(a):
                    raise LpModelError(f"row {k}: non-finite coefficient on x{j}")

    def to_text(self) -> str:
        """Plain equation listing, for debugging."""
        name = (lambda j: self.names[j]) if self.names else (lambda j: f"x{j}")

        def expr(coeffs):
            terms = [f"{a:+g} {name(j)}" for j, a in sorted(coeffs.items()) if a != 0]
            return " ".join(terms) if terms else "0"

        lines = ["max " + expr(dict(enumerate(self.objective))), "subject to"]
        for k, row in enumerate(self.constraints):
            lines.append(f"  r{k}: {expr(row.coeffs)} {row.relation} {row.rhs:g}")
        lo, hi = self.bounds()
        lines.append("bounds")
        for j in range(self.num_vars):
            a = "-inf" if lo[j] is None else f"{lo[j]:g}"
            b = "+inf" if hi[j] is None else f"{hi[j]:g}"
            lines.append(f"  {a} <= {name(j)} <= {b}")
        return "\n".join(lines)

    def residuals(self, x: np.ndarray) -> np.ndarray:
        """Signed violation of each row and bound at ``x`` (positive means violated)."""
        out = []
        for row in self.constraints:
            lhs = sum(a * x[j] for j, a in row.coeffs.items())
            if row.relation == "<=":
                out.append(lhs - row.rhs)
            elif row.relation == ">=":
                out.append(row.rhs - lhs)
            else:
                out.append(abs(lhs - row.rhs))
        lo, hi = self.bounds()
        for j in range(self.num_vars):
            if lo[j] is not None:
                out.append(lo[j] - x[j])
            if hi[j] is not None:
                out.append(x[j] - hi[j])
        return np.array(out)


@dataclass(frozen=True)
class LpSolution:
    status: str  # "optimal" | "infeasible" | "unbounded"
    values: np.ndarray | None
    objective_value: float

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def solve_lp(model: LpModel, method: str = "auto") -> LpSolution:
    """Solve ``model``; method is "simplex", "highs" or "auto" (size based)."""
    model.validate()
    if method == "auto":
        rows = len(model.constraints) + sum(h is not None for h in model.bounds()[1])
        method = "highs" if rows * (model.num_vars + 2 * rows) > AUTO_CELLS else "simplex"
    if method == "simplex":
        return _solve_tableau(model)
    if method == "highs":
        return _solve_highs(model)
    raise ValueError(f"unknown LP method {method!r}")


# ---------------------------------------------------------------------------
# standard form


def _standard_form(model: LpModel):
    """Rewrite to  max c'y + c0  s.t. A y (rel) b,  y >= 0.

    Returns the pieces plus a map turning y back into x.
    """
    lo, hi = model.bounds()
    cols = []  # per original var: list of (y column, sign)
    shift = np.zeros(model.num_vars)
    extra_rows = []  # (y col, ub) upper bound rows
    ny = 0
    for j in range(model.num_vars):
        a, b = lo[j], hi[j]
        if a is not None:
            shift[j] = a
            cols.append([(ny, 1.0)])
            if b is not None:
                extra_rows.append((ny, b - a))
            ny += 1
        elif b is not None:
            shift[j] = b
            cols.append([(ny, -1.0)])
            ny += 1
        else:
            cols.append([(ny, 1.0), (ny + 1, -1.0)])
            ny += 2

    m = len(model.constraints) + len(extra_rows)
    A = np.zeros((m, ny))
    b = np.zeros(m)
    rel = []
    for k, row in enumerate(model.constraints):
        rhs = row.rhs
        for j, a in row.coeffs.items():
            rhs -= a * shift[j]
            for yc, s in cols[j]:
                A[k, yc] += a * s
        b[k] = rhs
        rel.append(row.relation)
    for t, (yc, ub) in enumerate(extra_rows):
        A[len(model.constraints) + t, yc] = 1.0
        b[len(model.constraints) + t] = ub
        rel.append("<=")
    c = np.zeros(ny)
    for j, cj in enumerate(model.objective):
        for yc, s in cols[j]:
            c[yc] += cj * s

    def to_x(y: np.ndarray) -> np.ndarray:
        x = shift.copy()
        for j in range(model.num_vars):
            for yc, s in cols[j]:
                x[j] += s * y[yc]
        return x

    return A, b, rel, c, to_x


def _pivot(T: np.ndarray, i: int, j: int) -> None:
    T[i] /= T[i, j]
    f = T[:, j].copy()
    f[i] = 0.0
    T -= np.outer(f, T[i])
    T[:, j] = 0.0
    T[i, j] = 1.0


def _run(T: np.ndarray, basis: np.ndarray, ncols: int, max_iter: int) -> str:
    """Bland-rule primal simplex on tableau ``T``; the last row holds reduced costs."""
    m = T.shape[0] - 1
    for _ in range(max_iter):
        improving = np.flatnonzero(T[-1, :ncols] < -PIVOT_TOL)
        if improving.size == 0:
            return "optimal"
        j = improving[0]
        col = T[:m, j]
        pos = np.flatnonzero(col > PIVOT_TOL)
        if pos.size == 0:
            return "unbounded"
        ratios = T[pos, -1] / col[pos]
        rmin = ratios.min()
        tied = pos[ratios <= rmin + 1e-12 * max(1.0, abs(rmin))]
        i = tied[np.argmin(basis[tied])]
        _pivot(T, i, j)
        basis[i] = j
    raise RuntimeError(f"simplex hit the iteration cap ({max_iter})")


def _solve_tableau(model: LpModel) -> LpSolution:
    A, b, rel, c, to_x = _standard_form(model)
    m, ny = A.shape
    if m == 0:
        if np.any(c > PIVOT_TOL):
            return LpSolution("unbounded", None, math.inf)
        x = to_x(np.zeros(ny))
        return LpSolution("optimal", x, float(np.dot(model.objective, x)))

    neg = b < 0
    A[neg] *= -1
    b[neg] *= -1
    rel = [{"<=": ">=", ">=": "<=", "=": "="}[r] if f else r for r, f in zip(rel, neg)]

    n_slack = sum(r != "=" for r in rel)
    n_art = sum(r != "<=" for r in rel)
    ncols = ny + n_slack + n_art
    T = np.zeros((m + 1, ncols + 1))
    T[:m, :ny] = A
    T[:m, -1] = b
    basis = np.zeros(m, dtype=np.int64)
    s = ny
    a = ny + n_slack
    art_rows = []
    for i, r in enumerate(rel):
        if r == "<=":
            T[i, s] = 1.0
            basis[i] = s
            s += 1
        else:
            if r == ">=":
                T[i, s] = -1.0
                s += 1
            T[i, a] = 1.0
            basis[i] = a
            art_rows.append(i)
            a += 1
    max_iter = 50 * (m + ncols) + 1000

    # phase 1: maximize -sum(artificials)
    if art_rows:
        T[-1, :] = 0.0
        T[-1, ny + n_slack : ncols] = 1.0
        for i in art_rows:
            T[-1] -= T[i]
        _run(T, basis, ncols, max_iter)
        scale = max(1.0, float(np.abs(b).max()))
        if -T[-1, -1] > 1e-9 * scale:
            return LpSolution("infeasible", None, -math.inf)
        # drive remaining artificials out of the basis, dropping redundant rows
        keep = np.ones(m + 1, dtype=bool)
        for i in range(m):
            if basis[i] >= ny + n_slack:
                cand = np.flatnonzero(np.abs(T[i, : ny + n_slack]) > PIVOT_TOL)
                if cand.size:
                    _pivot(T, i, cand[0])
                    basis[i] = cand[0]
                else:
                    keep[i] = False
        T = T[keep]
        basis = basis[keep[:m]]
        m = T.shape[0] - 1

    # phase 2 over structural and slack columns only
    ncols2 = ny + n_slack
    T = np.hstack([T[:, :ncols2], T[:, -1:]])
    T[-1, :] = 0.0
    T[-1, :ny] = -c
    for i in range(m):
        if T[-1, basis[i]] != 0.0:
            T[-1] -= T[-1, basis[i]] * T[i]
    status = _run(T, basis, ncols2, max_iter)
    if status == "unbounded":
        return LpSolution("unbounded", None, math.inf)
    y = np.zeros(ncols2)
    y[basis] = T[:m, -1]
    x = to_x(y[:ny])
    return LpSolution("optimal", x, float(np.dot(model.objective, x)))


def _solve_highs(model: LpModel) -> LpSolution:
    from scipy.optimize import linprog
    from scipy.sparse import coo_matrix

    def block(rows, sign):
        r, cidx, vals, rhs = [], [], [], []
        for k, row in enumerate(rows):
            for j, a in row.coeffs.items():
                r.append(k)
                cidx.append(j)
                vals.append(sign * a)
            rhs.append(sign * row.rhs)
        if not rows:
            return None, None
        mat = coo_matrix((vals, (r, cidx)), shape=(len(rows), model.num_vars)).tocsr()
        return mat, np.array(rhs)

    le = [r for r in model.constraints if r.relation == "<="]
    ge = [r for r in model.constraints if r.relation == ">="]
    eq = [r for r in model.constraints if r.relation == "="]
    from scipy.sparse import vstack

    A1, b1 = block(le, 1.0)
    A2, b2 = block(ge, -1.0)
    parts = [(A, bb) for A, bb in ((A1, b1), (A2, b2)) if A is not None]
    A_ub = vstack([p[0] for p in parts]).tocsr() if parts else None
    b_ub = np.concatenate([p[1] for p in parts]) if parts else None
    A_eq, b_eq = block(eq, 1.0)
    lo, hi = model.bounds()
    res = linprog(
        -np.asarray(model.objective, dtype=float),
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=list(zip(lo, hi)),
        method="highs-ds",
    )
    if res.status == 2:
        return LpSolution("infeasible", None, -math.inf)
    if res.status == 3:
        return LpSolution("unbounded", None, math.inf)
    if res.status != 0:
        raise RuntimeError(f"HiGHS failed: {res.message}")
    x = np.asarray(res.x)
    return LpSolution("optimal", x, float(np.dot(model.objective, x)))
