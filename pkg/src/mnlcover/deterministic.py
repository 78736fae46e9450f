"""Deterministic single-segment solvers."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import (
    Instance,
    SizeGuardError,
    SolveResult,
    _members,
    check_covering,
    iter_subset_blocks,
    log_k,
    mask_members,
    optimal_expansion,
    revenue,
)
from .lp import LpFailure, LpModel, solve_lp

EXACT_MAX_N = 25
ROUND_TOL = 1e-7
COVER_TOL = 1e-9


@dataclass
class CoverState:
    selected: set
    residual: np.ndarray

    @classmethod
    def start(cls, instance: Instance) -> "CoverState":
        return cls(set(), instance.thresholds.copy())

    def done(self) -> bool:
        return not np.any(self.residual > COVER_TOL)

    def add(self, instance: Instance, i: int) -> None:
        self.selected.add(i)
        self.residual = np.maximum(self.residual - instance.membership[:, i], 0.0)


@dataclass(frozen=True)
class CardinalityParams:
    L: int
    epsilon: float = 0.1

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 1:
            raise ValueError("cardinality cap L must be a positive integer")
        if not 0 < self.epsilon < 1:
            raise ValueError("epsilon must lie in (0, 1)")


def greedy_cover(instance: Instance, item_costs: Sequence[float]) -> frozenset:
    """Greedy multi-cover: repeatedly add the product with the smallest cost per unmet category."""
    costs = np.asarray(item_costs, dtype=float)
    if costs.shape != (instance.n,) or np.any(costs <= 0):
        raise ValueError("item_costs must be n positive reals")
    state = CoverState.start(instance)
    M = instance.membership
    while not state.done():
        c = M[state.residual > COVER_TOL].sum(axis=0).astype(float)
        c[list(state.selected)] = 0.0
        ratio = np.full(instance.n, np.inf)
        ok = c > 0
        ratio[ok] = costs[ok] / c[ok]
        state.add(instance, int(np.argmin(ratio)))  # argmin keeps the smallest index on ties
    return frozenset(state.selected)


def solve_daoc_approx(instance: Instance) -> SolveResult:
    """Greedy cover on the preference weights, then the optimal expansion."""
    cover = greedy_cover(instance, instance.weights)
    res = optimal_expansion(instance, cover)
    return SolveResult(res.assortment, res.value, "daoc")


def solve_daoc_exact(instance: Instance, max_n: int = EXACT_MAX_N) -> SolveResult:
    """Exhaustive optimum over all covering subsets."""
    if instance.n > max_n:
        raise SizeGuardError(f"exact solver limited to n <= {max_n}, got n = {instance.n}")
    thr = instance.thresholds[:, None] - COVER_TOL

    def values():
        for masks, sv, srv, cov in iter_subset_blocks(instance):
            feas = np.all(cov >= thr, axis=0)
            yield masks, np.where(feas, srv / (1.0 + sv), -math.inf)

    best = max(vals.max() for _, vals in values())
    # second pass: smallest sorted member list among the near-optimal subsets
    winners = [lex_min_mask(masks[vals >= best - instance.tol]) for masks, vals in values()]
    S = mask_members(lex_min_mask(np.array([w for w in winners if w >= 0], dtype=np.int64)))
    return SolveResult(S, revenue(instance, S), "daoc-exact")


def lex_min_mask(masks: np.ndarray) -> int:
    """Mask whose sorted member list is lexicographically smallest (-1 if empty)."""
    if masks.size == 0:
        return -1
    prefix = np.int64(0)
    cand = masks
    while True:
        rest = cand ^ prefix
        if np.any(rest == 0):
            return int(prefix)
        low = rest & -rest
        m = low.min()
        cand = cand[low == m]
        prefix |= m


def detect_two_group_tu(instance: Instance) -> tuple[list, list] | None:
    """Split categories into two groups of pairwise disjoint categories, if possible."""
    M = instance.membership.astype(int)
    adj = (M @ M.T) > 0
    color = [-1] * instance.K
    for s in range(instance.K):
        if color[s] >= 0:
            continue
        color[s] = 0
        queue = deque([s])
        while queue:
            a = queue.popleft()
            for b in np.flatnonzero(adj[a]):
                if b == a:
                    continue
                if color[b] < 0:
                    color[b] = 1 - color[a]
                    queue.append(b)
                elif color[b] == color[a]:
                    return None
    return [k for k in range(instance.K) if color[k] == 0], [k for k in range(instance.K) if color[k] == 1]


def sales_rate_lp(
    instance: Instance,
    covering: bool = True,
    forced: Iterable[int] = (),
    L: int | None = None,
) -> LpModel:
    """Sales-rate LP over (x_0, x_1..x_n); x_i = x_0 means product i is offered.

    ``covering`` adds the homogenized category rows, ``forced`` pins products to
    x_0 and ``L`` caps the number of non-forced products.
    """
    n = instance.n
    forced = frozenset(forced)
    obj = [0.0] + [r * v for r, v in zip(instance.revenues, instance.weights)]
    model = LpModel(n + 1, obj, names=["x0"] + [f"x{i + 1}" for i in range(n)])
    model.add({0: 1.0, **{i + 1: v for i, v in enumerate(instance.weights)}}, "=", 1.0)
    for i in range(n):
        model.add({i + 1: 1.0, 0: -1.0}, "=" if i in forced else "<=", 0.0)
    if covering:
        for cat in instance.categories:
            if cat.threshold > 0:
                row = {i + 1: 1.0 for i in cat.members}
                row[0] = -float(cat.threshold)
                model.add(row, ">=", 0.0)
    if L is not None:
        free = [i for i in range(n) if i not in forced]
        if free:
            row = {i + 1: 1.0 for i in free}
            row[0] = -float(L)
            model.add(row, "<=", 0.0)
    return model


def round_sales_rates(x: np.ndarray) -> frozenset:
    """Offered set of an integral sales-rate vertex; raises if the vertex is fractional."""
    x0, xs = x[0], x[1:]
    frac = (xs > ROUND_TOL) & (xs < x0 - ROUND_TOL)
    if np.any(frac):
        raise LpFailure(f"LP vertex is not integral at products {np.flatnonzero(frac).tolist()}")
    return frozenset(int(i) for i in np.flatnonzero(xs >= x0 - ROUND_TOL))


def solve_daoc_tu(instance: Instance) -> SolveResult:
    """Exact optimum through the sales-rate LP when the categories form two disjoint groups."""
    if detect_two_group_tu(instance) is None:
        raise ValueError("categories do not split into two internally disjoint groups")
    sol = solve_lp(sales_rate_lp(instance))
    if not sol.optimal:
        raise LpFailure(f"sales-rate LP returned {sol.status}")
    S = round_sales_rates(sol.values)
    if not check_covering(instance, S):
        raise LpFailure("rounded LP vertex violates a covering constraint")
    return SolveResult(S, revenue(instance, S), "daoc-tu")


def capacitated_expansion(instance: Instance, forced: Iterable[int], L: int) -> SolveResult:
    """Best superset of ``forced`` adding at most ``L`` products (category rows ignored)."""
    forced = _members(instance, forced)
    if int(L) != L or L < 0:
        raise ValueError("L must be a non-negative integer")
    if L >= instance.n - len(forced):
        return optimal_expansion(instance, forced)
    if L == 0:
        return SolveResult(forced, revenue(instance, forced))
    sol = solve_lp(sales_rate_lp(instance, covering=False, forced=forced, L=L))
    if not sol.optimal:
        raise LpFailure(f"capacitated LP returned {sol.status}")
    S = round_sales_rates(sol.values) | forced
    if len(S - forced) > L:
        raise LpFailure("rounded LP vertex exceeds the cardinality cap")
    return SolveResult(S, revenue(instance, S))


def cardinality_grid(instance: Instance, epsilon: float) -> list[float]:
    v = instance.v
    vmin, vmax = float(v.min()), float(v.max())
    top = math.ceil(math.log(vmax / vmin) / math.log1p(epsilon) - 1e-12) if vmax > vmin else 0
    return [vmin * (1 + epsilon) ** k for k in range(top + 1)]


def solve_daoc_cardinality(instance: Instance, params: CardinalityParams) -> SolveResult | None:
    """Bicriteria search over cover costs v_i + gamma.

    Returns None when every grid point is discarded, i.e. no candidate with a
    bicriteria certificate was found (the instance may still be feasible).
    """
    L = params.L
    limit = (2 * log_k(instance.K) + 2) * L
    best = None
    for gamma in cardinality_grid(instance, params.epsilon):
        cover = greedy_cover(instance, instance.v + gamma)
        if len(cover) > limit + 1e-9:
            continue
        cand = capacitated_expansion(instance, cover, L)
        if best is None or cand.value > best.value + instance.tol:
            best = cand
    if best is None:
        return None
    return SolveResult(best.assortment, best.value, "daoc-card")
