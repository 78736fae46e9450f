"""Several customer segments sharing one category structure, each with its own MNL weights."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Category, Instance, SizeGuardError, iter_subset_blocks, mask_members, optimal_expansion, revenue
from .deterministic import solve_daoc_approx
from .lp import LpFailure, LpModel, solve_lp
from .randomized import RandomizedPolicy, SalesRates, recover_policy

GRID_MAX_M = 4
EXACT_MAX_MN = 16
BRUTE_MAX_N = 8
COVER_TOL = 1e-9


@dataclass(frozen=True)
class MultiSegmentInstance:
    base: Instance
    arrival_probs: tuple
    segment_weights: tuple

    def __post_init__(self):
        theta = tuple(float(t) for t in self.arrival_probs)
        weights = tuple(tuple(float(x) for x in w) for w in self.segment_weights)
        object.__setattr__(self, "arrival_probs", theta)
        object.__setattr__(self, "segment_weights", weights)
        if not theta:
            raise ValueError("need at least one segment")
        if len(weights) != len(theta):
            raise ValueError(f"{len(theta)} arrival probabilities but {len(weights)} weight vectors")
        if any(not math.isfinite(t) or t < 0 for t in theta):
            raise ValueError("arrival probabilities must be non-negative")
        if abs(sum(theta) - 1.0) > 1e-12:
            raise ValueError(f"arrival probabilities sum to {sum(theta)}, not 1")
        for j, w in enumerate(weights):
            if len(w) != self.base.n:
                raise ValueError(f"segment {j} has {len(w)} weights for {self.base.n} products")
            if any(not math.isfinite(x) or x <= 0 for x in w):
                raise ValueError(f"segment {j} weights must be finite and strictly positive")

    @property
    def m(self) -> int:
        return len(self.arrival_probs)

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def theta(self) -> np.ndarray:
        return np.array(self.arrival_probs)

    def segment(self, j: int) -> Instance:
        return Instance(self.base.revenues, self.segment_weights[j], self.base.categories)

    def value(self, assortments: Sequence) -> float:
        return sum(t * revenue(self.segment(j), S) for j, (t, S) in enumerate(zip(self.arrival_probs, assortments)))

    def coverage(self, assortments: Sequence) -> np.ndarray:
        M = self.base.membership
        return sum(t * M[:, sorted(S)].sum(axis=1) for t, S in zip(self.arrival_probs, assortments))

    def feasible(self, assortments: Sequence, tol: float = COVER_TOL) -> bool:
        if self.base.K == 0:
            return True
        return bool(np.all(self.coverage(assortments) >= self.base.thresholds - tol))


@dataclass(frozen=True)
class SegmentAssignment:
    assortments: tuple
    value: float
    method: str = ""


def _assignment(ms: MultiSegmentInstance, assortments, method: str) -> SegmentAssignment:
    assortments = tuple(frozenset(S) for S in assortments)
    return SegmentAssignment(assortments, ms.value(assortments), method)


@dataclass(frozen=True)
class GammaGrid:
    """Per-segment grids lower_j * (1+eps)^l for l = 0..L."""

    epsilon: float
    lower: np.ndarray
    L: int

    def values(self, j: int) -> np.ndarray:
        return self.lower[j] * (1 + self.epsilon) ** np.arange(self.L + 1)


def gamma_grid(ms: MultiSegmentInstance, epsilon: float) -> GammaGrid:
    W = np.array(ms.segment_weights)
    r = ms.base.r
    n, vmin, vmax = ms.n, float(W.min()), float(W.max())
    pos = r[r > 0]
    if pos.size == 0:
        return GammaGrid(epsilon, np.zeros(ms.m), 0)
    rmin, rmax = float(pos.min()), float(pos.max())
    scale = (1 + n * vmax) ** 2
    lower = ms.theta * rmin * vmin / scale
    # the range must reach theta_j * rmax / vmin; the min(v, 1) factor covers weights below 1
    span = scale * rmax / (rmin * vmin * min(vmin, 1.0))
    L = max(0, math.ceil(math.log(span) / math.log1p(epsilon) - 1e-12))
    return GammaGrid(epsilon, lower, L)


def weighted_cover(ms: MultiSegmentInstance, gamma: Sequence[float]) -> list[frozenset]:
    """Greedy over (product, segment) items; item (i, j) costs gamma_j v_ij and covers theta_j."""
    m, n = ms.m, ms.n
    theta = ms.theta
    M = ms.base.membership
    W = np.array(ms.segment_weights)  # m x n
    cost = np.asarray(gamma, dtype=float)[:, None] * W
    residual = ms.base.thresholds.astype(float).copy()
    chosen = np.zeros((m, n), dtype=bool)
    while np.any(residual > COVER_TOL):
        count = M[residual > COVER_TOL].sum(axis=0).astype(float)
        c = theta[:, None] * count[None, :]
        c[chosen] = 0.0
        ratio = np.full((m, n), np.inf)
        ok = c > 0
        ratio[ok] = cost[ok] / c[ok]
        j, i = np.unravel_index(int(np.argmin(ratio)), ratio.shape)
        chosen[j, i] = True
        residual = residual - theta[j] * M[:, i]
    return [frozenset(np.flatnonzero(chosen[j]).tolist()) for j in range(m)]


def _expand(ms: MultiSegmentInstance, covers) -> list[frozenset]:
    return [optimal_expansion(ms.segment(j), S).assortment for j, S in enumerate(covers)]


def solve_mdaoc_grid(ms: MultiSegmentInstance, epsilon: float = 0.1) -> SegmentAssignment:
    """Best weighted-greedy assignment over a geometric grid of per-segment cost scales.

    The greedy only depends on the ratios gamma_j / gamma_1, so grid points
    sharing their exponent differences are evaluated once.
    """
    if ms.m > GRID_MAX_M:
        raise SizeGuardError(f"grid search limited to m <= {GRID_MAX_M}, got m = {ms.m}")
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    grid = gamma_grid(ms, epsilon)
    L = grid.L
    diffs = itertools.product(range(-L, L + 1), repeat=ms.m - 1)
    # order each difference class by the first grid point (lexicographically) that realizes it
    firsts = []
    for d in diffs:
        d = (0,) + d
        base = max(0, -min(d))
        if base + max(d) <= L:
            firsts.append(tuple(base + x for x in d))
    firsts.sort()
    best = None
    for ell in firsts:
        gamma = ms.theta * (1 + epsilon) ** np.array(ell, dtype=float)
        cand = _assignment(ms, _expand(ms, weighted_cover(ms, gamma)), "mdaoc-grid")
        if best is None or cand.value > best.value + ms.base.tol:
            best = cand
    return best


def segment_thresholds(ms: MultiSegmentInstance, pivot: int) -> list[int]:
    """Thresholds the pivot segment must meet alone when every other segment is offered everything."""
    theta = ms.arrival_probs
    if theta[pivot] <= 0:
        raise ValueError(f"segment {pivot} has zero arrival probability")
    others = sum(t for j, t in enumerate(theta) if j != pivot)
    out = []
    for cat in ms.base.categories:
        size = len(cat.members)
        raw = (cat.threshold - others * size) / theta[pivot]
        out.append(int(min(max(math.ceil(raw - 1e-9), 0), size)))
    return out


def solve_mdaoc_general(ms: MultiSegmentInstance) -> SegmentAssignment:
    """Serve one pivot segment with the single-segment greedy and offer everything elsewhere."""
    everything = frozenset(range(ms.n))
    best = None
    for pivot in range(ms.m):
        if ms.arrival_probs[pivot] <= 0:
            continue
        thr = segment_thresholds(ms, pivot)
        seg = ms.segment(pivot)
        reduced = Instance(
            seg.revenues, seg.weights, tuple(Category(c.members, t) for c, t in zip(seg.categories, thr))
        )
        S = solve_daoc_approx(reduced).assortment
        assortments = [everything] * ms.m
        assortments[pivot] = S
        cand = _assignment(ms, assortments, "mdaoc-general")
        if best is None or cand.value > best.value + ms.base.tol:
            best = cand
    return best


def solve_mdaoc_exact(ms: MultiSegmentInstance, max_mn: int = EXACT_MAX_MN) -> SegmentAssignment:
    """Exhaustive search over every combination of per-segment assortments."""
    if ms.m * ms.n > max_mn:
        raise SizeGuardError(f"exact search limited to m*n <= {max_mn}, got {ms.m * ms.n}")
    theta = ms.theta
    vals, covs = [], []
    for j in range(ms.m):
        ((masks, sv, srv, cov),) = iter_subset_blocks(ms.segment(j))
        vals.append(theta[j] * srv / (1.0 + sv))
        covs.append(theta[j] * cov)
    size = 1 << ms.n
    idx = np.indices((size,) * ms.m).reshape(ms.m, -1)
    total = sum(vals[j][idx[j]] for j in range(ms.m))
    cover = sum(covs[j][:, idx[j]] for j in range(ms.m))
    feas = np.all(cover >= ms.base.thresholds[:, None] - COVER_TOL, axis=0)
    total = np.where(feas, total, -math.inf)
    best = total.max()
    tied = np.flatnonzero(total >= best - ms.base.tol)
    pick = min(tied, key=lambda t: tuple(sorted(mask_members(idx[j, t])) for j in range(ms.m)))
    return _assignment(ms, [mask_members(idx[j, pick]) for j in range(ms.m)], "mdaoc-exact")


def build_mraoc_lp(ms: MultiSegmentInstance) -> LpModel:
    """One compact sales-rate block per segment, coupled through the covering rows."""
    m, n = ms.m, ms.n
    block = 1 + n + n * n
    theta = ms.arrival_probs

    def x0(j):
        return j * block

    def x(j, i):
        return j * block + 1 + i

    def y(j, i, k):
        return j * block + 1 + n + i * n + k

    obj = np.zeros(m * block)
    names = []
    for j in range(m):
        v = ms.segment_weights[j]
        for i in range(n):
            obj[x(j, i)] = theta[j] * ms.base.revenues[i] * v[i]
        names += [f"x0_{j + 1}"] + [f"x{i + 1}_{j + 1}" for i in range(n)]
        names += [f"y{i + 1}_{k + 1}_{j + 1}" for i in range(n) for k in range(n)]
    model = LpModel(m * block, obj.tolist(), names=names)
    for j in range(m):
        v = ms.segment_weights[j]
        model.add({x0(j): 1.0, **{x(j, i): v[i] for i in range(n)}}, "=", 1.0)
        for i in range(n):
            model.add({x(j, i): 1.0, x0(j): -1.0}, "<=", 0.0)
        for i in range(n):
            for k in range(n):
                model.add({y(j, i, k): 1.0, x(j, i): -1.0}, "<=", 0.0)
                if k != i:
                    model.add({y(j, i, k): 1.0, x(j, k): -1.0}, "<=", 0.0)
    for cat in ms.base.categories:
        if cat.threshold <= 0:
            continue
        row: dict = {}
        for j in range(m):
            v = ms.segment_weights[j]
            for i in cat.members:
                row[x(j, i)] = row.get(x(j, i), 0.0) + theta[j]
                for k in range(n):
                    row[y(j, i, k)] = row.get(y(j, i, k), 0.0) + theta[j] * v[k]
        model.add(row, ">=", float(cat.threshold))
    return model


def solve_mraoc(ms: MultiSegmentInstance, method: str = "auto") -> tuple[list[RandomizedPolicy], float]:
    """Optimal randomized policy per segment; returns (policies, LP optimum)."""
    sol = solve_lp(build_mraoc_lp(ms), method=method)
    if not sol.optimal:
        raise LpFailure(f"multi-segment randomized LP returned {sol.status}")
    n = ms.n
    block = 1 + n + n * n
    policies = []
    for j in range(ms.m):
        vals = sol.values[j * block : (j + 1) * block]
        rates = SalesRates(float(vals[0]), np.clip(vals[1 : n + 1], 0.0, None))
        policies.append(recover_policy(rates, ms.segment_weights[j]))
    return policies, sol.objective_value


def mraoc_coverage(ms: MultiSegmentInstance, policies: Sequence[RandomizedPolicy]) -> np.ndarray:
    """Expected number of products offered from each category, mixed over segments."""
    out = np.zeros(ms.base.K)
    for t, pol in zip(ms.arrival_probs, policies):
        for S, p in pol.support:
            out += t * p * ms.base.membership[:, sorted(S)].sum(axis=1)
    return out


def solve_mraoc_bruteforce(ms: MultiSegmentInstance, max_n: int = BRUTE_MAX_N) -> float:
    """Randomized optimum with one variable per (subset, segment) pair."""
    if ms.n > max_n:
        raise SizeGuardError(f"subset LP limited to n <= {max_n}, got n = {ms.n}")
    size = 1 << ms.n
    theta = ms.arrival_probs
    obj, covs = [], []
    for j in range(ms.m):
        ((masks, sv, srv, cov),) = iter_subset_blocks(ms.segment(j))
        obj.extend((theta[j] * srv / (1.0 + sv)).tolist())
        covs.append(cov)
    model = LpModel(ms.m * size, obj)
    for j in range(ms.m):
        model.add({j * size + s: 1.0 for s in range(size)}, "=", 1.0)
    for k in range(ms.base.K):
        thr = ms.base.thresholds[k]
        if thr > 0:
            row = {j * size + s: theta[j] * covs[j][k, s] for j in range(ms.m) for s in range(size) if covs[j][k, s]}
            model.add(row, ">=", thr)
    sol = solve_lp(model)
    if not sol.optimal:
        raise LpFailure(f"subset LP returned {sol.status}")
    return sol.objective_value
