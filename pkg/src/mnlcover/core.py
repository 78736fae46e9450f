"""MNL primitives: instances, choice probabilities, revenues and expansions.

Products are indexed ``0..n-1`` throughout the Python API. The JSON format in
:mod:`mnlcover.io` is 1-based and converts at the boundary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Sequence

import numpy as np

Assortment = frozenset  # frozenset[int] of product indices

# Relative tolerance for revenue comparisons (scaled by the largest revenue).
REVENUE_RTOL = 1e-9


class SizeGuardError(ValueError):
    """Raised when an exhaustive routine is asked to enumerate too much."""


@dataclass(frozen=True)
class Category:
    members: frozenset
    threshold: float

    def __post_init__(self):
        object.__setattr__(self, "members", frozenset(int(i) for i in self.members))


@dataclass(frozen=True)
class Instance:
    """Revenues, MNL weights (no-purchase weight fixed at 1) and covering categories."""

    revenues: tuple
    weights: tuple
    categories: tuple = ()
    # Real-valued thresholds are only allowed for internal relaxations.
    fractional: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        r = tuple(float(x) for x in self.revenues)
        v = tuple(float(x) for x in self.weights)
        cats = tuple(
            c if isinstance(c, Category) else Category(c[0], c[1]) for c in self.categories
        )
        object.__setattr__(self, "revenues", r)
        object.__setattr__(self, "weights", v)
        object.__setattr__(self, "categories", cats)
        n = len(r)
        if n == 0:
            raise ValueError("instance needs at least one product")
        if len(v) != n:
            raise ValueError(f"got {n} revenues but {len(v)} weights")
        if any(not math.isfinite(x) or x < 0 for x in r):
            raise ValueError("revenues must be finite and non-negative")
        if any(not math.isfinite(x) or x <= 0 for x in v):
            raise ValueError("preference weights must be finite and strictly positive")
        for k, cat in enumerate(cats):
            bad = [i for i in cat.members if not 0 <= i < n]
            if bad:
                raise ValueError(f"category {k} references unknown products {sorted(bad)}")
            thr = cat.threshold
            if not self.fractional and float(thr) != int(thr):
                raise ValueError(f"category {k} threshold {thr} is not an integer")
            if not 0 <= thr <= len(cat.members) + 1e-12:
                raise ValueError(
                    f"category {k} threshold {thr} outside [0, {len(cat.members)}]"
                )

    @property
    def n(self) -> int:
        return len(self.revenues)

    @property
    def K(self) -> int:
        return len(self.categories)

    @cached_property
    def r(self) -> np.ndarray:
        a = np.array(self.revenues)
        a.flags.writeable = False
        return a

    @cached_property
    def v(self) -> np.ndarray:
        a = np.array(self.weights)
        a.flags.writeable = False
        return a

    @cached_property
    def membership(self) -> np.ndarray:
        """Boolean K x n incidence matrix of the categories."""
        m = np.zeros((self.K, self.n), dtype=bool)
        for k, cat in enumerate(self.categories):
            m[k, list(cat.members)] = True
        m.flags.writeable = False
        return m

    @cached_property
    def thresholds(self) -> np.ndarray:
        a = np.array([c.threshold for c in self.categories], dtype=float)
        a.flags.writeable = False
        return a

    @cached_property
    def tol(self) -> float:
        return REVENUE_RTOL * max(max(self.revenues), 1e-300) if any(self.revenues) else REVENUE_RTOL

    def with_thresholds(self, thresholds: Sequence[float], fractional: bool = False) -> "Instance":
        cats = tuple(Category(c.members, t) for c, t in zip(self.categories, thresholds))
        return Instance(self.revenues, self.weights, cats, fractional=fractional)

    def with_weights(self, weights: Sequence[float]) -> "Instance":
        return Instance(self.revenues, weights, self.categories, fractional=self.fractional)

    def unconstrained(self) -> "Instance":
        return Instance(self.revenues, self.weights, ())


@dataclass(frozen=True)
class SolveResult:
    assortment: frozenset
    value: float
    method: str = ""


def _members(instance: Instance, S: Iterable[int]) -> frozenset:
    S = frozenset(int(i) for i in S)
    bad = [i for i in S if not 0 <= i < instance.n]
    if bad:
        raise ValueError(f"unknown products {sorted(bad)}")
    return S


def choice_probability(instance: Instance, i: int | None, S: Iterable[int]) -> float:
    """Purchase probability of product ``i`` from ``S``; ``i=None`` is the no-purchase option."""
    S = _members(instance, S)
    denom = 1.0 + sum(instance.weights[j] for j in S)
    if i is None:
        return 1.0 / denom
    if i not in S:
        raise ValueError(f"product {i} is not offered in {sorted(S)}")
    return instance.weights[i] / denom


def revenue(instance: Instance, S: Iterable[int]) -> float:
    S = _members(instance, S)
    if not S:
        return 0.0
    v, r = instance.weights, instance.revenues
    num = sum(r[i] * v[i] for i in S)
    return num / (1.0 + sum(v[i] for i in S))


def check_covering(instance: Instance, S: Iterable[int], tol: float = 1e-9) -> bool:
    S = frozenset(S)
    return all(len(S & c.members) >= c.threshold - tol for c in instance.categories)


def _pick(instance: Instance, candidates: Iterable[tuple[float, frozenset]]) -> SolveResult:
    """Best candidate; near-ties go to the lexicographically smallest sorted member list."""
    cands = list(candidates)
    best = max(val for val, _ in cands)
    tied = [S for val, S in cands if val >= best - instance.tol]
    S = min(tied, key=sorted)
    return SolveResult(S, revenue(instance, S))


def optimal_expansion(instance: Instance, forced: Iterable[int] = ()) -> SolveResult:
    """Revenue-maximizing superset of ``forced``.

    The optimum is ``forced`` plus a revenue-ordered set of the remaining
    products, so it suffices to scan one threshold per distinct revenue.
    """
    forced = _members(instance, forced)
    r, v = instance.revenues, instance.weights
    num = sum(r[i] * v[i] for i in forced)
    den = 1.0 + sum(v[i] for i in forced)
    rest = sorted((i for i in range(instance.n) if i not in forced), key=lambda i: (-r[i], i))
    candidates = [(num / den if forced else 0.0, forced)]
    added: list[int] = []
    for pos, i in enumerate(rest):
        added.append(i)
        num += r[i] * v[i]
        den += v[i]
        if pos + 1 < len(rest) and r[rest[pos + 1]] == r[i]:
            continue  # thresholds sit at distinct revenue values only
        candidates.append((num / den, forced | frozenset(added)))
    return _pick(instance, candidates)


def unconstrained_optimum(instance: Instance) -> SolveResult:
    res = optimal_expansion(instance, ())
    return SolveResult(res.assortment, res.value, "unconstrained")


def harmonic(K: int) -> float:
    return sum(1.0 / k for k in range(1, K + 1))


def log_k(K: int) -> float:
    """Natural log of K clamped at 0 (so K <= 1 gives the bound denominators their floor)."""
    return math.log(K) if K > 1 else 0.0


# ---------------------------------------------------------------------------
# exhaustive enumeration helpers shared by the brute-force oracles

_LOW_BITS = 14


def _tables(values: np.ndarray, bits: int) -> np.ndarray:
    """Subset sums of ``values`` (shape (d, bits)) for every mask of ``bits`` bits."""
    out = np.zeros((values.shape[0], 1 << bits))
    for b in range(bits):
        half = 1 << b
        out[:, half : 2 * half] = out[:, :half] + values[:, b : b + 1]
    return out


def iter_subset_blocks(instance: Instance) -> Iterator[tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]]:
    """Yield ``(masks, sum_v, sum_rv, coverage)`` blocks covering all 2^n subsets.

    Bit ``i`` of a mask is product ``i``. ``coverage`` has shape (K, len(masks)).
    """
    n = instance.n
    low = min(n, _LOW_BITS)
    high = n - low
    M = instance.membership.astype(float)
    feats = np.vstack([instance.v[None, :], (instance.r * instance.v)[None, :], M])
    low_tab = _tables(feats[:, :low], low)
    high_tab = _tables(feats[:, low:], high)
    base = np.arange(1 << low, dtype=np.int64)
    for h in range(1 << high):
        block = low_tab + high_tab[:, h : h + 1]
        masks = base | (np.int64(h) << low)
        yield masks, block[0], block[1], block[2:]


def mask_members(mask: int) -> frozenset:
    mask = int(mask)
    out, i = [], 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return frozenset(out)
