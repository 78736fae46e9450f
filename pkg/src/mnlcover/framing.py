"""Joint assortment and framing: placing products on G ordered positions.

A customer who browses to depth g chooses from the products in the first g
positions. ``browse_probs[g-1]`` is the probability of browsing to depth g.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .core import Instance, SolveResult
from .deterministic import capacitated_expansion, solve_daoc_approx


@dataclass(frozen=True)
class FramingInstance:
    base: Instance
    G: int
    browse_probs: tuple

    def __post_init__(self):
        beta = tuple(float(b) for b in self.browse_probs)
        object.__setattr__(self, "browse_probs", beta)
        if int(self.G) != self.G or self.G < 1:
            raise ValueError("G must be a positive integer")
        if self.G < 3 * self.base.n:
            raise ValueError(f"need G >= 3n = {3 * self.base.n} positions, got {self.G}")
        if len(beta) != self.G:
            raise ValueError(f"expected {self.G} browsing probabilities, got {len(beta)}")
        if any(not 0 <= b <= 1 for b in beta):
            raise ValueError("browsing probabilities must lie in [0, 1]")
        if any(b2 > b1 + 1e-12 for b1, b2 in zip(beta, beta[1:])):
            raise ValueError("browsing probabilities must be non-increasing")


def capacitated_optimum(instance: Instance, cap: int) -> SolveResult:
    """Best assortment with at most ``cap`` products, ignoring categories."""
    if int(cap) != cap or not 1 <= cap <= instance.n:
        raise ValueError(f"cap must be an integer in [1, {instance.n}], got {cap}")
    res = capacitated_expansion(instance.unconstrained(), (), int(cap))
    return SolveResult(res.assortment, res.value, "capacitated")


def framing_revenue(fi: FramingInstance, X: Sequence) -> float:
    """Sum over depths g of beta_g times the revenue of the first g positions."""
    if len(X) != fi.G:
        raise ValueError(f"placement has {len(X)} positions, expected {fi.G}")
    placed = [i for i in X if i is not None]
    if len(set(placed)) != len(placed):
        raise ValueError("a product is placed more than once")
    if any(not 0 <= i < fi.base.n for i in placed):
        raise ValueError("placement references unknown products")
    r, v = fi.base.revenues, fi.base.weights
    num, den, total = 0.0, 1.0, 0.0
    for beta, i in zip(fi.browse_probs, X):
        if i is not None:
            num += r[i] * v[i]
            den += v[i]
        total += beta * num / den
    return total


def candidate_framing(fi: FramingInstance, head: frozenset, tail: frozenset) -> list:
    """``head`` in the first positions, ``tail`` minus ``head`` in the last ones, gaps between."""
    rest = sorted(tail - head)
    return sorted(head) + [None] * (fi.G - len(head) - len(rest)) + rest


def solve_framing(fi: FramingInstance) -> tuple[list, float]:
    """Best of n candidate framings, one per cardinality of the leading block."""
    cover = solve_daoc_approx(fi.base).assortment
    best, best_val = None, -math.inf
    for cap in range(1, fi.base.n + 1):
        X = candidate_framing(fi, capacitated_optimum(fi.base, cap).assortment, cover)
        val = framing_revenue(fi, X)
        if val > best_val + fi.base.tol:
            best, best_val = X, val
    return best, best_val


def framing_upper_bound(fi: FramingInstance) -> float:
    """Depth g can show at most min(g, n) products, so its revenue is capped accordingly."""
    n = fi.base.n
    caps = [capacitated_optimum(fi.base, c).value for c in range(1, n + 1)]
    return sum(b * caps[min(g, n) - 1] for g, b in enumerate(fi.browse_probs, start=1))
