"""Randomized offering: the compact sales-rate LP, nested-policy recovery and customization."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Instance, SizeGuardError, iter_subset_blocks, revenue
from .lp import LpFailure, LpModel, solve_lp

BRUTE_MAX_N = 10
PRUNE_TOL = 1e-10


@dataclass(frozen=True)
class RandomizedPolicy:
    """Finite distribution over assortments, as (assortment, probability) pairs."""

    support: tuple

    def __post_init__(self):
        object.__setattr__(
            self, "support", tuple((frozenset(S), float(p)) for S, p in self.support)
        )

    def __len__(self) -> int:
        return len(self.support)

    def value(self, instance: Instance) -> float:
        return sum(p * revenue(instance, S) for S, p in self.support)

    def is_nested(self) -> bool:
        chain = sorted((S for S, _ in self.support), key=len, reverse=True)
        return all(b <= a for a, b in zip(chain, chain[1:]))


@dataclass(frozen=True)
class SalesRates:
    x0: float
    x: np.ndarray


def _y(n: int, i: int, j: int) -> int:
    return 1 + n + i * n + j


def build_raoc_lp(instance: Instance) -> LpModel:
    """Compact LP with variables x_0, x_i and y_ij (y_ij stands in for min(x_i, x_j))."""
    n, v = instance.n, instance.weights
    obj = np.zeros(1 + n + n * n)
    obj[1 : n + 1] = instance.r * instance.v
    names = ["x0"] + [f"x{i + 1}" for i in range(n)]
    names += [f"y{i + 1}_{j + 1}" for i in range(n) for j in range(n)]
    model = LpModel(len(obj), obj.tolist(), names=names)
    model.add({0: 1.0, **{i + 1: v[i] for i in range(n)}}, "=", 1.0)
    for i in range(n):
        model.add({i + 1: 1.0, 0: -1.0}, "<=", 0.0)
    for i in range(n):
        for j in range(n):
            model.add({_y(n, i, j): 1.0, i + 1: -1.0}, "<=", 0.0)
            if j != i:
                model.add({_y(n, i, j): 1.0, j + 1: -1.0}, "<=", 0.0)
    for cat in instance.categories:
        if cat.threshold <= 0:
            continue
        row: dict = {}
        for i in cat.members:
            row[i + 1] = row.get(i + 1, 0.0) + 1.0
            for j in range(n):
                row[_y(n, i, j)] = row.get(_y(n, i, j), 0.0) + v[j]
        model.add(row, ">=", float(cat.threshold))
    return model


def recover_policy(rates: SalesRates, weights: Sequence[float]) -> RandomizedPolicy:
    """Nested policy whose sales rates are ``rates``; larger sets first, the empty set last."""
    x = np.asarray(rates.x, dtype=float)
    v = np.asarray(weights, dtype=float)
    order = sorted(range(len(x)), key=lambda i: (-x[i], i))
    xs = np.append(x[order], 0.0)
    cum = 1.0 + np.cumsum(v[order])
    q = np.clip(cum * (xs[:-1] - xs[1:]), 0.0, None)
    support = [(frozenset(order[: p + 1]), q[p]) for p in range(len(x))]
    support = [(S, p) for S, p in reversed(support) if p >= PRUNE_TOL]
    empty = max(1.0 - sum(p for _, p in support), 0.0)
    if empty >= PRUNE_TOL:
        support.append((frozenset(), empty))
    total = sum(p for _, p in support)
    return RandomizedPolicy(tuple((S, p / total) for S, p in support))


def solve_raoc(instance: Instance, method: str = "auto") -> tuple[RandomizedPolicy, float]:
    """Optimal randomized policy from the compact LP; returns (policy, LP optimum)."""
    sol = solve_lp(build_raoc_lp(instance), method=method)
    if not sol.optimal:
        raise LpFailure(f"randomized LP returned {sol.status}; the instance should be feasible")
    n = instance.n
    rates = SalesRates(float(sol.values[0]), np.clip(sol.values[1 : n + 1], 0.0, None))
    return recover_policy(rates, instance.weights), sol.objective_value


def sales_rates(policy: RandomizedPolicy, instance: Instance) -> SalesRates:
    """x_i = Σ_S q(S) 1[i∈S] / (1 + V(S)) and x_0 = Σ_S q(S) / (1 + V(S))."""
    x = np.zeros(instance.n)
    x0 = 0.0
    for S, p in policy.support:
        d = 1.0 + sum(instance.weights[i] for i in S)
        x0 += p / d
        for i in S:
            x[i] += p / d
    return SalesRates(x0, x)


def offer_probabilities(
    policy: RandomizedPolicy | SalesRates, instance: Instance, route: str = "direct"
) -> np.ndarray:
    """Probability that each product is offered.

    ``route="direct"`` sums over the support; ``route="rates"`` uses the
    closed form x_i + Σ_j v_j min(x_i, x_j), valid for nested supports only.
    Sales rates always take the closed form.
    """
    if isinstance(policy, SalesRates):
        x = np.asarray(policy.x, dtype=float)
    elif route == "direct":
        out = np.zeros(instance.n)
        for S, p in policy.support:
            out[list(S)] += p
        return out
    elif route == "rates":
        if not policy.is_nested():
            raise ValueError("the closed-form route needs a nested support")
        x = sales_rates(policy, instance).x
    else:
        raise ValueError(f"unknown route {route!r}")
    return x + np.minimum(x[:, None], x[None, :]) @ instance.v


@dataclass(frozen=True)
class PolicyReport:
    prob_sum: float
    coverage: np.ndarray
    slack: np.ndarray
    revenue: float
    support_size: int
    nested: bool
    n: int
    tol: float = 1e-8

    @property
    def prob_ok(self) -> bool:
        return abs(self.prob_sum - 1.0) <= 1e-9

    @property
    def coverage_ok(self) -> bool:
        return bool(np.all(self.slack >= -self.tol))

    @property
    def violated(self) -> list:
        return np.flatnonzero(self.slack < -self.tol).tolist()

    @property
    def support_ok(self) -> bool:
        # nested supports are chains in a lattice of height n
        return not self.nested or self.support_size <= self.n + 1

    @property
    def ok(self) -> bool:
        return self.prob_ok and self.coverage_ok and self.support_ok


def validate_policy(policy: RandomizedPolicy, instance: Instance, tol: float = 1e-8) -> PolicyReport:
    probs = np.array([p for _, p in policy.support])
    offer = offer_probabilities(policy, instance)
    coverage = instance.membership.astype(float) @ offer
    return PolicyReport(
        prob_sum=float(probs.sum()),
        coverage=coverage,
        slack=coverage - instance.thresholds,
        revenue=policy.value(instance),
        support_size=len(policy),
        nested=policy.is_nested(),
        n=instance.n,
        tol=tol,
    )


def solve_raoc_bruteforce(instance: Instance, max_n: int = BRUTE_MAX_N) -> float:
    """Randomized optimum from the LP with one variable per subset."""
    if instance.n > max_n:
        raise SizeGuardError(f"subset LP limited to n <= {max_n}, got n = {instance.n}")
    (masks, sv, srv, cov), = iter_subset_blocks(instance)
    model = LpModel(len(masks), (srv / (1.0 + sv)).tolist())
    model.add({s: 1.0 for s in range(len(masks))}, "=", 1.0)
    for k in range(instance.K):
        if instance.thresholds[k] > 0:
            model.add({s: c for s, c in enumerate(cov[k]) if c}, ">=", instance.thresholds[k])
    sol = solve_lp(model)
    if not sol.optimal:
        raise LpFailure(f"subset LP returned {sol.status}")
    return sol.objective_value


def customization_relaxation(instance: Instance, T: int) -> tuple[RandomizedPolicy, float]:
    """Randomized optimum with every threshold divided by T."""
    relaxed = instance.with_thresholds(instance.thresholds / T, fractional=True)
    return solve_raoc(relaxed)


def customize_assortments(instance: Instance, T: int) -> list[frozenset]:
    """One assortment per customer so that the T offers jointly meet every threshold."""
    if int(T) != T or T < 1:
        raise ValueError("T must be a positive integer")
    policy, _ = customization_relaxation(instance, T)
    chain = sorted(policy.support, key=lambda sp: len(sp[0]), reverse=True)
    out: list[frozenset] = []
    cum = 0.0
    for idx, (S, p) in enumerate(chain):
        cum += T * p
        tau = T if idx == len(chain) - 1 else min(T, math.ceil(cum - 1e-9))
        out.extend([S] * (tau - len(out)))
    return out
