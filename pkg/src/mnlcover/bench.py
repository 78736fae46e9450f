"""Synthetic instances, baseline heuristics and the benchmark harness."""
from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np

from .core import Category, Instance, SizeGuardError, optimal_expansion, unconstrained_optimum, SolveResult, revenue
from .deterministic import solve_daoc_approx, solve_daoc_exact
from .randomized import solve_raoc


@dataclass(frozen=True)
class SyntheticConfig:
    n: int = 200
    K0: int = 10
    alpha_cat: float = 0.2
    beta_frac: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if self.K0 < 0:
            raise ValueError("K0 must be non-negative")
        if not 0 < self.alpha_cat <= 1:
            raise ValueError("alpha_cat must lie in (0, 1]")
        if not 0 < self.beta_frac < 1:
            raise ValueError("beta_frac must lie in (0, 1)")


def generate_synthetic(config: SyntheticConfig) -> Instance:
    """Random instance with 3*K0 categories.

    Four independent PCG64 streams are spawned from the seed, for revenues,
    weights, category membership and thresholds, so changing one part of the
    recipe does not shift the others. Revenues are Exp(1) and weights
    U[1, 5], both drawn by inverse CDF. Category types: all products, products
    above the median revenue, products below it; each eligible product joins
    with probability alpha_cat and empty draws are repeated.
    """
    s_rev, s_w, s_cat, s_thr = np.random.SeedSequence(config.seed).spawn(4)
    n = config.n
    r = -np.log1p(-np.random.Generator(np.random.PCG64(s_rev)).random(n))
    v = 1.0 + 4.0 * np.random.Generator(np.random.PCG64(s_w)).random(n)
    med = np.median(r)
    pools = [np.arange(n), np.flatnonzero(r > med), np.flatnonzero(r < med)]
    cat_rng = np.random.Generator(np.random.PCG64(s_cat))
    thr_rng = np.random.Generator(np.random.PCG64(s_thr))
    cats = []
    for pool in pools:
        for _ in range(config.K0):
            members = np.empty(0, dtype=int)
            while members.size == 0:
                members = pool[cat_rng.random(pool.size) < config.alpha_cat]
            U = thr_rng.random()
            cats.append(Category(members.tolist(), math.ceil(config.beta_frac * U * members.size)))
    return Instance(r.tolist(), v.tolist(), cats)


def local_revenue_ordered(instance: Instance) -> frozenset:
    """Union over categories of their top-threshold products by revenue (ties to lower index)."""
    out = set()
    r = instance.revenues
    for cat in instance.categories:
        top = sorted(cat.members, key=lambda i: (-r[i], i))[: int(cat.threshold)]
        out.update(top)
    return frozenset(out)


def heuristic_union(instance: Instance) -> SolveResult:
    S = local_revenue_ordered(instance) | unconstrained_optimum(instance).assortment
    return SolveResult(S, revenue(instance, S), "heuristic-union")


def heuristic_expansion(instance: Instance) -> SolveResult:
    res = optimal_expansion(instance, local_revenue_ordered(instance))
    return SolveResult(res.assortment, res.value, "heuristic-expansion")


COLUMNS = [
    "trial", "n", "K", "unconstrained", "exact", "raoc", "bound", "bound_kind",
    "alg1", "heuristic_union", "heuristic_expansion",
    "alg1_ratio", "union_ratio", "expansion_ratio", "guarantee",
    "loss_det", "loss_rand", "rand_det_ratio", "support", "seconds",
]


@dataclass
class BenchReport:
    rows: list = field(default_factory=list)

    def mean(self, column: str) -> float:
        vals = [r[column] for r in self.rows if r.get(column) is not None and not math.isnan(r[column])]
        return float(np.mean(vals)) if vals else math.nan

    def summary(self) -> dict:
        return {c: self.mean(c) for c in ("alg1_ratio", "union_ratio", "expansion_ratio", "loss_det", "loss_rand")}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in self.rows:
            w.writerow({c: "" if row.get(c) is None else row[c] for c in COLUMNS})
        return buf.getvalue()

    def to_table(self) -> str:
        cols = ["trial", "n", "K", "bound_kind", "alg1_ratio", "union_ratio", "expansion_ratio", "loss_det", "loss_rand", "support"]
        lines = [" ".join(f"{c:>16}" for c in cols)]
        for row in self.rows:
            lines.append(" ".join(f"{_fmt(row.get(c)):>16}" for c in cols))
        lines.append("means: " + ", ".join(f"{k}={_fmt(v)}" for k, v in self.summary().items()))
        return "\n".join(lines)


def _fmt(x) -> str:
    if x is None:
        return "-"
    if isinstance(x, float):
        return f"{x:.6f}"
    return str(x)


def _ratio(a, b):
    return a / b if b and b > 0 else math.nan


def bench_instance(instance: Instance, trial: int = 0, exact_max_n: int = 20, randomized: bool = True) -> dict:
    """One report row; the ratio denominator is the exact optimum if affordable, else the randomized optimum."""
    t0 = time.perf_counter()
    row = {"trial": trial, "n": instance.n, "K": instance.K}
    row["unconstrained"] = unconstrained_optimum(instance).value
    try:
        row["exact"] = solve_daoc_exact(instance, max_n=exact_max_n).value
    except SizeGuardError:
        row["exact"] = None
    row["raoc"], row["support"] = None, None
    if randomized:
        policy, val = solve_raoc(instance)
        row["raoc"], row["support"] = val, len(policy)
    if row["exact"] is not None:
        row["bound"], row["bound_kind"] = row["exact"], "exact"
    elif row["raoc"] is not None:
        row["bound"], row["bound_kind"] = row["raoc"], "randomized"
    else:
        row["bound"], row["bound_kind"] = row["unconstrained"], "unconstrained"
    row["alg1"] = solve_daoc_approx(instance).value
    row["heuristic_union"] = heuristic_union(instance).value
    row["heuristic_expansion"] = heuristic_expansion(instance).value
    row["alg1_ratio"] = _ratio(row["alg1"], row["bound"])
    row["union_ratio"] = _ratio(row["heuristic_union"], row["bound"])
    row["expansion_ratio"] = _ratio(row["heuristic_expansion"], row["bound"])
    logk = math.log(instance.K) if instance.K > 1 else 0.0
    row["guarantee"] = row["alg1_ratio"] * (logk + 2) if row["bound_kind"] == "exact" else None
    det = row["exact"] if row["exact"] is not None else row["alg1"]
    R = row["unconstrained"]
    row["loss_det"] = _ratio(R - det, R)
    row["loss_rand"] = _ratio(R - row["raoc"], R) if row["raoc"] is not None else None
    row["rand_det_ratio"] = _ratio(row["raoc"], det) if row["raoc"] is not None else None
    row["seconds"] = time.perf_counter() - t0
    return row


def trial_seed(seed: int, trial: int) -> int:
    return int(np.random.SeedSequence([seed, trial]).generate_state(1, np.uint64)[0])


def benchmark_instances(instances: Iterable[Instance], **kwargs) -> BenchReport:
    return BenchReport([bench_instance(inst, t, **kwargs) for t, inst in enumerate(instances)])


def run_benchmark(config: SyntheticConfig, trials: int, exact_max_n: int = 20, randomized: bool = True) -> BenchReport:
    """Benchmark ``trials`` synthetic instances; trial t uses a seed derived from (seed, t)."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    instances = (generate_synthetic(replace(config, seed=trial_seed(config.seed, t))) for t in range(trials))
    return benchmark_instances(instances, exact_max_n=exact_max_n, randomized=randomized)
