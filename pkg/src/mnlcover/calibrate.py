"""Fit MNL weights and categories from a purchase log.

The log has one row per purchase with columns event_time, product_id,
product_type, brand and price. Time is cut into fixed-length periods; the
products sold in a period are taken as that period's offer set.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from .core import Category, Instance

log = logging.getLogger(__name__)

U_MAX = 20.0
U_MIN = -20.0


@dataclass(frozen=True)
class CalibrationConfig:
    interval_days: int = 14
    alpha: float = 0.1
    min_brand_size: int = 10

    def __post_init__(self):
        if self.interval_days < 1:
            raise ValueError("interval_days must be positive")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")


@dataclass(frozen=True)
class PeriodData:
    offered: tuple  # product ids
    counts: Mapping = field(default_factory=dict)
    no_purchase: int = 0

    @property
    def purchases(self) -> int:
        return int(sum(self.counts.values()))


def read_transactions(path) -> pd.DataFrame:
    """Load a purchase CSV; ``category_code`` is renamed to ``product_type``."""
    df = pd.read_csv(path, dtype={"product_id": str, "brand": str, "category_code": str})
    missing = {"event_time", "product_id", "category_code", "brand", "price"} - set(df.columns)
    if missing:
        raise ValueError(f"transaction file lacks columns {sorted(missing)}")
    df = df.rename(columns={"category_code": "product_type"})
    df["event_time"] = pd.to_datetime(df["event_time"], utc=True)
    if (df["price"] < 0).any():
        raise ValueError("negative prices in transaction log")
    return df


def filter_brands(df: pd.DataFrame, min_brand_size: int) -> pd.DataFrame:
    """Drop rows without a brand and brands with fewer than ``min_brand_size`` distinct products."""
    df = df[df["brand"].notna()]
    sizes = df.groupby("brand")["product_id"].nunique()
    keep = sizes.index[sizes >= min_brand_size]
    return df[df["brand"].isin(keep)]


def build_periods(df: pd.DataFrame, config: CalibrationConfig = CalibrationConfig()) -> list[PeriodData]:
    """Consecutive periods of ``interval_days`` starting at the earliest purchase."""
    if df.empty:
        raise ValueError("empty transaction log")
    df = filter_brands(df, config.min_brand_size)
    if df.empty:
        return []
    t = pd.to_datetime(df["event_time"], utc=True)
    idx = ((t - t.min()) // pd.Timedelta(days=config.interval_days)).astype(int)
    periods = []
    for p in range(int(idx.max()) + 1):
        counts = df.loc[idx == p, "product_id"].value_counts().sort_index()
        periods.append(PeriodData(tuple(counts.index), {k: int(c) for k, c in counts.items()}))
    return periods


def augment_no_purchase(periods: Sequence[PeriodData], alpha: float) -> list[PeriodData]:
    """Add round(alpha * purchases) no-purchase records per period, at least one if anything sold."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    out = []
    for p in periods:
        total = p.purchases
        n0 = math.floor(alpha * total + 0.5)
        if total > 0:
            n0 = max(n0, 1)
        out.append(replace(p, no_purchase=n0))
    return out


@dataclass
class MnlFit:
    weights: dict
    loglik: float
    history: list
    iterations: int
    converged: bool
    clamped: list


class _Likelihood:
    def __init__(self, periods: Sequence[PeriodData]):
        products = sorted({i for p in periods for i in p.offered})
        pos = {pid: k for k, pid in enumerate(products)}
        self.products = products
        O = np.zeros((len(periods), len(products)))
        C = np.zeros_like(O)
        N = np.zeros(len(periods))
        for t, p in enumerate(periods):
            for pid in p.offered:
                O[t, pos[pid]] = 1.0
            for pid, c in p.counts.items():
                if pid not in pos or not O[t, pos[pid]]:
                    raise ValueError(f"product {pid} purchased in a period where it was not offered")
                C[t, pos[pid]] = c
            N[t] = p.purchases + p.no_purchase
        self.O, self.N = O, N
        self.c = C.sum(axis=0)
        self.total = max(N.sum(), 1.0)

    def value(self, u: np.ndarray) -> float:
        return float((self.c @ u - self.N @ np.log1p(self.O @ np.exp(u))) / self.total)

    def grad(self, u: np.ndarray) -> np.ndarray:
        e = np.exp(u)
        share = self.N / (1.0 + self.O @ e)
        return (self.c - e * (share @ self.O)) / self.total


def fit_mnl(
    periods: Sequence[PeriodData],
    init: np.ndarray | None = None,
    tol: float = 1e-8,
    max_iter: int = 10_000,
) -> MnlFit:
    """Maximum-likelihood weights by projected gradient ascent on u = log v.

    Steps start from the Barzilai-Borwein length and backtrack until the
    Armijo condition holds, so the log-likelihood never decreases.
    """
    f = _Likelihood(periods)
    n = len(f.products)
    if n == 0:
        raise ValueError("no products to fit")
    u = np.zeros(n) if init is None else np.clip(np.asarray(init, dtype=float), U_MIN, U_MAX)
    val, g = f.value(u), f.grad(u)
    history = [val]
    step = 1.0
    converged = False
    it = 0

    def projected(u, g):
        g = g.copy()
        g[(u >= U_MAX) & (g > 0)] = 0.0
        g[(u <= U_MIN) & (g < 0)] = 0.0
        return g

    for it in range(1, max_iter + 1):
        pg = projected(u, g)
        if np.abs(pg).max() < tol:
            converged = True
            it -= 1
            break
        while True:
            u_new = np.clip(u + step * pg, U_MIN, U_MAX)
            new_val = f.value(u_new)
            if new_val >= val + 1e-4 * pg @ (u_new - u) or step < 1e-14:
                break
            step *= 0.5
        if new_val < val:
            # cannot make progress at machine precision
            break
        g_new = f.grad(u_new)
        s, y = u_new - u, g_new - g
        sy = s @ y
        step = float(np.clip(-(s @ s) / sy, 1e-8, 1e8)) if sy < 0 else 1.0
        u, val, g = u_new, new_val, g_new
        history.append(val)
    else:
        log.warning("MNL fit stopped at the iteration cap without converging")
    clamped = [f.products[k] for k in np.flatnonzero((u >= U_MAX) | (u <= U_MIN))]
    if clamped:
        log.warning("log-weights clamped for products %s", clamped)
    weights = dict(zip(f.products, np.exp(u).tolist()))
    return MnlFit(weights, val, history, it, converged, clamped)


def build_categories(prices: Sequence[float], brands: Sequence, ell: int) -> list[Category]:
    """Price-quartile categories on half-open intervals, then one category per brand.

    Empty price categories are dropped; thresholds are min(ell, category size).
    """
    if ell < 0:
        raise ValueError("ell must be non-negative")
    prices = np.asarray(prices, dtype=float)
    q = np.percentile(prices, [25, 50, 75])
    edges = np.concatenate([[-np.inf], q, [np.inf]])
    cats = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        members = np.flatnonzero((prices >= lo) & (prices < hi))
        if members.size:
            cats.append(Category(members.tolist(), min(ell, members.size)))
    brands = list(brands)
    for b in sorted(set(brands), key=str):
        members = [i for i, x in enumerate(brands) if x == b]
        cats.append(Category(members, min(ell, len(members))))
    return cats


def calibrate(df: pd.DataFrame, config: CalibrationConfig = CalibrationConfig(), ell: int = 1) -> dict:
    """Per product type: (instance, product ids); revenue is the median sale price."""
    out = {}
    for ptype, sub in df.groupby("product_type", sort=True):
        periods = augment_no_purchase(build_periods(sub, config), config.alpha)
        if not any(p.offered for p in periods):
            continue
        fit = fit_mnl(periods)
        ids = sorted(fit.weights)
        kept = filter_brands(sub, config.min_brand_size)
        price = kept.groupby("product_id")["price"].median()
        brand = kept.groupby("product_id")["brand"].first()
        cats = build_categories(price[ids].to_numpy(), brand[ids].tolist(), ell)
        inst = Instance(price[ids].tolist(), [fit.weights[i] for i in ids], cats)
        out[ptype] = (inst, ids)
    return out
