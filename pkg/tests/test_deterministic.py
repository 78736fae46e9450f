import numpy as np
import pytest

from mnlcover.core import Category, Instance, SizeGuardError, check_covering, harmonic, log_k, unconstrained_optimum
from mnlcover.deterministic import (
    CardinalityParams,
    capacitated_expansion,
    detect_two_group_tu,
    greedy_cover,
    sales_rate_lp,
    solve_daoc_approx,
    solve_daoc_cardinality,
    solve_daoc_exact,
    solve_daoc_tu,
)
from mnlcover.lp import solve_lp
from oracles import (
    brute_capacitated,
    brute_card,
    brute_daoc,
    brute_min_cover_cost,
    covers,
    min_feasible_size,
    random_instance,
)


def test_greedy_examples():
    assert greedy_cover(Instance((1, 1), (1, 1)), (1, 1)) == frozenset()
    inst = Instance((1, 1, 1), (1, 4, 2), [Category({0, 1}, 1), Category({1, 2}, 1)])
    assert greedy_cover(inst, inst.weights) == {0, 2}
    inst = Instance((1, 1), (3, 1), [Category({0, 1}, 2)])
    assert greedy_cover(inst, inst.weights) == {0, 1}


def test_greedy_tie_goes_to_smallest_index():
    inst = Instance((1, 1, 1), (2, 2, 2), [Category({0, 1, 2}, 1)])
    assert greedy_cover(inst, inst.weights) == {0}


def test_greedy_is_feasible_and_within_harmonic_factor():
    rng = np.random.default_rng(11)
    for _ in range(60):
        inst = random_instance(rng, int(rng.integers(1, 9)), int(rng.integers(0, 6)))
        costs = rng.uniform(0.1, 3, inst.n)
        S = greedy_cover(inst, costs)
        assert covers(inst, S)
        bound = harmonic(inst.K) * brute_min_cover_cost(inst, costs)
        assert sum(costs[i] for i in S) <= bound + 1e-9


def test_approx_examples(gap_instance):
    assert solve_daoc_approx(Instance((10, 4), (1, 1))).value == pytest.approx(5)
    res = solve_daoc_approx(gap_instance)
    assert check_covering(gap_instance, res.assortment)
    assert res.value >= (16 / 17.5) / 2


def test_exact_examples(gap_instance):
    res = solve_daoc_exact(gap_instance)
    assert res.assortment == {0, 1}
    assert res.value == pytest.approx(16 / 17.5, abs=1e-12)
    inst = Instance((3, 1, 2), (1, 2, 1))
    assert solve_daoc_exact(inst).value == pytest.approx(unconstrained_optimum(inst).value)


def test_exact_with_full_categories_expands_their_union():
    inst = Instance((1, 5, 0.2, 3), (1, 1, 1, 1), [Category({0, 2}, 2)])
    res = solve_daoc_exact(inst)
    assert res.assortment >= {0, 2}
    assert res.value == pytest.approx(brute_daoc(inst))


def test_exact_size_guard():
    inst = Instance([1.0] * 26, [1.0] * 26)
    with pytest.raises(SizeGuardError):
        solve_daoc_exact(inst)


def test_exact_matches_oracle_and_approx_bound():
    rng = np.random.default_rng(3)
    for _ in range(80):
        inst = random_instance(rng, int(rng.integers(1, 9)), int(rng.integers(0, 6)))
        exact = solve_daoc_exact(inst)
        assert exact.value == pytest.approx(brute_daoc(inst), rel=1e-12)
        assert covers(inst, exact.assortment)
        approx = solve_daoc_approx(inst)
        assert covers(inst, approx.assortment)
        assert approx.value * (log_k(inst.K) + 2) >= exact.value * (1 - 1e-9)


def test_two_group_detection():
    inst = Instance([1] * 3, [1] * 3, [Category({0, 1}, 1)])
    assert detect_two_group_tu(inst) == ([0], [])
    tri = Instance([1] * 3, [1] * 3, [Category({0, 1}, 1), Category({1, 2}, 1), Category({0, 2}, 1)])
    assert detect_two_group_tu(tri) is None
    # price bands against brands
    cats = [Category({0, 1}, 1), Category({2, 3}, 1), Category({0, 2}, 1), Category({1, 3}, 1)]
    groups = detect_two_group_tu(Instance([1] * 4, [1] * 4, cats))
    assert groups == ([0, 1], [2, 3])
    with pytest.raises(ValueError):
        solve_daoc_tu(tri)


def test_tu_examples(gap_instance):
    inst = Instance((10, 4), (1, 1))
    assert solve_daoc_tu(inst).value == pytest.approx(5)
    assert solve_daoc_tu(gap_instance).value == pytest.approx(16 / 17.5, abs=1e-9)


def test_tu_on_disjoint_categories():
    rng = np.random.default_rng(8)
    for _ in range(30):
        n = int(rng.integers(2, 11))
        labels = rng.integers(0, 3, n)
        cats = []
        for g in range(3):
            members = np.flatnonzero(labels == g)
            if members.size:
                cats.append(Category(members.tolist(), int(rng.integers(0, members.size + 1))))
        inst = Instance(rng.exponential(1, n).tolist(), rng.uniform(0.2, 5, n).tolist(), cats)
        assert solve_daoc_tu(inst).value == pytest.approx(brute_daoc(inst), abs=1e-7)


def test_capacitated_examples():
    inst = Instance((10, 4, 2), (1, 1, 1))
    res = capacitated_expansion(inst, {2}, 1)
    assert res.assortment == {0, 2} and res.value == pytest.approx(4)
    assert capacitated_expansion(inst, {1}, 0).assortment == {1}
    assert capacitated_expansion(inst, (), 3).value == pytest.approx(unconstrained_optimum(inst).value)


def test_capacitated_matches_brute_force():
    rng = np.random.default_rng(4)
    for _ in range(40):
        n = int(rng.integers(2, 13))
        inst = Instance(rng.exponential(1, n).tolist(), rng.uniform(0.2, 5, n).tolist())
        forced = set(rng.choice(n, int(rng.integers(0, 3)), replace=False).tolist())
        L = int(rng.integers(0, n + 1))
        res = capacitated_expansion(inst, forced, L)
        assert res.assortment >= forced and len(res.assortment - forced) <= L
        assert res.value == pytest.approx(brute_capacitated(inst, forced, L), abs=1e-9)


def test_sales_rate_vertices_are_integral():
    rng = np.random.default_rng(9)
    inst = Instance(rng.exponential(1, 6).tolist(), rng.uniform(1, 3, 6).tolist(), [Category({0, 1, 2}, 2)])
    x = solve_lp(sales_rate_lp(inst)).values
    assert np.all((np.abs(x[1:]) < 1e-7) | (np.abs(x[1:] - x[0]) < 1e-7))


def test_cardinality_examples():
    res = solve_daoc_cardinality(Instance((10, 4), (1, 1)), CardinalityParams(1))
    assert res.assortment == {0} and res.value == pytest.approx(5)
    inst = Instance((3, 1, 2, 5), (1, 2, 1, 0.5))
    res = solve_daoc_cardinality(inst, CardinalityParams(4))
    assert res.value == pytest.approx(unconstrained_optimum(inst).value)
    with pytest.raises(ValueError):
        CardinalityParams(0)
    with pytest.raises(ValueError):
        CardinalityParams(2, 1.5)


def test_cardinality_reports_when_nothing_qualifies():
    # the only cover has four products, above the (2 log K + 2) L = 2 limit
    inst = Instance((1, 1, 1, 1), (1, 1, 1, 1), [Category({0, 1, 2, 3}, 4)])
    assert solve_daoc_cardinality(inst, CardinalityParams(1)) is None


def test_cardinality_bicriteria_guarantee():
    rng = np.random.default_rng(21)
    eps = 0.2
    checked = 0
    while checked < 25:
        inst = random_instance(rng, int(rng.integers(2, 9)), int(rng.integers(0, 4)))
        L = int(rng.integers(max(min_feasible_size(inst), 1), inst.n + 1))
        opt = brute_card(inst, L)
        res = solve_daoc_cardinality(inst, CardinalityParams(L, eps))
        lk = log_k(inst.K)
        assert res is not None
        assert covers(inst, res.assortment)
        assert len(res.assortment) <= (2 * lk + 3) * L
        assert res.value * ((2 + eps) * lk + 3 + eps) >= opt * (1 - 1e-9)
        checked += 1
