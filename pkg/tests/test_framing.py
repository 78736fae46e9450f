import math

import numpy as np
import pytest

from mnlcover.core import Category, Instance, check_covering, revenue, unconstrained_optimum
from mnlcover.framing import (
    FramingInstance,
    capacitated_optimum,
    framing_revenue,
    framing_upper_bound,
    solve_framing,
)
from oracles import brute_capacitated, random_instance


def test_capacitated_optimum_examples():
    inst = Instance((10, 4, 2), (1, 1, 1))
    res = capacitated_optimum(inst, 1)
    assert res.assortment == {0} and res.value == pytest.approx(5)
    # a second product would dilute the first: {0, 1} earns only 14/3
    res = capacitated_optimum(inst, 2)
    assert res.assortment == {0} and res.value == pytest.approx(5)
    assert res.value > revenue(inst, {0, 1}) == pytest.approx(14 / 3)
    assert capacitated_optimum(inst, 3).value == pytest.approx(unconstrained_optimum(inst).value)
    with pytest.raises(ValueError):
        capacitated_optimum(inst, 0)
    with pytest.raises(ValueError):
        capacitated_optimum(inst, 4)


def test_capacitated_optimum_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(20):
        inst = random_instance(rng, int(rng.integers(1, 13)), 2)
        cap = int(rng.integers(1, inst.n + 1))
        assert capacitated_optimum(inst, cap).value == pytest.approx(brute_capacitated(inst, (), cap), abs=1e-9)


def test_framing_revenue_examples():
    inst = Instance((10, 4), (1, 1))
    fi = FramingInstance(inst, 6, [0.0] * 6)
    assert framing_revenue(fi, [0, 1, None, None, None, None]) == 0
    fi = FramingInstance(inst, 6, [1.0] + [0.0] * 5)
    assert framing_revenue(fi, [0, None, None, None, None, 1]) == pytest.approx(5)
    fi = FramingInstance(inst, 6, [0.5, 0.5, 0, 0, 0, 0])
    assert framing_revenue(fi, [0, 1, None, None, None, None]) == pytest.approx(0.5 * 5 + 0.5 * 14 / 3)


def test_framing_revenue_matches_direct_prefix_sum():
    rng = np.random.default_rng(1)
    inst = random_instance(rng, 4, 1)
    beta = sorted(rng.uniform(0, 1, 12), reverse=True)
    fi = FramingInstance(inst, 12, beta)
    X = [None] * 12
    for pos, i in zip(rng.choice(12, 4, replace=False), range(4)):
        X[pos] = i
    direct = sum(b * revenue(inst, {i for i in X[: g + 1] if i is not None}) for g, b in enumerate(beta))
    assert framing_revenue(fi, X) == pytest.approx(direct, abs=1e-9)


def test_invalid_framings():
    inst = Instance((10, 4), (1, 1))
    with pytest.raises(ValueError):
        FramingInstance(inst, 5, [0.1] * 5)
    with pytest.raises(ValueError):
        FramingInstance(inst, 6, [0.1, 0.2, 0, 0, 0, 0])
    fi = FramingInstance(inst, 6, [0.1] * 6)
    with pytest.raises(ValueError):
        framing_revenue(fi, [0, 0, None, None, None, None])


def test_first_position_only():
    inst = Instance((10, 4, 2), (1, 1, 1))
    fi = FramingInstance(inst, 9, [1.0] + [0.0] * 8)
    placement, value = solve_framing(fi)
    assert placement[0] == 0
    assert value == pytest.approx(capacitated_optimum(inst, 1).value)


def test_solution_covers_and_meets_bound():
    rng = np.random.default_rng(2)
    for _ in range(15):
        n = int(rng.integers(1, 6))
        inst = random_instance(rng, n, int(rng.integers(0, 4)))
        G = 3 * n
        fi = FramingInstance(inst, G, [0.8 ** g for g in range(1, G + 1)])
        placement, value = solve_framing(fi)
        assert len(placement) == G
        assert check_covering(inst, {i for i in placement if i is not None})
        assert value == pytest.approx(framing_revenue(fi, placement))
        assert value * 2 * math.log2(8 * n) >= framing_upper_bound(fi) * (1 - 1e-9)


def test_overlap_is_not_duplicated():
    inst = Instance((10, 1), (1, 1), [Category({0, 1}, 2)])
    fi = FramingInstance(inst, 6, [1 / 6] * 6)
    placement, _ = solve_framing(fi)
    placed = [i for i in placement if i is not None]
    assert sorted(placed) == [0, 1]
