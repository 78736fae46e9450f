import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from mnlcover.lp import LpModel, LpModelError, solve_lp
from oracles import vertex_enum


def model(n, obj, rows, **kw):
    m = LpModel(n, obj, **kw)
    for coeffs, rel, rhs in rows:
        m.add(coeffs, rel, rhs)
    return m


def test_box():
    sol = solve_lp(model(1, [1], [({0: 1}, "<=", 1)]))
    assert sol.status == "optimal"
    assert sol.values[0] == pytest.approx(1) and sol.objective_value == pytest.approx(1)


def test_infeasible():
    assert solve_lp(model(1, [1], [({0: 1}, "<=", -1)])).status == "infeasible"


def test_two_dimensional():
    sol = solve_lp(model(2, [1, 1], [({0: 1, 1: 1}, "<=", 2), ({0: 1}, "<=", 1)]))
    assert sol.objective_value == pytest.approx(2)


def test_unbounded():
    assert solve_lp(model(2, [1, 0], [({1: 1}, "<=", 1)])).status == "unbounded"


def test_equalities_bounds_and_free_variables():
    # max x - y with x + y = 1, y free in [-2, inf), x <= 4
    m = model(2, [1, -1], [({0: 1, 1: 1}, "=", 1)], lower=[0, -2], upper=[4, None])
    sol = solve_lp(m)
    assert sol.objective_value == pytest.approx(5)
    assert_allclose(sol.values, [3, -2], atol=1e-9)
    m = model(2, [-1, -1], [({0: 1, 1: -1}, "=", 0), ({0: 1}, ">=", -3)], lower=[None, None])
    sol = solve_lp(m)
    assert sol.objective_value == pytest.approx(6)
    m = model(1, [1], [], lower=[None], upper=[2.5])
    assert solve_lp(m).objective_value == pytest.approx(2.5)


def test_redundant_equalities():
    rows = [({0: 1, 1: 1}, "=", 1), ({0: 2, 1: 2}, "=", 2), ({0: 1}, "<=", 0.25)]
    sol = solve_lp(model(2, [3, 1], rows))
    assert sol.objective_value == pytest.approx(0.25 * 3 + 0.75)


@pytest.mark.parametrize(
    "bad",
    [
        lambda: model(1, [math.nan], []),
        lambda: model(1, [1], [({0: math.inf}, "<=", 1)]),
        lambda: model(1, [1], [({3: 1}, "<=", 1)]),
        lambda: model(1, [1], [({0: 1}, "<", 1)]),
        lambda: model(1, [1], [({0: 1}, "<=", math.nan)]),
    ],
)
def test_malformed_models_are_errors(bad):
    with pytest.raises(LpModelError):
        solve_lp(bad())


def test_debug_listing():
    text = model(2, [1, 2], [({0: 1, 1: 1}, "<=", 2)]).to_text()
    assert "max +1 x0 +2 x1" in text and "r0: +1 x0 +1 x1 <= 2" in text


def random_lp(rng):
    n = int(rng.integers(1, 7))
    m = int(rng.integers(1, 7))
    A = rng.uniform(-1, 2, (m, n))
    b = rng.uniform(0, 3, m)
    A = np.vstack([A, np.ones((1, n))])  # keep the region bounded
    b = np.append(b, rng.uniform(1, 5))
    c = rng.uniform(-1, 2, n)
    return A, b, c


def to_model(A, b, c):
    m = LpModel(len(c), c.tolist())
    for row, rhs in zip(A, b):
        m.add({j: a for j, a in enumerate(row)}, "<=", rhs)
    return m


def test_matches_vertex_enumeration():
    rng = np.random.default_rng(2024)
    for _ in range(100):
        A, b, c = random_lp(rng)
        sol = solve_lp(to_model(A, b, c), method="simplex")
        ref = vertex_enum(A, b, c)
        assert sol.status == "optimal"
        assert sol.objective_value == pytest.approx(ref, abs=1e-6)
        assert np.all(A @ sol.values <= b + 1e-7) and np.all(sol.values >= -1e-7)


def test_mixed_relations_against_highs():
    rng = np.random.default_rng(5)
    for _ in range(40):
        n = int(rng.integers(2, 7))
        m = LpModel(n, rng.uniform(-1, 1, n).tolist(), upper=[3.0] * n)
        x0 = rng.uniform(0, 1, n)  # every row is built to admit this point
        for _ in range(int(rng.integers(1, 6))):
            rel = ["<=", ">=", "="][int(rng.integers(0, 3))]
            coeffs = rng.uniform(-1, 1, n)
            rhs = float(coeffs @ x0) + (0.3 if rel == "<=" else -0.3 if rel == ">=" else 0.0)
            m.add(dict(enumerate(coeffs)), rel, rhs)
        a, b = solve_lp(m, method="simplex"), solve_lp(m, method="highs")
        assert a.status == b.status == "optimal"
        assert a.objective_value == pytest.approx(b.objective_value, abs=1e-7)
        assert np.all(m.residuals(a.values) <= 1e-7)


def test_deterministic():
    rng = np.random.default_rng(3)
    A, b, c = random_lp(rng)
    x1 = solve_lp(to_model(A, b, c)).values
    x2 = solve_lp(to_model(A, b, c)).values
    assert np.array_equal(x1, x2)


def test_degenerate_cycling_example():
    # classic Beale example; cycles under the largest-coefficient rule without anti-cycling
    rows = [
        ({0: 0.25, 1: -60, 2: -1 / 25, 3: 9}, "<=", 0),
        ({0: 0.5, 1: -90, 2: -1 / 50, 3: 3}, "<=", 0),
        ({2: 1}, "<=", 1),
    ]
    sol = solve_lp(model(4, [0.75, -150, 1 / 50, -6], rows))
    assert sol.objective_value == pytest.approx(0.05)
