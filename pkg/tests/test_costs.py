from fractions import Fraction

import pytest

from pfalab.costs import (
    DEFAULT_WEIGHTS,
    IMPLEMENTATIONS,
    OPERATIONS,
    CostBound,
    CostExpr,
    WeightProfile,
    cost_of,
    expr,
    savings_ratio,
    to_csv,
)
from pfalab.rng import Rng


def test_point_costs_at_default_weights():
    assert cost_of("ori").evaluate(DEFAULT_WEIGHTS) == (100, 100)
    assert cost_of("detect").evaluate(DEFAULT_WEIGHTS) == (20, 20)
    assert cost_of("dmr").evaluate(DEFAULT_WEIGHTS) == (200, 200)
    assert cost_of("bs").evaluate(DEFAULT_WEIGHTS) == (200, 200)


def test_correction_and_combined_bounds():
    lo, hi = cost_of("correct").evaluate(DEFAULT_WEIGHTS)
    assert (lo, hi) == (Fraction(1, 4), 64)
    lo, hi = cost_of("algo").evaluate(DEFAULT_WEIGHTS)
    assert lo == Fraction(481, 4)
    assert float(lo) == 120.25
    assert hi == 184


def test_savings_ratio_against_duplication():
    ratio = savings_ratio(cost_of("algo"), cost_of("dmr"))
    assert ratio == Fraction(319, 800)
    assert float(ratio) == 0.39875
    assert savings_ratio(cost_of("ori"), cost_of("ori")) == 0
    worst = CostBound.point(cost_of("algo").upper)
    assert savings_ratio(worst, cost_of("dmr")) == Fraction(2, 25)


def test_unknown_implementation_rejected():
    with pytest.raises(ValueError):
        cost_of("tmr")


def test_expr_algebra():
    a = expr(add=3, mix=1)
    b = expr(add=2, key=4)
    total = a + b
    assert total["add"] == 5
    assert total["mix"] == 1
    assert total["key"] == 4
    assert total.scaled(Fraction(1, 2))["add"] == Fraction(5, 2)
    assert expr(add=1, sub=-1) + expr(sub=1) == expr(add=1)
    with pytest.raises(ValueError):
        expr(xor=3)
    with pytest.raises(KeyError):
        a["xor"]


def test_evaluation_is_linear():
    rng = Rng(90)
    weights = DEFAULT_WEIGHTS
    for _ in range(50):
        a = CostExpr({op: Fraction(rng.randrange(30), 1 + rng.randrange(8))
                      for op in OPERATIONS})
        b = CostExpr({op: Fraction(rng.randrange(30), 1 + rng.randrange(8))
                      for op in OPERATIONS})
        k = Fraction(1 + rng.randrange(11), 1 + rng.randrange(6))
        assert (a + b).evaluate(weights) == (
            a.evaluate(weights) + b.evaluate(weights))
        assert a.scaled(k).evaluate(weights) == k * a.evaluate(weights)


def test_heavier_weights_never_cheapen():
    base = DEFAULT_WEIGHTS
    for op in OPERATIONS:
        bumped = WeightProfile(**{op: base[op] + 1})
        for name in IMPLEMENTATIONS:
            lo_b, hi_b = cost_of(name).evaluate(base)
            lo_h, hi_h = cost_of(name).evaluate(bumped)
            assert lo_h >= lo_b
            assert hi_h >= hi_b


def test_weight_validation():
    with pytest.raises(ValueError):
        WeightProfile(mix=0)
    with pytest.raises(ValueError):
        WeightProfile(key=-1)
    with pytest.raises(KeyError):
        DEFAULT_WEIGHTS["xor"]


def test_bound_validation():
    with pytest.raises(ValueError):
        CostBound(expr(add=2), expr(add=1))
    # Bounds compare per operation class, not by weighted total.
    with pytest.raises(ValueError):
        CostBound(expr(add=1), expr(mix=1))


def test_csv_table():
    lines = to_csv().strip().splitlines()
    assert lines == [
        "implementation,lower,upper",
        "ori,100,100",
        "detect,20,20",
        "correct,0.25,64",
        "algo,120.25,184",
        "dmr,200,200",
        "bs,200,200",
    ]
