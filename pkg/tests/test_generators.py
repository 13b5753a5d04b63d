from fractions import Fraction

import numpy as np
import pytest

from topodyn.generators import (
    cantor_fan,
    cantor_value,
    circle_accumulation,
    fixed_points,
    generate,
    periodic_orbits,
    refine,
    shift_truncation,
)
from topodyn.symbolic import SymbolicPoint


def test_cantor_value_is_exact():
    assert cantor_value(SymbolicPoint.constant(0)) == 0
    # all digits 2 in base 3 sum to 1
    assert cantor_value(SymbolicPoint.constant(1)) == 1
    # digits 2, 0, 0, 2, 2, 0, 0, 2, 2, ... : 2/3 + (2/81 + 2/243) / (1 - 1/81)
    assert cantor_value(SymbolicPoint.periodic((1, 0))) == Fraction(7, 10)


def test_cantor_value_respects_the_shift_order():
    values = {cantor_value(x) for x in (SymbolicPoint.periodic(w) for w in [(0,), (1,), (0, 1), (1, 0)])}
    assert len(values) == 4 and all(0 <= v <= 1 for v in values)


def test_fan_layout():
    fan, lam = cantor_fan(4, 3)
    assert fan.n == 1 + 3 * 10 and lam == frozenset({0})
    assert fan.apply(0) == 0
    assert fan.labels[1].startswith("fiber 2 ")
    # each fiber is invariant and the map on it is the shift
    for block in fan.meta["blocks"]:
        assert fan.is_invariant(block["states"])
    assert fan.meta["resolution"] == pytest.approx(np.sqrt(2) / 4)


def test_fan_fibers_approach_the_origin():
    fan, _ = cantor_fan(6, 2)
    d = [min(fan.distance(0, x) for x in b["states"]) for b in fan.meta["blocks"]]
    assert d == sorted(d, reverse=True)


def test_circle_layout():
    sys_ = circle_accumulation(3)
    assert sys_.n == 4 + (1 + 2 + 4)
    assert sys_.labels[:4] == ("circle 0", "circle 1/4", "circle 1/2", "circle 3/4")
    z = sys_.state_of("z(3,1)")
    assert sys_.period(z) == 4 and sys_.period(0) == 1
    assert refine(sys_).n == circle_accumulation(4).n


def test_small_circle_has_five_states():
    assert circle_accumulation(2).n == 5


def test_simple_generators():
    assert fixed_points(3).dist[0, 2] == 2.0
    orbits = periodic_orbits([1, 3])
    assert [orbits.period(x) for x in orbits.states] == [1, 3, 3, 3]
    assert shift_truncation(4, "golden").n == 10
    assert generate("fixed_points", k=2).n == 2


def test_generator_errors():
    with pytest.raises(ValueError):
        generate("nope")
    with pytest.raises(ValueError):
        refine(fixed_points(3))
    with pytest.raises(ValueError):
        cantor_fan(1, 3)
