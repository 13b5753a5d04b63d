import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from topodyn.core import (
    FiniteMetricSystem,
    MetricSystemError,
    PseudoOrbit,
    accumulation_set,
    build_ball,
    invariant_core,
    is_pseudo_orbit,
    is_shadowed_by,
    pseudo_orbit_error,
    shadowing_error,
)

from conftest import system_and_subset, systems


def test_rejects_non_bijection():
    with pytest.raises(MetricSystemError):
        FiniteMetricSystem(np.zeros((2, 2)), [0, 0])


def test_rejects_broken_triangle():
    d = np.array([[0, 1, 5], [1, 0, 1], [5, 1, 0]], dtype=float)
    with pytest.raises(MetricSystemError, match="triangle"):
        FiniteMetricSystem(d, [0, 1, 2])


def test_rejects_asymmetric_table():
    d = np.array([[0, 1], [2, 0]], dtype=float)
    with pytest.raises(MetricSystemError):
        FiniteMetricSystem(d, [1, 0])


def test_lazy_table_is_validated_on_first_use():
    sys_ = FiniteMetricSystem(lambda: np.array([[0, 1], [2, 0]], dtype=float), [1, 0])
    with pytest.raises(MetricSystemError):
        sys_.dist


def test_orbits_and_periods(square):
    assert square.orbit(0) == [0, 1, 2, 3]
    assert square.period(2) == 4
    assert square.iterate(0, -1) == 3
    assert square.image({0, 1}) == frozenset({1, 2})
    assert square.is_invariant(range(4))
    assert not square.is_invariant({0})


def test_ball_of_corner(square):
    assert build_ball(square, {0}, 1.0) == frozenset({0, 1, 3})
    assert build_ball(square, {0}, 0.5) == frozenset({0})
    assert build_ball(square, {0}, 2.0) == frozenset(range(4))


def test_ball_rejects_bad_input(square):
    with pytest.raises(ValueError):
        build_ball(square, {0}, -1)
    with pytest.raises(ValueError):
        build_ball(square, set(), 1)
    with pytest.raises(MetricSystemError):
        build_ball(square, {7}, 1)


def test_core_of_invariant_set_is_itself(square):
    res = invariant_core(square, range(4), 0.0)
    assert res.members == frozenset(range(4)) and res.stabilized


def test_core_of_non_invariant_ball_is_empty(square):
    res = invariant_core(square, {0}, 1.0)
    assert res.members == frozenset()
    assert res.stabilized


def test_restrict_keeps_distances(square):
    sub, members = square.restrict(range(4))
    assert members == [0, 1, 2, 3]
    assert np.allclose(sub.dist, square.dist)
    with pytest.raises(MetricSystemError):
        square.restrict({0, 1})


def test_accumulation_set(square):
    assert accumulation_set(square, 1.0) == frozenset(range(4))
    assert accumulation_set(square, 0.5) == frozenset()


def test_pseudo_orbit_of_genuine_orbit_has_zero_error(square):
    assert pseudo_orbit_error(square, [0, 1, 2, 3]) == 0.0
    assert is_pseudo_orbit(square, [0, 2], 1.0)
    assert not is_pseudo_orbit(square, [0, 3], 1.0)


def test_periodic_pseudo_orbit_wraps(square):
    po = PseudoOrbit((0, 1), periodic=True)
    assert po.at(square, 2) == 0 and po.at(square, -1) == 1
    # f(1) = 2 but the sequence returns to 0: error d(2, 0)
    assert pseudo_orbit_error(square, po) == pytest.approx(np.sqrt(2))


def test_shadowing_by_the_orbit_itself(square):
    po = PseudoOrbit((0, 1, 2, 3), periodic=True)
    assert shadowing_error(square, po, 0) == 0.0
    assert shadowing_error(square, po, 1) == pytest.approx(1.0)
    assert is_shadowed_by(square, po, 1, 1.0)
    assert not is_shadowed_by(square, po, 2, 1.0)


def test_half_infinite_pseudo_orbit_follows_orbits(square):
    po = PseudoOrbit((0,), start=0)
    assert [po.at(square, i) for i in range(-2, 3)] == [2, 3, 0, 1, 2]


# -- properties -------------------------------------------------------------


@given(system_and_subset(), st.floats(0, 1.5), st.floats(0, 1.5))
def test_ball_is_monotone_in_radius(data, r1, r2):
    sys_, S = data
    lo, hi = sorted((r1, r2))
    assert S <= build_ball(sys_, S, lo) <= build_ball(sys_, S, hi)


@given(system_and_subset(), st.floats(0, 1.5), st.data())
def test_ball_is_monotone_in_set(data, r, more):
    sys_, S = data
    T = S | more.draw(st.sets(st.integers(0, sys_.n - 1)))
    assert build_ball(sys_, S, r) <= build_ball(sys_, T, r)


@given(system_and_subset(), st.floats(0, 1.5), st.floats(0, 1.5))
def test_core_is_monotone_and_invariant(data, r1, r2):
    sys_, S = data
    lo, hi = sorted((r1, r2))
    small = invariant_core(sys_, S, lo)
    big = invariant_core(sys_, S, hi)
    assert small.stabilized and big.stabilized
    assert small.members <= big.members
    assert sys_.is_invariant(small.members)
    assert big.members <= build_ball(sys_, S, hi)


@given(system_and_subset(), st.floats(0, 1.5))
def test_core_is_the_largest_invariant_subset_of_the_ball(data, r):
    sys_, S = data
    ball = build_ball(sys_, S, r)
    whole_orbits = frozenset(x for x in ball if set(sys_.orbit(x)) <= ball)
    assert invariant_core(sys_, S, r).members == whole_orbits


@given(systems(), st.integers(0, 2**32 - 1))
def test_genuine_orbit_shadows_itself(sys_, seed):
    x = seed % sys_.n
    orbit = sys_.orbit(x)
    po = PseudoOrbit(tuple(orbit), periodic=True)
    assert pseudo_orbit_error(sys_, po) == 0.0
    assert shadowing_error(sys_, po, x) == 0.0
