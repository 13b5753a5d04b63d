import itertools
from math import log, sqrt

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from topodyn.entropy import (
    CapExceededError,
    entropy_estimate,
    fit_slope,
    greedy_clique,
    max_clique,
    perron_root,
    separated_set,
    sft_entropy,
    word_count_entropy,
    word_count_s_n,
    word_radius,
)
from topodyn.generators import cantor_fan, fixed_points
from topodyn.symbolic import EmptySubshiftError, SubshiftSystem, full_shift, golden_mean, one_point, truncation

from conftest import system_and_subset

GOLDEN = log((1 + sqrt(5)) / 2)


@pytest.fixture(scope="module")
def trunc6():
    return truncation(full_shift(2), 6)


def brute_max_clique(adj):
    n = len(adj)
    for k in range(n, 0, -1):
        for combo in itertools.combinations(range(n), k):
            if all(adj[a, b] for a, b in itertools.combinations(combo, 2)):
                return k
    return 0


def test_large_radius_gives_one_point(trunc6):
    assert separated_set(trunc6, None, 4, 1.0, mode="greedy")[1] == 1
    assert separated_set(fixed_points(5), None, 3, 10.0)[1] == 1


def test_separated_counts_on_the_truncation(trunc6):
    K = frozenset(list(trunc6.states)[:60])
    assert separated_set(trunc6, None, 3, 0.5)[1] == 8
    assert separated_set(trunc6, trunc6.states, 1, 0.5)[1] == 2
    assert separated_set(trunc6, K, 2, 0.5, mode="greedy")[1] <= separated_set(trunc6, K, 2, 0.5)[1]


def test_exact_mode_respects_the_cap(trunc6):
    with pytest.raises(CapExceededError):
        separated_set(trunc6, None, 2, 0.5, cap=50)
    with pytest.raises(ValueError):
        separated_set(trunc6, None, 2, 0.5, mode="fancy")


def test_separated_set_is_separated(trunc6):
    chosen, size = separated_set(trunc6, None, 4, 0.5)
    assert size == len(chosen) == 16
    for x, y in itertools.combinations(chosen, 2):
        assert any(trunc6.distance(trunc6.iterate(x, i), trunc6.iterate(y, i)) > 0.5 for i in range(4))


def test_word_radius():
    assert [word_radius(r) for r in (1, 0.5, 0.3, 0.25, 0.1)] == [None, 0, 1, 1, 3]


def test_word_count_matches_clique_search(trunc6):
    codes = trunc6.meta["codes"]
    for n in (1, 2, 3):
        for r in (0.5, 0.25):
            assert word_count_s_n(codes, trunc6.states, n, r) == separated_set(trunc6, None, n, r)[1]


def test_fixed_point_has_zero_entropy():
    rep = entropy_estimate(fixed_points(1), n_max=6)
    assert rep.estimate == 0.0 and rep.degenerate


def test_full_shift_truncation_estimate():
    rep = entropy_estimate(truncation(full_shift(2), 12), r=0.5, n_max=12)
    assert rep.method == "word-count"
    assert rep.estimate == pytest.approx(log(2), abs=0.01)


def test_golden_mean_truncation_estimate():
    rep = entropy_estimate(truncation(golden_mean(), 14), r=0.5, n_max=14)
    assert rep.estimate == pytest.approx(GOLDEN, abs=0.02)


def test_fan_fibers_lift_to_the_full_shift():
    fan, _ = cantor_fan(4, 3)
    rep = entropy_estimate(fan, n_max=8)
    assert rep.method.endswith("symbolic-lift")
    assert rep.estimate >= log(2) - 0.05
    assert "finite-model estimate; not an exact value" in rep.notes


def test_report_csv_header(trunc6):
    rep = entropy_estimate(trunc6, r=0.5, n_max=4)
    lines = rep.csv().splitlines()
    assert lines[0] == "r,n,s_n,mode" and lines[1] == "0.5,1,2,word-count"


def test_estimate_argument_errors(trunc6):
    with pytest.raises(ValueError):
        entropy_estimate(trunc6, n_max=3)
    with pytest.raises(ValueError):
        entropy_estimate(trunc6, K=set())


def test_fit_slope_of_exact_exponential():
    slope, resid = fit_slope([1, 2, 3, 4], [3.0**k for k in (1, 2, 3, 4)])
    assert slope == pytest.approx(log(3)) and resid == pytest.approx(0, abs=1e-12)


# -- exact SFT entropy --------------------------------------------------------------------


def test_sft_entropy_examples():
    assert sft_entropy(full_shift(2)) == pytest.approx(log(2), abs=1e-12)
    assert sft_entropy(golden_mean()) == pytest.approx(GOLDEN, abs=1e-12)
    assert sft_entropy(one_point()) == 0.0
    assert sft_entropy(full_shift(3)) == pytest.approx(log(3), abs=1e-12)


def test_reducible_sft_takes_the_largest_component():
    # a golden-mean block and a lone loop joined one way
    S = SubshiftSystem(3, [(0, 0), (0, 1), (1, 0), (0, 2), (2, 2)])
    assert sft_entropy(S) == pytest.approx(GOLDEN, abs=1e-12)


def test_word_count_agrees_with_spectral():
    assert abs(word_count_entropy(full_shift(2), 20) - log(2)) < 1e-3
    assert abs(word_count_entropy(golden_mean(), 25) - sft_entropy(golden_mean())) < 1e-3


def test_empty_subshift_has_no_entropy():
    empty = SubshiftSystem(2, [(0, 1)])
    with pytest.raises(EmptySubshiftError):
        sft_entropy(empty)
    with pytest.raises(EmptySubshiftError):
        word_count_entropy(empty)


def test_perron_root_of_known_matrix():
    assert perron_root(np.array([[1, 1], [1, 0]])) == pytest.approx((1 + sqrt(5)) / 2, rel=1e-12)
    assert perron_root(np.array([[0, 1], [1, 0]])) == pytest.approx(1.0, rel=1e-12)


def test_block_recoding_keeps_entropy():
    words = [w for w in itertools.product((0, 1), repeat=3) if (1, 1) not in (w[:2], w[1:])]
    assert abs(sft_entropy(SubshiftSystem(2, words)) - sft_entropy(golden_mean())) < 1e-9


# -- properties ---------------------------------------------------------------------------------


@st.composite
def adjacency(draw):
    n = draw(st.integers(1, 10))
    bits = draw(st.lists(st.booleans(), min_size=n * n, max_size=n * n))
    a = np.array(bits, dtype=bool).reshape(n, n)
    a = a | a.T
    np.fill_diagonal(a, False)
    return a


@given(adjacency())
def test_max_clique_matches_enumeration(adj):
    best = max_clique(adj)
    assert len(best) == brute_max_clique(adj)
    assert all(adj[a, b] for a, b in itertools.combinations(best, 2))
    assert len(greedy_clique(adj)) <= len(best)


@given(system_and_subset(16), st.data(), st.integers(1, 5), st.sampled_from([0.5, 0.25, 0.125]))
def test_separated_count_is_monotone_in_k(data, more, n, r):
    sys_, K = data
    bigger = K | more.draw(st.sets(st.integers(0, sys_.n - 1)))
    assert separated_set(sys_, K, n, r)[1] <= separated_set(sys_, bigger, n, r)[1]


@given(system_and_subset(16), st.integers(1, 5), st.floats(0.01, 1.5), st.floats(0.01, 1.5))
def test_separated_count_is_antitone_in_r(data, n, r1, r2):
    sys_, K = data
    lo, hi = sorted((r1, r2))
    assert separated_set(sys_, K, n, lo)[1] >= separated_set(sys_, K, n, hi)[1]


@given(system_and_subset(16), st.integers(1, 5), st.sampled_from([0.5, 0.25]))
def test_greedy_never_beats_exact(data, n, r):
    sys_, K = data
    assert separated_set(sys_, K, n, r, mode="greedy")[1] <= separated_set(sys_, K, n, r)[1]


@st.composite
def sft_and_sub(draw):
    m = draw(st.integers(2, 3))
    pairs = draw(st.sets(st.tuples(st.integers(0, m - 1), st.integers(0, m - 1)), min_size=1))
    sub = draw(st.sets(st.sampled_from(sorted(pairs))))
    return SubshiftSystem(m, pairs), SubshiftSystem(m, sub)


@given(sft_and_sub())
def test_sft_entropy_is_monotone_under_inclusion(pair):
    S, G = pair
    if S.is_empty:
        return
    h = sft_entropy(S)
    assert 0.0 <= h <= log(S.alphabet) + 1e-12
    if not G.is_empty:
        assert sft_entropy(G) <= h + 1e-9
