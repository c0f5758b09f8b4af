import itertools
import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from tlsum.assignment import matching_weight, max_weight_assignment


def brute_force(weights):
    """Best total weight over every partial one-to-one matching."""
    p, r = len(weights), len(weights[0])
    best = 0.0
    # padding the short side with dummies turns partial matchings into permutations
    n = max(p, r)
    for perm in itertools.permutations(range(n)):
        total = math.fsum(weights[i][perm[i]] for i in range(p) if perm[i] < r)
        best = max(best, total)
    return best


def test_single_cell():
    assert max_weight_assignment([[0.5]]) == [(0, 0)]


def test_zero_weights_are_never_matched():
    assert max_weight_assignment([[0, 0], [0, 0]]) == []
    assert max_weight_assignment([[0, 1.0], [0, 0]]) == [(0, 1)]


def test_greedy_trap():
    # greedy takes 0.9 and is left with 0; the optimum pairs the two 0.8s
    w = [[0.9, 0.8], [0.8, 0.0]]
    m = max_weight_assignment(w)
    assert m == [(0, 1), (1, 0)]
    assert matching_weight(w, m) == pytest.approx(1.6)


def test_distance_breaks_weight_ties():
    w = [[1.0, 1.0]]
    assert max_weight_assignment(w, [[5, 2]]) == [(0, 1)]
    assert max_weight_assignment(w, [[2, 5]]) == [(0, 0)]


def test_rejects_negative_or_nonfinite():
    with pytest.raises(ValueError):
        max_weight_assignment([[-1.0]])
    with pytest.raises(ValueError):
        max_weight_assignment([[float("nan")]])


def test_empty():
    assert max_weight_assignment([]) == []
    assert max_weight_assignment([[]]) == []


@pytest.mark.parametrize("seed", range(40))
def test_dyadic_matrices_match_brute_force_exactly(seed):
    # dyadic rationals sum exactly in floating point, so equality is meaningful
    rng = random.Random(seed)
    p, r = rng.randint(1, 6), rng.randint(1, 6)
    w = [[rng.randint(0, 16) / 16 for _ in range(r)] for _ in range(p)]
    m = max_weight_assignment(w)
    assert matching_weight(w, m) == brute_force(w)


matrices = st.integers(1, 5).flatmap(lambda p: st.integers(1, 5).flatmap(
    lambda r: st.lists(st.lists(st.floats(0, 1, allow_nan=False), min_size=r, max_size=r),
                       min_size=p, max_size=p)))


@settings(max_examples=150, deadline=None)
@given(matrices)
def test_matching_is_valid_and_optimal(w):
    m = max_weight_assignment(w)
    rows = [i for i, _ in m]
    cols = [j for _, j in m]
    assert rows == sorted(set(rows)) and len(set(cols)) == len(cols)
    assert all(w[i][j] > 0 for i, j in m)
    assert matching_weight(w, m) == pytest.approx(brute_force(w), rel=1e-12, abs=1e-12)
