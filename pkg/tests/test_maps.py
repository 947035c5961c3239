import itertools
import math
import sys

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from polarescape.errors import BudgetExceeded, DomainError
from polarescape.maps import (
    CANONICAL,
    TargetInterval,
    apply_inverse_word,
    apply_inverse_word_pair,
    apply_word,
    apply_word_pair,
    backward_set,
    forward_pair,
    forward_set,
    index_from_word,
    reach_bounds,
    t_apply,
    t_inverse,
    t_inverse_derivative,
    word_from_index,
)

from oracles import mp_inverse

unit = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)
interior = st.floats(min_value=1e-6, max_value=1 - 1e-6)
words = st.lists(st.integers(0, 1), max_size=64)


@pytest.mark.parametrize(
    "bit, x, expected",
    [(1, 0.5, 0.25), (0, 0.5, 0.75), (1, 1.0, 1.0), (0, 0.0, 0.0), (1, 0.0, 0.0), (0, 1.0, 1.0)],
)
def test_t_apply_values(bit, x, expected):
    assert t_apply(bit, x) == expected


@pytest.mark.parametrize("bit, y, expected", [(1, 0.25, 0.5), (0, 0.75, 0.5), (0, 0.4375, 0.25)])
def test_t_inverse_values(bit, y, expected):
    assert t_inverse(bit, y) == pytest.approx(expected, abs=1e-16)


def test_t_inverse_small_argument_keeps_precision():
    # 1 - sqrt(1 - y) would return 0 here
    y = 1e-20
    assert t_inverse(0, y) == pytest.approx(y / 2, rel=1e-15)


@pytest.mark.parametrize("bit, y, expected", [(1, 0.25, 1.0), (0, 0.75, 1.0), (1, 1.0, 0.5), (0, 0.0, 0.5)])
def test_t_inverse_derivative_values(bit, y, expected):
    assert t_inverse_derivative(bit, y) == expected


@pytest.mark.parametrize("bit, y", [(1, 0.0), (0, 1.0)])
def test_t_inverse_derivative_diverges(bit, y):
    with pytest.raises(DomainError):
        t_inverse_derivative(bit, y)


@given(bit=st.integers(0, 1), y=st.floats(0.01, 0.99))
def test_inverse_derivative_matches_finite_difference(bit, y):
    h = 1e-6
    fd = (t_inverse(bit, y + h) - t_inverse(bit, y - h)) / (2 * h)
    assert t_inverse_derivative(bit, y) == pytest.approx(fd, rel=1e-6)


@pytest.mark.parametrize("bad", [-0.1, 1.5, float("nan")])
def test_out_of_range_rejected(bad):
    with pytest.raises(DomainError):
        t_apply(1, bad)
    with pytest.raises(DomainError):
        t_inverse(0, bad)


def test_bad_bit_rejected():
    with pytest.raises(DomainError):
        t_apply(2, 0.5)


def test_apply_word_examples():
    assert apply_word((1, 0), 0.5) == 0.4375
    assert apply_word((), 0.37) == 0.37
    assert apply_word((1, 1, 1), 0.9) == pytest.approx(0.9**8, rel=1e-15)
    assert apply_inverse_word((1, 0), 0.4375) == pytest.approx(0.5, abs=1e-16)
    assert apply_inverse_word((), 0.123) == 0.123


@pytest.mark.parametrize("m, k", [(1, 3), (5, 10), (12, 40)])
def test_inverse_all_zeros_closed_form(m, k):
    y = 1 - 2.0**-k
    expected = -math.expm1(2.0**-m * math.log(2.0**-k))
    value = apply_inverse_word((0,) * m, y)
    iterated = y
    for _ in range(m):
        iterated = t_inverse(0, iterated)
    assert value == pytest.approx(expected, rel=1e-12)
    assert value == pytest.approx(iterated, rel=1e-12)


@given(unit)
def test_monotone_sandwich(x):
    assert t_apply(1, x) <= x <= t_apply(0, x)
    # strict while (1 - x)**2 is still visible next to 1
    if 0.0 < x < 1.0 - 1e-7:
        assert t_apply(1, x) < x < t_apply(0, x)


@given(unit)
def test_martingale_identity(x):
    mean = 0.5 * t_apply(0, x) + 0.5 * t_apply(1, x)
    assert abs(mean - x) <= 4 * np.spacing(1.0)


@given(words, interior, interior)
def test_order_preservation(word, z1, z2):
    # exact maps are increasing; the float evaluation may tie or swap by rounding only
    lo, hi = sorted((z1, z2))
    assert apply_word(word, lo) <= apply_word(word, hi) + (len(word) + 1) * np.spacing(1.0)


@pytest.mark.parametrize("z", [0.375, 0.40612316651429436])
def test_images_near_one_are_rounded_from_the_complement(z):
    # true images are 1 - 3e-21 and 1 - 5e-24; both round to 1.0
    word = [0, 0, 0, 1, 0, 0, 0, 0, 1, 1, 1]
    with mpmath.workdps(60):
        x = mpmath.mpf(z)
        for b in word:
            x = x * x if b else 2 * x - x * x
        gap = float(1 - x)
    assert apply_word(word, z) == float(x) == 1.0
    assert apply_word_pair(word, z)[1] == pytest.approx(gap, rel=1e-13)


@given(st.lists(st.integers(0, 1), min_size=1, max_size=12), st.floats(0.05, 0.95), st.floats(1e-6, 0.01))
def test_order_preservation_strict_away_from_saturation(word, z, gap):
    a, b = apply_word(word, z), apply_word(word, min(z + gap, 0.99))
    assume(1e-3 < b < 1 - 1e-3)
    assert a < b


@settings(max_examples=500)
@given(st.lists(st.integers(0, 1), min_size=1, max_size=64), st.floats(0.01, 0.99))
def test_round_trip_on_pairs(word, z):
    # carried as (x, 1 - x), the inverse recovers z to n * 4 ulp as long as
    # no intermediate state underflows
    x, c = z, 1.0 - z
    for b in word:
        x, c = forward_pair(b, x, c)
        assume(min(x, c) >= sys.float_info.min)
    back, _ = apply_inverse_word_pair(word, x, c)
    assert abs(back - z) <= len(word) * 4 * np.spacing(z)


@settings(max_examples=300)
@given(st.lists(st.integers(0, 1), min_size=1, max_size=64), st.floats(1e-300, 1.0, exclude_max=True))
def test_scalar_inverse_matches_high_precision(word, y):
    # the inverse contracts, so from a given scalar it is accurate to n * 4 ulp
    got = apply_inverse_word(word, y)
    assert abs(got - mp_inverse(word, y)) <= len(word) * 4 * np.spacing(got)


def test_word_index_convention():
    assert word_from_index(0, 1) == (0,)
    assert word_from_index(1, 1) == (1,)
    assert word_from_index(0b100, 3) == (1, 0, 0)
    for n in range(6):
        for i in range(2**n):
            assert index_from_word(word_from_index(i, n)) == i
    with pytest.raises(DomainError):
        word_from_index(4, 2)


def test_reach_bounds_examples():
    assert reach_bounds(0.5, 1) == (0.25, 0.75)
    assert reach_bounds(0.5, 0) == (0.5, 0.5)
    lo, hi = reach_bounds(0.9, 2)
    assert lo == pytest.approx(0.6561, rel=1e-14)
    assert hi == pytest.approx(0.9999, rel=1e-14)


@pytest.mark.parametrize("x", [0.01, 0.2, 0.5, 0.77, 0.999])
def test_reach_bounds_envelope_exhaustive(x):
    for m in range(13):
        lo, hi = reach_bounds(x, m)
        vals = []
        level = [x]
        for _ in range(m):
            level = [t_apply(b, v) for v in level for b in (0, 1)]
        vals = level
        slack = 4 * np.spacing(1.0)
        assert min(vals) >= lo - slack
        assert max(vals) <= hi + slack


def test_forward_backward_set_examples():
    assert forward_set(0.5, 1).values == [0.25, 0.5, 0.75]
    assert forward_set(0.3, 0).values == [0.3]
    back = backward_set(0.25, 1).values
    assert back == pytest.approx([1 - math.sqrt(0.75), 0.25, 0.5], abs=1e-15)


def test_sets_deduplicate_commuting_prefixes():
    # T1 and T0 both fix 0 and 1, and the level-by-level union repeats z
    s = forward_set(0.5, 4)
    assert len(s.values) == len(set(s.values))
    assert len(s.values) <= 2**5 - 1
    assert forward_set(0.0, 5).values == [0.0]


def test_set_budget():
    with pytest.raises(BudgetExceeded):
        forward_set(0.5, 30)


def test_forward_set_matches_brute_force():
    vals = set()
    for n in range(6):
        for w in itertools.product((0, 1), repeat=n):
            vals.add(apply_word(w, 0.37))
    got = forward_set(0.37, 5).values
    assert len(got) == len(vals)
    assert np.allclose(sorted(vals), got, rtol=0, atol=1e-15)


def test_target_interval():
    assert CANONICAL.consistent and CANONICAL.symmetric
    assert not TargetInterval(0.5, 0.6).consistent
    assert TargetInterval(0.5, 0.5).contains(0.5)
    with pytest.raises(DomainError):
        TargetInterval(0.6, 0.5)
    with pytest.raises(DomainError):
        TargetInterval(0.0, 0.5)
