import math

import numpy as np
import pytest

from polarescape.design import (
    CodeSelection,
    SubchannelTable,
    capacity_split,
    enumerate_subchannels,
    select_information_set,
    unpolarized_fraction,
)
from polarescape.errors import BudgetExceeded, DomainError
from polarescape.exact import exact_pn
from polarescape.maps import TargetInterval, apply_word, word_from_index

from oracles import all_values


def test_small_table():
    t = enumerate_subchannels(0.5, 1)
    assert t.values.tolist() == [0.75, 0.25]
    assert enumerate_subchannels(0.3, 0).values.tolist() == [0.3]


@pytest.mark.parametrize("z, n", [(0.5, 3), (0.11, 6), (0.8, 9)])
def test_table_follows_index_convention(z, n):
    t = enumerate_subchannels(z, n)
    for i in range(2**n):
        assert t.values[i] == apply_word(word_from_index(i, n), z)


@pytest.mark.parametrize("n", [5, 12])
def test_table_matches_oracle(n):
    assert enumerate_subchannels(0.37, n).values.tolist() == all_values(0.37, n)


@pytest.mark.parametrize("z", [0.1, 0.3, 0.5, 0.9])
def test_martingale(z):
    for n in (4, 10, 16):
        v = enumerate_subchannels(z, n).values
        assert abs(math.fsum(v.tolist()) / v.size - z) <= 1e-12
        assert v.min() >= 0.0 and v.max() <= 1.0


def test_table_threads():
    a = enumerate_subchannels(0.42, 18, threads=1).values
    b = enumerate_subchannels(0.42, 18, threads=4).values
    assert np.array_equal(a, b)


def test_table_cap_and_domain():
    with pytest.raises(BudgetExceeded):
        enumerate_subchannels(0.5, 25)
    with pytest.raises(DomainError):
        enumerate_subchannels(1.2, 3)


def test_unpolarized_fraction_equals_exact():
    for n in (0, 5, 16, 20):
        assert unpolarized_fraction(enumerate_subchannels(0.5, n)) == exact_pn(0.5, n)
    t = TargetInterval(0.1, 0.4)
    assert unpolarized_fraction(enumerate_subchannels(0.3, 14), t) == exact_pn(0.3, 14, t)


def test_unpolarized_fraction_at_20():
    frac = unpolarized_fraction(enumerate_subchannels(0.5, 20))
    assert frac == pytest.approx(0.01045989990234375, abs=0)
    assert 2.0**-7 < frac < 2.0**-6


def test_unpolarized_fraction_decreases():
    fr = [unpolarized_fraction(enumerate_subchannels(0.5, n)) for n in range(4, 21)]
    assert all(b <= a for a, b in zip(fr, fr[1:]))


def test_capacity_split():
    for n in (3, 11, 17):
        lo, mid, hi = capacity_split(enumerate_subchannels(0.5, n))
        assert lo + mid + hi == 1.0


def test_polarization_toward_half_good():
    prev = 0.0
    for n in (8, 12, 16, 20):
        v = enumerate_subchannels(0.5, n).values
        good = np.count_nonzero(v < 1e-6) / v.size
        middle = np.count_nonzero((v >= 1e-6) & (v <= 0.75)) / v.size
        assert prev <= good < 0.5
        assert 0.5 - good <= middle
        prev = good


def test_rate_selection_examples():
    sel = select_information_set(enumerate_subchannels(0.5, 1), rate=0.5)
    assert sel.info_set.tolist() == [1] and sel.frozen_set.tolist() == [0]
    assert sel.union_bound == 0.25
    t = enumerate_subchannels(0.5, 6)
    assert select_information_set(t, rate=1.0).info_set.tolist() == list(range(64))
    table = enumerate_subchannels(0.5, 10)
    assert select_information_set(table, rate=0.3).union_bound < select_information_set(table, rate=0.5).union_bound


def test_rate_mode_size_and_ties():
    t = SubchannelTable(2, 0.5, np.array([0.3, 0.1, 0.3, 0.2]))
    sel = select_information_set(t, rate=0.75)
    assert sel.info_set.tolist() == [0, 1, 3]
    sel = select_information_set(enumerate_subchannels(0.5, 10), rate=0.3)
    assert len(sel.info_set) == math.floor(0.3 * 1024)


def test_selection_nested():
    t = enumerate_subchannels(0.4, 12)
    prev = set()
    for r in (0.05, 0.2, 0.4, 0.6, 0.9):
        cur = set(select_information_set(t, rate=r).info_set.tolist())
        assert prev <= cur
        prev = cur


def test_selection_picks_smallest():
    t = enumerate_subchannels(0.5, 10)
    sel = select_information_set(t, rate=0.4)
    frozen = t.values[sel.frozen_set]
    assert t.values[sel.info_set].max() <= frozen.min()


def test_error_mode():
    t = enumerate_subchannels(0.5, 10)
    sel = select_information_set(t, block_error=1e-3)
    assert sel.union_bound <= 1e-3
    nxt = np.sort(t.values)[len(sel.info_set)]
    assert sel.union_bound + nxt > 1e-3
    tiny = select_information_set(enumerate_subchannels(0.5, 1), block_error=0.1)
    assert tiny.info_set.size == 0 and tiny.union_bound == 0.0


def test_selection_argument_checks():
    t = enumerate_subchannels(0.5, 3)
    with pytest.raises(DomainError):
        select_information_set(t)
    with pytest.raises(DomainError):
        select_information_set(t, rate=0.5, block_error=0.1)
    with pytest.raises(DomainError):
        select_information_set(t, rate=0.0)


def test_json_and_csv_round_trip():
    t = enumerate_subchannels(0.3, 8)
    sel = select_information_set(t, rate=0.5)
    text = sel.to_json()
    back = CodeSelection.from_json(text)
    assert back.to_json() == text
    assert set(sel.as_dict()) == {"n", "z", "mode", "target", "info_set", "union_bound"}
    csv_text = t.to_csv()
    assert csv_text.splitlines()[0] == "index,bhattacharyya"
    again = SubchannelTable.from_csv(csv_text, 0.3)
    assert np.array_equal(again.values, t.values) and again.to_csv() == csv_text
