import pytest

from sparsemimo.coarray import (LagProfile, difference_coarray, holes,
                                max_contiguous, sensing_dof, sum_coarray)
from sparsemimo.geometry import (LayoutError, make_compact, make_coprime,
                                 make_mra, make_nested, make_usa)


def test_compact_difference_profile():
    prof = difference_coarray(make_compact(4))
    assert prof.lags == (0, 1, 2, 3)
    # ordered pairs with p_i >= p_j: lag l realized m - l times, lag 0 m times
    assert prof.weights == (4, 3, 2, 1)


def test_weights_sum_is_m_squared():
    for lay in (make_compact(6), make_nested(3, 3), make_coprime(4, 3),
                make_mra(8)):
        diff = difference_coarray(lay)
        summ = sum_coarray(lay)
        m = lay.m
        # one-sided differences: m*(m+1)/2 ordered pairs with p_i >= p_j
        assert sum(diff.weights) == m * (m + 1) // 2
        assert sum(summ.weights) == m * m


def test_mra6_hole_free_to_13():
    prof = difference_coarray(make_mra(6))
    assert max_contiguous(prof) == 13
    assert holes(prof) == []


def test_nested_extent_closed_form():
    for m_in in range(1, 11):
        for m_ou in range(1, 11):
            if m_in + m_ou < 2:
                continue
            lay = make_nested(m_in, m_ou)
            assert max_contiguous(difference_coarray(lay)) == \
                m_ou * (m_in + 1) - 1


def test_coprime_hole():
    prof = difference_coarray(make_coprime(4, 3))
    assert 7 in holes(prof)
    assert max_contiguous(prof) == 6


def test_nested_sensing_dof_quadratic():
    # 16 physical elements, one-sided virtual extent 71 >= 16^2 / 4
    assert sensing_dof(make_nested(8, 8)) == 71
    assert sensing_dof(make_nested(8, 8)) >= 16 ** 2 // 4


def test_sum_coarray_compact():
    prof = sum_coarray(make_compact(3))
    assert prof.lags == (0, 1, 2, 3, 4)
    assert prof.weights == (1, 2, 3, 2, 1)


def test_fractional_layout_rejected():
    with pytest.raises(LayoutError):
        difference_coarray(make_usa(8, 4.1))


def test_lag_profile_validation():
    with pytest.raises(ValueError):
        LagProfile((1, 2), (1, 1), 2)       # lag 0 missing
    with pytest.raises(ValueError):
        LagProfile((0, 2, 1), (1, 1, 1), 2)  # not increasing
    prof = difference_coarray(make_compact(3))
    assert prof.weight_of(1) == 2
    assert prof.weight_of(99) == 0


def test_profile_csv():
    text = difference_coarray(make_compact(3)).to_csv()
    assert text.splitlines()[0] == "lag,weight"
    assert text.splitlines()[1] == "0,3"
