import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ansx.abs_core import AbsVariant, BinaryProb, abs_decode, abs_encode
from ansx.errors import ValidationError

Q03 = BinaryProb.from_float(0.3)
# the q = 0.3 worked table: column x gives x_0 or x_1 (None where the symbol differs)
X0 = [None, 0, 1, None, 2, 3, None, 4, 5, 6, None, 7, 8, None, 9, 10, None, 11, 12]
X1 = [0, None, None, 1, None, None, 2, None, None, None, 3, None, None, 4, None, None, 5, None, None]


def test_worked_table_q03():
    for x in range(19):
        s, xs = abs_decode(x, Q03)
        want = (0, X0[x]) if X0[x] is not None else (1, X1[x])
        assert (s, xs) == want, x


@pytest.mark.parametrize("s,xs,x", [(1, 2, 6), (0, 3, 5)])
def test_encode_examples(s, xs, x):
    assert abs_encode(s, xs, Q03) == x


def test_half_is_binary_with_switched_digits():
    half = BinaryProb(1 << 31)
    # ceil((x+1)/2) - ceil(x/2) is 1 exactly for even x: the low digit, inverted
    x = np.arange(0, 4096, dtype=np.uint64)
    s, xs = abs_decode(x, half)
    assert np.array_equal(s, 1 - (x & 1)) and np.array_equal(xs, x >> 1)
    assert abs_decode(7, half) == (0, 3)
    for k in range(11):
        assert abs_encode(0, k, half) == 2 * k + 1


@pytest.mark.parametrize("variant", list(AbsVariant))
def test_bijection_grid(variant):
    x = np.arange(0, (1 << 20) + 1, dtype=np.uint64)
    for i in range(1, 64):
        q = BinaryProb(i << 26)
        s, xs = abs_decode(x, q, variant)
        assert np.array_equal(abs_encode(s, xs, q, variant), x), i


@pytest.mark.parametrize("variant", list(AbsVariant))
@pytest.mark.parametrize("qf", [0.3, 0.01, 0.77])
def test_partition_counts_prior_occurrences(variant, qf):
    q = BinaryProb.from_float(qf)
    x = np.arange(0, 5000, dtype=np.uint64)
    s, xs = abs_decode(x, q, variant)
    ones_before = np.concatenate(([0], np.cumsum(s)[:-1]))
    expect = np.where(s == 1, ones_before, x - ones_before)
    assert np.array_equal(xs, expect)


@pytest.mark.parametrize("variant", list(AbsVariant))
def test_encode_monotone_per_symbol(variant):
    q = BinaryProb.from_float(0.41)
    xs = np.arange(0, 4000, dtype=np.uint64)
    for s in (0, 1):
        assert np.all(np.diff(abs_encode(np.full_like(xs, s), xs, q, variant).astype(np.int64)) > 0)


def test_counter_tracks_xq():
    x = np.arange(0, (1 << 20) + 1, dtype=np.uint64)
    for qf in (0.3, 0.123, 0.9):
        q = BinaryProb.from_float(qf)
        s, xs = abs_decode(x, q)
        ones = np.where(s == 1, xs, x - xs).astype(np.float64)
        assert np.abs(ones - x * q.q).max() < 1


@given(st.integers(0, (1 << 32) - 1), st.integers(1, (1 << 32) - 1),
       st.sampled_from(list(AbsVariant)))
def test_roundtrip_property(x, f, variant):
    q = BinaryProb(f)
    s, xs = abs_decode(x, q, variant)
    assert abs_encode(s, xs, q, variant) == x


@given(st.integers(0, 1 << 24), st.integers(1, (1 << 16) - 1))
def test_ceiling_matches_exact_rationals(x, f):
    q = BinaryProb(f, 16)
    frac = f / (1 << 16)
    s, _ = abs_decode(x, q)
    from fractions import Fraction
    qq = Fraction(f, 1 << 16)
    assert s == math.ceil((x + 1) * qq) - math.ceil(x * qq)
    assert 0 < frac < 1


def test_invalid_probabilities():
    with pytest.raises(ValidationError):
        BinaryProb(0)
    with pytest.raises(ValidationError):
        BinaryProb(1 << 32)
    with pytest.raises(ValidationError):
        abs_decode(1 << 32, Q03)
