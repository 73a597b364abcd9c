import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ansx import prng
from ansx.ans_tables import (SymbolModel, apportion, build_precise, build_scd, build_tables,
                             check_keyed_constraints, dump_tables, load_tables_dump, quantize)
from ansx.errors import AlphabetTooLarge, BadDistribution, ValidationError

from . import oracles


def random_model(rng, b, l, n):
    p = rng.dirichlet(np.ones(n) * 0.7)
    return quantize(list(p), b, l)


def test_quantize_examples():
    assert quantize([0.5, 0.5], 2, 4).counts == (2, 2)
    assert quantize([0.7, 0.3], 2, 16).counts == (11, 5)
    assert quantize([1e-9, 1 - 1e-9], 2, 16).counts == (1, 15)


def test_quantize_minimizes_l1_brute_force():
    p = [0.7, 0.3]
    best = min(((c, 16 - c) for c in range(1, 16)),
               key=lambda v: sum(abs(v[i] - p[i] * 16) for i in range(2)))
    assert quantize(p, 2, 16).counts == best


@given(st.lists(st.floats(0.001, 1.0), min_size=2, max_size=12))
def test_apportion_sums_and_floors(weights):
    counts = apportion(weights, 256)
    assert sum(counts) == 256 and min(counts) >= 1


def test_quantize_errors():
    with pytest.raises(AlphabetTooLarge):
        quantize([0.25] * 4, 2, 2)
    with pytest.raises(BadDistribution):
        quantize([0.0, 1.0], 2, 16)
    with pytest.raises(ValidationError):
        SymbolModel(3, 9, (4, 5))
    with pytest.raises(ValidationError):
        SymbolModel(2, 24, (12, 12))


def test_precise_tiny_example():
    t = build_precise(SymbolModel(2, 2, (1, 1)))
    assert [t.decode(x) for x in (2, 3)] == [(0, 1), (1, 1)]


def test_single_symbol_identity():
    for init in ("precise", "scd"):
        t = build_tables(SymbolModel(4, 16, (16,)), init, 3)
        assert all(t.decode(x) == (0, x) for x in range(16, 64))


@pytest.mark.parametrize("b,l,n", [(2, 64, 3), (4, 256, 8), (2, 1024, 27), (16, 256, 5)])
def test_precise_matches_sorted_positions(rng, b, l, n):
    m = random_model(rng, b, l, n)
    t = build_precise(m)
    assert t.dec_sym.tolist() == oracles.precise_order(m.counts, b)


@pytest.mark.parametrize("seed", [0, 1, 0xDEADBEEF, (1 << 64) - 1])
def test_scd_matches_reference_shuffle(rng, seed):
    m = random_model(rng, 4, 256, 6)
    t = build_scd(m, seed)
    assert t.dec_sym.tolist() == oracles.scd_order(m.counts, 4, seed)


def test_prng_known_value():
    assert prng.prng_next(0)[1] == 0xE220A8397B1DCDAF
    assert prng.prng_next(77) == prng.prng_next(77)
    assert prng.index_in(5, 3) == 3


@given(st.integers(0, (1 << 64) - 1))
def test_prng_matches_oracle(state):
    assert prng.prng_next(state) == oracles.splitmix(state)


def test_scd_deterministic_and_counts():
    m = SymbolModel(2, 1024, (512, 512))
    a, b = build_scd(m, 99), build_scd(m, 99)
    assert dump_tables(a) == dump_tables(b)
    assert np.bincount(a.dec_sym).tolist() == [512, 512]


def check_table_invariants(t):
    m = t.model
    x = np.arange(m.l, m.b * m.l)
    back = t.enc[t.start[t.dec_sym] + t.dec_xs]
    assert np.array_equal(back, x)
    for s, c in enumerate(m.counts):
        xs = t.dec_xs[t.dec_sym == s]
        assert np.array_equal(xs, np.arange(c, m.b * c))  # order preserving, exactly I_s
        k, X = int(t.k[s]), int(t.X[s])
        assert X == c * m.b**k and m.l <= X < m.b * m.l
        assert c <= (m.b * m.l - 1) // m.b**k < m.b * c


@given(st.sampled_from([(2, 64), (2, 512), (4, 256), (16, 256), (8, 512)]),
       st.integers(1, 12), st.integers(0, 2**32), st.sampled_from(["precise", "scd"]))
def test_table_invariants_property(bl, n, seed, init):
    b, l = bl
    m = random_model(np.random.default_rng(seed), b, l, n)
    check_table_invariants(build_tables(m, init, seed))


@given(st.integers(2, 9), st.integers(0, 2**32))
def test_precise_bound_property(n, seed):
    m = random_model(np.random.default_rng(seed), 2, 256, n)
    t = build_precise(m)
    xs = t.symbol_counters()
    x = np.arange(m.l, 2 * m.l)[:, None]
    scaled = xs * m.l - x * np.asarray(m.counts)[None, :]  # l * (x_s - x q_s)
    assert scaled.min() > -m.l and scaled.max() <= (n - 1) * m.l


def test_precise_bound_two_symbols():
    t = build_precise(SymbolModel(2, 16, (11, 5)))
    xs = t.symbol_counters()
    x = np.arange(16, 32)[:, None]
    assert np.all(np.floor(x * np.array([11, 5]) / 16) <= xs)
    assert np.all(xs <= np.floor(x * np.array([11, 5]) / 16) + 1)


def test_dump_roundtrip(rng):
    m = random_model(rng, 4, 1024, 7)
    t = build_scd(m, 5)
    model, s, xs = load_tables_dump(dump_tables(t))
    assert model == m and np.array_equal(s, t.dec_sym) and np.array_equal(xs, t.dec_xs)


def test_keyed_constraints():
    check_keyed_constraints(quantize([0.5, 0.3, 0.2], 2, 1024))
    with pytest.raises(ValidationError):
        check_keyed_constraints(quantize([0.5, 0.5], 4, 1024))
    with pytest.raises(ValidationError):
        check_keyed_constraints(quantize([0.99, 0.01], 2, 1024))  # 10^2 < 1024
    with pytest.raises(ValidationError):
        check_keyed_constraints(quantize([1 / 64] * 64, 2, 4096))  # l = n^2


def test_matches():
    m = SymbolModel(2, 64, (40, 24))
    t = build_scd(m, 3)
    assert t.matches(m, "scd", 3) and not t.matches(m, "scd", 4)
    assert not t.matches(m, "precise", 3)
