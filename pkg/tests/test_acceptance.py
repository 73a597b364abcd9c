"""Acceptance suite: one test per headline property, each at its stated tolerance.

Every test records a ``PASS``/``FAIL`` line in ``RESULTS``; ``conftest.py``
prints them at the end of the run.
"""
import math
import time
import timeit

import numpy as np

from ansx.abs_core import BinaryProb, abs_decode
from ansx.analysis import (binary_entropy, fractional_log, hamming74_residual, measure_digit_bias,
                           rate_loss, renorm_split_probability, scd_width_experiment,
                           state_distribution)
from ansx.ans_tables import build_tables, quantize, quantize_even
from ansx.container import Container
from ansx.errors import AnsError
from ansx.fec.limits import pd0, thresholds, drop_root_v, solve_u
from ansx.fec.pipeline import PipelineConfig, run_pipeline
from ansx.hardening import BitTable, MaskList, mask_width
from ansx.stream_codec import compress, decode_message, decode_stream, encode_stream

RESULTS: list[str] = []
SKEWED4 = [0.55, 0.25, 0.13, 0.07]


def record(name: str, ok: bool, detail: str) -> None:
    RESULTS.append(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    assert ok, detail


def test_abs_table():
    q = BinaryProb.from_float(0.3)
    # column x of the worked q = 0.3 table: x_0, or x_1 where the symbol is 1
    x0 = [None, 0, 1, None, 2, 3, None, 4, 5, 6, None, 7, 8, None, 9, 10, None, 11, 12]
    x1 = [0, None, None, 1, None, None, 2, None, None, None, 3, None, None, 4, None, None, 5, None, None]
    want = [(0, a) if a is not None else (1, b) for a, b in zip(x0, x1)]
    got = [tuple(int(v) for v in abs_decode(x, q)) for x in range(19)]
    matched = sum(g == w for g, w in zip(got, want))
    seconds = min(timeit.repeat(lambda: [abs_decode(x, q) for x in range(19)], number=1, repeat=20))
    record("ABS table", matched == 19 and seconds < 1e-3,
           f"{matched}/19 columns match, {seconds * 1e6:.0f} us")


def _grid():
    for b in (2, 4, 16):
        for L in range(1, 15):
            l = b**L
            if 2**6 <= l <= 2**14:
                yield b, l


def _model(b, l, n, seed):
    return quantize(list(np.random.default_rng(seed).dirichlet(np.ones(n))), b, l)


def test_bijection_grid():
    t0 = time.perf_counter()
    points = bad = 0
    for b, l in _grid():
        for n in (2, 3, 8, 27):
            for init in ("precise", "scd"):
                for seed in range(5):
                    t = build_tables(_model(b, l, n, seed), init, seed)
                    x = np.arange(l, b * l)
                    # encode(decode(x)) over every state of I
                    bad += int(np.count_nonzero(t.enc[t.start[t.dec_sym] + t.dec_xs] != x))
                    # decode(encode(s, x_s)) over every pair with x_s in [l_s, b l_s)
                    counts = np.asarray(t.model.counts)
                    s = np.repeat(np.arange(n), (b - 1) * counts)
                    xs = np.concatenate([np.arange(c, b * c) for c in counts])
                    back = t.enc[t.start[s] + xs] - l
                    bad += int(np.count_nonzero((t.dec_sym[back] != s) | (t.dec_xs[back] != xs)))
                    points += 1
    seconds = time.perf_counter() - t0
    record("ABS/ANS bijection", bad == 0 and seconds < 60,
           f"{points} tables, {bad} mismatches, {seconds:.1f} s")


def test_precise_bound_grid():
    violations = checked = 0
    for b, l in _grid():
        for n in (2, 3, 8, 27):
            for seed in range(5):
                t = build_tables(_model(b, l, n, seed), "precise")
                counts = np.asarray(t.model.counts)
                x = np.arange(l, b * l)[:, None]
                scaled = t.symbol_counters() * l - x * counts[None, :]  # l (x_s - x q_s)
                violations += int(np.count_nonzero((scaled <= -l) | (scaled > (n - 1) * l)))
                checked += scaled.size
    record("Precise-init bound", violations == 0, f"{violations} violations in {checked} positions")


def test_rate():
    steps = 10**7
    scd = rate_loss(build_tables(quantize(SKEWED4, 2, 1024), "scd", 1), steps=steps, seed=2)
    precise = rate_loss(build_tables(quantize([0.7, 0.3], 2, 1 << 12), "precise"), steps=steps, seed=3)
    record("Rate", scd.measured <= 1e-3 and precise.measured <= 1e-4,
           f"ScD l/n=256 {scd.measured:.2e} (raw {scd.measured_raw:.2e}), "
           f"precise l=2^12 n=2 {precise.measured:.2e} (raw {precise.measured_raw:.2e}) bits/symbol")


def test_state_law():
    t = build_tables(quantize(SKEWED4, 2, 4096), "precise")
    hist = state_distribution(t, steps=10**7, seed=11)
    tvd = hist.tvd()
    splits = [renorm_split_probability(t, s, hist) for s in range(4)]
    # a power-of-two q_s never splits: sigma is zero and the match must be exact
    z = [abs(r.empirical - fractional_log(t, s)) / r.sigma if r.sigma
         else (0.0 if r.empirical == fractional_log(t, s) else math.inf)
         for s, r in enumerate(splits)]
    record("State law", tvd < 0.02 and max(z) <= 3,
           f"TVD {tvd:.4f}; split deviations {', '.join(f'{v:.2f}' for v in z)} sigma")


def test_scd_width():
    rep = scd_width_experiment(quantize(SKEWED4, 2, 4096), range(1000))
    ratio = rep.std_state / rep.predicted
    record("ScD width", bool(np.all((ratio > 0.5) & (ratio < 2))),
           "std(x - x_s/q_s) / predicted = " + ", ".join(f"{v:.2f}" for v in ratio)
           + "; std(x_s - x q_s) = " + ", ".join(f"{v:.2f}" for v in rep.std_counter)
           + " vs predicted " + ", ".join(f"{v:.2f}" for v in rep.predicted))


def test_hardening():
    t = build_tables(quantize_even([0.45, 0.25, 0.15, 0.1, 0.05], 2, 1024), "scd", 3)
    w = mask_width(t)
    rng = np.random.default_rng(4)
    failures, length_changes, messages = 0, 0, 10**5
    for i in range(messages):
        kind = i % 4
        msg = rng.choice(5, int(rng.integers(0, 40)), p=t.model.probs)
        masks = MaskList.from_seed(i, 7, w) if kind in (1, 3) else None
        table = BitTable.from_seed(32, i) if kind in (2, 3) else None
        enc = encode_stream(msg, t, masks=masks, bit_table=table)
        out = decode_stream(enc.final_x, enc.digits, len(msg), t, masks=masks,
                            bit_table=enc.bit_table, expected_bit_table=table)
        failures += not np.array_equal(out, msg)
        if kind == 1:
            length_changes += len(enc.digits) != len(encode_stream(msg, t).digits)
    bias_t = build_tables(quantize([0.3, 0.2, 0.2, 0.1, 0.1, 0.05, 0.03, 0.02], 2, 256), "precise")
    plain = measure_digit_bias(bias_t, 2 * 10**6, seed=1)
    masked = measure_digit_bias(bias_t, 2 * 10**6, seed=1,
                                masks=MaskList.alternating(mask_width(bias_t)).masks)
    ok = failures == 0 and length_changes == 0 and abs(masked.measured) < plain.measured
    record("Hardening", ok,
           f"{failures} round-trip failures in {messages} messages, {length_changes} length changes, "
           f"digit-0 excess {masked.measured:.2e} masked vs {plain.measured:.2e} plain")


def test_thresholds():
    h = binary_entropy(0.01)
    shannon = h / (1 - h)
    from_pd0 = -math.log2(1 - pd0(0.01))
    # both agree to three significant digits and round to the published 0.088
    same_3sf = f"{from_pd0:.3g}" == f"{shannon:.3g}" and round(from_pd0, 3) == 0.088
    grid = np.linspace(0.001, 0.3, 60)
    ordered = all(lim.pd0 <= lim.pd1 <= lim.pd2 for lim in map(thresholds, grid))
    v = drop_root_v(0.01, thresholds(0.01).pd2)
    u = solve_u(0.01, thresholds(0.01).pd2)
    pbs = np.linspace(0.002, 0.2, 300)
    excess = [thresholds(p).overhead()[2] / thresholds(p).overhead()[1] - 1 for p in pbs]
    i = int(np.argmax(excess))
    ok = (same_3sf and ordered and abs(v + 0.5) <= 1e-9 and abs(u - v - 1) <= 1e-9
          and abs(excess[i] - 0.131) <= 0.02 and 0.02 <= pbs[i] <= 0.045)
    record("Thresholds", ok,
           f"-lg(1-pd0) {from_pd0:.5f} vs h/(1-h) {shannon:.5f}; ordered {ordered}; "
           f"v+1/2 {v + 0.5:.1e}; u-v-1 {u - v - 1:.1e}; max excess {excess[i]:.2%} at p_b {pbs[i]:.3f}")


def test_fec_end_to_end():
    t0 = time.perf_counter()
    rep = run_pipeline(PipelineConfig(p_b=0.01), 200)
    seconds = time.perf_counter() - t0
    s = rep.summary()
    ok = (s["success_rate"] >= 0.95 and s["silent_wrong"] == 0
          and s["median_nodes_per_step"] <= 4 and seconds < 300)
    record("FEC end-to-end", ok,
           f"success {s['success_rate']:.1%} ({s['budget_exhausted']} budget, {s['header_lost']} header, "
           f"{s['front_lost']} front), {s['silent_wrong']} silent wrong, "
           f"median {s['median_nodes_per_step']:.2f} nodes/step, {seconds:.0f} s")


def test_hamming_baseline():
    p = 0.01
    tail = sum(math.comb(7, k) * p**k * (1 - p) ** (7 - k) for k in range(2, 8))
    per_kb = 8192 * hamming74_residual(p)
    ok = abs(hamming74_residual(p) - tail) < 1e-15 and 1.6 <= per_kb <= 160
    record("Hamming(7,4) baseline", ok, f"{per_kb:.1f} per transmitted kilobyte (reported figure 16)")


def test_corruption_detection():
    t = build_tables(quantize_even([0.45, 0.25, 0.15, 0.1, 0.05], 2, 4096), "scd", 5)
    rng = np.random.default_rng(6)
    msg = rng.choice(5, 2000, p=t.model.probs)
    container = Container.from_bytes(compress(msg, t, bit_table_len=32).to_bytes())
    digits = container.payload.digits
    caught, trials = 0, 10**4
    for pos in rng.integers(0, digits.size, trials):
        bad = digits.copy()
        bad[pos] ^= 1
        container.payload.digits = bad
        try:
            decode_message(container, t)
        except AnsError:
            caught += 1
    container.payload.digits = digits
    record("Corruption detection", caught >= 0.99 * trials, f"{caught}/{trials} flips raise an error")

