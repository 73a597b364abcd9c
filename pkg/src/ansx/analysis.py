"""Statistical formulas for ANS coders and measurements of real coders against them.

The stationary state law used throughout is ``P(x) ~ N / x`` on
``I = {l, ..., b*l - 1}`` with ``1/N = H(b*l - 1) - H(l - 1)`` (harmonic numbers).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import hypergeom

from . import _kernels
from .ans_tables import CodecTables, build_scd
from .errors import BadDistribution, Mismatch, ValidationError

EULER_GAMMA = 0.57721566490153286061
HARMONIC_CROSSOVER = 100
QUADRATIC_KL = 1.0 / (2.0 * math.log(2.0))
_CHUNK = 1 << 20


def _as_probs(p) -> np.ndarray:
    arr = np.asarray(p, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise BadDistribution("probability vector must be one-dimensional and non-empty")
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise BadDistribution("probabilities must be finite and non-negative")
    if abs(arr.sum() - 1.0) > 1e-9:
        raise BadDistribution(f"probabilities sum to {arr.sum()!r}, not 1")
    return arr


def entropy(p) -> float:
    """Shannon entropy in bits, with ``0 lg 0 = 0``."""
    arr = _as_probs(p)
    nz = arr[arr > 0]
    return float(-(nz * np.log2(nz)).sum())


def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


@dataclass(frozen=True)
class KLPenalty:
    exact: float
    quadratic: float


def kl_penalty(p, q) -> KLPenalty:
    """Bits/symbol lost coding a ``p`` source with model ``q``.

    ``quadratic`` is the second-order expansion ``sum (p-q)^2 / p`` scaled by
    ``1/(2 ln 2)`` (about 0.72); terms with ``p_s = 0`` are dropped from it.
    """
    p, q = _as_probs(p), _as_probs(q)
    if p.shape != q.shape:
        raise Mismatch(f"alphabet sizes differ: {p.size} vs {q.size}")
    if np.any((p > 0) & (q <= 0)):
        raise Mismatch("q has zero mass where p does not")
    on = p > 0
    exact = float((p[on] * np.log2(p[on] / q[on])).sum())
    quad = float(QUADRATIC_KL * ((p[on] - q[on]) ** 2 / p[on]).sum())
    return KLPenalty(max(exact, 0.0), quad)


def harmonic(n: int) -> float:
    """``H(n) = sum_{i<=n} 1/i``; exact summation below the crossover, the
    asymptotic series (error O(n**-6)) above it."""
    if n < 0:
        raise ValidationError("harmonic number needs n >= 0")
    if n <= HARMONIC_CROSSOVER:
        return math.fsum(1.0 / i for i in range(1, n + 1))
    inv = 1.0 / n
    inv2 = inv * inv
    return EULER_GAMMA + math.log(n) + 0.5 * inv - inv2 / 12.0 + inv2 * inv2 / 120.0


def state_normalizer(l: int, b: int) -> float:
    """``N`` with ``1/N = H(bl-1) - H(l-1)``."""
    return 1.0 / (harmonic(b * l - 1) - harmonic(l - 1))


def inverse_x_law(l: int, b: int) -> np.ndarray:
    x = np.arange(l, b * l, dtype=np.float64)
    return state_normalizer(l, b) / x


@dataclass
class StateHistogram:
    """Visit counts of the pre-step encoder state, ``counts[x - l]``."""

    counts: np.ndarray
    total: int
    l: int
    b: int
    batches: np.ndarray = field(repr=False)  # per-batch counts, shape (n_batches, states)
    digits: int = 0
    transfers: int = 0
    last_zero: int = 0
    final_x: int = 0

    @property
    def probs(self) -> np.ndarray:
        return self.counts / self.total

    def tvd(self) -> float:
        """Total variation distance to the normalized ``1/x`` law."""
        return float(0.5 * np.abs(self.probs - inverse_x_law(self.l, self.b)).sum())


def _symbol_stream(p: np.ndarray, count: int, rng: np.random.Generator) -> np.ndarray:
    cdf = np.cumsum(p)
    u = rng.random(count)
    return np.minimum(np.searchsorted(cdf, u, side="right"), p.size - 1).astype(np.int64)


def _run_chain(tables: CodecTables, p: np.ndarray, steps: int, seed: int, n_batches: int,
               masks: np.ndarray | None = None, burn_in: int | None = None) -> StateHistogram:
    m = tables.model
    if p.size != m.n:
        raise Mismatch(f"driving distribution has {p.size} symbols, model has {m.n}")
    rng = np.random.default_rng(seed)
    masks = np.zeros(0, dtype=np.int64) if masks is None else np.asarray(masks, dtype=np.int64)
    states = (m.b - 1) * m.l
    batches = np.zeros((n_batches, states), dtype=np.int64)
    stats = np.zeros(4, dtype=np.int64)
    x = m.l
    burn = min(steps // 100, 10_000) if burn_in is None else burn_in
    if burn:
        scratch = np.zeros(states, dtype=np.int64)
        x = _kernels.simulate(_symbol_stream(p, burn, rng), tables.enc, tables.start,
                              tables.counts_arr, m.r, m.l, x, masks, 0, scratch,
                              np.zeros(4, dtype=np.int64))
    bounds = np.linspace(0, steps, n_batches + 1).astype(np.int64)
    t = 0
    for i in range(n_batches):
        todo = int(bounds[i + 1] - bounds[i])
        while todo:
            size = min(todo, _CHUNK)
            x = _kernels.simulate(_symbol_stream(p, size, rng), tables.enc, tables.start,
                                  tables.counts_arr, m.r, m.l, x, masks, t, batches[i], stats)
            t += size
            todo -= size
    return StateHistogram(batches.sum(axis=0), int(steps), m.l, m.b, batches,
                          digits=int(stats[3]), transfers=int(stats[1]),
                          last_zero=int(stats[2]), final_x=int(x))


def state_distribution(tables: CodecTables, p=None, steps: int = 10**6, seed: int = 0,
                       n_batches: int = 20) -> StateHistogram:
    """Simulate the encoder chain driven by i.i.d. symbols from ``p``
    (default: the model's own ``q``)."""
    if steps < 1:
        raise ValidationError("steps must be positive")
    p = tables.model.probs if p is None else _as_probs(p)
    return _run_chain(tables, p, steps, seed, n_batches)


@dataclass(frozen=True)
class SplitReport:
    empirical: float
    sigma: float
    c_s: float
    harmonic_prediction: float


def fractional_log(tables: CodecTables, s: int) -> float:
    """``c_s = log_b(X_s / l)``, the fractional part of ``log_b q_s`` (0 for exact powers)."""
    return math.log(int(tables.X[s]) / tables.model.l, tables.model.b)


def renorm_split_probability(tables: CodecTables, s: int, hist: StateHistogram) -> SplitReport:
    """Empirical ``P(x < X_s)``: how often coding ``s`` moves ``k_s - 1`` digits."""
    cut = int(tables.X[s]) - tables.model.l
    per_batch = hist.batches[:, :cut].sum(axis=1) / hist.batches.sum(axis=1)
    sigma = float(per_batch.std(ddof=1) / math.sqrt(per_batch.size)) if per_batch.size > 1 else math.nan
    l = tables.model.l
    pred = state_normalizer(l, tables.model.b) * (harmonic(int(tables.X[s]) - 1) - harmonic(l - 1))
    return SplitReport(float(hist.counts[:cut].sum() / hist.total), sigma,
                       fractional_log(tables, s), pred)


def stream_impreciseness(tables: CodecTables) -> tuple[np.ndarray, np.ndarray]:
    """``(C_bar, eps_bar)`` of shape ``(states, n)``: the stream coding map from
    each pre-step state and its deviation ``C_bar - x / (q_s b^j)``."""
    m = tables.model
    x = np.arange(m.l, m.b * m.l, dtype=np.int64)
    cbar = np.empty((x.size, m.n), dtype=np.int64)
    eps = np.empty((x.size, m.n), dtype=np.float64)
    for s in range(m.n):
        j = tables.k[s] - (x < tables.X[s])
        y = x >> (m.r * j)
        cbar[:, s] = tables.enc[tables.start[s] + y]
        eps[:, s] = cbar[:, s] - x * m.l / (m.counts[s] * np.power(float(m.b), j))
    return cbar, eps


@dataclass(frozen=True)
class ImprecisenessReport:
    eps: list  # eps[s][x_s - l_s] = C(s, x_s) - x_s / q_s over I_s
    mean_square: float  # < sum_s q_s eps_bar_s(x)^2 > under the 1/x law


def impreciseness(tables: CodecTables) -> ImprecisenessReport:
    m = tables.model
    eps = []
    for s, c in enumerate(m.counts):
        xs = np.arange(c, m.b * c, dtype=np.int64)
        eps.append(tables.enc[tables.start[s] + xs] - xs * (m.l / c))
    _, ebar = stream_impreciseness(tables)
    w = inverse_x_law(m.l, m.b)
    return ImprecisenessReport(eps, float(w @ (ebar**2 @ m.probs)))


@dataclass(frozen=True)
class RateLoss:
    measured: float  # output bits/symbol minus the message's own information under q
    measured_raw: float  # output bits/symbol minus H(q)
    predicted_acc: float  # quadratic accuracy functional averaged over the empirical P(x)
    predicted_scd: float  # log_b(l)/l scaling estimate for random tables
    kl: float  # sum p lg(p/q), already excluded from ``measured``
    bits_per_symbol: float


def scd_rate_estimate(l: int, b: int, n: int) -> float:
    """``log_b(l)/l * (b^2-1)/b^2 * (n-1)/(ln 4 ln b)``, pessimistic by design."""
    return math.log(l, b) / l * (b * b - 1) / (b * b) * (n - 1) / (math.log(4) * math.log(b))


def rate_loss(tables: CodecTables, p=None, steps: int = 10**6, seed: int = 0,
              hist: StateHistogram | None = None) -> RateLoss:
    """Measured and predicted ``Delta H`` for i.i.d. symbols from ``p``.

    The measured figure counts ``lg(x_final / l)`` as output too, and subtracts
    the exact information content of the drawn symbols under ``q`` so the
    result carries no sampling noise from the message itself.
    """
    m = tables.model
    p = m.probs if p is None else _as_probs(p)
    if steps < 1:
        raise ValidationError("steps must be positive")
    rng = np.random.default_rng(seed)
    info = -np.log2(m.probs)
    states = (m.b - 1) * m.l
    h = np.zeros(states, dtype=np.int64)
    stats = np.zeros(4, dtype=np.int64)
    x = m.l
    self_info = 0.0
    empty = np.zeros(0, dtype=np.int64)
    done = 0
    while done < steps:
        size = min(steps - done, _CHUNK)
        sym = _symbol_stream(p, size, rng)
        self_info += math.fsum(np.bincount(sym, minlength=m.n) * info)
        x = _kernels.simulate(sym, tables.enc, tables.start, tables.counts_arr, m.r, m.l, x,
                              empty, 0, h, stats)
        done += size
    bits = stats[3] * m.r + math.log2(x / m.l)
    rate = bits / steps
    if hist is None:
        hist = StateHistogram(h, steps, m.l, m.b, h[None, :])
    cbar, ebar = stream_impreciseness(tables)
    per_state = ((ebar / cbar) ** 2) @ p / math.log(4)
    q_ent = float(-(p * np.log2(m.probs)).sum())
    return RateLoss(measured=rate - self_info / steps,
                    measured_raw=rate - entropy(m.probs),
                    predicted_acc=float(hist.probs @ per_state),
                    predicted_scd=scd_rate_estimate(m.l, m.b, m.n),
                    kl=q_ent - entropy(p),
                    bits_per_symbol=rate)


@dataclass(frozen=True)
class DigitBias:
    measured: float | None  # P(last transferred digit = 0) - 1/b, counted
    from_histogram: float | None  # same, averaged exactly over symbols given P(x)
    predicted: float  # (b-1)/(b^2 ln b) * n/l, an upper-order value
    transfers: int


def digit_bias_bound(l: int, b: int, n: int) -> float:
    return (b - 1) / (b * b * math.log(b)) * n / l


def digit_bias(tables: CodecTables, hist: StateHistogram, p=None) -> DigitBias:
    """Excess probability that the last digit moved out while encoding is 0."""
    m = tables.model
    p = m.probs if p is None else _as_probs(p)
    pred = digit_bias_bound(m.l, m.b, m.n)
    measured = hist.last_zero / hist.transfers - 1 / m.b if hist.transfers else None
    x = np.arange(m.l, m.b * m.l, dtype=np.int64)
    w = hist.probs
    zero = moved = 0.0
    for s in range(m.n):
        j = tables.k[s] - (x < tables.X[s])
        has = j > 0
        msd = (x >> np.maximum(m.r * (j - 1), 0)) & (m.b - 1)
        moved += p[s] * w[has].sum()
        zero += p[s] * w[has & (msd == 0)].sum()
    from_hist = zero / moved - 1 / m.b if moved > 0 else None
    return DigitBias(measured, from_hist, pred, hist.transfers)


def measure_digit_bias(tables: CodecTables, steps: int, seed: int = 0, p=None,
                       masks=None) -> DigitBias:
    """Run the chain (optionally with per-step XOR masks) and report digit bias."""
    m = tables.model
    p = m.probs if p is None else _as_probs(p)
    hist = _run_chain(tables, p, steps, seed, 1, masks=masks)
    bias = digit_bias(tables, hist, p)
    if masks is not None:
        # the histogram formula does not see the masks
        bias = DigitBias(bias.measured, None, bias.predicted, bias.transfers)
    return bias


def effective_symbol_probs(tables: CodecTables) -> np.ndarray:
    """``N * sum {1/x : D_1(x) = s}``: symbol frequencies when decoding random digits."""
    m = tables.model
    w = inverse_x_law(m.l, m.b)
    out = np.bincount(tables.dec_sym, weights=w, minlength=m.n)
    return out / out.sum()


@dataclass(frozen=True)
class HypergeometricWidth:
    pmf: np.ndarray  # pmf[K] for K = 0..min(M, L)
    sigma: float


def scd_width(N: int, M: int, L: int) -> HypergeometricWidth:
    """Drawing ``M`` of ``N`` items, ``L`` of them marked: law of the marked count
    ``K`` and the Gaussian width ``sqrt(M q (1-q) (1 - M/N))``."""
    if not (0 <= L <= N and 0 <= M <= N):
        raise ValidationError("need 0 <= L <= N and 0 <= M <= N")
    K = np.arange(0, min(M, L) + 1)
    # population N with L marked, M drawn
    pmf = hypergeom(N, L, M).pmf(K) if N else np.ones(K.shape)
    q = L / N if N else 0.0
    sigma = math.sqrt(max(M * q * (1 - q) * (1 - M / N), 0.0)) if N else 0.0
    return HypergeometricWidth(pmf, sigma)


@dataclass(frozen=True)
class ScdWidthReport:
    x: int
    std_state: np.ndarray  # std over seeds of x - x_s/q_s, per symbol
    std_counter: np.ndarray  # std over seeds of x_s - x*q_s, per symbol
    predicted: np.ndarray  # sqrt(q~_s (b-1) l / (4 q_s))


def scd_width_experiment(model, seeds: Sequence[int], x: int | None = None) -> ScdWidthReport:
    """Spread of ScD symbol counters across seeds at one state (default the
    middle ``x = l(b+1)/2`` where the predicted width peaks)."""
    b, l = model.b, model.l
    x = l * (b + 1) // 2 if x is None else x
    counts = np.asarray(model.counts, dtype=np.int64)
    q = counts / l
    xs = np.empty((len(seeds), model.n), dtype=np.float64)
    for i, seed in enumerate(seeds):
        t = build_scd(model, seed)
        xs[i] = np.bincount(t.dec_sym[: x - l], minlength=model.n) + counts
    return ScdWidthReport(x, (x - xs / q).std(axis=0, ddof=1), (xs - x * q).std(axis=0, ddof=1),
                          np.sqrt((1 - q) * (b - 1) * l / (4 * q)))


def hamming74_residual(p_b: float) -> float:
    """Probability a Hamming(7,4) block has two or more bit errors."""
    return 1.0 - (1 - p_b) ** 7 - 7 * p_b * (1 - p_b) ** 6
