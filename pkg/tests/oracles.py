"""Slow, obviously-correct reference implementations used as test oracles."""
from __future__ import annotations

import math
from fractions import Fraction

M64 = (1 << 64) - 1


def splitmix(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & M64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M64
    return state, z ^ (z >> 31)


def precise_order(counts, b):
    """Sort every ideal position i/q_s = i*l/l_s (i >= 1) and take the first (b-1)l."""
    l = sum(counts)
    keys = [(Fraction(i * l, c), s) for s, c in enumerate(counts) for i in range(1, (b - 1) * l + 1)]
    keys.sort()
    return [s for _, s in keys[: (b - 1) * l]]


def scd_order(counts, b, seed):
    """Swap-with-last draws, written from the prose description."""
    symbols = [s for s, c in enumerate(counts) for _ in range((b - 1) * c)]
    m = len(symbols)
    state = seed & M64
    out = []
    while m:
        state, v = splitmix(state)
        i = 1 + v % m  # 1-based slot
        out.append(symbols[i - 1])
        symbols[i - 1] = symbols[m - 1]
        m -= 1
    return out


def table_from_order(order, counts, l):
    """D[x] for x = l.. as (s, x_s), x_s counting from l_s."""
    nxt = list(counts)
    out = []
    for s in order:
        out.append((s, nxt[s]))
        nxt[s] += 1
    return out


def stream_encode(symbols, D, counts, b, l):
    """Reference stream encoder: backward, LSB-first, reversed at the end."""
    C = {v: x for x, v in enumerate(D, start=l)}
    x, out = l, []
    for s in reversed(list(symbols)):
        while x >= b * counts[s]:
            out.append(x % b)
            x //= b
        x = C[(s, x)]
    return x, out[::-1]


def stream_decode(x, digits, count, D, b, l):
    out, pos = [], 0
    for _ in range(count):
        s, x = D[x - l]
        while x < l:
            x = x * b + digits[pos]
            pos += 1
        out.append(s)
    return out, x, pos


def hypergeom_enum(N, M, L):
    """P(K) by listing every M-subset of N items with L marked."""
    from itertools import combinations
    items = [1] * L + [0] * (N - L)
    tally = [0] * (min(M, L) + 1)
    total = 0
    for sub in combinations(range(N), M):
        tally[sum(items[i] for i in sub)] += 1
        total += 1
    return [t / total for t in tally]


def binom_tail(n, k, p):
    """P(Bin(n, p) >= k)."""
    return math.fsum(math.comb(n, i) * p**i * (1 - p) ** (n - i) for i in range(k, n + 1))
