"""Compiled inner loops.  Python-level semantics live in the public modules;
these mirror them step for step and are cross-checked in the tests."""
import numpy as np
from numba import njit

OK = 0
ERR_OUT_OF_DIGITS = 1

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


@njit(cache=True)
def scd_order(counts, b, seed):
    """Symbol assigned to each x in l..bl-1 by swap-with-last extraction."""
    total = 0
    for c in counts:
        total += c
    m = (b - 1) * total
    symbols = np.empty(m, dtype=np.int32)
    pos = 0
    for s in range(counts.shape[0]):
        for _ in range((b - 1) * counts[s]):
            symbols[pos] = s
            pos += 1
    order = np.empty(m, dtype=np.int32)
    state = np.uint64(seed)
    s30 = np.uint64(30)
    s27 = np.uint64(27)
    s31 = np.uint64(31)
    for t in range(order.shape[0]):
        state = state + _GAMMA
        z = state
        z = (z ^ (z >> s30)) * _MIX1
        z = (z ^ (z >> s27)) * _MIX2
        z = z ^ (z >> s31)
        i = np.int64(z % np.uint64(m))
        order[t] = symbols[i]
        symbols[i] = symbols[m - 1]
        m -= 1
    return order


@njit(cache=True)
def encode(symbols, enc, start, counts, r, l, x, masks, table):
    """Encode ``symbols`` back to front.

    Returns ``(x_final, digits)`` with digits in emission order (least
    significant first within a step).  ``masks``/``table`` may be empty.
    ``table`` is modified in place.
    """
    n_masks = masks.shape[0]
    T = table.shape[0]
    N = symbols.shape[0]
    maxk = 1
    for s in range(counts.shape[0]):
        k = 0
        while (counts[s] << (r * k)) < l:
            k += 1
        if k > maxk:
            maxk = k
    digits = np.empty(N * maxk, dtype=np.uint32)
    bmask = (1 << r) - 1
    pos = 0
    for t in range(N):
        s = symbols[N - 1 - t]
        upper = counts[s] << r
        y = x
        j = 0
        while y >= upper:
            y >>= r
            j += 1
        block = x - (y << (r * j))
        if n_masks > 0:
            block ^= masks[t % n_masks] & ((1 << (r * j)) - 1)
        for _ in range(j):
            digits[pos] = block & bmask
            block >>= r
            pos += 1
        if T > 0:
            i = t % T
            bit = table[i]
            table[i] = y & 1
            y = (y & ~1) | bit
        x = enc[start[s] + y]
    return x, digits[:pos]


@njit(cache=True)
def decode(x, digits, count, dec_sym, dec_xs, r, l, masks, table):
    """Decode ``count`` symbols reading ``digits`` front to back.

    ``table`` must be the rotated table as stored; it is updated in place.
    Returns ``(symbols, x, pos, status)``.
    """
    out = np.empty(count, dtype=np.int32)
    n_masks = masks.shape[0]
    T = table.shape[0]
    nd = digits.shape[0]
    pos = 0
    tpos = 0
    for t in range(count):
        s = dec_sym[x - l]
        xs = dec_xs[x - l]
        out[t] = s
        if T > 0:
            tpos -= 1
            if tpos < 0:
                tpos += T
            bit = table[tpos]
            table[tpos] = xs & 1
            xs = (xs & ~1) | bit
        j = 0
        y = xs
        while y < l:
            y <<= r
            j += 1
        if pos + j > nd:
            return out[:t], x, pos, ERR_OUT_OF_DIGITS
        v = 0
        for i in range(j):
            v = (v << r) | digits[pos + i]
        pos += j
        if n_masks > 0:
            v ^= masks[(count - 1 - t) % n_masks] & ((1 << (r * j)) - 1)
        x = (xs << (r * j)) | v
    return out, x, pos, OK


@njit(cache=True)
def simulate(symbols, enc, start, counts, r, l, x, masks, mask_offset, hist, stats):
    """Run the encoder's state chain forward without storing digits.

    ``hist[x - l]`` counts the state seen before each step.  ``stats`` gets
    [steps, steps with a transfer, last digit zero, total digits].
    Returns the final state.
    """
    n_masks = masks.shape[0]
    bmask = (1 << r) - 1
    for t in range(symbols.shape[0]):
        s = symbols[t]
        hist[x - l] += 1
        upper = counts[s] << r
        y = x
        j = 0
        while y >= upper:
            y >>= r
            j += 1
        if j > 0:
            block = x - (y << (r * j))
            if n_masks > 0:
                block ^= masks[(mask_offset + t) % n_masks] & ((1 << (r * j)) - 1)
            # last digit moved out during encoding is the most significant one
            if (block >> (r * (j - 1))) & bmask == 0:
                stats[2] += 1
            stats[1] += 1
        stats[0] += 1
        stats[3] += j
        x = enc[start[s] + y]
    return x


@njit(cache=True)
def splitmix_stream(seed, count):
    """``count`` consecutive SplitMix64 outputs starting from ``seed``."""
    out = np.empty(count, dtype=np.uint64)
    state = np.uint64(seed)
    s30 = np.uint64(30)
    s27 = np.uint64(27)
    s31 = np.uint64(31)
    for i in range(count):
        state = state + _GAMMA
        z = state
        z = (z ^ (z >> s30)) * _MIX1
        z = (z ^ (z >> s27)) * _MIX2
        out[i] = z ^ (z >> s31)
    return out
