"""Correction of forbidden-symbol frames by best-first tree search.

Every decoder step is a node storing its parent, the error pattern applied
to the bits that step read, and the accumulated weight

    w += #{E_i = 1} lg p_b + #{E_i = 0} lg(1 - p_b) - lg(1 - p_d).

Untried patterns ("triangles") wait in a max-weight heap.  Patterns of one
step are tried by increasing Hamming weight, then increasing value.  A node
dies when its state decodes to the forbidden symbol; the search ends at the
first node that consumes every payload bit in ``symbol_count`` steps and
lands on the encoder's initial state and bit table.

With a bit table, two corrections that reach states of the same symbol
whose ``x_s`` differ only in the lowest bit are indistinguishable until the
table slots where they differ are read again ``T`` steps later.  Such a twin
(found within the bits of the current step, or of it and the step before)
is not searched from the branch point: it is recorded on the path and
created, with its own weight, where the first of those slots is read.
Nodes that repeat the full decoder state of an earlier node of at least the
same weight are dropped.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from ..ans_tables import CodecTables
from ..errors import FrontLost, NodeBudgetExhausted, ValidationError
from .frame import FecHeader, parse_frame

WINDOW = 24
MAX_TWIN_FLIPS = 2  # twins needing more extra flips than this are left to the search


class _Found(Exception):
    def __init__(self, leaf: int):
        super().__init__(leaf)
        self.leaf = leaf


@dataclass
class DecodeStats:
    nodes: int = 0  # decoder steps executed, i.e. tree nodes created
    pops: int = 0  # triangles taken from the priority structure
    max_width: int = 0  # most triangles pending at once
    twins: int = 0  # deferred single-flip alternatives materialized
    spilled: int = 0  # triangles moved out of the bounded heap
    deepest: int = 0  # furthest step any node reached
    steps: int = 0  # symbols in the message
    corrected: list = field(default_factory=list)  # payload bit positions flipped

    @property
    def nodes_per_step(self) -> float:
        return self.nodes / self.steps if self.steps else 0.0


@dataclass
class DecodeResult:
    symbols: np.ndarray
    payload: np.ndarray  # corrected payload bits
    stats: DecodeStats
    weight: float = 0.0
    path_weights: list = field(default_factory=list, repr=False)  # per-step increments


def _patterns(j: int) -> list[int]:
    return sorted(range(1 << j), key=lambda e: (bin(e).count("1"), e))


class _Decoder:
    """Shared step machinery for both search strategies."""

    def __init__(self, header: FecHeader, payload: np.ndarray, tables: CodecTables, p_b: float):
        if not 0.0 < p_b < 0.5:
            raise ValidationError("decoder needs an assumed p_b in (0, 0.5)")
        if header.model.b != 2:
            raise ValidationError("correction works on bits; b must be 2")
        if not tables.matches(header.model, header.init, header.seed):
            raise ValidationError("supplied tables do not belong to this header")
        self.header = header
        self.dec_sym, self.dec_xs, self.enc, self.start, self.counts = tables.lists
        self.l = header.model.l
        self.forbidden = header.forbidden
        self.N = header.symbol_count
        self.bits = np.asarray(payload, dtype=np.uint8)
        self.nbits = int(self.bits.shape[0])
        padded = np.concatenate([self.bits, np.zeros(WINDOW, dtype=np.uint8)]).astype(np.int64)
        win = np.zeros(self.nbits + 1, dtype=np.int64)
        for i in range(WINDOW):
            win = (win << 1) | padded[i:i + self.nbits + 1]
        self.window = win.tolist()
        self.T = len(header.bit_table) if header.bit_table is not None else 0
        self.table0 = self._table_int(header.bit_table.bits) if self.T else 0
        if self.T:
            init = np.asarray(header.initial_bit_table().bits)
            self.final_table = self._table_int(np.roll(init, -(self.N % self.T)).tolist())
        else:
            self.final_table = 0
        lp, lq = math.log2(p_b), math.log2(1.0 - p_b)
        self.bonus = -math.log2(1.0 - header.p_d)
        max_j = max(int(k) for k in tables.k[: self.forbidden]) + 1
        if max_j > WINDOW:
            raise ValidationError(f"steps may read {max_j} bits; the decoder handles {WINDOW}")
        self.pats = [_patterns(j) for j in range(max_j + 1)]
        self.index = [{e: k for k, e in enumerate(p)} for p in self.pats]
        self.flip_cost = lq - lp
        self.incs = [[bin(e).count("1") * lp + (j - bin(e).count("1")) * lq + self.bonus
                      for e in self.pats[j]] for j in range(max_j + 1)]
        # pattern bit i (lsb = last bit read) sits at payload offset j-1-i
        self.spread = [[sum(1 << (j - 1 - i) for i in range(j) if e >> i & 1) for e in self.pats[j]]
                       for j in range(max_j + 1)]

    @staticmethod
    def _table_int(bits) -> int:
        return sum(int(b) << i for i, b in enumerate(bits))

    def prepare(self, x: int, table: int, t: int, pos: int):
        """Decode the symbol at ``x`` for step ``t``; None if forbidden or the
        bits run out.  Returns ``(s, xs, table, j)`` with the swap applied."""
        s = self.dec_sym[x - self.l]
        if s == self.forbidden:
            return None
        xs = self.dec_xs[x - self.l]
        if self.T:
            i = (-t - 1) % self.T
            bit = (table >> i) & 1
            table = (table & ~(1 << i)) | ((xs & 1) << i)
            xs = (xs & ~1) | bit
        j = 0
        y = xs
        while y < self.l:
            y <<= 1
            j += 1
        if pos + j > self.nbits:
            return None
        return s, xs, table, j

    def child_state(self, xs: int, j: int, pos: int, e: int) -> int:
        v = (self.window[pos] >> (WINDOW - j)) ^ e if j else 0
        return (xs << j) | v

    def terminal_ok(self, x: int, table: int, pos: int) -> bool:
        return x == self.l and pos == self.nbits and table == self.final_table

    def renorm_bits(self, xs: int) -> int:
        j = 0
        while xs < self.l:
            xs <<= 1
            j += 1
        return j

    def twins(self, x: int, j: int, e: int, t: int, parent) -> list[tuple]:
        """Deferred twins ``(due, table mask, pattern overrides, extra flips)`` of
        the node at step ``t`` reached with pattern ``e`` on ``j`` bits.

        ``parent`` is ``(x, j, e, s, xs, table)`` of the node that read those
        bits, or None at the root: ``x`` its state, ``j`` and ``e`` the bits
        and pattern that produced it, ``s``/``xs``/``table`` after its step.
        """
        i = x - self.l
        s = self.dec_sym[i]
        other = self.enc[self.start[s] + (self.dec_xs[i] ^ 1)]
        diff = x ^ other
        slot = (-t - 1) % self.T
        pc = _popcount
        if not diff >> j:
            e2 = e ^ diff
            return [(t + self.T, 1 << slot, ((t, self.index[j][e2]),), pc(e2) - pc(e))]
        if parent is None or self.T < 2:
            return []
        xP, jG, eG, sP, xsP, tableP = parent
        hi = other >> j
        c = self.counts[sP]
        if hi & 1 != xsP & 1 or not c <= hi < 2 * c or self.renorm_bits(hi) != j:
            return []
        e2 = e ^ (diff & ((1 << j) - 1))
        slotP = (-t) % self.T
        rawP = tableP >> slotP & 1
        out = []
        for raw in (hi, hi ^ 1):
            if not c <= raw < 2 * c:
                continue
            dP = xP ^ self.enc[self.start[sP] + raw]
            if dP >> jG:
                continue
            eG2 = eG ^ dP
            mask, due = 1 << slot, t + self.T
            if raw & 1 != rawP:
                mask, due = mask | 1 << slotP, due - 1
            out.append((due, mask, ((t - 1, self.index[jG][eG2]), (t, self.index[j][e2])),
                        pc(eG2) - pc(eG) + pc(e2) - pc(e)))
        return out


def _popcount(v: int) -> int:
    return bin(v).count("1")


class _Arena:
    # x: state before the step; pend: deferred twins inherited down the path;
    # fix: (step, pattern) pairs overriding ancestors' patterns on a twin node
    __slots__ = ("parent", "sym", "pidx", "j", "pos", "w", "t", "info", "x", "pend", "fix")

    def __init__(self):
        for name in self.__slots__:
            setattr(self, name, [])

    def add(self, parent, sym, pidx, j, pos, w, t, info, x=0, pend=(), fix=()) -> int:
        self.parent.append(parent)
        self.sym.append(sym)
        self.pidx.append(pidx)
        self.j.append(j)
        self.pos.append(pos)
        self.w.append(w)
        self.t.append(t)
        self.info.append(info)
        self.x.append(x)
        self.pend.append(pend)
        self.fix.append(fix)
        return len(self.parent) - 1


def _finish(dec: _Decoder, arena: _Arena, leaf: int, stats: DecodeStats) -> DecodeResult:
    syms, incs, corrected = [], [], []
    override: dict = {}
    node = leaf
    while arena.parent[node] >= 0:
        for step, k_alt in arena.fix[node]:
            override.setdefault(step, k_alt)
        p = arena.parent[node]
        j, k = arena.j[node], override.get(arena.t[node], arena.pidx[node])
        syms.append(arena.sym[node])
        incs.append(dec.incs[j][k])
        spread = dec.spread[j][k]
        base = arena.pos[p]
        while spread:
            low = spread & -spread
            corrected.append(base + low.bit_length() - 1)
            spread ^= low
        node = p
    syms.reverse()
    incs.reverse()
    corrected.sort()
    stats.corrected = corrected
    fixed = dec.bits.copy()
    if corrected:
        fixed[np.asarray(corrected)] ^= 1
    return DecodeResult(np.asarray(syms, dtype=np.int64), fixed, stats, arena.w[leaf], incs)


def tree_decode(frame_bits, p_b: float, *, max_nodes: int | None = None,
                queue_capacity: int = 1 << 16, granularity: str = "forbidden",
                hybrid_width: int | None = None, hybrid_lookback: int = 64,
                tables: CodecTables | None = None) -> DecodeResult:
    """Best-first correction of a received frame (header plus payload bits).

    ``granularity="forbidden"`` follows error-free continuations immediately
    and only branches where a forbidden state appears; ``"step"`` routes every
    step through the heap.  ``hybrid_width`` switches on the front-limiting
    heuristic: when that many triangles are pending, the next
    ``hybrid_lookback`` expansions only take triangles at or before the
    median pending step.
    """
    header, payload = parse_frame(frame_bits)
    return tree_decode_payload(header, payload, p_b, max_nodes=max_nodes,
                               queue_capacity=queue_capacity, granularity=granularity,
                               hybrid_width=hybrid_width, hybrid_lookback=hybrid_lookback,
                               tables=tables)


def tree_decode_payload(header: FecHeader, payload, p_b: float, *, max_nodes: int | None = None,
                        queue_capacity: int = 1 << 16, granularity: str = "forbidden",
                        hybrid_width: int | None = None, hybrid_lookback: int = 64,
                        tables: CodecTables | None = None) -> DecodeResult:
    if granularity not in ("forbidden", "step"):
        raise ValidationError(f"unknown granularity {granularity!r}")
    if queue_capacity < 2:
        raise ValidationError("queue capacity must be at least 2")
    tables = header.tables() if tables is None else tables
    dec = _Decoder(header, payload, tables, p_b)
    N = dec.N
    budget = max_nodes if max_nodes is not None else 64 * max(N, 1)
    stats = DecodeStats(steps=N)
    arena = _Arena()
    eager = granularity == "forbidden"

    if N == 0:
        if not dec.terminal_ok(header.final_state, dec.table0, 0):
            raise NodeBudgetExhausted("empty message does not verify")
        root = arena.add(-1, -1, 0, 0, 0, 0.0, 0, None)
        return _finish(dec, arena, root, stats)

    info = dec.prepare(header.final_state, dec.table0, 0, 0)
    root = arena.add(-1, -1, 0, 0, 0, 0.0, 0, info, header.final_state)
    heap: list = []
    spill: list = []
    spill_best = -math.inf
    seq = 0

    def push(node: int, k: int):
        nonlocal seq, spill_best
        j = arena.info[node][3]
        if k < len(dec.pats[j]):
            heapq.heappush(heap, (-(arena.w[node] + dec.incs[j][k]), seq, node, k))
            seq += 1
            if len(heap) > queue_capacity:
                heap.sort()
                keep = queue_capacity // 2
                moved = heap[keep:]
                del heap[keep:]
                stats.spilled += len(moved)
                spill.extend(moved)
                spill_best = max(spill_best, -moved[0][0])

    seen: dict = {}

    def admit(t: int, x: int, table: int, pos: int, w: float) -> bool:
        """False when an identical decoder state already has a node at least as heavy."""
        if not dec.T:
            return True
        key = (t, x, table, pos)
        if seen.get(key, -math.inf) >= w:
            return False
        seen[key] = w
        return True

    def expand(node: int, k: int) -> int | None:
        """Create the child of ``node`` under pattern ``k``.  Returns the new
        node if it is alive and not final; raises _Found on success.  Twins
        falling due at the child are created and queued here."""
        s, xs, table, j = arena.info[node]
        pos = arena.pos[node]
        e = dec.pats[j][k]
        x = dec.child_state(xs, j, pos, e)
        t = arena.t[node] + 1
        stats.nodes += 1
        if t > stats.deepest:
            stats.deepest = t
        if stats.nodes > budget:
            raise NodeBudgetExhausted(f"node budget {budget} spent after {stats.pops} expansions; "
                                      f"deepest step {stats.deepest} of {N}")
        w = arena.w[node] + dec.incs[j][k]
        pend = arena.pend[node]
        dues = []
        while pend and pend[0][0] == t:
            dues.append(pend[0])
            pend = pend[1:]
        if t == N:
            if dec.terminal_ok(x, table, pos + j):
                raise _Found(arena.add(node, s, k, j, pos + j, w, t, None, x))
            # slots not read again before the end are compared here
            for _, mask, fixes, extra in dues + list(pend):
                if dec.terminal_ok(x, table ^ mask, pos + j):
                    stats.twins += 1
                    raise _Found(arena.add(node, s, k, j, pos + j, w - extra * dec.flip_cost, t,
                                           None, x, fix=fixes))
            return None
        if dec.T:
            if arena.parent[node] >= 0:
                jG = arena.j[node]
                parent = (arena.x[node], jG, dec.pats[jG][arena.pidx[node]], s, xs, table)
            else:
                parent = None
            new = sorted(item for item in dec.twins(x, j, e, t, parent) if item[3] <= MAX_TWIN_FLIPS)
            if new:
                pend = pend + tuple(new)
        for _, mask, fixes, extra in dues:
            tw = w - extra * dec.flip_cost
            twin = dec.prepare(x, table ^ mask, t, pos + j)
            if twin is not None and admit(t, x, table ^ mask, pos + j, tw):
                stats.twins += 1
                twin_node = arena.add(node, s, k, j, pos + j, tw, t, twin, x, pend, fix=fixes)
                if extra <= 0:
                    fresh.append(twin_node)
                else:
                    push(twin_node, 0)
        nxt = dec.prepare(x, table, t, pos + j)
        if nxt is None or not admit(t, x, table, pos + j, w):
            return None
        return arena.add(node, s, k, j, pos + j, w, t, nxt, x, pend)

    fresh: list = []  # twins created but not yet grown

    def grow(node: int, k: int):
        child = expand(node, k)
        if not eager:
            if child is not None:
                push(child, 0)
            while fresh:
                push(fresh.pop(), 0)
            return
        # a twin at least as heavy as the path it splits from is grown as
        # eagerly; left queued it would wait behind that path's descendants
        while True:
            while child is not None:
                push(child, 1)
                child = expand(child, 0)
            if not fresh:
                return
            child = fresh.pop()

    forced, boundary, cooldown = 0, 0, 0
    try:
        if info is not None:
            if eager:
                push(root, 1)
                grow(root, 0)
            else:
                push(root, 0)
        while True:
            if spill and (not heap or -heap[0][0] < spill_best):
                heap.extend(spill)
                heapq.heapify(heap)
                spill.clear()
                spill_best = -math.inf
            if not heap:
                raise NodeBudgetExhausted("every candidate correction died")
            width = len(heap) + len(spill)
            stats.max_width = max(stats.max_width, width)
            if hybrid_width is not None and not forced and cooldown <= 0 and width > hybrid_width:
                steps_pending = sorted(arena.t[item[2]] for item in heap)
                boundary = steps_pending[len(steps_pending) // 2]
                forced, cooldown = hybrid_lookback, 2 * hybrid_lookback
            item = None
            if forced:
                forced -= 1
                eligible = [i for i, it in enumerate(heap) if arena.t[it[2]] <= boundary]
                if eligible:
                    best = min(eligible, key=lambda i: heap[i][:2])
                    item = heap[best]
                    heap[best] = heap[-1]
                    heap.pop()
                    heapq.heapify(heap)
            if item is None:
                item = heapq.heappop(heap)
            cooldown -= 1
            stats.pops += 1
            _, _, node, k = item
            push(node, k + 1)
            grow(node, k)
    except _Found as done:
        return _finish(dec, arena, done.leaf, stats)


def front_decode(frame_bits, p_b: float, M: int, *, max_nodes: int | None = None,
                 tables: CodecTables | None = None) -> DecodeResult:
    """Keep, step by step, the ``M`` surviving corrections with the fewest
    flipped bits (ties: smaller flip set read as a binary number)."""
    header, payload = parse_frame(frame_bits)
    return front_decode_payload(header, payload, p_b, M, max_nodes=max_nodes, tables=tables)


def front_decode_payload(header: FecHeader, payload, p_b: float, M: int, *,
                         max_nodes: int | None = None,
                         tables: CodecTables | None = None) -> DecodeResult:
    if M < 1:
        raise ValidationError("front width M must be at least 1")
    tables = header.tables() if tables is None else tables
    dec = _Decoder(header, payload, tables, p_b)
    N = dec.N
    budget = max_nodes if max_nodes is not None else 1 << 62
    stats = DecodeStats(steps=N)
    arena = _Arena()
    info = dec.prepare(header.final_state, dec.table0, 0, 0) if N else None
    root = arena.add(-1, -1, 0, 0, 0, 0.0, 0, info)
    if N == 0:
        if dec.terminal_ok(header.final_state, dec.table0, 0):
            return _finish(dec, arena, root, stats)
        raise FrontLost("empty message does not verify")
    if info is None:
        raise FrontLost("initial state is already forbidden")
    front = [(0, 0, root)]
    for t in range(1, N + 1):
        best: dict = {}
        for ncorr, flips, node in front:
            s, xs, table, j = arena.info[node]
            pos = arena.pos[node]
            for k, e in enumerate(dec.pats[j]):
                stats.nodes += 1
                if stats.nodes > budget:
                    raise NodeBudgetExhausted(f"node budget {budget} spent at step {t}")
                x = dec.child_state(xs, j, pos, e)
                if t == N:
                    if not dec.terminal_ok(x, table, pos + j):
                        continue
                    nxt = None
                else:
                    nxt = dec.prepare(x, table, t, pos + j)
                    if nxt is None:
                        continue
                key = (ncorr + bin(e).count("1"), flips | (dec.spread[j][k] << pos))
                ident = (x, table, pos + j)
                if ident not in best or key < best[ident][0]:
                    best[ident] = (key, node, s, k, j, pos + j, nxt)
        if not best:
            raise FrontLost(f"all {len(front)} candidates died at step {t}")
        ranked = sorted(best.values(), key=lambda v: v[0])[:M]
        front = []
        for key, node, s, k, j, pos, nxt in ranked:
            w = arena.w[node] + dec.incs[j][k]
            child = arena.add(node, s, k, j, pos, w, t, nxt)
            front.append((key[0], key[1], child))
        stats.max_width = max(stats.max_width, len(front))
    return _finish(dec, arena, front[0][2], stats)
