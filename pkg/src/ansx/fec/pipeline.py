"""Encode, corrupt and decode seeded batches of random messages."""
from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..ans_tables import CodecTables, build_tables
from ..errors import CorruptionError, FrontLost, NodeBudgetExhausted, ValidationError
from .channel import ChannelSpec, bsc_corrupt
from .frame import fec_encode, parse_frame
from .limits import Thresholds, ideal_block_lengths, thresholds
from .model import FecModel, rescale_with_forbidden, spread_uniform
from .tree import front_decode_payload, tree_decode_payload

CHANNEL_SEED_OFFSET = 0x5EED0000


@dataclass(frozen=True)
class PipelineConfig:
    p_b: float = 0.01
    message_bits: int = 10_000
    symbol_bits: int = 4  # message bits packed per coded symbol
    l: int = 1 << 22
    spread: float = 0.3
    pd_factor: float = 1.1  # p_d = pd_factor * p_d^2 unless p_d is given
    p_d: float | None = None
    bit_table_len: int = 32
    table_seed: int = 0
    nodes_per_step: float = 64.0  # node budget per message symbol
    strategy: str = "tree"
    M: int = 256
    decoder_p_b: float | None = None  # channel estimate used in the weights; default p_b

    def __post_init__(self):
        if self.message_bits % self.symbol_bits:
            raise ValidationError("message_bits must be a multiple of symbol_bits")
        if self.strategy not in ("tree", "front"):
            raise ValidationError(f"unknown strategy {self.strategy!r}")

        if self.p_d is None and self.p_b == 0:
            raise ValidationError("p_d = auto needs p_b > 0; give p_d explicitly")

    @property
    def symbols(self) -> int:
        return self.message_bits // self.symbol_bits

    @property
    def assumed_p_b(self) -> float:
        if self.decoder_p_b is not None:
            return self.decoder_p_b
        return self.p_b if self.p_b > 0 else 1e-4


@dataclass
class Design:
    fec_model: FecModel
    limits: Thresholds | None  # None on a noiseless channel
    tables: CodecTables


def design(cfg: PipelineConfig) -> Design:
    """Pick ``p_d`` (explicit, or from the thresholds of the coding model) and
    build the tables."""
    n = 1 << cfg.symbol_bits
    base = spread_uniform(n, cfg.l, cfg.spread)
    lim = None
    if cfg.p_b > 0:
        # message bits are uniform, so every symbol occurs equally often
        lim = thresholds(cfg.p_b, cfg.symbol_bits,
                         ideal_block_lengths(base.probs, frequencies=np.full(n, 1.0 / n)))
    p_d = cfg.p_d if cfg.p_d is not None else cfg.pd_factor * lim.pd2
    fm = rescale_with_forbidden(base, p_d, even=cfg.bit_table_len > 0)
    return Design(fm, lim, build_tables(fm.model, "scd", cfg.table_seed))


def message_symbols(bits: np.ndarray, symbol_bits: int) -> np.ndarray:
    """Group bits (most significant first) into symbols."""
    groups = np.asarray(bits, dtype=np.int64).reshape(-1, symbol_bits)
    return groups @ (1 << np.arange(symbol_bits - 1, -1, -1, dtype=np.int64))


@dataclass
class TrialOutcome:
    trial: int
    status: str  # ok | wrong | budget | header | lost
    channel_flips: int
    nodes_per_step: float = math.inf
    corrected: int = 0
    seconds: float = 0.0

    @property
    def verified(self) -> bool:
        return self.status in ("ok", "wrong")


@dataclass
class PipelineReport:
    config: PipelineConfig
    p_d: float
    limits: Thresholds | None
    outcomes: list = field(default_factory=list)

    def count(self, status: str) -> int:
        return sum(o.status == status for o in self.outcomes)

    @property
    def success_rate(self) -> float:
        return self.count("ok") / len(self.outcomes) if self.outcomes else 0.0

    @property
    def silent_wrong(self) -> int:
        return self.count("wrong")

    @property
    def median_nodes_per_step(self) -> float:
        return float(np.median([o.nodes_per_step for o in self.outcomes])) if self.outcomes else math.inf

    def summary(self) -> dict:
        lim = self.limits
        return {
            "trials": len(self.outcomes),
            "success_rate": self.success_rate,
            "silent_wrong": self.silent_wrong,
            "budget_exhausted": self.count("budget"),
            "header_lost": self.count("header"),
            "front_lost": self.count("lost"),
            "median_nodes_per_step": self.median_nodes_per_step,
            "median_corrected_bits": float(np.median([o.corrected for o in self.outcomes]))
            if self.outcomes else 0.0,
            "channel_flips": sum(o.channel_flips for o in self.outcomes),
            "p_d": self.p_d,
            "pd0": lim.pd0 if lim else None,
            "pd1": lim.pd1 if lim else None,
            "pd2": lim.pd2 if lim else None,
        }


def run_trial(cfg: PipelineConfig, d: Design, trial: int) -> TrialOutcome:
    t0 = time.perf_counter()
    rng = np.random.default_rng(trial)
    bits = rng.integers(0, 2, cfg.message_bits, dtype=np.int64)
    msg = message_symbols(bits, cfg.symbol_bits)
    frame = fec_encode(msg, d.fec_model, seed=cfg.table_seed,
                       bit_table_len=cfg.bit_table_len, tables=d.tables)
    sent = frame.bits()
    received = bsc_corrupt(sent, ChannelSpec(cfg.p_b, CHANNEL_SEED_OFFSET + trial))
    flips = int(np.count_nonzero(sent != received))
    budget = int(cfg.nodes_per_step * cfg.symbols)
    try:
        header, payload = parse_frame(received)
        if cfg.strategy == "tree":
            res = tree_decode_payload(header, payload, cfg.assumed_p_b, max_nodes=budget,
                                      tables=d.tables)
        else:
            res = front_decode_payload(header, payload, cfg.assumed_p_b, cfg.M, max_nodes=budget,
                                       tables=d.tables)
    except (CorruptionError, ValidationError):
        # ValidationError: the header majority-decoded to other parameters
        return TrialOutcome(trial, "header", flips, seconds=time.perf_counter() - t0)
    except NodeBudgetExhausted:
        return TrialOutcome(trial, "budget", flips, seconds=time.perf_counter() - t0)
    except FrontLost:
        return TrialOutcome(trial, "lost", flips, seconds=time.perf_counter() - t0)
    good = np.array_equal(res.symbols, msg)
    return TrialOutcome(trial, "ok" if good else "wrong", flips, res.stats.nodes_per_step,
                        len(res.stats.corrected), time.perf_counter() - t0)


_WORKER: tuple | None = None


def _worker_init(cfg: PipelineConfig) -> None:
    global _WORKER
    _WORKER = (cfg, design(cfg))


def _worker_trial(trial: int) -> TrialOutcome:
    cfg, d = _WORKER
    return run_trial(cfg, d, trial)


def run_pipeline(cfg: PipelineConfig, trials: int, first: int = 0, jobs: int = 1,
                 progress=None) -> PipelineReport:
    """Run trials ``first .. first + trials - 1``; the outcome of each depends
    only on its index, so ``jobs`` changes the speed but not the report."""
    d = design(cfg)
    report = PipelineReport(cfg, d.fec_model.p_d, d.limits)
    indices = range(first, first + trials)
    if jobs <= 1:
        outcomes = (run_trial(cfg, d, t) for t in indices)
        for out in outcomes:
            report.outcomes.append(out)
            if progress is not None:
                progress(out)
        return report
    with ProcessPoolExecutor(jobs, initializer=_worker_init, initargs=(cfg,)) as pool:
        for out in pool.map(_worker_trial, indices):
            report.outcomes.append(out)
            if progress is not None:
                progress(out)
    return report
