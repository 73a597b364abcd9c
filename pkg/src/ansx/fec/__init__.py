"""Forbidden-symbol forward error correction."""
from .channel import ChannelSpec, bsc_corrupt
from .frame import FecFrame, FecHeader, fec_encode, parse_frame
from .limits import (Thresholds, drop_root_v, expected_tree_width_finite, ideal_block_lengths,
                     pd2_single_block, solve_u, thresholds)
from .model import FecModel, rescale_with_forbidden, spread_uniform
from .pipeline import PipelineConfig, PipelineReport, run_pipeline
from .tree import (DecodeResult, DecodeStats, front_decode, front_decode_payload, tree_decode,
                   tree_decode_payload)

__all__ = [
    "ChannelSpec", "bsc_corrupt", "FecFrame", "FecHeader", "fec_encode", "parse_frame",
    "Thresholds", "drop_root_v", "expected_tree_width_finite", "ideal_block_lengths",
    "pd2_single_block", "solve_u", "thresholds", "FecModel", "rescale_with_forbidden",
    "spread_uniform", "PipelineConfig", "PipelineReport", "run_pipeline",
    "DecodeResult", "DecodeStats", "front_decode", "front_decode_payload", "tree_decode",
    "tree_decode_payload",
]
