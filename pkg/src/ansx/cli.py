"""Command-line front end: ``ansx compress|decompress|analyze|fec ...``.

Every command is deterministic given its flags.  Exit status is 0 on
success, 2 for invalid input, 3 when corruption is detected and 4 when a
decoder runs out of its node budget.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import FORMAT_VERSIONS, __version__
from .analysis import (effective_symbol_probs, entropy, fractional_log, rate_loss,
                       renorm_split_probability, state_distribution, digit_bias)
from .ans_tables import (SymbolModel, build_tables, check_keyed_constraints, quantize,
                         quantize_even)
from .container import Container
from .errors import AnsError, ModelMismatch, NoNegativeRoot, ValidationError
from .fec.channel import ChannelSpec, bsc_corrupt
from .fec.frame import fec_encode, pack_bits, parse_frame, unpack_bits
from .fec.limits import drop_root_v, ideal_block_lengths, thresholds
from .fec.model import rescale_with_forbidden, spread_uniform
from .fec.pipeline import PipelineConfig, run_pipeline
from .fec.tree import front_decode_payload, tree_decode_payload
from .hardening import MaskList, mask_width
from .stream_codec import compress, decode_message

REPORT_SCHEMA = 1
DEFAULT_L = 1 << 12
DEFAULT_MASKS = 64


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError(f"{text} is not a 64-bit unsigned integer")
    return v


def _positive(text: str) -> int:
    v = int(text, 0)
    if v < 1:
        raise argparse.ArgumentTypeError(f"{text} must be positive")
    return v


def _non_negative(text: str) -> int:
    v = int(text, 0)
    if v < 0:
        raise argparse.ArgumentTypeError(f"{text} must be non-negative")
    return v


def _pd_arg(text: str):
    if text == "auto":
        return None
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected 'auto' or a probability") from None


def read_probs(path: str) -> list[float]:
    """Probabilities (or unnormalized weights) separated by whitespace or
    commas; ``#`` starts a comment."""
    values = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].replace(",", " ")
        values += [float(tok) for tok in line.split()]
    if len(values) < 2:
        raise ValidationError(f"{path}: need at least two probabilities")
    arr = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(arr)) or arr.min() < 0 or arr.sum() <= 0:
        raise ValidationError(f"{path}: probabilities must be finite, non-negative, not all zero")
    if arr.min() == 0:
        raise ValidationError(f"{path}: every symbol needs a positive probability")
    return list(arr / arr.sum())


def byte_histogram(data: bytes) -> np.ndarray:
    hist = np.bincount(np.frombuffer(data, dtype=np.uint8), minlength=256).astype(np.float64)
    if hist.sum() == 0:
        hist[:] = 1.0
    return hist / hist.sum()


def coding_probs(data: bytes) -> list[float]:
    """Byte histogram with absent bytes given a negligible weight, so the
    quantizer keeps them at its minimum count of one."""
    hist = byte_histogram(data)
    hist[hist == 0] = 1e-12
    return list(hist / hist.sum())


def _model(args, data: bytes | None = None, even: bool = False) -> SymbolModel:
    if args.model is not None:
        probs = read_probs(args.model)
    elif data is not None:
        probs = coding_probs(data)
    else:
        raise ValidationError("--model is required")
    return (quantize_even if even else quantize)(probs, args.b, args.l)


def _masks(spec: str | None, tables) -> MaskList | None:
    if spec is None:
        return None
    kind, _, value = spec.partition(":")
    width = mask_width(tables)
    if kind == "seed":
        return MaskList.from_seed(_u64(value), DEFAULT_MASKS, width)
    if kind == "file":
        words = Path(value).read_text().replace(",", " ").split()
        return MaskList([int(w, 0) for w in words], width)
    raise ValidationError(f"--masks expects seed:<u64> or file:<path>, got {spec!r}")


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _emit(report: dict, path: str | None) -> None:
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def cmd_compress(args) -> int:
    data = Path(args.input).read_bytes()
    model = _model(args, data, even=args.bit_table > 0)
    if model.n != 256:
        raise ValidationError(f"byte input needs a 256-symbol model, got {model.n}")
    if args.crypto:
        check_keyed_constraints(model)
    tables = build_tables(model, args.init, args.seed)
    container = compress(np.frombuffer(data, dtype=np.uint8), tables,
                         masks=_masks(args.masks, tables), bit_table_len=args.bit_table)
    blob = container.to_bytes()
    Path(args.output).write_bytes(blob)
    count = max(len(data), 1)
    rate = container.payload.bit_length / count
    _log(f"{len(data)} symbols, {rate:.6f} bits/symbol (payload), "
         f"{8 * len(blob) / count:.6f} with header; entropy {entropy(byte_histogram(data)):.6f}")
    return 0


def cmd_decompress(args) -> int:
    container = Container.from_bytes(Path(args.input).read_bytes())
    m = container.model
    requantize = quantize_even if container.bit_table is not None else quantize
    if args.model is not None and requantize(read_probs(args.model), m.b, m.l) != m:
        raise ModelMismatch("container was not written with the given model")
    given = {"l": (args.l, m.l), "b": (args.b, m.b), "init": (args.init, container.init),
             "seed": (args.seed, container.seed)}
    for name, (want, have) in given.items():
        if want is not None and want != have and not (name == "seed" and container.init != "scd"):
            raise ModelMismatch(f"container has {name}={have}, flag says {want}")
    if m.n != 256:
        raise ValidationError(f"container holds a {m.n}-symbol alphabet, not bytes")
    out = decode_message(container, container.tables())
    Path(args.output).write_bytes(out.astype(np.uint8).tobytes())
    return 0


def cmd_analyze(args) -> int:
    if args.steps < 1:
        raise ValidationError("--steps must be positive")
    data = Path(args.input).read_bytes() if args.input else None
    model = _model(args, data)
    tables = build_tables(model, args.init, args.seed)
    hist = state_distribution(tables, steps=args.steps, seed=args.seed)
    loss = rate_loss(tables, steps=args.steps, seed=args.seed, hist=hist)
    bias = digit_bias(tables, hist)
    splits = [renorm_split_probability(tables, s, hist) for s in range(model.n)]
    report = {
        "schema_version": REPORT_SCHEMA,
        "model": {"b": model.b, "l": model.l, "counts": list(model.counts),
                  "init": args.init, "seed": args.seed},
        "steps": args.steps,
        "tvd": hist.tvd(),
        "delta_h_measured": loss.measured,
        "delta_h_measured_raw": loss.measured_raw,
        "delta_h_predicted": loss.predicted_acc,
        "delta_h_scd_estimate": loss.predicted_scd,
        "bits_per_symbol": loss.bits_per_symbol,
        "entropy": entropy(model.probs),
        "digit_bias": {"measured": bias.measured, "from_histogram": bias.from_histogram,
                       "predicted": bias.predicted},
        "c_s": [fractional_log(tables, s) for s in range(model.n)],
        "split_empirical": [r.empirical for r in splits],
        "split_sigma": [r.sigma for r in splits],
        "effective_probs": [float(v) for v in effective_symbol_probs(tables)],
    }
    _emit(report, args.report)
    return 0


def _fec_pd(p_b: float, p_d, base: SymbolModel, factor: float,
            frequencies=None) -> tuple[float, dict]:
    """Resolve ``--pd`` and describe where it sits relative to the thresholds.

    ``frequencies`` are the symbol frequencies of the message, if known.
    """
    info: dict = {}
    if p_b > 0:
        lim = thresholds(p_b, math.log2(base.n), ideal_block_lengths(base.probs, frequencies=frequencies))
        info = {"pd0": lim.pd0, "pd1": lim.pd1, "pd2": lim.pd2}
        if p_d is None:
            p_d = factor * lim.pd2
        if p_d < lim.pd0:
            _log(f"warning: p_d={p_d:.4g} is below p_d0={lim.pd0:.4g}; "
                 "the expected tree width is infinite")
    elif p_d is None:
        raise ValidationError("--pd auto needs --pb > 0")
    return p_d, info


def cmd_fec_encode(args) -> int:
    data = Path(args.input).read_bytes()
    base = spread_uniform(256, args.l, args.spread)
    freq = np.bincount(np.frombuffer(data, dtype=np.uint8), minlength=256) if data else None
    p_d, info = _fec_pd(args.pb, args.pd, base, args.pd_factor, freq)
    fm = rescale_with_forbidden(base, p_d, even=args.bit_table > 0)
    frame = fec_encode(np.frombuffer(data, dtype=np.uint8), fm, seed=args.seed,
                       bit_table_len=args.bit_table)
    bits = frame.bits()
    Path(args.output).write_bytes(pack_bits(bits))
    _log(json.dumps({"p_d": fm.p_d, "frame_bits": int(bits.size),
                     "header_bits": frame.header_bits, "symbols": len(data), **info},
                    sort_keys=True))
    return 0


def cmd_fec_corrupt(args) -> int:
    bits = unpack_bits(Path(args.input).read_bytes())
    out = bsc_corrupt(bits, ChannelSpec(args.pb, args.seed))
    Path(args.output).write_bytes(pack_bits(out))
    _log(f"flipped {int(np.count_nonzero(out != bits))} of {bits.size} bits")
    return 0


def cmd_fec_decode(args) -> int:
    header, payload = parse_frame(unpack_bits(Path(args.input).read_bytes()))
    if header.model.n - 1 > 256:
        raise ValidationError("frame alphabet is wider than bytes")
    if args.strategy == "tree":
        res = tree_decode_payload(header, payload, args.pb, max_nodes=args.max_nodes)
    else:
        res = front_decode_payload(header, payload, args.pb, args.M, max_nodes=args.max_nodes)
    Path(args.output).write_bytes(res.symbols.astype(np.uint8).tobytes())
    st = res.stats
    _log(json.dumps({"nodes": st.nodes, "nodes_per_step": st.nodes_per_step,
                     "corrected_bits": len(st.corrected), "max_width": st.max_width},
                    sort_keys=True))
    return 0


def cmd_fec_limits(args) -> int:
    lim = thresholds(args.pb, args.H)
    report = {"p_b": args.pb, "H": args.H, "pd0": lim.pd0, "pd1": lim.pd1, "pd2": lim.pd2,
              "overhead": dict(zip(("pd0", "pd1", "pd2"), lim.overhead(args.H)))}
    p_d = lim.pd2 if args.pd is None else args.pd
    report["p_d"] = p_d
    try:
        report["v"] = drop_root_v(args.pb, p_d, H=args.H)
    except NoNegativeRoot:
        report["v"] = None
    if p_d < lim.pd0:
        _log(f"warning: p_d={p_d:.4g} is below p_d0={lim.pd0:.4g}; "
             "the expected tree width is infinite")
    _emit(report, None)
    return 0


def cmd_fec_pipeline(args) -> int:
    cfg = PipelineConfig(p_b=args.pb, p_d=args.pd, pd_factor=args.pd_factor,
                         message_bits=args.message_bits, symbol_bits=args.symbol_bits,
                         l=args.l, spread=args.spread, bit_table_len=args.bit_table,
                         table_seed=args.seed, nodes_per_step=args.nodes_per_step,
                         strategy=args.strategy, M=args.M)
    report = run_pipeline(cfg, args.trials, first=args.first, jobs=args.jobs)
    summary = report.summary()
    if summary["pd0"] is not None and report.p_d < summary["pd0"]:
        _log(f"warning: p_d={report.p_d:.4g} is below p_d0={summary['pd0']:.4g}; "
             "the expected tree width is infinite")
    summary["schema_version"] = REPORT_SCHEMA
    summary["config"] = {k: getattr(cfg, k) for k in cfg.__dataclass_fields__}
    summary["outcomes"] = [{"trial": o.trial, "status": o.status, "channel_flips": o.channel_flips,
                            "corrected_bits": o.corrected,
                            "nodes_per_step": o.nodes_per_step if math.isfinite(o.nodes_per_step)
                            else None}
                           for o in report.outcomes]
    _emit(summary, args.report)
    return 0


def _codec_flags(p: argparse.ArgumentParser, required_defaults: bool) -> None:
    d = (lambda v: v) if required_defaults else (lambda v: None)
    p.add_argument("--model", help="probabilities file (default: byte histogram of the input)")
    p.add_argument("--l", type=_positive, default=d(DEFAULT_L), help="states per renormalization interval")
    p.add_argument("--b", type=_positive, default=d(2), help="digit base (power of two)")
    p.add_argument("--init", choices=("precise", "scd"), default=d("precise"))
    p.add_argument("--seed", type=_u64, default=d(0), help="ScD table seed")


def build_parser() -> argparse.ArgumentParser:
    versions = ", ".join(f"{k} v{v}" for k, v in FORMAT_VERSIONS.items())
    parser = argparse.ArgumentParser(prog="ansx", description="Asymmetric numeral systems toolkit.")
    parser.add_argument("--version", action="version",
                        version=f"ansx {__version__} (formats: {versions})")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compress", help="encode a file with an order-0 byte model")
    _codec_flags(p, True)
    p.add_argument("--masks", help="XOR masks: seed:<u64> or file:<path>")
    p.add_argument("--bit-table", type=_non_negative, default=0, help="cyclic bit table length")
    p.add_argument("--crypto", action="store_true", help="enforce keyed-table parameter guidance")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("decompress", help="decode an ANS1 container")
    _codec_flags(p, False)
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_decompress)

    p = sub.add_parser("analyze", help="state law, rate loss and digit bias report")
    _codec_flags(p, True)
    p.add_argument("--input", help="measure the model from this file instead of --model")
    p.add_argument("--steps", type=int, default=10**6)
    p.add_argument("--report", help="JSON output path (default stdout)")
    p.set_defaults(func=cmd_analyze)

    fec = sub.add_parser("fec", help="forbidden-symbol error correction").add_subparsers(
        dest="fec_command", required=True)

    def model_flags(q, spread):
        q.add_argument("--pd", type=_pd_arg, default=None, help="'auto' or forbidden probability")
        q.add_argument("--pd-factor", type=float, default=1.1, help="auto p_d as a multiple of p_d2")
        q.add_argument("--l", type=_positive, default=1 << 22)
        q.add_argument("--spread", type=float, default=spread, help="count fan of the symbol model")
        q.add_argument("--bit-table", type=_non_negative, default=32)
        q.add_argument("--seed", type=_u64, default=0, help="table seed")

    p = fec.add_parser("encode", help="bytes to a protected bit frame")
    p.add_argument("--pb", type=float, required=True)
    model_flags(p, 0.9)
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_fec_encode)

    p = fec.add_parser("corrupt", help="pass a frame through a binary symmetric channel")
    p.add_argument("--pb", type=float, required=True)
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_fec_corrupt)

    p = fec.add_parser("decode", help="correct and decode a frame")
    p.add_argument("--pb", type=float, required=True, help="assumed channel error rate")
    p.add_argument("--max-nodes", type=_positive, default=None)
    p.add_argument("--strategy", choices=("tree", "front"), default="tree")
    p.add_argument("--M", type=_positive, default=256, help="front width")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(func=cmd_fec_decode)

    p = fec.add_parser("limits", help="print the p_d thresholds and the drop root v")
    p.add_argument("--pb", type=float, required=True)
    p.add_argument("--H", type=float, default=1.0, help="source entropy, bits per symbol")
    p.add_argument("--pd", type=float, default=None, help="p_d for v (default p_d2)")
    p.set_defaults(func=cmd_fec_limits)

    p = fec.add_parser("pipeline", help="seeded encode, corrupt, decode trials")
    p.add_argument("--pb", type=float, default=0.01)
    model_flags(p, PipelineConfig.spread)
    p.add_argument("--trials", type=_positive, default=200)
    p.add_argument("--first", type=_non_negative, default=0, help="index of the first trial")
    p.add_argument("--message-bits", type=_positive, default=10_000)
    p.add_argument("--symbol-bits", type=_positive, default=PipelineConfig.symbol_bits)
    p.add_argument("--nodes-per-step", type=float, default=64.0)
    p.add_argument("--strategy", choices=("tree", "front"), default="tree")
    p.add_argument("--M", type=_positive, default=256)
    p.add_argument("--jobs", type=_positive, default=1)
    p.add_argument("--report", help="JSON output path (default stdout)")
    p.set_defaults(func=cmd_fec_pipeline)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except AnsError as exc:
        _log(f"ansx: {type(exc).__name__}: {exc}")
        return exc.exit_code
    except OSError as exc:
        _log(f"ansx: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
