"""Command-line entry point: codec round trips and the CSV-emitting experiments."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import analysis
from .bitstream import LINE_MODES
from .corpus import census_corpus, codec_corpus, smooth_corpus
from .decoder import decode_stream, extract_stream_stats, stream_stats_csv
from .encoder import EncoderConfig, encode_sequence
from .errors import MlintraError
from .frame import count_frames, load_yuv, write_yuv

__all__ = ["main", "build_parser", "worker_count"]


def worker_count() -> int:
    """Worker cap from ``MRLI_THREADS`` (default 1)."""
    raw = os.environ.get("MRLI_THREADS", "1")
    try:
        value = int(raw)
    except ValueError:
        raise MlintraError(f"MRLI_THREADS must be an integer, got {raw!r}") from None
    return max(1, value)


def _qp(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"QP must be an integer, got {text!r}") from None
    if not 0 <= value <= 51:
        raise argparse.ArgumentTypeError(f"QP must be in 0..51, got {value}")
    return value


def _positive(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _add_input(p, required=False, corpus=False):
    p.add_argument("--input", required=required, help="raw planar YUV 4:2:0 file")
    p.add_argument("--width", type=_positive)
    p.add_argument("--height", type=_positive)
    p.add_argument("--bit-depth", type=int, default=8, choices=(8, 10))
    p.add_argument("--frames", type=_positive, help="number of frames to read (default: all)")
    if corpus:
        p.add_argument("--seed-corpus", type=int, metavar="SEED",
                       help="use the built-in corpus generated with SEED instead of --input")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mlintra", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="encode raw YUV into a stream")
    _add_input(p, required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--qp", type=_qp, default=32)
    p.add_argument("--lossless", action="store_true")
    p.add_argument("--line-mode", choices=sorted(LINE_MODES), default="full4")
    p.add_argument("--stats-csv", help="write the per-CU decision log here")

    p = sub.add_parser("decode", help="decode a stream to raw YUV")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)

    p = sub.add_parser("census", help="per-line usage of best SATD predictions")
    _add_input(p, corpus=True)
    p.add_argument("--block-size", type=int, default=8)
    p.add_argument("--reference-source", choices=("original", "compressed"), default="original")
    p.add_argument("--qp", type=_qp, default=37)
    p.add_argument("--output", help="CSV path (default: stdout)")

    p = sub.add_parser("variance", help="per-position quantization error variance")
    _add_input(p, corpus=True)
    p.add_argument("--block-size", type=int, default=8)
    p.add_argument("--qp", type=_qp, default=37)
    p.add_argument("--lossless", action="store_true")
    p.add_argument("--output")

    p = sub.add_parser("boundary-mse", help="boundary prediction MSE with compensation off/on")
    _add_input(p, corpus=True)
    p.add_argument("--block-size", type=int, default=16)
    p.add_argument("--qp", type=_qp, default=37)
    p.add_argument("--reference-source", choices=("original", "compressed"), default="compressed")
    p.add_argument("--output")

    p = sub.add_parser("subset-sweep", help="RD cost per reference line subset")
    _add_input(p, corpus=True)
    p.add_argument("--qp", type=_qp, default=32)
    p.add_argument("--output")

    p = sub.add_parser("stream-stats", help="per-CU line/mode table parsed from a stream")
    p.add_argument("--input", required=True)
    p.add_argument("--output")
    return parser


def _load_frames(args, corpus_fn):
    if args.input is None:
        if getattr(args, "seed_corpus", None) is None:
            raise MlintraError("give --input (with --width/--height) or --seed-corpus")
        return [f for _, f in corpus_fn(seed=args.seed_corpus)]
    if args.width is None or args.height is None:
        raise MlintraError("--width and --height are required with --input")
    available = count_frames(args.input, args.width, args.height, args.bit_depth)
    n = available if args.frames is None else args.frames
    if n > available:
        raise MlintraError(f"{args.input} holds {available} frame(s), {n} requested")
    return [load_yuv(args.input, args.width, args.height, args.bit_depth, i) for i in range(n)]


def _emit(text: str, output) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _run(args) -> None:
    cmd = args.command
    if cmd == "encode":
        frames = _load_frames(args, codec_corpus)
        config = EncoderConfig(qp=args.qp, lossless=args.lossless, line_mode=args.line_mode)
        data, _, stats = encode_sequence(frames, config)
        Path(args.output).write_bytes(data)
        if args.stats_csv:
            stats.to_csv(args.stats_csv)
        print(f"{len(frames)} frame(s), {len(data)} bytes, {stats.elapsed:.2f} s", file=sys.stderr)
    elif cmd == "decode":
        frames = decode_stream(Path(args.input).read_bytes())
        for i, frame in enumerate(frames):
            write_yuv(frame, args.output, append=i > 0)
    elif cmd == "census":
        config = analysis.CensusConfig(args.block_size, args.reference_source, args.qp)
        result = analysis.line_usage_census(_load_frames(args, census_corpus), config)
        _emit(analysis.census_csv(result), args.output)
    elif cmd == "variance":
        grid = analysis.quant_error_variance_map(_load_frames(args, smooth_corpus), args.qp,
                                                 args.block_size, lossless=args.lossless)
        _emit(analysis.variance_csv(grid), args.output)
    elif cmd == "boundary-mse":
        report = analysis.boundary_mse_report(_load_frames(args, census_corpus), args.qp,
                                              args.block_size,
                                              reference_source=args.reference_source)
        _emit(analysis.boundary_csv(report), args.output)
    elif cmd == "subset-sweep":
        rows = analysis.subset_sweep(_load_frames(args, codec_corpus), args.qp,
                                     workers=worker_count())
        _emit(analysis.sweep_csv(rows), args.output)
    elif cmd == "stream-stats":
        rows = extract_stream_stats(Path(args.input).read_bytes())
        _emit(stream_stats_csv(rows), args.output)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _run(args)
    except (MlintraError, ValueError, OSError, EOFError, IndexError) as exc:
        print(f"mlintra {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
