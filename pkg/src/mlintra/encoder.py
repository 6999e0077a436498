"""Quadtree RD encoder with multi-line intra search.

Every CU is searched over the reference lines of the configured alphabet.
Each line runs a SATD rough mode decision over all 35 modes, then a full
RD check of the survivors; the line with the lowest RD cost of the final
coded representation wins, ties going to the nearer line. Costs are held
as integers scaled by 2**16 so decisions, and hence streams, are identical
on every platform.
"""

from __future__ import annotations

import csv
import io
import math
import time
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .bitstream import (LINE_MODES, BitCounter, BitstreamHeader, BitWriter, encode_levels,
                        levels_bits, line_alphabet, mode_bits)
from .coding import (CTU_SIZE, PART_2NX2N, PART_NXN, BlockPredictor, CodingState, CodingTools,
                     CuSyntax, chroma_line, code_block, write_cu_leaf)
from .errors import ConfigError
from .frame import Frame, crop_frame, pad_frame
from .prediction import NUM_MODES, predict
from .reference import RefLine, smooth_reference
from .transform import chroma_qp

__all__ = [
    "EncoderConfig",
    "FastSearchParams",
    "EncodeStats",
    "CuRecord",
    "RdDecision",
    "encode_frame",
    "encode_sequence",
    "rough_mode_decision",
    "rmd_count",
    "satd",
    "rd_cost",
    "lambda_for_qp",
    "gate_block_size",
    "gate_nxn",
    "skip_after_l1",
]

COST_SHIFT = 16
_RMD_COUNTS = {4: 8, 8: 8, 16: 3, 32: 3, 64: 3}


@dataclass(frozen=True)
class FastSearchParams:
    f1: float = 1.1
    f2: float = 1.2
    skip_64: bool = True
    gate_32_neighbor_threshold: int = 16
    rmd_halved: bool = True

    def __post_init__(self):
        if not self.f1 > 1 or not self.f2 > 1:
            raise ConfigError(f"fast-search factors must exceed 1, got f1={self.f1}, f2={self.f2}")


@dataclass(frozen=True)
class EncoderConfig:
    qp: int = 32
    lossless: bool = False
    line_mode: str = "full4"
    lines: tuple[int, ...] | None = None
    fast: FastSearchParams | None = None
    compensation: bool = True
    blending: bool = True
    horizontal_to_30: bool = False
    allow_nxn: bool = True
    min_cu: int = 8
    max_cu: int = 64

    def __post_init__(self):
        if not isinstance(self.qp, int) or not 0 <= self.qp <= 51:
            raise ConfigError(f"QP must be an integer in 0..51, got {self.qp!r}")
        if self.line_mode not in LINE_MODES and self.line_mode != "custom":
            raise ConfigError(f"line mode must be one of {sorted(LINE_MODES)}, got {self.line_mode!r}")
        if self.line_mode == "custom" and self.lines is None:
            raise ConfigError("custom line mode needs an explicit line set")
        if self.fast is None and self.line_mode == "fast3":
            object.__setattr__(self, "fast", FastSearchParams())
        self.tools  # validates the CU size range and line set

    @property
    def alphabet(self) -> tuple[int, ...]:
        if self.lines is not None:
            return line_alphabet(self.lines)
        return LINE_MODES[self.line_mode]

    @property
    def header_line_mode(self) -> str:
        alphabet = self.alphabet
        if alphabet == LINE_MODES.get(self.line_mode):
            return self.line_mode
        for name in ("single", "full4"):
            if alphabet == LINE_MODES[name]:
                return name
        return "custom"

    @property
    def tools(self) -> CodingTools:
        return CodingTools(self.alphabet, self.compensation, self.blending, self.horizontal_to_30,
                           self.allow_nxn, self.min_cu, self.max_cu)

    def header(self, width: int, height: int, bit_depth: int, frame_count: int) -> BitstreamHeader:
        tools = self.tools
        return BitstreamHeader(width, height, bit_depth, self.qp, self.lossless,
                               self.header_line_mode, tools.lines, frame_count, tools.flags,
                               tools.min_cu.bit_length() - 1, tools.max_cu.bit_length() - 1)


# -- costs -----------------------------------------------------------------------------

_CUBE_ROOTS_OF_2 = (1.0, 1.2599210498948732, 1.5874010519681994)


def lambda_for_qp(qp: int) -> float:
    """``0.57 * 2**((qp - 12) / 3)`` built from exact power-of-two scaling.

    Splitting the exponent avoids ``pow`` so the value (and every decision
    that depends on it) is identical across platforms' math libraries.
    """
    whole, third = divmod(qp - 12, 3)
    return 0.57 * _CUBE_ROOTS_OF_2[third] * 2.0 ** whole


def rd_cost(distortion: float, bits: float, lam: float) -> float:
    if lam <= 0:
        raise ConfigError(f"lambda must be positive, got {lam}")
    return distortion + lam * bits


def _fixed(value: float) -> int:
    return int(round(value * (1 << COST_SHIFT)))


def _hadamard(n: int) -> np.ndarray:
    h = np.array([[1]], dtype=np.int64)
    while h.shape[0] < n:
        h = np.block([[h, h], [h, -h]])
    return h


_H4, _H8 = _hadamard(4), _hadamard(8)


def satd(diff: np.ndarray) -> np.ndarray | int:
    """Hadamard SATD of a block (or a stack of blocks along the leading axes).

    8x8 tiles with ``(sum + 2) >> 2`` per tile; 4x4 blocks use a single 4x4
    transform with ``(sum + 1) >> 1``.
    """
    diff = np.asarray(diff, dtype=np.int64)
    n = diff.shape[-1]
    lead = diff.shape[:-2]
    if n == 4:
        t = _H4 @ diff @ _H4
        out = (np.abs(t).sum(axis=(-2, -1)) + 1) >> 1
    else:
        k = n // 8
        tiles = diff.reshape(lead + (k, 8, k, 8)).swapaxes(-3, -2)
        t = _H8 @ tiles @ _H8
        out = ((np.abs(t).sum(axis=(-2, -1)) + 2) >> 2).sum(axis=(-2, -1))
    return int(out) if not lead else out


def rmd_count(size: int, line: int, fast: FastSearchParams | None = None) -> int:
    count = _RMD_COUNTS[size]
    if line > 0 and fast is not None and fast.rmd_halved:
        count = -(-count // 2)
    return count


def rough_mode_decision(orig: np.ndarray, predictor, count: int, mpm=(0, 1, 26),
                        sqrt_lambda: float = 0.0) -> list[int]:
    """Rank all 35 modes by ``SATD + sqrt(lambda) * mode bits`` and keep the best ``count``.

    ``predictor`` is a :class:`RefLine` (plain prediction with the usual
    smoothing and filters), a callable returning the prediction for a mode,
    or a precomputed ``(35, N, N)`` stack.
    Ties are broken by mode index.
    """
    if count < 1:
        raise ConfigError(f"RMD candidate count must be >= 1, got {count}")
    if isinstance(predictor, RefLine):
        ref = predictor
        preds = np.stack([predict(smooth_reference(ref, m), m) for m in range(NUM_MODES)])
    elif callable(predictor):
        preds = np.stack([predictor(m) for m in range(NUM_MODES)])
    else:
        preds = np.asarray(predictor)
    costs = (satd(np.asarray(orig, dtype=np.int64) - preds).astype(np.int64) << COST_SHIFT)
    scale = _fixed(sqrt_lambda)
    costs += scale * np.array([mode_bits(m, mpm) for m in range(NUM_MODES)], dtype=np.int64)
    order = np.lexsort((np.arange(NUM_MODES), costs))
    return [int(m) for m in order[:count]]


# -- fast-search gates -------------------------------------------------------------

def gate_block_size(cu_size: int, left_pu_size: int, above_pu_size: int,
                    params: FastSearchParams | None = None) -> bool:
    """Whether further lines are checked for a CU of this size at all."""
    params = params or FastSearchParams()
    if cu_size == 64 and params.skip_64:
        return False
    thr = params.gate_32_neighbor_threshold
    if cu_size == 32 and 0 < left_pu_size < thr and 0 < above_pu_size < thr:
        return False
    return True


def _exceeds(cost: float, factor: float, reference: float) -> bool:
    f = Fraction(str(factor))
    return cost * f.denominator > f.numerator * reference


def skip_after_l1(cost_l1: float, cost_l0: float, f1: float = 1.1) -> bool:
    """Further lines beyond L1 are skipped when ``C_L1 > f1 * C_L0``."""
    return _exceeds(cost_l1, f1, cost_l0)


def gate_nxn(cost_nxn_l0: float, cost_2nx2n_best: float, f2: float = 1.2) -> bool:
    """Whether NxN is checked on further lines: false when ``C_NxN,L0 > f2 * C_2Nx2N,best``."""
    return not _exceeds(cost_nxn_l0, f2, cost_2nx2n_best)


# -- decision log -------------------------------------------------------------------

@dataclass
class CuRecord:
    frame: int
    x: int
    y: int
    size: int
    part: str
    line: int
    modes: tuple[int, ...]
    distortion: int
    bits: int
    cost: int
    line_costs: dict = field(default_factory=dict)
    gates: tuple[str, ...] = ()

    @property
    def cost_value(self) -> float:
        return self.cost / (1 << COST_SHIFT)


RdDecision = CuRecord

CSV_FIELDS = ("frame", "x", "y", "size", "part", "line", "mode", "distortion", "bits", "cost",
              "line_costs", "gates")


@dataclass
class EncodeStats:
    records: list[CuRecord] = field(default_factory=list)
    bits: int = 0
    sse: tuple[int, int, int] = (0, 0, 0)
    rd_candidates: int = 0
    rmd_candidates: int = 0
    elapsed: float = 0.0
    gates: Counter = field(default_factory=Counter)

    @property
    def total_cost(self) -> int:
        return sum(r.cost for r in self.records)

    def line_histogram(self) -> dict[int, dict[int, int]]:
        """CU counts per size and line: ``{size: {line: count}}``."""
        hist: dict[int, Counter] = {}
        for r in self.records:
            hist.setdefault(r.size, Counter())[r.line] += 1
        return {s: dict(c) for s, c in sorted(hist.items())}

    def rows(self):
        for r in self.records:
            yield {"frame": r.frame, "x": r.x, "y": r.y, "size": r.size, "part": r.part,
                   "line": r.line, "mode": "/".join(map(str, r.modes)), "distortion": r.distortion,
                   "bits": r.bits, "cost": f"{r.cost_value:.4f}",
                   "line_costs": ";".join(f"{p}:L{m}={c / (1 << COST_SHIFT):.4f}"
                                          for (p, m), c in sorted(r.line_costs.items())),
                   "gates": ";".join(r.gates)}

    def to_csv(self, target=None) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(self.rows())
        text = buf.getvalue()
        if target is not None:
            with open(target, "w", newline="") as fh:
                fh.write(text)
        return text

    def merge(self, other: "EncodeStats") -> None:
        self.records.extend(other.records)
        self.bits += other.bits
        self.sse = tuple(a + b for a, b in zip(self.sse, other.sse))
        self.rd_candidates += other.rd_candidates
        self.rmd_candidates += other.rmd_candidates
        self.elapsed += other.elapsed
        self.gates.update(other.gates)


# -- search -------------------------------------------------------------------------

@dataclass
class _Result:
    cost: int
    dist: int
    bits: int
    tree: object          # CuSyntax for a leaf, list of four children for a split
    records: list


@lru_cache(maxsize=None)
def _mode_bits_table(mpm: tuple[int, int, int]) -> tuple[int, ...]:
    return tuple(mode_bits(m, mpm) for m in range(NUM_MODES))


class _FrameEncoder:
    def __init__(self, frame: Frame, config: EncoderConfig, frame_index: int):
        self.config = config
        self.tools = config.tools
        self.fast = config.fast
        self.bd = frame.bit_depth
        self.orig = [np.asarray(p, dtype=np.int64) for p in frame.planes]
        self.state = CodingState(frame.width, frame.height, frame.bit_depth, self.tools)
        self.qp = config.qp
        self.qpc = chroma_qp(config.qp)
        lam = lambda_for_qp(config.qp)
        self.lam = _fixed(lam)
        self.sqrt_lam = math.sqrt(lam)
        self.frame_index = frame_index
        self.stats = EncodeStats()

    def run(self) -> list:
        trees = []
        h, w = self.orig[0].shape
        for y in range(0, h, CTU_SIZE):
            for x in range(0, w, CTU_SIZE):
                self.state.prediction_cache.clear()
                res = self._search(x, y, CTU_SIZE)
                trees.append(res.tree)
                self.stats.records.extend(res.records)
        return trees

    def _cost(self, dist: int, bits: int) -> int:
        return (dist << COST_SHIFT) + self.lam * bits

    # quadtree
    def _search(self, x: int, y: int, size: int) -> _Result:
        tools = self.tools
        can_leaf = size <= tools.max_cu
        can_split = size > tools.min_cu
        flag_bits = 1 if can_leaf and can_split else 0
        start = self.state.snapshot(x, y, size)
        best = best_snap = None
        if can_leaf:
            best = self._search_leaf(x, y, size)
            best.bits += flag_bits
            best.cost += self.lam * flag_bits
            best.records[-1].bits += flag_bits
            best.records[-1].cost += self.lam * flag_bits
            if can_split:
                best_snap = self.state.snapshot(x, y, size)
                self.state.restore(start)
        if can_split:
            h = size // 2
            kids = [self._search(cx, cy, h)
                    for cy, cx in ((y, x), (y, x + h), (y + h, x), (y + h, x + h))]
            split = _Result(sum(k.cost for k in kids) + self.lam * flag_bits,
                            sum(k.dist for k in kids), sum(k.bits for k in kids) + flag_bits,
                            [k.tree for k in kids], [r for k in kids for r in k.records])
            if best is None or split.cost < best.cost:
                return split
            self.state.restore(best_snap)
        return best

    # leaf CU: line and partition decision
    def _search_leaf(self, x: int, y: int, size: int) -> _Result:
        state, fast = self.state, self.fast
        start = state.snapshot(x, y, size)
        lines = self.tools.lines
        trials = []       # (cost, line, part_order, result, snapshot)
        costs = {}
        gates = []

        further = True
        if fast is not None:
            further = gate_block_size(size, *state.neighbour_pu_sizes(x, y), fast)
            if not further:
                gates.append(f"size{size}")

        def run(part, line):
            state.restore(start)
            res = self._code_nxn(x, y, line) if part == PART_NXN else self._code_2nx2n(x, y, size, line)
            costs[(part, line)] = res.cost
            trials.append((res.cost, line, part == PART_NXN, res, state.snapshot(x, y, size)))
            return res.cost

        def line_loop(part, allowed, done=()):
            for line in lines:
                if line in done:
                    continue
                if line > 0 and not allowed:
                    break
                if fast is not None and line > 1 and (part, 1) in costs and \
                        skip_after_l1(costs[(part, 1)], costs[(part, 0)], fast.f1):
                    gates.append(f"eq11:{part}")
                    break
                run(part, line)

        line_loop(PART_2NX2N, further)

        if size == 8 and self.tools.nxn_enabled:
            best_2n = min(c for (p, _), c in costs.items() if p == PART_2NX2N)
            if fast is None:
                line_loop(PART_NXN, True)
            else:
                run(PART_NXN, 0)
                allowed = further and gate_nxn(costs[(PART_NXN, 0)], best_2n, fast.f2)
                if further and not allowed:
                    gates.append("eq12")
                if allowed:
                    line_loop(PART_NXN, True, done=(0,))

        cost, _, _, res, snap = min(trials, key=lambda t: (t[0], t[1], t[2]))
        state.restore(snap)
        rec = res.records[0]
        rec.line_costs = costs
        rec.gates = tuple(gates)
        self.stats.gates.update(gates)
        return res

    def _luma_trial(self, orig, pred, use_dst):
        levels, recon = code_block(orig, pred, self.qp, self.bd, self.config.lossless, use_dst)
        counter = BitCounter()
        encode_levels(levels, counter)
        dist = int(((orig - recon) ** 2).sum())
        return levels, recon, dist, counter.bit_count

    def _luma_trials(self, orig, preds, use_dst):
        """Residual coding of a stack of candidate predictions at once."""
        levels, recon = code_block(orig, preds, self.qp, self.bd, self.config.lossless, use_dst)
        dist = ((orig - recon) ** 2).sum(axis=(-2, -1))
        return levels, recon, [int(d) for d in dist], [int(b) for b in levels_bits(levels)]

    def _choose_mode(self, x, y, n, line, predictors, mpm, use_dst):
        """RMD then full RD (luma only) for one PU; leaves the winner in the state."""
        state = self.state
        orig = self.orig[0][y:y + n, x:x + n]
        rmd_pred = predictors[0]
        cands = rough_mode_decision(orig, rmd_pred.predict_all(), rmd_count(n, line, self.fast), mpm,
                                    self.sqrt_lam)
        self.stats.rmd_candidates += NUM_MODES
        self.stats.rd_candidates += len(cands)
        mbits = _mode_bits_table(mpm)
        best = None
        if n == 64:
            start = state.snapshot(x, y, n)
        else:
            trials = self._luma_trials(orig, rmd_pred.predict_all()[cands], use_dst)
        for k, mode in enumerate(cands):
            if n == 64:
                state.restore(start)
                levels, dist, bits = [], 0, mbits[mode]
                for tx, ty in ((x, y), (x + 32, y), (x, y + 32), (x + 32, y + 32)):
                    bp = BlockPredictor(state, 0, tx, ty, 32, line)
                    lv, rec, d, b = self._luma_trial(self.orig[0][ty:ty + 32, tx:tx + 32],
                                                     bp.predict(mode), False)
                    state.store(0, tx, ty, rec)
                    levels.append(lv)
                    dist += d
                    bits += b
                recon = state.recon[0][y:y + n, x:x + n].copy()
            else:
                lv, recon, dist, b = trials[0][k], trials[1][k], trials[2][k], trials[3][k]
                levels, bits = [lv], mbits[mode] + b
            cost = self._cost(dist, bits)
            if best is None or cost < best[0]:
                best = (cost, mode, levels, recon, dist)
        _, mode, levels, recon, dist = best
        state.store(0, x, y, recon)
        state.set_pu(x, y, n, mode)
        return mode, levels, dist

    def _code_chroma(self, x, y, size, line, mode):
        state = self.state
        c = min(size // 2, 32)
        mc = chroma_line(line)
        levels, dist = [], 0
        for plane in (1, 2):
            cx, cy = x // 2, y // 2
            pred = BlockPredictor(state, plane, cx, cy, c, mc).predict(mode)
            orig = self.orig[plane][cy:cy + c, cx:cx + c]
            lv, recon = code_block(orig, pred, self.qpc, self.bd, self.config.lossless, False)
            state.store(plane, cx, cy, recon)
            levels.append(lv)
            dist += int(((orig - recon) ** 2).sum())
        return levels, dist

    def _finish(self, x, y, size, line, part, modes, mpms, levels, dist) -> _Result:
        cu = CuSyntax(x, y, size, line, part, tuple(modes), tuple(mpms), levels)
        counter = BitCounter()
        write_cu_leaf(counter, cu, self.tools)
        bits = counter.bit_count
        cost = self._cost(dist, bits)
        rec = CuRecord(self.frame_index, x, y, size, part, line, cu.modes, dist, bits, cost)
        return _Result(cost, dist, bits, cu, [rec])

    def _code_2nx2n(self, x, y, size, line) -> _Result:
        mpm = self.state.mpm(x, y)
        n = size
        predictors = [BlockPredictor(self.state, 0, x, y, n, line)]
        mode, levels, dist = self._choose_mode(x, y, n, line, predictors, mpm, n == 4)
        c_levels, c_dist = self._code_chroma(x, y, size, line, mode)
        return self._finish(x, y, size, line, PART_2NX2N, [mode], [mpm], levels + c_levels,
                            dist + c_dist)

    def _code_nxn(self, x, y, line) -> _Result:
        modes, mpms, levels, dist = [], [], [], 0
        for px, py in ((x, y), (x + 4, y), (x, y + 4), (x + 4, y + 4)):
            mpm = self.state.mpm(px, py)
            bp = BlockPredictor(self.state, 0, px, py, 4, line)
            mode, lv, d = self._choose_mode(px, py, 4, line, [bp], mpm, True)
            modes.append(mode)
            mpms.append(mpm)
            levels += lv
            dist += d
        c_levels, c_dist = self._code_chroma(x, y, 8, line, modes[0])
        return self._finish(x, y, 8, line, PART_NXN, modes, mpms, levels + c_levels,
                            dist + c_dist)


def _write_tree(writer, tree, x, y, size, tools: CodingTools) -> None:
    if size <= tools.max_cu and size > tools.min_cu:
        writer.write(1 if isinstance(tree, list) else 0, 1)
    if isinstance(tree, list):
        h = size // 2
        for child, (cx, cy) in zip(tree, ((x, y), (x + h, y), (x, y + h), (x + h, y + h))):
            _write_tree(writer, child, cx, cy, h, tools)
    else:
        write_cu_leaf(writer, tree, tools)


def _encode_one(padded: Frame, original: Frame, config: EncoderConfig, index: int, writer):
    t0 = time.perf_counter()
    enc = _FrameEncoder(padded, config, index)
    trees = enc.run()
    start_bits = writer.bit_count
    i = 0
    for y in range(0, padded.height, CTU_SIZE):
        for x in range(0, padded.width, CTU_SIZE):
            _write_tree(writer, trees[i], x, y, CTU_SIZE, enc.tools)
            i += 1
    writer.align()
    stats = enc.stats
    stats.bits = writer.bit_count - start_bits
    recon_padded = Frame.from_planes(*enc.state.recon, bit_depth=padded.bit_depth)
    recon = crop_frame(recon_padded, original.width, original.height)
    stats.sse = tuple(int(((a.astype(np.int64) - b.astype(np.int64)) ** 2).sum())
                      for a, b in zip(recon.planes, original.planes))
    stats.elapsed = time.perf_counter() - t0
    return recon, stats


def encode_sequence(frames, config: EncoderConfig) -> tuple[bytes, list[Frame], EncodeStats]:
    """Encode frames all-intra into one stream; returns (stream, reconstructions, stats)."""
    frames = list(frames)
    if not frames:
        raise ConfigError("nothing to encode")
    first = frames[0]
    for f in frames:
        if (f.width, f.height, f.bit_depth) != (first.width, first.height, first.bit_depth):
            raise ConfigError("all frames of a sequence must share size and bit depth")
    header = config.header(first.width, first.height, first.bit_depth, len(frames))
    writer = BitWriter()
    for b in header.pack():
        writer.write(b, 8)
    recons = []
    total = EncodeStats()
    for i, f in enumerate(frames):
        recon, stats = _encode_one(pad_frame(f, CTU_SIZE), f, config, i, writer)
        recons.append(recon)
        total.merge(stats)
    return writer.getvalue(), recons, total


def encode_frame(frame: Frame, config: EncoderConfig) -> tuple[bytes, Frame, EncodeStats]:
    data, recons, stats = encode_sequence([frame], config)
    return data, recons[0], stats
