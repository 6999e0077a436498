"""Statistical experiments on reference-line usage, quantization error and compensation.

Each function is a pure function of its inputs and returns plain Python
data; the ``*_csv`` helpers render it for external plotting.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .coding import BlockPredictor, CodingState, CodingTools
from .encoder import EncoderConfig, encode_frame, encode_sequence, lambda_for_qp, satd
from .errors import ConfigError
from .frame import Frame, pad_frame

__all__ = [
    "CensusConfig",
    "CensusResult",
    "line_usage_census",
    "quant_error_variance_map",
    "error_variance_grid",
    "border_interior_means",
    "boundary_mse_report",
    "subset_sweep",
    "bd_rate",
    "psnr",
    "DEFAULT_SUBSETS",
    "census_csv",
    "variance_csv",
    "boundary_csv",
    "sweep_csv",
]

DEFAULT_SUBSETS = ((0, 1), (0, 2), (0, 3), (0, 1, 2), (0, 1, 3), (0, 2, 3), (0, 1, 2, 3))
_BLOCK_SIZES = (4, 8, 16, 32)
_COMPENSATED_LINES = 3


def _frames(frames) -> list[Frame]:
    return [frames] if isinstance(frames, Frame) else list(frames)


def _check_block_size(block_size: int, allowed=_BLOCK_SIZES) -> None:
    if block_size not in allowed:
        raise ConfigError(f"block size must be one of {allowed}, got {block_size}")


def _compressed(frame: Frame, qp: int) -> Frame:
    """Single-line reconstruction at ``qp``, used as compressed reference samples."""
    return encode_frame(frame, EncoderConfig(qp=qp, line_mode="single"))[1]


class _CausalPredictor:
    """Raster-order block predictions on a fixed reference plane (luma)."""

    def __init__(self, reference: Frame, lines, compensation: bool):
        padded = pad_frame(reference, 64)
        tools = CodingTools(lines=tuple(lines), compensation=compensation, blending=False)
        self.state = CodingState(padded.width, padded.height, padded.bit_depth, tools)
        self.state.recon[0][:] = padded.planes[0]
        self.lines = tools.lines

    def predictions(self, x: int, y: int, n: int, line: int) -> np.ndarray:
        avail = self.state.avail[0]
        avail[:] = False
        avail[:y, :] = True
        avail[y:y + n, :x] = True
        return BlockPredictor(self.state, 0, x, y, n, line).predict_all()


def _blocks(frame: Frame, n: int):
    for y in range(0, frame.height - n + 1, n):
        for x in range(0, frame.width - n + 1, n):
            yield x, y


def _best(costs_per_line: list[np.ndarray]) -> tuple[int, int]:
    """Index of the lowest cost over (line, mode); ties go to the earlier line, then mode."""
    best_line = best_mode = None
    best_cost = None
    for i, costs in enumerate(costs_per_line):
        mode = int(np.argmin(costs))
        if best_cost is None or costs[mode] < best_cost:
            best_line, best_mode, best_cost = i, mode, costs[mode]
    return best_line, best_mode


# -- reference line census ------------------------------------------------------------

@dataclass(frozen=True)
class CensusConfig:
    block_size: int = 8
    reference_source: str = "original"
    qp: int = 37
    lines: tuple[int, ...] = (0, 1, 2, 3)
    metric: str = "satd"

    def __post_init__(self):
        _check_block_size(self.block_size)
        if self.reference_source not in ("original", "compressed"):
            raise ConfigError(f"reference source must be original or compressed, "
                              f"got {self.reference_source!r}")
        if self.metric != "satd":
            raise ConfigError(f"only the satd metric is supported, got {self.metric!r}")
        if not 0 <= self.qp <= 51:
            raise ConfigError(f"QP must be in 0..51, got {self.qp}")


@dataclass
class CensusResult:
    lines: tuple[int, ...]
    counts: dict[int, int]
    blocks: list[dict]

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def percentages(self) -> dict[int, float]:
        total = self.total or 1
        return {m: 100.0 * c / total for m, c in self.counts.items()}

    @property
    def further_share(self) -> float:
        """Fraction of blocks whose best line is not ``L0``."""
        return 1.0 - self.counts.get(0, 0) / (self.total or 1)


def line_usage_census(frames, config: CensusConfig = CensusConfig()) -> CensusResult:
    """Best (line, mode) per non-overlapping block by SATD against the original.

    References are the original samples or a compressed reconstruction;
    availability is raster-causal over the block grid. Ties go to the nearer
    line. Plain predictions are used for every line (no compensation).
    """
    n = config.block_size
    lines = CodingTools(lines=config.lines).lines
    counts = {m: 0 for m in lines}
    blocks = []
    for index, frame in enumerate(_frames(frames)):
        reference = frame if config.reference_source == "original" else _compressed(frame, config.qp)
        predictor = _CausalPredictor(reference, lines, compensation=False)
        orig = np.asarray(frame.planes[0], dtype=np.int64)
        for x, y in _blocks(frame, n):
            block = orig[y:y + n, x:x + n]
            costs = [satd(block - predictor.predictions(x, y, n, m)) for m in lines]
            line_i, mode = _best(costs)
            counts[lines[line_i]] += 1
            blocks.append({"frame": index, "x": x, "y": y, "line": lines[line_i], "mode": mode,
                           "satd": {m: int(c.min()) for m, c in zip(lines, costs)}})
    return CensusResult(lines, counts, blocks)


# -- quantization error variance --------------------------------------------------------

def error_variance_grid(errors, block_size: int) -> np.ndarray:
    """Per-position variance of error samples over all complete blocks of the given planes."""
    total = np.zeros((block_size, block_size))
    total_sq = np.zeros((block_size, block_size))
    count = 0
    for err in errors:
        err = np.asarray(err, dtype=np.float64)
        h = err.shape[0] - err.shape[0] % block_size
        w = err.shape[1] - err.shape[1] % block_size
        tiles = err[:h, :w].reshape(h // block_size, block_size, w // block_size, block_size)
        total += tiles.sum(axis=(0, 2))
        total_sq += (tiles ** 2).sum(axis=(0, 2))
        count += (h // block_size) * (w // block_size)
    if count == 0:
        raise ConfigError("no complete block of the requested size")
    mean = total / count
    return np.maximum(total_sq / count - mean ** 2, 0.0)


def quant_error_variance_map(frames, qp: int, block_size: int = 8, lossless: bool = False,
                             line_mode: str = "single") -> np.ndarray:
    """Variance of the luma reconstruction error at each position of ``block_size`` CUs.

    The CU size is forced to ``block_size`` so every block is one transform
    unit; there are no in-loop filters to exclude.
    """
    _check_block_size(block_size, (8, 16, 32))
    config = EncoderConfig(qp=qp, lossless=lossless, line_mode=line_mode, min_cu=block_size,
                           max_cu=block_size, allow_nxn=False)
    frames = _frames(frames)
    _, recons, _ = encode_sequence(frames, config)
    errors = [np.asarray(f.planes[0], dtype=np.int64) - np.asarray(r.planes[0], dtype=np.int64)
              for f, r in zip(frames, recons)]
    return error_variance_grid(errors, block_size)


def border_interior_means(grid: np.ndarray) -> tuple[float, float]:
    """Mean over the outermost ring of positions and mean over the rest."""
    border = np.ones(grid.shape, dtype=bool)
    border[1:-1, 1:-1] = False
    return float(grid[border].mean()), float(grid[~border].mean())


# -- boundary MSE with and without compensation -----------------------------------------

def _block_line_index(n: int) -> np.ndarray:
    return np.minimum.outer(np.arange(n), np.arange(n))


def boundary_mse_report(frames, qp: int = 37, block_size: int = 16,
                        lines=(0, 1, 2, 3), reference_source: str = "compressed") -> dict:
    """Prediction MSE on block lines 0..2 with residue compensation off and on.

    Block line ``k`` is row ``k`` plus column ``k`` (positions whose smaller
    coordinate is ``k``). In each variant every block takes its best
    (line, mode) by SATD, as in the census; blending is off in both so the
    difference isolates the compensation.
    """
    _check_block_size(block_size)
    index = _block_line_index(block_size)
    lines = CodingTools(lines=tuple(lines)).lines
    sums = {"off": np.zeros(_COMPENSATED_LINES), "on": np.zeros(_COMPENSATED_LINES)}
    counts = np.zeros(_COMPENSATED_LINES)
    further = {"off": 0, "on": 0}
    blocks = 0
    for frame in _frames(frames):
        reference = frame if reference_source == "original" else _compressed(frame, qp)
        predictors = {"off": _CausalPredictor(reference, lines, compensation=False),
                      "on": _CausalPredictor(reference, lines, compensation=True)}
        orig = np.asarray(frame.planes[0], dtype=np.int64)
        for x, y in _blocks(frame, block_size):
            block = orig[y:y + block_size, x:x + block_size]
            blocks += 1
            for k in range(_COMPENSATED_LINES):
                counts[k] += np.count_nonzero(index == k)
            for variant, predictor in predictors.items():
                preds = [predictor.predictions(x, y, block_size, m) for m in lines]
                line_i, mode = _best([satd(block - p) for p in preds])
                further[variant] += lines[line_i] > 0
                err = (block - preds[line_i][mode]) ** 2
                for k in range(_COMPENSATED_LINES):
                    sums[variant][k] += err[index == k].sum()
    return {
        "block_size": block_size,
        "blocks": blocks,
        "mse_off": [float(v) for v in sums["off"] / counts],
        "mse_on": [float(v) for v in sums["on"] / counts],
        "further_off": further["off"],
        "further_on": further["on"],
    }


# -- subset sweep -----------------------------------------------------------------------

def _sweep_one(frames, qp, subset):
    config = EncoderConfig(qp=qp, line_mode="custom", lines=subset)
    data, _, stats = encode_sequence(frames, config)
    return config.alphabet, stats.bits, sum(stats.sse), len(data)


def subset_sweep(frames, qp: int, subsets=DEFAULT_SUBSETS, workers: int = 1) -> list[dict]:
    """Encode with each line subset at a fixed QP; bits, distortion and RD cost per subset.

    The single-line encode always comes first and is the baseline of
    ``cost_change_pct``. With ``workers > 1`` the encodes run in separate
    processes; the output does not depend on the worker count.
    """
    frames = _frames(frames)
    lam = lambda_for_qp(qp)
    subsets = [tuple(sorted(s)) for s in subsets]
    jobs = [(0,)] + [s for s in subsets if s != (0,)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_one, [frames] * len(jobs), [qp] * len(jobs), jobs))
    else:
        results = [_sweep_one(frames, qp, s) for s in jobs]
    rows = [{"subset": "".join(f"L{m}" for m in alphabet), "bits": bits, "sse": sse,
             "cost": sse + lam * bits, "bytes": size}
            for alphabet, bits, sse, size in results]
    base = rows[0]["cost"]
    for row in rows:
        row["cost_change_pct"] = 100.0 * (row["cost"] - base) / base
    return rows


# -- rate-distortion summary ------------------------------------------------------------

def psnr(sse: float, samples: int, bit_depth: int = 8) -> float:
    peak = (1 << bit_depth) - 1
    if sse == 0:
        return float("inf")
    return 10.0 * np.log10(peak * peak * samples / sse)


def bd_rate(rates_ref, psnr_ref, rates_test, psnr_test) -> float:
    """Average bit-rate difference (percent) of ``test`` versus ``ref`` at equal quality.

    Cubic fits of log-rate over PSNR, integrated over the overlapping PSNR
    interval. Negative means the test points need fewer bits.
    """
    if min(len(rates_ref), len(rates_test)) < 4:
        raise ConfigError("BD-rate needs at least four points per curve")
    lr_ref, lr_test = np.log(np.asarray(rates_ref, float)), np.log(np.asarray(rates_test, float))
    p_ref, p_test = np.asarray(psnr_ref, float), np.asarray(psnr_test, float)
    fit_ref = np.polyfit(p_ref, lr_ref, 3)
    fit_test = np.polyfit(p_test, lr_test, 3)
    lo = max(p_ref.min(), p_test.min())
    hi = min(p_ref.max(), p_test.max())
    if hi <= lo:
        raise ConfigError("RD curves do not overlap in quality")
    int_ref = np.polyval(np.polyint(fit_ref), hi) - np.polyval(np.polyint(fit_ref), lo)
    int_test = np.polyval(np.polyint(fit_test), hi) - np.polyval(np.polyint(fit_test), lo)
    return float((np.exp((int_test - int_ref) / (hi - lo)) - 1) * 100)


# -- CSV --------------------------------------------------------------------------------

def _csv(fields, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fields)
    writer.writerows(rows)
    return buf.getvalue()


def census_csv(result: CensusResult) -> str:
    pct = result.percentages
    return _csv(("line", "blocks", "percent"),
                [(f"L{m}", result.counts[m], f"{pct[m]:.4f}") for m in result.lines])


def variance_csv(grid: np.ndarray) -> str:
    return _csv(("row", "col", "variance"),
                [(r, c, f"{grid[r, c]:.6f}") for r in range(grid.shape[0])
                 for c in range(grid.shape[1])])


def boundary_csv(report: dict) -> str:
    return _csv(("block_line", "mse_off", "mse_on"),
                [(k, f"{off:.6f}", f"{on:.6f}")
                 for k, (off, on) in enumerate(zip(report["mse_off"], report["mse_on"]))])


def sweep_csv(rows: list[dict]) -> str:
    return _csv(("subset", "bits", "sse", "cost", "cost_change_pct"),
                [(r["subset"], r["bits"], r["sse"], f"{r['cost']:.4f}",
                  f"{r['cost_change_pct']:.4f}") for r in rows])
