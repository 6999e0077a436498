"""Stream parser and reconstruction.

The decoder replays the CU quadtree, reads each CU's line index, partition,
modes and levels, and rebuilds predictions through the same
:class:`~mlintra.coding.BlockPredictor` the encoder uses.
"""

from __future__ import annotations

import csv
import io

from .bitstream import (HEADER_SIZE, BitReader, BitstreamHeader, decode_levels, decode_line_index,
                        decode_mode)
from .coding import (CTU_SIZE, PART_2NX2N, PART_NXN, BlockPredictor, CodingState, CodingTools,
                     CuSyntax, chroma_line, luma_tus, reconstruct_block)
from .errors import BitstreamError
from .frame import Frame, crop_frame
from .transform import chroma_qp

__all__ = ["decode_frame", "decode_stream", "extract_stream_stats", "stream_stats_csv"]

STATS_FIELDS = ("frame", "x", "y", "size", "part", "line", "mode")


class _FrameDecoder:
    def __init__(self, header: BitstreamHeader, reader: BitReader, reconstruct: bool = True):
        self.header = header
        self.reader = reader
        self.tools = CodingTools.from_header(header)
        self.reconstruct = reconstruct
        pw = -(-header.width // CTU_SIZE) * CTU_SIZE
        ph = -(-header.height // CTU_SIZE) * CTU_SIZE
        self.state = CodingState(pw, ph, header.bit_depth, self.tools)
        self.cus: list[CuSyntax] = []

    def run(self) -> None:
        st = self.state
        for y in range(0, st.height, CTU_SIZE):
            for x in range(0, st.width, CTU_SIZE):
                self._tree(x, y, CTU_SIZE)
        self.reader.align()

    def _tree(self, x: int, y: int, size: int) -> None:
        tools = self.tools
        if size > tools.max_cu:
            split = True
        elif size > tools.min_cu:
            split = self._guard(x, y, size, lambda: self.reader.read(1)) == 1
        else:
            split = False
        if split:
            h = size // 2
            for cy, cx in ((y, x), (y, x + h), (y + h, x), (y + h, x + h)):
                self._tree(cx, cy, h)
        else:
            cu = self._guard(x, y, size, lambda: self._parse_cu(x, y, size))
            self.cus.append(cu)
            if self.reconstruct:
                self._reconstruct(cu)

    def _guard(self, x, y, size, fn):
        try:
            return fn()
        except BitstreamError as exc:
            raise BitstreamError(f"CU {size}x{size} at ({x}, {y}): {exc.reason}",
                                 exc.bit_position) from exc

    def _parse_cu(self, x: int, y: int, size: int) -> CuSyntax:
        r, st, tools = self.reader, self.state, self.tools
        line = decode_line_index(r, tools.lines)
        part = PART_2NX2N
        if size == 8 and tools.nxn_enabled and r.read(1):
            part = PART_NXN
        if part == PART_NXN:
            pus = [(px, py, n) for px, py, n, _ in luma_tus(x, y, size, part)]
        else:
            pus = [(x, y, size)]
        modes, mpms = [], []
        for px, py, n in pus:
            mpm = st.mpm(px, py)
            mode = decode_mode(r, mpm)
            if mode > 34:
                raise BitstreamError(f"invalid intra mode {mode}", r.position)
            st.set_pu(px, py, n, mode)
            modes.append(mode)
            mpms.append(mpm)
        levels = [decode_levels(r, n) for _, _, n, _ in luma_tus(x, y, size, part)]
        c = min(size // 2, 32)
        levels += [decode_levels(r, c), decode_levels(r, c)]
        return CuSyntax(x, y, size, line, part, tuple(modes), tuple(mpms), levels)

    def _reconstruct(self, cu: CuSyntax) -> None:
        st, h = self.state, self.header
        qp, bd, lossless = h.qp, h.bit_depth, h.lossless
        for (tx, ty, n, pu), levels in zip(luma_tus(cu.x, cu.y, cu.size, cu.part), cu.levels):
            pred = BlockPredictor(st, 0, tx, ty, n, cu.line).predict(cu.modes[pu])
            st.store(0, tx, ty, reconstruct_block(pred, levels, qp, bd, lossless, n == 4))
        c = min(cu.size // 2, 32)
        for plane, levels in zip((1, 2), cu.levels[-2:]):
            pred = BlockPredictor(st, plane, cu.x // 2, cu.y // 2, c,
                                  chroma_line(cu.line)).predict(cu.modes[0])
            st.store(plane, cu.x // 2, cu.y // 2,
                     reconstruct_block(pred, levels, chroma_qp(qp), bd, lossless, False))

    def frame(self) -> Frame:
        padded = Frame.from_planes(*self.state.recon, bit_depth=self.header.bit_depth)
        return crop_frame(padded, self.header.width, self.header.height)


def _open(bitstream: bytes) -> tuple[BitstreamHeader, BitReader]:
    header = BitstreamHeader.unpack(bitstream)
    return header, BitReader(bitstream, HEADER_SIZE)


def decode_stream(bitstream: bytes) -> list[Frame]:
    """Decode every frame of a stream."""
    header, reader = _open(bitstream)
    frames = []
    for _ in range(header.frame_count):
        dec = _FrameDecoder(header, reader)
        dec.run()
        frames.append(dec.frame())
    return frames


def decode_frame(bitstream: bytes) -> Frame:
    """Decode the first frame of a stream."""
    header, reader = _open(bitstream)
    dec = _FrameDecoder(header, reader)
    dec.run()
    return dec.frame()


def extract_stream_stats(bitstream: bytes) -> list[dict]:
    """Parse-only pass: one row per CU with its size, partition, line and mode(s)."""
    header, reader = _open(bitstream)
    rows = []
    for index in range(header.frame_count):
        dec = _FrameDecoder(header, reader, reconstruct=False)
        dec.run()
        for cu in dec.cus:
            rows.append({"frame": index, "x": cu.x, "y": cu.y, "size": cu.size, "part": cu.part,
                         "line": cu.line, "mode": "/".join(map(str, cu.modes))})
    return rows


def stream_stats_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=STATS_FIELDS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()
