import csv
import io

import pytest

from helpers import planes_equal, random_frame
from mlintra.corpus import natural_frame, smooth_ramp
from mlintra.decoder import decode_frame, decode_stream, extract_stream_stats, stream_stats_csv
from mlintra.encoder import EncoderConfig, encode_sequence
from mlintra.errors import BitstreamError


@pytest.fixture(scope="module")
def two_frame_stream():
    frames = [natural_frame("chelsea", 64), smooth_ramp(64, 64, seed=4)]
    data, recons, stats = encode_sequence(frames, EncoderConfig(qp=27, line_mode="full4"))
    return frames, data, recons, stats


def test_decode_stream_matches_every_reconstruction(two_frame_stream):
    _, data, recons, _ = two_frame_stream
    decoded = decode_stream(data)
    assert len(decoded) == 2
    assert all(planes_equal(a, b) for a, b in zip(decoded, recons))
    assert planes_equal(decode_frame(data), recons[0])


def test_stream_stats_match_encoder_log(two_frame_stream):
    _, data, _, stats = two_frame_stream
    parsed = extract_stream_stats(data)
    logged = [{k: row[k] for k in ("frame", "x", "y", "size", "part", "line", "mode")}
              for row in stats.rows()]
    assert parsed == logged


def test_stream_stats_csv_schema(two_frame_stream):
    _, data, _, stats = two_frame_stream
    rows = list(csv.DictReader(io.StringIO(stream_stats_csv(extract_stream_stats(data)))))
    assert len(rows) == len(stats.records)
    enc_rows = list(csv.DictReader(io.StringIO(stats.to_csv())))
    assert [{k: r[k] for k in rows[0]} for r in enc_rows] == rows


def test_single_line_stream_is_all_l0(rng):
    frame = random_frame(rng, 64, 64, smooth=True)
    data, _, _ = encode_sequence([frame], EncoderConfig(qp=37, line_mode="single"))
    rows = extract_stream_stats(data)
    assert rows and all(r["line"] == 0 for r in rows)


@pytest.mark.parametrize("cut", [40, 60, 100])
def test_truncated_stream_names_the_cu(two_frame_stream, cut):
    _, data, _, _ = two_frame_stream
    with pytest.raises(BitstreamError, match=r"CU \d+x\d+ at \(\d+, \d+\)"):
        decode_stream(data[:cut])


def test_corrupt_header():
    with pytest.raises(BitstreamError):
        decode_frame(b"NOPE" + b"\0" * 40)
