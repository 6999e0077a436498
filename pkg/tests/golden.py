"""Fixed inputs and frozen SHA-256 digests of their streams."""

import hashlib
import json
from pathlib import Path

from mlintra.corpus import directional_grating, natural_frame, noisy_grating
from mlintra.encoder import EncoderConfig, encode_frame

GOLDEN_PATH = Path(__file__).with_name("golden_streams.json")
QPS = (22, 37)
LINE_MODES = ("single", "full4", "fast3")


def golden_inputs():
    return {
        "grating": directional_grating(64, 64, angle=35.0, period=10.0),
        "noisy": noisy_grating(64, 64, angle=120.0, period=9.0, sigma=6.0, seed=99),
        "rocket": natural_frame("rocket", 64),
    }


def stream_digests():
    out = {}
    for name, frame in golden_inputs().items():
        for qp in QPS:
            for mode in LINE_MODES:
                data = encode_frame(frame, EncoderConfig(qp=qp, line_mode=mode))[0]
                out[f"{name}/qp{qp}/{mode}"] = hashlib.sha256(data).hexdigest()
    return out


def load_golden():
    return json.loads(GOLDEN_PATH.read_text())
