"""Regenerate tests/golden_streams.json. Only run when the stream format changes on purpose."""

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from golden import GOLDEN_PATH, stream_digests  # noqa: E402

if __name__ == "__main__":
    GOLDEN_PATH.write_text(json.dumps(stream_digests(), indent=2, sort_keys=True) + "\n")
    print(f"wrote {GOLDEN_PATH}")
