"""Regenerate the committed natural crops in src/mlintra/data from scikit-image samples.

Needs scikit-image, which the package itself does not depend on.
"""

from pathlib import Path

import skimage.data

from mlintra.corpus import rgb_to_yuv420
from mlintra.frame import write_yuv

SIZE = 128
# name: (sample image, top, left)
CROPS = {
    "astronaut": ("astronaut", 60, 170),
    "coffee": ("coffee", 200, 380),
    "chelsea": ("chelsea", 140, 250),
    "rocket": ("rocket", 150, 270),
    "sky": ("rocket", 40, 400),
    "cup": ("coffee", 120, 200),
}


def main() -> None:
    out = Path(__file__).resolve().parents[1] / "src" / "mlintra" / "data"
    out.mkdir(parents=True, exist_ok=True)
    for name, (sample, top, left) in CROPS.items():
        rgb = getattr(skimage.data, sample)()[top:top + SIZE, left:left + SIZE, :3]
        write_yuv(rgb_to_yuv420(rgb), out / f"{name}.yuv")
        print(f"wrote {name}.yuv")


if __name__ == "__main__":
    main()
