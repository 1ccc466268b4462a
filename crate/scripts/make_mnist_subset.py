#!/usr/bin/env python3
"""Write an uncompressed IDX image/label pair from the MNIST sample bundled in mlxtend.

The sample holds 500 images per digit. By default digits 0 and 1 are kept,
which is what the test fixtures under crates/core/tests/data contain.

    pip download --no-deps mlxtend -d /tmp/mlx
    python3 scripts/make_mnist_subset.py /tmp/mlx/mlxtend-*.whl out-dir [digits...]
"""
import gzip
import io
import struct
import sys
import zipfile
from pathlib import Path

import numpy as np


def main() -> None:
    wheel, out_dir = sys.argv[1], Path(sys.argv[2])
    digits = [int(d) for d in sys.argv[3:]] or [0, 1]
    raw = zipfile.ZipFile(wheel).read("mlxtend/data/data/mnist_5k.csv.gz")
    table = np.loadtxt(io.BytesIO(gzip.decompress(raw)), delimiter=",")
    keep = np.isin(table[:, -1].astype(int), digits)
    pixels = table[keep, :-1].astype(np.uint8)
    labels = table[keep, -1].astype(np.uint8)

    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "mnist-subset-images.idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(pixels), 28, 28))
        f.write(pixels.tobytes())
    with open(out_dir / "mnist-subset-labels.idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(labels.tobytes())
    print(f"wrote {len(pixels)} images for digits {digits} to {out_dir}")


if __name__ == "__main__":
    main()
