#!/usr/bin/env python3
"""Rebuild data/mnist/*.gz from the 10,000 digits bundled in the npm `mnist` package.

Usage:
    npm pack mnist && tar xzf mnist-*.tgz
    python3 scripts/mnist_from_npm.py package/src/digits data/mnist

The package stores pixels as p/255 rounded to three decimals, which is fine
enough to recover the original bytes exactly with round(v * 255).
"""
import gzip
import json
import struct
import sys
from pathlib import Path


def main(src: Path, dst: Path) -> None:
    images, labels = [], []
    for digit in range(10):
        raw = json.loads((src / f"{digit}.json").read_text())["data"]
        assert len(raw) % 784 == 0
        for i in range(len(raw) // 784):
            px = [int(round(v * 255)) for v in raw[i * 784:(i + 1) * 784]]
            images.append(bytes(px))
            labels.append(digit)
    dst.mkdir(parents=True, exist_ok=True)
    with open(dst / "train-images-idx3-ubyte.gz", "wb") as raw_f:
        with gzip.GzipFile(fileobj=raw_f, mode="wb", mtime=0) as f:
            f.write(struct.pack(">IIII", 0x803, len(images), 28, 28))
            f.write(b"".join(images))
    with open(dst / "train-labels-idx1-ubyte.gz", "wb") as raw_f:
        with gzip.GzipFile(fileobj=raw_f, mode="wb", mtime=0) as f:
            f.write(struct.pack(">II", 0x801, len(labels)))
            f.write(bytes(labels))
    print(f"wrote {len(images)} samples to {dst}")


if __name__ == "__main__":
    main(Path(sys.argv[1]), Path(sys.argv[2]))
