#!/usr/bin/env python3
"""Convert the digits bundled in the npm `mnist` package (MIT) to gzipped IDX.

Usage: convert_npm_mnist.py <package>/src/digits <out_dir>

Pixels are stored there as round(byte / 255, 3); all 256 levels stay distinct,
so round(v * 255) recovers the original byte. Records are interleaved
round-robin over the digits so every prefix is class-balanced.
"""
import gzip
import json
import struct
import sys
from pathlib import Path

src, out = Path(sys.argv[1]), Path(sys.argv[2])
digits = []
for d in range(10):
    raw = json.loads((src / f"{d}.json").read_text())["data"]
    n = len(raw) // 784
    digits.append([bytes(round(v * 255) for v in raw[i * 784:(i + 1) * 784]) for i in range(n)])

images, labels = [], []
for i in range(max(len(x) for x in digits)):
    for d in range(10):
        if i < len(digits[d]):
            images.append(digits[d][i])
            labels.append(d)

with gzip.GzipFile(out / "mnist-images-idx3-ubyte.gz", "wb", mtime=0) as f:
    f.write(struct.pack(">IIII", 0x803, len(images), 28, 28))
    for img in images:
        f.write(img)
with gzip.GzipFile(out / "mnist-labels-idx1-ubyte.gz", "wb", mtime=0) as f:
    f.write(struct.pack(">II", 0x801, len(labels)))
    f.write(bytes(labels))
print(len(images), "images")
