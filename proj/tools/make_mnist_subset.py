#!/usr/bin/env python3
"""Write the 5000-image MNIST subset bundled with mlxtend as gzipped IDX files.

Usage: make_mnist_subset.py OUT_DIR [--wheel PATH]

Without --wheel the mlxtend wheel is fetched with `pip download`. The output
is `images-idx3-ubyte.gz` and `labels-idx1-ubyte.gz`, readable by
`amata::load_mnist_idx`.
"""
import argparse
import glob
import gzip
import os
import struct
import subprocess
import tempfile
import zipfile

CSV_MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"


def fetch_wheel(dest):
    subprocess.run(["pip", "download", "mlxtend", "--no-deps", "-d", dest],
                   check=True, stdout=subprocess.DEVNULL)
    return glob.glob(os.path.join(dest, "mlxtend-*.whl"))[0]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out_dir")
    ap.add_argument("--wheel")
    args = ap.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        wheel = args.wheel or fetch_wheel(tmp)
        rows = gzip.decompress(zipfile.ZipFile(wheel).read(CSV_MEMBER)).decode().splitlines()

    images = bytearray()
    labels = bytearray()
    for line in rows:
        values = [int(float(v)) for v in line.split(",")]
        images.extend(bytes(values[:-1]))
        labels.append(values[-1])
    n = len(labels)
    assert len(images) == n * 784

    os.makedirs(args.out_dir, exist_ok=True)
    # mtime=0 keeps the archives byte-stable across regenerations.
    with open(os.path.join(args.out_dir, "images-idx3-ubyte.gz"), "wb") as f:
        f.write(gzip.compress(struct.pack(">IIII", 0x803, n, 28, 28) + bytes(images), mtime=0))
    with open(os.path.join(args.out_dir, "labels-idx1-ubyte.gz"), "wb") as f:
        f.write(gzip.compress(struct.pack(">II", 0x801, n) + bytes(labels), mtime=0))
    print(f"wrote {n} images to {args.out_dir}")


if __name__ == "__main__":
    main()
