"""Convert the per-digit JSON files of the `mnist` npm package to IDX files.

Usage: python3 tools/digits_to_idx.py PACKAGE_DIR OUT_DIR [--test 1000] [--seed 0]

PACKAGE_DIR is the unpacked package (containing src/digits/0.json .. 9.json).
Writes train/test image and label files in the standard IDX layout.
"""

import argparse
import json
import pathlib
import struct

import numpy as np


def load_digits(package_dir):
    images, labels = [], []
    for digit in range(10):
        path = pathlib.Path(package_dir) / "src" / "digits" / f"{digit}.json"
        flat = np.asarray(json.loads(path.read_text())["data"], dtype=np.float64)
        block = np.rint(flat * 255.0).clip(0, 255).astype(np.uint8).reshape(-1, 28, 28)
        images.append(block)
        labels.append(np.full(len(block), digit, dtype=np.uint8))
    return np.concatenate(images), np.concatenate(labels)


def write_images(path, images):
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x803, len(images), 28, 28))
        f.write(images.tobytes())


def write_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x801, len(labels)))
        f.write(labels.tobytes())


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("package_dir")
    parser.add_argument("out_dir")
    parser.add_argument("--test", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    images, labels = load_digits(args.package_dir)
    order = np.random.default_rng(args.seed).permutation(len(images))
    images, labels = images[order], labels[order]
    n_train = len(images) - args.test

    out = pathlib.Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_images(out / "train-images-idx3-ubyte", images[:n_train])
    write_labels(out / "train-labels-idx1-ubyte", labels[:n_train])
    write_images(out / "t10k-images-idx3-ubyte", images[n_train:])
    write_labels(out / "t10k-labels-idx1-ubyte", labels[n_train:])
    print(f"wrote {n_train} train and {args.test} test digits to {out}")


if __name__ == "__main__":
    main()
