#!/usr/bin/env python3
"""Download the four MNIST IDX files for the full-scale evaluation runs.

The toolkit itself never touches the network; run this once on a machine
with access, then point SPINBAYES_MNIST_DIR at the destination directory
(the loader reads the .gz files directly, no need to decompress):

    python3 docs/fetch_mnist.py --dest data/mnist
    export SPINBAYES_MNIST_DIR=$PWD/data/mnist
"""

import argparse
import gzip
import struct
import sys
import urllib.request
from pathlib import Path

FILES = (
    "train-images-idx3-ubyte.gz",
    "train-labels-idx1-ubyte.gz",
    "t10k-images-idx3-ubyte.gz",
    "t10k-labels-idx1-ubyte.gz",
)

MIRRORS = (
    "https://ossci-datasets.s3.amazonaws.com/mnist/",
    "https://storage.googleapis.com/cvdf-datasets/mnist/",
    "http://yann.lecun.com/exdb/mnist/",
)


def check_idx(path: Path) -> None:
    """Fail loudly on a truncated or non-IDX download."""
    with gzip.open(path, "rb") as fh:
        magic = struct.unpack(">I", fh.read(4))[0]
    if magic >> 16 != 0 or (magic >> 8) & 0xFF != 0x08:
        raise ValueError(f"{path.name}: bad IDX magic 0x{magic:08x}")


def fetch(name: str, dest: Path) -> None:
    target = dest / name
    if target.exists():
        check_idx(target)
        print(f"  {name}: already present, verified")
        return
    last_err: Exception | None = None
    for base in MIRRORS:
        url = base + name
        try:
            print(f"  {name}: fetching {url}")
            with urllib.request.urlopen(url, timeout=60) as resp:
                data = resp.read()
            target.write_bytes(data)
            check_idx(target)
            print(f"  {name}: ok ({len(data) / 1e6:.1f} MB)")
            return
        except Exception as err:  # try the next mirror
            last_err = err
            target.unlink(missing_ok=True)
            print(f"  {name}: {err}")
    raise SystemExit(f"all mirrors failed for {name}: {last_err}")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--dest", default="data/mnist",
                        help="directory to place the IDX files in")
    args = parser.parse_args()
    dest = Path(args.dest)
    dest.mkdir(parents=True, exist_ok=True)
    print(f"downloading into {dest.resolve()}")
    for name in FILES:
        fetch(name, dest)
    print("done; set the environment variable:")
    print(f"  export SPINBAYES_MNIST_DIR={dest.resolve()}")


if __name__ == "__main__":
    sys.exit(main())
