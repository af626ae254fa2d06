"""Download the Airfoil and NO2 tables into ``data/``.

Usage: python3 scripts/fetch_datasets.py [--dest DIR]

The library itself never touches the network; run this once on a machine
with internet access (or copy the files by hand) before the real-data
experiments and acceptance checks.
"""
import argparse
import hashlib
import sys
import urllib.request
from pathlib import Path

SOURCES = {
    "airfoil_self_noise.dat": [
        "https://archive.ics.uci.edu/ml/machine-learning-databases/00291/airfoil_self_noise.dat",
    ],
    "NO2.dat": [
        "http://lib.stat.cmu.edu/datasets/NO2.dat",
    ],
}
EXPECTED_ROWS = {"airfoil_self_noise.dat": 1503, "NO2.dat": 500}


def fetch(name, urls, dest):
    for url in urls:
        try:
            with urllib.request.urlopen(url, timeout=60) as resp:
                blob = resp.read()
        except OSError as err:
            print(f"  {url}: {err}", file=sys.stderr)
            continue
        rows = sum(1 for line in blob.decode().splitlines() if line.strip())
        if rows != EXPECTED_ROWS[name]:
            print(f"  {url}: expected {EXPECTED_ROWS[name]} rows, got {rows}", file=sys.stderr)
            continue
        (dest / name).write_bytes(blob)
        print(f"{name}: {rows} rows, sha256 {hashlib.sha256(blob).hexdigest()[:16]}")
        return True
    return False


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--dest", default=str(Path(__file__).resolve().parents[1] / "data"))
    args = p.parse_args()
    dest = Path(args.dest)
    dest.mkdir(parents=True, exist_ok=True)
    failed = [n for n, urls in SOURCES.items() if not fetch(n, urls, dest)]
    if failed:
        print(f"could not fetch: {', '.join(failed)}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
