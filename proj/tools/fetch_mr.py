#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Extract the Rotten Tomatoes sentence-polarity data to a `label<TAB>text` file.

The sentences come from the `movie-reviews` package on PyPI, whose bundled CSV
carries the 8530-sentence Rotten Tomatoes portion (balanced, 0 = negative,
1 = positive). Requires pip to reach an index.
"""
import argparse
import csv
import io
import pathlib
import subprocess
import sys
import tempfile
import zipfile

PACKAGE = "movie-reviews==0.0.2"
MEMBER = "movie_reviews/data/combined_movie_reviews.csv"


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data/mr.tsv", type=pathlib.Path)
    args = parser.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run([sys.executable, "-m", "pip", "download", "--no-deps", "-q", "-d", tmp, PACKAGE], check=True)
        wheel = next(pathlib.Path(tmp).glob("*.whl"))
        raw = zipfile.ZipFile(wheel).read(MEMBER).decode("utf-8")

    rows = [r for r in csv.DictReader(io.StringIO(raw)) if r["source"] == "rotten_tomatoes"]
    args.out.parent.mkdir(parents=True, exist_ok=True)
    with args.out.open("w", encoding="utf-8", newline="\n") as f:
        for r in rows:
            text = " ".join(r["text"].split())
            f.write(f"{int(r['label'])}\t{text}\n")
    print(f"wrote {len(rows)} sentences to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
