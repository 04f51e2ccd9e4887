#!/usr/bin/env python3
"""Fetch the FilmTrust dataset and write the cleaned copy used by the tests.

The raw distribution contains a handful of repeated (user, item) pairs; the
ingest layer treats duplicates as errors, so this script keeps the first
occurrence of each pair and drops the rest. The trust file is copied through
unchanged (the parser deduplicates directed statements itself).

Usage: python3 scripts/prepare_filmtrust.py [--out data/filmtrust]
"""

import argparse
import io
import pathlib
import tarfile
import urllib.request

ARCHIVE_URL = "https://github.com/guoguibing/librec/archive/refs/heads/master.tar.gz"
RATINGS_MEMBER = "librec/demo/Datasets/FilmTrust/ratings.txt"
TRUST_MEMBER = "librec/demo/Datasets/FilmTrust/trust.txt"


def dedup_ratings(text: str) -> str:
    seen = set()
    out = []
    for line in text.splitlines():
        fields = line.split()
        if len(fields) < 3:
            continue
        key = (fields[0], fields[1])
        if key in seen:
            continue
        seen.add(key)
        out.append(f"{fields[0]} {fields[1]} {fields[2]}")
    return "\n".join(out) + "\n"


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data/filmtrust", type=pathlib.Path)
    parser.add_argument("--archive", type=pathlib.Path, default=None,
                        help="Use a local librec source archive instead of downloading")
    args = parser.parse_args()

    if args.archive:
        blob = args.archive.read_bytes()
    else:
        print(f"downloading {ARCHIVE_URL}")
        with urllib.request.urlopen(ARCHIVE_URL) as response:
            blob = response.read()

    with tarfile.open(fileobj=io.BytesIO(blob), mode="r:gz") as tar:
        prefix = tar.getnames()[0].split("/")[0]
        ratings = tar.extractfile(f"{prefix}/{RATINGS_MEMBER}").read().decode()
        trust = tar.extractfile(f"{prefix}/{TRUST_MEMBER}").read().decode()

    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "ratings.txt").write_text(dedup_ratings(ratings))
    trust_lines = [" ".join(l.split()[:2]) for l in trust.splitlines() if len(l.split()) >= 2]
    (args.out / "trust.txt").write_text("\n".join(trust_lines) + "\n")
    print(f"wrote {args.out}/ratings.txt and {args.out}/trust.txt")


if __name__ == "__main__":
    main()
