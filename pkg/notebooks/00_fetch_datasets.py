"""
Fetch the public LIBSVM datasets
================================

Downloads a9a, ijcnn1, letter and cod-rna from the LIBSVM dataset page into
``$NONDECOMP_DATA_DIR`` (default ``./data``). The repository itself only ships
a tiny test fixture. Run once:

    python notebooks/00_fetch_datasets.py [--dest DIR] [name ...]

Label conventions once parsed with ``nondecomp.data.load_libsvm``:

* a9a, ijcnn1, cod-rna: binary, "0"/"-1" become -1.
* letter: 26 classes; pass ``positive_class=1`` (letter A, about 4% of rows).
* a9a.t has 122 features, a9a has 123; load both with ``expected_dim=123``.
"""
import argparse
import bz2
import os
import shutil
import sys
import urllib.request
from pathlib import Path

BASE = "https://www.csie.ntu.edu.tw/~cjlin/libsvmtools/datasets"

# name -> list of (remote path, local file name)
FILES = {
    "a9a": [("binary/a9a", "a9a"), ("binary/a9a.t", "a9a.t")],
    "ijcnn1": [("binary/ijcnn1.bz2", "ijcnn1"), ("binary/ijcnn1.t.bz2", "ijcnn1.t")],
    "letter": [("multiclass/letter.scale", "letter"), ("multiclass/letter.scale.t", "letter.t")],
    "cod-rna": [("binary/cod-rna", "cod-rna"), ("binary/cod-rna.t", "cod-rna.t")],
}


def fetch(remote, dest):
    if dest.exists():
        print(f"have {dest}")
        return
    url = f"{BASE}/{remote}"
    print(f"get  {url}")
    tmp = dest.with_suffix(dest.suffix + ".part")
    with urllib.request.urlopen(url, timeout=60) as resp, open(tmp, "wb") as fh:
        src = bz2.open(resp) if remote.endswith(".bz2") else resp
        shutil.copyfileobj(src, fh)
    os.replace(tmp, dest)


def main(argv=None):
    ap = argparse.ArgumentParser(description="Download LIBSVM datasets.")
    ap.add_argument("names", nargs="*", help="any of " + ", ".join(sorted(FILES)) + " (default all)")
    ap.add_argument("--dest", default=os.environ.get("NONDECOMP_DATA_DIR", "data"))
    args = ap.parse_args(argv)
    unknown = set(args.names) - set(FILES)
    if unknown:
        ap.error(f"unknown dataset(s): {', '.join(sorted(unknown))}")
    dest = Path(args.dest)
    dest.mkdir(parents=True, exist_ok=True)
    for name in args.names or sorted(FILES):
        for remote, local in FILES[name]:
            try:
                fetch(remote, dest / local)
            except OSError as exc:
                print(f"failed: {remote}: {exc}", file=sys.stderr)
                return 1
    print(f"done; export NONDECOMP_DATA_DIR={dest.resolve()}")


if __name__ == "__main__":
    sys.exit(main())
