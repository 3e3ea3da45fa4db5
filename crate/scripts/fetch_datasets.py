#!/usr/bin/env python3
"""Fetch the UCI benchmark datasets into the data directory.

The UCI archive is not always reachable, so the files are rebuilt from
source distributions on PyPI that vendor byte-identical copies of the
original tables. Every archive and every generated file is checked
against a pinned SHA-256.

The thyroid ann-train/ann-test files are not vendored by any package we
know of. Download them from the UCI thyroid-disease directory and place
ann-train.data and ann-test.data in the data directory by hand.

Usage: scripts/fetch_datasets.py [DATA_DIR]   (default: $DIFFBOOST_DATA_DIR or ./data)
"""

import csv
import hashlib
import io
import os
import sys
import tarfile
import urllib.request
import zipfile

PYPI = "https://files.pythonhosted.org/packages"

ARCHIVES = {
    "orange": (
        PYPI + "/7d/a7/cd5c54f8e7c4f1c4ae16eefc9ff837d00266f50e3d9d0d50a3374b704274/Orange-2.7.tar.gz",
        "c2bdb02dc56640fc0debe6146d50a0b39cb75bafd99481c4c833549fa84dcec9",
    ),
    "pydataset": (
        PYPI + "/4f/15/548792a1bb9caf6a3affd61c64d306b08c63c8a5a49e2c2d931b67ec2108/pydataset-0.2.0.tar.gz",
        "e12a7b8a21fea3fc50ef93f13bd0819f820826d4078f791c2abe40fe8be04c0b",
    ),
    "imbalanced": (
        PYPI + "/9e/44/5bc6bf4d05a19e711fcdbceb0f4fcc48b46b85d3f140285bacafee2a40d8/imbalanced_databases-0.1.1-py3-none-any.whl",
        "9fc58c203f1adfebe54bef86d4b3dfe1f6f9f027a9ef35d47031981997391add",
    ),
}

# SHA-256 of the generated files.
OUTPUTS = {
    "breast-cancer-wisconsin.data": "402c585309c399237740f635ef9919dc512cca12cbeb20de5e563a4593f22b64",
    "pima-indians-diabetes.data": "33e704cdafa8769a75728e4658dcce5bc1da1ce36174603687fe545f46e39394",
    "monks-1.train": "d9c328b6f0e095ab10f7bc8468f1d2141f3d08be73e665c3bf0a62994c922606",
    "monks-1.test": "e501ada3b21d876ab86f3e1614747bd2edc443a685f229a25e480aa1dea629f6",
    "monks-2.train": "7ebcc278005737caad0cd52e6aa31256a2c3174da8047faf4ac3a9d35edbdaa8",
    "monks-2.test": "945650affde377c27f6218c8b17893e339ea831f4bee9f9d7123020699cfbf40",
    "monks-3.train": "726f258f80be06af4bb2d8831789514a663f5813e47429211fe19dcd367966f8",
    "monks-3.test": "1d816ae7347afaf895050667adc3f382904c6ed2332d0a2d09353f5e6cb54612",
}


def sha256(data):
    return hashlib.sha256(data).hexdigest()


def fetch(name, cache):
    url, digest = ARCHIVES[name]
    path = os.path.join(cache, url.rsplit("/", 1)[1])
    if not os.path.exists(path):
        print(f"downloading {url}", file=sys.stderr)
        with urllib.request.urlopen(url) as resp:
            data = resp.read()
        with open(path, "wb") as f:
            f.write(data)
    with open(path, "rb") as f:
        data = f.read()
    if sha256(data) != digest:
        sys.exit(f"checksum mismatch for {path}")
    return data


def tar_member(data, suffix):
    with tarfile.open(fileobj=io.BytesIO(data)) as tar:
        for member in tar.getmembers():
            if member.name.endswith(suffix):
                return tar.extractfile(member).read().decode()
    sys.exit(f"{suffix} not found in archive")


def build_breast_cancer(pydataset):
    resources = None
    with tarfile.open(fileobj=io.BytesIO(pydataset)) as tar:
        for member in tar.getmembers():
            if member.name.endswith("pydataset/resources.tar.gz"):
                resources = tar.extractfile(member).read()
    text = tar_member(resources, "rdata/csv/MASS/biopsy.csv")
    rows = list(csv.reader(io.StringIO(text)))[1:]
    out = []
    for row in rows:
        ident, values, label = row[1], row[2:11], row[11]
        values = ["?" if v == "NA" else v for v in values]
        code = {"benign": "2", "malignant": "4"}[label]
        out.append(",".join([ident, *values, code]))
    return "\n".join(out) + "\n"


def build_pima(wheel):
    with zipfile.ZipFile(io.BytesIO(wheel)) as zf:
        text = zf.read("imbalanced_databases/data/pima/pima.dat").decode()
    out = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("@"):
            continue
        *values, label = [v.strip() for v in line.split(",")]
        out.append(",".join([*values, {"positive": "1", "negative": "0"}[label]]))
    return "\n".join(out) + "\n"


def build_monks(orange, index, part):
    text = tar_member(orange, f"Orange/datasets/monks-{index}_{part}.tab")
    out = []
    for line in text.splitlines()[3:]:
        if not line.strip():
            continue
        fields = line.split("\t")
        out.append(" " + " ".join(fields))
    return "\n".join(out) + "\n"


def main():
    default = os.environ.get("DIFFBOOST_DATA_DIR", "data")
    data_dir = sys.argv[1] if len(sys.argv) > 1 else default
    cache = os.path.join(data_dir, ".cache")
    os.makedirs(cache, exist_ok=True)

    orange = fetch("orange", cache)
    pydataset = fetch("pydataset", cache)
    imbalanced = fetch("imbalanced", cache)

    files = {
        "breast-cancer-wisconsin.data": build_breast_cancer(pydataset),
        "pima-indians-diabetes.data": build_pima(imbalanced),
    }
    for index in (1, 2, 3):
        files[f"monks-{index}.train"] = build_monks(orange, index, "learn")
        files[f"monks-{index}.test"] = build_monks(orange, index, "test")

    for name, text in files.items():
        data = text.encode()
        expected = OUTPUTS.get(name)
        if expected is not None and sha256(data) != expected:
            sys.exit(f"generated {name} does not match its pinned checksum")
        with open(os.path.join(data_dir, name), "wb") as f:
            f.write(data)
        print(f"{sha256(data)}  {name}")

    for name in ("ann-train.data", "ann-test.data"):
        if not os.path.exists(os.path.join(data_dir, name)):
            print(
                f"missing {name}: download it from the UCI thyroid-disease "
                f"directory into {data_dir}/",
                file=sys.stderr,
            )


if __name__ == "__main__":
    main()
