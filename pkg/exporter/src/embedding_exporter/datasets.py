"""Benchmark corpus loaders with a local download cache.

Each loader returns (texts, labels, class_names) with labels contiguous from
0. Multi-field documents (title + body) are joined with a single space.

AG news and DBPedia come from the classic topic-classification CSV archives
(label,title,body rows, 1-based labels); 20NewsGroups comes through
scikit-learn's fetcher. Archives are cached under the cache directory and
never re-downloaded once extracted. Download URLs can be overridden with the
EXPORTER_AGNEWS_URL / EXPORTER_DBPEDIA_URL environment variables for mirrors.
"""

from __future__ import annotations

import csv
import os
import sys
import tarfile
from pathlib import Path

import numpy as np

from .errors import DownloadFailure

AGNEWS_URL = "https://s3.amazonaws.com/fast-ai-nlp/ag_news_csv.tgz"
DBPEDIA_URL = "https://s3.amazonaws.com/fast-ai-nlp/dbpedia_csv.tgz"

AGNEWS_CLASSES = ["World", "Sports", "Business", "Sci/Tech"]
DBPEDIA_CLASSES = [
    "Company", "EducationalInstitution", "Artist", "Athlete", "OfficeHolder",
    "MeanOfTransportation", "Building", "NaturalPlace", "Village", "Animal",
    "Plant", "Album", "Film", "WrittenWork",
]


def default_cache_dir() -> Path:
    if "EXPORTER_CACHE" in os.environ:
        return Path(os.environ["EXPORTER_CACHE"])
    return Path.home() / ".cache" / "embedding-exporter"


def _download(url: str, dest: Path) -> None:
    import requests

    dest.parent.mkdir(parents=True, exist_ok=True)
    tmp = dest.with_suffix(dest.suffix + ".part")
    try:
        with requests.get(url, stream=True, timeout=120) as resp:
            resp.raise_for_status()
            with open(tmp, "wb") as fh:
                for chunk in resp.iter_content(chunk_size=1 << 20):
                    fh.write(chunk)
        os.replace(tmp, dest)
    except (OSError, requests.RequestException) as exc:
        tmp.unlink(missing_ok=True)
        raise DownloadFailure(f"cannot download {url}: {exc}") from exc


def _safe_extract(archive: Path, target: Path) -> None:
    """Extract a tar archive, refusing members that escape the target dir."""
    try:
        with tarfile.open(archive) as tar:
            if sys.version_info >= (3, 12):
                tar.extractall(target, filter="data")
            else:
                base = target.resolve()
                for member in tar.getmembers():
                    dest = (target / member.name).resolve()
                    if not dest.is_relative_to(base):
                        raise DownloadFailure(f"archive member escapes target: {member.name}")
                tar.extractall(target)
    except tarfile.TarError as exc:
        raise DownloadFailure(f"cannot extract {archive}: {exc}") from exc


def _fetch_csv_archive(name: str, url: str, inner_dir: str, cache_dir: Path) -> Path:
    """Directory containing train.csv/test.csv, downloading and extracting once."""
    extracted = cache_dir / inner_dir
    if not (extracted / "train.csv").exists():
        archive = cache_dir / f"{name}.tgz"
        if not archive.exists():
            _download(url, archive)
        _safe_extract(archive, cache_dir)
    if not (extracted / "train.csv").exists():
        raise DownloadFailure(f"{name} archive did not contain {inner_dir}/train.csv")
    return extracted


def _read_topic_csv(path: Path, num_classes: int):
    """label,title,body rows with 1-based labels and backslash-escaped text."""
    texts, labels = [], []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for row in csv.reader(fh):
            if not row:
                continue
            label = int(row[0]) - 1
            if not 0 <= label < num_classes:
                raise DownloadFailure(f"{path}: label {row[0]} outside 1..{num_classes}")
            body = " ".join(field.replace("\\n", " ").replace('\\"', '"') for field in row[1:])
            texts.append(body.strip())
            labels.append(label)
    return texts, np.asarray(labels, dtype=np.int64)


def load_agnews(split: str, cache_dir: Path):
    folder = _fetch_csv_archive("ag_news", os.environ.get("EXPORTER_AGNEWS_URL", AGNEWS_URL),
                                "ag_news_csv", cache_dir)
    texts, labels = _read_topic_csv(folder / f"{split}.csv", len(AGNEWS_CLASSES))
    return texts, labels, list(AGNEWS_CLASSES)


def load_dbpedia(split: str, cache_dir: Path):
    folder = _fetch_csv_archive("dbpedia", os.environ.get("EXPORTER_DBPEDIA_URL", DBPEDIA_URL),
                                "dbpedia_csv", cache_dir)
    texts, labels = _read_topic_csv(folder / f"{split}.csv", len(DBPEDIA_CLASSES))
    return texts, labels, list(DBPEDIA_CLASSES)


def load_20news(split: str, cache_dir: Path):
    try:
        from sklearn.datasets import fetch_20newsgroups
    except ImportError as exc:
        raise DownloadFailure("20news needs scikit-learn (pip install scikit-learn)") from exc
    try:
        bundle = fetch_20newsgroups(subset=split, data_home=str(cache_dir / "20news"))
    except Exception as exc:  # sklearn raises plain Exceptions on download failure
        raise DownloadFailure(f"cannot fetch 20news: {exc}") from exc
    return list(bundle.data), np.asarray(bundle.target, dtype=np.int64), list(bundle.target_names)


LOADERS = {
    "20news": load_20news,
    "agnews": load_agnews,
    "dbpedia": load_dbpedia,
}


def load_dataset(name: str, split: str, cache_dir: Path | None = None):
    """(texts, labels, class_names) for a benchmark corpus split."""
    if name not in LOADERS:
        raise ValueError(f"unknown dataset {name!r}, expected one of {sorted(LOADERS)}")
    if split not in ("train", "test"):
        raise ValueError(f'split must be "train" or "test", got {split!r}')
    return LOADERS[name](split, cache_dir or default_cache_dir())
