"""Shared fixtures for the urlsleuth test suite."""

from __future__ import annotations

import csv
import os
from typing import Sequence

import numpy as np
import pytest

from urlsleuth.corpus import Dataset, UrlRecord
from urlsleuth.synth import generate_dataset


def write_csv(path: str | os.PathLike[str], rows: Sequence[tuple[str, str]]) -> str:
    """Write a url,label CSV (header included) and return its path."""
    path = os.fspath(path)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["url", "label"])
        writer.writerows(rows)
    return path


def make_dataset(rows: Sequence[tuple[str, int]], id: str = "d0") -> Dataset:
    records = tuple(UrlRecord(url=u, label=y, source_id=id) for u, y in rows)
    return Dataset(id=id, name=id, records=records)


@pytest.fixture(scope="session")
def blob_data() -> tuple[np.ndarray, np.ndarray]:
    """Two well-separated Gaussian blobs: an easy supervised problem."""
    rng = np.random.default_rng(7)
    n = 60
    x0 = rng.normal(loc=-2.0, scale=0.4, size=(n, 4))
    x1 = rng.normal(loc=2.0, scale=0.4, size=(n, 4))
    x = np.vstack([x0, x1])
    y = np.concatenate([np.zeros(n, dtype=np.int64), np.ones(n, dtype=np.int64)])
    order = rng.permutation(2 * n)
    return x[order], y[order]


@pytest.fixture(scope="session")
def noisy_data() -> tuple[np.ndarray, np.ndarray]:
    """A harder overlapping problem for loss-descent and gradient checks."""
    rng = np.random.default_rng(11)
    n = 50
    x = rng.normal(size=(n, 5))
    logits = x @ np.array([1.5, -2.0, 0.5, 0.0, 1.0]) + 0.3
    y = (logits + rng.normal(scale=1.5, size=n) > 0).astype(np.int64)
    if y.min() == y.max():  # pragma: no cover - seed chosen to avoid this
        y[0] = 1 - y[0]
    return x, y


@pytest.fixture(scope="session")
def url_corpus() -> tuple[list[str], np.ndarray]:
    """A small labeled synthetic URL corpus for end-to-end pipeline tests."""
    ds = generate_dataset("fix", n_records=240, malicious_fraction=0.5, seed=41)
    urls = [r.url for r in ds.records]
    labels = np.array([r.label for r in ds.records], dtype=np.int64)
    return urls, labels
