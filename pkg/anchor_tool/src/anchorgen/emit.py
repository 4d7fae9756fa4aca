"""Build and atomically write anchor files in the schema the forecaster loads:
{"schema": "contextst-anchors/1", "dataset", "dim", "global", "variables",
"source"}."""

from __future__ import annotations

import csv
import json
import os
import tempfile

import numpy as np

from anchorgen.embed import http_embed, offline_embed
from anchorgen.render import DatasetMeta, render_global, render_variable
from anchorgen.stats import compute_stats

SCHEMA = "contextst-anchors/1"


def read_series_csv(path):
    """Load a benchmark CSV (leading "date" column); returns (names, values)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0].strip().lower() != "date":
            raise ValueError(f"{path}: first column must be 'date'")
        names = tuple(h.strip() for h in header[1:])
        rows = []
        for i, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}: row {i} has {len(row)} cells")
            rows.append([float(c) for c in row[1:]])
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return names, np.asarray(rows, dtype=np.float64)


def load_meta(path, var_names) -> tuple:
    """Read the dataset metadata JSON; returns (meta, train_end, descriptions)."""
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    meta = DatasetMeta(
        name=payload["name"],
        domain=payload["domain"],
        frequency=payload["frequency"],
        metadata=payload["metadata"],
        var_names=tuple(var_names),
        prediction_length=int(payload.get("prediction_length", 96)),
        lookback_length=int(payload.get("lookback_length", 96)),
    )
    n = None
    if "train_end" in payload:
        n = int(payload["train_end"])
    ratio = float(payload.get("train_ratio", 0.7))
    return meta, n, ratio, dict(payload.get("descriptions", {}))


def write_anchor_file(path, dataset, dim, global_vec, variable_vecs, source):
    """Canonical atomic write: temp file in the target directory, then rename."""
    payload = {
        "schema": SCHEMA,
        "dataset": dataset,
        "dim": int(dim),
        "global": [float(v) for v in global_vec],
        "variables": {
            name: [float(v) for v in variable_vecs[name]]
            for name in sorted(variable_vecs)
        },
        "source": source,
    }
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=1)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def make_anchors(dataset_path, meta_path, out_path, provider="offline",
                 endpoint=None, dim=384):
    """End-to-end: read data and metadata, render texts, embed, emit."""
    names, values = read_series_csv(dataset_path)
    meta, train_end, ratio, descriptions = load_meta(meta_path, names)
    if train_end is None:
        train_end = int(values.shape[0] * ratio)
    if train_end < 1:
        raise ValueError("empty train segment")

    train = values[:train_end]
    texts = [render_global(meta)]
    for j, name in enumerate(names):
        stats = compute_stats(train[:, j])
        texts.append(render_variable(meta, name, stats, descriptions.get(name)))

    if provider == "offline":
        embeddings = offline_embed(texts, dim=dim)
        source = f"anchorgen offline d={dim} train_end={train_end}"
    elif provider == "http":
        if not endpoint:
            raise ValueError("http provider needs --endpoint")
        embeddings = http_embed(texts, endpoint, dim=dim)
        source = f"anchorgen http {endpoint} train_end={train_end}"
    else:
        raise ValueError(f"unknown provider {provider!r}")

    variable_vecs = {name: embeddings[1 + j] for j, name in enumerate(names)}
    write_anchor_file(out_path, meta.name, embeddings.shape[1], embeddings[0],
                      variable_vecs, source)
    return out_path
