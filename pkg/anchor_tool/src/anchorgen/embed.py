"""Text embedding providers: a deterministic offline fallback and an HTTP
batch client speaking {"texts": [...]} -> {"embeddings": [[...]]}."""

from __future__ import annotations

import hashlib
import json
import time
import urllib.request

import numpy as np


def offline_embed(texts, dim=384):
    """Deterministic stand-in embedder: each text's bytes seed a pseudo-random
    projection, unit-normalized. Same text, same vector, on every machine."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    vectors = []
    for text in texts:
        digest = hashlib.sha256(text.encode("utf-8")).digest()
        seed = int.from_bytes(digest[:8], "little")
        rng = np.random.default_rng(seed)
        v = rng.standard_normal(dim)
        vectors.append(v / np.linalg.norm(v))
    return np.asarray(vectors)


def http_embed(texts, endpoint, dim=None, retries=3, timeout=30.0):
    """POST the batch to an embedding service; retry transient failures."""
    payload = json.dumps({"texts": list(texts)}).encode("utf-8")
    last_error = None
    for attempt in range(retries):
        try:
            request = urllib.request.Request(
                endpoint, data=payload,
                headers={"Content-Type": "application/json"},
            )
            with urllib.request.urlopen(request, timeout=timeout) as response:
                body = json.load(response)
            break
        except Exception as exc:
            last_error = exc
            if attempt + 1 < retries:
                time.sleep(0.5 * (attempt + 1))
    else:
        raise RuntimeError(f"embedding service failed after {retries} tries: "
                           f"{last_error}")
    embeddings = np.asarray(body["embeddings"], dtype=np.float64)
    if embeddings.ndim != 2 or embeddings.shape[0] != len(texts):
        raise RuntimeError(f"service returned shape {embeddings.shape} for "
                           f"{len(texts)} texts")
    if dim is not None and embeddings.shape[1] != dim:
        raise RuntimeError(f"service returned dim {embeddings.shape[1]}, "
                           f"expected {dim}")
    if not np.all(np.isfinite(embeddings)):
        raise RuntimeError("service returned non-finite embeddings")
    return embeddings
