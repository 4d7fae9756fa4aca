"""Loading, validating, and serializing context anchor files.

Anchor file schema (JSON): {"schema": "contextst-anchors/1", "dataset": str,
"dim": int, "global": [...], "variables": {name: [...]}, "source": str}.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from contextst.errors import DataFormatError

SCHEMA = "contextst-anchors/1"


@dataclass(frozen=True)
class ContextAnchors:
    dataset: str
    dim: int
    global_vec: np.ndarray
    variable_vecs: dict
    source: str = ""

    def variable(self, name):
        if name not in self.variable_vecs:
            raise DataFormatError(f"no anchor vector for variable {name!r}")
        return self.variable_vecs[name]

    def zeroed(self) -> "ContextAnchors":
        """Semantics-free copy for the no-context ablation."""
        return ContextAnchors(
            dataset=self.dataset,
            dim=self.dim,
            global_vec=np.zeros(self.dim),
            variable_vecs={k: np.zeros(self.dim) for k in self.variable_vecs},
            source=self.source + " (zeroed)",
        )


def _check_vector(name, vec, dim):
    arr = np.asarray(vec, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] != dim:
        raise DataFormatError(f"anchor {name!r} has length {arr.shape}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise DataFormatError(f"anchor {name!r} contains non-finite entries")
    return arr


def parse_anchors(payload: dict) -> ContextAnchors:
    if payload.get("schema") != SCHEMA:
        raise DataFormatError(f"unknown anchor schema {payload.get('schema')!r}")
    try:
        dim = int(payload["dim"])
        global_vec = _check_vector("global", payload["global"], dim)
        variables = payload["variables"]
    except KeyError as exc:
        raise DataFormatError(f"anchor file missing field {exc}") from None
    variable_vecs = {
        name: _check_vector(name, vec, dim) for name, vec in variables.items()
    }
    return ContextAnchors(
        dataset=str(payload.get("dataset", "")),
        dim=dim,
        global_vec=global_vec,
        variable_vecs=variable_vecs,
        source=str(payload.get("source", "")),
    )


def load_anchors(path, var_names=None) -> ContextAnchors:
    """Read an anchor file; optionally bind-check against dataset variables."""
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    anchors = parse_anchors(payload)
    if var_names is not None:
        missing = [v for v in var_names if v not in anchors.variable_vecs]
        if missing:
            raise DataFormatError(f"anchors missing variables: {missing}")
    return anchors


def write_anchors(anchors: ContextAnchors, path):
    """Canonical writer: fixed key order, variables sorted lexicographically."""
    payload = {
        "schema": SCHEMA,
        "dataset": anchors.dataset,
        "dim": anchors.dim,
        "global": list(map(float, anchors.global_vec)),
        "variables": {
            name: list(map(float, anchors.variable_vecs[name]))
            for name in sorted(anchors.variable_vecs)
        },
        "source": anchors.source,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")
