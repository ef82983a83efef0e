"""Versioned parameter checkpoints shared by all networks.

The on-disk format is an npz archive: float64 parameter arrays keyed by name,
plus a ``__meta__`` JSON blob carrying the format version and whatever shape
header the owning model needs to rebuild itself. float64 bits survive the
round trip exactly.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .errors import MissingFile, ShapeMismatch

FORMAT_VERSION = 1


def save_params(path: str, params: dict[str, np.ndarray], meta: dict) -> None:
    payload = dict(meta)
    payload["format_version"] = FORMAT_VERSION
    arrays = {name: np.asarray(arr) for name, arr in params.items()}
    arrays["__meta__"] = np.frombuffer(
        json.dumps(payload, sort_keys=True).encode(), dtype=np.uint8
    )
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_params(path: str) -> tuple[dict[str, np.ndarray], dict]:
    if not os.path.isfile(path):
        raise MissingFile(path)
    try:
        with np.load(path) as archive:
            arrays = {name: archive[name] for name in archive.files}
    except Exception as exc:
        raise ShapeMismatch(f"unreadable checkpoint {path}: {exc}") from None
    raw_meta = arrays.pop("__meta__", None)
    if raw_meta is None:
        raise ShapeMismatch(f"checkpoint {path} has no metadata header")
    meta = json.loads(raw_meta.tobytes().decode())
    version = meta.pop("format_version", None)
    if version != FORMAT_VERSION:
        raise ShapeMismatch(
            f"checkpoint {path} has format version {version}, expected {FORMAT_VERSION}"
        )
    return arrays, meta
