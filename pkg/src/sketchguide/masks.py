"""Binary masks with a row-major run-length wire encoding.

Masks are 2D numpy bool arrays. The wire form is a dict
{"size": [h, w], "counts": [...]} where counts are run lengths over the
row-major flattened mask, alternating zeros/ones and starting with zeros
(a leading 0 marks a mask that begins with a set pixel).
"""

from __future__ import annotations

import numpy as np

from .errors import DimMismatch


def rle_encode(mask: np.ndarray) -> dict:
    m = np.asarray(mask, dtype=bool)
    if m.ndim != 2:
        raise DimMismatch("mask must be 2D")
    flat = m.ravel()
    counts: list[int] = []
    if flat.size == 0:
        return {"size": [int(m.shape[0]), int(m.shape[1])], "counts": counts}
    changes = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate([[0], changes, [flat.size]])
    runs = np.diff(bounds).tolist()
    if flat[0]:
        counts.append(0)
    counts.extend(int(r) for r in runs)
    return {"size": [int(m.shape[0]), int(m.shape[1])], "counts": counts}


def rle_decode(obj: dict) -> np.ndarray:
    h, w = int(obj["size"][0]), int(obj["size"][1])
    counts = obj["counts"]
    total = sum(counts)
    if total != h * w:
        raise DimMismatch(f"run lengths sum to {total}, expected {h * w}")
    flat = np.zeros(h * w, dtype=bool)
    pos = 0
    value = False
    for run in counts:
        if value:
            flat[pos : pos + run] = True
        pos += run
        value = not value
    return flat.reshape(h, w)


def mask_area(mask: np.ndarray) -> int:
    return int(np.count_nonzero(mask))
