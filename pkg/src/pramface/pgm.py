"""8-bit grayscale PGM files, the on-disk format for images and masks."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image


def write_pgm(path: str | Path, arr: np.ndarray) -> None:
    arr = np.asarray(arr)
    if arr.dtype == bool:
        arr = arr.astype(np.uint8) * 255
    if arr.dtype != np.uint8:
        raise ValueError(f"PGM wants uint8 or bool data, got {arr.dtype}")
    if arr.ndim != 2:
        raise ValueError(f"PGM wants a 2-D array, got shape {arr.shape}")
    Image.fromarray(arr, mode="L").save(str(path), format="PPM")


def read_pgm(path: str | Path) -> np.ndarray:
    with Image.open(str(path)) as img:
        arr = np.asarray(img)
    if arr.ndim != 2 or arr.dtype != np.uint8:
        raise ValueError(f"{path}: expected 8-bit grayscale, got {arr.dtype} shape {arr.shape}")
    return arr
