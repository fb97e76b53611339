"""Binary mask utilities: IoU, bounding boxes, center-anchored part crops and
shared-offset random crops.

Masks are plain 2-D boolean numpy arrays (True = object). All functions are
pure. Conventions that matter downstream and are pinned here:

- IoU of two empty masks is 0.0, so a fully absent component carries no
  weight in the component-adaptive loss.
- Bounding-box centers round with floor((min + max) / 2).
- Part crops are shifted (never shrunk or padded) to stay inside the image,
  so the output is always real pixels at the requested size.
"""

from __future__ import annotations

import numpy as np

PART_NAMES = ("full", "left_eye", "right_eye", "nose", "mouth")
NUM_PARTS = len(PART_NAMES)

# Grayscale mask files use this threshold: pixel >= 128 means object.
MASK_THRESHOLD = 128


def as_mask(arr: np.ndarray) -> np.ndarray:
    """Normalize an 8-bit or boolean array into a boolean mask."""
    arr = np.asarray(arr)
    if arr.ndim != 2:
        raise ValueError(f"mask must be 2-D, got shape {arr.shape}")
    if arr.dtype == bool:
        return arr
    return arr >= MASK_THRESHOLD


def iou(a: np.ndarray, b: np.ndarray) -> float:
    """Intersection over union of two same-size boolean masks, in [0, 1].

    Empty-vs-empty is defined as 0.0: with no visible pixels on either side
    there is no overlap evidence, and the weight it feeds must vanish.
    """
    if a.shape != b.shape:
        raise ValueError(f"mask shapes differ: {a.shape} vs {b.shape}")
    union = np.count_nonzero(a | b)
    if union == 0:
        return 0.0
    inter = np.count_nonzero(a & b)
    return inter / union


def bounding_box(mask: np.ndarray) -> tuple[int, int, int, int] | None:
    """Tightest (row_min, col_min, row_max, col_max) around True pixels.

    Returns None for an empty mask.
    """
    rows = np.flatnonzero(mask.any(axis=1))
    if rows.size == 0:
        return None
    cols = np.flatnonzero(mask.any(axis=0))
    return int(rows[0]), int(cols[0]), int(rows[-1]), int(cols[-1])


def crop_part(image: np.ndarray, mask: np.ndarray, out: tuple[int, int]) -> np.ndarray:
    """Fixed-size crop of (C,H,W) image centered on the mask's bounding box.

    The window is clamped to the image bounds (shifted, not shrunk). An empty
    mask yields an all-zero crop of the requested size.
    """
    if image.ndim != 3:
        raise ValueError(f"image must be (C,H,W), got shape {image.shape}")
    c, h, w = image.shape
    oh, ow = out
    if oh > h or ow > w:
        raise ValueError(f"crop {oh}x{ow} exceeds image {h}x{w}")
    if mask.shape != (h, w):
        raise ValueError(f"mask shape {mask.shape} does not match image {h}x{w}")

    box = bounding_box(mask)
    if box is None:
        return np.zeros((c, oh, ow), dtype=image.dtype)
    r0, c0, r1, c1 = box
    center_r = (r0 + r1) // 2
    center_c = (c0 + c1) // 2
    top = min(max(center_r - oh // 2, 0), h - oh)
    left = min(max(center_c - ow // 2, 0), w - ow)
    return image[:, top : top + oh, left : left + ow]


def synthesize_full_mask(component_masks: np.ndarray) -> np.ndarray:
    """Whole-face stand-in when no explicit face mask exists: the union of
    the four component masks."""
    if component_masks.shape[0] != 4:
        raise ValueError(f"expected 4 component masks, got {component_masks.shape[0]}")
    return component_masks.any(axis=0)


def random_crop(
    image: np.ndarray,
    masks: np.ndarray,
    rng: np.random.Generator,
    out: tuple[int, int] = (128, 128),
    src: tuple[int, int] = (144, 144),
) -> tuple[np.ndarray, np.ndarray]:
    """Random crop of a (C,144,144) image and its (M,144,144) masks.

    One offset is drawn uniformly from [0, src-out] per call and applied to
    the image and every mask, so their alignment is preserved.
    """
    _check_crop_geometry(image, masks, out, src)
    oh, ow = out
    top = int(rng.integers(0, src[0] - oh + 1))
    left = int(rng.integers(0, src[1] - ow + 1))
    return _apply_crop(image, masks, top, left, oh, ow)


def center_crop(
    image: np.ndarray,
    masks: np.ndarray,
    out: tuple[int, int] = (128, 128),
    src: tuple[int, int] = (144, 144),
) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic evaluation-mode crop at the centered offset."""
    _check_crop_geometry(image, masks, out, src)
    oh, ow = out
    top = (src[0] - oh) // 2
    left = (src[1] - ow) // 2
    return _apply_crop(image, masks, top, left, oh, ow)


def _check_crop_geometry(image, masks, out, src):
    if image.ndim != 3 or image.shape[1:] != tuple(src):
        raise ValueError(f"expected (C,{src[0]},{src[1]}) image, got shape {image.shape}")
    if masks.ndim != 3 or masks.shape[1:] != tuple(src):
        raise ValueError(f"expected (M,{src[0]},{src[1]}) masks, got shape {masks.shape}")
    if out[0] > src[0] or out[1] > src[1]:
        raise ValueError(f"crop {out} exceeds source {src}")


def _apply_crop(image, masks, top, left, oh, ow):
    cropped_image = image[:, top : top + oh, left : left + ow]
    cropped_masks = masks[:, top : top + oh, left : left + ow]
    return cropped_image, cropped_masks
