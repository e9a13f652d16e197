"""8-bit PNG image I/O with the canonical [-1, 1] tensor mapping.

Arrays are (C, H, W) float64 in [-1, 1]; 8-bit values map through
v / 127.5 - 1 and back with round-half-up.
"""

import numpy as np
from PIL import Image


def load_image(path) -> np.ndarray:
    """Decode an image file to a (C, H, W) float64 array in [-1, 1]."""
    with Image.open(path) as im:
        if im.mode not in ("L", "RGB"):
            im = im.convert("RGB")
        arr = np.asarray(im, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[None, :, :]
    else:
        arr = arr.transpose(2, 0, 1)
    return arr / 127.5 - 1.0


def save_image(arr: np.ndarray, path):
    """Encode a (C, H, W) array in [-1, 1] as an 8-bit PNG."""
    clipped = np.clip(arr, -1.0, 1.0)
    v = np.floor((clipped + 1.0) * 127.5 + 0.5)
    v = np.clip(v, 0, 255).astype(np.uint8)
    if v.shape[0] == 1:
        im = Image.fromarray(v[0], mode="L")
    else:
        im = Image.fromarray(v.transpose(1, 2, 0), mode="RGB")
    im.save(path, format="PNG")
