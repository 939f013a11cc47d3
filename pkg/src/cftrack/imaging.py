"""Frame decoding, rectangle geometry, patch extraction and resizing.

Images are plain 2-D float64 arrays (rows, cols) with intensities in [0, 1].
Rectangles are center-based; conversions to corner form are explicit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError

# ITU-R BT.601 luminance weights for RGB -> gray.
_LUMA = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle with real-valued center (cx, cy) and extents w, h."""

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"rect extents must be positive, got w={self.w}, h={self.h}")

    @classmethod
    def from_corner(cls, x: float, y: float, w: float, h: float) -> "Rect":
        return cls(x + w / 2.0, y + h / 2.0, w, h)

    def corner(self) -> tuple[float, float, float, float]:
        """(x, y, w, h) with (x, y) the top-left corner."""
        return (self.cx - self.w / 2.0, self.cy - self.h / 2.0, self.w, self.h)

    def scaled(self, factor: float) -> "Rect":
        """Same center, extents multiplied by factor."""
        return Rect(self.cx, self.cy, self.w * factor, self.h * factor)


@dataclass(frozen=True)
class Patch:
    """Pixel crop plus the rectangle it was sampled from."""

    pixels: np.ndarray
    source: Rect


def load_frame(path) -> np.ndarray:
    """Decode an image file to a grayscale float array in [0, 1].

    RGB inputs are reduced with luminance weights 0.299/0.587/0.114 in float,
    before any quantization. Raises OSError for unreadable files and
    ValueError for files that are not a decodable image.
    """
    try:
        with Image.open(path) as im:
            im.load()
            if im.mode in ("L", "I", "I;16", "F"):
                arr = np.asarray(im, dtype=np.float64)
                if im.mode == "L":
                    arr = arr / 255.0
                elif im.mode in ("I", "I;16"):
                    arr = arr / 65535.0
            else:
                rgb = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
                arr = rgb @ _LUMA
    except UnidentifiedImageError as exc:
        raise ValueError(f"unsupported image format: {path}") from exc
    return np.clip(arr, 0.0, 1.0)


def extract_patch(img: np.ndarray, r: Rect) -> Patch:
    """Crop a rectangle from the image, replicating edge pixels out of bounds.

    Output size is round(r.h) x round(r.w). Sampling is on the integer pixel
    grid; sub-pixel centers are floored, matching the usual search-window
    convention.
    """
    out_w = max(int(round(r.w)), 1)
    out_h = max(int(round(r.h)), 1)
    xs = int(np.floor(r.cx)) + np.arange(out_w) - out_w // 2
    ys = int(np.floor(r.cy)) + np.arange(out_h) - out_h // 2
    xs = np.clip(xs, 0, img.shape[1] - 1)
    ys = np.clip(ys, 0, img.shape[0] - 1)
    return Patch(pixels=img[np.ix_(ys, xs)], source=r)


def _resize_axis_coords(n_src: int, n_dst: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Bilinear source indices and weights for one axis (pixel-center convention)."""
    src = (np.arange(n_dst) + 0.5) * (n_src / n_dst) - 0.5
    src = np.clip(src, 0.0, n_src - 1.0)
    i0 = np.floor(src).astype(int)
    i1 = np.minimum(i0 + 1, n_src - 1)
    frac = src - i0
    return i0, i1, frac


def resize_bilinear(arr: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize of a 2-D array. Constant inputs map to constant outputs."""
    if arr.shape == (out_h, out_w):
        return arr.copy()
    y0, y1, fy = _resize_axis_coords(arr.shape[0], out_h)
    x0, x1, fx = _resize_axis_coords(arr.shape[1], out_w)
    top = arr[y0][:, x0] * (1 - fx) + arr[y0][:, x1] * fx
    bot = arr[y1][:, x0] * (1 - fx) + arr[y1][:, x1] * fx
    return top * (1 - fy)[:, None] + bot * fy[:, None]


def resize_patch(p: Patch, out_w: int, out_h: int) -> Patch:
    if out_w < 1 or out_h < 1:
        raise ValueError("output size must be at least 1x1")
    return Patch(pixels=resize_bilinear(p.pixels, out_h, out_w), source=p.source)


def sample_window(img: np.ndarray, cx: float, cy: float, w: float, h: float,
                  out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resample of the window centered at (cx, cy) with extents (w, h).

    Unlike extract_patch + resize_patch this keeps sub-pixel alignment, which
    the particle likelihoods rely on. Out-of-bounds reads clamp to the edge.
    """
    return sample_windows(img, np.array([[cx, cy]]), np.array([[w, h]]), out_h, out_w)[0]


def sample_windows(img: np.ndarray, centers: np.ndarray, sizes: np.ndarray,
                   out_h: int, out_w: int) -> np.ndarray:
    """Batched sample_window: centers (M, 2) as (cx, cy), sizes (M, 2) as (w, h).

    Returns an (M, out_h, out_w) stack.
    """
    centers = np.asarray(centers, dtype=np.float64)
    sizes = np.asarray(sizes, dtype=np.float64)
    u = (np.arange(out_w) + 0.5) / out_w  # relative positions in the window
    v = (np.arange(out_h) + 0.5) / out_h
    # source coordinates per window: left + u * w - 0.5 (pixel-center convention)
    sx = (centers[:, 0, None] - sizes[:, 0, None] / 2.0) + u[None, :] * sizes[:, 0, None] - 0.5
    sy = (centers[:, 1, None] - sizes[:, 1, None] / 2.0) + v[None, :] * sizes[:, 1, None] - 0.5
    sx = np.clip(sx, 0.0, img.shape[1] - 1.0)
    sy = np.clip(sy, 0.0, img.shape[0] - 1.0)
    x0 = np.floor(sx).astype(int)
    y0 = np.floor(sy).astype(int)
    x1 = np.minimum(x0 + 1, img.shape[1] - 1)
    y1 = np.minimum(y0 + 1, img.shape[0] - 1)
    fx = (sx - x0)[:, None, :]          # (M, 1, W)
    fy = (sy - y0)[:, :, None]          # (M, H, 1)
    x0 = x0[:, None, :]
    x1 = x1[:, None, :]
    y0 = y0[:, :, None]
    y1 = y1[:, :, None]
    top = img[y0, x0] * (1 - fx) + img[y0, x1] * fx
    bot = img[y1, x0] * (1 - fx) + img[y1, x1] * fx
    return top * (1 - fy) + bot * fy


def hann_window(w: int, h: int) -> np.ndarray:
    """Separable raised-cosine window of shape (h, w); hann(1) is defined as 1."""
    if w < 1 or h < 1:
        raise ValueError("window size must be at least 1x1")
    return np.outer(_hann1d(h), _hann1d(w))


def _hann1d(n: int) -> np.ndarray:
    if n == 1:
        return np.ones(1)
    k = np.arange(n)
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * k / (n - 1)))
