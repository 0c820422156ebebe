"""HSV colour histograms and Bhattacharyya distance for re-identification."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .motdata import BoundingBox

__all__ = [
    "HSV_BINS",
    "HsvHistogram",
    "bhattacharyya_distance",
    "box_patch",
    "extract_histogram",
    "patch_from_bytes",
    "rgb_to_hsv",
    "rgb_to_hsv_array",
]

HSV_BINS = (16, 16, 8)
_NORM_TOL = 1e-6


@dataclass(frozen=True)
class HsvHistogram:
    """L1-normalised ``16 x 16 x 8`` histogram over (hue, saturation, value).

    ``degenerate`` marks histograms built from no pixels; they are uniform.
    """

    weights: np.ndarray
    degenerate: bool = False

    def __post_init__(self):
        if self.weights.shape != HSV_BINS:
            raise ValueError(f"histogram shape must be {HSV_BINS}, got {self.weights.shape}")
        if np.any(self.weights < 0):
            raise ValueError("histogram weights must be non-negative")

    @classmethod
    def uniform(cls) -> HsvHistogram:
        n = int(np.prod(HSV_BINS))
        return cls(np.full(HSV_BINS, 1.0 / n), degenerate=True)

    @property
    def total(self) -> float:
        return float(self.weights.sum())


def rgb_to_hsv(r: float, g: float, b: float) -> tuple[float, float, float]:
    """Hexcone HSV. Hue in degrees ``[0, 360)``; achromatic pixels get hue 0."""
    for c in (r, g, b):
        if not (0.0 <= c <= 1.0) or math.isnan(c):
            raise ValueError(f"RGB components must lie in [0, 1], got {(r, g, b)}")
    mx, mn = max(r, g, b), min(r, g, b)
    delta = mx - mn
    v = mx
    s = 0.0 if mx == 0 else delta / mx
    if delta == 0:
        h = 0.0
    elif mx == r:
        h = 60.0 * (((g - b) / delta) % 6.0)
    elif mx == g:
        h = 60.0 * ((b - r) / delta + 2.0)
    else:
        h = 60.0 * ((r - g) / delta + 4.0)
    return (h % 360.0, s, v)


def rgb_to_hsv_array(rgb: np.ndarray) -> np.ndarray:
    """Vectorised :func:`rgb_to_hsv` over an ``(..., 3)`` array in ``[0, 1]``."""
    rgb = np.asarray(rgb, dtype=float)
    if rgb.size and (rgb.min() < 0.0 or rgb.max() > 1.0):
        raise ValueError("RGB components must lie in [0, 1]")
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    mx = rgb.max(axis=-1)
    mn = rgb.min(axis=-1)
    delta = mx - mn
    safe = np.where(delta > 0, delta, 1.0)
    h = np.zeros_like(mx)
    rmax = (mx == r) & (delta > 0)
    gmax = (mx == g) & (delta > 0) & ~rmax
    bmax = (delta > 0) & ~rmax & ~gmax
    h[rmax] = (60.0 * (((g - b) / safe) % 6.0))[rmax]
    h[gmax] = (60.0 * ((b - r) / safe + 2.0))[gmax]
    h[bmax] = (60.0 * ((r - g) / safe + 4.0))[bmax]
    s = np.where(mx > 0, delta / np.where(mx > 0, mx, 1.0), 0.0)
    return np.stack([h % 360.0, s, mx], axis=-1)


def patch_from_bytes(data: bytes, width: int, height: int) -> np.ndarray:
    """Interleaved 8-bit RGB bytes to a ``(height, width, 3)`` float patch."""
    expected = width * height * 3
    if len(data) != expected:
        raise ValueError(f"expected {expected} bytes for {width}x{height} RGB, got {len(data)}")
    arr = np.frombuffer(data, dtype=np.uint8).reshape(height, width, 3)
    return arr.astype(float) / 255.0


def _as_unit_rgb(patch: np.ndarray) -> np.ndarray:
    patch = np.asarray(patch)
    if patch.dtype == np.uint8:
        return patch.astype(float) / 255.0
    return patch.astype(float)


def extract_histogram(patch: np.ndarray) -> HsvHistogram:
    """Histogram of an RGB patch (``uint8`` or floats in ``[0, 1]``)."""
    rgb = _as_unit_rgb(patch).reshape(-1, 3)
    if len(rgb) == 0:
        return HsvHistogram.uniform()
    hsv = rgb_to_hsv_array(rgb)
    nh, ns, nv = HSV_BINS
    hb = np.minimum((hsv[:, 0] / 360.0 * nh).astype(int), nh - 1)
    sb = np.minimum((hsv[:, 1] * ns).astype(int), ns - 1)
    vb = np.minimum((hsv[:, 2] * nv).astype(int), nv - 1)
    flat = np.bincount((hb * ns + sb) * nv + vb, minlength=nh * ns * nv)
    return HsvHistogram(flat.reshape(HSV_BINS) / len(rgb))


def box_patch(image: np.ndarray, box: BoundingBox, crop: float = 1.0) -> np.ndarray:
    """Pixels of ``image`` covered by ``box``, optionally a centred fraction of it.

    A pixel belongs to the box when its centre does. ``crop=0.5`` keeps the
    central half in each dimension, which stays clear of the background for
    blob-shaped targets.
    """
    cx, cy = box.center
    w, h = box.w * crop, box.h * crop
    x0 = max(0, int(math.ceil(cx - w / 2 - 0.5)))
    x1 = min(image.shape[1], int(math.floor(cx + w / 2 - 0.5)) + 1)
    y0 = max(0, int(math.ceil(cy - h / 2 - 0.5)))
    y1 = min(image.shape[0], int(math.floor(cy + h / 2 - 0.5)) + 1)
    if x1 <= x0 or y1 <= y0:
        return image[0:0, 0:0]
    return image[y0:y1, x0:x1]


def _weights(h: HsvHistogram | np.ndarray) -> np.ndarray:
    w = h.weights if isinstance(h, HsvHistogram) else np.asarray(h, dtype=float)
    total = float(w.sum())
    if abs(total - 1.0) > _NORM_TOL or np.any(w < 0):
        raise ValueError(f"histogram not normalised (sum={total:.6g})")
    return w


def bhattacharyya_distance(p: HsvHistogram | np.ndarray, q: HsvHistogram | np.ndarray) -> float:
    """``sqrt(1 - sum(sqrt(p * q)))``, clamped to ``[0, 1]``."""
    wp, wq = _weights(p), _weights(q)
    if wp.shape != wq.shape:
        raise ValueError("histograms differ in shape")
    if not np.any(wp * wq):
        return 1.0
    # for normalised p, q: 1 - sum(sqrt(p q)) == 0.5 * sum((sqrt p - sqrt q)^2),
    # and the right side is exactly zero when p == q
    h2 = 0.5 * float(np.sum((np.sqrt(wp) - np.sqrt(wq)) ** 2))
    return math.sqrt(min(1.0, max(0.0, h2)))
