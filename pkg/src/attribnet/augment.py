"""Seedable input augmentations: additive Gaussian noise and photometric jitter.

Every draw comes from a PCG64 substream keyed by ``(seed, *index)``, so a given
augmentation is reproducible regardless of the order draws are made in.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import as_vector
from .network import layer_rng

LUMA = np.array([0.299, 0.587, 0.114])

# stream tags keep noise and photometric draws apart for equal (seed, index)
_GAUSSIAN_STREAM = 0
_PHOTOMETRIC_STREAM = 1


def _key(index) -> tuple[int, ...]:
    return tuple(int(i) for i in index) if isinstance(index, (tuple, list)) else (int(index),)


def gaussian_augment(x, sigma: float, seed: int, index) -> np.ndarray:
    """``x + eps`` with ``eps ~ N(0, sigma^2 I)``; no clamping."""
    x = as_vector(x, "x")
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0:
        return x.copy()
    rng = layer_rng(seed, _GAUSSIAN_STREAM, *_key(index))
    return x + rng.normal(0.0, sigma, size=x.shape[0])


@dataclass(frozen=True)
class PhotometricRanges:
    brightness: tuple[float, float] = (0.875, 1.125)
    contrast: tuple[float, float] = (0.5, 1.5)
    saturation: tuple[float, float] = (0.8, 1.2)
    hue: tuple[float, float] = (-0.1, 0.1)

    def __post_init__(self):
        for name in ("brightness", "contrast", "saturation", "hue"):
            lo, hi = getattr(self, name)
            if not lo <= hi:
                raise ValueError(f"{name} range must satisfy lo <= hi, got [{lo}, {hi}]")
            object.__setattr__(self, name, (float(lo), float(hi)))

    @classmethod
    def fixed(cls, brightness=1.0, contrast=1.0, saturation=1.0, hue=0.0) -> PhotometricRanges:
        return cls((brightness, brightness), (contrast, contrast), (saturation, saturation), (hue, hue))

    @classmethod
    def from_dict(cls, d: dict) -> PhotometricRanges:
        base = cls()
        return cls(**{k: tuple(d.get(k, getattr(base, k))) for k in ("brightness", "contrast", "saturation", "hue")})

    def to_dict(self) -> dict:
        return {k: list(getattr(self, k)) for k in ("brightness", "contrast", "saturation", "hue")}


def _luma(img: np.ndarray) -> np.ndarray:
    return np.tensordot(LUMA, img, axes=(0, 0))


def rgb_to_hsv(img: np.ndarray) -> np.ndarray:
    r, g, b = img
    maxc = img.max(axis=0)
    minc = img.min(axis=0)
    delta = maxc - minc
    v = maxc
    s = np.divide(delta, maxc, out=np.zeros_like(maxc), where=maxc > 0)
    safe = np.where(delta > 0, delta, 1.0)
    rc = (maxc - r) / safe
    gc = (maxc - g) / safe
    bc = (maxc - b) / safe
    h = np.where(maxc == r, bc - gc, np.where(maxc == g, 2.0 + rc - bc, 4.0 + gc - rc))
    h = np.where(delta > 0, (h / 6.0) % 1.0, 0.0)
    return np.stack([h, s, v])


def hsv_to_rgb(hsv: np.ndarray) -> np.ndarray:
    h, s, v = hsv
    i = np.floor(h * 6.0)
    f = h * 6.0 - i
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    i = i.astype(int) % 6
    r = np.choose(i, [v, q, p, p, t, v])
    g = np.choose(i, [t, v, v, q, p, p])
    b = np.choose(i, [p, p, t, v, v, q])
    return np.stack([r, g, b])


def adjust(img: np.ndarray, brightness: float, contrast: float, saturation: float, hue: float) -> np.ndarray:
    """Apply brightness, contrast, saturation and hue in that order, clamping after each."""
    img = np.clip(brightness * img, 0.0, 1.0)
    mean_gray = _luma(img).mean()
    img = np.clip(mean_gray + contrast * (img - mean_gray), 0.0, 1.0)
    luma = _luma(img)[None]
    img = np.clip(luma + saturation * (img - luma), 0.0, 1.0)
    if hue != 0.0:
        hsv = rgb_to_hsv(img)
        hsv[0] = (hsv[0] + hue) % 1.0
        img = np.clip(hsv_to_rgb(hsv), 0.0, 1.0)
    return img


def photometric_params(ranges: PhotometricRanges, seed: int, index) -> tuple[float, float, float, float]:
    rng = layer_rng(seed, _PHOTOMETRIC_STREAM, *_key(index))
    u = rng.random(4)
    out = []
    for ui, (lo, hi) in zip(u, (ranges.brightness, ranges.contrast, ranges.saturation, ranges.hue)):
        out.append(float(lo + (hi - lo) * ui))
    return tuple(out)


def photometric_augment(img, ranges: PhotometricRanges, seed: int, index) -> np.ndarray:
    """Photometric distortion of a (3, H, W) image with values in [0, 1]."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[0] != 3:
        raise ValueError(f"image must have shape (3, H, W), got {img.shape}")
    return adjust(img, *photometric_params(ranges, seed, index))


def image_to_vector(img: np.ndarray) -> np.ndarray:
    """Channel-major, then row-major flattening."""
    return np.asarray(img, dtype=np.float64).reshape(-1)


def vector_to_image(v, height: int, width: int) -> np.ndarray:
    return np.asarray(v, dtype=np.float64).reshape(3, height, width)


def random_image(height: int, width: int, seed: int, index=0) -> np.ndarray:
    """Smooth-ish synthetic RGB image in [0, 1] for experiments."""
    rng = layer_rng(seed, 2, *_key(index))
    base = rng.random((3, 1, 1))
    yy, xx = np.mgrid[0:height, 0:width] / max(height, width)
    phase = rng.random((3, 2)) * 2 * np.pi
    freq = 1.0 + 3.0 * rng.random((3, 2))
    wave = 0.25 * np.sin(freq[:, :1, None] * 2 * np.pi * yy + phase[:, :1, None]) \
        + 0.25 * np.cos(freq[:, 1:, None] * 2 * np.pi * xx + phase[:, 1:, None])
    noise = 0.1 * rng.normal(size=(3, height, width))
    return np.clip(base + wave + noise, 0.0, 1.0)


@dataclass(frozen=True)
class Augmenter:
    """Augmentation configuration used by the convergence experiment.

    ``kind`` is ``"gaussian"`` (noise of std ``noise_sigma`` in input space) or
    ``"photometric"`` (inputs are flattened images of shape (3, H, W)).
    """

    kind: str = "gaussian"
    noise_sigma: float = 1.0
    ranges: PhotometricRanges = PhotometricRanges()
    image_shape: tuple[int, int] | None = None

    def __post_init__(self):
        if self.kind not in ("gaussian", "photometric"):
            raise ValueError(f"unknown augmentation {self.kind!r}")
        if self.kind == "gaussian" and self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")

    def __call__(self, x: np.ndarray, seed: int, index) -> np.ndarray:
        if self.kind == "gaussian":
            return gaussian_augment(x, self.noise_sigma, seed, index)
        if self.image_shape is None:
            h = w = int(round(np.sqrt(x.shape[0] / 3)))
        else:
            h, w = self.image_shape
        if 3 * h * w != x.shape[0]:
            raise ValueError(f"input of dim {x.shape[0]} is not a (3, {h}, {w}) image")
        return image_to_vector(photometric_augment(vector_to_image(x, h, w), self.ranges, seed, index))

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "gaussian":
            d["noise_sigma"] = self.noise_sigma
        else:
            d["ranges"] = self.ranges.to_dict()
            d["image_shape"] = list(self.image_shape) if self.image_shape else None
        return d
