"""Classical feature extraction from grayscale images.

Two extractors turn a raw image into a feature vector with no learned model:
zero-order intensity statistics (mean, std, skewness, kurtosis) and texture
statistics derived from a grey-level co-occurrence matrix (GLCM). The GLCM
records frequencies of adjacent pixel-value pairs, averaged over the eight
unit-offset neighbor directions to absorb rotational variation, then
normalized to sum 1.

All functions are pure and trivially parallel over images.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyImage, ImageTooSmall, MalformedRow, NonFiniteValue, NotNormalized
from .features import FeatureVector

_OFFSETS = [(dr, dc) for dr in (-1, 0, 1) for dc in (-1, 0, 1) if (dr, dc) != (0, 0)]


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Row-major grayscale pixels in [0, 1]."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim != 2 or px.size == 0:
            raise EmptyImage("image must be a non-empty 2-d array")
        if not np.all(np.isfinite(px)):
            raise NonFiniteValue("image contains non-finite pixels")
        if px.min() < 0.0 or px.max() > 1.0:
            raise MalformedRow("pixels must lie in [0, 1]; normalize on load")
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


def from_integers(raw: np.ndarray, bit_depth: int = 8) -> GrayImage:
    """Normalize raw integer pixels of the declared bit depth onto [0, 1]."""
    scale = float(2 ** bit_depth - 1)
    return GrayImage(np.asarray(raw, dtype=np.float64) / scale)


def load_pgm(data: bytes) -> GrayImage:
    """Parse an 8-bit binary PGM (P5)."""
    if not data.startswith(b"P5"):
        raise MalformedRow("not a P5 PGM")
    # header tokens: magic, width, height, maxval; '#' comments allowed
    tokens: list[bytes] = []
    i = 2
    while len(tokens) < 3 and i < len(data):
        c = data[i:i + 1]
        if c == b"#":
            while i < len(data) and data[i:i + 1] != b"\n":
                i += 1
        elif c.isspace():
            i += 1
        else:
            j = i
            while j < len(data) and not data[j:j + 1].isspace():
                j += 1
            tokens.append(data[i:j])
            i = j
    if len(tokens) < 3:
        raise MalformedRow("truncated PGM header")
    i += 1  # single whitespace after maxval
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError as e:
        raise MalformedRow(f"bad PGM header: {e}") from e
    if maxval != 255:
        raise MalformedRow(f"only 8-bit PGM supported (maxval 255, got {maxval})")
    body = data[i:i + width * height]
    if len(body) != width * height:
        raise MalformedRow("PGM pixel data shorter than width*height")
    raw = np.frombuffer(body, dtype=np.uint8).reshape(height, width)
    return from_integers(raw, bit_depth=8)


def write_pgm(img: GrayImage) -> bytes:
    raw = np.clip(np.rint(img.pixels * 255.0), 0, 255).astype(np.uint8)
    header = f"P5\n{img.width} {img.height}\n255\n".encode()
    return header + raw.tobytes()


def load_raw(data: bytes, width: int, height: int, dtype: str = "u8") -> GrayImage:
    """Headerless binary pixels with sidecar dimensions.

    dtype "u8" is normalized by 255; "f32"/"f64" are taken as already in [0, 1].
    """
    np_dtype = {"u8": np.uint8, "f32": np.float32, "f64": np.float64}.get(dtype)
    if np_dtype is None:
        raise ValueError(f"unknown raw dtype {dtype!r}")
    arr = np.frombuffer(data, dtype=np_dtype)
    if arr.size != width * height:
        raise MalformedRow(f"raw file has {arr.size} pixels, expected {width * height}")
    arr = arr.reshape(height, width)
    return from_integers(arr, 8) if dtype == "u8" else GrayImage(arr.astype(np.float64))


def zero_order_stats(img: GrayImage, id: str = "image") -> FeatureVector:
    """Mean, population std, skewness m3/m2^1.5, and kurtosis m4/m2^2.

    Kurtosis is non-excess (a normal sample gives ~3). Zero-variance images
    take skewness = kurtosis = 0 by convention.
    """
    px = img.pixels.ravel()
    if px.size < 2:
        raise EmptyImage("need at least 2 pixels for intensity statistics")
    mean = float(px.mean())
    dev = px - mean
    m2 = float(np.mean(dev ** 2))
    if m2 == 0.0:
        std = skew = kurt = 0.0
    else:
        std = float(np.sqrt(m2))
        m3 = float(np.mean(dev ** 3))
        m4 = float(np.mean(dev ** 4))
        skew = m3 / m2 ** 1.5
        kurt = m4 / m2 ** 2
    return FeatureVector(id=id, values=np.array([mean, std, skew, kurt]))


@dataclass(frozen=True, eq=False)
class GlcmMatrix:
    """Co-occurrence matrix over quantized grey levels."""

    counts: np.ndarray
    levels: int
    normalized: bool

    def __post_init__(self) -> None:
        c = np.asarray(self.counts, dtype=np.float64)
        if c.shape != (self.levels, self.levels):
            raise ValueError("counts must be levels x levels")
        if np.any(c < 0):
            raise ValueError("counts must be non-negative")
        if self.normalized and abs(float(c.sum()) - 1.0) > 1e-9:
            raise NotNormalized("normalized matrix must sum to 1 within 1e-9")
        object.__setattr__(self, "counts", c)


def quantize(img: GrayImage, levels: int) -> np.ndarray:
    """floor(p * levels), clamped to levels-1."""
    return np.minimum(np.floor(img.pixels * levels).astype(np.int64), levels - 1)


def glcm(img: GrayImage, levels: int = 256) -> GlcmMatrix:
    """Averaged 8-direction co-occurrence matrix, normalized to sum 1."""
    if levels < 2:
        raise ValueError("levels must be >= 2")
    if img.height < 2 or img.width < 2:
        raise ImageTooSmall("need at least a 2x2 image for pixel pairs")
    q = quantize(img, levels)
    total = np.zeros((levels, levels), dtype=np.float64)
    h, w = q.shape
    for dr, dc in _OFFSETS:
        src = q[max(0, -dr):h - max(0, dr), max(0, -dc):w - max(0, dc)]
        dst = q[max(0, dr):h + min(0, dr), max(0, dc):w + min(0, dc)]
        pair_idx = src.ravel() * levels + dst.ravel()
        total += np.bincount(pair_idx, minlength=levels * levels).reshape(levels, levels)
    total /= 8.0
    return GlcmMatrix(counts=total / total.sum(), levels=levels, normalized=True)


def glcm_features(m: GlcmMatrix, id: str = "image") -> FeatureVector:
    """Contrast, homogeneity, energy, correlation, entropy of a normalized GLCM.

    Correlation is 0 by convention when either marginal variance vanishes;
    entropy is base-2 over nonzero entries.
    """
    if not m.normalized:
        raise NotNormalized("glcm_features needs a normalized matrix")
    p = m.counts
    idx = np.arange(m.levels, dtype=np.float64)
    i = idx[:, None]
    j = idx[None, :]
    contrast = float(np.sum(p * (i - j) ** 2))
    homogeneity = float(np.sum(p / (1.0 + (i - j) ** 2)))
    energy = float(np.sum(p ** 2))
    pi = p.sum(axis=1)
    pj = p.sum(axis=0)
    mu_i = float(idx @ pi)
    mu_j = float(idx @ pj)
    var_i = float(((idx - mu_i) ** 2) @ pi)
    var_j = float(((idx - mu_j) ** 2) @ pj)
    if var_i == 0.0 or var_j == 0.0:
        correlation = 0.0
    else:
        correlation = float(np.sum(p * (i - mu_i) * (j - mu_j))) / np.sqrt(var_i * var_j)
    nz = p[p > 0]
    entropy = float(-np.sum(nz * np.log2(nz)))
    return FeatureVector(id=id, values=np.array([contrast, homogeneity, energy, correlation, entropy]))
