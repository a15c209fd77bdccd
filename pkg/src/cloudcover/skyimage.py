"""Sky-camera frames: loading, red/blue cloud segmentation, coverage.

Clouds scatter red and blue light roughly equally while clear sky is
blue-dominant, so the per-pixel red/blue ratio separates the two: a pixel
is cloud when R/B >= threshold. Only pixels inside the region of interest
(the circular sky area of a fisheye frame, or the full frame) take part;
pixels with a zero blue channel have no defined ratio and are excluded
from coverage entirely.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

import numpy as np
from PIL import Image

from .timeutil import parse_compact_utc, parse_utc

DEFAULT_THRESHOLD = 0.9

# tri-state pixel labels used by CloudBinaryMap.labels
CLOUD = 1
SKY = 0
UNDEFINED = -1

MANIFEST_HEADER = ("timestamp_utc", "path")

# 16-bit grayscale modes Pillow may hand back for deep PNGs
_DEEP_MODES = ("I;16", "I;16B", "I;16L", "I;16N", "I")


class ImageLoadError(ValueError):
    """Image cannot be decoded, or its ROI/timestamp is unusable."""


class NoValidPixelsError(ValueError):
    """A binary map has no cloud or sky pixels left to measure."""


@dataclass(frozen=True)
class CircleRoi:
    """Circular sky region; pixels strictly inside the circle are ROI."""

    cx: float
    cy: float
    r: float


@dataclass(frozen=True)
class SkyImage:
    """One RGB sky capture plus the boolean mask of its sky region."""

    width: int
    height: int
    pixels: np.ndarray  # (height, width, 3) uint8
    roi: np.ndarray  # (height, width) bool
    captured_at: datetime

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image dimensions must be positive")
        if self.pixels.shape != (self.height, self.width, 3):
            raise ValueError("pixel array does not match the declared dimensions")
        if self.roi.shape != (self.height, self.width):
            raise ValueError("roi mask does not match the declared dimensions")
        if not bool(self.roi.any()):
            raise ValueError("roi selects no pixels")
        if self.captured_at.tzinfo is None:
            raise ValueError("captured_at must be timezone-aware")


@dataclass(frozen=True)
class CloudBinaryMap:
    """Per-pixel cloud/sky/undefined labels for one sky image."""

    width: int
    height: int
    labels: np.ndarray  # (height, width) int8 of CLOUD / SKY / UNDEFINED

    def __post_init__(self) -> None:
        if self.labels.shape != (self.height, self.width):
            raise ValueError("label array does not match the declared dimensions")

    @property
    def cloud_count(self) -> int:
        return int((self.labels == CLOUD).sum())

    @property
    def sky_count(self) -> int:
        return int((self.labels == SKY).sum())


def circle_mask(width: int, height: int, roi: CircleRoi) -> np.ndarray:
    """Boolean mask of the pixels strictly inside the ROI circle."""
    dx = np.arange(width, dtype=np.float64)[None, :] - roi.cx
    dy = np.arange(height, dtype=np.float64)[:, None] - roi.cy
    return (dx * dx + dy * dy) < roi.r * roi.r


def _to_rgb8(img: Image.Image) -> np.ndarray:
    """Decode to 8-bit RGB; 16-bit inputs keep only their high byte."""
    if img.mode in _DEEP_MODES:
        gray = (np.asarray(img, dtype=np.int64) >> 8).clip(0, 255).astype(np.uint8)
        return np.stack([gray, gray, gray], axis=-1)
    # convert() drops alpha and expands palettes
    return np.asarray(img.convert("RGB"), dtype=np.uint8)


def load_sky_image(
    path: str | Path,
    roi: CircleRoi | None = None,
    captured_at: datetime | None = None,
) -> SkyImage:
    """Load a PNG or JPEG sky capture.

    ``roi=None`` means the full frame is sky. Without an explicit
    ``captured_at`` the filename stem is parsed as ``YYYYMMDDHHMMSS`` UTC
    (manifest-driven pipelines pass the timestamp explicitly).
    """
    path = Path(path)
    try:
        with Image.open(path) as img:
            pixels = _to_rgb8(img)
    except FileNotFoundError:
        raise
    except Exception as exc:  # Pillow raises a mix of OSError/ValueError/SyntaxError
        raise ImageLoadError(f"cannot decode {path}: {exc}") from exc

    height, width = pixels.shape[:2]
    if roi is None:
        mask = np.ones((height, width), dtype=bool)
    else:
        mask = circle_mask(width, height, roi)
        if not bool(mask.any()):
            raise ImageLoadError(
                f"{path}: ROI circle ({roi.cx},{roi.cy},r={roi.r}) selects no "
                f"pixels inside the {width}x{height} frame"
            )

    if captured_at is None:
        try:
            captured_at = parse_compact_utc(path.stem)
        except ValueError as exc:
            raise ImageLoadError(f"{path}: {exc}") from exc
    elif captured_at.tzinfo is None:
        raise ImageLoadError(f"{path}: captured_at must be timezone-aware")

    return SkyImage(
        width=width, height=height, pixels=pixels, roi=mask, captured_at=captured_at
    )


def read_manifest(path: str | Path) -> list[tuple[datetime, Path]]:
    """Read a camera manifest CSV with header ``timestamp_utc,path``.

    Relative image paths are resolved against the manifest's directory, so
    a dataset directory stays relocatable.
    """
    path = Path(path)
    entries: list[tuple[datetime, Path]] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header[:2]) != MANIFEST_HEADER:
            raise ImageLoadError(
                f"{path}: manifest header must be 'timestamp_utc,path'"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) < 2:
                raise ImageLoadError(f"{path}:{lineno}: expected 2 columns")
            try:
                ts = parse_utc(row[0].strip())
            except ValueError as exc:
                raise ImageLoadError(f"{path}:{lineno}: {exc}") from exc
            img = Path(row[1].strip())
            if not img.is_absolute():
                img = path.parent / img
            entries.append((ts, img))
    return entries


def segment_clouds(
    img: SkyImage, threshold: float = DEFAULT_THRESHOLD
) -> CloudBinaryMap:
    """Label each ROI pixel cloud (R/B >= threshold) or sky (R/B < threshold).

    ROI pixels with B == 0 have no defined ratio and stay undefined, as do
    all pixels outside the ROI. Pure function: identical inputs always give
    identical maps.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    r = img.pixels[:, :, 0].astype(np.float64)
    b = img.pixels[:, :, 2].astype(np.float64)
    defined = img.roi & (b > 0)
    ratio = np.divide(r, b, out=np.zeros_like(r), where=b > 0)
    labels = np.full((img.height, img.width), UNDEFINED, dtype=np.int8)
    labels[defined & (ratio >= threshold)] = CLOUD
    labels[defined & (ratio < threshold)] = SKY
    return CloudBinaryMap(width=img.width, height=img.height, labels=labels)


def cloud_coverage(cloud_map: CloudBinaryMap) -> float:
    """Percentage of defined sky pixels labeled cloud, in [0, 100].

    Undefined pixels count in neither the numerator nor the denominator.
    """
    cloud = cloud_map.cloud_count
    sky = cloud_map.sky_count
    if cloud + sky == 0:
        raise NoValidPixelsError("no valid sky pixels: every pixel is undefined")
    return 100.0 * cloud / (cloud + sky)
