"""Seeded synthetic paired datasets: mask grids plus matching sky images.

Each granule gets a scene-biased mask grid (skies are correlated, so one
base code dominates each scene) around the site, and a sky image whose
true cloud fraction equals the normalized neighborhood mean at the site
pixel, optionally perturbed by uniform noise. Running the analysis
pipeline over such a dataset must therefore recover the relation between
mask values and coverage, which is what the acceptance checks exploit.

Generation is fully deterministic per seed, including pixel placement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np
from PIL import Image

from .config import DEFAULT_SITE_LAT, DEFAULT_SITE_LON
from .maskgrid import INVALID, VALID_CODES, CloudMaskGrid, emit_cmg, neighborhood_average
from .skyimage import CircleRoi, circle_mask
from .timeutil import format_compact_utc, format_utc

CLOUD_COLOR = (255, 255, 255)  # achromatic, R/B = 1
SKY_COLOR = (60, 110, 230)  # blue-dominant, R/B ~ 0.26
FRAME_COLOR = (0, 0, 0)  # outside the ROI circle

# ~1 km of latitude in degrees; longitude spacing is widened by 1/cos(lat)
PIXEL_DEG = 0.009

GRID_SUBDIR = "grids"
IMAGE_SUBDIR = "images"
MANIFEST_NAME = "manifest.csv"
CONFIG_NAME = "pipeline.cfg"


@dataclass(frozen=True)
class SynthParams:
    """Knobs for one generated dataset."""

    seed: int
    n_granules: int
    noise: float = 0.0  # camera coverage jitter, +- percentage points
    grid_size: int = 5  # odd, >= 3
    image_size: int = 64
    invalid_prob: float = 0.08
    scene_bias: float = 0.75  # probability a pixel repeats the scene's base code
    site_lat: float = DEFAULT_SITE_LAT
    site_lon: float = DEFAULT_SITE_LON
    neighborhood_k: int = 3

    def __post_init__(self) -> None:
        if self.n_granules < 1:
            raise ValueError("n_granules must be >= 1")
        if self.grid_size < 3 or self.grid_size % 2 == 0:
            raise ValueError("grid_size must be odd and >= 3")
        if self.image_size < 16:
            raise ValueError("image_size must be >= 16")
        if self.noise < 0:
            raise ValueError("noise must be >= 0")
        if not 0.0 <= self.invalid_prob < 1.0:
            raise ValueError("invalid_prob must lie in [0, 1)")


def _granule_time(start: datetime, index: int) -> datetime:
    """Two overpasses per day, 04 and 07 UTC."""
    day, slot = divmod(index, 2)
    return start + timedelta(days=day, hours=(4 if slot == 0 else 7))


def _make_grid(params: SynthParams, rng: np.random.Generator, observed_at: datetime) -> CloudMaskGrid:
    g = params.grid_size
    center = g // 2
    base = int(rng.choice(VALID_CODES))
    codes = np.where(
        rng.random((g, g)) < params.scene_bias,
        base,
        rng.choice(VALID_CODES, size=(g, g)),
    ).astype(np.int16)
    invalid = rng.random((g, g)) < params.invalid_prob
    invalid[center, center] = False  # site pixel always usable
    codes[invalid] = INVALID

    dlat = PIXEL_DEG
    dlon = PIXEL_DEG / math.cos(math.radians(params.site_lat))
    row_off = (center - np.arange(g, dtype=np.float64))[:, None]  # north at row 0
    col_off = (np.arange(g, dtype=np.float64) - center)[None, :]
    lat = np.broadcast_to(params.site_lat + row_off * dlat, (g, g)).copy()
    lon = np.broadcast_to(params.site_lon + col_off * dlon, (g, g)).copy()

    return CloudMaskGrid(
        rows=g, cols=g, codes=codes, lat=lat, lon=lon, observed_at=observed_at
    )


def _make_image(
    size: int, roi: CircleRoi, coverage: float, rng: np.random.Generator
) -> np.ndarray:
    """RGB array whose ROI cloud fraction is `coverage` up to pixel rounding."""
    mask = circle_mask(size, size, roi)
    flat_roi = np.flatnonzero(mask.ravel())
    n_cloud = int(round(coverage / 100.0 * flat_roi.size))
    chosen = rng.permutation(flat_roi.size)[:n_cloud]

    pixels = np.empty((size * size, 3), dtype=np.uint8)
    pixels[:] = FRAME_COLOR
    pixels[flat_roi] = SKY_COLOR
    pixels[flat_roi[chosen]] = CLOUD_COLOR
    return pixels.reshape(size, size, 3)


def generate_dataset(params: SynthParams, out_dir: str | Path) -> Path:
    """Write grids, images, manifest and a ready-to-run config file.

    Returns the path of the generated config. The layout:

        out_dir/grids/<YYYYMMDDHHMMSS>.cmg
        out_dir/images/<YYYYMMDDHHMMSS>.png
        out_dir/manifest.csv
        out_dir/pipeline.cfg
    """
    out_dir = Path(out_dir)
    grids_dir = out_dir / GRID_SUBDIR
    images_dir = out_dir / IMAGE_SUBDIR
    grids_dir.mkdir(parents=True, exist_ok=True)
    images_dir.mkdir(parents=True, exist_ok=True)

    rng = np.random.default_rng(params.seed)
    start = datetime(2015, 1, 1, tzinfo=timezone.utc)
    size = params.image_size
    roi = CircleRoi(cx=size / 2.0, cy=size / 2.0, r=size / 2.0 - 4.0)
    center = params.grid_size // 2

    manifest_rows = ["timestamp_utc,path"]
    for i in range(params.n_granules):
        observed_at = _granule_time(start, i)
        grid = _make_grid(params, rng, observed_at)
        emit_cmg(grid, grids_dir / f"{format_compact_utc(observed_at)}.cmg")

        target = neighborhood_average(
            grid, center, center, k=params.neighborhood_k
        ).mean_cloudiness
        if params.noise > 0:
            target = float(
                np.clip(target + rng.uniform(-params.noise, params.noise), 0.0, 100.0)
            )

        captured_at = observed_at + timedelta(seconds=int(rng.integers(-120, 121)))
        image_name = f"{format_compact_utc(captured_at)}.png"
        pixels = _make_image(size, roi, target, rng)
        Image.fromarray(pixels, mode="RGB").save(images_dir / image_name)
        manifest_rows.append(f"{format_utc(captured_at)},{IMAGE_SUBDIR}/{image_name}")

    with open(out_dir / MANIFEST_NAME, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(manifest_rows) + "\n")

    config_path = out_dir / CONFIG_NAME
    config_lines = [
        "# generated synthetic dataset",
        f"site.lat = {params.site_lat!r}",
        f"site.lon = {params.site_lon!r}",
        f"camera.manifest = {MANIFEST_NAME}",
        f"grid.dir = {GRID_SUBDIR}",
        f"roi.cx = {roi.cx!r}",
        f"roi.cy = {roi.cy!r}",
        f"roi.r = {roi.r!r}",
        "seg.threshold = 0.9",
        "mask.normalization = linear",
        f"mask.k = {params.neighborhood_k}",
        "match.max_delta_s = 300",
        "bins.mode = nearest",
        "out.dir = out",
    ]
    with open(config_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(config_lines) + "\n")
    return config_path
