"""Pipeline configuration: defaults, the config-file format, validation.

Config files are plain ``key = value`` text; ``#`` starts a comment.
Relative paths resolve against the config file's directory so a dataset
directory can carry its own self-contained config. CLI flags override file
values.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

from .analysis import BIN_MODES
from .maskgrid import NORMALIZATION_MODES
from .matching import DEFAULT_MAX_DELTA_S
from .skyimage import DEFAULT_THRESHOLD, CircleRoi

# reference deployment site (rooftop camera, Singapore)
DEFAULT_SITE_LAT = 1.3483
DEFAULT_SITE_LON = 103.6831

CONFIG_KEYS = (
    "camera.manifest",
    "grid.dir",
    "site.lat",
    "site.lon",
    "roi",
    "roi.cx",
    "roi.cy",
    "roi.r",
    "seg.threshold",
    "mask.normalization",
    "mask.k",
    "match.max_delta_s",
    "bins.mode",
    "out.dir",
)


class ConfigError(ValueError):
    """A config file or flag combination cannot form a valid pipeline setup."""


@dataclass(frozen=True)
class PipelineConfig:
    """Everything one end-to-end run needs."""

    camera_manifest: Path | None = None
    grid_dir: Path | None = None
    site_lat: float = DEFAULT_SITE_LAT
    site_lon: float = DEFAULT_SITE_LON
    roi: CircleRoi | None = None  # None = full frame
    threshold: float = DEFAULT_THRESHOLD
    normalization: str = "linear"
    neighborhood_k: int = 3
    max_delta_s: float = DEFAULT_MAX_DELTA_S
    bin_mode: str = "nearest"
    out_dir: Path = Path("out")

    def validate(self) -> None:
        if not -90.0 <= self.site_lat <= 90.0:
            raise ConfigError(f"site.lat {self.site_lat} outside [-90, 90]")
        if not -180.0 <= self.site_lon <= 180.0:
            raise ConfigError(f"site.lon {self.site_lon} outside [-180, 180]")
        if self.threshold <= 0:
            raise ConfigError("seg.threshold must be positive")
        if self.neighborhood_k < 1 or self.neighborhood_k % 2 == 0:
            raise ConfigError(f"mask.k must be odd and >= 1, got {self.neighborhood_k}")
        if self.max_delta_s <= 0:
            raise ConfigError("match.max_delta_s must be positive")
        if self.normalization not in NORMALIZATION_MODES:
            raise ConfigError(
                f"mask.normalization {self.normalization!r} not one of {NORMALIZATION_MODES}"
            )
        if self.bin_mode not in BIN_MODES:
            raise ConfigError(f"bins.mode {self.bin_mode!r} not one of {BIN_MODES}")
        if self.roi is not None and self.roi.r <= 0:
            raise ConfigError("roi.r must be positive")


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    """Parse ``key = value`` lines into a dict, rejecting unknown keys."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key = key.strip()
        value = value.strip()
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        values[key] = value
    return values


def _float(values: dict[str, str], key: str) -> float:
    try:
        return float(values[key])
    except ValueError as exc:
        raise ConfigError(f"{key} must be a number, got {values[key]!r}") from exc


def _int(values: dict[str, str], key: str) -> int:
    try:
        return int(values[key])
    except ValueError as exc:
        raise ConfigError(f"{key} must be an integer, got {values[key]!r}") from exc


def config_from_values(values: dict[str, str], base_dir: Path) -> PipelineConfig:
    """Build a PipelineConfig from parsed key-values; paths resolve against
    ``base_dir``."""
    cfg = PipelineConfig()

    def path_of(key: str) -> Path:
        p = Path(values[key])
        return p if p.is_absolute() else base_dir / p

    if "camera.manifest" in values:
        cfg = replace(cfg, camera_manifest=path_of("camera.manifest"))
    if "grid.dir" in values:
        cfg = replace(cfg, grid_dir=path_of("grid.dir"))
    if "site.lat" in values:
        cfg = replace(cfg, site_lat=_float(values, "site.lat"))
    if "site.lon" in values:
        cfg = replace(cfg, site_lon=_float(values, "site.lon"))
    if "out.dir" in values:
        cfg = replace(cfg, out_dir=path_of("out.dir"))
    if "seg.threshold" in values:
        cfg = replace(cfg, threshold=_float(values, "seg.threshold"))
    if "mask.normalization" in values:
        cfg = replace(cfg, normalization=values["mask.normalization"])
    if "mask.k" in values:
        cfg = replace(cfg, neighborhood_k=_int(values, "mask.k"))
    if "match.max_delta_s" in values:
        cfg = replace(cfg, max_delta_s=_float(values, "match.max_delta_s"))
    if "bins.mode" in values:
        cfg = replace(cfg, bin_mode=values["bins.mode"])

    roi_keys = [k for k in ("roi.cx", "roi.cy", "roi.r") if k in values]
    if values.get("roi", "").lower() == "full":
        if roi_keys:
            raise ConfigError("roi=full conflicts with roi.cx/roi.cy/roi.r")
        cfg = replace(cfg, roi=None)
    elif roi_keys:
        if len(roi_keys) != 3:
            raise ConfigError("roi.cx, roi.cy and roi.r must be given together")
        cfg = replace(
            cfg,
            roi=CircleRoi(
                cx=_float(values, "roi.cx"),
                cy=_float(values, "roi.cy"),
                r=_float(values, "roi.r"),
            ),
        )
    elif "roi" in values:
        raise ConfigError(f"roi must be 'full', got {values['roi']!r}")

    return cfg


def load_config(path: str | Path) -> PipelineConfig:
    """Read and validate a config file."""
    path = Path(path)
    values = parse_config_text(path.read_text(encoding="utf-8"), source=str(path))
    cfg = config_from_values(values, base_dir=path.parent)
    cfg.validate()
    return cfg
