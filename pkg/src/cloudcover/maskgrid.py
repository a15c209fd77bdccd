"""Satellite cloud-mask grids: CMG1 container, code decoding, pixel queries.

Mask codes take the discrete values 0, 64, 128 and 192, running from fully
cloudy (0) to cloud-free (192); -1 marks invalid cells. Grids carry
per-pixel geolocation (nominally 1 km^2 pixels) so a camera site can be
located by great-circle distance.

CMG1 is a line-oriented UTF-8 text container with LF endings:

    CMG1
    time 2015-12-25T04:00:00Z
    dims <rows> <cols>
    section codes    followed by <rows> lines of <cols> integers (-1 = invalid)
    section lat      followed by <rows> lines of <cols> decimal degrees
    section lon      followed by <rows> lines of <cols> decimal degrees

``emit_cmg`` writes the canonical form (shortest round-trip float text);
``parse_cmg`` reads any conforming file back.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

import numpy as np

from .timeutil import format_utc, parse_utc

INVALID = -1
VALID_CODES = (0, 64, 128, 192)
CODE_SPAN = 192  # top of the code range, the cloud-free end

EARTH_RADIUS_KM = 6371.0088  # mean Earth radius

# percent cloud-free associated with each code
_CLEAR_CONFIDENCE = {192: 98, 128: 92, 64: 60, 0: 0}

NORMALIZATION_MODES = ("linear", "confidence")

# render colors, one per code state
_PALETTE = {
    192: (0, 0, 255),  # cloud-free: blue
    128: (0, 200, 0),  # mostly clear: green
    64: (255, 0, 0),  # mostly cloudy: red
    0: (128, 128, 128),  # fully cloudy: grey
    INVALID: (0, 0, 0),
}
MARKER_COLOR = (0, 255, 0)  # site marker overdraw


class CmgParseError(ValueError):
    """A file does not conform to the CMG1 container format."""


class NoValidDataError(ValueError):
    """Every cell in the requested neighborhood is invalid."""


@dataclass(frozen=True)
class CloudMaskGrid:
    """A geolocated grid of mask codes from one satellite overpass.

    ``warning_count`` reports how many out-of-set codes the parser coerced
    to invalid.
    """

    rows: int
    cols: int
    codes: np.ndarray  # (rows, cols) int16, VALID_CODES or INVALID
    lat: np.ndarray  # (rows, cols) float64 degrees north
    lon: np.ndarray  # (rows, cols) float64 degrees east
    observed_at: datetime
    warning_count: int = 0

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise ValueError("grid must have at least one row and one column")
        shape = (self.rows, self.cols)
        if self.codes.shape != shape or self.lat.shape != shape or self.lon.shape != shape:
            raise ValueError("codes/lat/lon arrays must all be rows x cols")
        if np.any(self.lat < -90.0) or np.any(self.lat > 90.0):
            raise ValueError("latitude out of range [-90, 90]")
        if np.any(self.lon < -180.0) or np.any(self.lon > 180.0):
            raise ValueError("longitude out of range [-180, 180]")
        if self.observed_at.tzinfo is None:
            raise ValueError("observed_at must be timezone-aware")


@dataclass(frozen=True)
class NeighborhoodAverage:
    """Mean normalized cloudiness of the valid cells in a k x k window."""

    center_row: int
    center_col: int
    k: int
    valid_count: int
    mean_cloudiness: float


def decode_clear_confidence(code: int) -> int:
    """Percent cloud-free associated with a mask code (192 -> 98, ... 0 -> 0)."""
    try:
        return _CLEAR_CONFIDENCE[code]
    except KeyError:
        raise ValueError(f"not a valid mask code: {code}") from None


def normalize_code(code: int) -> float:
    """Linear map of a code onto 0..100 cloudiness (192 -> 0, 0 -> 100)."""
    if code not in _CLEAR_CONFIDENCE:
        raise ValueError(f"not a valid mask code: {code}")
    return (CODE_SPAN - code) * 100.0 / CODE_SPAN


def confidence_cloudiness(code: int) -> float:
    """Cloudiness as 100 minus the code's percent cloud-free."""
    return float(100 - decode_clear_confidence(code))


def normalized_cloudiness(code: int, mode: str = "linear") -> float:
    """Dispatch to the selected 0..100 normalization of a mask code."""
    if mode == "linear":
        return normalize_code(code)
    if mode == "confidence":
        return confidence_cloudiness(code)
    raise ValueError(f"unknown normalization mode {mode!r}; use one of {NORMALIZATION_MODES}")


# ---------------------------------------------------------------------------
# CMG1 parsing and emission
# ---------------------------------------------------------------------------


class _LineReader:
    """Sequential line access with positions for error messages."""

    def __init__(self, path: Path, lines: list[str]):
        self.path = path
        self.lines = lines
        self.pos = 0

    def next(self, what: str) -> str:
        if self.pos >= len(self.lines):
            raise CmgParseError(f"{self.path}: file ends before {what}")
        line = self.lines[self.pos]
        self.pos += 1
        return line

    def fail(self, message: str) -> CmgParseError:
        return CmgParseError(f"{self.path}:{self.pos}: {message}")


def _read_section(
    reader: _LineReader, name: str, rows: int, cols: int
) -> list[list[str]]:
    marker = reader.next(f"'section {name}'")
    if marker != f"section {name}":
        raise reader.fail(f"expected 'section {name}', got {marker!r}")
    table = []
    for r in range(rows):
        tokens = reader.next(f"row {r} of section {name}").split()
        if len(tokens) != cols:
            raise reader.fail(
                f"section {name} row {r} has {len(tokens)} cells, expected {cols}"
            )
        table.append(tokens)
    return table


def parse_cmg(path: str | Path) -> CloudMaskGrid:
    """Parse a CMG1 file into a grid.

    Codes outside {0, 64, 128, 192} (other than the -1 fill value) are
    coerced to invalid and counted in ``warning_count``.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()  # trailing newline
    reader = _LineReader(path, lines)

    magic = reader.next("the magic line")
    if magic != "CMG1":
        raise reader.fail(f"bad magic {magic!r}, expected 'CMG1'")

    time_line = reader.next("the time line")
    if not time_line.startswith("time "):
        raise reader.fail(f"expected 'time <stamp>', got {time_line!r}")
    try:
        observed_at = parse_utc(time_line[5:])
    except ValueError as exc:
        raise reader.fail(str(exc)) from exc

    dims_line = reader.next("the dims line")
    parts = dims_line.split()
    if len(parts) != 3 or parts[0] != "dims":
        raise reader.fail(f"expected 'dims <rows> <cols>', got {dims_line!r}")
    try:
        rows, cols = int(parts[1]), int(parts[2])
    except ValueError as exc:
        raise reader.fail(f"non-integer dims in {dims_line!r}") from exc
    if rows < 1 or cols < 1:
        raise reader.fail(f"dims must be positive, got {rows} x {cols}")

    code_rows = _read_section(reader, "codes", rows, cols)
    lat_rows = _read_section(reader, "lat", rows, cols)
    lon_rows = _read_section(reader, "lon", rows, cols)

    while reader.pos < len(reader.lines):
        if reader.next("end of file").strip():
            raise reader.fail("unexpected content after the lon section")

    codes = np.empty((rows, cols), dtype=np.int16)
    warning_count = 0
    for r, row in enumerate(code_rows):
        for c, token in enumerate(row):
            try:
                value = int(token)
            except ValueError as exc:
                raise CmgParseError(
                    f"{path}: non-numeric code cell {token!r} at ({r},{c})"
                ) from exc
            if value == INVALID or value in _CLEAR_CONFIDENCE:
                codes[r, c] = value
            else:
                codes[r, c] = INVALID
                warning_count += 1

    def floats(name: str, table: list[list[str]]) -> np.ndarray:
        arr = np.empty((rows, cols), dtype=np.float64)
        for r, row in enumerate(table):
            for c, token in enumerate(row):
                try:
                    arr[r, c] = float(token)
                except ValueError as exc:
                    raise CmgParseError(
                        f"{path}: non-numeric {name} cell {token!r} at ({r},{c})"
                    ) from exc
        return arr

    lat = floats("lat", lat_rows)
    lon = floats("lon", lon_rows)
    if np.any(lat < -90.0) or np.any(lat > 90.0):
        raise CmgParseError(f"{path}: latitude out of range [-90, 90]")
    if np.any(lon < -180.0) or np.any(lon > 180.0):
        raise CmgParseError(f"{path}: longitude out of range [-180, 180]")

    return CloudMaskGrid(
        rows=rows,
        cols=cols,
        codes=codes,
        lat=lat,
        lon=lon,
        observed_at=observed_at,
        warning_count=warning_count,
    )


def cmg_text(grid: CloudMaskGrid) -> str:
    """Canonical CMG1 text for a grid (LF endings, shortest float form)."""
    lines = [
        "CMG1",
        f"time {format_utc(grid.observed_at)}",
        f"dims {grid.rows} {grid.cols}",
        "section codes",
    ]
    lines += [" ".join(str(int(v)) for v in row) for row in grid.codes]
    lines.append("section lat")
    lines += [" ".join(repr(float(v)) for v in row) for row in grid.lat]
    lines.append("section lon")
    lines += [" ".join(repr(float(v)) for v in row) for row in grid.lon]
    return "\n".join(lines) + "\n"


def emit_cmg(grid: CloudMaskGrid, path: str | Path) -> None:
    """Write a grid as a canonical CMG1 file."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(cmg_text(grid))


# ---------------------------------------------------------------------------
# Geolocated queries
# ---------------------------------------------------------------------------


def haversine_km(lat1, lon1, lat2, lon2):
    """Great-circle distance in km between degree coordinates (array-aware)."""
    p1 = np.radians(np.asarray(lat1, dtype=np.float64))
    p2 = np.radians(np.asarray(lat2, dtype=np.float64))
    dphi = p2 - p1
    dlmb = np.radians(np.asarray(lon2, dtype=np.float64) - np.asarray(lon1, dtype=np.float64))
    a = np.sin(dphi / 2.0) ** 2 + np.cos(p1) * np.cos(p2) * np.sin(dlmb / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(a))


def nearest_pixel(grid: CloudMaskGrid, lat: float, lon: float) -> tuple[int, int]:
    """Indices of the pixel center nearest (lat, lon) by great-circle distance.

    Exact distance ties resolve to the smaller row, then the smaller column.
    """
    if not -90.0 <= lat <= 90.0:
        raise ValueError(f"latitude {lat} out of range [-90, 90]")
    if not -180.0 <= lon <= 180.0:
        raise ValueError(f"longitude {lon} out of range [-180, 180]")
    dist = haversine_km(lat, lon, grid.lat, grid.lon)
    flat = int(np.argmin(dist))  # first minimum in row-major order = tie-break
    return divmod(flat, grid.cols)


def neighborhood_average(
    grid: CloudMaskGrid,
    row: int,
    col: int,
    k: int = 3,
    normalization: str = "linear",
) -> NeighborhoodAverage:
    """Average normalized cloudiness over the k x k window centered at (row, col).

    Invalid cells are skipped; window cells falling outside the grid are
    skipped the same way, so sites near a swath edge still get a value.
    """
    if k < 1 or k % 2 == 0:
        raise ValueError(f"k must be an odd positive size, got {k}")
    if not (0 <= row < grid.rows and 0 <= col < grid.cols):
        raise ValueError(f"center ({row},{col}) outside {grid.rows}x{grid.cols} grid")
    half = k // 2
    window = grid.codes[
        max(0, row - half) : row + half + 1, max(0, col - half) : col + half + 1
    ]
    valid = [int(c) for c in window.ravel() if c != INVALID]
    if not valid:
        raise NoValidDataError(
            f"no valid satellite data in the {k}x{k} window at ({row},{col})"
        )
    values = [normalized_cloudiness(c, normalization) for c in valid]
    return NeighborhoodAverage(
        center_row=row,
        center_col=col,
        k=k,
        valid_count=len(valid),
        mean_cloudiness=sum(values) / len(values),
    )


def render_mask(
    grid: CloudMaskGrid,
    out_path: str | Path,
    marker: tuple[float, float] | None = None,
) -> None:
    """Render one pixel per cell to a binary PPM (P6, maxval 255).

    Codes map to blue/green/red/grey from cloud-free to fully cloudy and
    invalid cells to black; when a (lat, lon) marker is given its nearest
    pixel is overdrawn in bright green.
    """
    img = np.zeros((grid.rows, grid.cols, 3), dtype=np.uint8)
    for code, color in _PALETTE.items():
        img[grid.codes == code] = color
    if marker is not None:
        mr, mc = nearest_pixel(grid, marker[0], marker[1])
        img[mr, mc] = MARKER_COLOR
    header = f"P6\n{grid.cols} {grid.rows}\n255\n".encode("ascii")
    with open(out_path, "wb") as fh:
        fh.write(header)
        fh.write(img.tobytes())
