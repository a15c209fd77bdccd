"""Observation catalogs and satellite-to-camera nearest-time matching.

Each satellite neighborhood average is joined to the camera frame closest
in time, within a configurable window. All timestamps are aware UTC;
mixing clock conventions is the caller's bug to fix at ingestion.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .timeutil import format_utc

CAMERA = "camera"
SATELLITE = "satellite"
SOURCES = (CAMERA, SATELLITE)

DEFAULT_MAX_DELTA_S = 300.0

PAIRS_HEADER = "sat_time_utc,sat_cloudiness,sat_valid_count,cam_time_utc,cam_coverage,delta_seconds"
UNMATCHED_HEADER = "sat_time_utc,reason"


class MatchError(LookupError):
    """No camera frame exists inside the allowed time window."""


@dataclass(frozen=True)
class Observation:
    """A timestamped scalar cloud measure from one source.

    ``meta`` carries source-specific annotations (image path for cameras,
    grid path and valid_count for satellites).
    """

    source: str
    at: datetime
    value: float  # percentage, 0..100
    meta: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.source not in SOURCES:
            raise ValueError(f"unknown source {self.source!r}, expected one of {SOURCES}")
        if not 0.0 <= self.value <= 100.0:
            raise ValueError(f"value {self.value} outside [0, 100]")
        if self.at.tzinfo is None:
            raise ValueError("timestamp must be timezone-aware")


@dataclass(frozen=True)
class MatchedPair:
    """A satellite observation joined to its nearest camera frame."""

    satellite: Observation
    camera: Observation
    delta_s: float  # camera time minus satellite time, seconds


@dataclass(frozen=True)
class Catalog:
    """Time-sorted observations; duplicate (source, timestamp) entries are
    dropped keeping the first seen, counted in ``duplicate_count``."""

    observations: tuple[Observation, ...]
    duplicate_count: int = 0

    def __len__(self) -> int:
        return len(self.observations)

    def __iter__(self) -> Iterator[Observation]:
        return iter(self.observations)


@dataclass(frozen=True)
class MatchResult:
    """Pairs in satellite time order plus the satellite observations that
    found no camera frame, each with its reason."""

    pairs: tuple[MatchedPair, ...]
    unmatched: tuple[tuple[Observation, str], ...]


def build_catalog(observations: Iterable[Observation]) -> Catalog:
    """Sort observations by time, collapsing duplicate (source, timestamp)."""
    seen: set[tuple[str, datetime]] = set()
    kept: list[Observation] = []
    duplicates = 0
    for obs in observations:
        key = (obs.source, obs.at)
        if key in seen:
            duplicates += 1
            continue
        seen.add(key)
        kept.append(obs)
    kept.sort(key=lambda o: o.at)  # stable, preserves input order on equal stamps
    return Catalog(observations=tuple(kept), duplicate_count=duplicates)


def match_nearest(
    satellite_obs: Observation,
    camera_catalog: Catalog,
    max_delta_s: float = DEFAULT_MAX_DELTA_S,
) -> MatchedPair:
    """Pair a satellite observation with the camera frame nearest in time.

    Equal gaps before and after resolve to the earlier frame. Raises
    MatchError when the catalog is empty or the nearest frame lies farther
    than ``max_delta_s`` seconds away.
    """
    if max_delta_s <= 0:
        raise ValueError("max_delta_s must be positive")
    cams = camera_catalog.observations
    if not cams:
        raise MatchError("camera catalog is empty")
    times = [o.at for o in cams]
    idx = _nearest_index(times, satellite_obs.at)
    camera = cams[idx]
    delta_s = (camera.at - satellite_obs.at).total_seconds()
    if abs(delta_s) > max_delta_s:
        raise MatchError(
            f"nearest camera frame is {abs(delta_s):.0f}s away, "
            f"outside the {max_delta_s:.0f}s window"
        )
    return MatchedPair(satellite=satellite_obs, camera=camera, delta_s=delta_s)


def _nearest_index(times: list[datetime], t: datetime) -> int:
    i = bisect.bisect_left(times, t)
    if i == 0:
        return 0
    if i == len(times):
        return len(times) - 1
    # tie (equal gap before and after) goes to the earlier frame
    if (t - times[i - 1]) <= (times[i] - t):
        return i - 1
    return i


def match_all(
    satellite_catalog: Catalog,
    camera_catalog: Catalog,
    max_delta_s: float = DEFAULT_MAX_DELTA_S,
) -> MatchResult:
    """Match every satellite observation against the camera catalog.

    Per-observation failures do not raise; they are returned in
    ``unmatched`` with the failure reason. Pairs follow satellite time
    order, and len(pairs) + len(unmatched) == len(satellite_catalog).
    """
    if max_delta_s <= 0:
        raise ValueError("max_delta_s must be positive")
    pairs: list[MatchedPair] = []
    unmatched: list[tuple[Observation, str]] = []
    for obs in satellite_catalog:
        try:
            pairs.append(match_nearest(obs, camera_catalog, max_delta_s))
        except MatchError as exc:
            unmatched.append((obs, str(exc)))
    return MatchResult(pairs=tuple(pairs), unmatched=tuple(unmatched))


def write_pairs_csv(pairs: Iterable[MatchedPair], path: str | Path) -> None:
    """Write matched pairs as CSV, one row per pair."""
    lines = [PAIRS_HEADER]
    for p in pairs:
        valid = p.satellite.meta.get("valid_count", "")
        lines.append(
            f"{format_utc(p.satellite.at)},{p.satellite.value:.6f},{valid},"
            f"{format_utc(p.camera.at)},{p.camera.value:.6f},{p.delta_s:.0f}"
        )
    _write_lines(path, lines)


def write_unmatched_csv(
    unmatched: Iterable[tuple[Observation, str] | tuple[datetime, str]],
    path: str | Path,
) -> None:
    """Write satellite timestamps that found no pair, with their reasons."""
    lines = [UNMATCHED_HEADER]
    for item, reason in unmatched:
        at = item.at if isinstance(item, Observation) else item
        safe = reason.replace(",", ";")  # keep the two-column layout parseable
        lines.append(f"{format_utc(at)},{safe}")
    _write_lines(path, lines)


def _write_lines(path: str | Path, lines: list[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
