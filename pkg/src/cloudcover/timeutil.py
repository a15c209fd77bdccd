"""UTC timestamp helpers shared by the camera and satellite readers.

Everything downstream works on timezone-aware UTC datetimes at seconds
resolution; local-time inputs must be converted before they reach this
package.
"""

from __future__ import annotations

from datetime import datetime, timezone

TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M:%SZ"
COMPACT_FORMAT = "%Y%m%d%H%M%S"


def parse_utc(text: str) -> datetime:
    """Parse ``YYYY-MM-DDTHH:MM:SSZ`` into an aware UTC datetime."""
    try:
        dt = datetime.strptime(text, TIMESTAMP_FORMAT)
    except ValueError as exc:
        raise ValueError(
            f"bad UTC timestamp {text!r}: expected YYYY-MM-DDTHH:MM:SSZ"
        ) from exc
    return dt.replace(tzinfo=timezone.utc)


def parse_compact_utc(text: str) -> datetime:
    """Parse a ``YYYYMMDDHHMMSS`` filename stem into an aware UTC datetime."""
    try:
        dt = datetime.strptime(text, COMPACT_FORMAT)
    except ValueError as exc:
        raise ValueError(
            f"bad compact timestamp {text!r}: expected YYYYMMDDHHMMSS"
        ) from exc
    return dt.replace(tzinfo=timezone.utc)


def format_utc(dt: datetime) -> str:
    """Format an aware datetime as ``YYYY-MM-DDTHH:MM:SSZ``."""
    if dt.tzinfo is None:
        raise ValueError("naive datetimes are ambiguous; attach a timezone first")
    return dt.astimezone(timezone.utc).strftime(TIMESTAMP_FORMAT)


def format_compact_utc(dt: datetime) -> str:
    """Format an aware datetime as a ``YYYYMMDDHHMMSS`` stem."""
    if dt.tzinfo is None:
        raise ValueError("naive datetimes are ambiguous; attach a timezone first")
    return dt.astimezone(timezone.utc).strftime(COMPACT_FORMAT)
