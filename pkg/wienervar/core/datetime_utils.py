"""
Datetime utilities for run records.

All timestamps are timezone-aware UTC.
"""

from datetime import datetime
import pytz
from typing import Optional


def utc_now() -> datetime:
    """Current UTC time as a timezone-aware datetime."""
    return datetime.now(pytz.UTC)


def ensure_utc(dt: Optional[datetime]) -> Optional[datetime]:
    """
    Ensure a datetime is timezone-aware and in UTC.

    Naive datetimes are assumed to already be UTC.
    """
    if dt is None:
        return None

    if dt.tzinfo is None:
        return pytz.UTC.localize(dt)

    return dt.astimezone(pytz.UTC)


def to_utc_string(dt: Optional[datetime]) -> Optional[str]:
    """ISO string with a 'Z' suffix, or None."""
    if dt is None:
        return None

    return ensure_utc(dt).strftime('%Y-%m-%dT%H:%M:%S.%fZ')
