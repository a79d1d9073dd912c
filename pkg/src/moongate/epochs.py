"""Epoch handling: UTC calendar strings to seconds past J2000.

Dynamical time is treated as TT; the periodic TDB - TT term (under 2 ms)
is ignored. UTC conversion uses a fixed leap-second table, which is exact
for the supported era and keeps the toolkit free of runtime data services.
"""

from __future__ import annotations

import bisect
from datetime import datetime, timezone

from .constants import J2000_UNIX_S

# (Unix timestamp when the offset became effective, TAI - UTC seconds)
_LEAP_TABLE = (
    (63072000.0, 10.0),  # 1972-01-01
    (78796800.0, 11.0),  # 1972-07-01
    (94694400.0, 12.0),  # 1973-01-01
    (126230400.0, 13.0),  # 1974-01-01
    (157766400.0, 14.0),  # 1975-01-01
    (189302400.0, 15.0),  # 1976-01-01
    (220924800.0, 16.0),  # 1977-01-01
    (252460800.0, 17.0),  # 1978-01-01
    (283996800.0, 18.0),  # 1979-01-01
    (315532800.0, 19.0),  # 1980-01-01
    (362793600.0, 20.0),  # 1981-07-01
    (394329600.0, 21.0),  # 1982-07-01
    (425865600.0, 22.0),  # 1983-07-01
    (489024000.0, 23.0),  # 1985-07-01
    (567993600.0, 24.0),  # 1988-01-01
    (631152000.0, 25.0),  # 1990-01-01
    (662688000.0, 26.0),  # 1991-01-01
    (709948800.0, 27.0),  # 1992-07-01
    (741484800.0, 28.0),  # 1993-07-01
    (773020800.0, 29.0),  # 1994-07-01
    (820454400.0, 30.0),  # 1996-01-01
    (867715200.0, 31.0),  # 1997-07-01
    (915148800.0, 32.0),  # 1999-01-01
    (1136073600.0, 33.0),  # 2006-01-01
    (1230768000.0, 34.0),  # 2009-01-01
    (1341100800.0, 35.0),  # 2012-07-01
    (1435708800.0, 36.0),  # 2015-07-01
    (1483228800.0, 37.0),  # 2017-01-01
)

_LEAP_TIMES = tuple(entry[0] for entry in _LEAP_TABLE)


def tai_minus_utc(unix_s: float) -> float:
    """Accumulated leap seconds at a UTC instant given as a Unix timestamp."""
    idx = bisect.bisect_right(_LEAP_TIMES, unix_s) - 1
    if idx < 0:
        raise ValueError(
            f"epoch predates the leap-second table (unix {unix_s:.0f})"
        )
    return _LEAP_TABLE[idx][1]


def parse_utc(text: str) -> datetime:
    """Parse an ISO-8601 UTC string such as '2025-05-25T16:51:30'."""
    cleaned = text.strip().replace(" ", "T")
    if cleaned.endswith("Z"):
        cleaned = cleaned[:-1]
    try:
        stamp = datetime.fromisoformat(cleaned)
    except ValueError as exc:
        raise ValueError(f"unparseable UTC epoch {text!r}") from exc
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=timezone.utc)
    return stamp.astimezone(timezone.utc)


def utc_to_seconds_past_j2000(text: str) -> float:
    """Seconds of TT elapsed since J2000 for a UTC calendar string."""
    unix = parse_utc(text).timestamp()
    # Unix time repeats leap seconds, so true elapsed seconds add the change
    # in TAI - UTC since J2000 (32 s then).
    return unix - J2000_UNIX_S + tai_minus_utc(unix) - 32.0


def seconds_past_j2000_to_utc(t_s: float) -> str:
    """Inverse of utc_to_seconds_past_j2000, rounded to the millisecond."""
    unix = t_s + J2000_UNIX_S - tai_minus_utc(t_s + J2000_UNIX_S) + 32.0
    # One correction pass in case the first guess straddles a leap boundary.
    unix = t_s + J2000_UNIX_S - tai_minus_utc(unix) + 32.0
    stamp = datetime.fromtimestamp(round(unix, 3), tz=timezone.utc)
    if stamp.microsecond:
        return stamp.strftime("%Y-%m-%dT%H:%M:%S.%f")[:-3]
    return stamp.strftime("%Y-%m-%dT%H:%M:%S")
