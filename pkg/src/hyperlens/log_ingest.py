"""EZproxy access-log parsing and cleaning.

The input is the common log format variant with a session token in the
fourth field::

    %h %u %l %{ezproxy-session}i %t "%r" %s %b

e.g. ``10.0.0.1 X2bFdM1R3txwlkv - 13d8f72f08d1a4e1c418a7cb8fc31437
[01/Jun/2014:00:47:10 -0500] "GET http://... HTTP/1.1" 200 29732``

Lines are scanned field by field (not with one big regex) so that parse
errors can report the byte offset where the line first went wrong.
Timestamps are parsed and formatted with an explicit month table, so
behaviour does not depend on the process locale and a parsed entry
re-serializes byte-identically.
"""

from __future__ import annotations

import gzip
import ipaddress
import json
import logging
import re
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Iterable, Optional
from urllib.parse import urlsplit

from .errors import HyperlensError

logger = logging.getLogger(__name__)

DEFAULT_ASSET_SUFFIXES = frozenset(
    {"jpeg", "jpg", "gif", "css", "js", "png", "ico", "svg", "woff", "woff2"}
)

_MONTH_ABBR = ("Jan", "Feb", "Mar", "Apr", "May", "Jun",
               "Jul", "Aug", "Sep", "Oct", "Nov", "Dec")
_MONTH_NUM = {name: i + 1 for i, name in enumerate(_MONTH_ABBR)}

_TS_RE = re.compile(
    r"^(\d{2})/([A-Za-z]{3})/(\d{4}):(\d{2}):(\d{2}):(\d{2}) ([+-])(\d{2})(\d{2})$"
)


class LogParseError(HyperlensError):
    """A log line failed to parse; ``offset`` is the byte offset of the
    first position that made the line invalid."""

    category = "parse"

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class MalformedLine(LogParseError):
    """Wrong field count, unbalanced quotes/brackets, or a bad field value."""


class BadTimestamp(LogParseError):
    """Timestamp not in ``dd/Mon/yyyy:HH:mm:ss +zzzz`` form (the UTC offset
    is required, never guessed)."""


class BadStatus(LogParseError):
    """Status is not an integer in [100, 599]."""


@dataclass(frozen=True)
class LogEntry:
    """One parsed access-log line."""

    host: str
    username: str
    remote_user: str
    session_id: str
    timestamp: datetime
    method: str
    url: str
    protocol: str
    status: int
    bytes: Optional[int]


@dataclass(frozen=True)
class CleaningConfig:
    """Which entries survive cleaning: non-asset URLs with a success status."""

    asset_suffixes: frozenset = DEFAULT_ASSET_SUFFIXES
    success_status_range: tuple = (200, 299)

    def __post_init__(self):
        if not self.asset_suffixes:
            raise ValueError("asset_suffixes must be non-empty")
        if any(s != s.lower() for s in self.asset_suffixes):
            object.__setattr__(
                self, "asset_suffixes",
                frozenset(s.lower() for s in self.asset_suffixes))
        low, high = self.success_status_range
        if low > high:
            raise ValueError(f"bad status range: {self.success_status_range}")


@dataclass
class CleaningReport:
    """Removal counts per cleaning rule; reports from parallel chunks can be
    summed as long as the chunks preserve line order."""

    input_entries: int = 0
    retained: int = 0
    status_removed: int = 0
    asset_removed: int = 0
    unparseable_urls: int = 0

    def __add__(self, other: "CleaningReport") -> "CleaningReport":
        return CleaningReport(
            self.input_entries + other.input_entries,
            self.retained + other.retained,
            self.status_removed + other.status_removed,
            self.asset_removed + other.asset_removed,
            self.unparseable_urls + other.unparseable_urls,
        )

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True, indent=2) + "\n"


@dataclass
class ParseReport:
    """Outcome of parsing a whole file in non-strict mode."""

    total_lines: int = 0
    parsed: int = 0
    malformed: int = 0
    errors: list = field(default_factory=list)  # first few (lineno, message)

    _MAX_SAMPLES = 20

    def record_error(self, lineno: int, exc: LogParseError) -> None:
        self.malformed += 1
        if len(self.errors) < self._MAX_SAMPLES:
            self.errors.append([lineno, str(exc)])

    def to_json(self) -> str:
        payload = {
            "total_lines": self.total_lines,
            "parsed": self.parsed,
            "malformed": self.malformed,
            "error_samples": self.errors,
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"


class _Scanner:
    """Cursor over one log line, tracking the byte offset for errors."""

    def __init__(self, line: str):
        self.line = line
        self.pos = 0

    def byte_offset(self, pos: Optional[int] = None) -> int:
        p = self.pos if pos is None else pos
        return len(self.line[:p].encode("utf-8"))

    def fail(self, exc_type, message: str, pos: Optional[int] = None):
        raise exc_type(message, self.byte_offset(pos))

    def take_space(self) -> None:
        if self.pos >= len(self.line) or self.line[self.pos] != " ":
            self.fail(MalformedLine, "expected a space separator")
        self.pos += 1

    def take_plain(self, name: str) -> str:
        start = self.pos
        end = self.line.find(" ", start)
        if end == -1:
            end = len(self.line)
        token = self.line[start:end]
        if not token:
            self.fail(MalformedLine, f"empty {name} field")
        self.pos = end
        return token

    def take_delimited(self, opener: str, closer: str, name: str) -> tuple:
        """Return (content, content_start_pos) for e.g. ``[...]`` or ``"..."``."""
        if self.pos >= len(self.line) or self.line[self.pos] != opener:
            self.fail(MalformedLine, f"expected {opener!r} to open {name}")
        start = self.pos + 1
        end = self.line.find(closer, start)
        if end == -1:
            self.fail(MalformedLine, f"unterminated {name}", pos=start)
        self.pos = end + 1
        return self.line[start:end], start

    def expect_end(self) -> None:
        if self.pos != len(self.line):
            self.fail(MalformedLine, "unexpected trailing content")


def parse_timestamp(raw: str, byte_offset: int = 0) -> datetime:
    """Parse ``dd/Mon/yyyy:HH:mm:ss +zzzz`` with an explicit month table."""
    m = _TS_RE.match(raw)
    if not m:
        raise BadTimestamp(f"bad timestamp {raw!r}", byte_offset)
    day, mon, year, hh, mm, ss, sign, oh, om = m.groups()
    month = _MONTH_NUM.get(mon)
    if month is None:
        raise BadTimestamp(f"unknown month {mon!r}", byte_offset)
    offset = timedelta(hours=int(oh), minutes=int(om))
    if sign == "-":
        offset = -offset
    try:
        return datetime(int(year), month, int(day), int(hh), int(mm), int(ss),
                        tzinfo=timezone(offset))
    except ValueError as exc:
        raise BadTimestamp(f"invalid calendar time {raw!r}: {exc}", byte_offset)


def format_timestamp(ts: datetime) -> str:
    """Inverse of :func:`parse_timestamp`; locale-independent."""
    off = ts.utcoffset()
    if off is None:
        raise ValueError("timestamp must carry a UTC offset")
    total = int(off.total_seconds())
    sign = "-" if total < 0 else "+"
    total = abs(total)
    return (
        f"{ts.day:02d}/{_MONTH_ABBR[ts.month - 1]}/{ts.year:04d}:"
        f"{ts.hour:02d}:{ts.minute:02d}:{ts.second:02d} "
        f"{sign}{total // 3600:02d}{(total % 3600) // 60:02d}"
    )


def parse_log_line(line: str) -> LogEntry:
    """Parse one physical log line into a :class:`LogEntry`.

    Raises :class:`MalformedLine`, :class:`BadTimestamp` or
    :class:`BadStatus`, each carrying the byte offset of first failure.
    """
    line = line.rstrip("\r\n")
    sc = _Scanner(line)

    host_pos = sc.pos
    host = sc.take_plain("host")
    try:
        ipaddress.ip_address(host)
    except ValueError:
        sc.fail(MalformedLine, f"host {host!r} is not an IP address", pos=host_pos)
    sc.take_space()
    username = sc.take_plain("username")
    sc.take_space()
    remote_user = sc.take_plain("remote user")
    sc.take_space()
    session_id = sc.take_plain("session id")
    sc.take_space()

    ts_raw, ts_pos = sc.take_delimited("[", "]", "timestamp")
    timestamp = parse_timestamp(ts_raw, sc.byte_offset(ts_pos))
    sc.take_space()

    request, req_pos = sc.take_delimited('"', '"', "request")
    parts = request.split(" ")
    if len(parts) != 3 or not all(parts):
        sc.fail(MalformedLine,
                "request must be exactly 'METHOD URL PROTOCOL' "
                "(URLs with spaces must be percent-encoded)", pos=req_pos)
    method, url, protocol = parts
    sc.take_space()

    status_pos = sc.pos
    status_raw = sc.take_plain("status")
    try:
        status = int(status_raw)
    except ValueError:
        sc.fail(BadStatus, f"status {status_raw!r} is not an integer", pos=status_pos)
    if not 100 <= status <= 599:
        sc.fail(BadStatus, f"status {status} outside [100, 599]", pos=status_pos)
    sc.take_space()

    bytes_pos = sc.pos
    bytes_raw = sc.take_plain("bytes")
    if bytes_raw == "-":
        nbytes = None
    else:
        try:
            nbytes = int(bytes_raw)
        except ValueError:
            nbytes = -1
        if nbytes < 0:
            sc.fail(MalformedLine, f"bytes {bytes_raw!r} is not a non-negative "
                    "integer or '-'", pos=bytes_pos)
    sc.expect_end()

    return LogEntry(host=host, username=username, remote_user=remote_user,
                    session_id=session_id, timestamp=timestamp, method=method,
                    url=url, protocol=protocol, status=status, bytes=nbytes)


def serialize_log_entry(entry: LogEntry) -> str:
    """Render an entry back into its exact textual log form (no newline)."""
    nbytes = "-" if entry.bytes is None else str(entry.bytes)
    return (
        f"{entry.host} {entry.username} {entry.remote_user} {entry.session_id} "
        f"[{format_timestamp(entry.timestamp)}] "
        f'"{entry.method} {entry.url} {entry.protocol}" {entry.status} {nbytes}'
    )


def _url_path(url: str) -> Optional[str]:
    try:
        return urlsplit(url).path
    except ValueError:
        return None


def is_asset_request(url: str, cfg: CleaningConfig) -> bool:
    """True iff the URL path (query stripped, case-folded) ends with a
    configured asset suffix. Unparseable URLs count as non-assets."""
    path = _url_path(url)
    if path is None:
        return False
    path = path.lower()
    return any(path.endswith("." + suffix) for suffix in cfg.asset_suffixes)


def is_success_status(status: int, cfg: CleaningConfig) -> bool:
    low, high = cfg.success_status_range
    return low <= status <= high


def clean_log(entries: Iterable[LogEntry],
              cfg: Optional[CleaningConfig] = None) -> tuple:
    """Drop failed-status and asset entries, preserving input order.

    Returns ``(kept_entries, CleaningReport)``. An entry failing both rules
    is counted once, under the status rule (checked first).
    """
    if cfg is None:
        cfg = CleaningConfig()
    report = CleaningReport()
    kept = []
    for entry in entries:
        report.input_entries += 1
        if not is_success_status(entry.status, cfg):
            report.status_removed += 1
            continue
        if _url_path(entry.url) is None:
            report.unparseable_urls += 1
        if is_asset_request(entry.url, cfg):
            report.asset_removed += 1
            continue
        report.retained += 1
        kept.append(entry)
    return kept, report


def _open_text(path):
    """Open a log file for reading; gzip is detected by magic bytes."""
    with open(path, "rb") as probe:
        magic = probe.read(2)
    if magic == b"\x1f\x8b":
        return gzip.open(path, "rt", encoding="utf-8")
    return open(path, "r", encoding="utf-8")


def read_log(path, strict: bool = False) -> tuple:
    """Parse a whole log file.

    Returns ``(entries, ParseReport)``. Malformed lines are skipped and
    counted unless ``strict`` is set, in which case the first bad line is
    fatal.
    """
    entries = []
    report = ParseReport()
    with _open_text(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            report.total_lines += 1
            try:
                entries.append(parse_log_line(line))
            except LogParseError as exc:
                if strict:
                    raise MalformedLine(
                        f"{Path(path).name}:{lineno}: {exc}", exc.offset)
                report.record_error(lineno, exc)
                logger.warning("skipping malformed line %d: %s", lineno, exc)
    report.parsed = len(entries)
    return entries, report


def render_log(entries: Iterable[LogEntry]) -> str:
    """Serialize entries into log-file text."""
    return "".join(serialize_log_entry(e) + "\n" for e in entries)
