"""User identification, session grouping and vendor URL extraction.

A user is the (IP, username) pair. Sessions are keyed by the proxy session
token; entries that carry no token (``-``) fall back to per-user grouping
with a 30-minute inactivity gap, which is standard web-analytics practice
rather than proxy behaviour.

Resource references are pulled out of request URLs by a configurable
pattern registry, because content vendors all shape their URLs differently.
"""

from __future__ import annotations

import fnmatch
import json
import logging
from dataclasses import dataclass, field
from datetime import datetime
from typing import Dict, Iterable, List, Optional
from urllib.parse import parse_qs, urlsplit

from .errors import HyperlensError
from .log_ingest import LogEntry, format_timestamp, parse_timestamp

logger = logging.getLogger(__name__)

DEFAULT_INACTIVITY_GAP = 30 * 60  # seconds, for entries without a session id


class AnonymousEntry(HyperlensError):
    """The username field is the '-' placeholder, so no user key exists."""

    category = "session"


class RegistryError(HyperlensError):
    """Pattern registry file is malformed."""

    category = "config"


@dataclass(frozen=True)
class UserKey:
    host: str
    username: str

    def as_str(self) -> str:
        return f"{self.host}|{self.username}"


@dataclass
class ResourceRef:
    """One extracted item reference; (vendor, doc_id) is the item identity."""

    vendor: str
    doc_id: str
    extras: Dict[str, str] = field(default_factory=dict)
    title: Optional[str] = None


@dataclass
class Session:
    session_id: str
    user: UserKey
    start: datetime
    end: datetime
    resources: List[ResourceRef] = field(default_factory=list)
    entry_count: int = 0


@dataclass
class SessionReport:
    input_entries: int = 0
    sessions: int = 0
    conflicting_session_ids: int = 0
    anonymous_entries: int = 0
    missing_session_id_entries: int = 0
    unmatched_urls: int = 0

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True, indent=2) + "\n"


@dataclass(frozen=True)
class PatternRule:
    """One vendor URL rule: a host glob plus where the doc id lives.

    ``id_source`` and each entry of ``extras`` use the syntax
    ``query:<key>`` (a query-string parameter) or ``path:<index>``
    (0-based index into the non-empty path segments).
    """

    name: str
    host_glob: str
    id_source: str
    extras: tuple = ()

    def __post_init__(self):
        for source in (self.id_source, *self.extras):
            kind, _, arg = source.partition(":")
            if kind not in ("query", "path") or not arg:
                raise RegistryError(
                    f"rule {self.name!r}: bad source {source!r} "
                    "(expected query:<key> or path:<index>)")
            if kind == "path" and not arg.lstrip("-").isdigit():
                raise RegistryError(
                    f"rule {self.name!r}: path index {arg!r} is not an integer")


def load_registry(path) -> List[PatternRule]:
    """Load pattern rules from a JSON file: a list of objects with keys
    name, host_glob, id_source and optional extras."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, list):
        raise RegistryError("registry must be a JSON list of rules")
    rules = []
    for i, obj in enumerate(raw):
        try:
            rules.append(PatternRule(
                name=obj["name"],
                host_glob=obj["host_glob"],
                id_source=obj["id_source"],
                extras=tuple(obj.get("extras", ())),
            ))
        except KeyError as exc:
            raise RegistryError(f"registry rule #{i} missing key {exc}")
    return rules


def _pick(source: str, segments: List[str], query: Dict[str, list]) -> Optional[str]:
    kind, _, arg = source.partition(":")
    if kind == "query":
        values = query.get(arg)
        return values[0] if values else None
    index = int(arg)
    if -len(segments) <= index < len(segments):
        return segments[index]
    return None


def _extra_key(source: str) -> str:
    kind, _, arg = source.partition(":")
    return arg if kind == "query" else f"seg{arg}"


def identify_user(entry: LogEntry) -> UserKey:
    """Key an entry by (IP, username); '-' usernames have no identity."""
    if entry.username == "-":
        raise AnonymousEntry(f"entry from {entry.host} has placeholder username")
    return UserKey(host=entry.host, username=entry.username)


def extract_resource(url: str, registry: List[PatternRule]) -> Optional[ResourceRef]:
    """Extract a resource reference using the first matching rule, or None."""
    try:
        parts = urlsplit(url)
        hostname = parts.hostname or ""
    except ValueError:
        return None
    segments = [seg for seg in parts.path.split("/") if seg]
    query = parse_qs(parts.query, keep_blank_values=False)
    for rule in registry:
        if not fnmatch.fnmatch(hostname, rule.host_glob):
            continue
        doc_id = _pick(rule.id_source, segments, query)
        if not doc_id:
            continue
        extras = {}
        for source in rule.extras:
            value = _pick(source, segments, query)
            if value is not None:
                extras[_extra_key(source)] = value
        return ResourceRef(vendor=rule.name, doc_id=doc_id, extras=extras)
    return None


def _finish_session(session: Session) -> Session:
    if session.start > session.end:
        session.start, session.end = session.end, session.start
    return session


def build_sessions(entries: Iterable[LogEntry],
                   registry: List[PatternRule],
                   catalog: Optional[Dict[str, str]] = None,
                   inactivity_gap: int = DEFAULT_INACTIVITY_GAP) -> tuple:
    """Group cleaned entries into sessions.

    One session per (session id, user): a session id shared by several
    users is split per user and counted as a conflict. Entries whose URL
    matches no pattern still extend the session's time span but contribute
    no resource. Returns ``(sessions, SessionReport)`` with sessions in
    first-seen order.
    """
    report = SessionReport()
    sessions: Dict[tuple, Session] = {}
    seen_users_per_sid: Dict[str, set] = {}
    auto_counters: Dict[UserKey, int] = {}
    auto_last_seen: Dict[UserKey, datetime] = {}

    for entry in entries:
        report.input_entries += 1
        try:
            user = identify_user(entry)
        except AnonymousEntry:
            report.anonymous_entries += 1
            continue

        sid = entry.session_id
        if sid == "-":
            # No proxy token: sessionize by user and inactivity gap.
            report.missing_session_id_entries += 1
            last = auto_last_seen.get(user)
            if last is None or (entry.timestamp - last).total_seconds() > inactivity_gap:
                auto_counters[user] = auto_counters.get(user, 0) + 1
            auto_last_seen[user] = entry.timestamp
            sid = f"auto-{user.host}-{user.username}-{auto_counters[user]}"
        else:
            users = seen_users_per_sid.setdefault(sid, set())
            if user not in users:
                users.add(user)
                if len(users) == 2:
                    report.conflicting_session_ids += 1
                    logger.warning("session id %s spans multiple users; splitting", sid)

        key = (sid, user)
        session = sessions.get(key)
        if session is None:
            session = Session(session_id=sid, user=user,
                              start=entry.timestamp, end=entry.timestamp)
            sessions[key] = session
        else:
            session.start = min(session.start, entry.timestamp)
            session.end = max(session.end, entry.timestamp)
        session.entry_count += 1

        ref = extract_resource(entry.url, registry)
        if ref is None:
            report.unmatched_urls += 1
        else:
            if catalog is not None:
                ref.title = catalog.get(ref.doc_id)
            session.resources.append(ref)

    result = [_finish_session(s) for s in sessions.values()]
    report.sessions = len(result)
    return result, report


def session_length(session: Session) -> int:
    """Session duration in whole seconds (end - start)."""
    return int((session.end - session.start).total_seconds())


def load_catalog(path) -> Dict[str, str]:
    """Read a ``doc_id<TAB>title`` TSV into a dict."""
    catalog = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                doc_id, title = line.split("\t", 1)
            except ValueError:
                raise HyperlensError(f"{path}:{lineno}: catalog line needs a tab")
            catalog[doc_id] = title
    return catalog


def render_catalog(catalog: Dict[str, str]) -> str:
    return "".join(f"{doc_id}\t{title}\n" for doc_id, title in sorted(catalog.items()))


def sessions_to_jsonl(sessions: Iterable[Session]) -> str:
    """One compact JSON object per session, in the given order."""
    lines = []
    for s in sessions:
        obj = {
            "session_id": s.session_id,
            "user": {"host": s.user.host, "username": s.user.username},
            "start": format_timestamp(s.start),
            "end": format_timestamp(s.end),
            "entry_count": s.entry_count,
            "resources": [
                {"vendor": r.vendor, "doc_id": r.doc_id,
                 "extras": r.extras, "title": r.title}
                for r in s.resources
            ],
        }
        lines.append(json.dumps(obj, sort_keys=True, separators=(",", ":")))
    return "".join(line + "\n" for line in lines)


def sessions_from_jsonl(text: str) -> List[Session]:
    sessions = []
    for line in text.splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        sessions.append(Session(
            session_id=obj["session_id"],
            user=UserKey(obj["user"]["host"], obj["user"]["username"]),
            start=parse_timestamp(obj["start"]),
            end=parse_timestamp(obj["end"]),
            entry_count=obj.get("entry_count", 0),
            resources=[
                ResourceRef(vendor=r["vendor"], doc_id=r["doc_id"],
                            extras=r.get("extras", {}), title=r.get("title"))
                for r in obj["resources"]
            ],
        ))
    return sessions
