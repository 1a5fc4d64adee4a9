"""Access-log parsing and page filtering.

Accepts Common Log Format and Combined Log Format lines:

    host ident authuser [dd/Mon/yyyy:HH:MM:SS zzzzz] "METHOD path PROTO" status bytes
    ... "referer" "user-agent"              (combined only)

A ``-`` in an optional field means the field is absent.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from functools import lru_cache
from typing import Iterable, Iterator, NamedTuple, Optional

from .sessionizer import Hit

FORMATS = ("common", "combined")

_COMMON = (
    r"(?P<host>\S+) (?P<ident>\S+) (?P<authuser>\S+) "
    r"\[(?P<ts>\d{2}/[A-Za-z]{3}/\d{4}:\d{2}:\d{2}:\d{2} [+-]\d{4})\] "
    r'"(?P<method>[A-Z]+) (?P<path>\S+) (?P<proto>[^\s"]+)" '
    r"(?P<status>\d{3}) (?P<bytes>\d+|-)"
)
_PATTERNS = {
    "common": re.compile(_COMMON),
    "combined": re.compile(
        _COMMON + r' "(?P<referer>(?:[^"\\]|\\.)*)" "(?P<agent>(?:[^"\\]|\\.)*)"'
    ),
}

_MONTHS = {
    m: i
    for i, m in enumerate(
        ("Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"),
        start=1,
    )
}

DEFAULT_IGNORED_EXTENSIONS = frozenset(
    {"jpg", "jpeg", "gif", "png", "bmp", "ico", "css", "js", "swf"}
)
DEFAULT_ACCEPTED_STATUSES = frozenset(list(range(200, 300)) + [304])
DEFAULT_ACCEPTED_METHODS = frozenset({"GET"})


class MalformedLine(ValueError):
    """Raised by :func:`parse_line` for input that does not match the grammar."""

    def __init__(self, reason: str, line: str = ""):
        super().__init__(reason)
        self.reason = reason
        self.line = line


class RawHit(NamedTuple):
    client_addr: str
    ident: Optional[str]
    authuser: Optional[str]
    timestamp: datetime
    method: str
    path: str
    protocol: str
    status: int
    bytes: Optional[int]
    referer: Optional[str] = None
    user_agent: Optional[str] = None


@dataclass(frozen=True)
class FilterConfig:
    ignored_extensions: frozenset = DEFAULT_IGNORED_EXTENSIONS
    accepted_statuses: frozenset = DEFAULT_ACCEPTED_STATUSES
    accepted_methods: frozenset = DEFAULT_ACCEPTED_METHODS
    strip_query: bool = True
    key_user_agent: bool = False


@dataclass
class ParseStats:
    """Running counters for one ingest pass."""

    lines: int = 0
    malformed: int = 0
    rejected: int = 0
    kept: int = 0
    # (source, line number, reason) for the first few malformed lines
    samples: list = field(default_factory=list)
    max_samples: int = 20

    def note_malformed(self, source: str, lineno: int, reason: str) -> None:
        self.malformed += 1
        if len(self.samples) < self.max_samples:
            self.samples.append((source, lineno, reason))


def _absent(value: Optional[str]) -> Optional[str]:
    return None if value is None or value == "-" else value


@lru_cache(maxsize=1 << 16)
def _parse_timestamp(text: str) -> datetime:
    # dd/Mon/yyyy:HH:MM:SS +zzzz; strptime is several times slower than this
    month = _MONTHS.get(text[3:6])
    if month is None:
        raise MalformedLine(f"bad month {text[3:6]!r}")
    sign = 1 if text[21] == "+" else -1
    offset = sign * (int(text[22:24]) * 60 + int(text[24:26]))
    try:
        return datetime(
            int(text[7:11]), month, int(text[0:2]),
            int(text[12:14]), int(text[15:17]), int(text[18:20]),
            tzinfo=_zone(offset),
        )
    except ValueError as exc:
        raise MalformedLine(f"bad timestamp {text!r}: {exc}") from None


@lru_cache(maxsize=None)
def _zone(offset_minutes: int) -> timezone:
    if offset_minutes == 0:
        return timezone.utc
    return timezone(timedelta(minutes=offset_minutes))


def parse_line(line: str, format: str = "common") -> RawHit:
    """Parse one log line (no trailing newline) or raise :class:`MalformedLine`."""
    try:
        pattern = _PATTERNS[format]
    except KeyError:
        raise ValueError(f"unknown log format {format!r}; expected one of {FORMATS}") from None
    if not line:
        raise MalformedLine("empty line", line)
    m = pattern.fullmatch(line)
    if m is None:
        raise MalformedLine(f"does not match {format} log format", line)
    if format == "combined":
        host, ident, user, ts, method, path, proto, status, size, referer, agent = m.groups()
        referer, agent = _absent(referer), _absent(agent)
    else:
        host, ident, user, ts, method, path, proto, status, size = m.groups()
        referer = agent = None
    status = int(status)
    if not 100 <= status <= 599:
        raise MalformedLine(f"status {status} out of range", line)
    return RawHit(
        host,
        None if ident == "-" else ident,
        None if user == "-" else user,
        _parse_timestamp(ts),
        method,
        path,
        proto,
        status,
        None if size == "-" else int(size),
        referer,
        agent,
    )


def normalize_path(path: str, strip_query: bool = True) -> str:
    """Drop the fragment always and the query string when asked."""
    path = path.split("#", 1)[0]
    if strip_query:
        path = path.split("?", 1)[0]
    return path


def path_extension(path: str) -> str:
    """Lowercased extension of the last path segment, '' if there is none."""
    end = len(path)
    for sep in "?#":
        i = path.find(sep, 0, end)
        if i >= 0:
            end = i
    dot = path.rfind(".", 0, end)
    if dot < 0 or path.find("/", dot, end) >= 0:
        return ""
    return path[dot + 1:end].lower()


def client_key(hit: RawHit, key_user_agent: bool = False) -> str:
    if key_user_agent and hit.user_agent:
        return f"{hit.client_addr}|{hit.user_agent}"
    return hit.client_addr


def accepts(hit: RawHit, cfg: FilterConfig) -> bool:
    return (
        hit.status in cfg.accepted_statuses
        and hit.method in cfg.accepted_methods
        and path_extension(hit.path) not in cfg.ignored_extensions
    )


def to_hit(raw: RawHit, cfg: FilterConfig) -> Hit:
    page = normalize_path(raw.path, cfg.strip_query) or "/"
    return Hit(client_key(raw, cfg.key_user_agent), raw.timestamp.timestamp(), page)


def filter_hits(hits: Iterable[RawHit], cfg: FilterConfig = FilterConfig()) -> list[Hit]:
    """Keep page requests only, in source order, as normalized :class:`Hit` records."""
    return [to_hit(h, cfg) for h in hits if accepts(h, cfg)]


def iter_hits(
    lines: Iterable[str],
    format: str = "common",
    cfg: FilterConfig = FilterConfig(),
    stats: Optional[ParseStats] = None,
    source: str = "<input>",
) -> Iterator[Hit]:
    """Parse and filter a stream of lines, counting malformed ones instead of failing."""
    if stats is None:
        stats = ParseStats()
    for lineno, line in enumerate(lines, start=1):
        line = line.rstrip("\r\n")
        stats.lines += 1
        try:
            raw = parse_line(line, format)
        except MalformedLine as exc:
            stats.note_malformed(source, lineno, exc.reason)
            continue
        if accepts(raw, cfg):
            stats.kept += 1
            yield to_hit(raw, cfg)
        else:
            stats.rejected += 1


def format_clf(
    client: str,
    when: datetime,
    path: str,
    status: int = 200,
    size: Optional[int] = None,
    method: str = "GET",
    protocol: str = "HTTP/1.1",
) -> str:
    """Render one Common Log Format line."""
    stamp = when.strftime("%d/%b/%Y:%H:%M:%S %z")
    return f'{client} - - [{stamp}] "{method} {path} {protocol}" {status} {"-" if size is None else size}'
