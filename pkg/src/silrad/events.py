"""Parsing and streaming of Sysmon events.

Two wire formats produce the same canonical record: Windows-event XML
fragments (one ``<Event>`` element per blank-line-delimited block) and
NDJSON log-shipper exports (one JSON object per line, flat or
``winlog.*``-nested layouts). Parsing is total: any input yields either
a SysmonEvent or a structured error, never a half-filled record.
"""

from __future__ import annotations

import io
import json
import socket
import sys
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable, Iterator

from .errors import (
    DuplicateField,
    MalformedJson,
    MalformedXml,
    MissingEventId,
    MissingTimestamp,
    ParseError,
    UnknownSourceTag,
)

LABEL_BENIGN = 0
LABEL_RANSOMWARE = 1

_LABEL_NAMES = {LABEL_BENIGN: "benign", LABEL_RANSOMWARE: "ransomware"}
_LABEL_VALUES = {v: k for k, v in _LABEL_NAMES.items()}

# Top-level NDJSON keys that are event metadata, not payload fields.
_RESERVED_KEYS = {"EventID", "UtcTime", "SourceHost", "Computer", "Label", "Family", "EventData"}


@dataclass
class SysmonEvent:
    event_id: int
    timestamp: datetime
    fields: dict[str, str] = field(default_factory=dict)
    source_host: str = ""
    label: int | None = None
    family: str | None = None


@dataclass
class LabeledInstance:
    """Featurized instance: dense vector, class label, originating event."""

    x: "object"  # numpy vector; kept loose to avoid importing numpy here
    y: int
    origin: SysmonEvent | None = None


def label_name(label: int) -> str:
    return _LABEL_NAMES[label]


def label_value(name: str) -> int:
    try:
        return _LABEL_VALUES[name.lower()]
    except KeyError:
        raise ValueError(f"unknown label {name!r}; expected benign or ransomware") from None


def _parse_timestamp(raw: str, *, offset: int | None = None, line: int | None = None) -> datetime:
    """UTC instant with microsecond precision; missing fractions become .000000."""
    text = raw.strip().replace("T", " ").replace("Z", "")
    if text.endswith("+00:00"):
        text = text[:-6]
    base, _, frac = text.partition(".")
    try:
        ts = datetime.strptime(base, "%Y-%m-%d %H:%M:%S")
    except ValueError:
        raise MissingTimestamp(f"unparseable timestamp {raw!r}", offset=offset, line=line) from None
    micro = int(frac[:6].ljust(6, "0")) if frac else 0
    return ts.replace(microsecond=micro, tzinfo=timezone.utc)


def _parse_event_id(raw, *, offset: int | None = None, line: int | None = None) -> int:
    try:
        event_id = int(str(raw).strip())
    except (TypeError, ValueError):
        raise MissingEventId(f"unparseable EventID {raw!r}", offset=offset, line=line) from None
    if not 1 <= event_id <= 29:
        raise MissingEventId(
            f"EventID {event_id} outside the Sysmon range 1..29", offset=offset, line=line
        )
    return event_id


# -- XML ------------------------------------------------------------------------


def _strip_ns(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def parse_event_xml(xml_text: str) -> SysmonEvent:
    """One well-formed <Event> element with <System> and <EventData> children."""
    anchor = xml_text.find("<Event")
    anchor = anchor if anchor >= 0 else 0
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        line_no, col = exc.position
        lines = xml_text.splitlines(keepends=True)
        offset = sum(len(ln) for ln in lines[: line_no - 1]) + col
        raise MalformedXml(f"XML parse failure: {exc.msg}", offset=offset) from None
    if _strip_ns(root.tag) != "Event":
        raise MalformedXml(f"expected <Event> root, found <{_strip_ns(root.tag)}>", offset=anchor)

    event_id_text = None
    timestamp_text = None
    source_host = ""
    fields: dict[str, str] = {}
    for child in root:
        name = _strip_ns(child.tag)
        if name == "System":
            for sys_child in child:
                sys_name = _strip_ns(sys_child.tag)
                if sys_name == "EventID":
                    event_id_text = sys_child.text
                elif sys_name == "TimeCreated":
                    timestamp_text = sys_child.get("SystemTime")
                elif sys_name == "Computer" and sys_child.text:
                    source_host = sys_child.text.strip()
        elif name == "EventData":
            for data in child:
                if _strip_ns(data.tag) != "Data":
                    continue
                data_name = data.get("Name")
                if data_name is None:
                    continue
                if data_name in fields:
                    raise DuplicateField(
                        f"field {data_name!r} appears twice in EventData", offset=anchor
                    )
                fields[data_name] = data.text if data.text is not None else ""

    if event_id_text is None:
        raise MissingEventId("no <EventID> under <System>", offset=anchor)
    if timestamp_text is None:
        raise MissingTimestamp("no TimeCreated/@SystemTime under <System>", offset=anchor)
    return SysmonEvent(
        event_id=_parse_event_id(event_id_text, offset=anchor),
        timestamp=_parse_timestamp(timestamp_text, offset=anchor),
        fields=fields,
        source_host=source_host,
    )


# -- NDJSON ----------------------------------------------------------------------


def parse_event_ndjson(line: str) -> SysmonEvent:
    """One JSON object per line; flat, EventData-nested, or winlog.* layouts."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedJson(f"JSON parse failure: {exc.msg}", offset=exc.pos) from None
    if not isinstance(obj, dict):
        raise MalformedJson(f"expected a JSON object, got {type(obj).__name__}", offset=0)

    winlog = obj.get("winlog")
    if isinstance(winlog, dict):
        event_id_raw = winlog.get("event_id")
        ts_raw = obj.get("@timestamp")
        source_host = str(winlog.get("computer_name", ""))
        payload = winlog.get("event_data") or {}
        label_raw = obj.get("Label")
        family = obj.get("Family")
    else:
        event_id_raw = obj.get("EventID")
        ts_raw = obj.get("UtcTime", obj.get("@timestamp"))
        source_host = str(obj.get("SourceHost", obj.get("Computer", "")))
        label_raw = obj.get("Label")
        family = obj.get("Family")
        payload = {}
        nested = obj.get("EventData")
        if isinstance(nested, dict):
            payload.update(nested)
        for key, value in obj.items():
            if key not in _RESERVED_KEYS and key != "@timestamp":
                payload[key] = value

    if event_id_raw is None:
        raise MissingEventId("no EventID key in record", offset=0)
    if ts_raw is None:
        raise MissingTimestamp("no UtcTime/@timestamp key in record", offset=0)
    fields = {str(k): v if isinstance(v, str) else json.dumps(v) for k, v in payload.items()}
    label = None
    if label_raw is not None:
        label = label_value(str(label_raw))
    return SysmonEvent(
        event_id=_parse_event_id(event_id_raw),
        timestamp=_parse_timestamp(str(ts_raw)),
        fields=fields,
        source_host=source_host,
        label=label,
        family=str(family) if family is not None else None,
    )


def event_to_ndjson(event: SysmonEvent) -> str:
    """Canonical single-line JSON form; payload nests under EventData so a
    payload field named like a metadata key cannot collide."""
    obj: dict = {
        "EventID": event.event_id,
        "UtcTime": event.timestamp.strftime("%Y-%m-%d %H:%M:%S.%f"),
    }
    if event.source_host:
        obj["SourceHost"] = event.source_host
    if event.label is not None:
        obj["Label"] = label_name(event.label)
    if event.family is not None:
        obj["Family"] = event.family
    obj["EventData"] = event.fields
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False)


# -- streaming ---------------------------------------------------------------------


@dataclass
class ParseDiagnostic:
    line: int
    error: ParseError

    def to_json(self) -> str:
        return json.dumps({"line": self.line, "error": str(self.error)})


def _open_source(source) -> tuple[Iterable[str], bool]:
    """Line iterator plus whether the caller owns (must close) it."""
    if hasattr(source, "read"):
        return source, False
    text = str(source)
    if text == "-":
        return sys.stdin, False
    if text.startswith("tcp://"):
        host, _, port = text[len("tcp://") :].partition(":")
        conn = socket.create_connection((host, int(port)))
        return conn.makefile("r", encoding="utf-8"), True
    return open(Path(text), "r", encoding="utf-8"), True


def read_stream(
    source,
    format: str = "ndjson",
    *,
    strict: bool = False,
    on_error: Callable[[ParseDiagnostic], None] | None = None,
) -> Iterator[SysmonEvent]:
    """Lazily yield events in arrival order from a path, '-', tcp://host:port,
    or an open text handle.

    Lenient mode (default) reports per-record failures through ``on_error``
    and keeps going; strict mode re-raises the first failure. Memory stays
    bounded by one record regardless of stream length.
    """
    if format not in ("ndjson", "xml"):
        raise ValueError(f"unknown stream format {format!r}")
    lines, owned = _open_source(source)

    def fail(line_no: int, exc: ParseError) -> None:
        exc.line = line_no
        if strict:
            raise exc
        if on_error is not None:
            on_error(ParseDiagnostic(line=line_no, error=exc))

    try:
        if format == "ndjson":
            for line_no, line in enumerate(lines, start=1):
                if not line.strip():
                    continue
                try:
                    yield parse_event_ndjson(line)
                except ParseError as exc:
                    fail(line_no, exc)
        else:
            block: list[str] = []
            block_start = 1
            for line_no, line in enumerate(lines, start=1):
                if line.strip():
                    if not block:
                        block_start = line_no
                    block.append(line)
                    if "</Event>" not in line:
                        continue
                elif not block:
                    continue
                try:
                    yield parse_event_xml("".join(block))
                except ParseError as exc:
                    fail(block_start, exc)
                block = []
            if block:
                try:
                    yield parse_event_xml("".join(block))
                except ParseError as exc:
                    fail(block_start, exc)
    finally:
        if owned:
            lines.close()


def sort_stream(events: Iterable[SysmonEvent]) -> list[SysmonEvent]:
    """Stable sort by timestamp; materializes the stream."""
    return sorted(events, key=lambda e: e.timestamp)


# -- labelling -----------------------------------------------------------------------


@dataclass
class LabelCounts:
    benign: int = 0
    ransomware: int = 0
    by_family: dict[str, int] = field(default_factory=dict)

    def note(self, label: int, family: str | None) -> None:
        if label == LABEL_RANSOMWARE:
            self.ransomware += 1
        else:
            self.benign += 1
        if family:
            self.by_family[family] = self.by_family.get(family, 0) + 1

    @property
    def total(self) -> int:
        return self.benign + self.ransomware

    def prevalence(self) -> float:
        return self.ransomware / self.total if self.total else 0.0


def load_manifest(path) -> dict[str, tuple[int, str | None]]:
    """Label manifest: {"segments": [{"tag", "label", "family"}]} keyed by tag."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    manifest = {}
    for seg in doc["segments"]:
        manifest[seg["tag"]] = (label_value(seg["label"]), seg.get("family"))
    return manifest


def attach_labels(
    events: Iterable[SysmonEvent],
    manifest: dict[str, tuple[int, str | None]],
    counts: LabelCounts | None = None,
) -> Iterator[SysmonEvent]:
    """Populate label/family from the event's source tag (its source_host)."""
    for event in events:
        tag = event.source_host
        if tag not in manifest:
            raise UnknownSourceTag(f"source tag {tag!r} missing from the label manifest")
        label, family = manifest[tag]
        if counts is not None:
            counts.note(label, family)
        yield replace(event, label=label, family=family)
