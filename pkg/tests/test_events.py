import io
import json
import socket
import threading
import tracemalloc
from datetime import datetime, timezone

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from silrad.errors import (
    DuplicateField,
    MalformedJson,
    MalformedXml,
    MissingEventId,
    MissingTimestamp,
    UnknownSourceTag,
)
from silrad.events import (
    LabelCounts,
    SysmonEvent,
    attach_labels,
    event_to_ndjson,
    load_manifest,
    parse_event_ndjson,
    parse_event_xml,
    read_stream,
    sort_stream,
)

NS = 'xmlns="http://schemas.microsoft.com/win/2004/08/events/event"'


def xml_event(event_id=1, ts="2024-01-01T00:00:00.123456Z", data=(), computer="ws01", ns=NS):
    rows = "".join(f'<Data Name="{k}">{v}</Data>' for k, v in data)
    return (
        f"<Event {ns}><System><EventID>{event_id}</EventID>"
        f'<TimeCreated SystemTime="{ts}"/><Computer>{computer}</Computer></System>'
        f"<EventData>{rows}</EventData></Event>"
    )


class TestParseXml:
    def test_process_creation_event(self):
        event = parse_event_xml(
            xml_event(1, data=[("Image", "C:\\Windows\\explorer.exe"), ("CommandLine", "explorer.exe /i")])
        )
        assert event.event_id == 1
        assert event.fields == {"Image": "C:\\Windows\\explorer.exe", "CommandLine": "explorer.exe /i"}
        assert event.timestamp == datetime(2024, 1, 1, 0, 0, 0, 123456, tzinfo=timezone.utc)
        assert event.source_host == "ws01"

    def test_minimal_event_empty_fields(self):
        event = parse_event_xml(xml_event(5))
        assert event.event_id == 5
        assert event.fields == {}

    def test_duplicate_field_rejected(self):
        doc = xml_event(1, data=[("Image", "a.exe"), ("Image", "b.exe")])
        with pytest.raises(DuplicateField):
            parse_event_xml(doc)

    def test_malformed_xml_names_offset(self):
        with pytest.raises(MalformedXml) as err:
            parse_event_xml("<Event><System></Event>")
        assert err.value.offset is not None

    def test_missing_event_id(self):
        doc = '<Event><System><TimeCreated SystemTime="2024-01-01T00:00:00Z"/></System></Event>'
        with pytest.raises(MissingEventId):
            parse_event_xml(doc)

    def test_missing_timestamp(self):
        doc = "<Event><System><EventID>1</EventID></System></Event>"
        with pytest.raises(MissingTimestamp):
            parse_event_xml(doc)

    def test_event_id_out_of_range(self):
        with pytest.raises(MissingEventId):
            parse_event_xml(xml_event(255))

    def test_namespace_optional(self):
        event = parse_event_xml(xml_event(11, ns=""))
        assert event.event_id == 11

    def test_second_precision_padded(self):
        event = parse_event_xml(xml_event(1, ts="2024-06-01T10:20:30Z"))
        assert event.timestamp.microsecond == 0


class TestParseNdjson:
    def test_flat_file_create(self):
        event = parse_event_ndjson(
            '{"EventID":11,"UtcTime":"2024-01-01 00:00:00.000","TargetFilename":"C:\\\\a.docx"}'
        )
        assert event.event_id == 11
        assert event.fields == {"TargetFilename": "C:\\a.docx"}

    def test_empty_string_malformed(self):
        with pytest.raises(MalformedJson):
            parse_event_ndjson("")

    def test_non_object_malformed(self):
        with pytest.raises(MalformedJson):
            parse_event_ndjson("[1,2,3]")

    def test_winlog_nested_layout(self):
        line = json.dumps(
            {
                "@timestamp": "2024-03-04T05:06:07.890Z",
                "winlog": {
                    "event_id": 3,
                    "computer_name": "ws02",
                    "event_data": {"DestinationPort": "443", "Protocol": "tcp"},
                },
            }
        )
        event = parse_event_ndjson(line)
        assert event.event_id == 3
        assert event.source_host == "ws02"
        assert event.fields["DestinationPort"] == "443"
        assert event.timestamp.microsecond == 890_000

    def test_missing_keys(self):
        with pytest.raises(MissingEventId):
            parse_event_ndjson('{"UtcTime":"2024-01-01 00:00:00"}')
        with pytest.raises(MissingTimestamp):
            parse_event_ndjson('{"EventID":1}')

    def test_xml_and_ndjson_agree(self):
        via_xml = parse_event_xml(xml_event(11, data=[("TargetFilename", "C:\\a.docx")]))
        via_json = parse_event_ndjson(
            '{"EventID":11,"UtcTime":"2024-01-01 00:00:00.123456","SourceHost":"ws01",'
            '"EventData":{"TargetFilename":"C:\\\\a.docx"}}'
        )
        assert via_xml == via_json


field_names = st.text(alphabet=st.characters(min_codepoint=65, max_codepoint=122), min_size=1, max_size=12)
field_values = st.text(
    alphabet=st.characters(min_codepoint=32, max_codepoint=1000, blacklist_characters="\x7f"),
    max_size=40,
)
events_strategy = st.builds(
    SysmonEvent,
    event_id=st.integers(1, 29),
    timestamp=st.datetimes(
        min_value=datetime(2000, 1, 1), max_value=datetime(2030, 1, 1)
    ).map(lambda d: d.replace(tzinfo=timezone.utc)),
    fields=st.dictionaries(field_names, field_values, max_size=6),
    source_host=field_names,
    label=st.sampled_from([None, 0, 1]),
    family=st.one_of(st.none(), field_names),
)


class TestRoundTrip:
    @given(events_strategy)
    @settings(max_examples=100)
    def test_ndjson_round_trip_identity(self, event):
        assert parse_event_ndjson(event_to_ndjson(event)) == event

    def test_xml_to_ndjson_round_trip(self):
        original = parse_event_xml(
            xml_event(13, data=[("TargetObject", "HKLM\\X\\Y"), ("Details", "DWORD (0x01)")])
        )
        assert parse_event_ndjson(event_to_ndjson(original)) == original


class TestReadStream:
    def test_ndjson_preserves_order(self, tmp_path):
        path = tmp_path / "events.ndjson"
        lines = [
            '{"EventID":1,"UtcTime":"2024-01-01 00:00:00.000","Seq":"a"}',
            '{"EventID":2,"UtcTime":"2024-01-01 00:00:01.000","Seq":"b"}',
            '{"EventID":3,"UtcTime":"2024-01-01 00:00:02.000","Seq":"c"}',
        ]
        path.write_text("\n".join(lines) + "\n")
        events = list(read_stream(path, "ndjson"))
        assert [e.fields["Seq"] for e in events] == ["a", "b", "c"]

    def test_lenient_mode_skips_bad_lines(self, tmp_path):
        path = tmp_path / "events.ndjson"
        good = ['{"EventID":%d,"UtcTime":"2024-01-01 00:00:00"}' % (i % 20 + 1) for i in range(10)]
        good[4] = "{broken json"
        path.write_text("\n".join(good) + "\n")
        diags = []
        events = list(read_stream(path, "ndjson", on_error=diags.append))
        assert len(events) == 9
        assert len(diags) == 1 and diags[0].line == 5

    def test_strict_mode_raises(self, tmp_path):
        path = tmp_path / "events.ndjson"
        path.write_text("{bad\n")
        with pytest.raises(MalformedJson):
            list(read_stream(path, "ndjson", strict=True))

    def test_xml_blocks_and_multiline(self, tmp_path):
        path = tmp_path / "events.xml"
        multi = xml_event(1, data=[("Image", "a.exe")]).replace("><", ">\n<")
        path.write_text(multi + "\n\n" + xml_event(5) + "\n")
        events = list(read_stream(path, "xml"))
        assert [e.event_id for e in events] == [1, 5]

    def test_file_handle_source(self):
        handle = io.StringIO('{"EventID":1,"UtcTime":"2024-01-01 00:00:00"}\n')
        assert len(list(read_stream(handle, "ndjson"))) == 1

    def test_socket_source(self):
        server = socket.create_server(("127.0.0.1", 0))
        port = server.getsockname()[1]

        def serve():
            conn, _ = server.accept()
            with conn:
                conn.sendall(b'{"EventID":1,"UtcTime":"2024-01-01 00:00:00"}\n')

        thread = threading.Thread(target=serve)
        thread.start()
        try:
            events = list(read_stream(f"tcp://127.0.0.1:{port}", "ndjson"))
        finally:
            thread.join()
            server.close()
        assert len(events) == 1 and events[0].event_id == 1

    def test_bounded_memory_ingest(self, tmp_path):
        line = '{"EventID":11,"UtcTime":"2024-01-01 00:00:00.000","TargetFilename":"C:\\\\users\\\\x\\\\%06d.docx"}\n'
        small = tmp_path / "small.ndjson"
        small.write_text("".join(line % i for i in range(2_000)))
        large = tmp_path / "large.ndjson"
        large.write_text("".join(line % i for i in range(40_000)))

        def peak_bytes(path):
            tracemalloc.start()
            count = 0
            for _ in read_stream(path, "ndjson"):
                count += 1
            _, peak = tracemalloc.get_traced_memory()
            tracemalloc.stop()
            return peak, count

        peak_small, n_small = peak_bytes(small)
        peak_large, n_large = peak_bytes(large)
        assert (n_small, n_large) == (2_000, 40_000)
        # 20x the events must not mean 20x the memory: one record at a time
        assert peak_large < 2 * peak_small + 1_000_000


class TestSortStream:
    def test_orders_by_timestamp(self):
        base = datetime(2024, 1, 1, tzinfo=timezone.utc)
        events = [
            SysmonEvent(1, base.replace(second=3)),
            SysmonEvent(1, base.replace(second=1)),
            SysmonEvent(1, base.replace(second=2)),
        ]
        stamps = [e.timestamp.second for e in sort_stream(events)]
        assert stamps == sorted(stamps)


class TestAttachLabels:
    def manifest(self):
        return {"segA": (0, None), "segB": (1, "Lockbit")}

    def make(self, host):
        return SysmonEvent(1, datetime(2024, 1, 1, tzinfo=timezone.utc), source_host=host)

    def test_labels_assigned_per_segment(self):
        counts = LabelCounts()
        stream = [self.make("segA"), self.make("segB"), self.make("segA")]
        labeled = list(attach_labels(stream, self.manifest(), counts))
        assert [e.label for e in labeled] == [0, 1, 0]
        assert labeled[1].family == "Lockbit"
        assert (counts.benign, counts.ransomware) == (2, 1)
        assert counts.by_family == {"Lockbit": 1}

    def test_unknown_tag_rejected(self):
        with pytest.raises(UnknownSourceTag):
            list(attach_labels([self.make("segZ")], self.manifest()))

    def test_empty_manifest_fails_on_first_event(self):
        with pytest.raises(UnknownSourceTag):
            next(attach_labels(iter([self.make("segA")]), {}))

    def test_reference_imbalance_arithmetic(self):
        counts = LabelCounts(benign=176_130, ransomware=20_710)
        assert counts.total == 196_840
        assert counts.prevalence() == pytest.approx(0.10521, abs=1e-4)

    def test_manifest_loading(self, tmp_path):
        doc = {
            "segments": [
                {"tag": "good", "label": "benign", "family": None},
                {"tag": "bad", "label": "ransomware", "family": "Hive"},
            ]
        }
        path = tmp_path / "manifest.json"
        path.write_text(json.dumps(doc))
        manifest = load_manifest(path)
        assert manifest == {"good": (0, None), "bad": (1, "Hive")}
