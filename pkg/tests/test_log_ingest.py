import gzip
from datetime import timedelta

import pytest

from hyperlens.log_ingest import (BadStatus, BadTimestamp, CleaningConfig,
                                  LogEntry, MalformedLine, clean_log,
                                  is_asset_request, is_success_status,
                                  parse_log_line, parse_timestamp, read_log,
                                  render_log, serialize_log_entry)

CFG = CleaningConfig()


def test_sample_line_golden(sample_line):
    entry = parse_log_line(sample_line)
    assert entry.host == "10.0.0.1"
    assert entry.username == "X2bFdM1R3txwlkv"
    assert entry.remote_user == "-"
    assert entry.session_id == "13d8f72f08d1a4e1c418a7cb8fc31437"
    assert (entry.timestamp.year, entry.timestamp.month, entry.timestamp.day) == (2014, 6, 1)
    assert (entry.timestamp.hour, entry.timestamp.minute, entry.timestamp.second) == (0, 47, 10)
    assert entry.timestamp.utcoffset() == timedelta(hours=-5)
    assert entry.method == "GET"
    assert entry.url == ("http://site.ebrary.com:80/lib/oculryerson/"
                         "docDetail.action?docID=10251051")
    assert entry.protocol == "HTTP/1.1"
    assert entry.status == 200
    assert entry.bytes == 29732


def test_non_integer_status(sample_line):
    line = sample_line.replace(" 200 ", " abc ")
    with pytest.raises(BadStatus) as exc:
        parse_log_line(line)
    assert exc.value.offset == line.index(" abc ") + 1


def test_status_out_of_range(sample_line):
    with pytest.raises(BadStatus):
        parse_log_line(sample_line.replace(" 200 ", " 700 "))
    with pytest.raises(BadStatus):
        parse_log_line(sample_line.replace(" 200 ", " 99 "))


def test_absent_bytes(sample_line):
    entry = parse_log_line(sample_line.replace(" 29732", " -"))
    assert entry.bytes is None


def test_round_trip_identity(sample_line):
    entry = parse_log_line(sample_line)
    assert serialize_log_entry(entry) == sample_line
    assert parse_log_line(serialize_log_entry(entry)) == entry


def test_trailing_newline_tolerated(sample_line):
    assert parse_log_line(sample_line + "\n") == parse_log_line(sample_line)


@pytest.mark.parametrize("mutation,expected", [
    (lambda ln: ln.replace("10.0.0.1", "not-an-ip"), MalformedLine),
    (lambda ln: ln.replace(' "GET ', ' GET '), MalformedLine),
    (lambda ln: ln.replace(' HTTP/1.1"', ' HTTP/1.1'), MalformedLine),
    (lambda ln: ln + " extra", MalformedLine),
    (lambda ln: ln.replace(" 29732", " -5"), MalformedLine),
    (lambda ln: ln.replace("[01/Jun/2014:00:47:10 -0500]",
                           "[01/Jun/2014:00:47:10]"), BadTimestamp),
    (lambda ln: ln.replace("01/Jun", "41/Jun"), BadTimestamp),
    (lambda ln: ln.replace("01/Jun", "01/Xxx"), BadTimestamp),
])
def test_malformed_lines(sample_line, mutation, expected):
    with pytest.raises(expected):
        parse_log_line(mutation(sample_line))


def test_error_offset_is_bytes(sample_line):
    # A multi-byte username shifts byte offsets past character offsets.
    line = sample_line.replace("X2bFdM1R3txwlkv", "usér")
    bad = line.replace(" 200 ", " abc ")
    with pytest.raises(BadStatus) as exc:
        parse_log_line(bad)
    assert exc.value.offset == bad.encode("utf-8").index(b" abc ") + 1


def test_timestamp_round_trip():
    ts = parse_timestamp("01/Jun/2014:00:47:10 -0500")
    from hyperlens.log_ingest import format_timestamp
    assert format_timestamp(ts) == "01/Jun/2014:00:47:10 -0500"
    ts2 = parse_timestamp("31/Dec/1999:23:59:59 +1130")
    assert format_timestamp(ts2) == "31/Dec/1999:23:59:59 +1130"


def test_is_asset_request():
    assert is_asset_request("http://x.com/logo.JPG", CFG)
    assert not is_asset_request("http://x.com/docDetail.action?docID=1", CFG)
    assert is_asset_request("http://x.com/style.css?v=2", CFG)
    assert not is_asset_request("http://x.com/nodot", CFG)


def test_is_success_status():
    assert is_success_status(200, CFG)
    assert is_success_status(299, CFG)
    assert not is_success_status(404, CFG)
    assert not is_success_status(199, CFG)
    assert not is_success_status(300, CFG)


def _entry(status=200, url="http://site.ebrary.com/docDetail.action?docID=1"):
    return parse_log_line(
        f'10.0.0.1 user1 - sess1 [01/Jun/2014:00:47:10 -0500] '
        f'"GET {url} HTTP/1.1" {status} 100')


def test_clean_log_example():
    entries = [
        _entry(status=200),
        _entry(status=304),
        _entry(status=200, url="http://x.com/a.gif"),
    ]
    kept, report = clean_log(entries, CFG)
    assert kept == [entries[0]]
    assert report.status_removed == 1
    assert report.asset_removed == 1
    assert report.retained == 1


def test_clean_log_empty():
    kept, report = clean_log([], CFG)
    assert kept == []
    assert report.input_entries == 0
    assert report.retained == 0


def test_clean_log_synthetic_recount():
    # 1000 entries: 300 asset requests, 100 failed statuses, 600 clean.
    entries = []
    for i in range(1000):
        if i % 10 < 3:
            entries.append(_entry(url=f"http://x.com/img{i}.gif"))
        elif i % 10 == 3:
            entries.append(_entry(status=500))
        else:
            entries.append(_entry(url=f"http://x.com/doc?docID={i}"))
    kept, report = clean_log(entries, CFG)

    # Independent recount with inline predicates.
    expected = [e for e in entries
                if 200 <= e.status <= 299 and not e.url.lower()
                .split("?")[0].endswith(".gif")]
    assert kept == expected
    assert len(kept) == 600
    assert report.asset_removed == 300
    assert report.status_removed == 100
    assert report.retained + report.status_removed + report.asset_removed \
        == report.input_entries == 1000


def test_clean_log_idempotent():
    entries = [_entry(status=s) for s in (200, 301, 226, 404)]
    once, report1 = clean_log(entries, CFG)
    twice, report2 = clean_log(once, CFG)
    assert once == twice
    assert report2.status_removed == 0 and report2.asset_removed == 0


def test_clean_order_preserved():
    entries = [_entry(url=f"http://x.com/d?docID={i}") for i in range(50)]
    kept, _ = clean_log(entries, CFG)
    assert kept == entries


def test_cleaning_config_validation():
    with pytest.raises(ValueError):
        CleaningConfig(asset_suffixes=frozenset())
    with pytest.raises(ValueError):
        CleaningConfig(success_status_range=(300, 200))
    cfg = CleaningConfig(asset_suffixes=frozenset({"JPG"}))
    assert "jpg" in cfg.asset_suffixes


def test_read_log_plain_and_gzip(tmp_path, sample_line):
    plain = tmp_path / "a.log"
    plain.write_text(sample_line + "\n" + sample_line + "\n")
    entries, report = read_log(plain)
    assert len(entries) == 2 and report.malformed == 0

    gz = tmp_path / "a.log.gz"
    with gzip.open(gz, "wt") as fh:
        fh.write(sample_line + "\n")
    entries, report = read_log(gz)
    assert len(entries) == 1
    assert render_log(entries) == sample_line + "\n"


def test_read_log_skips_malformed_unless_strict(tmp_path, sample_line):
    path = tmp_path / "b.log"
    path.write_text(sample_line + "\ngarbage line\n")
    entries, report = read_log(path)
    assert len(entries) == 1
    assert report.malformed == 1
    assert report.errors and report.errors[0][0] == 2
    with pytest.raises(MalformedLine):
        read_log(path, strict=True)
