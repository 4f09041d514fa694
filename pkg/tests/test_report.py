from __future__ import annotations

import csv
import json

import pytest

from cardwatch.detector import Verdict
from cardwatch.report import (
    EXIT_USAGE,
    ScanReport,
    parse_scan_report,
    serialize_scan_report,
    verdict_exit_code,
    write_report_artifacts,
)

from conftest import SCENARIO_URLS


@pytest.fixture
def cloaking_scan(lab, make_state):
    handle = lab("cloaking")
    state = make_state(handle)
    return state, state.scan(SCENARIO_URLS["cloaking"], scanned_at="2026-08-26T00:00:00Z")


def test_exit_code_mapping():
    assert verdict_exit_code(Verdict.BENIGN) == 0
    assert verdict_exit_code(Verdict.INCONSISTENT_CARD) == 3
    assert verdict_exit_code(Verdict.REDIRECT_LAUNDERING) == 4
    assert verdict_exit_code(Verdict.CLOAKING_SUSPECTED) == 5
    assert verdict_exit_code(Verdict.DENIED) == 6
    assert EXIT_USAGE == 2


def test_serialize_deterministic(cloaking_scan):
    _, scan = cloaking_scan
    first = serialize_scan_report(scan)
    second = serialize_scan_report(scan)
    assert first == second
    assert first.encode("utf-8") == second.encode("utf-8")


def test_envelope_fields(cloaking_scan):
    _, scan = cloaking_scan
    data = json.loads(serialize_scan_report(scan))
    assert data["schema_version"] == 1
    assert data["scanned_at"] == "2026-08-26T00:00:00Z"
    assert data["tool_version"] == "0.1.0"
    assert data["report"]["verdict"] == "CloakingSuspected"


def test_parse_roundtrip(cloaking_scan):
    _, scan = cloaking_scan
    assert parse_scan_report(serialize_scan_report(scan)) == scan


def test_roundtrip_all_builtin_scenarios(lab, make_state):
    for name, url in SCENARIO_URLS.items():
        handle = lab(name)
        state = make_state(handle)
        scan = state.scan(url, scanned_at="2026-08-26T00:00:00Z")
        assert parse_scan_report(serialize_scan_report(scan)) == scan, name
        handle.stop()


def test_wrap_stamps_current_time(cloaking_scan):
    _, scan = cloaking_scan
    stamped = ScanReport.wrap(scan.report)
    # shape check only; the value is wall-clock
    assert stamped.scanned_at.endswith("Z") and "T" in stamped.scanned_at


def test_artifacts_written(tmp_path, cloaking_scan):
    state, scan = cloaking_scan
    written = write_report_artifacts(
        scan, tmp_path / "out", thresholds=state.config.thresholds
    )
    names = {p.name for p in written}
    assert names == {"report.json", "hops.csv", "similarity.png", "chains.png"}
    for path in written:
        assert path.exists() and path.stat().st_size > 0
        if path.suffix == ".png":
            assert path.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    assert parse_scan_report((tmp_path / "out" / "report.json").read_text()) == scan


def test_hop_csv_contents(tmp_path, cloaking_scan):
    _, scan = cloaking_scan
    write_report_artifacts(scan, tmp_path, figures=False)
    with open(tmp_path / "hops.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    views = {row["view"] for row in rows}
    assert views == {"crawler", "browser"}
    crawler_rows = [r for r in rows if r["view"] == "crawler"]
    assert crawler_rows[0]["status"] == "200"
    browser_rows = [r for r in rows if r["view"] == "browser"]
    assert browser_rows[0]["status"] == "302"
    assert browser_rows[0]["location"]


def test_no_figures_flag(tmp_path, cloaking_scan):
    _, scan = cloaking_scan
    written = write_report_artifacts(scan, tmp_path, figures=False)
    assert {p.name for p in written} == {"report.json", "hops.csv"}
    assert not list(tmp_path.glob("*.png"))
