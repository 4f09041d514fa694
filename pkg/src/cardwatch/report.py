"""Scan report format: stable JSON serialization, exit-code mapping, and
rendering of figures plus a delimited hop summary next to the report."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .cards import card_record, parse_card_record
from .detector import (
    ChainFlag,
    DivergenceReport,
    Finding,
    HopRecord,
    Thresholds,
    Verdict,
    ViewSummary,
)

SCHEMA_VERSION = 1
TOOL_VERSION = "0.1.0"

EXIT_CODES = {
    Verdict.BENIGN: 0,
    Verdict.INCONSISTENT_CARD: 3,
    Verdict.REDIRECT_LAUNDERING: 4,
    Verdict.CLOAKING_SUSPECTED: 5,
    Verdict.DENIED: 6,
}

EXIT_USAGE = 2  # bad arguments / unreachable target


def verdict_exit_code(verdict: Verdict) -> int:
    return EXIT_CODES[verdict]


def utc_now_rfc3339() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class ScanReport:
    schema_version: int
    scanned_at: str  # RFC 3339 UTC
    tool_version: str
    report: DivergenceReport

    @classmethod
    def wrap(cls, report: DivergenceReport, scanned_at: str | None = None) -> ScanReport:
        return cls(
            schema_version=SCHEMA_VERSION,
            scanned_at=scanned_at or utc_now_rfc3339(),
            tool_version=TOOL_VERSION,
            report=report,
        )


def _view_to_dict(view: ViewSummary | None) -> dict | None:
    if view is None:
        return None
    return {
        "persona_label": view.persona_label,
        "final_url": view.final_url,
        "final_host": view.final_host,
        "body_digest": view.body_digest,
        "card": card_record(view.card),
        "hops": [
            {"url": h.url, "status": h.status, "kind": h.kind, "location": h.location}
            for h in view.hops
        ],
        "truncated": view.truncated,
    }


def _view_from_dict(data: dict | None) -> ViewSummary | None:
    if data is None:
        return None
    return ViewSummary(
        persona_label=data["persona_label"],
        final_url=data["final_url"],
        final_host=data["final_host"],
        body_digest=data["body_digest"],
        card=parse_card_record(data["card"]),
        hops=tuple(
            HopRecord(
                url=h["url"],
                status=h["status"],
                kind=h["kind"],
                location=h.get("location"),
            )
            for h in data["hops"]
        ),
        truncated=data["truncated"],
    )


def report_to_dict(report: DivergenceReport) -> dict:
    return {
        "url": report.url,
        "verdict": report.verdict.value,
        "final_host_mismatch": report.final_host_mismatch,
        "metadata_similarity": report.metadata_similarity,
        "content_similarity": report.content_similarity,
        "card_page_consistency": report.card_page_consistency,
        "direct_link": report.direct_link,
        "flags": list(report.flags),
        "chain_flags": [
            {
                "view": f.view,
                "hop_index": f.hop_index,
                "host": f.host,
                "finding": f.finding.value,
            }
            for f in report.chain_flags
        ],
        "crawler_view": _view_to_dict(report.crawler_view),
        "browser_view": _view_to_dict(report.browser_view),
    }


def report_from_dict(data: dict) -> DivergenceReport:
    return DivergenceReport(
        url=data["url"],
        crawler_view=_view_from_dict(data.get("crawler_view")),
        browser_view=_view_from_dict(data.get("browser_view")),
        final_host_mismatch=data["final_host_mismatch"],
        metadata_similarity=data["metadata_similarity"],
        content_similarity=data["content_similarity"],
        card_page_consistency=data["card_page_consistency"],
        chain_flags=tuple(
            ChainFlag(
                view=f["view"],
                hop_index=f["hop_index"],
                host=f["host"],
                finding=Finding(f["finding"]),
            )
            for f in data["chain_flags"]
        ),
        verdict=Verdict(data["verdict"]),
        direct_link=data.get("direct_link"),
        flags=tuple(data.get("flags") or ()),
    )


def scan_report_to_dict(scan: ScanReport) -> dict:
    return {
        "schema_version": scan.schema_version,
        "scanned_at": scan.scanned_at,
        "tool_version": scan.tool_version,
        "report": report_to_dict(scan.report),
    }


def serialize_scan_report(scan: ScanReport) -> str:
    """Deterministic: equal inputs serialize to identical bytes."""
    return json.dumps(scan_report_to_dict(scan), ensure_ascii=False, separators=(",", ":"))


def parse_scan_report(text: str | dict) -> ScanReport:
    data = json.loads(text) if isinstance(text, str) else text
    return ScanReport(
        schema_version=data["schema_version"],
        scanned_at=data["scanned_at"],
        tool_version=data["tool_version"],
        report=report_from_dict(data["report"]),
    )


# --------------------------------------------------------------------------
# Report artifacts: delimited hop summary plus rendered figures
# --------------------------------------------------------------------------


def write_hop_summary_csv(report: DivergenceReport, path: Path):
    findings = {(f.view, f.hop_index): f.finding.value for f in report.chain_flags}
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["view", "hop_index", "url", "status", "kind", "location", "finding"])
        for label, view in (("crawler", report.crawler_view), ("browser", report.browser_view)):
            if view is None:
                continue
            for i, hop in enumerate(view.hops):
                writer.writerow(
                    [
                        label,
                        i,
                        hop.url,
                        hop.status,
                        hop.kind,
                        hop.location or "",
                        findings.get((label, i), ""),
                    ]
                )


def render_figures(
    report: DivergenceReport, out_dir: Path, thresholds: Thresholds | None = None
) -> list[Path]:
    """Render scan figures as PNG files; returns the written paths."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    # Similarity scores with decision thresholds.
    fig, ax = plt.subplots(figsize=(6, 4))
    names = ["metadata", "content", "card vs page"]
    values = [
        report.metadata_similarity,
        report.content_similarity,
        report.card_page_consistency,
    ]
    bars = ax.bar(names, values, color=["#4878d0", "#6acc64", "#d65f5f"])
    if thresholds is not None:
        ax.axhline(thresholds.t_content, ls="--", lw=1, color="#6acc64")
        ax.axhline(thresholds.t_card, ls="--", lw=1, color="#d65f5f")
    for bar, value in zip(bars, values):
        ax.annotate(
            f"{value:.2f}",
            (bar.get_x() + bar.get_width() / 2, value),
            ha="center",
            va="bottom",
            fontsize=9,
        )
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("similarity")
    ax.set_title(f"{report.url}\nverdict: {report.verdict.value}")
    fig.tight_layout()
    path = out_dir / "similarity.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)

    # Redirect chains, crawler vs browser.
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.axis("off")
    rows = [("crawler", report.crawler_view, 0.75), ("browser", report.browser_view, 0.25)]
    for label, view, y in rows:
        if view is None:
            ax.text(0.02, y, f"{label}: (fetch failed)", fontsize=10, family="monospace")
            continue
        n = len(view.hops)
        for i, hop in enumerate(view.hops):
            x = 0.06 + i * (0.88 / max(n, 1))
            ax.annotate(
                f"{hop.status}\n{_short(hop.url)}",
                (x, y),
                fontsize=8,
                family="monospace",
                ha="left",
                va="center",
            )
            if i + 1 < n:
                ax.annotate(
                    "",
                    xy=(x + 0.88 / n - 0.02, y),
                    xytext=(x + 0.88 / n - 0.06, y),
                    arrowprops={"arrowstyle": "->"},
                )
        suffix = " (truncated)" if view.truncated else ""
        ax.text(0.02, y + 0.14, f"{label} chain{suffix}", fontsize=10, weight="bold")
    ax.set_title("redirect chains")
    fig.tight_layout()
    path = out_dir / "chains.png"
    fig.savefig(path, dpi=120)
    plt.close(fig)
    written.append(path)
    return written


def _short(url: str, limit: int = 34) -> str:
    return url if len(url) <= limit else url[: limit - 1] + "…"


def write_report_artifacts(
    scan: ScanReport,
    out_dir: Path,
    thresholds: Thresholds | None = None,
    figures: bool = True,
) -> list[Path]:
    """Write report.json, hops.csv, and (optionally) figures into out_dir."""
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    report_path = out_dir / "report.json"
    report_path.write_text(serialize_scan_report(scan) + "\n", encoding="utf-8")
    written.append(report_path)
    csv_path = out_dir / "hops.csv"
    write_hop_summary_csv(scan.report, csv_path)
    written.append(csv_path)
    if figures:
        written.extend(render_figures(scan.report, out_dir, thresholds))
    return written
