"""Command-line interface: unfurl, scan, lab, serve, cache recrawl."""

from __future__ import annotations

import argparse
import json
import sys
import threading
from pathlib import Path

from .app import AppState
from .cards import card_record, render_snippet
from .config import load_config
from .detector import ReputationList
from .errors import CardwatchError, ConfigError, NetworkError
from .lab import BUILTIN_SCENARIOS, builtin_scenario, lab_start, scenario_from_dict
from .report import (
    EXIT_USAGE,
    serialize_scan_report,
    verdict_exit_code,
    write_report_artifacts,
)
from .service import CardwatchService


def _parse_resolve(values: list[str]) -> dict[str, tuple[str, int]]:
    resolver: dict[str, tuple[str, int]] = {}
    for item in values or []:
        try:
            alias, target = item.split("=", 1)
            host, port = target.rsplit(":", 1)
            resolver[alias] = (host, int(port))
        except ValueError:
            raise ConfigError(f"--resolve expects alias=host:port, got {item!r}")
    return resolver


def _build_state(args) -> AppState:
    config = load_config(args.config)
    if getattr(args, "reputation", None):
        extra = ReputationList.from_file(args.reputation)
        config.reputation = ReputationList(
            config.reputation.denied_hosts | extra.denied_hosts,
            config.reputation.allowed_hosts | extra.allowed_hosts,
        )
    return AppState.from_config(config, resolver=_parse_resolve(args.resolve))


def cmd_unfurl(args) -> int:
    state = _build_state(args)
    try:
        result = state.unfurl(args.url, profile=args.profile, persona=args.persona)
    except NetworkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.json:
        print(json.dumps(card_record(result.card), ensure_ascii=False))
    else:
        print(render_snippet(result.card))
        print(f"hops:          {len(result.chain.hops)}"
              + (" (truncated)" if result.chain.truncated else ""))
        print(f"final_url:     {result.final_url}")
    return 0


def cmd_scan(args) -> int:
    state = _build_state(args)
    strict = True if args.strict_direct else None
    try:
        scan = state.scan(args.url, profile=args.profile, strict_direct=strict)
    except NetworkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    serialized = serialize_scan_report(scan)
    if args.report:
        report_path = Path(args.report)
        if report_path.suffix == ".json":
            out_dir = report_path.parent
            out_dir.mkdir(parents=True, exist_ok=True)
            report_path.write_text(serialized + "\n", encoding="utf-8")
            from .report import render_figures, write_hop_summary_csv

            write_hop_summary_csv(scan.report, out_dir / "hops.csv")
            if not args.no_figures:
                render_figures(scan.report, out_dir, state.config.thresholds)
        else:
            write_report_artifacts(
                scan,
                report_path,
                thresholds=state.config.thresholds,
                figures=not args.no_figures,
            )
    if args.json:
        print(serialized)
    else:
        r = scan.report
        print(f"url:                  {r.url}")
        print(f"verdict:              {r.verdict.value}")
        print(f"final_host_mismatch:  {r.final_host_mismatch}")
        print(f"metadata_similarity:  {r.metadata_similarity:.3f}")
        print(f"content_similarity:   {r.content_similarity:.3f}")
        print(f"card_page_consistency:{r.card_page_consistency: .3f}")
        if r.direct_link is not None:
            print(f"direct_link:          {r.direct_link}")
        for flag in r.flags:
            print(f"flag:                 {flag}")
    return verdict_exit_code(scan.report.verdict)


def cmd_lab(args) -> int:
    name = args.scenario
    if name in BUILTIN_SCENARIOS:
        scenario = builtin_scenario(name)
    elif Path(name).exists():
        scenario = scenario_from_dict(json.loads(Path(name).read_text("utf-8")))
    else:
        print(f"error: unknown scenario: {name}", file=sys.stderr)
        return EXIT_USAGE
    handle = lab_start(scenario)
    try:
        print(f"scenario: {scenario.name}")
        for alias, (host, port) in sorted(handle.alias_map.items()):
            print(f"  {alias} -> {host}:{port}")
        print("press Ctrl-C to stop", flush=True)
        threading.Event().wait()
    except KeyboardInterrupt:
        pass
    finally:
        handle.stop()
    return 0


def cmd_serve(args) -> int:
    state = _build_state(args)
    host, _, port = args.bind.rpartition(":")
    server = CardwatchService(state, bind=(host or "127.0.0.1", int(port)))
    print(f"listening on {server.server_address[0]}:{server.server_port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
    return 0


def cmd_cache_recrawl(args) -> int:
    state = _build_state(args)
    try:
        card = state.recrawl(args.url, profile=args.profile)
    except NetworkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.json:
        print(json.dumps(card_record(card), ensure_ascii=False))
    else:
        print(render_snippet(card))
    return 0


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="path to a JSON config file")
    parser.add_argument(
        "--reputation", help="extra reputation list file (deny/allow patterns)"
    )
    parser.add_argument("--json", action="store_true", help="machine-readable output")
    parser.add_argument(
        "--resolve",
        action="append",
        metavar="ALIAS=HOST:PORT",
        help="resolve a hostname alias to a socket address (repeatable)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cardwatch",
        description="Link-preview card engine and sharing-card forgery scanner",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("unfurl", help="fetch a URL and render its sharing card")
    p.add_argument("url")
    p.add_argument("--profile", help="platform profile (default twitter-like)")
    p.add_argument("--persona", help="persona name (default crawler)")
    _add_common(p)
    p.set_defaults(func=cmd_unfurl)

    p = sub.add_parser("scan", help="differential forgery scan of a URL")
    p.add_argument("url")
    p.add_argument("--profile")
    p.add_argument(
        "--report",
        help="write the report here; figures and a hop CSV land alongside",
    )
    p.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    p.add_argument(
        "--strict-direct",
        action="store_true",
        help="fail any URL that is not a single direct hop",
    )
    _add_common(p)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("lab", help="run a lab scenario in the foreground")
    p.add_argument("scenario", help="builtin scenario name or a scenario JSON file")
    _add_common(p)
    p.set_defaults(func=cmd_lab)

    p = sub.add_parser("serve", help="run the HTTP API")
    p.add_argument("--bind", default="127.0.0.1:8650", metavar="HOST:PORT")
    _add_common(p)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("cache", help="cache operations")
    cache_sub = p.add_subparsers(dest="cache_command", required=True)
    pr = cache_sub.add_parser("recrawl", help="refetch a URL and replace its entry")
    pr.add_argument("url")
    pr.add_argument("--profile")
    _add_common(pr)
    pr.set_defaults(func=cmd_cache_recrawl)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CardwatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
