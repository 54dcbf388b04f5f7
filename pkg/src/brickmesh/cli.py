"""Command-line harness: run scenarios, benches, and the playground server.

Exit code contract: ``harness run`` exits nonzero iff convergence failed
or an invariant tripped, so CI can script against it. ``HARNESS_LOG``
selects the log level (error, info, debug).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from brickmesh.bench import (
    bundled_links_path,
    load_link_rows,
    run_bench,
    run_payload_bench,
)
from brickmesh.scenario import (
    ScenarioError,
    resolve_scenario,
    run_scenario,
    write_report,
)

LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="harness",
        description="replicated-transform sync experiments: scenario runs, "
                    "latency benches, payload probes, and the playground server",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a scenario file (or bundled name)")
    run_p.add_argument("--scenario", required=True,
                       help="path or bundled name (fig-mv-replay, oscillation-lww, "
                            "convergence-fuzz)")
    run_p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    run_p.add_argument("--out", type=Path, default=None, help="directory for report + CSV")

    bench_p = sub.add_parser("bench", help="latency table across topologies")
    bench_p.add_argument("--config", default=None,
                         help="link config JSON (default: bundled paper-links)")
    bench_p.add_argument("--reps", type=int, default=20)
    bench_p.add_argument("--jitter", choices=("on", "off"), default="off")
    bench_p.add_argument("--seed", type=int, default=0)
    bench_p.add_argument("--out", type=Path, default=None)

    pay_p = sub.add_parser("payload", help="RTT per payload size per architecture")
    pay_p.add_argument("--sizes", default="64,1024,16384",
                       help="comma-separated byte sizes")
    pay_p.add_argument("--reps", type=int, default=10)
    pay_p.add_argument("--seed", type=int, default=0)
    pay_p.add_argument("--out", type=Path, default=None)

    serve_p = sub.add_parser("serve", help="host live replicas for the playground")
    serve_p.add_argument("--port", type=int, default=9000)
    serve_p.add_argument("--scenario", default=None,
                         help="scenario template for link parameters")
    serve_p.add_argument("--ui", type=Path, default=None,
                         help="static directory to serve at / (playground build)")
    serve_p.add_argument("--tick-hz", type=float, default=20.0)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(
        level=LOG_LEVELS.get(os.environ.get("HARNESS_LOG", "info").lower(), logging.INFO),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "bench":
            return _cmd_bench(args)
        if args.command == "payload":
            return _cmd_payload(args)
        if args.command == "serve":
            return _cmd_serve(args)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 2
    raise AssertionError("unreachable")


def _cmd_run(args) -> int:
    path = resolve_scenario(args.scenario)
    report = run_scenario(path, seed_override=args.seed)
    print(f"scenario {report.scenario} seed {report.seed}")
    for replica, digest in sorted(report.digests.items()):
        print(f"  {replica}: {digest[:16]}")
    print(f"  convergence: {report.convergence} "
          f"(extra sync rounds: {report.extra_sync_rounds})")
    print(f"  counters: {report.counters}")
    if report.rtt:
        print(f"  rtt: {report.rtt}")
    for violation in report.invariant_violations:
        print(f"  INVARIANT VIOLATED: {violation}")
    if args.out:
        for written in write_report(report, args.out):
            print(f"  wrote {written}")
    return 0 if report.ok else 1


def _cmd_bench(args) -> int:
    config = Path(args.config) if args.config else bundled_links_path()
    rows = load_link_rows(config)
    report = run_bench(rows, reps=args.reps, jitter=args.jitter == "on", seed=args.seed)
    print(report.render_text())
    bad_rows = [row for row, ok in report.ordering_ok.items() if not ok]
    for row in bad_rows:
        print(f"ORDERING VIOLATED for row {row!r}", file=sys.stderr)
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        csv_path = args.out / "bench.csv"
        csv_path.write_text(report.to_csv(), "utf-8")
        print(f"wrote {csv_path}")
    return 1 if bad_rows else 0


def _cmd_payload(args) -> int:
    try:
        sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    except ValueError:
        print(f"invalid --sizes {args.sizes!r}", file=sys.stderr)
        return 2
    report = run_payload_bench(sizes, reps=args.reps, seed=args.seed)
    print(report.render_text())
    if args.out:
        args.out.mkdir(parents=True, exist_ok=True)
        csv_path = args.out / "payload.csv"
        csv_path.write_text(report.to_csv(), "utf-8")
        print(f"wrote {csv_path}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from brickmesh.serve import build_app

    scenario_path = resolve_scenario(args.scenario) if args.scenario else None
    app = build_app(scenario_path=scenario_path, ui_dir=args.ui, tick_hz=args.tick_hz)
    uvicorn.run(app, host="0.0.0.0", port=args.port, log_level="warning")
    return 0


if __name__ == "__main__":
    sys.exit(main())
