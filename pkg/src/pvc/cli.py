"""pvc command line: serve / work / simulate / interleave / bench.

Human-readable tables go to stderr; machine output (result stream, trace
events, verdict lines) goes to stdout.  Every subcommand that takes a
--seed is reproducible bit for bit.  Exit codes: 0 success, 1 runtime
failure (including found violations), 2 usage.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from typing import Any, Optional


def _parse_params(pairs: list[str]) -> dict[str, Any]:
    params: dict[str, Any] = {}
    for pair in pairs:
        if "=" not in pair:
            raise argparse.ArgumentTypeError(
                f"--param needs KEY=VALUE, got {pair!r}")
        key, raw = pair.split("=", 1)
        try:
            params[key] = json.loads(raw)
        except json.JSONDecodeError:
            params[key] = raw
    return params


def _parse_seed_range(text: str) -> tuple[int, int]:
    """Half-open A..B, or a single seed N meaning N..N+1."""
    if ".." in text:
        lo, hi = text.split("..", 1)
        start, stop = int(lo), int(hi)
    else:
        start = int(text)
        stop = start + 1
    if stop <= start or start < 0:
        raise ValueError(f"bad seed range: {text}")
    return start, stop


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pvc",
        description="personal volunteer computing: stream a map over "
                    "your own devices")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the coordinator")
    serve.add_argument("--processor", required=True,
                       help="map function workers must apply")
    serve.add_argument("--param", action="append", default=[],
                       metavar="KEY=VALUE", help="processor parameter "
                       "(JSON value or bare string; repeatable)")
    serve.add_argument("--port", type=int,
                       default=int(os.environ.get("PVC_PORT", "8080")))
    serve.add_argument("--host", default="0.0.0.0")
    serve.add_argument("--input", help="ndjson values (default stdin)")
    serve.add_argument("--output", help="ndjson results (default stdout)")
    serve.add_argument("--window", type=int, default=2,
                       help="max unsettled items per worker (default 2)")
    serve.add_argument("--heartbeat-period", type=float, default=5.0)
    serve.add_argument("--heartbeat-misses", type=int, default=3)
    serve.add_argument("--high-water", type=int, default=None,
                       help="reorder headroom (default sized from windows)")
    serve.add_argument("--assets", default=None,
                       help="directory with the browser worker page")

    work = sub.add_parser("work", help="run a native worker")
    work.add_argument("url", help="ws://HOST:PORT (path defaults to /volunteer)")
    work.add_argument("--lanes", type=int, default=1,
                      help="parallel sessions, one per core (default 1)")
    work.add_argument("--label", default="native",
                      help="device name shown in the report")

    sim = sub.add_parser("simulate", help="deterministic fleet simulation")
    sim.add_argument("--fleet", required=True, help="JSON list of workers")
    sim.add_argument("--items", type=int, required=True)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--jitter", type=float, default=0.0,
                     help="service-time jitter percent (0..100)")
    sim.add_argument("--high-water", type=int, default=None)
    sim.add_argument("--no-trace", action="store_true",
                     help="suppress the ndjson event trace on stdout")

    inter = sub.add_parser("interleave",
                           help="randomized interleaving self-test")
    inter.add_argument("--seeds", default="0..1000", metavar="A..B",
                       help="half-open seed range (default 0..1000)")
    inter.add_argument("--ops", type=int, default=200)
    inter.add_argument("--mutant", default=None,
                       help="run a shipped broken variant instead")

    bench = sub.add_parser("bench", help="single-device processor baseline")
    bench.add_argument("--processor", required=True)
    bench.add_argument("--param", action="append", default=[],
                       metavar="KEY=VALUE")
    bench.add_argument("--duration", type=float, default=5.0,
                       help="seconds to run (default 5)")
    return parser


def cmd_serve(args) -> int:
    from .coordinator import JobConfig, run_master
    from .processors import REGISTRY
    from .protocol import TaskSpec

    if args.processor not in REGISTRY:
        print(f"pvc: unknown processor {args.processor!r}; have: "
              f"{', '.join(sorted(REGISTRY))}", file=sys.stderr)
        return 1
    config = JobConfig(
        task=TaskSpec(args.processor, _parse_params(args.param)),
        window=args.window,
        heartbeat_period=args.heartbeat_period,
        heartbeat_misses=args.heartbeat_misses,
        high_water=args.high_water,
        port=args.port,
        host=args.host,
        assets_dir=args.assets or _default_assets_dir(),
    )

    def input_lines():
        stream = open(args.input, "r") if args.input else sys.stdin
        try:
            for line in stream:
                line = line.strip()
                if line:
                    yield json.loads(line)
        finally:
            if args.input:
                stream.close()

    out = open(args.output, "w") if args.output else sys.stdout

    def ready(port: int) -> None:
        print(f"pvc: serving ws://{args.host}:{port}/volunteer",
              file=sys.stderr, flush=True)

    try:
        report = run_master(config, input_lines(), out, ready=ready)
    finally:
        if args.output:
            out.close()
    print(report.format_table(), file=sys.stderr)
    return 0


def _default_assets_dir() -> Optional[str]:
    here = os.path.dirname(os.path.abspath(__file__))
    for candidate in (
        os.path.join(here, "assets"),
        os.path.normpath(os.path.join(here, "..", "..", "frontend", "dist")),
    ):
        if os.path.isdir(candidate):
            return candidate
    return None


def cmd_work(args) -> int:
    from .worker import WorkerConfig, run_worker

    url = args.url
    if url.startswith("ws://") or url.startswith("wss://"):
        if url.count("/") == 2:  # bare ws://host:port
            url += "/volunteer"
    else:
        print("pvc: url must start with ws:// or wss://", file=sys.stderr)
        return 2
    summary = run_worker(WorkerConfig(url, lanes=args.lanes, label=args.label))
    print(f"pvc: processed {summary.items} items, "
          f"busy {summary.busy_ms / 1000.0:.2f}s", file=sys.stderr)
    if not summary.ok:
        print(f"pvc: {summary.reason}", file=sys.stderr)
        return 1
    return 0


def cmd_simulate(args) -> int:
    from .simnet import check_trace_properties, load_fleet, simulate

    fleet = load_fleet(args.fleet)
    trace = simulate(fleet, args.items, seed=args.seed,
                     jitter_pct=args.jitter, high_water=args.high_water)
    if not args.no_trace:
        print(trace.to_ndjson())
    verdict = check_trace_properties(trace)
    print(trace.report.format_table(), file=sys.stderr)
    print(f"makespan {trace.makespan:.6f}s  aggregate "
          f"{(args.items / trace.makespan if trace.makespan else 0.0):.2f} items/s",
          file=sys.stderr)
    if not verdict.ok:
        for violation in verdict.violations:
            print(f"violation: {violation}", file=sys.stderr)
        return 1
    return 0


def cmd_interleave(args) -> int:
    from .mutants import MUTANTS
    from .lender import StreamLender
    from .processors.randtest import interleave_check

    try:
        start, stop = _parse_seed_range(args.seeds)
    except ValueError as exc:
        print(f"pvc: {exc}", file=sys.stderr)
        return 2
    factory = StreamLender
    if args.mutant is not None:
        factory = MUTANTS.get(args.mutant)
        if factory is None:
            print(f"pvc: unknown mutant {args.mutant!r}; have: "
                  f"{', '.join(sorted(MUTANTS))}", file=sys.stderr)
            return 2
    total = 0
    first: Optional[dict] = None
    for seed in range(start, stop):
        verdict = interleave_check(seed, args.ops, lender_factory=factory)
        total += verdict["violations"]
        if first is None and verdict["violations"]:
            first = verdict
    print(json.dumps({
        "seeds": [start, stop], "ops": args.ops,
        "mutant": args.mutant, "violations": total,
        "first": first,
    }, separators=(",", ":")))
    print(f"pvc: {stop - start} seeds x {args.ops} ops -> "
          f"{total} violations", file=sys.stderr)
    return 0 if total == 0 else 1


def cmd_bench(args) -> int:
    from .processors import REGISTRY

    binding = REGISTRY.get(args.processor)
    if binding is None:
        print(f"pvc: unknown processor {args.processor!r}", file=sys.stderr)
        return 1
    params = _parse_params(args.param)
    deadline = time.perf_counter() + args.duration
    count = 0
    start = time.perf_counter()
    while time.perf_counter() < deadline:
        binding.apply(params, binding.bench_input(count))
        count += 1
    elapsed = time.perf_counter() - start
    rate = count / elapsed if elapsed > 0 else 0.0
    print(json.dumps({"processor": args.processor, "items": count,
                      "seconds": round(elapsed, 6),
                      "items_per_s": round(rate, 2)},
                     separators=(",", ":")))
    print(f"pvc: {args.processor}: {count} items in {elapsed:.2f}s "
          f"-> {rate:.2f} items/s", file=sys.stderr)
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = {
        "serve": cmd_serve,
        "work": cmd_work,
        "simulate": cmd_simulate,
        "interleave": cmd_interleave,
        "bench": cmd_bench,
    }[args.command]
    try:
        return handler(args)
    except KeyboardInterrupt:
        return 1
    except Exception as exc:
        print(f"pvc: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
