"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line and enforcing its runtime budget.

Run with `pytest tests/test_acceptance.py -v -s` to see the criterion
lines as they complete.
"""

import hashlib
import json
import math
import os
import random
import signal
import subprocess
import sys
import time

import pytest

from pvc.mutants import MUTANTS
from pvc.processors.blur import box_blur
from pvc.processors.collatz import collatz_steps
from pvc.processors.hashcash import hashcash_search, leading_zero_bits
from pvc.processors.randtest import interleave_check
from pvc.processors.raytrace import render_frame
from pvc.report import make_report, share_pct
from pvc.rng import SplitMix64
from pvc.simnet import SimWorkerSpec, check_trace_properties, pipeline_speedup, simulate

TABLE2_RANDOM_TESTING_RATES = [54.22, 150.46, 617.40, 551.18, 498.65, 1816.23]
TABLE2_PRINTED_SHARES = [1.5, 4.1, 16.7, 14.9, 13.5, 49.3]
REFERENCE_FRAME_HASH = "ec9b679b41a9ac77"


class Criterion:
    """Context manager: enforces the runtime budget and prints one line."""

    def __init__(self, name, budget_s):
        self.name = name
        self.budget_s = budget_s

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        status = "PASS" if exc_type is None else "FAIL"
        print(f"ACCEPTANCE {self.name}: {status} ({elapsed:.1f}s "
              f"of {self.budget_s}s budget)")
        if exc_type is None and elapsed > self.budget_s:
            raise AssertionError(
                f"{self.name} exceeded budget: {elapsed:.1f}s > {self.budget_s}s")
        return False


def churn_fleet(seed):
    """Deterministic random fleet with random join/fail schedule and at
    least one survivor."""
    rng = SplitMix64(seed ^ 0xC0FFEE)
    n_workers = 2 + rng.below(4)
    n_items = 50 + rng.below(150)
    fleet = []
    for i in range(n_workers):
        rate = 5.0 + rng.below(400) / 4.0
        latency = float(rng.below(40))
        join_at = rng.below(20) / 10.0
        fail_at = None
        if i > 0 and rng.below(2):
            fail_at = join_at + 0.1 + rng.below(40) / 10.0
        fleet.append(SimWorkerSpec(f"n{i}", rate, latency, join_at, fail_at,
                                   1 + rng.below(3)))
    return fleet, n_items


def test_exactly_once_in_order_under_churn():
    with Criterion("exactly-once under churn (1000 seeds)", 60):
        for seed in range(1000):
            fleet, n_items = churn_fleet(seed)
            trace = simulate(fleet, n_items, seed=seed, jitter_pct=25)
            verdict = check_trace_properties(trace)
            assert verdict.ok, (seed, verdict.violations[:3])


def test_redundancy_avoidance_zero_failure():
    with Criterion("redundancy avoidance (100 zero-failure seeds)", 5):
        for seed in range(100):
            rng = SplitMix64(seed ^ 0xBEEF)
            fleet = [SimWorkerSpec(f"s{i}", 10.0 + rng.below(300),
                                   float(rng.below(30)), rng.below(10) / 10.0,
                                   None, 1 + rng.below(3))
                     for i in range(1 + rng.below(4))]
            n_items = 40 + rng.below(120)
            trace = simulate(fleet, n_items, seed=seed)
            lent = sum(len(e["indices"]) for e in trace.events
                       if e["kind"] == "lend")
            assert lent == n_items, (seed, lent, n_items)
            assert check_trace_properties(trace).ok


def test_proportional_dispatch_eight_to_one():
    with Criterion("proportional dispatch 8:1 over 9000 items", 5):
        trace = simulate([SimWorkerSpec("fast", 80.0),
                          SimWorkerSpec("slow", 10.0)], 9000)
        counts = {}
        for event in trace.events:
            if event["kind"] == "settle" and event["accepted"]:
                counts[event["worker"]] = counts.get(event["worker"], 0) + 1
        assert abs(counts["w0"] - 8000) / 8000 <= 0.10, counts
        assert abs(counts["w1"] - 1000) / 1000 <= 0.10, counts


def test_table2_accounting_shape():
    with Criterion("Table-2 accounting shape", 5):
        wall = 100.0
        report = make_report(
            [(f"device-{i}", round(rate * wall))
             for i, rate in enumerate(TABLE2_RANDOM_TESTING_RATES)], wall)
        row_sum = sum(r.items_per_s for r in report.rows)
        assert abs(report.all_row.items_per_s - row_sum) <= 0.01
        assert abs(report.all_row.items_per_s - 3688.14) <= 0.01
        for row, printed in zip(report.rows, TABLE2_PRINTED_SHARES):
            assert abs(row.share_pct - printed) <= 0.1, (row, printed)


def test_table3_share_formula():
    with Criterion("Table-3 share formula (iPhone SE row)", 5):
        assert share_pct(443.46, 2371.82) == 18.70


def test_pipelining_window_two():
    with Criterion("pipelining: window 2 hides a service-sized RTT", 5):
        rates = pipeline_speedup(10.0, 100.0, [1, 2])
        assert rates[2] / rates[1] >= 1.8, rates


def test_interleaving_suite():
    with Criterion("interleaving suite (10^4 seeds x 200 ops + mutant)", 60):
        for seed in range(10_000):
            verdict = interleave_check(seed, 200)
            assert verdict["violations"] == 0, (seed, verdict)
        mutant = MUTANTS["relent-without-revoke"]
        caught = None
        for seed in range(1000):
            if interleave_check(seed, 200, lender_factory=mutant)["violations"]:
                caught = seed
                break
        assert caught is not None, "mutant survived the first 1000 seeds"


def test_processor_oracles():
    with Criterion("processor oracles", 60):
        # collatz vs brute force
        def oracle_collatz(n):
            steps = 0
            while n > 1:
                n = n // 2 if n % 2 == 0 else 3 * n + 1
                steps += 1
            return steps

        for n in range(1, 10_001):
            assert collatz_steps(n) == oracle_collatz(n), n
        assert collatz_steps(2**70) == 70

        # hashcash vs exhaustive scan, and every hit re-verifies
        def oracle_hashcash(block, difficulty, start, count):
            for nonce in range(start, start + count):
                digest = hashlib.sha256((block + str(nonce)).encode()).digest()
                bits = "".join(f"{b:08b}" for b in digest)
                if len(bits) - len(bits.lstrip("0")) >= difficulty:
                    return nonce
            return None

        for difficulty in (3, 9, 14):
            got = hashcash_search("hello", difficulty, 0, 100_000)
            assert got == oracle_hashcash("hello", difficulty, 0, 100_000)
            if got is not None:
                digest = hashlib.sha256(("hello" + str(got)).encode()).digest()
                assert leading_zero_bits(digest) >= difficulty

        # blur vs the naive double loop on 100 random images
        def oracle_blur(w, h, px, r):
            out = []
            k = (2 * r + 1) ** 2
            for y in range(h):
                for x in range(w):
                    s = 0
                    for dy in range(-r, r + 1):
                        for dx in range(-r, r + 1):
                            s += px[min(h - 1, max(0, y + dy)) * w
                                    + min(w - 1, max(0, x + dx))]
                    out.append(math.floor(s / k + 0.5))
            return out

        rng = random.Random(2024)
        for _ in range(100):
            w, h = rng.randint(5, 16), rng.randint(5, 16)
            r = rng.randint(0, 3)
            pixels = [rng.randint(0, 255) for _ in range(w * h)]
            assert box_blur(w, h, pixels, r) == oracle_blur(w, h, pixels, r)

        # renderer vs the committed reference hash
        _, digest = render_frame(0, 8, 64, 64)
        assert digest == REFERENCE_FRAME_HASH


def test_end_to_end_with_worker_kill(tmp_path):
    with Criterion("end-to-end serve/work with mid-job kill", 30):
        base = int("7" * 2500)  # ~30 ms per item: room to kill mid-job
        values = [str(base + i) for i in range(100)]
        input_path = tmp_path / "in.ndjson"
        output_path = tmp_path / "out.ndjson"
        input_path.write_text("".join(json.dumps(v) + "\n" for v in values))

        serve = subprocess.Popen(
            [sys.executable, "-m", "pvc.cli", "serve", "--processor", "collatz",
             "--host", "127.0.0.1", "--port", "0",
             "--input", str(input_path), "--output", str(output_path),
             "--heartbeat-period", "0.3", "--heartbeat-misses", "2"],
            stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
        try:
            port = None
            deadline = time.time() + 10
            while time.time() < deadline and port is None:
                line = serve.stderr.readline()
                if "serving ws://" in line:
                    port = int(line.rsplit(":", 1)[1].split("/")[0])
            assert port, "coordinator never reported its port"

            url = f"ws://127.0.0.1:{port}/volunteer"
            victim = subprocess.Popen(
                [sys.executable, "-m", "pvc.cli", "work", url,
                 "--label", "victim"],
                stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)
            survivor = subprocess.Popen(
                [sys.executable, "-m", "pvc.cli", "work", url,
                 "--label", "survivor"],
                stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)

            # kill the victim once output is flowing
            deadline = time.time() + 20
            while time.time() < deadline:
                if output_path.exists() and \
                        output_path.read_text().count("\n") >= 10:
                    break
                time.sleep(0.05)
            victim.kill()

            stderr_rest = serve.communicate(timeout=25)[1]
            assert serve.returncode == 0, stderr_rest[-2000:]
            survivor.wait(timeout=10)
        finally:
            for proc in (serve,):
                if proc.poll() is None:
                    proc.kill()
            for name in ("victim", "survivor"):
                proc = locals().get(name)
                if proc is not None and proc.poll() is None:
                    proc.kill()

        records = [json.loads(line)
                   for line in output_path.read_text().splitlines()]
        assert [r["index"] for r in records] == list(range(100))
        oracle = [collatz_steps(int(v)) for v in values]
        assert [r["value"] for r in records] == oracle
        reprocessed = int(stderr_rest.rsplit("reprocessed=", 1)[1].split()[0])
        assert reprocessed <= 2, stderr_rest[-500:]
