"""Simulator scenarios: the numbers the scheduling design stands on."""

import pytest

from pvc.mutants import MUTANTS
from pvc.rng import SplitMix64
from pvc.simnet import (
    SimDeadEnd,
    SimTrace,
    SimWorkerSpec,
    check_trace_properties,
    pipeline_speedup,
    simulate,
)

TABLE2_RANDOM_TESTING_RATES = [54.22, 150.46, 617.40, 551.18, 498.65, 1816.23]


def completed_counts(trace):
    counts = {}
    for event in trace.events:
        if event["kind"] == "settle" and event["accepted"]:
            counts[event["worker"]] = counts.get(event["worker"], 0) + 1
    return counts


def test_single_worker_makespan_is_items_over_rate():
    trace = simulate([SimWorkerSpec("solo", 10.0)], 100)
    assert abs(trace.makespan - 10.0) / 10.0 < 0.01
    assert check_trace_properties(trace).ok


def test_zero_items_is_empty_and_instant():
    trace = simulate([SimWorkerSpec("solo", 10.0)], 0)
    assert trace.makespan == 0.0
    assert trace.report.all_row.items_per_s == 0.0
    assert check_trace_properties(trace).ok


def test_eight_to_one_rate_split():
    trace = simulate([SimWorkerSpec("fast", 80.0), SimWorkerSpec("slow", 10.0)],
                     9000)
    counts = completed_counts(trace)
    assert abs(counts["w0"] - 8000) / 8000 < 0.10
    assert abs(counts["w1"] - 1000) / 1000 < 0.10
    assert check_trace_properties(trace).ok


def test_table2_fleet_aggregate_throughput():
    fleet = [SimWorkerSpec(f"d{i}", rate)
             for i, rate in enumerate(TABLE2_RANDOM_TESTING_RATES)]
    trace = simulate(fleet, 40000)
    aggregate = 40000 / trace.makespan
    assert abs(aggregate - 3688.14) / 3688.14 < 0.05
    assert check_trace_properties(trace).ok


def test_simulation_is_bit_identical_across_runs():
    fleet = [SimWorkerSpec("a", 30, 5, 0.0, 2.0),
             SimWorkerSpec("b", 20, 10, 0.5),
             SimWorkerSpec("c", 10, 0, 1.0, 4.0)]
    a = simulate(fleet, 250, seed=7, jitter_pct=30)
    b = simulate(fleet, 250, seed=7, jitter_pct=30)
    assert a.to_ndjson() == b.to_ndjson()
    assert a.report == b.report


def test_failure_reprocessing_bounded_by_window():
    fleet = [SimWorkerSpec("dies", 50.0, window=2, fail_at=1.0),
             SimWorkerSpec("lives", 10.0, window=2)]
    trace = simulate(fleet, 500)
    assert check_trace_properties(trace).ok
    revokes = [e for e in trace.events if e["kind"] == "revoke"]
    assert len(revokes) == 1
    assert 1 <= len(revokes[0]["indices"]) <= 2
    assert trace.report.reprocessed == len(revokes[0]["indices"])


def test_late_join_contributes():
    fleet = [SimWorkerSpec("early", 10.0),
             SimWorkerSpec("late", 10.0, join_at=2.0)]
    trace = simulate(fleet, 100)
    counts = completed_counts(trace)
    assert counts.get("w1", 0) >= 1
    assert check_trace_properties(trace).ok


def test_all_workers_failing_names_remaining_indices():
    fleet = [SimWorkerSpec("a", 10.0, fail_at=1.0),
             SimWorkerSpec("b", 10.0, fail_at=1.5)]
    with pytest.raises(SimDeadEnd) as err:
        simulate(fleet, 500)
    assert err.value.remaining  # the unfinished indices are reported


def test_churn_seeds_pass_trace_properties():
    # broader 1000-seed sweep runs in the acceptance suite
    for seed in range(50):
        fleet, n_items = random_churn_fleet(seed)
        trace = simulate(fleet, n_items, seed=seed, jitter_pct=25)
        verdict = check_trace_properties(trace)
        assert verdict.ok, (seed, verdict.violations)


def random_churn_fleet(seed):
    """Deterministic random fleet: 2..5 workers, half may fail, >=1 survives."""
    rng = SplitMix64(seed ^ 0xC0FFEE)
    n_workers = 2 + rng.below(4)
    n_items = 50 + rng.below(150)
    fleet = []
    for i in range(n_workers):
        rate = 5.0 + rng.below(400) / 4.0
        latency = rng.below(40)
        join_at = rng.below(20) / 10.0
        fail_at = None
        if i > 0 and rng.below(2):  # worker 0 always survives
            fail_at = join_at + 0.1 + rng.below(40) / 10.0
        window = 1 + rng.below(3)
        fleet.append(SimWorkerSpec(f"n{i}", rate, latency, join_at, fail_at,
                                   window))
    return fleet, n_items


def test_throughput_monotone_in_workers():
    # zero-failure, zero-jitter: adding a worker never reduces the number
    # of emissions by any fixed horizon
    base = [SimWorkerSpec("a", 20.0, 5.0), SimWorkerSpec("b", 10.0, 10.0)]
    extra = base + [SimWorkerSpec("c", 15.0, 5.0, join_at=1.0)]
    t_base = simulate(base, 400)
    t_extra = simulate(extra, 400)

    def emits_by(trace, horizon):
        return sum(1 for e in trace.events
                   if e["kind"] == "emit" and e["t"] <= horizon)

    for horizon in (2.0, 5.0, 10.0, 15.0):
        assert emits_by(t_extra, horizon) >= emits_by(t_base, horizon)


# ---------------------------------------------------------------------------
# trace checking has teeth


def test_handcrafted_duplicate_emit_is_flagged():
    trace = simulate([SimWorkerSpec("solo", 10.0)], 6)
    doctored = SimTrace(events=list(trace.events), report=trace.report,
                        n_items=6, makespan=trace.makespan)
    emit4 = next(e for e in doctored.events
                 if e["kind"] == "emit" and e["index"] == 4)
    doctored.events.append(dict(emit4, t=doctored.makespan))
    verdict = check_trace_properties(doctored)
    assert not verdict.ok
    assert "duplicate-emit(4)" in verdict.violations


def test_double_lending_mutant_is_flagged_as_concurrent_hold():
    fleet = [SimWorkerSpec("a", 50.0), SimWorkerSpec("b", 25.0)]
    trace = simulate(fleet, 200, lender_factory=MUTANTS["double-lend"])
    verdict = check_trace_properties(trace)
    assert not verdict.ok
    assert any(v.startswith("concurrent-hold") for v in verdict.violations)


# ---------------------------------------------------------------------------
# pipelining


def test_no_delay_means_no_window_gain():
    rates = pipeline_speedup(10.0, 0.0, [1, 2])
    assert abs(rates[2] / rates[1] - 1.0) < 0.01


def test_window_two_hides_a_service_sized_round_trip():
    rates = pipeline_speedup(10.0, 100.0, [1, 2])
    assert rates[2] / rates[1] >= 1.8


def test_window_eleven_saturates_long_round_trip():
    rates = pipeline_speedup(10.0, 1000.0, [11])
    assert abs(rates[11] - 10.0) / 10.0 < 0.05
