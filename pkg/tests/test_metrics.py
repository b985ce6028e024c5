import random

import numpy as np
import pytest

from oransim.blockchain import ChainParams
from oransim.engine import (
    MECHANISM_MARKETPLACE,
    MECHANISM_STATIC,
    RawResults,
    ScenarioConfig,
    ServiceRecord,
    run_scenario,
)
from oransim.metrics import (
    CSV_COLUMNS,
    MetricsReport,
    aggregate,
    blockchain_delay,
    efficiency,
    satisfaction,
    write_csv,
)

REL = 1e-9


# --- satisfaction ------------------------------------------------------------

def test_satisfaction_maximal():
    assert satisfaction(10.0, 5.0, 0.0, 100.0) == pytest.approx(1.0, rel=REL)


def test_satisfaction_minimal():
    assert satisfaction(0.0, 5.0, 100.0, 100.0) == pytest.approx(0.0, abs=1e-12)


def test_satisfaction_hand_value_midpoint():
    # 0.8 * 0.5 + 0.2 * 0.5
    assert satisfaction(2.5, 5.0, 50.0, 100.0) == pytest.approx(0.5, rel=REL)


def test_satisfaction_bounded_over_grid():
    for cap in np.linspace(0, 30, 13):
        for price in np.linspace(0, 250, 11):
            s = satisfaction(float(cap), 10.0, float(price), 100.0)
            assert 0.0 <= s <= 1.0


def test_satisfaction_monotone_finite_differences():
    eps = 1e-6
    for cap in np.linspace(0.5, 25, 9):
        for price in np.linspace(0, 90, 9):
            base = satisfaction(float(cap), 10.0, float(price), 100.0)
            up_cap = satisfaction(float(cap) + eps, 10.0, float(price), 100.0)
            up_price = satisfaction(float(cap), 10.0, float(price) + eps, 100.0)
            assert up_cap >= base - 1e-15
            assert up_price <= base + 1e-15


def test_satisfaction_validates_inputs():
    with pytest.raises(ValueError):
        satisfaction(1.0, 0.0, 0.0, 100.0)
    with pytest.raises(ValueError):
        satisfaction(1.0, 1.0, 0.0, 0.0)


# --- efficiency ---------------------------------------------------------------

def test_efficiency_exact_allocations():
    assert efficiency([(5, 5), (17, 17)]) == pytest.approx(1.0, rel=REL)


def test_efficiency_double_allocation():
    assert efficiency([(10, 5)]) == pytest.approx(0.5, rel=REL)


def test_efficiency_hand_value_mixed():
    # (min(10,10) + min(20,5)) / 30 = 15/30
    assert efficiency([(10, 10), (20, 5)]) == pytest.approx(0.5, rel=REL)


def test_efficiency_underallocation_counts_full():
    assert efficiency([(3, 6)]) == pytest.approx(1.0, rel=REL)


def test_efficiency_empty_is_undefined():
    assert efficiency([]) is None


def test_efficiency_rejects_zero_allocation():
    with pytest.raises(ValueError):
        efficiency([(0, 5)])


# --- blockchain delay ------------------------------------------------------------

def _record(established, used_chain, requested=1.0):
    return ServiceRecord(
        request_id=0, ue_id=0, requester_op=0, demand_mbps=5.0,
        requested_at=requested, established_at=established,
        used_chain=used_chain,
    )


def test_delay_zero_for_home_served():
    assert blockchain_delay(_record(1.1, used_chain=False), 0.1) == 0.0


def test_delay_strips_processing_share():
    rec = _record(4.6, used_chain=True)
    assert blockchain_delay(rec, 0.1) == pytest.approx(3.5, rel=REL)


def test_delay_never_negative():
    rec = _record(1.1, used_chain=True)
    assert blockchain_delay(rec, 0.5) == 0.0


# --- aggregation -----------------------------------------------------------------

def _raw(records, mechanism=MECHANISM_STATIC):
    cfg = ScenarioConfig(
        mechanism=mechanism, num_operators=2,
        chain_params=ChainParams(max_block_bits=6000, num_peers=2),
        num_cells=7, num_ues=10, seed=1,
    )
    return RawResults(config=cfg, records=records, tx_latencies=[],
                      overhead_bits=0, fork_rate=0.01, num_blocks=0)


def full_record(i, capacity=6.0, price=10.0, established=2.0, used_chain=True):
    return ServiceRecord(
        request_id=i, ue_id=i, requester_op=0, demand_mbps=5.0,
        requested_at=1.0, established_at=established, provider_op=1,
        prbs_allocated=10, prbs_needed=10, price_paid=price,
        capacity_mbps=capacity, used_chain=used_chain,
    )


def test_aggregate_single_record_equals_its_values():
    rep = aggregate(_raw([full_record(0)]))
    assert rep.mean_ue_capacity == pytest.approx(6.0)
    assert rep.mean_satisfaction == pytest.approx(
        satisfaction(6.0, 5.0, 10.0, 100.0)
    )
    assert rep.efficiency == pytest.approx(1.0)
    assert rep.served_fraction == 1.0
    assert len(rep.blockchain_delay_samples) == 1


def test_aggregate_all_failed_marks_undefined():
    failed = ServiceRecord(request_id=0, ue_id=0, requester_op=0,
                           demand_mbps=5.0, requested_at=1.0,
                           failed_reason="NO_RESOURCES")
    rep = aggregate(_raw([failed]))
    assert rep.served_fraction == 0.0
    assert rep.mean_ue_capacity is None
    assert rep.mean_satisfaction is None
    assert rep.efficiency is None
    assert rep.blockchain_delay_samples == []


def test_aggregate_permutation_invariant():
    records = [full_record(i, capacity=4.0 + i, price=float(i)) for i in range(8)]
    rng = random.Random(3)
    base = aggregate(_raw(records))
    for _ in range(5):
        shuffled = records[:]
        rng.shuffle(shuffled)
        assert aggregate(_raw(shuffled)) == base


def test_aggregate_delay_samples_only_from_chain_users():
    records = [full_record(0, used_chain=True), full_record(1, used_chain=False)]
    rep = aggregate(_raw(records))
    assert [rid for rid, _ in rep.blockchain_delay_samples] == [0]


def test_static_aggregation_zero_delay_and_overhead():
    cfg = ScenarioConfig(
        mechanism=MECHANISM_STATIC, num_operators=2,
        chain_params=ChainParams(max_block_bits=6000, num_peers=2),
        num_cells=7, num_ues=20, arrival_rate=1.0, horizon=30.0, seed=2,
    )
    rep = aggregate(run_scenario(cfg))
    assert rep.overhead_bits_total == 0
    assert rep.blockchain_delay_samples == []


# --- csv writer --------------------------------------------------------------------

def sample_report(seed=7, n_samples=3):
    return MetricsReport(
        mechanism=MECHANISM_MARKETPLACE, num_operators=4, arrival_rate=5.0,
        block_bits=6000, seed=seed, mean_ue_capacity=5.5,
        mean_satisfaction=0.97, efficiency=0.83,
        blockchain_delay_samples=[(i, 0.5 * (i + 1)) for i in range(n_samples)],
        overhead_bits_total=123456, fork_rate_estimate=0.01,
        served_fraction=0.5,
    )


def test_csv_header_only_for_empty_reports(tmp_path):
    path = tmp_path / "empty.csv"
    write_csv([], path)
    lines = path.read_text().strip().splitlines()
    assert lines == [",".join(CSV_COLUMNS)]


def test_csv_row_counts_match_contract(tmp_path):
    path = tmp_path / "out.csv"
    write_csv([sample_report(n_samples=3), sample_report(seed=8, n_samples=0)], path)
    lines = path.read_text().strip().splitlines()
    assert len(lines) == 1 + (1 + 3) + (1 + 0)
    header = lines[0].split(",")
    assert header == CSV_COLUMNS
    summary = lines[1].split(",")
    assert summary[CSV_COLUMNS.index("row_kind")] == "summary"
    assert summary[CSV_COLUMNS.index("request_id")] == ""
    sample = lines[2].split(",")
    assert sample[CSV_COLUMNS.index("row_kind")] == "sample"
    assert sample[CSV_COLUMNS.index("capacity_mbps")] == ""
    assert sample[CSV_COLUMNS.index("delay_s")] == "0.5"


def test_csv_undefined_metrics_serialize_empty(tmp_path):
    rep = sample_report(n_samples=0)
    rep.mean_ue_capacity = None
    rep.mean_satisfaction = None
    rep.efficiency = None
    path = tmp_path / "undef.csv"
    write_csv([rep], path)
    summary = path.read_text().strip().splitlines()[1].split(",")
    for col in ("capacity_mbps", "satisfaction", "efficiency"):
        assert summary[CSV_COLUMNS.index(col)] == ""


def test_csv_byte_identical_reruns(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    reports = [sample_report(), sample_report(seed=9)]
    write_csv(reports, a)
    write_csv(reports, b)
    assert a.read_bytes() == b.read_bytes()


def test_csv_unwritable_path_raises(tmp_path):
    with pytest.raises(OSError):
        write_csv([sample_report()], tmp_path / "missing-dir" / "x.csv")
