"""Evaluation metrics and the long-format CSV writer.

Satisfaction blends a QoS term with a price term; efficiency measures how
tightly allocations hug actual need. Means over empty sets are undefined and
serialize as empty CSV cells, never as zero.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Optional, Sequence

if TYPE_CHECKING:  # pragma: no cover
    from .engine import RawResults

# weight of the QoS term; the remainder weights the price term
SATISFACTION_QOS_WEIGHT = 0.8

CSV_COLUMNS = [
    "mechanism", "M", "lambda", "block_bits", "seed", "row_kind", "request_id",
    "delay_s", "capacity_mbps", "satisfaction", "efficiency", "overhead_bits",
    "served_fraction", "fork_rate",
]


def satisfaction(
    capacity_mbps: float,
    demand_mbps: float,
    price_paid: float,
    max_price_ref: float,
    qos_weight: float = SATISFACTION_QOS_WEIGHT,
) -> float:
    """User satisfaction in [0, 1], rising with capacity, falling with price."""
    if demand_mbps <= 0:
        raise ValueError(f"demand_mbps must be > 0, got {demand_mbps}")
    if max_price_ref <= 0:
        raise ValueError(f"max_price_ref must be > 0, got {max_price_ref}")
    qos_term = min(1.0, capacity_mbps / demand_mbps)
    price_term = max(0.0, 1.0 - price_paid / max_price_ref)
    return qos_weight * qos_term + (1.0 - qos_weight) * price_term


def efficiency(allocations: Iterable[tuple[int, int]]) -> Optional[float]:
    """Sum of min(allocated, needed) over sum of allocated; None when empty.

    Equals 1 exactly when nothing is over-allocated; only over-allocation
    (bundles larger than need) pulls it below 1.
    """
    total_alloc = 0
    total_useful = 0
    for allocated, needed in allocations:
        if allocated <= 0:
            raise ValueError(f"allocated_prbs must be > 0, got {allocated}")
        total_alloc += allocated
        total_useful += min(allocated, needed)
    if total_alloc == 0:
        return None
    return total_useful / total_alloc


def blockchain_delay(record, processing_delay: float) -> float:
    """Blockchain-attributable share of a served request's establishment delay."""
    if not record.used_chain or record.established_at is None:
        return 0.0
    return max(0.0, record.established_at - record.requested_at - processing_delay)


@dataclass
class MetricsReport:
    mechanism: str
    num_operators: int
    arrival_rate: float
    block_bits: int
    seed: int
    mean_ue_capacity: Optional[float]
    mean_satisfaction: Optional[float]
    efficiency: Optional[float]
    blockchain_delay_samples: list[tuple[int, float]] = field(default_factory=list)
    overhead_bits_total: int = 0
    fork_rate_estimate: float = 0.0
    served_fraction: float = 0.0


def aggregate(raw: "RawResults") -> MetricsReport:
    """Fold one run's raw records into the per-scenario report.

    Capacity and satisfaction average over served requests; efficiency covers
    every nonzero allocation; the delay sample list keeps one entry per served
    request that touched the blockchain. Order-independent over records.
    """
    cfg = raw.config
    recs = sorted(raw.records, key=lambda r: r.request_id)
    served = [r for r in recs if r.established_at is not None]
    mean_cap = sum(r.capacity_mbps for r in served) / len(served) if served else None
    mean_sat = (
        sum(
            satisfaction(r.capacity_mbps, r.demand_mbps, r.price_paid, cfg.max_price)
            for r in served
        )
        / len(served)
        if served
        else None
    )
    eff = efficiency((r.prbs_allocated, r.prbs_needed) for r in served)
    delays = [
        (r.request_id, blockchain_delay(r, cfg.processing_delay))
        for r in served
        if r.used_chain
    ]
    return MetricsReport(
        mechanism=cfg.mechanism,
        num_operators=cfg.num_operators,
        arrival_rate=cfg.arrival_rate,
        block_bits=cfg.chain_params.max_block_bits,
        seed=cfg.seed,
        mean_ue_capacity=mean_cap,
        mean_satisfaction=mean_sat,
        efficiency=eff,
        blockchain_delay_samples=delays,
        overhead_bits_total=raw.overhead_bits,
        fork_rate_estimate=raw.fork_rate,
        served_fraction=len(served) / len(recs) if recs else 0.0,
    )


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def report_rows(report: MetricsReport) -> list[list[str]]:
    """CSV rows for one report: the summary row, then its sample rows."""
    key = [report.mechanism, str(report.num_operators), _fmt(report.arrival_rate),
           str(report.block_bits), str(report.seed)]
    rows = [
        key
        + ["summary", "", "",
           _fmt(report.mean_ue_capacity), _fmt(report.mean_satisfaction),
           _fmt(report.efficiency), str(report.overhead_bits_total),
           _fmt(report.served_fraction), _fmt(report.fork_rate_estimate)]
    ]
    for request_id, delay in report.blockchain_delay_samples:
        rows.append(key + ["sample", str(request_id), _fmt(delay),
                           "", "", "", "", "", ""])
    return rows


def write_csv(reports: Sequence[MetricsReport], path) -> None:
    """Write the long-format sweep CSV: one summary row per report, then one
    sample row per blockchain delay sample. Stable column order, '.' decimals."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for rep in reports:
            writer.writerows(report_rows(rep))
