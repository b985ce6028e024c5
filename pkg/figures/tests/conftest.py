"""Synthetic contract-conformant CSV builders."""
import csv

import numpy as np
import pytest

COLUMNS = [
    "mechanism", "M", "lambda", "block_bits", "seed", "row_kind", "request_id",
    "delay_s", "capacity_mbps", "satisfaction", "efficiency", "overhead_bits",
    "served_fraction", "fork_rate",
]


def write_rows(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(COLUMNS)
        writer.writerows(rows)
    return path


def summary_row(mechanism, m, lam, bits, seed, capacity=5.0, satisfaction=0.9,
                efficiency=0.8, overhead=1000, served=0.5, fork=0.01):
    return [mechanism, m, lam, bits, seed, "summary", "", "",
            capacity, satisfaction, efficiency, overhead, served, fork]


def sample_row(mechanism, m, lam, bits, seed, request_id, delay):
    return [mechanism, m, lam, bits, seed, "sample", request_id, delay,
            "", "", "", "", "", ""]


@pytest.fixture
def grid_csv(tmp_path):
    """A small full grid: 3 mechanisms x M {2,4,8} x lambda {1,5,10} x 2 block
    sizes, with delay samples for the sharing mechanisms."""
    rng = np.random.default_rng(7)
    rows = []
    seed = 0
    for mech in ("STATIC", "MARKETPLACE", "AUCTION"):
        scale = {"STATIC": 0.0, "MARKETPLACE": 1.0, "AUCTION": 4.0}[mech]
        for m in (2, 4, 8):
            for lam in (1.0, 5.0, 10.0):
                for bits in (3000, 30000):
                    seed += 1
                    rows.append(summary_row(
                        mech, m, lam, bits, seed,
                        capacity=4.0 + scale, satisfaction=0.8 + 0.02 * scale,
                        efficiency=1.0 if mech != "MARKETPLACE" else 0.8,
                        overhead=0 if mech == "STATIC" else int(1e5 * scale * m),
                    ))
                    if mech == "STATIC":
                        continue
                    for rid in range(10):
                        delay = float(rng.exponential(scale * (1 + bits / 10000)))
                        rows.append(sample_row(mech, m, lam, bits, seed, rid,
                                               max(delay, 1e-3)))
    return write_rows(tmp_path / "grid.csv", rows)
