"""Strict loader for the sweep CSV contract."""
from __future__ import annotations

import pandas as pd

# the simulator's column contract, in file order
REQUIRED_COLUMNS = [
    "mechanism", "M", "lambda", "block_bits", "seed", "row_kind", "request_id",
    "delay_s", "capacity_mbps", "satisfaction", "efficiency", "overhead_bits",
    "served_fraction", "fork_rate",
]

ROW_KINDS = {"sample", "summary"}

_NUMERIC = ["M", "lambda", "block_bits", "seed", "request_id", "delay_s",
            "capacity_mbps", "satisfaction", "efficiency", "overhead_bits",
            "served_fraction", "fork_rate"]


class SchemaError(ValueError):
    """The file does not match the sweep CSV contract."""


def load_results(csv_path) -> pd.DataFrame:
    """Read and type a sweep CSV, enforcing the exact column set.

    Missing or extra columns raise SchemaError listing them; a header-only
    file yields an empty frame.
    """
    df = pd.read_csv(csv_path, dtype=str, keep_default_na=False)
    missing = [c for c in REQUIRED_COLUMNS if c not in df.columns]
    extra = [c for c in df.columns if c not in REQUIRED_COLUMNS]
    if missing or extra:
        raise SchemaError(
            f"schema mismatch in {csv_path}: missing columns {missing}, "
            f"extra columns {extra}"
        )
    bad_kinds = set(df["row_kind"]) - ROW_KINDS
    if bad_kinds:
        raise SchemaError(f"unknown row_kind values {sorted(bad_kinds)}")
    for col in _NUMERIC:
        df[col] = pd.to_numeric(df[col].replace("", None), errors="raise")
    return df


def sample_rows(df: pd.DataFrame) -> pd.DataFrame:
    return df[df["row_kind"] == "sample"]


def summary_rows(df: pd.DataFrame) -> pd.DataFrame:
    return df[df["row_kind"] == "summary"]
