"""Sweep runner: configuration parsing, grid execution, CSV output.

The default grid reproduces the reference comparison: three mechanisms,
M in {2, 4, 8}, arrival rates {1, 5, 10}/s, block sizes {3000, 6000, 12000,
30000} bits, 20 replications each. Grid cells are independent; per-run seeds
derive from the base seed and the cell coordinates through a documented,
platform-stable integer hash, so any execution order (or worker count) yields
the same CSV bytes.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .blockchain import ChainParams
from .engine import MECHANISMS, ScenarioConfig, run_scenario
from .errors import ConfigurationError
from .metrics import CSV_COLUMNS, MetricsReport, aggregate, report_rows

DEFAULT_MECHANISMS = MECHANISMS
DEFAULT_OPERATORS = (2, 4, 8)
DEFAULT_LAMBDAS = (1.0, 5.0, 10.0)
DEFAULT_BLOCK_BITS = (3000, 6000, 12000, 30000)
DEFAULT_REPLICATIONS = 20
DEFAULT_SEED = 1
DEFAULT_OUT = "results.csv"
SEED_ENV_VAR = "ORANSIM_SEED"

# scenario knobs accepted in the JSON config, with expected types
_SCENARIO_KEYS = {
    "cells": int,
    "ues": int,
    "horizon": float,
    "mean_service_duration": float,
    "processing_delay": float,
    "auction_max_wait": float,
    "tolerance": float,
    "max_price": float,
    "mean_mining_time": float,
    "fill_timeout": float,
    "p2p_link_capacity": float,
}
_TOP_KEYS = {
    "mechanisms": list,
    "operators": list,
    "lambdas": list,
    "block_bits": list,
    "replications": int,
    "seed": int,
    "out": str,
    "jobs": int,
    **_SCENARIO_KEYS,
}


@dataclass
class SweepSpec:
    mechanisms: tuple[str, ...] = DEFAULT_MECHANISMS
    m_values: tuple[int, ...] = DEFAULT_OPERATORS
    lambda_values: tuple[float, ...] = DEFAULT_LAMBDAS
    block_bits_values: tuple[int, ...] = DEFAULT_BLOCK_BITS
    replications: int = DEFAULT_REPLICATIONS
    base_seed: int = DEFAULT_SEED
    output_path: str = DEFAULT_OUT
    jobs: int = 1
    scenario: dict = field(default_factory=dict)  # overrides for ScenarioConfig

    def validate(self) -> None:
        for name in ("mechanisms", "m_values", "lambda_values", "block_bits_values"):
            if not getattr(self, name):
                raise ConfigurationError(f"{name} must be non-empty")
        for mech in self.mechanisms:
            if mech not in MECHANISMS:
                raise ConfigurationError(
                    f"unknown mechanism {mech!r}, expected one of {MECHANISMS}"
                )
        if self.replications < 1:
            raise ConfigurationError(
                f"replications must be >= 1, got {self.replications}"
            )
        if self.jobs < 1:
            raise ConfigurationError(f"jobs must be >= 1, got {self.jobs}")


def derive_seed(base_seed: int, num_operators: int, arrival_rate: float,
                block_bits: int, replication: int) -> int:
    """Stable per-run seed from the base seed and grid coordinates.

    The mechanism is deliberately left out so the three mechanisms run on
    identical deployments and arrival traces, making their comparison paired.
    """
    entropy = (base_seed, num_operators, int(round(arrival_rate * 1000)),
               block_bits, replication)
    return int(np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint64)[0])


def _parse_list(raw, caster, key: str):
    items = raw.split(",") if isinstance(raw, str) else raw
    try:
        return tuple(caster(item) for item in items)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{key} expects a list of {caster.__name__}") from None


def parse_config(config_path=None, overrides: dict | None = None) -> SweepSpec:
    """Merge JSON config file and command-line overrides (overrides win).

    Unknown keys are rejected rather than silently ignored. The ORANSIM_SEED
    environment variable is the lowest-precedence seed source.
    """
    overrides = overrides or {}
    file_cfg: dict = {}
    if config_path is not None:
        path = Path(config_path)
        if not path.exists():
            raise ConfigurationError(f"config file not found: {path}")
        try:
            file_cfg = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config file {path} is not valid JSON: {exc}")
        if not isinstance(file_cfg, dict):
            raise ConfigurationError(f"config file {path} must hold a JSON object")
        for key in file_cfg:
            if key not in _TOP_KEYS:
                raise ConfigurationError(f"unknown config key {key!r}")

    def pick(key, default=None):
        if overrides.get(key) is not None:
            return overrides[key]
        if key in file_cfg:
            return file_cfg[key]
        return default

    seed = pick("seed")
    if seed is None:
        env = os.environ.get(SEED_ENV_VAR)
        if env is not None:
            try:
                seed = int(env)
            except ValueError:
                raise ConfigurationError(
                    f"{SEED_ENV_VAR} must be an integer, got {env!r}"
                )
        else:
            seed = DEFAULT_SEED

    def typed(key, caster, default):
        value = pick(key, default)
        if value is None:
            return None
        try:
            return caster(value)
        except (TypeError, ValueError):
            raise ConfigurationError(
                f"{key} expects {caster.__name__}, got {value!r}"
            ) from None

    scenario = {}
    for key, caster in _SCENARIO_KEYS.items():
        value = typed(key, caster, None)
        if value is not None:
            scenario[key] = value

    spec = SweepSpec(
        mechanisms=tuple(
            str(m).upper() for m in _parse_list(
                pick("mechanisms", list(DEFAULT_MECHANISMS)), str, "mechanisms")
        ),
        m_values=_parse_list(pick("operators", list(DEFAULT_OPERATORS)), int,
                             "operators"),
        lambda_values=_parse_list(pick("lambdas", list(DEFAULT_LAMBDAS)), float,
                                  "lambdas"),
        block_bits_values=_parse_list(pick("block_bits", list(DEFAULT_BLOCK_BITS)),
                                      int, "block_bits"),
        replications=typed("replications", int, DEFAULT_REPLICATIONS),
        base_seed=int(seed),
        output_path=str(pick("out", DEFAULT_OUT)),
        jobs=typed("jobs", int, 1),
        scenario=scenario,
    )
    spec.validate()
    return spec


@dataclass(frozen=True)
class _CellTask:
    mechanism: str
    num_operators: int
    arrival_rate: float
    block_bits: int
    replications: int
    base_seed: int
    scenario: tuple  # sorted (key, value) pairs, picklable


def _scenario_config(task: _CellTask, replication: int) -> ScenarioConfig:
    kw = dict(task.scenario)
    chain = ChainParams(
        max_block_bits=task.block_bits,
        mean_mining_time=kw.pop("mean_mining_time", 1.0),
        fill_timeout=kw.pop("fill_timeout", 5.0),
        p2p_link_capacity=kw.pop("p2p_link_capacity", 1e6),
        num_peers=task.num_operators,
    )
    rename = {"cells": "num_cells", "ues": "num_ues"}
    kw = {rename.get(k, k): v for k, v in kw.items()}
    return ScenarioConfig(
        mechanism=task.mechanism,
        num_operators=task.num_operators,
        arrival_rate=task.arrival_rate,
        chain_params=chain,
        seed=derive_seed(task.base_seed, task.num_operators, task.arrival_rate,
                         task.block_bits, replication),
        **kw,
    )


def _run_cell(task: _CellTask) -> list[MetricsReport]:
    return [
        aggregate(run_scenario(_scenario_config(task, rep)))
        for rep in range(task.replications)
    ]


def run_sweep(spec: SweepSpec) -> int:
    """Execute every grid cell x replication and write one CSV.

    Returns 0 on success. Any replication failure leaves the partial output
    under `<out>.partial` and returns 2.
    """
    spec.validate()
    scenario_items = tuple(sorted(spec.scenario.items()))
    tasks = [
        _CellTask(mech, m, lam, bits, spec.replications, spec.base_seed,
                  scenario_items)
        for mech in spec.mechanisms
        for m in spec.m_values
        for lam in spec.lambda_values
        for bits in spec.block_bits_values
    ]
    out_path = Path(spec.output_path)
    fh = open(out_path, "w", newline="", encoding="utf-8")
    writer = csv.writer(fh)
    writer.writerow(CSV_COLUMNS)
    try:
        if spec.jobs > 1:
            executor = ProcessPoolExecutor(max_workers=spec.jobs)
            results = executor.map(_run_cell, tasks)
        else:
            executor = None
            results = map(_run_cell, tasks)
        for i, (task, reports) in enumerate(zip(tasks, results), start=1):
            for rep in reports:
                writer.writerows(report_rows(rep))
            fh.flush()
            print(
                f"[{i}/{len(tasks)}] {task.mechanism} M={task.num_operators} "
                f"lambda={task.arrival_rate:g} block_bits={task.block_bits} done"
            )
        if executor is not None:
            executor.shutdown()
    except Exception as exc:  # noqa: BLE001 - report and preserve partial output
        fh.close()
        partial = out_path.with_name(out_path.name + ".partial")
        os.replace(out_path, partial)
        print(f"sweep failed: {exc}; partial results in {partial}", file=sys.stderr)
        return 2
    fh.close()
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # config errors exit 1, not argparse's default 2
        raise ConfigurationError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="oransim",
        description="Sweep the blockchain-enabled RAN sharing simulator "
                    "over mechanisms, operator counts, arrival rates, and "
                    "block sizes, writing one long-format CSV.",
    )
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--out", help=f"output CSV path (default {DEFAULT_OUT})")
    parser.add_argument("--seed", type=int, help="base seed for the sweep")
    parser.add_argument("--mechanisms", help="comma list, e.g. STATIC,AUCTION")
    parser.add_argument("--operators", help="comma list of operator counts")
    parser.add_argument("--lambda", dest="lambdas",
                        help="comma list of arrival rates (requests/s)")
    parser.add_argument("--block-bits", dest="block_bits",
                        help="comma list of block size caps in bits")
    parser.add_argument("--replications", type=int,
                        help="replications per grid cell")
    parser.add_argument("--jobs", type=int, help="parallel worker processes")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        spec = parse_config(args.config, vars(args))
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    try:
        return run_sweep(spec)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
