"""Cellular topology, propagation, and Shannon-capacity model.

Hexagonal grid of macro cells split round-robin among operators, with UEs
dropped uniformly inside the combined coverage disc. Propagation is a
3GPP-style urban-macro path loss. Interference assumes every non-serving cell
transmits at full power on all PRBs, which makes the SINR of a (cell, UE) pair
a static property of the geometry and keeps runs deterministic.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import ConfigurationError

TX_POWER_DBM = 46.0
NOISE_DBM_PER_HZ = -174.0
MIN_UE_CELL_DISTANCE_M = 10.0
INTER_SITE_DISTANCE_M = 500.0
PRBS_PER_CELL = 100
PRB_BANDWIDTH_HZ = 180_000.0
# narrow range: per-UE load still spans ~4..100 PRBs through SINR geometry,
# while served-set demand composition stays comparable across mechanisms
DEMAND_RANGE_MBPS = (5.0, 6.0)
# One full cell. A UE whose demand cannot be met with this many PRBs is
# uncoverable and stays unserved rather than being allocated more.
MAX_PRBS_PER_UE = 100

# Axial-coordinate steps walking one hex ring, starting from (-ring, ring).
_HEX_STEPS = ((1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1))


@dataclass(frozen=True)
class Cell:
    id: int
    owner_operator_id: int
    x: float
    y: float
    tx_power_dbm: float = TX_POWER_DBM
    total_prbs: int = PRBS_PER_CELL
    prb_bandwidth_hz: float = PRB_BANDWIDTH_HZ


@dataclass(frozen=True)
class Ue:
    id: int
    home_operator_id: int
    x: float
    y: float
    demand_mbps: float
    serving_cell_id: int


@dataclass(frozen=True)
class Deployment:
    cells: tuple[Cell, ...]
    ues: tuple[Ue, ...]
    num_operators: int
    inter_site_distance: float
    seed: int
    # memo for needed-PRB lookups; derived, excluded from equality/repr
    _needed_memo: dict = field(default_factory=dict, compare=False, repr=False)

    @cached_property
    def rx_power_dbm(self) -> np.ndarray:
        """Received power matrix, shape (num_cells, num_ues)."""
        cx = np.array([c.x for c in self.cells])
        cy = np.array([c.y for c in self.cells])
        ux = np.array([u.x for u in self.ues])
        uy = np.array([u.y for u in self.ues])
        dist = np.hypot(cx[:, None] - ux[None, :], cy[:, None] - uy[None, :])
        dist = np.maximum(dist, MIN_UE_CELL_DISTANCE_M)
        pl = 128.1 + 37.6 * np.log10(dist / 1000.0)
        tx = np.array([c.tx_power_dbm for c in self.cells])
        return tx[:, None] - pl

    @cached_property
    def _sinr_table(self) -> list[list[float]]:
        """Reference SINR (dB) per candidate serving cell, single-PRB noise."""
        rx_mw = 10.0 ** (self.rx_power_dbm / 10.0)
        total = rx_mw.sum(axis=0)
        noise = _noise_mw(self.cells[0].prb_bandwidth_hz)
        sinr = rx_mw / (noise + (total[None, :] - rx_mw))
        table = 10.0 * np.log10(sinr)
        return [list(map(float, row)) for row in table]

    def sinr_db(self, cell_id: int, ue_id: int) -> float:
        """SINR the UE would see if served by `cell_id` on one PRB."""
        return self._sinr_table[cell_id][ue_id]

    def needed_prbs(self, cell_id: int, ue_id: int, qos_mbps: float) -> Optional[int]:
        """Smallest PRB count meeting `qos_mbps` at this cell, None if uncoverable."""
        key = (cell_id, ue_id, qos_mbps)
        got = self._needed_memo.get(key)
        if got is None:
            bw = self.cells[cell_id].prb_bandwidth_hz
            n = prbs_needed(qos_mbps, self.sinr_db(cell_id, ue_id), bw)
            covered = shannon_capacity_mbps(n, self.sinr_db(cell_id, ue_id), bw) >= qos_mbps
            got = (n, covered)
            self._needed_memo[key] = got
        n, covered = got
        return n if covered else None

    def cells_of(self, operator_id: int) -> tuple[int, ...]:
        return tuple(c.id for c in self.cells if c.owner_operator_id == operator_id)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "num_operators": self.num_operators,
            "inter_site_distance_m": self.inter_site_distance,
            "cells": [
                {
                    "id": c.id,
                    "owner_operator_id": c.owner_operator_id,
                    "x_m": c.x,
                    "y_m": c.y,
                    "tx_power_dbm": c.tx_power_dbm,
                    "total_prbs": c.total_prbs,
                    "prb_bandwidth_hz": c.prb_bandwidth_hz,
                }
                for c in self.cells
            ],
            "ues": [
                {
                    "id": u.id,
                    "home_operator_id": u.home_operator_id,
                    "x_m": u.x,
                    "y_m": u.y,
                    "demand_mbps": u.demand_mbps,
                    "serving_cell_id": u.serving_cell_id,
                }
                for u in self.ues
            ],
        }

    def save_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)


def _noise_mw(bandwidth_hz: float) -> float:
    return 10.0 ** ((NOISE_DBM_PER_HZ + 10.0 * math.log10(bandwidth_hz)) / 10.0)


def path_loss_db(distance_m: float) -> float:
    """Urban-macro path loss, 128.1 + 37.6*log10(d_km); distances clamp at 10 m."""
    d = max(distance_m, MIN_UE_CELL_DISTANCE_M)
    return 128.1 + 37.6 * math.log10(d / 1000.0)


def hex_positions(num_cells: int, inter_site_distance: float) -> list[tuple[float, float]]:
    """Positions on a hex spiral around the origin (rings of 1, 7, 19, ... sites)."""
    positions = [(0.0, 0.0)]
    ring = 1
    while len(positions) < num_cells:
        q, r = -ring, ring
        for dq, dr in _HEX_STEPS:
            for _ in range(ring):
                if len(positions) >= num_cells:
                    return positions
                x = inter_site_distance * (q + r / 2.0)
                y = inter_site_distance * (math.sqrt(3.0) / 2.0) * r
                positions.append((x, y))
                q, r = q + dq, r + dr
        ring += 1
    return positions


def serving_cell_for(cells: Sequence[Cell], x: float, y: float) -> int:
    """Cell with the strongest received power at (x, y); ties go to the lowest id."""
    best_id, best_rx = -1, -math.inf
    for c in cells:
        rx = c.tx_power_dbm - path_loss_db(math.hypot(c.x - x, c.y - y))
        if rx > best_rx:
            best_id, best_rx = c.id, rx
    return best_id


def generate_deployment(
    num_cells: int,
    num_ues: int,
    num_operators: int,
    seed: int,
    inter_site_distance: float = INTER_SITE_DISTANCE_M,
) -> Deployment:
    """Build a reproducible deployment.

    Cells sit on a hex spiral and are assigned to operators round-robin by cell
    index. UEs are dropped uniformly in the disc covering all sites (max site
    distance from origin plus half the inter-site distance), get a uniformly
    random home operator, and draw their demand uniformly from
    DEMAND_RANGE_MBPS. Draw order: positions, home operators, demands.
    """
    if num_cells < 1:
        raise ConfigurationError(f"num_cells must be >= 1, got {num_cells}")
    if num_ues < 1:
        raise ConfigurationError(f"num_ues must be >= 1, got {num_ues}")
    if not 1 <= num_operators <= num_cells:
        raise ConfigurationError(
            f"num_operators must be in [1, num_cells={num_cells}], got {num_operators}"
        )
    rng = np.random.default_rng(seed)
    cells = tuple(
        Cell(id=i, owner_operator_id=i % num_operators, x=pos[0], y=pos[1])
        for i, pos in enumerate(hex_positions(num_cells, inter_site_distance))
    )
    radius = max(math.hypot(c.x, c.y) for c in cells) + inter_site_distance / 2.0
    rr = radius * np.sqrt(rng.random(num_ues))
    theta = rng.random(num_ues) * 2.0 * math.pi
    homes = rng.integers(0, num_operators, size=num_ues)
    lo, hi = DEMAND_RANGE_MBPS
    demands = lo + rng.random(num_ues) * (hi - lo)
    ues = []
    for i in range(num_ues):
        x, y = float(rr[i] * math.cos(theta[i])), float(rr[i] * math.sin(theta[i]))
        ues.append(
            Ue(
                id=i,
                home_operator_id=int(homes[i]),
                x=x,
                y=y,
                demand_mbps=float(demands[i]),
                serving_cell_id=serving_cell_for(cells, x, y),
            )
        )
    return Deployment(
        cells=cells,
        ues=tuple(ues),
        num_operators=num_operators,
        inter_site_distance=inter_site_distance,
        seed=seed,
    )


def compute_sinr_db(
    ue_id: int,
    allocation_map: Mapping[tuple[int, int], int],
    deployment: Deployment,
) -> float:
    """SINR (dB) for a UE under an explicit (cell, ue) -> PRB-count allocation.

    Signal comes from the cell carrying the UE's largest allocation (ties to
    the lowest cell id; the UE's strongest cell with one PRB if it holds no
    allocation). Noise spans the UE's allocated bandwidth; every other cell is
    assumed fully loaded on overlapping PRBs, so all of them interfere.
    """
    if not 0 <= ue_id < len(deployment.ues):
        raise KeyError(f"unknown ue_id {ue_id}")
    mine = [(c, n) for (c, u), n in allocation_map.items() if u == ue_id and n > 0]
    if mine:
        serving = min(mine, key=lambda cn: (-cn[1], cn[0]))[0]
        n_prbs = sum(n for _, n in mine)
    else:
        serving = deployment.ues[ue_id].serving_cell_id
        n_prbs = 1
    rx_mw = 10.0 ** (deployment.rx_power_dbm[:, ue_id] / 10.0)
    noise = _noise_mw(n_prbs * deployment.cells[serving].prb_bandwidth_hz)
    interference = float(rx_mw.sum() - rx_mw[serving])
    return 10.0 * math.log10(float(rx_mw[serving]) / (noise + interference))


def shannon_capacity_mbps(
    n_prbs: int, sinr_db: float, prb_bandwidth_hz: float = PRB_BANDWIDTH_HZ
) -> float:
    """Shannon capacity n * B * log2(1 + SINR), in Mbps; linear in n_prbs."""
    if n_prbs < 0:
        raise ValueError(f"n_prbs must be >= 0, got {n_prbs}")
    if n_prbs == 0:
        return 0.0
    sinr_linear = 10.0 ** (sinr_db / 10.0)
    return n_prbs * prb_bandwidth_hz * math.log2(1.0 + sinr_linear) / 1e6


def prbs_needed(
    demand_mbps: float,
    sinr_db: float,
    prb_bandwidth_hz: float = PRB_BANDWIDTH_HZ,
    max_prbs: int = MAX_PRBS_PER_UE,
) -> int:
    """Smallest PRB count whose capacity reaches the demand, capped at max_prbs.

    When even max_prbs falls short the cap itself is returned; callers detect
    the uncoverable case by checking shannon_capacity_mbps(cap) < demand (see
    Deployment.needed_prbs).
    """
    if demand_mbps <= 0:
        raise ValueError(f"demand_mbps must be > 0, got {demand_mbps}")
    per_prb = shannon_capacity_mbps(1, sinr_db, prb_bandwidth_hz)
    if per_prb <= 0.0:
        return max_prbs
    # jump near the answer, then settle the boundary with the exact formula
    n = max(1, min(max_prbs, int(demand_mbps / per_prb)))
    while n > 1 and shannon_capacity_mbps(n - 1, sinr_db, prb_bandwidth_hz) >= demand_mbps:
        n -= 1
    while n < max_prbs and shannon_capacity_mbps(n, sinr_db, prb_bandwidth_hz) < demand_mbps:
        n += 1
    return n
