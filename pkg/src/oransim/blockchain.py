"""Event-driven model of the private chain shared by the operator brokers.

One logical mining process serves a FIFO mempool. Blocks close either when the
pending payloads fill the block-size cap or when the oldest pending
transaction has waited out the fill timeout. Mining times are exponential;
blocks propagate over a full mesh of peer links, and every transaction in a
block confirms the moment the block has fully propagated. Forks are estimated
analytically, never simulated: the chain is a single line by construction.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .errors import ConfigurationError, OversizedTransactionError, SimulationStateError

BLOCK_HEADER_BITS = 200

DEFAULT_MEAN_MINING_TIME_S = 0.6
# long enough that high arrival rates push the large swept block sizes into
# the fill-triggered regime while low rates stay timeout-bound
DEFAULT_FILL_TIMEOUT_S = 15.0
DEFAULT_P2P_LINK_CAPACITY_BPS = 1e6


class TxKind(Enum):
    OFFER_UPDATE = "OFFER_UPDATE"
    SLA_CONTRACT = "SLA_CONTRACT"
    AUCTION_CONTRACT = "AUCTION_CONTRACT"
    BID = "BID"
    WINNER_NOTICE = "WINNER_NOTICE"


PAYLOAD_BITS = {
    TxKind.OFFER_UPDATE: 300,
    TxKind.SLA_CONTRACT: 950,
    TxKind.AUCTION_CONTRACT: 950,
    TxKind.BID: 300,
    TxKind.WINNER_NOTICE: 200,
}


@dataclass(slots=True)
class Transaction:
    tx_id: int
    kind: TxKind
    payload_bits: int
    submitted_at: float
    confirmed_at: Optional[float] = None


@dataclass(slots=True)
class Block:
    block_id: int
    parent_id: Optional[int]
    tx_ids: tuple[int, ...]
    size_bits: int
    formed_at: float
    mined_at: Optional[float] = None
    fully_propagated_at: Optional[float] = None


@dataclass(frozen=True)
class ChainParams:
    max_block_bits: int
    mean_mining_time: float = DEFAULT_MEAN_MINING_TIME_S
    fill_timeout: float = DEFAULT_FILL_TIMEOUT_S
    p2p_link_capacity: float = DEFAULT_P2P_LINK_CAPACITY_BPS
    num_peers: int = 2

    def __post_init__(self):
        for name in ("max_block_bits", "mean_mining_time", "fill_timeout",
                     "p2p_link_capacity", "num_peers"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be > 0, got {getattr(self, name)}")
        smallest = min(PAYLOAD_BITS.values())
        if self.max_block_bits <= BLOCK_HEADER_BITS + smallest:
            raise ConfigurationError(
                f"max_block_bits={self.max_block_bits} leaves no room for a "
                f"transaction (header {BLOCK_HEADER_BITS} + {smallest})"
            )


def mining_duration(params: ChainParams, rng: np.random.Generator) -> float:
    """One mining time, exponential with mean params.mean_mining_time."""
    return float(rng.exponential(params.mean_mining_time))


def propagation_delay(block: Block, params: ChainParams) -> float:
    """Full-mesh single-hop broadcast time: size / link capacity."""
    return block.size_bits / params.p2p_link_capacity


def fork_probability(t_prop: float, mean_mining_time: float) -> float:
    """Chance two consecutive mining completions land within one propagation."""
    return 1.0 - math.exp(-t_prop / mean_mining_time)


def estimate_fork_rate(params: ChainParams) -> float:
    """Fork-rate diagnostic for a worst-case (full) block."""
    return fork_probability(params.max_block_bits / params.p2p_link_capacity,
                            params.mean_mining_time)


class Blockchain:
    """Mempool, block formation, and confirmation bookkeeping for one run."""

    def __init__(self, params: ChainParams):
        self.params = params
        self.mempool: deque[Transaction] = deque()
        self.txs: dict[int, Transaction] = {}
        self.blocks: list[Block] = []
        self._next_tx_id = 0
        self._next_block_id = 0
        self._overhead_bits = 0

    def submit_transaction(self, kind: TxKind, payload_bits: int, now: float) -> int:
        if payload_bits <= 0:
            raise ValueError(f"payload_bits must be > 0, got {payload_bits}")
        if payload_bits > self.params.max_block_bits - BLOCK_HEADER_BITS:
            raise OversizedTransactionError(
                f"payload of {payload_bits} bits cannot fit a "
                f"{self.params.max_block_bits}-bit block"
            )
        tx = Transaction(self._next_tx_id, kind, payload_bits, now)
        self._next_tx_id += 1
        self.txs[tx.tx_id] = tx
        self.mempool.append(tx)
        # broadcast to the other peers on submission
        self._overhead_bits += payload_bits * (self.params.num_peers - 1)
        return tx.tx_id

    def oldest_pending_at(self) -> Optional[float]:
        return self.mempool[0].submitted_at if self.mempool else None

    def try_form_block(self, now: float) -> Optional[Block]:
        """Close a block if the cap is reached or the oldest tx timed out.

        Oldest-first greedy fill; a transaction is never split. Returns None
        when neither trigger holds.
        """
        if not self.mempool:
            return None
        size = BLOCK_HEADER_BITS
        take = 0
        full = False
        for tx in self.mempool:
            if size + tx.payload_bits > self.params.max_block_bits:
                full = True
                break
            size += tx.payload_bits
            take += 1
        if size == self.params.max_block_bits:
            full = True
        # same expression the engine schedules the timeout with, so the
        # comparison is exact at the event instant
        timed_out = now >= self.mempool[0].submitted_at + self.params.fill_timeout
        if not (full or timed_out):
            return None
        tx_ids = tuple(self.mempool.popleft().tx_id for _ in range(take))
        parent = self.blocks[-1].block_id if self.blocks else None
        block = Block(self._next_block_id, parent, tx_ids, size, formed_at=now)
        self._next_block_id += 1
        return block

    def finalize_block(self, block: Block, mined_at: float) -> float:
        """Record a mined block and return the time it is fully propagated."""
        block.mined_at = mined_at
        block.fully_propagated_at = mined_at + propagation_delay(block, self.params)
        self.blocks.append(block)
        self._overhead_bits += block.size_bits * (self.params.num_peers - 1)
        return block.fully_propagated_at

    def confirm_block(self, block: Block, now: float) -> list[tuple[int, float]]:
        """Stamp every transaction in the block as confirmed at `now`."""
        out = []
        for tx_id in block.tx_ids:
            tx = self.txs[tx_id]
            if tx.confirmed_at is not None:
                raise SimulationStateError(f"tx {tx_id} confirmed twice")
            tx.confirmed_at = now
            out.append((tx_id, now))
        return out

    def overhead_bits(self) -> int:
        """Total bits broadcast so far: tx payloads and block bodies, times M-1."""
        return self._overhead_bits

    def export_blocks(self) -> list[dict]:
        """Chain state as a JSON-ready block list (debugging aid)."""
        return [
            {
                "block_id": b.block_id,
                "parent_id": b.parent_id,
                "tx_ids": list(b.tx_ids),
                "size_bits": b.size_bits,
                "formed_at": b.formed_at,
                "mined_at": b.mined_at,
                "fully_propagated_at": b.fully_propagated_at,
            }
            for b in self.blocks
        ]
