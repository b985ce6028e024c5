"""Seeded discrete-event core executing the sharing flows.

One replication is one strictly sequential event loop over a single heap.
Arrivals are Poisson and target uniformly random UEs. The three mechanisms
differ in how a request reaches resources:

* STATIC       — home operator only; partial service on shortfall, no chain.
* MARKETPLACE  — home first; on shortfall buy the cheapest qualifying bundle
                 from another operator's catalog via one SLA transaction.
* AUCTION      — always a per-UE reverse auction: contract broadcast, bids
                 from every other operator, winner notice; home static service
                 is the fallback when the auction yields nothing.

Replications share nothing; identical configs (including seed) reproduce
bit-identical results.
"""
from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from . import broker
from .blockchain import (
    PAYLOAD_BITS,
    Blockchain,
    ChainParams,
    TxKind,
    estimate_fork_rate,
    mining_duration,
)
from .broker import (
    Accept,
    Bid,
    ContractFactory,
    OperatorState,
    SmartContract,
    admission_control,
    allocate,
    build_catalog,
    generate_bid,
    make_operator_states,
    release,
    select_offer,
    select_winner,
)
from .deployment import Deployment, generate_deployment, shannon_capacity_mbps
from .errors import ConfigurationError, SimulationStateError

MECHANISM_STATIC = "STATIC"
MECHANISM_MARKETPLACE = "MARKETPLACE"
MECHANISM_AUCTION = "AUCTION"
MECHANISMS = (MECHANISM_STATIC, MECHANISM_MARKETPLACE, MECHANISM_AUCTION)

FAIL_NO_RESOURCES = "NO_RESOURCES"
FAIL_NO_OFFER = "NO_OFFER"
FAIL_PROVIDER_FULL = "PROVIDER_FULL"

DEFAULT_PROCESSING_DELAY_S = 0.1
# Safety cap only: auctions normally close once all M-1 on-chain responses
# (bids or decline notices) confirm, so the cap matters just when the chain
# is badly backlogged.
DEFAULT_AUCTION_MAX_WAIT_S = 300.0
# Candidate brokers evaluate admission and price a tailored bid before
# answering an auction; marketplace catalog lookups are immediate.
DEFAULT_BID_PREP_MEAN_S = 8.0
DEFAULT_MEAN_SERVICE_DURATION_S = 60.0

EV_ARRIVAL = "ARRIVAL"
EV_FILL_TIMEOUT = "FILL_TIMEOUT"
EV_MINING_DONE = "MINING_DONE"
EV_BLOCK_READY = "BLOCK_READY"
EV_RESPONSE_SUBMIT = "RESPONSE_SUBMIT"
EV_AUCTION_CLOSE = "AUCTION_CLOSE"
EV_TEARDOWN = "TEARDOWN"


@dataclass(frozen=True)
class ScenarioConfig:
    mechanism: str
    num_operators: int
    chain_params: ChainParams
    num_cells: int = 19
    num_ues: int = 200
    arrival_rate: float = 1.0  # requests/second, global
    horizon: float = 600.0
    mean_service_duration: float = DEFAULT_MEAN_SERVICE_DURATION_S
    processing_delay: float = DEFAULT_PROCESSING_DELAY_S
    auction_max_wait: float = DEFAULT_AUCTION_MAX_WAIT_S
    bid_prep_mean: float = DEFAULT_BID_PREP_MEAN_S
    tolerance: float = broker.DEFAULT_TOLERANCE
    max_price: float = broker.DEFAULT_MAX_PRICE
    seed: int = 0

    def validate(self) -> None:
        if self.mechanism not in MECHANISMS:
            raise ConfigurationError(
                f"mechanism must be one of {MECHANISMS}, got {self.mechanism!r}"
            )
        min_ops = 1 if self.mechanism == MECHANISM_STATIC else 2
        if self.num_operators < min_ops:
            raise ConfigurationError(
                f"num_operators must be >= {min_ops} for {self.mechanism}, "
                f"got {self.num_operators}"
            )
        if self.num_operators > self.num_cells:
            raise ConfigurationError(
                f"num_operators={self.num_operators} exceeds num_cells={self.num_cells}"
            )
        for name in ("arrival_rate", "horizon", "mean_service_duration", "max_price"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be > 0, got {getattr(self, name)}")
        for name in ("processing_delay", "auction_max_wait", "bid_prep_mean"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must be >= 0, got {getattr(self, name)}")
        if not 0 <= self.tolerance < 1:
            raise ConfigurationError(f"tolerance must be in [0, 1), got {self.tolerance}")
        if self.chain_params.num_peers != self.num_operators:
            raise ConfigurationError(
                f"chain_params.num_peers={self.chain_params.num_peers} must equal "
                f"num_operators={self.num_operators}"
            )


@dataclass(slots=True)
class ServiceRecord:
    request_id: int
    ue_id: int
    requester_op: int
    demand_mbps: float
    requested_at: float
    provider_op: Optional[int] = None
    cell_id: Optional[int] = None
    prbs_allocated: int = 0
    prbs_needed: int = 0
    price_paid: float = 0.0
    established_at: Optional[float] = None
    failed_reason: Optional[str] = None
    torn_down_at: Optional[float] = None
    capacity_mbps: float = 0.0
    used_chain: bool = False
    tx_count: int = 0


class Event(NamedTuple):
    """Heap entry; dequeued in (time, sequence) order, sequence unique."""

    time: float
    sequence: int
    kind: str
    payload: object = None


@dataclass
class RawResults:
    config: ScenarioConfig
    records: list[ServiceRecord]
    tx_latencies: list[float]
    overhead_bits: int
    fork_rate: float
    num_blocks: int
    chain_export: Optional[list[dict]] = None


@dataclass
class _AuctionRound:
    contract: SmartContract
    record: ServiceRecord
    num_candidates: int
    responses_confirmed: int = 0
    confirmed_bids: list[Bid] = field(default_factory=list)
    closed: bool = False


def poisson_arrivals(
    arrival_rate: float, horizon: float, num_ues: int, rng: np.random.Generator
) -> list[tuple[float, int]]:
    """Poisson arrival times up to the horizon, each aimed at a random UE."""
    if arrival_rate <= 0:
        raise ConfigurationError(f"arrival_rate must be > 0, got {arrival_rate}")
    out = []
    t = float(rng.exponential(1.0 / arrival_rate))
    while t < horizon:
        out.append((t, int(rng.integers(num_ues))))
        t += float(rng.exponential(1.0 / arrival_rate))
    return out


class Simulation:
    """State and handlers for one replication."""

    def __init__(self, config: ScenarioConfig, check_invariants: bool = False):
        config.validate()
        self.cfg = config
        self.check_invariants = check_invariants
        self.deployment: Deployment = generate_deployment(
            config.num_cells, config.num_ues, config.num_operators, config.seed
        )
        seq = np.random.SeedSequence(config.seed)
        price_seq, arrival_seq, duration_seq, mining_seq, prep_seq = seq.spawn(5)
        self.states: list[OperatorState] = make_operator_states(
            self.deployment, np.random.default_rng(price_seq)
        )
        self.arrivals = poisson_arrivals(
            config.arrival_rate, config.horizon, config.num_ues,
            np.random.default_rng(arrival_seq),
        )
        dur_rng = np.random.default_rng(duration_seq)
        self.durations = [
            float(dur_rng.exponential(config.mean_service_duration))
            for _ in self.arrivals
        ]
        self.mining_rng = np.random.default_rng(mining_seq)
        self.prep_rng = np.random.default_rng(prep_seq)
        self.chain: Optional[Blockchain] = (
            None if config.mechanism == MECHANISM_STATIC
            else Blockchain(config.chain_params)
        )
        self.factory = ContractFactory()
        self.records: list[ServiceRecord] = []
        self.tx_latencies: list[float] = []
        self.now = 0.0
        self._heap: list[Event] = []
        self._seq = itertools.count()
        self._continuations: dict[int, Callable[[float], None]] = {}
        self._mining_block = None
        self._timeout_due: Optional[float] = None

    # -- event plumbing -----------------------------------------------------

    def _push(self, time: float, kind: str, payload=None) -> None:
        if time < self.now:
            raise SimulationStateError(
                f"event {kind} scheduled at {time} before now={self.now}"
            )
        heapq.heappush(self._heap, Event(time, next(self._seq), kind, payload))

    def run(self) -> RawResults:
        for i, (t, ue_id) in enumerate(self.arrivals):
            self._push(t, EV_ARRIVAL, (i, ue_id))
        if self.cfg.mechanism == MECHANISM_MARKETPLACE:
            # operators register their catalog entries on-chain at start-up
            for state in self.states:
                self.chain.submit_transaction(
                    TxKind.OFFER_UPDATE, PAYLOAD_BITS[TxKind.OFFER_UPDATE], 0.0
                )
        self._drive_chain(self.now)
        while self._heap:
            ev = heapq.heappop(self._heap)
            if ev.time < self.now:
                raise SimulationStateError("simulation clock moved backwards")
            self.now = ev.time
            self._dispatch(ev)
            self._drive_chain(self.now)
            if self.check_invariants:
                self._verify_states()
        self._finish_checks()
        return RawResults(
            config=self.cfg,
            records=self.records,
            tx_latencies=self.tx_latencies,
            overhead_bits=self.chain.overhead_bits() if self.chain else 0,
            fork_rate=estimate_fork_rate(self.cfg.chain_params),
            num_blocks=len(self.chain.blocks) if self.chain else 0,
            chain_export=self.chain.export_blocks() if self.chain else None,
        )

    def _dispatch(self, ev: Event) -> None:
        if ev.kind == EV_ARRIVAL:
            self._on_arrival(*ev.payload)
        elif ev.kind == EV_FILL_TIMEOUT:
            if self._timeout_due == ev.time:
                self._timeout_due = None
        elif ev.kind == EV_MINING_DONE:
            self._on_mining_done(ev.payload)
        elif ev.kind == EV_BLOCK_READY:
            self._on_block_ready(ev.payload)
        elif ev.kind == EV_RESPONSE_SUBMIT:
            self._on_response_submit(*ev.payload)
        elif ev.kind == EV_AUCTION_CLOSE:
            self._on_auction_close(ev.payload)
        elif ev.kind == EV_TEARDOWN:
            self._on_teardown(ev.payload)
        else:  # pragma: no cover
            raise SimulationStateError(f"unknown event kind {ev.kind}")

    # -- blockchain driving -------------------------------------------------

    def _drive_chain(self, now: float) -> None:
        chain = self.chain
        if chain is None or self._mining_block is not None:
            return
        block = chain.try_form_block(now)
        if block is not None:
            self._mining_block = block
            self._push(now + mining_duration(chain.params, self.mining_rng),
                       EV_MINING_DONE, block)
            return
        oldest = chain.oldest_pending_at()
        if oldest is not None:
            due = oldest + chain.params.fill_timeout
            if due != self._timeout_due:
                self._timeout_due = due
                self._push(due, EV_FILL_TIMEOUT)

    def _on_mining_done(self, block) -> None:
        ready_at = self.chain.finalize_block(block, self.now)
        self._push(ready_at, EV_BLOCK_READY, block)
        self._mining_block = None

    def _on_block_ready(self, block) -> None:
        for tx_id, confirmed_at in self.chain.confirm_block(block, self.now):
            self.tx_latencies.append(confirmed_at - self.chain.txs[tx_id].submitted_at)
            cont = self._continuations.pop(tx_id, None)
            if cont is not None:
                cont(confirmed_at)

    def _submit(self, kind: TxKind, record: ServiceRecord,
                cont: Optional[Callable[[float], None]] = None) -> int:
        tx_id = self.chain.submit_transaction(kind, PAYLOAD_BITS[kind], self.now)
        record.used_chain = True
        record.tx_count += 1
        if cont is not None:
            self._continuations[tx_id] = cont
        return tx_id

    # -- request handling ---------------------------------------------------

    def _on_arrival(self, request_id: int, ue_id: int) -> None:
        ue = self.deployment.ues[ue_id]
        record = ServiceRecord(
            request_id=request_id,
            ue_id=ue_id,
            requester_op=ue.home_operator_id,
            demand_mbps=ue.demand_mbps,
            requested_at=self.now,
        )
        self.records.append(record)
        if self.cfg.mechanism == MECHANISM_STATIC:
            self._serve_home(record, self.now)
        elif self.cfg.mechanism == MECHANISM_MARKETPLACE:
            self._handle_marketplace(record, self.now)
        else:
            self._handle_auction(record, self.now)

    def _requirements(self, record: ServiceRecord, now: float) -> SmartContract:
        # requirement card for local admission checks; never leaves the broker
        return SmartContract(
            contract_id=-1,
            requester_operator_id=record.requester_op,
            ue_id=record.ue_id,
            resource_type=broker.RESOURCE_PER_UE_ALLOCATION,
            required_qos=record.demand_mbps,
            service_duration=self.durations[record.request_id],
            max_price=self.cfg.max_price,
            tolerance=self.cfg.tolerance,
            created_at=now,
        )

    def _serve_home(self, record: ServiceRecord, now: float,
                    allow_partial: bool = True) -> None:
        """Service at the home operator: exact fit, else (static mode only)
        the largest feasible partial allocation in the best covering owned
        cell. Sharing-mode fallbacks run with allow_partial=False: an SLA
        either holds within tolerance or the request fails, mirroring the
        marketplace's fail-instead-of-degrade behavior."""
        state = self.states[record.requester_op]
        decision = admission_control(state, self._requirements(record, now),
                                     self.deployment)
        if isinstance(decision, Accept):
            self._establish(record, state, decision.cell_id, decision.prbs,
                            needed=decision.prbs, price=0.0, decision_time=now)
            return
        if not allow_partial:
            record.failed_reason = FAIL_NO_RESOURCES
            return
        dep = self.deployment
        covered = [
            c for c in state.owned_cells
            if dep.sinr_db(c, record.ue_id) >= broker.COVERAGE_SINR_DB
        ]
        if not covered:
            record.failed_reason = FAIL_NO_RESOURCES
            return
        best = min(covered, key=lambda c: (-dep.sinr_db(c, record.ue_id), c))
        target = record.demand_mbps * (1.0 - self.cfg.tolerance)
        needed = dep.needed_prbs(best, record.ue_id, target)
        if needed is None:  # uncoverable UEs stay unserved
            record.failed_reason = FAIL_NO_RESOURCES
            return
        partial = min(state.free_prbs[best], needed)
        if partial <= 0:
            record.failed_reason = FAIL_NO_RESOURCES
            return
        self._establish(record, state, best, partial, needed=needed,
                        price=0.0, decision_time=now)

    def _handle_marketplace(self, record: ServiceRecord, now: float) -> None:
        state = self.states[record.requester_op]
        decision = admission_control(state, self._requirements(record, now),
                                     self.deployment)
        if isinstance(decision, Accept):
            # spare home capacity serves the UE with no blockchain involvement
            self._establish(record, state, decision.cell_id, decision.prbs,
                            needed=decision.prbs, price=0.0, decision_time=now)
            return
        contract = self.factory.create_smart_contract(
            record.requester_op, record.ue_id, record.demand_mbps,
            self.durations[record.request_id], self.cfg.max_price,
            self.cfg.tolerance, now, resource_type=broker.RESOURCE_PRB_BUNDLE,
        )
        catalog = build_catalog(self.states, record.requester_op,
                                self.deployment, record.ue_id)
        offer = select_offer(catalog, contract, self.deployment)
        if offer is None:
            record.failed_reason = FAIL_NO_OFFER
            return
        self._submit(
            TxKind.SLA_CONTRACT, record,
            lambda t: self._marketplace_confirmed(record, contract, offer, t),
        )

    def _marketplace_confirmed(self, record: ServiceRecord,
                               contract: SmartContract, offer, t: float) -> None:
        provider = self.states[offer.provider_operator_id]
        target = broker.qos_target_mbps(contract)
        for cell in offer.covering_cells:
            needed = self.deployment.needed_prbs(cell, record.ue_id, target)
            if (needed is not None and needed <= offer.bundle_prbs
                    and provider.free_prbs[cell] >= offer.bundle_prbs):
                self._establish(record, provider, cell, offer.bundle_prbs,
                                needed=needed, price=offer.total_price,
                                decision_time=t)
                return
        record.failed_reason = FAIL_PROVIDER_FULL

    def _handle_auction(self, record: ServiceRecord, now: float) -> None:
        contract = self.factory.create_smart_contract(
            record.requester_op, record.ue_id, record.demand_mbps,
            self.durations[record.request_id], self.cfg.max_price,
            self.cfg.tolerance, now,
            resource_type=broker.RESOURCE_PER_UE_ALLOCATION,
        )
        rnd = _AuctionRound(contract=contract, record=record,
                            num_candidates=self.cfg.num_operators - 1)
        self._submit(TxKind.AUCTION_CONTRACT, record,
                     lambda t: self._auction_open(rnd, t))

    def _auction_open(self, rnd: _AuctionRound, t: float) -> None:
        # every candidate answers on-chain (a bid or a decline notice) after
        # its own evaluation time; prep draws consume in operator order
        for state in self.states:
            if state.operator_id == rnd.contract.requester_operator_id:
                continue
            prep = (float(self.prep_rng.exponential(self.cfg.bid_prep_mean))
                    if self.cfg.bid_prep_mean > 0 else 0.0)
            self._push(t + prep, EV_RESPONSE_SUBMIT, (rnd, state.operator_id))
        self._push(t + self.cfg.auction_max_wait, EV_AUCTION_CLOSE, rnd)

    def _on_response_submit(self, rnd: _AuctionRound, operator_id: int) -> None:
        if rnd.closed:
            return
        bid = generate_bid(self.states[operator_id], rnd.contract,
                           self.deployment, self.now)
        self._submit(TxKind.BID, rnd.record,
                     lambda tt, b=bid: self._response_confirmed(rnd, b, tt))

    def _response_confirmed(self, rnd: _AuctionRound, bid: Optional[Bid],
                            t: float) -> None:
        if rnd.closed:
            return
        rnd.responses_confirmed += 1
        if bid is not None:
            rnd.confirmed_bids.append(bid)
        if rnd.responses_confirmed == rnd.num_candidates:
            self._push(t, EV_AUCTION_CLOSE, rnd)

    def _on_auction_close(self, rnd: _AuctionRound) -> None:
        if rnd.closed:
            return
        rnd.closed = True
        winner = select_winner(rnd.confirmed_bids, rnd.contract, self.deployment)
        if winner is None:
            self._serve_home(rnd.record, self.now, allow_partial=False)
            return
        self._submit(TxKind.WINNER_NOTICE, rnd.record,
                     lambda t: self._winner_confirmed(rnd, winner, t))

    def _winner_confirmed(self, rnd: _AuctionRound, winner: Bid, t: float) -> None:
        state = self.states[winner.bidder_operator_id]
        dep = self.deployment
        if state.free_prbs[winner.cell_id] >= winner.offered_prbs:
            self._establish(rnd.record, state, winner.cell_id, winner.offered_prbs,
                            needed=winner.offered_prbs, price=winner.price,
                            decision_time=t)
            return
        # the bid's cell drained while the notice confirmed; the winner may
        # still place the service in another of its cells at the agreed price
        decision = admission_control(state, rnd.contract, dep)
        if isinstance(decision, Accept):
            self._establish(rnd.record, state, decision.cell_id, decision.prbs,
                            needed=decision.prbs, price=winner.price,
                            decision_time=t)
            return
        self._serve_home(rnd.record, t, allow_partial=False)

    # -- lifecycle ----------------------------------------------------------

    def _establish(self, record: ServiceRecord, state: OperatorState,
                   cell_id: int, prbs: int, needed: int, price: float,
                   decision_time: float) -> None:
        allocate(state, cell_id, prbs, ("req", record.request_id))
        record.provider_op = state.operator_id
        record.cell_id = cell_id
        record.prbs_allocated = prbs
        record.prbs_needed = needed
        record.price_paid = price
        record.established_at = decision_time + self.cfg.processing_delay
        record.capacity_mbps = shannon_capacity_mbps(
            prbs,
            self.deployment.sinr_db(cell_id, record.ue_id),
            self.deployment.cells[cell_id].prb_bandwidth_hz,
        )
        record.torn_down_at = record.established_at + self.durations[record.request_id]
        self._push(record.torn_down_at, EV_TEARDOWN, record)

    def _on_teardown(self, record: ServiceRecord) -> None:
        release(self.states[record.provider_op], ("req", record.request_id))

    # -- invariants ---------------------------------------------------------

    def _verify_states(self) -> None:
        for state in self.states:
            held = {c: 0 for c in state.owned_cells}
            for cell_id, prbs in state.active_contracts.values():
                held[cell_id] += prbs
            for c in state.owned_cells:
                total = self.deployment.cells[c].total_prbs
                if not 0 <= state.free_prbs[c] <= total:
                    raise SimulationStateError(
                        f"cell {c} free PRBs out of range: {state.free_prbs[c]}"
                    )
                if state.free_prbs[c] + held[c] != total:
                    raise SimulationStateError(f"cell {c} leaks PRBs")

    def _finish_checks(self) -> None:
        for state in self.states:
            for key in state.active_contracts:
                # externally seeded allocations may persist; ours must not
                if isinstance(key, tuple) and key and key[0] == "req":
                    raise SimulationStateError(
                        f"request allocation {key} survived the drain"
                    )
            held = {c: 0 for c in state.owned_cells}
            for cell_id, prbs in state.active_contracts.values():
                held[cell_id] += prbs
            for c in state.owned_cells:
                if state.free_prbs[c] + held[c] != self.deployment.cells[c].total_prbs:
                    raise SimulationStateError(f"cell {c} PRBs not restored")
        if self.chain is not None and self.chain.mempool:
            raise SimulationStateError("mempool not drained")


def run_scenario(config: ScenarioConfig, check_invariants: bool = False,
                 export_chain: bool = False) -> RawResults:
    """Execute one replication to completion (arrivals stop at the horizon,
    in-flight protocol work and teardowns drain afterwards)."""
    results = Simulation(config, check_invariants=check_invariants).run()
    if not export_chain:
        results.chain_export = None
    return results
