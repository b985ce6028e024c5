"""Per-operator RAN sharing broker: admission control, smart-contract
creation, marketplace catalog and offer selection, bid generation, and winner
selection.

All decision functions are pure; only allocate/release mutate operator state.
Selection rules break ties deterministically so results never depend on input
ordering.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .deployment import Deployment, shannon_capacity_mbps
from .errors import SimulationStateError, ValidationError
from .metrics import satisfaction

# candidate cells below this reference SINR do not cover the UE
COVERAGE_SINR_DB = -5.0
# marketplace catalogs offer these pre-configured PRB bundles
BUNDLE_PRB_SIZES = (5, 10, 20, 50)
UNIT_PRICE_RANGE = (0.5, 1.5)
DEFAULT_TOLERANCE = 0.05
DEFAULT_MAX_PRICE = 100.0

RESOURCE_PRB_BUNDLE = "PRB_BUNDLE"
RESOURCE_PER_UE_ALLOCATION = "PER_UE_ALLOCATION"

REJECT_NO_COVERAGE = "NO_COVERAGE"
REJECT_NO_CAPACITY = "NO_CAPACITY"


@dataclass(frozen=True)
class Accept:
    cell_id: int
    prbs: int


@dataclass(frozen=True)
class Reject:
    reason: str


@dataclass(frozen=True)
class SmartContract:
    contract_id: int
    requester_operator_id: int
    ue_id: int
    resource_type: str
    required_qos: float  # Mbps
    service_duration: float  # seconds
    max_price: float
    tolerance: float  # allowed QoS shortfall, fraction
    created_at: float


@dataclass(frozen=True)
class Offer:
    provider_operator_id: int
    bundle_prbs: int
    total_price: float
    covering_cells: tuple[int, ...]  # best SINR first


@dataclass(frozen=True)
class Bid:
    contract_id: int
    bidder_operator_id: int
    offered_prbs: int
    price: float
    submitted_at: float
    cell_id: int  # cell backing the offer, fixed at bid time


@dataclass
class OperatorState:
    operator_id: int
    owned_cells: tuple[int, ...]
    free_prbs: dict[int, int]
    price_per_prb: float
    active_contracts: dict = field(default_factory=dict)


def make_operator_states(
    deployment: Deployment, rng: np.random.Generator
) -> list[OperatorState]:
    """Fresh per-operator states; unit prices drawn once, in operator order."""
    lo, hi = UNIT_PRICE_RANGE
    states = []
    for op in range(deployment.num_operators):
        owned = deployment.cells_of(op)
        states.append(
            OperatorState(
                operator_id=op,
                owned_cells=owned,
                free_prbs={c: deployment.cells[c].total_prbs for c in owned},
                price_per_prb=float(lo + rng.random() * (hi - lo)),
            )
        )
    return states


class ContractFactory:
    """Mints smart contracts with deterministic ids (counter per requester)."""

    def __init__(self):
        self._counters: dict[int, int] = {}

    def create_smart_contract(
        self,
        requester_id: int,
        ue_id: int,
        qos: float,
        duration: float,
        max_price: float,
        tolerance: float,
        now: float,
        resource_type: str = RESOURCE_PER_UE_ALLOCATION,
    ) -> SmartContract:
        if qos <= 0:
            raise ValidationError(f"required_qos must be > 0, got {qos}")
        if duration <= 0:
            raise ValidationError(f"service_duration must be > 0, got {duration}")
        if max_price <= 0:
            raise ValidationError(f"max_price must be > 0, got {max_price}")
        if not 0 <= tolerance < 1:
            raise ValidationError(f"tolerance must be in [0, 1), got {tolerance}")
        n = self._counters.get(requester_id, 0) + 1
        self._counters[requester_id] = n
        # encodes (per-requester counter, requester); strictly increasing per requester
        contract_id = n * 1000 + requester_id
        return SmartContract(
            contract_id=contract_id,
            requester_operator_id=requester_id,
            ue_id=ue_id,
            resource_type=resource_type,
            required_qos=qos,
            service_duration=duration,
            max_price=max_price,
            tolerance=tolerance,
            created_at=now,
        )


def qos_target_mbps(contract: SmartContract) -> float:
    """Capacity that satisfies the contract within its tolerance."""
    return contract.required_qos * (1.0 - contract.tolerance)


def admission_control(
    state: OperatorState, contract: SmartContract, deployment: Deployment
) -> Accept | Reject:
    """Can this operator host the contract right now?

    Accept carries the chosen cell (best SINR among feasible covering cells,
    ties to the lowest cell id) and the PRB count that meets the QoS target.
    Pure decision; no state changes.
    """
    ue = contract.ue_id
    covered = [
        c for c in state.owned_cells
        if deployment.sinr_db(c, ue) >= COVERAGE_SINR_DB
    ]
    if not covered:
        return Reject(REJECT_NO_COVERAGE)
    target = qos_target_mbps(contract)
    feasible = []
    for c in covered:
        needed = deployment.needed_prbs(c, ue, target)
        if needed is not None and state.free_prbs[c] >= needed:
            feasible.append((-deployment.sinr_db(c, ue), c, needed))
    if not feasible:
        return Reject(REJECT_NO_CAPACITY)
    _, cell, needed = min(feasible)
    return Accept(cell_id=cell, prbs=needed)


def build_catalog(
    all_states: Sequence[OperatorState],
    requester_id: int,
    deployment: Deployment,
    ue_id: int,
) -> list[Offer]:
    """Every (provider != requester, bundle size) the provider could host now."""
    catalog = []
    for state in all_states:
        if state.operator_id == requester_id:
            continue
        for bundle in BUNDLE_PRB_SIZES:
            cells = sorted(
                (c for c in state.owned_cells
                 if deployment.sinr_db(c, ue_id) >= COVERAGE_SINR_DB
                 and state.free_prbs[c] >= bundle),
                key=lambda c: (-deployment.sinr_db(c, ue_id), c),
            )
            if cells:
                catalog.append(
                    Offer(
                        provider_operator_id=state.operator_id,
                        bundle_prbs=bundle,
                        total_price=bundle * state.price_per_prb,
                        covering_cells=tuple(cells),
                    )
                )
    return catalog


def select_offer(
    catalog: Sequence[Offer], contract: SmartContract, deployment: Deployment
) -> Optional[Offer]:
    """Cheapest offer meeting the QoS target within budget.

    Ties go to the smaller bundle, then the lower provider id.
    """
    target = qos_target_mbps(contract)
    best = None
    best_key = None
    for offer in catalog:
        if offer.total_price > contract.max_price:
            continue
        needed = deployment.needed_prbs(offer.covering_cells[0], contract.ue_id, target)
        if needed is None or needed > offer.bundle_prbs:
            continue
        key = (offer.total_price, offer.bundle_prbs, offer.provider_operator_id)
        if best_key is None or key < best_key:
            best, best_key = offer, key
    return best


def generate_bid(
    state: OperatorState,
    contract: SmartContract,
    deployment: Deployment,
    now: float,
) -> Optional[Bid]:
    """A priced offer to host the contract, or None when admission rejects.

    Pricing is linear: the PRBs needed at the chosen cell times the
    operator's unit price (no discounts or return-of-investment terms).
    """
    if state.operator_id == contract.requester_operator_id:
        raise ValidationError("an operator cannot bid on its own contract")
    decision = admission_control(state, contract, deployment)
    if isinstance(decision, Reject):
        return None
    return Bid(
        contract_id=contract.contract_id,
        bidder_operator_id=state.operator_id,
        offered_prbs=decision.prbs,
        price=decision.prbs * state.price_per_prb,
        submitted_at=now,
        cell_id=decision.cell_id,
    )


def select_winner(
    bids: Sequence[Bid], contract: SmartContract, deployment: Deployment
) -> Optional[Bid]:
    """Bid maximizing the UE's expected satisfaction; budget-busting bids drop.

    Ties go to the lower price, then the lower bidder id; the result is
    invariant under permutations of the bid list.
    """
    best = None
    best_key = None
    for bid in bids:
        if bid.contract_id != contract.contract_id:
            raise ValidationError(
                f"bid for contract {bid.contract_id} offered to {contract.contract_id}"
            )
        if bid.price > contract.max_price:
            continue
        capacity = shannon_capacity_mbps(
            bid.offered_prbs,
            deployment.sinr_db(bid.cell_id, contract.ue_id),
            deployment.cells[bid.cell_id].prb_bandwidth_hz,
        )
        expected = satisfaction(
            capacity, contract.required_qos, bid.price, contract.max_price
        )
        key = (-expected, bid.price, bid.bidder_operator_id)
        if best_key is None or key < best_key:
            best, best_key = bid, key
    return best


def allocate(state: OperatorState, cell_id: int, prbs: int, contract_id) -> None:
    """Reserve PRBs for a contract. Guards catch simulator bugs, not outcomes."""
    if cell_id not in state.free_prbs:
        raise SimulationStateError(
            f"operator {state.operator_id} does not own cell {cell_id}"
        )
    if prbs <= 0:
        raise SimulationStateError(f"allocation of {prbs} PRBs")
    if state.free_prbs[cell_id] < prbs:
        raise SimulationStateError(
            f"cell {cell_id} has {state.free_prbs[cell_id]} free PRBs, asked {prbs}"
        )
    if contract_id in state.active_contracts:
        raise SimulationStateError(f"contract {contract_id} already active")
    state.free_prbs[cell_id] -= prbs
    state.active_contracts[contract_id] = (cell_id, prbs)


def release(state: OperatorState, contract_id) -> None:
    """Return the PRBs held by a contract."""
    if contract_id not in state.active_contracts:
        raise SimulationStateError(f"contract {contract_id} is not active")
    cell_id, prbs = state.active_contracts.pop(contract_id)
    state.free_prbs[cell_id] += prbs
