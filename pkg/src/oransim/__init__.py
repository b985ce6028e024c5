"""Discrete-event simulator of blockchain-enabled RAN sharing.

Mobile operators trade radio resources either through a fixed-price bundle
marketplace or through per-UE reverse auctions, with agreements distributed
over a simulated private blockchain. The package exposes the radio model, the
per-operator broker logic, the chain model, the event engine, the metrics
aggregation, and a sweep CLI (`oransim`).
"""

from .blockchain import Blockchain, ChainParams, TxKind, estimate_fork_rate
from .broker import (
    Bid,
    ContractFactory,
    Offer,
    OperatorState,
    SmartContract,
    admission_control,
    build_catalog,
    generate_bid,
    select_offer,
    select_winner,
)
from .deployment import (
    Cell,
    Deployment,
    Ue,
    compute_sinr_db,
    generate_deployment,
    path_loss_db,
    prbs_needed,
    shannon_capacity_mbps,
)
from .engine import (
    MECHANISM_AUCTION,
    MECHANISM_MARKETPLACE,
    MECHANISM_STATIC,
    MECHANISMS,
    RawResults,
    ScenarioConfig,
    ServiceRecord,
    poisson_arrivals,
    run_scenario,
)
from .metrics import MetricsReport, aggregate, blockchain_delay, efficiency, satisfaction, write_csv

__version__ = "0.1.0"

__all__ = [
    "Bid",
    "Blockchain",
    "Cell",
    "ChainParams",
    "ContractFactory",
    "Deployment",
    "MECHANISMS",
    "MECHANISM_AUCTION",
    "MECHANISM_MARKETPLACE",
    "MECHANISM_STATIC",
    "MetricsReport",
    "Offer",
    "OperatorState",
    "RawResults",
    "ScenarioConfig",
    "ServiceRecord",
    "SmartContract",
    "TxKind",
    "Ue",
    "admission_control",
    "aggregate",
    "blockchain_delay",
    "build_catalog",
    "compute_sinr_db",
    "efficiency",
    "estimate_fork_rate",
    "generate_bid",
    "generate_deployment",
    "path_loss_db",
    "poisson_arrivals",
    "prbs_needed",
    "run_scenario",
    "satisfaction",
    "select_offer",
    "select_winner",
    "shannon_capacity_mbps",
    "write_csv",
]
