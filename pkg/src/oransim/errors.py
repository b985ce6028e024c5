"""Exception types shared across the simulator."""


class ConfigurationError(ValueError):
    """A scenario or sweep parameter is missing, mistyped, or out of range."""


class ValidationError(ValueError):
    """A domain object (contract, offer, bid) violates one of its invariants."""


class OversizedTransactionError(ValueError):
    """Transaction payload cannot fit into any block under the current cap."""


class SimulationStateError(RuntimeError):
    """Internal bookkeeping was driven into an impossible state (simulator bug,
    not a modeled outcome): double release, over-allocation, double confirm."""
