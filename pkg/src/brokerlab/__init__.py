"""brokerlab: an exact, desk-scale laboratory for broker-auction transaction
fee mechanisms on heterogeneous two-sided markets.

Everything computes over rationals; nothing rounds.  The package executes
the auction on arbitrary instances, verifies its equilibrium and
individual-rationality properties by complete finite search, and computes
the posted-price efficiency benchmarks (OPT / INC / FEE / ORA) of
multi-dimensional resource markets exactly at desk scale.
"""

from .core import (
    Allocation,
    ConstantNonempty,
    CostFunction,
    EMPTY_ALLOCATION,
    LinearResources,
    MarketInstance,
    NodeSpec,
    PerTransaction,
    ReportProfile,
    Routing,
    SubsetTable,
    TransactionSpec,
    Zero,
    is_budget_balanced,
    margin,
    node_utility,
    surplus,
    tx_utility,
    welfare,
)
from .errors import (
    InfeasibleTarget,
    InstanceTooLarge,
    InvalidProposal,
    MalformedInput,
    MarketError,
)
from .mechanism import MechanismOutcome, Proposal, RejectionReason, run
from .strategy import (
    best_response_dynamics,
    broker_best_response,
    max_extraction_routing,
    scaled_rebate_routing,
    welfare_max_allocation,
)
from .validity import (
    Constraints,
    Extensional,
    MaxTxPerNode,
    MustShareNode,
    MutualExclusion,
    NodeCapacity,
    RequiredNodeCount,
    SingleAssignment,
    enumerate_valid,
    is_valid,
)

__version__ = "0.1.0"

__all__ = [
    "Allocation",
    "ConstantNonempty",
    "Constraints",
    "CostFunction",
    "EMPTY_ALLOCATION",
    "Extensional",
    "InfeasibleTarget",
    "InstanceTooLarge",
    "InvalidProposal",
    "LinearResources",
    "MalformedInput",
    "MarketError",
    "MarketInstance",
    "MaxTxPerNode",
    "MechanismOutcome",
    "MustShareNode",
    "MutualExclusion",
    "NodeCapacity",
    "NodeSpec",
    "PerTransaction",
    "Proposal",
    "RejectionReason",
    "ReportProfile",
    "RequiredNodeCount",
    "Routing",
    "SingleAssignment",
    "SubsetTable",
    "TransactionSpec",
    "Zero",
    "best_response_dynamics",
    "broker_best_response",
    "enumerate_valid",
    "is_budget_balanced",
    "is_valid",
    "margin",
    "max_extraction_routing",
    "node_utility",
    "run",
    "scaled_rebate_routing",
    "surplus",
    "tx_utility",
    "welfare",
    "welfare_max_allocation",
]
