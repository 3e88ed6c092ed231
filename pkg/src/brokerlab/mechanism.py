"""One auction round: filter budget-balanced proposals, select by reported
surplus, apply the individual-rationality gate, settle payments.

Selection ties break by the fixed broker order supplied by the caller.  The
IR gate is strict: a proposal is rejected only if some agent's reported
utility is negative; zero utility is accepted.  When the gate fires, the
first violator in canonical agent order (transactions then nodes, sorted by
id) is named.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Mapping, Sequence

from .core import (
    MarketInstance,
    ReportProfile,
    Routing,
    agent_utility,
    margin,
    surplus,
)
from .errors import InvalidProposal, MalformedInput
from .rationals import ZERO
from .validity import ValiditySpec, is_valid


class RejectionReason(str, Enum):
    NO_BUDGET_BALANCED_PROPOSAL = "no_budget_balanced_proposal"
    IR_VIOLATION = "ir_violation"


@dataclass(frozen=True)
class Proposal:
    """A broker's submitted routing."""

    broker: str
    routing: Routing


@dataclass(frozen=True)
class MechanismOutcome:
    """Result of one round: the settled routing, the winner, and diagnostics.

    ``agent_utilities`` holds every agent's utility under the output routing
    at the *reported* types; all entries are non-negative whenever a winner
    is present.
    """

    routing: Routing
    winner: str | None
    broker_payment: Fraction
    agent_utilities: Mapping[str, Fraction]
    rejection_reason: RejectionReason | None = None
    ir_violator: str | None = None


def _reported_utilities(
    instance: MarketInstance, routing: Routing, reports: ReportProfile
) -> dict[str, Fraction]:
    return {a: agent_utility(instance, a, routing, reports) for a in instance.agent_ids}


def _rejection(
    instance: MarketInstance,
    reports: ReportProfile,
    reason: RejectionReason,
    violator: str | None = None,
) -> MechanismOutcome:
    empty = instance.empty_routing()
    return MechanismOutcome(
        routing=empty,
        winner=None,
        broker_payment=ZERO,
        agent_utilities=_reported_utilities(instance, empty, reports),
        rejection_reason=reason,
        ir_violator=violator,
    )


def run(
    instance: MarketInstance,
    spec: ValiditySpec | None,
    reports: ReportProfile,
    proposals: Sequence[Proposal],
    broker_order: Sequence[str],
) -> MechanismOutcome:
    """Execute one round.

    Raises ``InvalidProposal`` for any proposal whose allocation lies outside
    the valid set and ``MalformedInput`` for non-total reports or a broker
    order that is not a permutation of the proposing brokers.
    """
    instance.validate_reports(reports)
    brokers = [p.broker for p in proposals]
    if len(set(brokers)) != len(brokers):
        raise MalformedInput("each broker may submit at most one proposal")
    if sorted(broker_order) != sorted(set(broker_order)) or set(brokers) - set(broker_order):
        raise MalformedInput("broker order must be a permutation covering the proposing brokers")
    for proposal in proposals:
        instance.validate_routing(proposal.routing)
        if not is_valid(proposal.routing.allocation, spec, instance):
            raise InvalidProposal(
                f"proposal from {proposal.broker!r} carries an invalid allocation"
            )

    candidates = [p for p in proposals if margin(p.routing) >= 0]
    if not candidates:
        return _rejection(instance, reports, RejectionReason.NO_BUDGET_BALANCED_PROPOSAL)

    position = {b: i for i, b in enumerate(broker_order)}
    best = max(
        candidates,
        key=lambda p: (surplus(instance, p.routing, reports), -position[p.broker]),
    )

    utilities = _reported_utilities(instance, best.routing, reports)
    for agent in instance.agent_ids:
        if utilities[agent] < 0:
            return _rejection(instance, reports, RejectionReason.IR_VIOLATION, agent)

    return MechanismOutcome(
        routing=best.routing,
        winner=best.broker,
        broker_payment=margin(best.routing),
        agent_utilities=utilities,
    )


def broker_utility(outcome: MechanismOutcome, broker: str) -> Fraction:
    """A broker's payoff from an outcome: the margin if it won, else zero."""
    return outcome.broker_payment if outcome.winner == broker else ZERO
