"""Constructive broker algorithms.

A broker who knows every reported type can build the margin-maximizing
routing on any allocation (charge each included transaction its full value,
pay each node its exact cost) and can rebate any amount of that margin back
to transactions by scaling their payments down proportionally.  Best
responses search over all valid allocations; where a rival's surplus must be
beaten strictly, margins live on a configurable lattice ``{k * quantum}``
because the continuous problem has no maximizer on an open set.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .core import (
    Allocation,
    MarketInstance,
    ReportProfile,
    Routing,
    margin,
    surplus,
    welfare,
)
from .errors import InfeasibleTarget, MalformedInput
from .mechanism import MechanismOutcome, Proposal, broker_utility, run
from .rationals import ZERO
from .validity import DEFAULT_ENUM_CAP, ValiditySpec, enumerate_valid

DEFAULT_QUANTUM = Fraction(1, 1024)


def max_extraction_routing(
    instance: MarketInstance, allocation: Allocation, reports: ReportProfile
) -> Routing:
    """Routing on ``allocation`` whose margin equals its reported welfare.

    Every included transaction pays its full reported value and every
    working node is paid exactly its reported bundle cost, so reported
    surplus is zero.
    """
    tx_payments = {
        tx: (reports.tx_reports[tx] if tx in allocation.transactions else ZERO)
        for tx in instance.tx_ids
    }
    node_payments = {
        n: reports.node_reports[n].cost(allocation.inverse(n), instance.resources)
        for n in instance.node_ids
    }
    return Routing(allocation, tx_payments, node_payments)


@dataclass(frozen=True)
class WelfareMax:
    allocation: Allocation
    welfare: Fraction
    unique: bool


def welfare_max_allocation(
    instance: MarketInstance,
    spec: ValiditySpec | None,
    reports: ReportProfile,
    cap: int = DEFAULT_ENUM_CAP,
) -> WelfareMax:
    """Argmax of reported welfare over the valid set, canonical tie-break."""
    best: Allocation | None = None
    best_welfare = ZERO
    ties = 0
    for allocation in enumerate_valid(instance, spec, cap):
        w = welfare(instance, allocation, reports)
        if best is None or w > best_welfare:
            best, best_welfare, ties = allocation, w, 1
        elif w == best_welfare:
            ties += 1
    assert best is not None  # the empty allocation is always enumerated
    return WelfareMax(best, best_welfare, ties == 1)


def scaled_rebate_routing(
    instance: MarketInstance,
    allocation: Allocation,
    reports: ReportProfile,
    target_margin: Fraction,
) -> Routing:
    """Routing on ``allocation`` with the exact margin requested.

    Nodes are paid their reported costs; transaction payments are the
    reported values scaled by a common factor in [0, 1], so every agent's
    reported utility stays non-negative.  Feasible whenever
    ``0 <= target_margin <= welfare(allocation)``.
    """
    if target_margin < 0:
        raise InfeasibleTarget(f"target margin must be non-negative, got {target_margin}")
    node_payments = {
        n: reports.node_reports[n].cost(allocation.inverse(n), instance.resources)
        for n in instance.node_ids
    }
    total_cost = sum(node_payments.values(), ZERO)
    total_value = sum((reports.tx_reports[tx] for tx in allocation.transactions), ZERO)
    w = total_value - total_cost
    if target_margin > w:
        raise InfeasibleTarget(
            f"target margin {target_margin} exceeds reported welfare {w}"
        )
    if total_value == 0:
        # welfare <= 0 here, so the target must be exactly the (zero) welfare
        scale = ZERO
    else:
        scale = (total_cost + target_margin) / total_value
    tx_payments = {
        tx: (scale * reports.tx_reports[tx] if tx in allocation.transactions else ZERO)
        for tx in instance.tx_ids
    }
    return Routing(allocation, tx_payments, node_payments)


@dataclass(frozen=True)
class BrokerBestResponse:
    proposal: Proposal
    utility: Fraction
    wins: bool
    allocations_examined: int = 0


def _max_winning_margin(
    w: Fraction,
    rival_best: Fraction | None,
    wins_ties: bool,
    quantum: Fraction,
    lattice: bool,
) -> Fraction | None:
    """Largest feasible margin on allocation welfare ``w`` that still wins.

    Returns None when no winning margin in [0, w] exists.  ``rival_best`` is
    the highest budget-balanced rival surplus (None when there is none);
    ``wins_ties`` says whether the broker precedes every rival attaining it.
    """
    if w < 0:
        return None
    if rival_best is None:
        m = w
    elif wins_ties:
        m = min(w, w - rival_best)
    else:
        gap = w - rival_best
        if gap <= 0:
            return None
        # largest lattice point strictly below the gap, capped at w
        steps = gap / quantum
        k = steps.numerator // steps.denominator
        if k * quantum == gap:
            k -= 1
        m = min(k * quantum, w)
    if lattice and m > 0:
        steps = m / quantum
        m = (steps.numerator // steps.denominator) * quantum
    if m < 0:
        return None
    return m


def broker_best_response(
    broker: str,
    instance: MarketInstance,
    spec: ValiditySpec | None,
    reports: ReportProfile,
    rivals: Sequence[Proposal],
    broker_order: Sequence[str],
    quantum: Fraction = DEFAULT_QUANTUM,
    lattice_margins: bool = False,
    cap: int = DEFAULT_ENUM_CAP,
) -> BrokerBestResponse:
    """Exact utility-maximizing proposal against fixed rival proposals.

    For each valid allocation the broker's best winning margin is the
    allocation's reported welfare minus the surplus it must reach: the top
    rival surplus when the broker wins ties (it precedes every rival at that
    surplus in the fixed order), or the least lattice-representable surplus
    strictly above it otherwise.  When no margin is strictly positive the
    empty routing is the response (utility zero, never negative).
    """
    if quantum <= 0:
        raise MalformedInput(f"quantum must be positive, got {quantum}")
    if broker not in broker_order:
        raise MalformedInput(f"broker {broker!r} missing from broker order")
    for rival in rivals:
        if rival.broker == broker:
            raise MalformedInput("rival proposals must come from other brokers")
        if rival.broker not in broker_order:
            raise MalformedInput(f"rival broker {rival.broker!r} missing from broker order")

    position = {b: i for i, b in enumerate(broker_order)}
    rival_surpluses = [
        (surplus(instance, p.routing, reports), p.broker)
        for p in rivals
        if margin(p.routing) >= 0
    ]
    if rival_surpluses:
        rival_best = max(s for s, _ in rival_surpluses)
        wins_ties = all(
            position[broker] < position[b] for s, b in rival_surpluses if s == rival_best
        )
    else:
        rival_best, wins_ties = None, True

    best_margin: Fraction | None = None
    best_welfare: Fraction | None = None
    best_allocation: Allocation | None = None
    examined = 0
    for allocation in enumerate_valid(instance, spec, cap):
        examined += 1
        w = welfare(instance, allocation, reports)
        m = _max_winning_margin(w, rival_best, wins_ties, quantum, lattice_margins)
        if m is None or m <= 0:
            continue
        # at equal margin prefer the higher-welfare allocation: the payoff is
        # the same but the win survives more rival configurations
        if best_margin is None or (m, w) > (best_margin, best_welfare):
            best_margin, best_welfare, best_allocation = m, w, allocation

    if best_margin is None:
        proposal = Proposal(broker, instance.empty_routing())
        outcome = _outcome_with(instance, spec, reports, rivals, proposal, broker_order)
        return BrokerBestResponse(proposal, ZERO, outcome.winner == broker, examined)

    routing = scaled_rebate_routing(instance, best_allocation, reports, best_margin)
    proposal = Proposal(broker, routing)
    outcome = _outcome_with(instance, spec, reports, rivals, proposal, broker_order)
    return BrokerBestResponse(
        proposal, broker_utility(outcome, broker), outcome.winner == broker, examined
    )


def _outcome_with(
    instance: MarketInstance,
    spec: ValiditySpec | None,
    reports: ReportProfile,
    rivals: Sequence[Proposal],
    proposal: Proposal,
    broker_order: Sequence[str],
) -> MechanismOutcome:
    ordered = sorted([*rivals, proposal], key=lambda p: broker_order.index(p.broker))
    return run(instance, spec, reports, ordered, broker_order)


@dataclass(frozen=True)
class DynamicsStep:
    broker: str
    proposal: Proposal
    utility: Fraction


@dataclass(frozen=True)
class DynamicsTrace:
    steps: tuple[DynamicsStep, ...]
    terminal: tuple[Proposal, ...]
    converged: bool
    rounds: int


def best_response_dynamics(
    instance: MarketInstance,
    spec: ValiditySpec | None,
    reports: ReportProfile,
    initial: Sequence[Proposal],
    broker_order: Sequence[str],
    quantum: Fraction,
    max_rounds: int,
    cap: int = DEFAULT_ENUM_CAP,
) -> DynamicsTrace:
    """Round-robin best responses with margins restricted to the quantum lattice.

    Each recorded step strictly improves the moving broker's utility; the
    dynamics stop after a full round with no improvement (converged) or when
    the round budget runs out.
    """
    if quantum <= 0:
        raise MalformedInput(f"quantum must be positive, got {quantum}")
    brokers = [p.broker for p in initial]
    if len(brokers) < 2:
        raise MalformedInput("best-response dynamics need at least two brokers")
    if sorted(brokers) != sorted(broker_order):
        raise MalformedInput("initial proposals must cover the broker order exactly")

    profile = {p.broker: p for p in initial}
    for p in initial:
        instance.validate_routing(p.routing)
    steps: list[DynamicsStep] = []
    converged = False
    rounds = 0
    for _ in range(max_rounds):
        rounds += 1
        improved = False
        for broker in broker_order:
            rivals = [profile[b] for b in broker_order if b != broker]
            current = run(
                instance,
                spec,
                reports,
                [profile[b] for b in broker_order],
                broker_order,
            )
            current_utility = broker_utility(current, broker)
            response = broker_best_response(
                broker,
                instance,
                spec,
                reports,
                rivals,
                broker_order,
                quantum,
                lattice_margins=True,
                cap=cap,
            )
            if response.utility > current_utility:
                profile[broker] = response.proposal
                steps.append(DynamicsStep(broker, response.proposal, response.utility))
                improved = True
        if not improved:
            converged = True
            break
    terminal = tuple(profile[b] for b in broker_order)
    return DynamicsTrace(tuple(steps), terminal, converged, rounds)
