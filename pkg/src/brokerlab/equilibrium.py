"""Exact equilibrium verification via breakpoint deviation search.

The auction outcome, viewed as a function of one agent's report, is
piecewise constant: a transaction's scalar report enters each proposal's
surplus affinely (slope one where it is allocated, zero elsewhere) and its
own IR test flips at its quoted payment, so the outcome can only change at
finitely many breakpoints.  Checking one representative per interval of
constancy plus every breakpoint is therefore a complete search over the
agent's infinite action space.  Node reports are read only at the finitely
many bundles the proposals assign, which bounds them the same way,
coordinate by coordinate.

Broker deviations are checked through the exact best-response search, with
margins on the configured lattice where a rival must be beaten strictly.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Sequence

from .core import (
    CostFunction,
    MarketInstance,
    ReportProfile,
    SubsetTable,
    Zero,
    agent_utility,
    surplus,
)
from .errors import InstanceTooLarge, MalformedInput
from .mechanism import Proposal, broker_utility, run
from .rationals import ZERO
from .strategy import (
    DEFAULT_QUANTUM,
    broker_best_response,
    scaled_rebate_routing,
    welfare_max_allocation,
)
from .validity import DEFAULT_ENUM_CAP, ValiditySpec

DEFAULT_BUNDLE_CAP = 6
DEFAULT_OTHERS_CAP = 2048


def _interval_representatives(breakpoints: set[Fraction]) -> list[Fraction]:
    """The breakpoints themselves, the midpoints between neighbours, and one
    point beyond the largest."""
    points = sorted(b for b in breakpoints if b >= 0)
    if not points:
        points = [ZERO]
    if points[0] != 0:
        points.insert(0, ZERO)
    out = list(points)
    for a, b in zip(points, points[1:]):
        if a != b:
            out.append((a + b) / 2)
    out.append(points[-1] + 1)
    return sorted(set(out))


def tx_deviation_candidates(
    instance: MarketInstance,
    tx: str,
    proposals: Sequence[Proposal],
    reports: ReportProfile,
) -> list[Fraction]:
    """A finite report set meeting every outcome the transaction can reach.

    Breakpoints: zero, each proposal's quoted payment for the transaction,
    and each pairwise surplus crossing between proposals that disagree on
    whether the transaction is allocated.
    """
    if tx not in reports.tx_reports:
        raise MalformedInput(f"unknown transaction {tx!r}")
    breakpoints: set[Fraction] = {ZERO}
    at_zero = reports.replace_tx(tx, ZERO)
    intercepts: list[Fraction] = []
    slopes: list[int] = []
    for proposal in proposals:
        if tx not in proposal.routing.tx_payments:
            raise MalformedInput(f"proposal payment rule is missing transaction {tx!r}")
        breakpoints.add(proposal.routing.tx_payments[tx])
        intercepts.append(surplus(instance, proposal.routing, at_zero))
        slopes.append(1 if tx in proposal.routing.allocation.transactions else 0)
    for i in range(len(proposals)):
        for j in range(len(proposals)):
            if slopes[i] == 1 and slopes[j] == 0:
                crossing = intercepts[j] - intercepts[i]
                if crossing >= 0:
                    breakpoints.add(crossing)
    return _interval_representatives(breakpoints)


def node_deviation_candidates(
    instance: MarketInstance,
    node: str,
    proposals: Sequence[Proposal],
    reports: ReportProfile,
    bundle_cap: int = DEFAULT_BUNDLE_CAP,
) -> list[CostFunction]:
    """Candidate cost reports covering every outcome the node can force.

    The mechanism reads a node's report only at the bundles the proposals
    assign it, so candidates are cost tables that vary on those bundles and
    agree with the current report everywhere else.  Per-bundle scalars run
    over breakpoint-interval representatives (quoted payments, surplus
    equalizers against the other proposals, zero).
    """
    if node not in reports.node_reports:
        raise MalformedInput(f"unknown node {node!r}")
    current = reports.node_reports[node]
    assigned: list[frozenset[str]] = []
    for proposal in proposals:
        bundle = proposal.routing.allocation.inverse(node)
        if bundle and bundle not in assigned:
            assigned.append(bundle)
    if not assigned:
        return [Zero()]
    if len(assigned) > bundle_cap:
        raise InstanceTooLarge(
            f"node {node!r} is assigned {len(assigned)} distinct bundles, cap is {bundle_cap}"
        )
    if len(instance.tx_ids) > 16:
        raise InstanceTooLarge("cost tables support at most 16 transactions")

    base_surpluses = [surplus(instance, p.routing, reports) for p in proposals]
    current_costs = {
        bundle: current.cost(bundle, instance.resources) for bundle in assigned
    }
    scalar_candidates: list[list[Fraction]] = []
    for bundle in assigned:
        breakpoints: set[Fraction] = {ZERO}
        for idx, proposal in enumerate(proposals):
            if proposal.routing.allocation.inverse(node) != bundle:
                continue
            breakpoints.add(proposal.routing.node_payments[node])
            # cost x on this bundle shifts proposal idx's surplus by
            # current_cost - x; equalize against every other proposal's
            # surplus at the current reports
            for jdx in range(len(proposals)):
                if proposal.routing.allocation.inverse(node) == proposals[
                    jdx
                ].routing.allocation.inverse(node):
                    continue
                x = base_surpluses[idx] + current_costs[bundle] - base_surpluses[jdx]
                if x >= 0:
                    breakpoints.add(x)
        scalar_candidates.append(_interval_representatives(breakpoints))

    all_txs = frozenset(instance.tx_ids)
    all_subsets = [frozenset(s) for s in _powerset(sorted(all_txs))]
    candidates: list[CostFunction] = []
    for combo in product(*scalar_candidates):
        table = {}
        for subset in all_subsets:
            if subset in assigned:
                table[subset] = combo[assigned.index(subset)]
            else:
                table[subset] = current.cost(subset, instance.resources)
        candidates.append(SubsetTable(all_txs, table))
    return candidates


def _powerset(items: Sequence[str]):
    n = len(items)
    for mask in range(1 << n):
        yield {items[i] for i in range(n) if mask >> i & 1}


@dataclass(frozen=True)
class DeviationWitness:
    """A certified profitable unilateral deviation."""

    agent: str
    kind: str  # "tx_report" | "node_report" | "broker_proposal"
    deviation: object
    utility_before: Fraction
    utility_after: Fraction


@dataclass(frozen=True)
class EquilibriumReport:
    is_pne: bool
    witnesses: tuple[DeviationWitness, ...]
    checked_agent_deviations: int
    checked_broker_allocations: int


def check_pne(
    instance: MarketInstance,
    spec: ValiditySpec | None,
    true_types: ReportProfile,
    reports: ReportProfile,
    proposals: Sequence[Proposal],
    broker_order: Sequence[str],
    quantum: Fraction = DEFAULT_QUANTUM,
    bundle_cap: int = DEFAULT_BUNDLE_CAP,
    cap: int = DEFAULT_ENUM_CAP,
) -> EquilibriumReport:
    """Complete unilateral-deviation search at the given action profile.

    Agents are checked exactly through the breakpoint candidates; brokers
    through the exact best response against the fixed others, where a
    witness must improve utility on the margin lattice.
    """
    instance.validate_reports(true_types)
    base = run(instance, spec, reports, proposals, broker_order)
    witnesses: list[DeviationWitness] = []
    agent_checks = 0

    for tx in instance.tx_ids:
        before = agent_utility(instance, tx, base.routing, true_types)
        for candidate in tx_deviation_candidates(instance, tx, proposals, reports):
            if candidate == reports.tx_reports[tx]:
                continue
            agent_checks += 1
            outcome = run(
                instance, spec, reports.replace_tx(tx, candidate), proposals, broker_order
            )
            after = agent_utility(instance, tx, outcome.routing, true_types)
            if after > before:
                witnesses.append(
                    DeviationWitness(tx, "tx_report", candidate, before, after)
                )

    for node in instance.node_ids:
        before = agent_utility(instance, node, base.routing, true_types)
        for candidate in node_deviation_candidates(
            instance, node, proposals, reports, bundle_cap
        ):
            agent_checks += 1
            outcome = run(
                instance, spec, reports.replace_node(node, candidate), proposals, broker_order
            )
            after = agent_utility(instance, node, outcome.routing, true_types)
            if after > before:
                witnesses.append(
                    DeviationWitness(node, "node_report", candidate, before, after)
                )

    broker_allocations = 0
    by_broker = {p.broker: p for p in proposals}
    for broker in broker_order:
        if broker not in by_broker:
            continue
        before = broker_utility(base, broker)
        rivals = [p for p in proposals if p.broker != broker]
        response = broker_best_response(
            broker, instance, spec, reports, rivals, broker_order, quantum, cap=cap
        )
        broker_allocations += response.allocations_examined
        if response.utility > before:
            witnesses.append(
                DeviationWitness(
                    broker, "broker_proposal", response.proposal, before, response.utility
                )
            )

    return EquilibriumReport(
        is_pne=not witnesses,
        witnesses=tuple(witnesses),
        checked_agent_deviations=agent_checks,
        checked_broker_allocations=broker_allocations,
    )


@dataclass(frozen=True)
class TruthfulnessReport:
    """Result of checking that truthful reporting dominates for every agent,
    quantified over the other agents' reports with brokers fixed."""

    holds: bool
    witnesses: tuple[DeviationWitness, ...]
    exhaustive: bool
    profiles_checked: int
    pne: EquilibriumReport

    @property
    def coverage(self) -> str:
        return "exhaustive" if self.exhaustive else "sound-but-incomplete"


def check_dsic_barring_b(
    instance: MarketInstance,
    spec: ValiditySpec | None,
    true_types: ReportProfile,
    sigma: Sequence[Proposal],
    broker_order: Sequence[str],
    others_cap: int = DEFAULT_OTHERS_CAP,
    seed: int | None = None,
    quantum: Fraction = DEFAULT_QUANTUM,
    bundle_cap: int = DEFAULT_BUNDLE_CAP,
    cap: int = DEFAULT_ENUM_CAP,
) -> TruthfulnessReport:
    """Check both requirements for truthfulness with brokers pinned to sigma.

    First, with the broker profile fixed, truthful reporting must be a best
    response for every agent against *every* report profile of the other
    agents; the quantification runs over the others' breakpoint candidates,
    exhaustively when the product is within ``others_cap`` and by seeded
    sampling (sound but incomplete) otherwise.  Second, truthful reports
    plus sigma must form an equilibrium, delegated to the exact checker.

    Every proposal in sigma must share one allocation; that is what makes
    the induced subgame a take-it-or-leave-it offer.
    """
    if not sigma:
        raise MalformedInput("sigma must contain at least one proposal")
    allocations = {p.routing.allocation for p in sigma}
    if len(allocations) != 1:
        raise MalformedInput("all proposals in sigma must share one allocation")

    pne = check_pne(
        instance, spec, true_types, true_types, sigma, broker_order, quantum, bundle_cap, cap
    )

    agents = list(instance.agent_ids)
    witnesses: list[DeviationWitness] = []
    exhaustive = True
    profiles_checked = 0

    for agent in agents:
        others = [a for a in agents if a != agent]
        other_candidates: list[list[object]] = []
        for other in others:
            if other in true_types.tx_reports:
                other_candidates.append(
                    list(tx_deviation_candidates(instance, other, sigma, true_types))
                )
            else:
                other_candidates.append(
                    list(
                        node_deviation_candidates(instance, other, sigma, true_types, bundle_cap)
                    )
                )
        total = 1
        for cands in other_candidates:
            total *= len(cands)
        if total <= others_cap:
            profiles = product(*other_candidates)
        else:
            exhaustive = False
            if seed is None:
                raise MalformedInput(
                    f"quantifying over {total} rival profiles exceeds the cap of "
                    f"{others_cap}; an explicit seed is required for sampling"
                )
            rng = random.Random(f"{seed}:{agent}")
            profiles = (
                tuple(rng.choice(cands) for cands in other_candidates)
                for _ in range(others_cap)
            )

        for profile in profiles:
            profiles_checked += 1
            shifted = true_types
            for other, report in zip(others, profile):
                if other in true_types.tx_reports:
                    shifted = shifted.replace_tx(other, report)  # type: ignore[arg-type]
                else:
                    shifted = shifted.replace_node(other, report)  # type: ignore[arg-type]
            truthful_outcome = run(instance, spec, shifted, sigma, broker_order)
            truthful_utility = agent_utility(
                instance, agent, truthful_outcome.routing, true_types
            )
            if agent in true_types.tx_reports:
                candidates = tx_deviation_candidates(instance, agent, sigma, shifted)
                deviate = shifted.replace_tx
            else:
                candidates = node_deviation_candidates(
                    instance, agent, sigma, shifted, bundle_cap
                )
                deviate = shifted.replace_node
            for candidate in candidates:
                outcome = run(instance, spec, deviate(agent, candidate), sigma, broker_order)
                utility = agent_utility(instance, agent, outcome.routing, true_types)
                if utility > truthful_utility:
                    witnesses.append(
                        DeviationWitness(
                            agent, "against_rival_profile", candidate, truthful_utility, utility
                        )
                    )

    return TruthfulnessReport(
        holds=not witnesses and pne.is_pne,
        witnesses=tuple(witnesses),
        exhaustive=exhaustive,
        profiles_checked=profiles_checked,
        pne=pne,
    )


def construct_consensus_equilibrium(
    instance: MarketInstance,
    spec: ValiditySpec | None,
    true_types: ReportProfile,
    broker_ids: Sequence[str],
    cap: int = DEFAULT_ENUM_CAP,
) -> list[Proposal]:
    """The canonical equilibrium profile: every broker proposes the same
    zero-margin routing on the welfare-maximizing allocation.

    With at least two brokers this profile is a pure equilibrium and makes
    truthful reporting dominant for transactions and nodes.
    """
    if len(set(broker_ids)) < 2:
        raise MalformedInput("the consensus profile needs at least two brokers")
    best = welfare_max_allocation(instance, spec, true_types, cap)
    routing = scaled_rebate_routing(instance, best.allocation, true_types, ZERO)
    return [Proposal(b, routing) for b in broker_ids]
