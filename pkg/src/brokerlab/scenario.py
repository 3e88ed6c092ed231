"""Scenario files: exact JSON ingestion and report serialization.

Two scenario kinds exist.  ``market`` carries a general instance (arbitrary
cost functions and validity constraints) plus optional proposals, reports,
and a broker order; ``resource_market`` carries a d-dimensional market for
the benchmark commands.  Numbers travel as integers, decimal strings, or
``{"num", "den"}`` pairs and are parsed exactly; floats are rejected.

Parsing errors carry the JSON path of the offending field.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Mapping

from .core import (
    Allocation,
    ConstantNonempty,
    CostFunction,
    LinearResources,
    MarketInstance,
    NodeSpec,
    PerTransaction,
    ReportProfile,
    Routing,
    SubsetTable,
    TransactionSpec,
    Zero,
)
from .equilibrium import DeviationWitness, EquilibriumReport, TruthfulnessReport
from .errors import MalformedInput
from .mdfm import BenchmarkResult, ResourceMarket
from .mechanism import MechanismOutcome, Proposal
from .rationals import ZERO, format_number, parse_number
from .strategy import DEFAULT_QUANTUM, DynamicsTrace
from .validity import (
    DEFAULT_ENUM_CAP,
    Constraint,
    Constraints,
    Extensional,
    MaxTxPerNode,
    MustShareNode,
    MutualExclusion,
    NodeCapacity,
    RequiredNodeCount,
    SingleAssignment,
    ValiditySpec,
)


@dataclass
class Scenario:
    kind: str  # "market" | "resource_market"
    instance: MarketInstance | None = None
    market: ResourceMarket | None = None
    proposals: list[Proposal] = field(default_factory=list)
    reports: ReportProfile | None = None
    broker_order: list[str] | None = None
    quantum: Fraction = DEFAULT_QUANTUM
    enum_cap: int = DEFAULT_ENUM_CAP
    seed: int | None = None
    others_cap: int = 2048
    max_rounds: int = 1000


def _expect(obj: Any, typ: type, where: str) -> Any:
    if not isinstance(obj, typ) or isinstance(obj, bool) and typ is not bool:
        raise MalformedInput(f"{where}: expected {typ.__name__}, got {type(obj).__name__}")
    return obj


def _str(obj: Any, where: str) -> str:
    return _expect(obj, str, where)


def _int(obj: Any, where: str) -> int:
    if isinstance(obj, bool) or not isinstance(obj, int):
        raise MalformedInput(f"{where}: expected an integer")
    return obj


def _vector(obj: Any, where: str, allow_none_entries: bool = False):
    _expect(obj, list, where)
    out = []
    for i, entry in enumerate(obj):
        if entry is None and allow_none_entries:
            out.append(None)
        else:
            out.append(parse_number(entry, f"{where}[{i}]"))
    return tuple(out)


def parse_cost_function(obj: Any, where: str) -> CostFunction:
    _expect(obj, dict, where)
    kind = _str(obj.get("type"), f"{where}.type")
    if kind == "Zero":
        return Zero()
    if kind == "ConstantNonempty":
        return ConstantNonempty(parse_number(obj.get("amount"), f"{where}.amount"))
    if kind == "PerTransaction":
        rates = _expect(obj.get("rates"), dict, f"{where}.rates")
        return PerTransaction(
            {tx: parse_number(v, f"{where}.rates[{tx}]") for tx, v in rates.items()}
        )
    if kind == "LinearResources":
        return LinearResources(_vector(obj.get("unit_costs"), f"{where}.unit_costs"))
    if kind == "SubsetTable":
        txs = _expect(obj.get("transactions"), list, f"{where}.transactions")
        declared = frozenset(_str(t, f"{where}.transactions[]") for t in txs)
        raw = _expect(obj.get("table"), dict, f"{where}.table")
        table = {}
        for key, value in raw.items():
            subset = frozenset(part for part in key.split(",") if part)
            table[subset] = parse_number(value, f"{where}.table[{key!r}]")
        return SubsetTable(declared, table)
    raise MalformedInput(f"{where}.type: unknown cost function {kind!r}")


def cost_function_to_json(fn: CostFunction) -> dict:
    if isinstance(fn, Zero):
        return {"type": "Zero"}
    if isinstance(fn, ConstantNonempty):
        return {"type": "ConstantNonempty", "amount": format_number(fn.amount)}
    if isinstance(fn, PerTransaction):
        return {
            "type": "PerTransaction",
            "rates": {tx: format_number(v) for tx, v in sorted(fn.rates.items())},
        }
    if isinstance(fn, LinearResources):
        return {"type": "LinearResources", "unit_costs": [format_number(c) for c in fn.unit_costs]}
    if isinstance(fn, SubsetTable):
        return {
            "type": "SubsetTable",
            "transactions": sorted(fn.transactions),
            "table": {
                ",".join(sorted(subset)): format_number(v)
                for subset, v in sorted(fn.table.items(), key=lambda kv: sorted(kv[0]))
            },
        }
    raise MalformedInput(f"cannot serialize cost function {fn!r}")


def parse_constraint(obj: Any, where: str) -> Constraint:
    _expect(obj, dict, where)
    kind = _str(obj.get("type"), f"{where}.type")
    if kind == "NodeCapacity":
        return NodeCapacity()
    if kind == "MaxTxPerNode":
        return MaxTxPerNode(_str(obj.get("node"), f"{where}.node"), _int(obj.get("limit"), f"{where}.limit"))
    if kind == "RequiredNodeCount":
        tx = _str(obj.get("tx"), f"{where}.tx")
        if "exactly" in obj:
            count = _int(obj["exactly"], f"{where}.exactly")
            return RequiredNodeCount.exactly(tx, count)
        return RequiredNodeCount(
            tx, _int(obj.get("min"), f"{where}.min"), _int(obj.get("max"), f"{where}.max")
        )
    if kind == "MustShareNode":
        txs = _expect(obj.get("txs"), list, f"{where}.txs")
        return MustShareNode(tuple(sorted(_str(t, f"{where}.txs[]") for t in txs)))
    if kind == "MutualExclusion":
        txs = _expect(obj.get("txs"), list, f"{where}.txs")
        if len(txs) != 2:
            raise MalformedInput(f"{where}.txs: mutual exclusion needs exactly two transactions")
        return MutualExclusion(_str(txs[0], f"{where}.txs[0]"), _str(txs[1], f"{where}.txs[1]"))
    if kind == "SingleAssignment":
        return SingleAssignment()
    raise MalformedInput(f"{where}.type: unknown constraint {kind!r}")


def constraint_to_json(c: Constraint) -> dict:
    if isinstance(c, NodeCapacity):
        return {"type": "NodeCapacity"}
    if isinstance(c, MaxTxPerNode):
        return {"type": "MaxTxPerNode", "node": c.node, "limit": c.limit}
    if isinstance(c, RequiredNodeCount):
        if c.min_nodes == c.max_nodes:
            return {"type": "RequiredNodeCount", "tx": c.tx, "exactly": c.min_nodes}
        return {"type": "RequiredNodeCount", "tx": c.tx, "min": c.min_nodes, "max": c.max_nodes}
    if isinstance(c, MustShareNode):
        return {"type": "MustShareNode", "txs": list(c.txs)}
    if isinstance(c, MutualExclusion):
        return {"type": "MutualExclusion", "txs": [c.first, c.second]}
    if isinstance(c, SingleAssignment):
        return {"type": "SingleAssignment"}
    raise MalformedInput(f"cannot serialize constraint {c!r}")


def parse_allocation(obj: Any, where: str) -> Allocation:
    _expect(obj, dict, where)
    assignment = {}
    for tx, nodes in obj.items():
        _expect(nodes, list, f"{where}[{tx}]")
        assignment[tx] = [_str(n, f"{where}[{tx}][]") for n in nodes]
    return Allocation.of(assignment)


def allocation_to_json(allocation: Allocation) -> dict:
    return {tx: list(nodes) for tx, nodes in allocation.pairs}


def parse_validity(obj: Any, where: str) -> ValiditySpec:
    _expect(obj, dict, where)
    kind = _str(obj.get("type"), f"{where}.type")
    if kind == "constraints":
        raw = _expect(obj.get("constraints"), list, f"{where}.constraints")
        return Constraints(
            tuple(parse_constraint(c, f"{where}.constraints[{i}]") for i, c in enumerate(raw))
        )
    if kind == "extensional":
        raw = _expect(obj.get("allocations"), list, f"{where}.allocations")
        return Extensional.of(
            parse_allocation(a, f"{where}.allocations[{i}]") for i, a in enumerate(raw)
        )
    raise MalformedInput(f"{where}.type: unknown validity kind {kind!r}")


def validity_to_json(spec: ValiditySpec | None) -> dict:
    if spec is None:
        return {"type": "constraints", "constraints": []}
    if isinstance(spec, Constraints):
        return {
            "type": "constraints",
            "constraints": [constraint_to_json(c) for c in spec.constraints],
        }
    return {
        "type": "extensional",
        "allocations": [allocation_to_json(a) for a in spec.allocations],
    }


def _parse_payments(obj: Any, ids: tuple[str, ...], where: str) -> dict[str, Fraction]:
    payments = {agent: ZERO for agent in ids}
    if obj is None:
        return payments
    _expect(obj, dict, where)
    for agent, value in obj.items():
        if agent not in payments:
            raise MalformedInput(f"{where}[{agent}]: unknown agent id")
        payments[agent] = parse_number(value, f"{where}[{agent}]")
    return payments


def parse_routing(obj: Any, instance: MarketInstance, where: str) -> Routing:
    _expect(obj, dict, where)
    allocation = parse_allocation(obj.get("allocation", {}), f"{where}.allocation")
    tx_payments = _parse_payments(obj.get("tx_payments"), instance.tx_ids, f"{where}.tx_payments")
    node_payments = _parse_payments(
        obj.get("node_payments"), instance.node_ids, f"{where}.node_payments"
    )
    return Routing(allocation, tx_payments, node_payments)


def routing_to_json(routing: Routing) -> dict:
    return {
        "allocation": allocation_to_json(routing.allocation),
        "tx_payments": {tx: format_number(p) for tx, p in sorted(routing.tx_payments.items())},
        "node_payments": {
            n: format_number(p) for n, p in sorted(routing.node_payments.items())
        },
    }


def parse_reports(obj: Any, instance: MarketInstance, where: str) -> ReportProfile:
    _expect(obj, dict, where)
    truthful = instance.truthful_reports()
    tx_reports = dict(truthful.tx_reports)
    node_reports = dict(truthful.node_reports)
    raw_tx = obj.get("transactions", {})
    _expect(raw_tx, dict, f"{where}.transactions")
    for tx, value in raw_tx.items():
        if tx not in tx_reports:
            raise MalformedInput(f"{where}.transactions[{tx}]: unknown transaction")
        tx_reports[tx] = parse_number(value, f"{where}.transactions[{tx}]")
    raw_nodes = obj.get("nodes", {})
    _expect(raw_nodes, dict, f"{where}.nodes")
    for node, fn in raw_nodes.items():
        if node not in node_reports:
            raise MalformedInput(f"{where}.nodes[{node}]: unknown node")
        node_reports[node] = parse_cost_function(fn, f"{where}.nodes[{node}]")
    return ReportProfile(tx_reports, node_reports)


def _parse_market_instance(obj: Mapping[str, Any]) -> MarketInstance:
    raw_txs = _expect(obj.get("transactions"), list, "transactions")
    txs = []
    for i, raw in enumerate(raw_txs):
        where = f"transactions[{i}]"
        _expect(raw, dict, where)
        resources = None
        if raw.get("resources") is not None:
            resources = _vector(raw["resources"], f"{where}.resources")
        txs.append(
            TransactionSpec(
                _str(raw.get("id"), f"{where}.id"),
                parse_number(raw.get("value"), f"{where}.value"),
                resources,
            )
        )
    raw_nodes = _expect(obj.get("nodes"), list, "nodes")
    nodes = []
    for i, raw in enumerate(raw_nodes):
        where = f"nodes[{i}]"
        _expect(raw, dict, where)
        capacity = None
        if raw.get("capacity") is not None:
            capacity = _vector(raw["capacity"], f"{where}.capacity", allow_none_entries=True)
        nodes.append(
            NodeSpec(
                _str(raw.get("id"), f"{where}.id"),
                parse_cost_function(raw.get("cost", {"type": "Zero"}), f"{where}.cost"),
                capacity,
            )
        )
    validity = None
    if obj.get("validity") is not None:
        validity = parse_validity(obj["validity"], "validity")
    return MarketInstance(tuple(txs), tuple(nodes), validity)


def _parse_resource_market(obj: Mapping[str, Any]) -> ResourceMarket:
    d = _int(obj.get("dimensions"), "dimensions")
    raw_txs = _expect(obj.get("transactions"), list, "transactions")
    txs = []
    for i, raw in enumerate(raw_txs):
        where = f"transactions[{i}]"
        _expect(raw, dict, where)
        txs.append(
            TransactionSpec(
                _str(raw.get("id"), f"{where}.id"),
                parse_number(raw.get("value"), f"{where}.value"),
                _vector(raw.get("resources"), f"{where}.resources"),
            )
        )
    raw_nodes = _expect(obj.get("nodes"), list, "nodes")
    nodes = []
    for i, raw in enumerate(raw_nodes):
        where = f"nodes[{i}]"
        _expect(raw, dict, where)
        cost: CostFunction = Zero()
        if raw.get("unit_costs") is not None:
            cost = LinearResources(_vector(raw["unit_costs"], f"{where}.unit_costs"))
        capacity = None
        if raw.get("capacity") is not None:
            capacity = _vector(raw["capacity"], f"{where}.capacity", allow_none_entries=True)
        nodes.append(NodeSpec(_str(raw.get("id"), f"{where}.id"), cost, capacity))
    single = obj.get("single_assignment", False)
    if not isinstance(single, bool):
        raise MalformedInput("single_assignment: expected a boolean")
    return ResourceMarket(d, tuple(txs), tuple(nodes), single)


def parse_scenario(obj: Any) -> Scenario:
    _expect(obj, dict, "scenario")
    kind = _str(obj.get("kind"), "kind")
    scenario = Scenario(kind=kind)
    if "quantum" in obj:
        scenario.quantum = parse_number(obj["quantum"], "quantum")
        if scenario.quantum <= 0:
            raise MalformedInput("quantum: must be positive")
    if "enum_cap" in obj:
        scenario.enum_cap = _int(obj["enum_cap"], "enum_cap")
    if "seed" in obj and obj["seed"] is not None:
        scenario.seed = _int(obj["seed"], "seed")
    if "others_cap" in obj:
        scenario.others_cap = _int(obj["others_cap"], "others_cap")
    if "max_rounds" in obj:
        scenario.max_rounds = _int(obj["max_rounds"], "max_rounds")

    if kind == "market":
        instance = _parse_market_instance(obj)
        scenario.instance = instance
        raw_proposals = obj.get("proposals", [])
        _expect(raw_proposals, list, "proposals")
        for i, raw in enumerate(raw_proposals):
            where = f"proposals[{i}]"
            _expect(raw, dict, where)
            scenario.proposals.append(
                Proposal(
                    _str(raw.get("broker"), f"{where}.broker"),
                    parse_routing(raw.get("routing"), instance, f"{where}.routing"),
                )
            )
        if obj.get("reports") is not None:
            scenario.reports = parse_reports(obj["reports"], instance, "reports")
        else:
            scenario.reports = instance.truthful_reports()
        if obj.get("broker_order") is not None:
            order = _expect(obj["broker_order"], list, "broker_order")
            scenario.broker_order = [_str(b, "broker_order[]") for b in order]
        else:
            scenario.broker_order = [p.broker for p in scenario.proposals]
        return scenario

    if kind == "resource_market":
        scenario.market = _parse_resource_market(obj)
        return scenario

    raise MalformedInput(f"kind: expected 'market' or 'resource_market', got {kind!r}")


# ---------------------------------------------------------------------------
# Writers
# ---------------------------------------------------------------------------


def instance_to_scenario_json(
    instance: MarketInstance,
    proposals: list[Proposal] | None = None,
    broker_order: list[str] | None = None,
) -> dict:
    payload: dict[str, Any] = {
        "kind": "market",
        "transactions": [
            {
                "id": t.id,
                "value": format_number(t.value),
                **(
                    {"resources": [format_number(g) for g in t.resources]}
                    if t.resources is not None
                    else {}
                ),
            }
            for t in instance.transactions
        ],
        "nodes": [
            {
                "id": n.id,
                "cost": cost_function_to_json(n.cost),
                **(
                    {
                        "capacity": [
                            None if r is None else format_number(r) for r in n.capacity
                        ]
                    }
                    if n.capacity is not None
                    else {}
                ),
            }
            for n in instance.nodes
        ],
        "validity": validity_to_json(instance.validity),
    }
    if proposals:
        payload["proposals"] = [
            {"broker": p.broker, "routing": routing_to_json(p.routing)} for p in proposals
        ]
    if broker_order:
        payload["broker_order"] = broker_order
    return payload


def resource_market_to_scenario_json(market: ResourceMarket) -> dict:
    payload: dict[str, Any] = {
        "kind": "resource_market",
        "dimensions": market.dimensions,
        "transactions": [
            {
                "id": t.id,
                "value": format_number(t.value),
                "resources": [format_number(g) for g in t.resources or ()],
            }
            for t in market.transactions
        ],
        "nodes": [],
    }
    for n in market.nodes:
        entry: dict[str, Any] = {"id": n.id}
        if isinstance(n.cost, LinearResources):
            entry["unit_costs"] = [format_number(c) for c in n.cost.unit_costs]
        if n.capacity is not None:
            entry["capacity"] = [None if r is None else format_number(r) for r in n.capacity]
        payload["nodes"].append(entry)
    if market.single_assignment:
        payload["single_assignment"] = True
    return payload


def outcome_to_json(outcome: MechanismOutcome) -> dict:
    payload: dict[str, Any] = {
        "winner": outcome.winner,
        "routing": routing_to_json(outcome.routing),
        "broker_payment": format_number(outcome.broker_payment),
        "agent_utilities": {
            a: format_number(u) for a, u in sorted(outcome.agent_utilities.items())
        },
        "rejection_reason": outcome.rejection_reason.value
        if outcome.rejection_reason is not None
        else None,
    }
    if outcome.ir_violator is not None:
        payload["ir_violator"] = outcome.ir_violator
    return payload


def _witness_to_json(witness: DeviationWitness) -> dict:
    deviation: Any
    if isinstance(witness.deviation, Fraction):
        deviation = format_number(witness.deviation)
    elif isinstance(witness.deviation, CostFunction):
        deviation = cost_function_to_json(witness.deviation)
    elif isinstance(witness.deviation, Proposal):
        deviation = {
            "broker": witness.deviation.broker,
            "routing": routing_to_json(witness.deviation.routing),
        }
    else:
        deviation = str(witness.deviation)
    return {
        "agent": witness.agent,
        "kind": witness.kind,
        "deviation": deviation,
        "utility_before": format_number(witness.utility_before),
        "utility_after": format_number(witness.utility_after),
    }


def equilibrium_report_to_json(report: EquilibriumReport) -> dict:
    return {
        "is_pne": report.is_pne,
        "witnesses": [_witness_to_json(w) for w in report.witnesses],
        "checked_agent_deviations": report.checked_agent_deviations,
        "checked_broker_allocations": report.checked_broker_allocations,
    }


def truthfulness_report_to_json(report: TruthfulnessReport) -> dict:
    return {
        "holds": report.holds,
        "coverage": report.coverage,
        "profiles_checked": report.profiles_checked,
        "witnesses": [_witness_to_json(w) for w in report.witnesses],
        "pne": equilibrium_report_to_json(report.pne),
    }


def dynamics_step_to_json(broker: str, proposal: Proposal, utility: Fraction) -> dict:
    return {
        "broker": broker,
        "proposal": {"broker": proposal.broker, "routing": routing_to_json(proposal.routing)},
        "utility": format_number(utility),
    }


def dynamics_summary_to_json(trace: DynamicsTrace) -> dict:
    return {
        "converged": trace.converged,
        "rounds": trace.rounds,
        "steps": len(trace.steps),
        "terminal": [
            {"broker": p.broker, "routing": routing_to_json(p.routing)} for p in trace.terminal
        ],
    }


def benchmark_result_to_json(result: BenchmarkResult) -> dict:
    witnesses = {}
    for name, witness in result.witnesses.items():
        entry: dict[str, Any] = {}
        if witness.allocation is not None:
            entry["allocation"] = allocation_to_json(witness.allocation)
        if witness.price is not None:
            entry["price"] = [format_number(p) for p in witness.price]
        if witness.willing is not None:
            entry["willing"] = sorted(witness.willing)
        witnesses[name] = entry
    return {
        "opt": format_number(result.opt),
        "inc": format_number(result.inc),
        "fee": format_number(result.fee),
        "fee_exact": result.fee_exact,
        "ora": format_number(result.ora),
        "hierarchy_ok": result.hierarchy_ok,
        "witnesses": witnesses,
    }
