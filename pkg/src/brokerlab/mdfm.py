"""Multi-dimensional resource markets and the four efficiency benchmarks.

A d-dimensional resource market prices transactions by a per-dimension unit
base fee vector p; a transaction's fee is g(t) . p.  Benchmarks compare the
best surplus attainable when the allocation step is, respectively,
inclusion-maximal (INC), fee-maximal (FEE), surplus-maximal given full type
knowledge (ORA), or unconstrained (OPT).

The continuous maximum over p is computed exactly by enumerating the
feasible cells of the price-space arrangement cut by two predicate families:
*willingness* (g(t) . p <= v_t) and *participation* (a node's fee income on
its bundle covers the bundle's cost).  Surplus equals allocation welfare
because base-fee payments are internal transfers (exact when each
transaction runs on at most one node), so within a cell the inner min/max
over allocations is price-free; only FEE's objective depends on price
magnitudes, which keeps it exact for d = 1 and a certified lower bound for
d >= 2.

Participation is what separates ORA from OPT under heterogeneous node costs:
posted per-dimension prices cannot pay different nodes different unit rates,
so a node whose cost exceeds its fee income drops out.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .core import (
    Allocation,
    ConstantNonempty,
    LinearResources,
    MarketInstance,
    NodeSpec,
    TransactionSpec,
    Zero,
    welfare,
)
from .errors import InstanceTooLarge, MalformedInput
from .linineq import Constraint, Hyperplane, enumerate_cells, find_point, nonneg_orthant
from .rationals import ONE, ZERO
from .validity import (
    Constraints,
    MaxTxPerNode,
    NodeCapacity,
    RequiredNodeCount,
    SingleAssignment,
    enumerate_valid,
)

MAX_PATTERN_TXS = 16
MAX_PATTERN_DIMS = 8


@dataclass(frozen=True)
class ResourceMarket:
    """A d-dimensional market: resource-vector transactions, capacity-bounded
    nodes with resource-linear (or zero) costs, capacity validity."""

    dimensions: int
    transactions: tuple[TransactionSpec, ...]
    nodes: tuple[NodeSpec, ...]
    single_assignment: bool = False

    def __post_init__(self):
        if self.dimensions < 1:
            raise MalformedInput("a resource market needs at least one dimension")
        for t in self.transactions:
            if t.resources is None or len(t.resources) != self.dimensions:
                raise MalformedInput(
                    f"transaction {t.id!r} needs a resource vector of length {self.dimensions}"
                )
        for n in self.nodes:
            if not isinstance(n.cost, (Zero, LinearResources)):
                raise MalformedInput(f"node {n.id!r} must have zero or resource-linear cost")
            if isinstance(n.cost, LinearResources) and len(n.cost.unit_costs) != self.dimensions:
                raise MalformedInput(f"unit costs of {n.id!r} have the wrong length")
            if n.capacity is not None and len(n.capacity) != self.dimensions:
                raise MalformedInput(f"capacity of {n.id!r} has the wrong length")

    def instance(self) -> MarketInstance:
        constraints: list = [NodeCapacity()]
        if self.single_assignment:
            constraints.append(SingleAssignment())
        return MarketInstance(self.transactions, self.nodes, Constraints(tuple(constraints)))

    def resource_of(self, tx: str) -> tuple[Fraction, ...]:
        for t in self.transactions:
            if t.id == tx:
                assert t.resources is not None
                return t.resources
        raise MalformedInput(f"unknown transaction id {tx!r}")

    def value_of(self, tx: str) -> Fraction:
        for t in self.transactions:
            if t.id == tx:
                return t.value
        raise MalformedInput(f"unknown transaction id {tx!r}")


def base_fee(resources: Sequence[Fraction], price: Sequence[Fraction]) -> Fraction:
    """Total base fee of a usage vector: the dot product with the unit prices."""
    if len(resources) != len(price):
        raise MalformedInput(
            f"dimension mismatch: usage has {len(resources)} entries, price {len(price)}"
        )
    return sum((g * p for g, p in zip(resources, price)), ZERO)


def base_fee_payments(
    market: ResourceMarket, allocation: Allocation, price: Sequence[Fraction]
) -> tuple[dict[str, Fraction], dict[str, Fraction]]:
    """Posted-price payment rules: included transactions pay their base fee,
    nodes collect the fees of the transactions they execute.

    With a transaction on several nodes each node still collects the full
    fee, so the routing's margin goes negative; callers should treat such
    outcomes as outside the posted-price model.
    """
    tx_payments: dict[str, Fraction] = {}
    node_payments: dict[str, Fraction] = {n.id: ZERO for n in market.nodes}
    for t in market.transactions:
        assert t.resources is not None
        fee = base_fee(t.resources, price)
        tx_payments[t.id] = fee if t.id in allocation.transactions else ZERO
    for n in market.nodes:
        total = ZERO
        for tx in allocation.inverse(n.id):
            total += base_fee(market.resource_of(tx), price)
        node_payments[n.id] = total
    return tx_payments, node_payments


# ---------------------------------------------------------------------------
# Price-space cells
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WillingnessPattern:
    """The transactions whose base fee stays within their value at some
    price, together with a certifying price."""

    willing: frozenset[str]
    witness_price: tuple[Fraction, ...]


@dataclass(frozen=True)
class PriceCell:
    willing: frozenset[str]
    participating: frozenset[tuple[str, frozenset[str]]]
    positive_dims: tuple[bool, ...] | None
    witness: tuple[Fraction, ...]


@dataclass(frozen=True)
class _AllocationInfo:
    allocation: Allocation
    txs: frozenset[str]
    welfare: Fraction
    bundles: tuple[tuple[str, frozenset[str], Fraction], ...]  # node, bundle, cost
    fee_vector: tuple[Fraction, ...]  # sum of g(t) over included transactions


def _prepare(market: ResourceMarket) -> tuple[MarketInstance, list[_AllocationInfo]]:
    instance = market.instance()
    truthful = instance.truthful_reports()
    infos = []
    for allocation in enumerate_valid(instance):
        bundles = []
        for node in sorted(allocation.nodes):
            bundle = allocation.inverse(node)
            cost = instance.node(node).cost.cost(bundle, instance.resources)
            bundles.append((node, bundle, cost))
        fee_vector = [ZERO] * market.dimensions
        for tx in allocation.transactions:
            for i, g in enumerate(market.resource_of(tx)):
                fee_vector[i] += g
        infos.append(
            _AllocationInfo(
                allocation,
                allocation.transactions,
                welfare(instance, allocation, truthful),
                tuple(bundles),
                tuple(fee_vector),
            )
        )
    return instance, infos


def _check_pattern_caps(market: ResourceMarket) -> None:
    if len(market.transactions) > MAX_PATTERN_TXS:
        raise InstanceTooLarge(
            f"pattern search supports at most {MAX_PATTERN_TXS} transactions, "
            f"got {len(market.transactions)}"
        )
    if market.dimensions > MAX_PATTERN_DIMS:
        raise InstanceTooLarge(
            f"pattern search supports at most {MAX_PATTERN_DIMS} dimensions, "
            f"got {market.dimensions}"
        )


def _willingness_hyperplanes(
    market: ResourceMarket,
) -> tuple[list[Hyperplane], list[tuple[str, ...]]]:
    groups: dict[tuple, list[str]] = {}
    for t in market.transactions:
        assert t.resources is not None
        groups.setdefault((t.resources, t.value), []).append(t.id)
    hyperplanes, members = [], []
    for (resources, value), ids in sorted(groups.items(), key=lambda kv: sorted(kv[1])):
        hyperplanes.append(Hyperplane(resources, value))
        members.append(tuple(sorted(ids)))
    return hyperplanes, members


def _bundle_fee_vector(market: ResourceMarket, bundle: Iterable[str]) -> tuple[Fraction, ...]:
    fee_vec = [ZERO] * market.dimensions
    for tx in bundle:
        for i, g in enumerate(market.resource_of(tx)):
            fee_vec[i] += g
    return tuple(fee_vec)


def _participation_hyperplanes(
    market: ResourceMarket, infos: Iterable[_AllocationInfo]
) -> tuple[list[Hyperplane], list[tuple[tuple[str, frozenset[str]], ...]]]:
    groups: dict[tuple, set[tuple[str, frozenset[str]]]] = {}
    for info in infos:
        for node, bundle, cost in info.bundles:
            if cost == 0:
                continue  # participation holds at every non-negative price
            fee_vec = _bundle_fee_vector(market, bundle)
            # participating (TRUE branch): fee income >= cost
            key = (tuple(-g for g in fee_vec), -cost)
            groups.setdefault(key, set()).add((node, bundle))
    hyperplanes, members = [], []
    for (coeffs, bound), pairs in sorted(
        groups.items(),
        key=lambda kv: sorted((n, tuple(sorted(b))) for n, b in kv[1]),
    ):
        hyperplanes.append(Hyperplane(coeffs, bound))
        members.append(tuple(sorted(pairs, key=lambda nb: (nb[0], tuple(sorted(nb[1]))))))
    return hyperplanes, members


def _zero_split_hyperplanes(dimensions: int) -> list[Hyperplane]:
    out = []
    for i in range(dimensions):
        coeffs = [ZERO] * dimensions
        coeffs[i] = ONE
        out.append(Hyperplane(tuple(coeffs), ZERO))  # TRUE: p_i <= 0, i.e. exactly 0
    return out


def _enumerate_price_cells(
    market: ResourceMarket,
    infos: list[_AllocationInfo],
    include_participation: bool,
    include_zero_splits: bool,
) -> list[PriceCell]:
    _check_pattern_caps(market)
    d = market.dimensions
    will_h, will_members = _willingness_hyperplanes(market)
    part_h: list[Hyperplane] = []
    part_members: list[tuple[tuple[str, frozenset[str]], ...]] = []
    if include_participation:
        part_h, part_members = _participation_hyperplanes(market, infos)
    zero_h = _zero_split_hyperplanes(d) if include_zero_splits else []

    hyperplanes = will_h + part_h + zero_h
    cells = []
    for signs, witness in enumerate_cells(nonneg_orthant(d), hyperplanes, d):
        willing: set[str] = set()
        for i, member in enumerate(will_members):
            if signs[i]:
                willing.update(member)
        offset = len(will_h)
        participating: set[tuple[str, frozenset[str]]] = set()
        for i, pairs in enumerate(part_members):
            if signs[offset + i]:
                participating.update(pairs)
        offset += len(part_h)
        positive = None
        if include_zero_splits:
            positive = tuple(not signs[offset + i] for i in range(d))
        cells.append(PriceCell(frozenset(willing), frozenset(participating), positive, witness))
    return cells


def feasible_patterns(market: ResourceMarket) -> list[WillingnessPattern]:
    """Every realizable willingness pattern with a certifying price.

    A subset S is feasible when some p >= 0 makes exactly the transactions in
    S willing (fee <= value) and everything else strictly unwilling.
    """
    _, infos = _prepare(market)
    cells = _enumerate_price_cells(
        market, infos, include_participation=False, include_zero_splits=False
    )
    patterns: dict[frozenset[str], tuple[Fraction, ...]] = {}
    for cell in cells:
        patterns.setdefault(cell.willing, cell.witness)
    return [
        WillingnessPattern(willing, witness)
        for willing, witness in sorted(patterns.items(), key=lambda kv: sorted(kv[0]))
    ]


def pools_at_price(
    market: ResourceMarket, price: Sequence[Fraction]
) -> tuple[frozenset[str], list[Allocation]]:
    """Direct evaluation at one price: the willing set and the admissible
    allocation pool (willing transactions only, every working node's fee
    income covering its bundle cost).

    Independent of the cell machinery; used to cross-check it.
    """
    instance = market.instance()
    willing = frozenset(
        t.id for t in market.transactions if base_fee(t.resources, price) <= t.value
    )
    resources = {t.id: t.resources for t in market.transactions}
    pool = []
    for allocation in enumerate_valid(instance):
        if not allocation.transactions <= willing:
            continue
        admissible = True
        for node in allocation.nodes:
            bundle = allocation.inverse(node)
            income = sum((base_fee(market.resource_of(tx), price) for tx in bundle), ZERO)
            if income < instance.node(node).cost.cost(bundle, resources):
                admissible = False
                break
        if admissible:
            pool.append(allocation)
    return willing, pool


def inclusion_maximal_allocations(pool: Sequence[Allocation]) -> list[Allocation]:
    """Pool members allocating a transaction set with no strict superset in the pool."""
    tsets = {a.transactions for a in pool}
    return [a for a in pool if not any(t > a.transactions for t in tsets)]


def fee_maximal_allocations(
    market: ResourceMarket, pool: Sequence[Allocation], price: Sequence[Fraction]
) -> list[Allocation]:
    """Pool members maximizing total base fees at the given price."""
    def total_fee(a: Allocation) -> Fraction:
        return sum((base_fee(market.resource_of(tx), price) for tx in a.transactions), ZERO)

    top = max((total_fee(a) for a in pool), default=ZERO)
    return [a for a in pool if total_fee(a) == top]


def _allowed(info: _AllocationInfo, cell: PriceCell) -> bool:
    if not info.txs <= cell.willing:
        return False
    for node, bundle, cost in info.bundles:
        if cost != 0 and (node, bundle) not in cell.participating:
            return False
    return True


def _maximal_infos(pool: list[_AllocationInfo], downward_closed: bool) -> list[_AllocationInfo]:
    """Pool members whose transaction set has no strict superset in the pool."""
    tsets = {info.txs for info in pool}
    if downward_closed:
        universe: frozenset[str] = frozenset().union(*tsets) if tsets else frozenset()
        maximal = {t for t in tsets if not any(t | {x} in tsets for x in universe - t)}
    else:
        maximal = {t for t in tsets if not any(other > t for other in tsets)}
    return [info for info in pool if info.txs in maximal]


def _zero_costs(market: ResourceMarket) -> bool:
    return all(
        isinstance(n.cost, Zero)
        or (isinstance(n.cost, LinearResources) and all(c == 0 for c in n.cost.unit_costs))
        for n in market.nodes
    )


@dataclass(frozen=True)
class BenchmarkWitness:
    allocation: Allocation | None = None
    price: tuple[Fraction, ...] | None = None
    willing: frozenset[str] | None = None


@dataclass(frozen=True)
class BenchmarkResult:
    opt: Fraction
    inc: Fraction
    fee: Fraction
    fee_exact: bool
    ora: Fraction
    witnesses: Mapping[str, BenchmarkWitness]
    hierarchy_ok: bool | None


def opt_benchmark(market: ResourceMarket) -> Fraction:
    """Highest welfare of any valid allocation (payments are free transfers)."""
    _, infos = _prepare(market)
    return max((info.welfare for info in infos), default=ZERO)


def inc_benchmark(market: ResourceMarket) -> Fraction:
    return _inc_with_witness(market, _prepare(market)[1])[0]


def _inc_with_witness(
    market: ResourceMarket,
    infos: list[_AllocationInfo],
    cells: list[PriceCell] | None = None,
) -> tuple[Fraction, BenchmarkWitness]:
    """Best-case price, worst-case inclusion-maximal allocation.

    Within a cell the pool of admissible allocations (willing transactions
    only, every working node participating) is fixed, so the worst maximal
    member is price-free and the outer max ranges over cells.
    """
    if cells is None:
        cells = _enumerate_price_cells(
            market, infos, include_participation=True, include_zero_splits=False
        )
    downward = _zero_costs(market)  # participation never filters, so pools are subset-closed
    best: Fraction | None = None
    witness = BenchmarkWitness()
    for cell in cells:
        pool = [info for info in infos if _allowed(info, cell)]
        if not pool:
            continue
        worst = min(_maximal_infos(pool, downward), key=lambda info: info.welfare)
        if best is None or worst.welfare > best:
            best = worst.welfare
            witness = BenchmarkWitness(worst.allocation, cell.witness, cell.willing)
    return (best if best is not None else ZERO), witness


def ora_benchmark(market: ResourceMarket) -> Fraction:
    return _ora_with_witness(market, _prepare(market)[1])[0]


def _ora_with_witness(
    market: ResourceMarket, infos: list[_AllocationInfo]
) -> tuple[Fraction, BenchmarkWitness]:
    """Best allocation an informed planner can post prices for.

    An allocation is attainable when some p >= 0 keeps every included
    transaction willing and pays every working node at least its bundle
    cost; the best attainable welfare is found allocation by allocation.
    """
    _check_pattern_caps(market)
    d = market.dimensions
    best: Fraction | None = None
    witness = BenchmarkWitness()
    for info in infos:
        constraints = list(nonneg_orthant(d))
        for tx in sorted(info.txs):
            constraints.append(Constraint(market.resource_of(tx), market.value_of(tx)))
        for _, bundle, cost in info.bundles:
            if cost == 0:
                continue
            fee_vec = _bundle_fee_vector(market, bundle)
            constraints.append(Constraint(tuple(-g for g in fee_vec), -cost))
        point = find_point(constraints, d)
        if point is None:
            continue
        if best is None or info.welfare > best:
            best = info.welfare
            witness = BenchmarkWitness(info.allocation, point, None)
    return (best if best is not None else ZERO), witness


def fee_benchmark(
    market: ResourceMarket, extra_prices: Sequence[Sequence[Fraction]] = ()
) -> tuple[Fraction, bool]:
    value, exact, _ = _fee_with_witness(market, _prepare(market)[1], extra_prices)
    return value, exact


def _fee_at_price(pool: list[_AllocationInfo], price: Sequence[Fraction]) -> Fraction:
    """Worst welfare among the fee-maximizing members of the pool at a price."""
    fees = [base_fee(info.fee_vector, price) for info in pool]
    top = max(fees)
    return min(info.welfare for info, fee in zip(pool, fees) if fee == top)


def _fee_with_witness(
    market: ResourceMarket,
    infos: list[_AllocationInfo],
    extra_prices: Sequence[Sequence[Fraction]] = (),
    cells: list[PriceCell] | None = None,
) -> tuple[Fraction, bool, BenchmarkWitness]:
    """Best-case price, worst-case fee-maximal allocation.

    For d = 1 the fee-maximizers inside a cell with positive price all
    maximize total resource, so the value is exact; the zero-price cell is
    split off (every pool member is trivially fee-maximal there).  For
    d >= 2 the value is a lower bound certified at the explored prices, and
    the zero-price split is unnecessary.
    """
    d = market.dimensions
    exact = d == 1
    if cells is None:
        cells = _enumerate_price_cells(
            market, infos, include_participation=True, include_zero_splits=exact
        )
    best: Fraction | None = None
    witness = BenchmarkWitness()

    def consider(value: Fraction, cell: PriceCell, price: tuple[Fraction, ...]) -> None:
        nonlocal best, witness
        if best is None or value > best:
            best = value
            witness = BenchmarkWitness(None, price, cell.willing)

    for cell in cells:
        pool = [info for info in infos if _allowed(info, cell)]
        if not pool:
            continue
        if exact:
            assert cell.positive_dims is not None
            if not cell.positive_dims[0]:
                consider(min(info.welfare for info in pool), cell, cell.witness)
            else:
                top = max(info.fee_vector[0] for info in pool)
                consider(
                    min(i.welfare for i in pool if i.fee_vector[0] == top),
                    cell,
                    cell.witness,
                )
        else:
            prices = [cell.witness]
            for p in extra_prices:
                q = tuple(p)
                if q != cell.witness and _price_in_cell(market, cell, q):
                    prices.append(q)
            for price in prices:
                consider(_fee_at_price(pool, price), cell, price)
    return (best if best is not None else ZERO), exact, witness


def _price_in_cell(market: ResourceMarket, cell: PriceCell, price: tuple[Fraction, ...]) -> bool:
    if len(price) != market.dimensions or any(p < 0 for p in price):
        return False
    willing = {
        t.id for t in market.transactions if base_fee(t.resources, price) <= t.value
    }
    if frozenset(willing) != cell.willing:
        return False
    if cell.positive_dims is not None and tuple(p > 0 for p in price) != cell.positive_dims:
        return False
    resources = {t.id: t.resources for t in market.transactions}
    for node, bundle in cell.participating:
        income = sum((base_fee(market.resource_of(tx), price) for tx in bundle), ZERO)
        spec = next(n for n in market.nodes if n.id == node)
        if income < spec.cost.cost(bundle, resources):
            return False
    return True


def run_benchmarks(
    market: ResourceMarket, extra_prices: Sequence[Sequence[Fraction]] = ()
) -> BenchmarkResult:
    _, infos = _prepare(market)
    opt_value = max((info.welfare for info in infos), default=ZERO)
    opt_alloc = next(
        (info.allocation for info in infos if info.welfare == opt_value), Allocation()
    )
    base_cells = _enumerate_price_cells(
        market, infos, include_participation=True, include_zero_splits=False
    )
    inc_value, inc_witness = _inc_with_witness(market, infos, base_cells)
    fee_cells = None if market.dimensions == 1 else base_cells
    fee_value, fee_exact, fee_witness = _fee_with_witness(
        market, infos, extra_prices, fee_cells
    )
    ora_value, ora_witness = _ora_with_witness(market, infos)
    hierarchy = None
    if fee_exact:
        hierarchy = inc_value <= fee_value <= ora_value <= opt_value
    return BenchmarkResult(
        opt=opt_value,
        inc=inc_value,
        fee=fee_value,
        fee_exact=fee_exact,
        ora=ora_value,
        witnesses={
            "opt": BenchmarkWitness(opt_alloc, None, None),
            "inc": inc_witness,
            "fee": fee_witness,
            "ora": ora_witness,
        },
        hierarchy_ok=hierarchy,
    )


# ---------------------------------------------------------------------------
# Worst-case constructions
# ---------------------------------------------------------------------------


def inclusion_gap_market(d: int) -> ResourceMarket:
    """One node with unit capacity everywhere; d-1 cheap transactions each
    tying up one private dimension plus the shared last one, and one
    valuable transaction using everything.  Degenerates below d = 3."""
    if d < 3:
        raise MalformedInput(f"inclusion-gap construction needs d >= 3, got {d}")
    value_small = Fraction(2, d)
    txs = []
    for j in range(1, d):
        g = [ZERO] * d
        g[j - 1] = ONE
        g[d - 1] = ONE
        txs.append(TransactionSpec(f"t{j:02d}", value_small, tuple(g)))
    txs.append(TransactionSpec(f"t{d:02d}", ONE, (ONE,) * d))
    node = NodeSpec("n", Zero(), (ONE,) * d)
    return ResourceMarket(d, tuple(txs), (node,))


def fee_gap_market(k: int) -> ResourceMarket:
    """One node with room for k unit transactions; k cheap transactions and
    one worth half the capacity-filling total."""
    if k < 2:
        raise MalformedInput(f"fee-gap construction needs k >= 2, got {k}")
    small = Fraction(1, 2 * (k - 1))
    txs = [TransactionSpec(f"t{i:02d}", small, (ONE,)) for i in range(1, k + 1)]
    txs.append(TransactionSpec(f"t{k + 1:02d}", Fraction(1, 2), (ONE,)))
    node = NodeSpec("n", Zero(), (Fraction(k),))
    return ResourceMarket(1, tuple(txs), (node,))


def oracle_gap_market(
    k: int,
    resource_values: Sequence[Fraction],
    epsilon: Fraction = Fraction(1, 2),
) -> ResourceMarket:
    """k transactions with strictly increasing usage, each matched to the one
    node sized and priced for it; unit costs rise so fast that no single
    price vector keeps two matched pairs profitable at once."""
    if k < 2:
        raise MalformedInput(f"oracle-gap construction needs k >= 2, got {k}")
    if len(resource_values) != k:
        raise MalformedInput(f"expected {k} resource values, got {len(resource_values)}")
    values = [Fraction(v) for v in resource_values]
    if any(v <= 0 for v in values) or any(a >= b for a, b in zip(values, values[1:])):
        raise MalformedInput("resource values must be positive and strictly increasing")
    if epsilon <= 0:
        raise MalformedInput(f"epsilon must be positive, got {epsilon}")

    txs = []
    nodes = []
    unit_cost = ONE
    value = values[0] + 1
    for j in range(k):
        if j > 0:
            unit_cost = value / values[j - 1] + epsilon
            value = unit_cost * values[j] + 1
        txs.append(TransactionSpec(f"t{j + 1:02d}", value, (values[j],)))
        nodes.append(NodeSpec(f"n{j + 1:02d}", LinearResources((unit_cost,)), (values[j],)))
    return ResourceMarket(1, tuple(txs), tuple(nodes), single_assignment=True)


def collusion_example_instance() -> MarketInstance:
    """Two transactions, two unit-capacity nodes: the valuable transaction
    needs both nodes, the other needs exactly one."""
    txs = (
        TransactionSpec("t1", Fraction(6)),
        TransactionSpec("t2", Fraction(4)),
    )
    nodes = (
        NodeSpec("n1", ConstantNonempty(ONE)),
        NodeSpec("n2", ConstantNonempty(ONE)),
    )
    validity = Constraints(
        (
            RequiredNodeCount.exactly("t1", 2),
            RequiredNodeCount.exactly("t2", 1),
            MaxTxPerNode("n1", 1),
            MaxTxPerNode("n2", 1),
        )
    )
    return MarketInstance(txs, nodes, validity)


@dataclass(frozen=True)
class CollusionCertificate:
    """Exhaustive demonstration that the surplus-maximizing allocation of the
    two-transaction example admits no collusion-proof payment split."""

    valid_allocations: int
    best_allocation: Allocation
    best_welfare: Fraction
    max_total_node_payment: Fraction  # capped by the included transaction's value
    required_total_node_payment: Fraction  # both nodes matching the outside offer
    outside_offer: Fraction
    resistant: bool


def collusion_certificate() -> CollusionCertificate:
    instance = collusion_example_instance()
    truthful = instance.truthful_reports()
    allocations = enumerate_valid(instance)
    best_welfare = max(welfare(instance, a, truthful) for a in allocations)
    best = next(a for a in allocations if welfare(instance, a, truthful) == best_welfare)
    v1 = instance.transaction("t1").value
    outside = instance.transaction("t2").value
    required = outside * 2
    return CollusionCertificate(
        valid_allocations=len(allocations),
        best_allocation=best,
        best_welfare=best_welfare,
        max_total_node_payment=v1,
        required_total_node_payment=required,
        outside_offer=outside,
        resistant=required <= v1,
    )
