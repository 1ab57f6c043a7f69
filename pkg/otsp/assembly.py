"""From tree distributions to an order-respecting tour.

One connecting tree is chosen per stroll, either by sampling or by the
method of conditional expectations. Their union ``H_0`` is connected to the
isolated vertices (``F``), made Eulerian by a minimum-cost join (``J``) and
shortcut without ever reordering the ordered vertices.

"""

import logging

from dataclasses import dataclass, field
from decimal import ROUND_CEILING, Decimal, localcontext
from fractions import Fraction

import networkx as nx
import numpy as np

from otsp.decomposition import decompose_all
from otsp.errors import ConsistencyError, ParameterError, PreconditionError
from otsp.instance import Tour
from otsp.relaxation import aggregate_held_karp, solve_relaxation
from otsp.spanning import (
    EdgeMultiset, euler_circuit, min_cost_q_join, minimum_spanning_tree)
from otsp.util import ratio_text

logger = logging.getLogger(__name__)

# Rational upper bound on 1/e = 0.36787944117144232159...
INV_E_UPPER = Fraction(367879441171442322, 10 ** 18)

# Approximation guarantee 3/2 + 1/e, rounded up
GUARANTEE = Fraction(3, 2) + INV_E_UPPER


def exp_neg_upper(ell):
    """Rational upper bound on ``e^(-ell)``."""
    with localcontext() as context:
        context.prec = 40
        context.rounding = ROUND_CEILING
        value = Decimal(-ell).exp()
    return Fraction(value) + Fraction(1, 10 ** 35)


@dataclass(frozen=True)
class ConnectingTreeDistribution:

    """One tree family per stroll, in stroll order."""

    families: tuple

    def __len__(self):
        return len(self.families)

    def problems(self, ordered, n):
        """Violations of the weight, endpoint and joint coverage identities.

        :param ordered: The ordered vertices
        :param n: Number of vertices
        :rtype: list(str)

        """
        ordered = set(ordered)
        problems = []
        for index, family in enumerate(self.families):
            if family.total_weight() != 1:
                problems.append('family {} weighs {}'.format(
                    index, family.total_weight()))
            for tree in family.trees:
                if tree.vertices & ordered != {family.s, family.t}:
                    problems.append('a tree of family {} meets {}'.format(
                        index, sorted(tree.vertices & ordered)))
                    break
        table = coverage_table(self)
        for v in range(n):
            if v in ordered:
                continue
            total = sum((row.get(v, Fraction(0)) for row in table), Fraction(0))
            if total != 1:
                problems.append('vertex {} covered {} times'.format(v, total))
        return problems


@dataclass(frozen=True)
class Prepared:

    """Everything the rounding stage needs, computed once per instance."""

    solution: object
    distribution: ConnectingTreeDistribution
    tree: object
    held_karp: object = None


def prepare(instance, cap=None):
    """Solve the LP, certify it and decompose every stroll.

    :param instance: Ordered TSP instance with ``k >= 2``
    :type instance: otsp.instance.Instance
    :param cap: Scale cap handed to the decomposition
    :rtype: Prepared

    """
    instance.require_ordered()
    solution = solve_relaxation(instance)
    held_karp = aggregate_held_karp(solution, instance.n)
    distribution = ConnectingTreeDistribution(decompose_all(solution, cap))
    tree = minimum_spanning_tree(instance.costs, instance.order[0])
    logger.info(
        'Decomposed %d strolls into %d trees; MST cost %d',
        len(distribution), sum(
            len(family.trees) for family in distribution.families),
        tree.cost)
    return Prepared(solution, distribution, tree, held_karp)


def coverage_table(distribution):
    """``p[i][v]``: probability that the tree of stroll ``i`` contains ``v``."""
    table = []
    for family in distribution.families:
        row = {}
        for tree in family.trees:
            for v in tree.vertices:
                row[v] = row.get(v, Fraction(0)) + tree.mu
        table.append(row)
    return table


def isolation_products(distribution, n, exclude=()):
    """``prod_i (1 - p^i_v)`` for every vertex outside ``exclude``.

    :rtype: dict(int, Fraction)

    """
    table = coverage_table(distribution)
    products = {}
    for v in range(n):
        if v in exclude:
            continue
        product = Fraction(1)
        for row in table:
            product *= 1 - row.get(v, Fraction(0))
        products[v] = product
    return products


def sample_trees(distribution, seed, key=()):
    """Draw one tree per family, independently.

    Family ``i`` uses the ``i``-th child stream of ``SeedSequence(seed)``,
    so equal seeds give equal draws.

    :param distribution: Tree families in stroll order
    :type distribution: ConnectingTreeDistribution
    :param seed: 64-bit seed
    :type seed: int
    :param key: Extra spawn key separating independent uses of one seed
    :type key: tuple(int)
    :rtype: tuple(otsp.decomposition.WeightedTree)
    :raises ParameterError: If the seed is negative

    """
    if seed < 0:
        raise ParameterError('seed must be nonnegative, got {}'.format(seed))
    streams = np.random.SeedSequence(seed, spawn_key=tuple(key)).spawn(
        len(distribution))
    chosen = []
    for family, stream in zip(distribution.families, streams):
        rng = np.random.default_rng(stream)
        weights = np.array([float(tree.mu) for tree in family.trees])
        index = rng.choice(len(family.trees), p=weights / weights.sum())
        chosen.append(family.trees[index])
    return tuple(chosen)


def ordered_walk(trees, order):
    """Closed walk through the tree paths ``d_1 -> d_2 -> ... -> d_1``.

    :param trees: Tree ``i`` must contain ``d_i`` and ``d_{i+1}``
    :type trees: sequence(otsp.decomposition.WeightedTree)
    :param order: Ordered vertices ``d_1, ..., d_k``
    :type order: sequence(int)
    :rtype: list(int)
    :raises PreconditionError: If a tree misses its endpoints

    """
    k = len(order)
    walk = [order[0]]
    for i, tree in enumerate(trees):
        s, t = order[i], order[(i + 1) % k]
        graph = nx.Graph(list(tree.edges))
        if s not in graph or t not in graph:
            raise PreconditionError(
                'tree {} does not contain {} and {}'.format(i, s, t))
        walk.extend(nx.shortest_path(graph, s, t)[1:])
    return walk


@dataclass(frozen=True)
class Connector:

    """Edges ``F`` joining isolated vertices, with the MST-based bound."""

    edges: EdgeMultiset
    bound: int
    isolated: tuple


def connect_isolated(costs, h0, tree):
    """Cheapest forest joining every isolated vertex to the root component.

    :param costs: Metric costs
    :param h0: Union of the chosen trees
    :type h0: EdgeMultiset
    :param tree: MST oriented toward the root
    :type tree: otsp.spanning.RootedTree
    :rtype: Connector
    :raises PreconditionError: If ``h0`` has two nontrivial components
    :raises ConsistencyError: If ``c(F)`` exceeds the sum of ``c(e_v)``

    """
    graph = h0.to_graph(range(costs.n))
    main = nx.node_connected_component(graph, tree.root)
    for component in nx.connected_components(graph):
        if len(component) > 1 and tree.root not in component:
            raise PreconditionError(
                'H_0 has a second component {}'.format(sorted(component)))
    isolated = sorted(set(range(costs.n)) - main)
    bound = sum(tree.out_cost(costs, v) for v in isolated)

    best = {
        v: min((costs(v, u), u) for u in main) for v in isolated
    }
    edges = []
    while best:
        v = min(best, key=lambda w: (best[w], w))
        _, u = best.pop(v)
        edges.append((u, v))
        for w in best:
            best[w] = min(best[w], (costs(w, v), v))
    connector = EdgeMultiset(edges)
    if connector.cost(costs) > bound:
        raise ConsistencyError('connector costs {} above its bound {}'.format(
            connector.cost(costs), bound))
    return Connector(connector, bound, tuple(isolated))


def parity_correct(costs, h, method='blossom'):
    """Minimum-cost join on the odd-degree vertices of ``h``."""
    return min_cost_q_join(costs, h.odd_vertices(), method)


def shortcut_to_tour(costs, multiset, walk, order):
    """Shortcut an Eulerian multigraph to a tour keeping the visit order.

    The walk is shortcut first, skipping ordered vertices met out of turn.
    The rest of the multigraph is split into closed walks, which are spliced
    in one at a time at their smallest vertex already on the cycle.

    :param multiset: Connected Eulerian spanning multigraph
    :type multiset: EdgeMultiset
    :param walk: Closed walk in ``multiset`` through ``order`` in order
    :type walk: list(int)
    :param order: Ordered vertices
    :type order: sequence(int)
    :returns: Tour no more expensive than ``multiset``
    :rtype: otsp.instance.Tour
    :raises PreconditionError: If a precondition on the inputs fails

    """
    n = costs.n
    if multiset.odd_vertices():
        raise PreconditionError('multigraph has odd vertices {}'.format(
            multiset.odd_vertices()))
    if n > 1 and not nx.is_connected(multiset.to_graph(range(n))):
        raise PreconditionError('multigraph is not connected and spanning')
    rest = multiset - EdgeMultiset(zip(walk, walk[1:]))

    remainder = rest.to_graph()
    closed = []
    for component in sorted(nx.connected_components(remainder), key=min):
        part = EdgeMultiset(
            e for e in rest if e[0] in component)
        closed.append(euler_circuit(part, min(component)))

    position = {d: j for j, d in enumerate(order)}
    expected = 0
    cycle = []
    seen = set()
    for v in walk:
        if v in seen:
            continue
        if v in position:
            if position[v] != expected:
                continue
            expected += 1
        seen.add(v)
        cycle.append(v)
    if expected != len(order):
        raise PreconditionError('walk does not visit the ordered vertices in order')

    while closed:
        choice = None
        for index, circuit in enumerate(closed):
            common = seen.intersection(circuit)
            if common and (choice is None or (min(common), index) < choice):
                choice = (min(common), index)
        if choice is None:
            raise PreconditionError('closed walks are disconnected from the walk')
        v, index = choice
        circuit = closed.pop(index)
        start = circuit.index(v)
        fresh = []
        for z in circuit[start:] + circuit[1:start + 1]:
            if z not in seen:
                seen.add(z)
                fresh.append(z)
        at = cycle.index(v) + 1
        cycle[at:at] = fresh
    if len(cycle) != n:
        raise PreconditionError('shortcut cycle misses {} vertices'.format(
            n - len(cycle)))
    return Tour.from_cycle(costs, cycle, order[0] if len(order) else None)


@dataclass(frozen=True)
class Certificate:

    """Cost breakdown of one produced tour, with exact bound checks."""

    algorithm: str
    cost: int
    c_lp: Fraction = None
    c_trees: int = 0
    c_connector: int = 0
    connector_bound: int = 0
    c_join: int = 0
    c_mst: int = 0
    seed: int = None
    expected_bound: Fraction = None
    guarantee: Fraction = None
    telescope: tuple = ()
    isolation_max: Fraction = None
    isolation_bound: Fraction = None
    scale: int = 1
    extra: dict = field(default_factory=dict)

    @property
    def ratio_lp(self):
        if self.c_lp is None:
            return None
        return ratio_text(self.cost, self.c_lp)

    def checks(self):
        """Name of every checked bound, mapped to whether it holds."""
        results = {
            'connector_within_bound': self.c_connector <= self.connector_bound,
            'cost_within_parts':
                self.cost <= self.c_trees + self.c_connector + self.c_join,
        }
        if self.c_lp is not None:
            results['mst_within_lp'] = self.c_mst <= self.c_lp
            results['join_within_half_lp'] = 2 * self.c_join <= self.c_lp
        if self.isolation_max is not None:
            results['isolation_within_bound'] = \
                self.isolation_max <= self.isolation_bound
        if self.guarantee is not None:
            results['within_guarantee'] = \
                self.cost <= self.guarantee * self.c_lp
        if self.telescope:
            results['telescope_non_increasing'] = all(
                later <= earlier
                for earlier, later in zip(self.telescope, self.telescope[1:]))
        return results

    def failed(self):
        return sorted(name for name, ok in self.checks().items() if not ok)

    def to_document(self):
        document = {
            'algorithm': self.algorithm,
            'cost': self.cost,
            'scale': self.scale,
            'c_lp': None if self.c_lp is None else _text(self.c_lp),
            'ratio_vs_lp': self.ratio_lp,
            'c_trees': self.c_trees,
            'c_F': self.c_connector,
            'c_F_bound': self.connector_bound,
            'c_J': self.c_join,
            'c_mst': self.c_mst,
            'seed': self.seed,
            'checks': self.checks(),
        }
        if self.expected_bound is not None:
            document['expected_bound'] = _text(self.expected_bound)
        if self.isolation_max is not None:
            document['isolation_max'] = _text(self.isolation_max)
        if self.telescope:
            document['telescope'] = [_text(value) for value in self.telescope]
        for key, value in self.extra.items():
            document[key] = _jsonable(value)
        return document


def _text(value):
    value = Fraction(value)
    return '{}/{}'.format(value.numerator, value.denominator)


def _jsonable(value):
    if isinstance(value, Fraction):
        return _text(value)
    if isinstance(value, (list, tuple)):
        return [_jsonable(item) for item in value]
    return value


def assemble(costs, trees, walk, order, tree):
    """Turn chosen trees and their walk into a tour.

    :returns: The tour plus ``(c(H_0), connector, c(J))``
    :rtype: tuple(otsp.instance.Tour, tuple)

    """
    h0 = EdgeMultiset(e for chosen in trees for e in chosen.edges)
    connector = connect_isolated(costs, h0, tree)
    h = h0 + connector.edges
    join = parity_correct(costs, h)
    tour = shortcut_to_tour(costs, h + join, walk, order)
    logger.debug(
        'H_0 %d, F %d (bound %d, %d isolated), J %d, tour %d',
        h0.cost(costs), connector.edges.cost(costs), connector.bound,
        len(connector.isolated), join.cost(costs), tour.cost)
    return tour, (h0.cost(costs), connector, join.cost(costs))


class ExpectationTable:

    """Conditional expectation of the cost bound given the first choices.

    ``value(chosen)`` is the sum of the chosen tree costs, the expected cost
    of the remaining families, the expected connector bound of the vertices
    not yet covered and ``constant``.

    """

    def __init__(self, distribution, costs, tree, constant):
        self.costs = costs
        self.constant = constant
        self.family_costs = [
            family.expected_cost(costs) for family in distribution.families]
        self.out_costs = {
            v: tree.out_cost(costs, v) for v in range(costs.n) if v != tree.root
        }
        table = coverage_table(distribution)
        suffix = [{v: Fraction(1) for v in self.out_costs}]
        for row in reversed(table):
            previous = suffix[0]
            suffix.insert(0, {
                v: previous[v] * (1 - row.get(v, Fraction(0)))
                for v in self.out_costs
            })
        self.suffix = suffix

    def value(self, chosen):
        """Exact conditional expectation after fixing ``chosen`` trees."""
        fixed = len(chosen)
        covered = set()
        total = Fraction(self.constant)
        for tree in chosen:
            total += tree.cost(self.costs)
            covered.update(tree.vertices)
        total += sum(self.family_costs[fixed:], Fraction(0))
        remaining = self.suffix[fixed]
        for v, cost in self.out_costs.items():
            if v not in covered and cost:
                total += remaining[v] * cost
        return total


def derandomize(distribution, costs, tree, constant):
    """Choose one tree per family by conditional expectations.

    :returns: The chosen trees and the expectation after each choice
    :rtype: tuple(tuple, tuple(Fraction))
    :raises ConsistencyError: If the expectation ever increases

    """
    table = ExpectationTable(distribution, costs, tree, constant)
    chosen = []
    trace = [table.value(chosen)]
    for family in distribution.families:
        best = None
        for candidate in family.trees:
            value = table.value(chosen + [candidate])
            if best is None or value < best[0]:
                best = (value, candidate)
        chosen.append(best[1])
        trace.append(best[0])
        if best[0] > trace[-2]:
            raise ConsistencyError('conditional expectation increased')
    logger.debug('Conditional expectations: %s', [str(v) for v in trace])
    return tuple(chosen), tuple(trace)


def _certificate(algorithm, instance, prepared, tour, parts, **kwargs):
    c_trees, connector, c_join = parts
    products = isolation_products(
        prepared.distribution, instance.n, set(instance.order))
    return Certificate(
        algorithm=algorithm,
        cost=tour.cost,
        c_lp=prepared.solution.objective,
        c_trees=c_trees,
        c_connector=connector.edges.cost(instance.costs),
        connector_bound=connector.bound,
        c_join=c_join,
        c_mst=prepared.tree.cost,
        isolation_max=max(products.values(), default=Fraction(0)),
        isolation_bound=INV_E_UPPER,
        scale=instance.costs.scale,
        **kwargs)


def solve_randomized(instance, seed=0, prepared=None):
    """Sampled run of the approximation algorithm.

    :param instance: Ordered TSP instance with ``k >= 2``
    :type instance: otsp.instance.Instance
    :param seed: Seed of the tree sampling
    :type seed: int
    :param prepared: Reuse LP and decomposition across runs
    :type prepared: Prepared | None
    :rtype: tuple(otsp.instance.Tour, Certificate)

    """
    prepared = prepared or prepare(instance)
    c_lp = prepared.solution.objective
    trees = sample_trees(prepared.distribution, seed)
    walk = ordered_walk(trees, instance.order)
    tour, parts = assemble(
        instance.costs, trees, walk, instance.order, prepared.tree)
    expected = ExpectationTable(
        prepared.distribution, instance.costs, prepared.tree,
        c_lp / 2).value([])
    certificate = _certificate(
        'approx', instance, prepared, tour, parts,
        seed=seed, expected_bound=expected,
        extra={
            'analysis_bound':
                c_lp + c_lp / 2 + INV_E_UPPER * prepared.tree.cost})
    logger.info('Randomized tour (seed %d): cost %d, ratio to LP %s',
                seed, tour.cost, certificate.ratio_lp)
    return tour, certificate


def solve_derandomized(instance, prepared=None):
    """Deterministic run choosing trees by conditional expectations.

    :rtype: tuple(otsp.instance.Tour, Certificate)
    :raises ConsistencyError: If the tour misses the guarantee

    """
    prepared = prepared or prepare(instance)
    c_lp = prepared.solution.objective
    trees, trace = derandomize(
        prepared.distribution, instance.costs, prepared.tree, c_lp / 2)
    walk = ordered_walk(trees, instance.order)
    tour, parts = assemble(
        instance.costs, trees, walk, instance.order, prepared.tree)
    certificate = _certificate(
        'derand', instance, prepared, tour, parts,
        expected_bound=trace[0], guarantee=GUARANTEE, telescope=trace)
    failed = certificate.failed()
    if failed or trace[-1] > GUARANTEE * c_lp or tour.cost > trace[-1]:
        raise ConsistencyError(
            'derandomized run breaks its bounds: {}'.format(failed))
    logger.info('Derandomized tour: cost %d, ratio to LP %s',
                tour.cost, certificate.ratio_lp)
    return tour, certificate
