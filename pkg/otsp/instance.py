"""Instance data model: metric costs, order constraints, chains and tours."""

import logging

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from otsp.errors import ParameterError

logger = logging.getLogger(__name__)

# Instance generators understood by :func:`generate`
KINDS = ('euclidean', 'random_closure')

# Side of the square Euclidean points are drawn from
EUCLIDEAN_BOX = 1000

# Edge weights of random_closure instances are drawn from [1, RANDOM_MAX_COST]
RANDOM_MAX_COST = 100


def _as_rows(matrix):
    """Turn any square array-like into a tuple of tuples of python ints."""
    rows = []
    for row in matrix:
        rows.append(tuple(int(value) for value in row))
    return tuple(rows)


@dataclass(frozen=True)
class CostMatrix:

    """Symmetric nonnegative integer cost matrix.

    Fractional costs are scaled to integers by ``scale`` when they are read,
    so ``cost[u][v] / scale`` is the value the user supplied.

    :param cost: Square matrix, row-major
    :type cost: tuple(tuple(int))
    :param scale: Power of ten the costs were multiplied by
    :type scale: int

    """

    cost: tuple
    scale: int = 1

    def __post_init__(self):
        """Normalize rows and check the structural invariants."""
        rows = _as_rows(self.cost)
        object.__setattr__(self, 'cost', rows)
        n = len(rows)
        if any(len(row) != n for row in rows):
            raise ParameterError('cost matrix is not square')
        if self.scale < 1:
            raise ParameterError('scale must be a positive integer')
        for u in range(n):
            if rows[u][u] != 0:
                raise ParameterError(
                    'cost[{0}][{0}] must be 0, got {1}'.format(u, rows[u][u]))
            for v in range(u + 1, n):
                if rows[u][v] != rows[v][u]:
                    raise ParameterError(
                        'cost matrix is not symmetric at ({}, {})'.format(u, v))
                if rows[u][v] < 0:
                    raise ParameterError(
                        'negative cost at ({}, {})'.format(u, v))

    @property
    def n(self):
        """Number of vertices."""
        return len(self.cost)

    def __call__(self, u, v):
        """Cost of edge ``{u, v}``."""
        return self.cost[u][v]

    def to_array(self):
        """Return the costs as a numpy object array of python ints."""
        array = np.empty((self.n, self.n), dtype=object)
        for u, row in enumerate(self.cost):
            array[u, :] = row
        return array

    def edges(self):
        """Yield every edge ``(u, v)`` with ``u < v`` in lexicographic order."""
        for u in range(self.n):
            for v in range(u + 1, self.n):
                yield (u, v)


@dataclass(frozen=True)
class OrderConstraint:

    """Vertices ``d_1, ..., d_k`` that a tour must visit in this cyclic order.

    By convention ``d_{k+1} = d_1``. Solve paths require ``k >= 2``; shorter
    orders are accepted here so that plain TSP documents can be loaded.

    """

    order: tuple

    def __post_init__(self):
        """Check that entries are pairwise distinct."""
        order = tuple(int(d) for d in self.order)
        object.__setattr__(self, 'order', order)
        seen = set()
        for d in order:
            if d in seen:
                raise ParameterError(
                    'vertex {} appears twice in the order'.format(d))
            seen.add(d)

    @property
    def k(self):
        """Number of ordered vertices."""
        return len(self.order)

    def __iter__(self):
        return iter(self.order)

    def __len__(self):
        return len(self.order)

    def __getitem__(self, index):
        return self.order[index]

    def stroll_ends(self, i):
        """Endpoints ``(d_i, d_{i+1})`` of stroll ``i`` (0-based, cyclic)."""
        return self.order[i], self.order[(i + 1) % self.k]


@dataclass(frozen=True)
class Instance:

    """Ordered TSP instance: metric costs plus the ordered vertices."""

    costs: CostMatrix
    order: OrderConstraint

    def __post_init__(self):
        if not isinstance(self.order, OrderConstraint):
            object.__setattr__(self, 'order', OrderConstraint(self.order))
        if self.order.k > self.costs.n:
            raise ParameterError('more ordered vertices than vertices')
        for d in self.order:
            if not 0 <= d < self.costs.n:
                raise ParameterError(
                    'ordered vertex {} out of range'.format(d))

    @property
    def n(self):
        return self.costs.n

    @property
    def k(self):
        return self.order.k

    def require_ordered(self):
        """Reject instances whose order constraint is vacuous.

        :raises ParameterError: If fewer than two vertices are ordered

        """
        if self.k < 2:
            raise ParameterError(
                'order constraint with k={} is vacuous; use the plain TSP '
                'mode (--algo christofides) instead'.format(self.k))


@dataclass(frozen=True)
class ChainInstance:

    """TSP instance with precedence constraints given by disjoint chains."""

    costs: CostMatrix
    chains: tuple

    def __post_init__(self):
        chains = tuple(tuple(int(v) for v in chain) for chain in self.chains)
        object.__setattr__(self, 'chains', chains)
        if not chains:
            raise ParameterError('at least one chain is required')
        seen = {}
        for index, chain in enumerate(chains):
            if not chain:
                raise ParameterError('chain {} is empty'.format(index))
            for v in chain:
                if not 0 <= v < self.costs.n:
                    raise ParameterError(
                        'chain vertex {} out of range'.format(v))
                if v in seen:
                    raise ParameterError(
                        'vertex {} appears in chains {} and {}'.format(
                            v, seen[v], index))
                seen[v] = index

    @property
    def n(self):
        return self.costs.n

    @property
    def ell(self):
        """Number of chains."""
        return len(self.chains)


def tour_cost(costs, cycle):
    """Cost of a closed cycle, including the closing edge.

    :param costs: Edge costs
    :type costs: CostMatrix
    :param cycle: Vertices in visiting order
    :type cycle: sequence(int)
    :rtype: int

    """
    if len(cycle) < 2:
        return 0
    return sum(
        costs(cycle[index - 1], cycle[index]) for index in range(len(cycle)))


def respects_order(cycle, order):
    """Whether some rotation and direction of ``cycle`` visits ``order``.

    :param cycle: Vertices of a spanning cycle
    :type cycle: sequence(int)
    :param order: Vertices that must be met in this cyclic order
    :type order: sequence(int)
    :rtype: bool

    """
    position = {v: index for index, v in enumerate(cycle)}
    if any(d not in position for d in order):
        return False
    if len(order) < 3:
        return True
    places = [position[d] for d in order]
    k = len(places)
    descents = sum(1 for i in range(k) if places[(i + 1) % k] < places[i])
    ascents = sum(1 for i in range(k) if places[(i + 1) % k] > places[i])
    return descents == 1 or ascents == 1


@dataclass(frozen=True)
class Tour:

    """Spanning cycle with its cost.

    :param cycle: Cyclic sequence of all vertices
    :type cycle: tuple(int)
    :param cost: Sum of consecutive-pair costs including the closing edge
    :type cost: int

    """

    cycle: tuple
    cost: int

    def __post_init__(self):
        object.__setattr__(self, 'cycle', tuple(int(v) for v in self.cycle))
        object.__setattr__(self, 'cost', int(self.cost))

    @classmethod
    def from_cycle(cls, costs, cycle, start=None):
        """Build a tour and compute its cost.

        :param start: Optional vertex to rotate the cycle to the front
        :type start: int | None

        """
        cycle = list(cycle)
        if start is not None and start in cycle:
            index = cycle.index(start)
            cycle = cycle[index:] + cycle[:index]
        return cls(tuple(cycle), tour_cost(costs, cycle))

    def problems(self, costs, order=()):
        """List every violated tour invariant.

        :param costs: Edge costs of the instance
        :type costs: CostMatrix
        :param order: Ordered vertices the tour must respect
        :type order: sequence(int)
        :returns: Human-readable problem descriptions, empty if valid
        :rtype: list(str)

        """
        problems = []
        if sorted(self.cycle) != list(range(costs.n)):
            problems.append('cycle is not a permutation of all vertices')
        elif tour_cost(costs, self.cycle) != self.cost:
            problems.append('stored cost {} differs from recomputed {}'.format(
                self.cost, tour_cost(costs, self.cycle)))
        if order and not respects_order(self.cycle, order):
            problems.append('ordered vertices are not visited in order')
        return problems


class MetricReport(NamedTuple):

    """Outcome of :func:`validate_metric`."""

    ok: bool
    violations: list


def _coerce(costs):
    if isinstance(costs, CostMatrix):
        return costs
    return CostMatrix(costs)


def validate_metric(costs):
    """Check the triangle inequality on every triple.

    :param costs: Cost matrix or square array-like
    :type costs: CostMatrix | sequence
    :returns: ``ok`` plus every triple ``(u, v, w)`` with
        ``c(u, w) > c(u, v) + c(v, w)`` and ``u < w``
    :rtype: MetricReport
    :raises ParameterError: If the input is not square and symmetric

    """
    costs = _coerce(costs)
    array = costs.to_array()
    via = array[:, :, None] + array[None, :, :]
    direct = array[:, None, :]
    violating = np.argwhere(direct > via)
    violations = [
        (int(u), int(v), int(w)) for u, v, w in violating
        if u < w and v != u and v != w
    ]
    if violations:
        logger.debug('%d triangle violations found', len(violations))
    return MetricReport(not violations, violations)


def metric_closure(costs):
    """All-pairs shortest path distances (Floyd-Warshall).

    :param costs: Symmetric nonnegative costs
    :type costs: CostMatrix
    :returns: Closure; entrywise no larger than the input and metric
    :rtype: CostMatrix

    """
    costs = _coerce(costs)
    dist = costs.to_array()
    for middle in range(costs.n):
        dist = np.minimum(dist, dist[:, middle, None] + dist[None, middle, :])
    return CostMatrix(dist.tolist(), scale=costs.scale)


def _sample_costs(kind, n, rng):
    if kind == 'euclidean':
        points = rng.integers(0, EUCLIDEAN_BOX, size=(n, 2))
        delta = points[:, None, :] - points[None, :, :]
        return np.rint(np.hypot(delta[..., 0], delta[..., 1])).astype(int)
    upper = np.triu(rng.integers(1, RANDOM_MAX_COST + 1, size=(n, n)), 1)
    return upper + upper.T


def generate(kind, n, k=None, chain_sizes=None, seed=0):
    """Generate a random metric instance.

    :param kind: One of :data:`KINDS`
    :type kind: str
    :param n: Number of vertices
    :type n: int
    :param k: Number of ordered vertices (OTSP instance)
    :type k: int | None
    :param chain_sizes: Chain lengths (chain instance); excludes ``k``
    :type chain_sizes: list(int) | None
    :param seed: Seed of the generator; equal seeds give equal instances
    :type seed: int
    :rtype: Instance | ChainInstance
    :raises ParameterError: On unknown kinds, inconsistent sizes or a
        negative seed

    """
    if kind not in KINDS:
        raise ParameterError('unknown instance kind {!r}'.format(kind))
    if (k is None) == (chain_sizes is None):
        raise ParameterError('exactly one of k and chain sizes is required')
    if k is not None and not 2 <= k <= n:
        raise ParameterError('need 2 <= k <= n, got k={} n={}'.format(k, n))
    if chain_sizes is not None:
        if not chain_sizes or min(chain_sizes) < 1:
            raise ParameterError('chain sizes must be positive')
        if sum(chain_sizes) > n:
            raise ParameterError('chains need more vertices than n={}'.format(n))
    if seed < 0:
        raise ParameterError('seed must be nonnegative, got {}'.format(seed))

    rng = np.random.default_rng(seed)
    raw = _sample_costs(kind, n, rng)
    costs = metric_closure(CostMatrix(raw.tolist()))

    if k is not None:
        order = rng.choice(n, size=k, replace=False)
        logger.debug('Generated %s instance n=%d k=%d seed=%d', kind, n, k, seed)
        return Instance(costs, OrderConstraint(tuple(int(d) for d in order)))

    picked = [int(v) for v in rng.choice(n, size=sum(chain_sizes), replace=False)]
    chains = []
    for size in chain_sizes:
        chains.append(tuple(picked[:size]))
        picked = picked[size:]
    logger.debug(
        'Generated %s chain instance n=%d chains=%s seed=%d',
        kind, n, chain_sizes, seed)
    return ChainInstance(costs, tuple(chains))
