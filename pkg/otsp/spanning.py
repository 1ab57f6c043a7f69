"""Spanning trees, Q-joins, Euler circuits and the Christofides heuristic."""

import logging

from collections import Counter
from dataclasses import dataclass
from functools import lru_cache

import networkx as nx

from otsp.errors import ConsistencyError, ParameterError, PreconditionError
from otsp.instance import Tour
from otsp.relaxation import edge

logger = logging.getLogger(__name__)

# Largest Q handled by the subset dynamic program
SUBSET_MATCHING_CAP = 22

MATCHING_METHODS = ('blossom', 'subsets')


class EdgeMultiset:

    """Immutable multiset of undirected edges ``(u, v)`` with ``u < v``."""

    def __init__(self, edges=()):
        counts = Counter()
        for u, v in edges:
            if u == v:
                raise PreconditionError('loop at vertex {}'.format(u))
            counts[edge(u, v)] += 1
        self._counts = counts

    @classmethod
    def from_counts(cls, counts):
        multiset = cls()
        multiset._counts = Counter({e: m for e, m in counts.items() if m > 0})
        return multiset

    def __add__(self, other):
        return EdgeMultiset.from_counts(self._counts + other._counts)

    def __sub__(self, other):
        missing = other._counts - self._counts
        if missing:
            raise PreconditionError(
                'edges {} are not in the multiset'.format(sorted(missing)))
        return EdgeMultiset.from_counts(self._counts - other._counts)

    def __len__(self):
        return sum(self._counts.values())

    def __eq__(self, other):
        return isinstance(other, EdgeMultiset) and self._counts == other._counts

    def __repr__(self):
        return 'EdgeMultiset({})'.format(sorted(self._counts.elements()))

    def __iter__(self):
        return iter(sorted(self._counts.elements()))

    def count(self, e):
        return self._counts[edge(*e)]

    def items(self):
        return sorted(self._counts.items())

    def degrees(self):
        degrees = Counter()
        for (u, v), m in self._counts.items():
            degrees[u] += m
            degrees[v] += m
        return degrees

    def vertices(self):
        return sorted({v for e in self._counts for v in e})

    def odd_vertices(self):
        return sorted(v for v, d in self.degrees().items() if d % 2)

    def cost(self, costs):
        return sum(costs(u, v) * m for (u, v), m in self._counts.items())

    def to_graph(self, nodes=()):
        graph = nx.MultiGraph()
        graph.add_nodes_from(nodes)
        graph.add_edges_from(self)
        return graph


@dataclass(frozen=True)
class RootedTree:

    """Minimum spanning tree with every edge oriented toward ``root``.

    ``parent[v]`` is the other end of ``e_v``, the unique edge leaving ``v``
    on its path to the root.

    """

    root: int
    edges: tuple
    parent: dict
    cost: int

    def out_edge(self, v):
        """``e_v`` for ``v != root``."""
        return edge(v, self.parent[v])

    def out_cost(self, costs, v):
        return costs(v, self.parent[v])

    def multiset(self):
        return EdgeMultiset(self.edges)


def minimum_spanning_tree(costs, root=0):
    """Kruskal's MST, ties broken lexicographically, oriented toward ``root``.

    :param costs: Metric costs
    :type costs: otsp.instance.CostMatrix
    :param root: Vertex the tree is oriented toward
    :type root: int
    :rtype: RootedTree

    """
    if not 0 <= root < costs.n:
        raise ParameterError('root {} out of range'.format(root))
    components = nx.utils.UnionFind(range(costs.n))
    chosen = []
    for u, v in sorted(costs.edges(), key=lambda e: (costs(*e), e)):
        if components[u] != components[v]:
            components.union(u, v)
            chosen.append((u, v))
    tree = nx.Graph()
    tree.add_nodes_from(range(costs.n))
    tree.add_edges_from(chosen)
    parent = {
        child: father
        for father, child in nx.bfs_edges(tree, root, sort_neighbors=sorted)
    }
    cost = sum(costs(u, v) for u, v in chosen)
    logger.debug('MST rooted at %d costs %d', root, cost)
    return RootedTree(root, tuple(chosen), parent, cost)


def matching_by_subsets(costs, q):
    """Exact minimum cost perfect matching on ``q`` by dynamic programming.

    :param q: Even number of vertices
    :type q: sequence(int)
    :returns: Cost and matched pairs
    :rtype: tuple(int, list(tuple(int, int)))

    """
    q = sorted(q)
    if len(q) % 2:
        raise ParameterError('odd number of vertices to match')
    if len(q) > SUBSET_MATCHING_CAP:
        raise ParameterError('subset matching supports at most {} vertices'
                             .format(SUBSET_MATCHING_CAP))

    @lru_cache(maxsize=None)
    def best(mask):
        if not mask:
            return 0, ()
        first = (mask & -mask).bit_length() - 1
        rest = mask & ~(1 << first)
        answer = None
        for other in range(first + 1, len(q)):
            if rest >> other & 1:
                cost, pairs = best(rest & ~(1 << other))
                cost += costs(q[first], q[other])
                if answer is None or cost < answer[0]:
                    answer = (cost, ((q[first], q[other]),) + pairs)
        return answer

    cost, pairs = best((1 << len(q)) - 1)
    return cost, list(pairs)


def min_cost_q_join(costs, q, method='blossom'):
    """Minimum cost Q-join as a perfect matching on ``q`` under metric costs.

    :param costs: Metric costs
    :type costs: otsp.instance.CostMatrix
    :param q: Vertex set of even size
    :type q: iterable(int)
    :param method: ``blossom`` (networkx) or ``subsets`` (exact DP)
    :type method: str
    :returns: Edges whose odd-degree vertices are exactly ``q``
    :rtype: EdgeMultiset
    :raises ParameterError: If ``|q|`` is odd

    """
    q = sorted(set(q))
    if len(q) % 2:
        raise ParameterError('|Q| = {} is odd'.format(len(q)))
    if method not in MATCHING_METHODS:
        raise ParameterError('unknown matching method {!r}'.format(method))
    if not q:
        return EdgeMultiset()
    if method == 'subsets':
        _, pairs = matching_by_subsets(costs, q)
        return EdgeMultiset(pairs)

    graph = nx.Graph()
    for index, u in enumerate(q):
        for v in q[index + 1:]:
            graph.add_edge(u, v, weight=costs(u, v))
    pairs = nx.min_weight_matching(graph)
    if 2 * len(pairs) != len(q):
        if len(q) > SUBSET_MATCHING_CAP:
            raise ConsistencyError('matching on Q is not perfect')
        logger.warning('Blossom matching not perfect; using subset matching')
        _, pairs = matching_by_subsets(costs, q)
    return EdgeMultiset(pairs)


def euler_circuit(multiset, source):
    """Vertex sequence of an Euler circuit of ``multiset`` from ``source``.

    The returned list starts and ends at ``source``.

    :raises PreconditionError: If the multigraph is not Eulerian

    """
    graph = multiset.to_graph()
    if source not in graph or not nx.is_eulerian(graph):
        raise PreconditionError('multigraph is not Eulerian from {}'.format(
            source))
    walk = [source]
    walk.extend(v for _, v in nx.eulerian_circuit(graph, source=source))
    return walk


def shortcut(walk):
    """Keep the first occurrence of every vertex of a closed walk."""
    seen = set()
    cycle = []
    for v in walk:
        if v not in seen:
            seen.add(v)
            cycle.append(v)
    return cycle


def christofides(costs, start=0):
    """Christofides-Serdyukov tour for metric TSP.

    :type costs: otsp.instance.CostMatrix
    :rtype: otsp.instance.Tour
    :raises ParameterError: If there are fewer than 3 vertices

    """
    if costs.n < 3:
        raise ParameterError('Christofides needs n >= 3, got {}'.format(costs.n))
    tree = minimum_spanning_tree(costs, start).multiset()
    join = min_cost_q_join(costs, tree.odd_vertices())
    cycle = shortcut(euler_circuit(tree + join, start))
    tour = Tour.from_cycle(costs, cycle, start)
    logger.debug(
        'Christofides: MST %d, matching %d, tour %d',
        tree.cost(costs), join.cost(costs), tour.cost)
    return tour
