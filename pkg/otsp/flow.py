"""Exact minimum cuts on rational capacities.

Capacities are scaled by the least common multiple of their denominators so
that networkx works on integers; cut values come back as fractions.

"""

import math

from fractions import Fraction
from typing import NamedTuple

import networkx as nx

CAPACITY = 'capacity'


class Cut(NamedTuple):

    """Minimum cut: its value and the side holding the source."""

    value: Fraction
    side: frozenset


def common_denominator(values):
    """Least common multiple of the denominators of ``values``."""
    denominator = 1
    for value in values:
        denominator = math.lcm(denominator, Fraction(value).denominator)
    return denominator


def capacity_graph(nodes, weights, factor=1):
    """Undirected graph with integer capacities ``factor * weight``.

    :param nodes: Vertices to include, isolated or not
    :type nodes: iterable
    :param weights: ``{(u, v): weight}``; zero weights are skipped
    :type weights: dict
    :param factor: Integer multiplier making every capacity integral
    :type factor: int
    :rtype: networkx.Graph

    """
    graph = nx.Graph()
    graph.add_nodes_from(nodes)
    for (u, v), weight in weights.items():
        if not weight:
            continue
        scaled = Fraction(weight) * factor
        if graph.has_edge(u, v):
            graph[u][v][CAPACITY] += int(scaled)
        else:
            graph.add_edge(u, v, **{CAPACITY: int(scaled)})
    return graph


def minimum_cut(nodes, weights, sources, sinks):
    """Minimum cut separating every vertex of ``sources`` from ``sinks``.

    The returned side is the set of vertices reachable from the sources in
    the residual graph of a maximum flow.

    :param nodes: Vertices of the graph
    :param weights: ``{(u, v): weight}`` with rational weights
    :type weights: dict
    :param sources: Vertices kept on the returned side
    :type sources: iterable
    :param sinks: Vertices kept off the returned side
    :type sinks: iterable
    :rtype: Cut

    """
    factor = common_denominator(weights.values())
    graph = capacity_graph(nodes, weights, factor)
    source = ('source',)
    sink = ('sink',)
    graph.add_node(source)
    graph.add_node(sink)
    for u in sources:
        graph.add_edge(source, u)
    for u in sinks:
        graph.add_edge(u, sink)
    value, (side, _) = nx.minimum_cut(graph, source, sink, capacity=CAPACITY)
    side = frozenset(u for u in side if u != source)
    return Cut(Fraction(value, factor), side)


def cut_weight(weights, side):
    """Total weight of the edges with exactly one endpoint in ``side``."""
    return sum(
        (Fraction(weight) for (u, v), weight in weights.items()
         if (u in side) != (v in side)),
        Fraction(0))


def global_minimum_cut(nodes, weights):
    """Value of a global minimum cut, from a Gomory-Hu tree.

    Disconnected graphs have a global minimum cut of zero.

    :rtype: Fraction

    """
    nodes = list(nodes)
    if len(nodes) < 2:
        return Fraction(0)
    factor = common_denominator(weights.values())
    graph = capacity_graph(nodes, weights, factor)
    if not nx.is_connected(graph):
        return Fraction(0)
    tree = nx.gomory_hu_tree(graph, capacity=CAPACITY)
    value = min(data['weight'] for _, _, data in tree.edges(data=True))
    return Fraction(value, factor)


def support_components(nodes, weights):
    """Connected components of the nonzero-weight edges over ``nodes``.

    :rtype: list(frozenset)

    """
    graph = capacity_graph(nodes, weights)
    return [frozenset(part) for part in nx.connected_components(graph)]
