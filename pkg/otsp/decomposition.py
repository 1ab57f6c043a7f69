"""Decompose a fractional stroll into a convex combination of spanning trees.

The stroll is closed by one unit of the edge ``{s, t}``, scaled to an
integral multigraph and reduced vertex by vertex through complete splitting
off, always picking the remaining vertex of least coverage. Undoing the
splits in reverse order turns the trivial family on ``{s, t}`` back into a
family of trees of the original support.

"""

import logging
import os

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import networkx as nx

from otsp.errors import (
    ConsistencyError, PreconditionError, ResourceError)
from otsp.flow import CAPACITY, capacity_graph, common_denominator, minimum_cut
from otsp.relaxation import edge, stroll_problems
from otsp.simplex import EQ, OPTIMAL, Constraint, solve_lp

logger = logging.getLogger(__name__)

# Largest common denominator accepted when scaling a stroll to integers
DEFAULT_SCALE_CAP = 2 ** 64

# Support size up to which the brute-force decomposition is attempted
BRUTEFORCE_MAX_EDGES = 16


def scale_cap():
    """Scale cap, overridable through ``OTSP_SCALE_CAP``."""
    value = os.environ.get('OTSP_SCALE_CAP')
    return int(value) if value else DEFAULT_SCALE_CAP


def tree_vertices(edges):
    return frozenset(v for e in edges for v in e)


@dataclass(frozen=True)
class WeightedTree:

    """Tree ``edges`` (``(u, v)`` with ``u < v``) with probability ``mu``."""

    edges: frozenset
    mu: Fraction

    @property
    def vertices(self):
        return tree_vertices(self.edges)

    def cost(self, costs):
        return sum(costs(u, v) for u, v in self.edges)


@dataclass(frozen=True)
class WeightedTreeFamily:

    """Probability distribution over spanning trees of one stroll's support.

    :param s: Stroll start
    :param t: Stroll end
    :param trees: Trees in canonical order (sorted edge lists)
    :param index: Position of the stroll in the order, if known

    """

    s: int
    t: int
    trees: tuple
    index: int = None

    def coverage(self, v):
        """Probability that ``v`` belongs to a sampled tree."""
        return sum(
            (tree.mu for tree in self.trees if v in tree.vertices),
            Fraction(0))

    def edge_weight(self, e):
        return sum(
            (tree.mu for tree in self.trees if e in tree.edges), Fraction(0))

    def expected_cost(self, costs):
        return sum(
            (tree.mu * tree.cost(costs) for tree in self.trees), Fraction(0))

    def total_weight(self):
        return sum((tree.mu for tree in self.trees), Fraction(0))


class VerificationReport(NamedTuple):

    """Outcome of :func:`verify_decomposition`."""

    ok: bool
    problems: list


@dataclass(frozen=True)
class ClosedStroll:

    """Stroll plus one unit of ``{root, anchor}``; every coverage is exact."""

    root: int
    anchor: int
    x: dict
    y: dict


def close_stroll(point):
    """Add one unit of the edge ``{s, t}`` to a feasible stroll.

    :param point: Feasible fractional stroll
    :type point: otsp.relaxation.StrollPoint
    :rtype: ClosedStroll
    :raises PreconditionError: If ``point`` is not a feasible stroll
    :raises ConsistencyError: If the closed point misses a connectivity bound

    """
    problems = stroll_problems(point)
    if problems:
        raise PreconditionError(
            'not a feasible stroll: ' + '; '.join(problems))
    s, t = point.s, point.t
    x = dict(point.x)
    x[edge(s, t)] = x.get(edge(s, t), Fraction(0)) + 1
    y = dict(point.y)
    y[s] = y[t] = Fraction(1)

    degrees = {}
    for (a, b), value in x.items():
        degrees[a] = degrees.get(a, 0) + value
        degrees[b] = degrees.get(b, 0) + value
    for v, coverage in y.items():
        if degrees.get(v, 0) != 2 * coverage:
            raise ConsistencyError('degree identity fails at {}'.format(v))
    for v, coverage in sorted(y.items()):
        if v == s:
            continue
        cut = minimum_cut(sorted(y), x, [s], [v])
        if cut.value < 2 * coverage:
            raise ConsistencyError(
                'closed stroll has a cut of {} around {}'.format(cut.value, v))
    return ClosedStroll(s, t, x, y)


def _neighbors(mult, w):
    found = []
    for (a, b), count in mult.items():
        if w == a:
            found.append((b, count))
        elif w == b:
            found.append((a, count))
    return sorted(found)


def _apply_split(mult, w, a, b, amount):
    for e in (edge(w, a), edge(w, b)):
        mult[e] -= amount
        if not mult[e]:
            del mult[e]
    mult[edge(a, b)] = mult.get(edge(a, b), 0) + amount


def _cut_between(graph, sources, sinks):
    graph = graph.copy()
    graph.add_node('source')
    graph.add_node('sink')
    for u in sources:
        graph.add_edge('source', u)
    for u in sinks:
        graph.add_edge(u, 'sink')
    return nx.minimum_cut_value(graph, 'source', 'sink', capacity=CAPACITY)


def _max_split(mult, demand, root, w, a, b, limit):
    """Largest amount of ``(wa, wb)`` that keeps every requirement."""
    graph = capacity_graph(demand, mult)
    best = limit
    for v, need in sorted(demand.items()):
        if v in (root, w) or not need:
            continue
        if v not in (a, b):
            value = _cut_between(graph, {v, w}, {root, a, b})
            best = min(best, (value - 2 * need) // 2)
        if root not in (a, b):
            value = _cut_between(graph, {v, a, b}, {root, w})
            best = min(best, (value - 2 * need) // 2)
        if best <= 0:
            return 0
    return best


def _split_completely(mult, demand, root, w):
    splits = []
    while True:
        around = _neighbors(mult, w)
        if not around:
            return splits
        progress = False
        for first in range(len(around)):
            for second in range(first + 1, len(around)):
                a, b = around[first][0], around[second][0]
                limit = min(mult.get(edge(w, a), 0), mult.get(edge(w, b), 0))
                if not limit:
                    continue
                amount = _max_split(mult, demand, root, w, a, b, limit)
                if amount:
                    _apply_split(mult, w, a, b, amount)
                    splits.append((a, b, amount))
                    progress = True
        if not progress:
            raise ConsistencyError(
                'no admissible splitting at vertex {}'.format(w))


def _reroute(edges, w, chosen):
    """Replace each chosen edge ``ab`` by ``aw, wb`` and break the cycles.

    :returns: New tree edges and the neighbors whose ``w``-edge was dropped

    """
    rest = edges.difference(chosen)
    components = nx.utils.UnionFind(tree_vertices(edges))
    for a, b in rest:
        components.union(a, b)
    reached = set()
    kept = set()
    dropped = []
    for a, b in sorted(chosen):
        for z in (a, b):
            component = components[z]
            if component in reached:
                dropped.append(z)
            else:
                reached.add(component)
                kept.add(edge(w, z))
    return frozenset(rest | kept), dropped


def _lift(classes, w, splits):
    """Undo the complete splitting at ``w`` on a family of tree classes."""
    needed = {}
    for a, b, amount in splits:
        needed[edge(a, b)] = needed.get(edge(a, b), 0) + amount

    marks = [{} for _ in classes]
    for e, need in needed.items():
        for index, (edges, count) in enumerate(classes):
            if not need:
                break
            if e in edges:
                take = min(need, count)
                marks[index][e] = take
                need -= take
        if need:
            raise ConsistencyError(
                'not enough copies of {} to undo splits at {}'.format(e, w))

    lifted = []
    free = []
    pendants = []
    for (edges, count), designated in zip(classes, marks):
        bounds = sorted(set(designated.values()) | {0, count})
        for low, high in zip(bounds, bounds[1:]):
            chosen = [e for e, amount in designated.items() if amount >= high]
            if not chosen:
                free.append([edges, high - low])
                continue
            tree, dropped = _reroute(edges, w, chosen)
            lifted.append([tree, high - low])
            pendants.extend((z, high - low) for z in dropped)

    for z, count in pendants:
        while count:
            slot = next(
                (entry for entry in free
                 if entry[1] and z in tree_vertices(entry[0])), None)
            if slot is None:
                raise ConsistencyError(
                    'cannot attach {} to a tree through {}'.format(w, z))
            take = min(count, slot[1])
            lifted.append([slot[0] | {edge(w, z)}, take])
            slot[1] -= take
            count -= take
    lifted.extend(entry for entry in free if entry[1])
    return lifted


def _family(s, t, classes, denominator, index):
    merged = {}
    for edges, count in classes:
        merged[edges] = merged.get(edges, 0) + count
    trees = [
        WeightedTree(edges, Fraction(count, denominator))
        for edges, count in merged.items() if count
    ]
    trees.sort(key=lambda tree: sorted(tree.edges))
    return WeightedTreeFamily(s, t, tuple(trees), index)


def decompose(point, cap=None, fallback=True):
    """Write a feasible stroll as a convex combination of trees.

    :param point: Feasible fractional stroll
    :type point: otsp.relaxation.StrollPoint
    :param cap: Largest common denominator accepted; see :func:`scale_cap`
    :type cap: int | None
    :param fallback: Retry with :func:`decompose_bruteforce` on small supports
        if splitting off fails
    :type fallback: bool
    :rtype: WeightedTreeFamily
    :raises PreconditionError: If ``point`` is not a feasible stroll
    :raises ResourceError: If the common denominator exceeds the cap
    :raises ConsistencyError: If the result fails verification

    """
    closed = close_stroll(point)
    cap = scale_cap() if cap is None else cap
    denominator = common_denominator(
        list(closed.x.values()) + list(closed.y.values()))
    if denominator > cap:
        raise ResourceError(
            'common denominator {} exceeds the scale cap {}'.format(
                denominator, cap),
            {'denominator': denominator, 'cap': cap})

    try:
        family = _split_and_lift(point, closed, denominator)
    except ConsistencyError as error:
        if not fallback or len(point.x) > BRUTEFORCE_MAX_EDGES:
            raise
        logger.warning(
            'Splitting off failed on stroll %s (%s); using brute force',
            point.index, error)
        return decompose_bruteforce(point)

    report = verify_decomposition(point, family)
    if not report.ok:
        raise ConsistencyError(
            'decomposition fails verification: ' + '; '.join(report.problems))
    logger.debug(
        'Stroll %s decomposed into %d trees (scale %d)',
        point.index, len(family.trees), denominator)
    return family


def _split_and_lift(point, closed, denominator):
    root, anchor = closed.root, closed.anchor
    mult = {
        e: int(value * denominator) for e, value in closed.x.items() if value
    }
    demand = {
        v: int(value * denominator) for v, value in closed.y.items() if value
    }
    eliminated = sorted(
        (v for v in demand if v not in (root, anchor)),
        key=lambda v: (demand[v], v))

    records = []
    for w in eliminated:
        splits = _split_completely(mult, demand, root, w)
        records.append((w, splits))
        del demand[w]

    base = edge(root, anchor)
    if set(mult) != {base} or mult[base] != 2 * denominator:
        raise ConsistencyError(
            'splitting off left {} instead of a doubled root edge'.format(mult))

    classes = [[frozenset({base}), denominator]]
    for w, splits in reversed(records):
        classes = _lift(classes, w, splits)
    return _family(point.s, point.t, classes, denominator, point.index)


def _is_spanning_tree(edges, required):
    vertices = tree_vertices(edges)
    if not required <= vertices or len(edges) != len(vertices) - 1:
        return False
    components = nx.utils.UnionFind(vertices)
    for a, b in edges:
        if components[a] == components[b]:
            return False
        components.union(a, b)
    return True


def decompose_bruteforce(point):
    """Decompose by enumerating every tree of a small support.

    Tree weights come from an exact feasibility LP over all candidate trees;
    the returned vertex solution has few positive weights.

    :raises ResourceError: If the support has more than 16 edges
    :raises ConsistencyError: If no convex combination exists

    """
    support = sorted(e for e, value in point.x.items() if value)
    if len(support) > BRUTEFORCE_MAX_EDGES:
        raise ResourceError(
            'brute force needs at most {} support edges, got {}'.format(
                BRUTEFORCE_MAX_EDGES, len(support)),
            {'edges': len(support)})
    required = frozenset({point.s, point.t})
    candidates = []
    for mask in range(1, 1 << len(support)):
        edges = frozenset(
            e for bit, e in enumerate(support) if mask >> bit & 1)
        if _is_spanning_tree(edges, required):
            candidates.append(edges)

    constraints = []
    for e in support:
        coefs = {j: 1 for j, edges in enumerate(candidates) if e in edges}
        constraints.append(Constraint(coefs, EQ, point.x[e]))
    for v, coverage in sorted(point.y.items()):
        if v in required:
            continue
        coefs = {
            j: 1 for j, edges in enumerate(candidates)
            if v in tree_vertices(edges)
        }
        constraints.append(Constraint(coefs, EQ, coverage))
    constraints.append(Constraint({j: 1 for j in range(len(candidates))}, EQ, 1))
    result = solve_lp(len(candidates), constraints, {})
    if result.status != OPTIMAL:
        raise ConsistencyError(
            'no tree decomposition of stroll {}'.format(point.index))
    trees = [
        WeightedTree(edges, weight)
        for edges, weight in zip(candidates, result.values) if weight
    ]
    trees.sort(key=lambda tree: sorted(tree.edges))
    logger.debug(
        'Brute force: %d candidate trees, %d used', len(candidates), len(trees))
    return WeightedTreeFamily(point.s, point.t, tuple(trees), point.index)


def verify_decomposition(point, family):
    """Check the edge, coverage and weight identities of a family.

    :type point: otsp.relaxation.StrollPoint
    :type family: WeightedTreeFamily
    :rtype: VerificationReport

    """
    problems = []
    required = frozenset({point.s, point.t})
    if (family.s, family.t) != (point.s, point.t):
        problems.append('family endpoints ({}, {}) differ from stroll'.format(
            family.s, family.t))
    for index, tree in enumerate(family.trees):
        if tree.mu <= 0:
            problems.append('tree {} has weight {}'.format(index, tree.mu))
        if not _is_spanning_tree(tree.edges, required):
            problems.append(
                'tree {} is not a tree containing s and t'.format(index))
    total = family.total_weight()
    if total != 1:
        problems.append('weights sum to {}'.format(total))
    edges = set(point.x) | {e for tree in family.trees for e in tree.edges}
    for e in sorted(edges):
        weight = family.edge_weight(e)
        if weight != point.x.get(e, 0):
            problems.append('edge {} carries {} instead of {}'.format(
                e, weight, point.x.get(e, 0)))
    y = point.y
    vertices = set(y) | {v for tree in family.trees for v in tree.vertices}
    for v in sorted(vertices - required):
        coverage = family.coverage(v)
        if coverage != y.get(v, 0):
            problems.append('vertex {} covered {} instead of {}'.format(
                v, coverage, y.get(v, 0)))
    return VerificationReport(not problems, problems)


def decompose_all(solution, cap=None):
    """Decompose every stroll of a relaxation solution, in order."""
    return tuple(decompose(point, cap) for point in solution.strolls)
