"""Stroll LP relaxation of the ordered TSP, solved by cutting planes.

Each pair of consecutive ordered vertices ``d_i, d_{i+1}`` gets a fractional
stroll ``x^i`` over the edges of the graph that avoids every other ordered
vertex. Coverage ``y^i_v`` is implied by degrees, ``y^i_v = x^i(delta(v)) / 2``.
The cut constraints are added lazily from two separation families; the
model is re-solved from scratch after every round, with every optimum
certified exactly.

"""

import logging

from dataclasses import dataclass, field
from fractions import Fraction

from otsp.errors import ConsistencyError, InfeasibleError, ResourceError
from otsp.flow import (
    Cut,
    global_minimum_cut,
    minimum_cut,
    support_components,
)
from otsp.simplex import EQ, GE, HIGHS, OPTIMAL, Constraint, solve_lp

logger = logging.getLogger(__name__)

# Rounds allowed per (vertex, stroll) pair
ROUND_FACTOR = 10

ST_CUT = 'st'
VERTEX_CUT = 'vertex'

HALF = Fraction(1, 2)


def edge(u, v):
    """Canonical ``(min, max)`` key of an undirected edge."""
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class StrollPoint:

    """Fractional stroll from ``s`` to ``t``.

    :param index: Position ``i`` of the stroll in the order (0-based)
    :param s: Start vertex ``d_i``
    :param t: End vertex ``d_{i+1}``
    :param x: Edge values ``{(u, v): Fraction}`` on the support, ``u < v``
    :param n: Number of vertices of the instance

    """

    index: int
    s: int
    t: int
    x: dict
    n: int

    def degree(self, v):
        """``x(delta(v))``."""
        return sum(
            (value for (a, b), value in self.x.items() if v in (a, b)),
            Fraction(0))

    @property
    def y(self):
        """Coverage ``{v: y_v}`` of every vertex with nonzero degree."""
        degrees = {}
        for (a, b), value in self.x.items():
            degrees[a] = degrees.get(a, 0) + value
            degrees[b] = degrees.get(b, 0) + value
        return {v: Fraction(value) / 2 for v, value in degrees.items() if value}

    def cost(self, costs):
        """``c^T x``."""
        return sum(
            (costs(u, v) * value for (u, v), value in self.x.items()),
            Fraction(0))

    def support_vertices(self):
        return sorted({v for e in self.x for v in e})


@dataclass(frozen=True)
class CutRow:

    """Separated cut for one stroll.

    ``st`` rows read ``x^i(delta(S)) >= 1``; ``vertex`` rows read
    ``x^i(delta(S)) - x^i(delta(v)) >= 0``.

    """

    stroll: int
    kind: str
    side: frozenset
    violation: Fraction
    vertex: int = None


@dataclass(frozen=True)
class RelaxationSolution:

    """Optimal point of the stroll LP.

    :param strolls: One :class:`StrollPoint` per ``i``
    :param objective: ``c_LP``, the sum of stroll costs
    :param rounds: Cutting-plane rounds performed
    :param cuts: Cut rows in the final model
    :param pivots: Simplex pivots over all rounds

    """

    strolls: tuple
    objective: Fraction
    rounds: int = 0
    cuts: int = 0
    pivots: int = 0
    cut_rows: tuple = field(default=(), repr=False)

    def coverage(self, v):
        """``sum_i y^i_v``."""
        return sum(
            (point.y.get(v, Fraction(0)) for point in self.strolls), Fraction(0))


@dataclass(frozen=True)
class HeldKarpCertificate:

    """Aggregate ``sum_i x^i`` with its verified Held-Karp properties."""

    x: dict
    min_cut: Fraction
    degrees_ok: bool


class _Model:

    """Variable layout of the stroll LP for one instance."""

    def __init__(self, instance):
        self.instance = instance
        order = instance.order
        self.columns = []
        self.index = {}
        ordered = set(order)
        for i in range(order.k):
            s, t = order.stroll_ends(i)
            for u, v in instance.costs.edges():
                banned = (u in ordered and u not in (s, t)) or \
                    (v in ordered and v not in (s, t))
                if banned:
                    continue
                self.index[(i, u, v)] = len(self.columns)
                self.columns.append((i, u, v))

    def degree_row(self, i, v):
        coefs = {}
        for w in range(self.instance.n):
            column = self.index.get((i,) + edge(v, w)) if w != v else None
            if column is not None:
                coefs[column] = 1
        return coefs

    def cut_row(self, i, side):
        coefs = {}
        for w in side:
            for z in range(self.instance.n):
                if z in side:
                    continue
                column = self.index.get((i,) + edge(w, z))
                if column is not None:
                    coefs[column] = coefs.get(column, 0) + 1
        return coefs

    def base_constraints(self):
        order = self.instance.order
        constraints = []
        for i in range(order.k):
            s, t = order.stroll_ends(i)
            constraints.append(Constraint(self.degree_row(i, s), EQ, 1))
            constraints.append(Constraint(self.degree_row(i, t), EQ, 1))
        ordered = set(order)
        for v in range(self.instance.n):
            if v in ordered:
                continue
            coefs = {}
            for i in range(order.k):
                coefs.update(self.degree_row(i, v))
            constraints.append(Constraint(coefs, EQ, 2))
        return constraints

    def constraint_for(self, cut):
        coefs = self.cut_row(cut.stroll, cut.side)
        if cut.kind == ST_CUT:
            return Constraint(coefs, GE, 1)
        for column, value in self.degree_row(cut.stroll, cut.vertex).items():
            coefs[column] = coefs.get(column, 0) - value
        return Constraint(coefs, GE, 0)

    def objective(self):
        costs = self.instance.costs
        return {
            column: costs(u, v)
            for column, (_, u, v) in enumerate(self.columns) if costs(u, v)
        }

    def points(self, values):
        order = self.instance.order
        supports = [{} for _ in range(order.k)]
        for column, value in enumerate(values):
            if value:
                i, u, v = self.columns[column]
                supports[i][(u, v)] = value
        return tuple(
            StrollPoint(i, *order.stroll_ends(i), x=supports[i], n=self.instance.n)
            for i in range(order.k))


def separate(point):
    """Most violated cut of each family for one stroll.

    A vertex cut off from ``s`` and ``t`` gets its own component as a zero cut.
    Flows only run for vertices whose coverage can beat the best cut so far.

    :param point: Fractional stroll
    :type point: StrollPoint
    :returns: Zero, one or two cuts; ``st`` family first
    :rtype: list(CutRow)

    """
    nodes = range(point.n)
    component = {}
    for part in support_components(nodes, point.x):
        for v in part:
            component[v] = part
    found = []
    if point.t in component[point.s]:
        cut = minimum_cut(nodes, point.x, [point.s], [point.t])
    else:
        cut = Cut(Fraction(0), component[point.s])
    if cut.value < 1:
        found.append(CutRow(point.index, ST_CUT, cut.side, 1 - cut.value))

    best = None
    for v, coverage in sorted(point.y.items()):
        if v in (point.s, point.t):
            continue
        if best is not None and 2 * coverage <= best.violation:
            continue
        part = component[v]
        if point.s in part or point.t in part:
            cut = minimum_cut(nodes, point.x, [v], [point.s, point.t])
        else:
            cut = Cut(Fraction(0), part)
        violation = 2 * coverage - cut.value
        if violation > 0 and (best is None or violation > best.violation):
            best = CutRow(point.index, VERTEX_CUT, cut.side, violation, v)
    if best is not None:
        found.append(best)
    return found


def stroll_problems(point):
    """Every violated stroll polytope condition of ``point``.

    :rtype: list(str)

    """
    problems = []
    for e, value in sorted(point.x.items()):
        if value < 0:
            problems.append('negative value {} on edge {}'.format(value, e))
    y = point.y
    for end in (point.s, point.t):
        if y.get(end, 0) != HALF:
            problems.append('coverage of endpoint {} is {}, expected 1/2'.format(
                end, y.get(end, 0)))
    for v, coverage in y.items():
        if coverage > 1:
            problems.append('coverage of {} exceeds 1'.format(v))
    for cut in separate(point):
        if cut.kind == ST_CUT:
            problems.append('s-t cut {} has value below 1'.format(
                sorted(cut.side)))
        else:
            problems.append(
                'cut {} around {} is below twice its coverage'.format(
                    sorted(cut.side), cut.vertex))
    return problems


def solve_relaxation(instance, max_rounds=None, method=HIGHS):
    """Solve the stroll LP to optimality by lazy cut generation.

    :param instance: Ordered TSP instance with ``k >= 2``
    :type instance: otsp.instance.Instance
    :param max_rounds: Round cap; defaults to ``10 * n * k``
    :type max_rounds: int | None
    :param method: LP method, see :func:`otsp.simplex.solve_lp`
    :type method: str
    :rtype: RelaxationSolution
    :raises ResourceError: If the round cap is reached
    :raises InfeasibleError: If the model has no feasible point

    """
    instance.require_ordered()
    model = _Model(instance)
    if max_rounds is None:
        max_rounds = ROUND_FACTOR * instance.n * instance.k
    constraints = model.base_constraints()
    objective = model.objective()
    cuts = []
    pivots = 0
    for rounds in range(1, max_rounds + 1):
        result = solve_lp(
            len(model.columns), constraints, objective, method)
        pivots += result.pivots
        if result.status != OPTIMAL:
            raise InfeasibleError(
                'stroll LP is {} after {} cuts'.format(result.status, len(cuts)))
        strolls = model.points(result.values)
        new = [cut for point in strolls for cut in separate(point)]
        logger.debug(
            'Round %d: objective %s, %d new cuts', rounds, result.objective,
            len(new))
        if not new:
            logger.info(
                'Stroll LP converged: c_LP=%s after %d rounds and %d cuts',
                result.objective, rounds, len(cuts))
            return RelaxationSolution(
                strolls, result.objective, rounds, len(cuts), pivots,
                tuple(cuts))
        cuts.extend(new)
        constraints.extend(model.constraint_for(cut) for cut in new)
    raise ResourceError(
        'stroll LP did not converge within {} rounds'.format(max_rounds),
        {'rounds': max_rounds, 'cuts': len(cuts), 'pivots': pivots})


def solution_problems(instance, solution):
    """Every violated feasibility condition of a stroll LP solution.

    :rtype: list(str)

    """
    order = instance.order
    problems = []
    if len(solution.strolls) != order.k:
        return ['expected {} strolls, got {}'.format(
            order.k, len(solution.strolls))]
    ordered = set(order)
    for i, point in enumerate(solution.strolls):
        if (point.s, point.t) != order.stroll_ends(i):
            problems.append('stroll {} has endpoints ({}, {})'.format(
                i, point.s, point.t))
            continue
        for v in point.support_vertices():
            if v in ordered and v not in (point.s, point.t):
                problems.append(
                    'stroll {} touches ordered vertex {}'.format(i, v))
        problems.extend(
            'stroll {}: {}'.format(i, problem)
            for problem in stroll_problems(point))
    for v in range(instance.n):
        if v in ordered:
            continue
        coverage = solution.coverage(v)
        if coverage != 1:
            problems.append('vertex {} is covered {} times'.format(v, coverage))
    objective = sum(
        (point.cost(instance.costs) for point in solution.strolls), Fraction(0))
    if objective != solution.objective:
        problems.append('objective {} differs from recomputed {}'.format(
            solution.objective, objective))
    return problems


def held_karp_violations(n, x):
    """Degree and cut violations of ``x`` against the Held-Karp polytope.

    :param n: Number of vertices
    :param x: ``{(u, v): Fraction}``
    :returns: Problems plus the global minimum cut value
    :rtype: tuple(list(str), Fraction)

    """
    problems = []
    degrees = [Fraction(0)] * n
    for (u, v), value in x.items():
        degrees[u] += value
        degrees[v] += value
    for v, degree in enumerate(degrees):
        if degree != 2:
            problems.append('degree of {} is {}, expected 2'.format(v, degree))
    min_cut = global_minimum_cut(range(n), x)
    if n > 1 and min_cut < 2:
        problems.append('global minimum cut is {}, expected >= 2'.format(
            min_cut))
    return problems, min_cut


def aggregate_held_karp(solution, n=None):
    """Sum the strolls and certify the sum is Held-Karp feasible.

    :param solution: Stroll LP solution
    :type solution: RelaxationSolution
    :rtype: HeldKarpCertificate
    :raises ConsistencyError: If the sum violates a Held-Karp constraint

    """
    if n is None:
        n = solution.strolls[0].n
    total = {}
    for point in solution.strolls:
        for e, value in point.x.items():
            total[e] = total.get(e, Fraction(0)) + value
    problems, min_cut = held_karp_violations(n, total)
    if problems:
        raise ConsistencyError(
            'stroll sum is not Held-Karp feasible: ' + '; '.join(problems))
    return HeldKarpCertificate(total, min_cut, True)


def strolls_from_tour(instance, cycle):
    """Integral stroll LP point induced by an order-respecting tour.

    :param cycle: Spanning cycle visiting the ordered vertices in order
    :type cycle: sequence(int)
    :rtype: RelaxationSolution

    """
    order = instance.order
    cycle = list(cycle)
    start = cycle.index(order[0])
    cycle = cycle[start:] + cycle[:start]
    if order.k > 2 and cycle.index(order[1]) > cycle.index(order[2]):
        cycle = [cycle[0]] + cycle[:0:-1]
    elif order.k == 2 and order[1] not in cycle:
        raise InfeasibleError('tour misses ordered vertex {}'.format(order[1]))
    cycle.append(cycle[0])
    strolls = []
    position = 0
    for i in range(order.k):
        s, t = order.stroll_ends(i)
        end = len(cycle) - 1 if i == order.k - 1 else cycle.index(t, position)
        x = {}
        for a, b in zip(cycle[position:end], cycle[position + 1:end + 1]):
            x[edge(a, b)] = x.get(edge(a, b), Fraction(0)) + 1
        strolls.append(StrollPoint(i, s, t, x, instance.n))
        position = end
    objective = sum(
        (point.cost(instance.costs) for point in strolls), Fraction(0))
    return RelaxationSolution(tuple(strolls), objective)
