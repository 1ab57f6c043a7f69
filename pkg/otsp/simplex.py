"""Linear programs over the rationals.

Two methods share one interface. ``exact`` is a dense two-phase tableau
simplex on :class:`fractions.Fraction` entries. ``highs`` asks the HiGHS dual
simplex (through scipy) for a basic optimal point, rounds its primal and
dual values to nearby fractions and keeps them only when they pass an exact
optimality check: primal feasibility, dual feasibility and equal objectives.
Whatever the method, a returned optimum is exact; uncertified HiGHS answers
fall back to the tableau.

"""

import logging

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from scipy.optimize import linprog
from scipy.sparse import csr_matrix

from otsp.errors import ParameterError, ResourceError

logger = logging.getLogger(__name__)

EQ = '='
GE = '>='
LE = '<='

HIGHS = 'highs'
EXACT = 'exact'
METHODS = (HIGHS, EXACT)

# Consecutive degenerate pivots tolerated before switching to Bland's rule
DEGENERATE_STREAK = 50

# Pivot cap, as a multiple of rows + columns
PIVOT_FACTOR = 50

# Denominator bounds tried, in turn, when rounding HiGHS values to fractions
DENOMINATOR_LADDER = (2 ** 6, 10 ** 3, 10 ** 5, 10 ** 7)

HIGHS_TOLERANCE = 1e-10

OPTIMAL = 'optimal'
INFEASIBLE = 'infeasible'
UNBOUNDED = 'unbounded'


class Constraint(NamedTuple):

    """Sparse linear constraint ``sum(coefs[j] * x_j) <sense> rhs``."""

    coefs: dict
    sense: str
    rhs: Fraction


@dataclass
class LPResult:

    """Outcome of :func:`solve_lp`.

    :param status: ``optimal``, ``infeasible`` or ``unbounded``
    :param values: Value of every structural variable (optimal only)
    :param objective: Objective value (optimal only)
    :param pivots: Simplex iterations over both phases
    :param method: Method that produced the result

    """

    status: str
    values: list
    objective: Fraction
    pivots: int
    method: str = EXACT


class _Tableau:

    def __init__(self, rows, rhs, basis):
        self.rows = rows
        self.rhs = rhs
        self.basis = basis
        self.reduced = None
        self.value = Fraction(0)
        self.pivots = 0

    def price(self, costs):
        """Set the reduced-cost row for the cost vector ``costs``."""
        width = len(self.rows[0]) if self.rows else len(costs)
        reduced = list(costs) + [0] * (width - len(costs))
        value = Fraction(0)
        for row, rhs, basic in zip(self.rows, self.rhs, self.basis):
            weight = reduced[basic] if basic < len(reduced) else 0
            if not weight:
                continue
            for j, entry in enumerate(row):
                if entry:
                    reduced[j] -= weight * entry
            value += weight * rhs
        self.reduced = reduced
        self.value = value

    def pivot(self, r, c):
        row = self.rows[r]
        inverse = 1 / Fraction(row[c])
        support = [j for j, entry in enumerate(row) if entry]
        for j in support:
            row[j] = row[j] * inverse
        self.rhs[r] = self.rhs[r] * inverse
        for i, other in enumerate(self.rows):
            if i == r:
                continue
            factor = other[c]
            if not factor:
                continue
            for j in support:
                other[j] -= factor * row[j]
            self.rhs[i] -= factor * self.rhs[r]
        factor = self.reduced[c]
        if factor:
            for j in support:
                self.reduced[j] -= factor * row[j]
            self.value += factor * self.rhs[r]
        self.basis[r] = c
        self.pivots += 1

    def entering(self, allowed, bland):
        best = None
        for j in allowed:
            d = self.reduced[j]
            if d < 0:
                if bland:
                    return j
                if best is None or d < self.reduced[best]:
                    best = j
        return best

    def leaving(self, c):
        best = None
        best_ratio = None
        for i, row in enumerate(self.rows):
            entry = row[c]
            if entry > 0:
                ratio = self.rhs[i] / entry
                if (best is None or ratio < best_ratio
                        or (ratio == best_ratio
                            and self.basis[i] < self.basis[best])):
                    best = i
                    best_ratio = ratio
        return best

    def optimize(self, allowed, max_pivots):
        streak = 0
        while True:
            c = self.entering(allowed, streak >= DEGENERATE_STREAK)
            if c is None:
                return OPTIMAL
            r = self.leaving(c)
            if r is None:
                return UNBOUNDED
            streak = streak + 1 if self.rhs[r] == 0 else 0
            self.pivot(r, c)
            if self.pivots > max_pivots:
                raise ResourceError(
                    'simplex pivot cap of {} exceeded'.format(max_pivots),
                    {'pivots': self.pivots, 'rows': len(self.rows)})


def solve_lp(n_vars, constraints, objective, method=HIGHS):
    """Minimize ``objective . x`` subject to ``constraints`` and ``x >= 0``.

    :param n_vars: Number of structural variables
    :type n_vars: int
    :param constraints: Sparse constraints over variable indices
    :type constraints: list(Constraint)
    :param objective: Sparse cost vector ``{index: cost}``
    :type objective: dict
    :param method: ``highs`` (certified, with exact fallback) or ``exact``
    :type method: str
    :rtype: LPResult
    :raises ParameterError: On an unknown method
    :raises ResourceError: If the pivot cap of the exact simplex is exceeded

    """
    if method not in METHODS:
        raise ParameterError('unknown LP method {!r}'.format(method))
    if method == HIGHS and n_vars:
        result = _solve_highs(n_vars, constraints, objective)
        if result is not None:
            return result
    return _solve_exact(n_vars, constraints, objective)


def optimality_problems(n_vars, constraints, objective, values, duals):
    """Reasons why ``values`` and ``duals`` fail to prove optimality.

    ``duals`` holds one multiplier per constraint: nonnegative on ``>=``
    rows, nonpositive on ``<=`` rows, free on ``=`` rows. No problems means
    ``values`` is an optimal point, by weak duality.

    :rtype: list(str)

    """
    if len(values) != n_vars or len(duals) != len(constraints):
        return ['expected {} values and {} multipliers'.format(
            n_vars, len(constraints))]
    problems = []
    support = {}
    for j, value in enumerate(values):
        if value < 0:
            problems.append('x_{} is negative'.format(j))
        elif value:
            support[j] = value
    reduced = [Fraction(0)] * n_vars
    for j, cost in objective.items():
        reduced[j] += cost
    dual_value = Fraction(0)
    for index, ((coefs, sense, rhs), y) in enumerate(zip(constraints, duals)):
        lhs = sum(
            (value * support[j] for j, value in coefs.items() if j in support),
            Fraction(0))
        if (sense == EQ and lhs != rhs) or (sense == GE and lhs < rhs) or \
                (sense == LE and lhs > rhs):
            problems.append('row {} is violated'.format(index))
        if not y:
            continue
        if (sense == GE and y < 0) or (sense == LE and y > 0):
            problems.append('multiplier of row {} has the wrong sign'.format(
                index))
        for j, value in coefs.items():
            reduced[j] -= y * value
        dual_value += y * rhs
    for j, value in enumerate(reduced):
        if value < 0:
            problems.append('reduced cost of x_{} is negative'.format(j))
    primal_value = sum(
        (Fraction(cost) * support[j] for j, cost in objective.items()
         if j in support),
        Fraction(0))
    if primal_value != dual_value:
        problems.append('primal objective {} differs from dual {}'.format(
            primal_value, dual_value))
    return problems


def _matrix(rows, n_vars):
    if not rows:
        return None
    data = []
    indices = []
    indptr = [0]
    for coefs in rows:
        for j, value in sorted(coefs.items()):
            if value:
                indices.append(j)
                data.append(float(value))
        indptr.append(len(indices))
    return csr_matrix((data, indices, indptr), shape=(len(rows), n_vars))


def _solve_highs(n_vars, constraints, objective):
    """Certified HiGHS optimum, or ``None`` to fall back to the tableau."""
    equalities = []
    upper = []
    for index, (coefs, sense, rhs) in enumerate(constraints):
        if sense == EQ:
            equalities.append((index, coefs, float(rhs), 1))
        elif sense == LE:
            upper.append((index, coefs, float(rhs), 1))
        else:
            negated = {j: -value for j, value in coefs.items()}
            upper.append((index, negated, -float(rhs), -1))

    costs = np.zeros(n_vars)
    for j, value in objective.items():
        costs[j] = float(value)
    result = linprog(
        costs,
        A_ub=_matrix([row[1] for row in upper], n_vars),
        b_ub=[row[2] for row in upper] or None,
        A_eq=_matrix([row[1] for row in equalities], n_vars),
        b_eq=[row[2] for row in equalities] or None,
        bounds=(0, None),
        method='highs-ds',
        options={
            'primal_feasibility_tolerance': HIGHS_TOLERANCE,
            'dual_feasibility_tolerance': HIGHS_TOLERANCE,
        })
    if result.status != 0:
        logger.debug(
            'HiGHS ended with status %d: %s', result.status, result.message)
        return None

    # Marginals are derivatives of the optimum in the passed right-hand
    # sides; negated rows flip them back to the >= convention.
    duals = [0.0] * len(constraints)
    if equalities:
        for (index, _, _, sign), value in zip(
                equalities, result.eqlin.marginals):
            duals[index] = sign * value
    if upper:
        for (index, _, _, sign), value in zip(upper, result.ineqlin.marginals):
            duals[index] = sign * value

    for bound in DENOMINATOR_LADDER:
        values = [Fraction(value).limit_denominator(bound) for value in result.x]
        multipliers = [
            Fraction(value).limit_denominator(bound) for value in duals]
        if optimality_problems(
                n_vars, constraints, objective, values, multipliers):
            continue
        value = sum(
            (Fraction(cost) * values[j] for j, cost in objective.items()),
            Fraction(0))
        logger.debug(
            'LP certified: %d rows, %d columns, %d iterations, '
            'denominators up to %d, objective %s',
            len(constraints), n_vars, result.nit, bound, value)
        return LPResult(OPTIMAL, values, value, int(result.nit), HIGHS)
    logger.info(
        'HiGHS optimum %.6f could not be certified; solving exactly',
        result.fun)
    return None


def _solve_exact(n_vars, constraints, objective):
    normalized = []
    for coefs, sense, rhs in constraints:
        rhs = Fraction(rhs)
        if rhs < 0:
            coefs = {j: -value for j, value in coefs.items()}
            rhs = -rhs
            sense = {EQ: EQ, GE: LE, LE: GE}[sense]
        normalized.append((coefs, sense, rhs))

    n_slack = sum(1 for _, sense, _ in normalized if sense != EQ)
    n_art = sum(1 for _, sense, _ in normalized if sense != LE)
    width = n_vars + n_slack + n_art
    art_start = n_vars + n_slack

    rows = []
    rhs_column = []
    basis = []
    slack = n_vars
    art = art_start
    for coefs, sense, rhs in normalized:
        row = [0] * width
        for j, value in coefs.items():
            if value:
                row[j] = Fraction(value)
        if sense == LE:
            row[slack] = 1
            basis.append(slack)
            slack += 1
        else:
            if sense == GE:
                row[slack] = -1
                slack += 1
            row[art] = 1
            basis.append(art)
            art += 1
        rows.append(row)
        rhs_column.append(rhs)

    tableau = _Tableau(rows, rhs_column, basis)
    max_pivots = PIVOT_FACTOR * (len(rows) + width)

    if n_art:
        tableau.price([0] * art_start + [1] * n_art)
        tableau.optimize(range(width), max_pivots)
        if tableau.value > 0:
            logger.debug('Phase one ended with infeasibility %s', tableau.value)
            return LPResult(INFEASIBLE, [], None, tableau.pivots)
        _drive_out_artificials(tableau, art_start)

    costs = [0] * art_start
    for j, value in objective.items():
        costs[j] = Fraction(value)
    tableau.price(costs)
    status = tableau.optimize(range(art_start), max_pivots)
    if status != OPTIMAL:
        return LPResult(status, [], None, tableau.pivots)

    values = [Fraction(0)] * n_vars
    for i, basic in enumerate(tableau.basis):
        if basic < n_vars:
            values[basic] = Fraction(tableau.rhs[i])
    logger.debug(
        'LP solved: %d rows, %d columns, %d pivots, objective %s',
        len(tableau.rows), width, tableau.pivots, tableau.value)
    return LPResult(OPTIMAL, values, tableau.value, tableau.pivots)


def _drive_out_artificials(tableau, art_start):
    """Pivot zero-level artificials out of the basis, dropping redundant rows."""
    i = 0
    while i < len(tableau.rows):
        if tableau.basis[i] < art_start:
            i += 1
            continue
        row = tableau.rows[i]
        column = next(
            (j for j in range(art_start) if row[j]), None)
        if column is None:
            del tableau.rows[i]
            del tableau.rhs[i]
            del tableau.basis[i]
            continue
        tableau.pivot(i, column)
        i += 1
    for row in tableau.rows:
        for j in range(art_start, len(row)):
            row[j] = 0
