"""Exact solvers for small instances, by dynamic programming over subsets."""

import logging

from dataclasses import dataclass

from otsp.errors import ParameterError, ResourceError
from otsp.instance import Tour

logger = logging.getLogger(__name__)

# Largest instance accepted by solve_exact
EXACT_CAP = 14

# Largest instance accepted by solve_exact_chains
CHAIN_EXACT_CAP = 12


@dataclass(frozen=True)
class OracleResult:

    """Optimal tour with the size of the explored state space."""

    cost: int
    tour: Tour
    states: int


def _check_cap(n, cap):
    if n > cap:
        raise ResourceError(
            'exact oracle is capped at n={}, got n={}'.format(cap, n),
            {'n': n, 'cap': cap})


def _cheapest_cycle(costs, start, allowed):
    """Cheapest Hamiltonian cycle from ``start`` whose extensions are allowed.

    ``allowed(mask, v)`` says whether ``v`` may be appended to a path that
    has visited ``mask``. Returns ``(cost, cycle, states)`` or ``None``.

    """
    n = costs.n
    full = (1 << n) - 1
    layer = {(1 << start, start): (0, None)}
    parents = [layer]
    states = 1
    for _ in range(n - 1):
        following = {}
        for (mask, last), (cost, _) in layer.items():
            for v in range(n):
                if mask >> v & 1 or not allowed(mask, v):
                    continue
                key = (mask | 1 << v, v)
                candidate = cost + costs(last, v)
                if key not in following or candidate < following[key][0]:
                    following[key] = (candidate, last)
        layer = following
        parents.append(layer)
        states += len(layer)

    best = None
    for (mask, last), (cost, _) in layer.items():
        if mask != full:
            continue
        total = cost + costs(last, start)
        if best is None or (total, last) < best:
            best = (total, last)
    if best is None:
        return None

    total, last = best
    cycle = [last]
    mask = full
    for depth in range(n - 1, 0, -1):
        previous = parents[depth][(mask, last)][1]
        mask &= ~(1 << last)
        last = previous
        cycle.append(last)
    cycle.reverse()
    return total, cycle, states


def solve_exact(instance, cap=EXACT_CAP):
    """Optimal order-respecting tour, anchored at ``d_1``.

    An ordered vertex may only be appended when all its predecessors in the
    order have been visited.

    :param instance: Ordered TSP instance (any ``k``)
    :type instance: otsp.instance.Instance
    :param cap: Largest ``n`` accepted
    :type cap: int
    :rtype: OracleResult
    :raises ResourceError: If ``n`` exceeds ``cap``

    """
    _check_cap(instance.n, cap)
    costs = instance.costs
    order = list(instance.order)
    if costs.n == 1:
        return OracleResult(0, Tour((0,), 0), 1)
    start = order[0] if order else 0
    ordered_mask = 0
    for d in order:
        ordered_mask |= 1 << d
    position = {d: j for j, d in enumerate(order)}

    def allowed(mask, v):
        if v not in position:
            return True
        return bin(mask & ordered_mask).count('1') == position[v]

    cost, cycle, states = _cheapest_cycle(costs, start, allowed)
    logger.debug('Exact OTSP optimum %d over %d states', cost, states)
    return OracleResult(cost, Tour(tuple(cycle), cost), states)


def solve_exact_chains(instance, cap=CHAIN_EXACT_CAP):
    """Optimal tour respecting the internal order of every chain.

    Chains may interleave. Every first chain element is tried as the start,
    and a chain element may only be appended after its chain predecessors.

    :param instance: Chain instance
    :type instance: otsp.instance.ChainInstance
    :rtype: OracleResult
    :raises ResourceError: If ``n`` exceeds ``cap``

    """
    _check_cap(instance.n, cap)
    costs = instance.costs
    if costs.n == 1:
        return OracleResult(0, Tour((0,), 0), 1)
    predecessor = {}
    for chain in instance.chains:
        for a, b in zip(chain, chain[1:]):
            predecessor[b] = a

    def allowed(mask, v):
        return v not in predecessor or bool(mask >> predecessor[v] & 1)

    best = None
    total_states = 0
    for chain in instance.chains:
        found = _cheapest_cycle(costs, chain[0], allowed)
        if found is None:
            continue
        cost, cycle, states = found
        total_states += states
        if best is None or cost < best[0]:
            best = (cost, cycle)
    if best is None:
        raise ParameterError('no tour respects the chains')
    cost, cycle = best
    logger.debug('Exact chain optimum %d over %d states', cost, total_states)
    return OracleResult(cost, Tour(tuple(cycle), cost), total_states)


def held_karp(costs, cap=EXACT_CAP):
    """Classical Held-Karp dynamic program for unconstrained TSP.

    :type costs: otsp.instance.CostMatrix
    :rtype: OracleResult

    """
    _check_cap(costs.n, cap)
    if costs.n == 1:
        return OracleResult(0, Tour((0,), 0), 1)
    cost, cycle, states = _cheapest_cycle(costs, 0, lambda mask, v: True)
    return OracleResult(cost, Tour(tuple(cycle), cost), states)
