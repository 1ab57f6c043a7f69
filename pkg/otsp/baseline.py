"""The 5/2 baseline: the ordered cycle followed by a tour of the rest."""

import logging

from otsp.assembly import shortcut_to_tour
from otsp.instance import CostMatrix, Tour
from otsp.spanning import EdgeMultiset, christofides

logger = logging.getLogger(__name__)

# Fewest free vertices handed to Christofides
CHRISTOFIDES_MIN_FREE = 3

CYCLE = 'cycle'
CHRISTOFIDES = 'christofides'
INSERTION = 'cheapest-insertion'


def baseline_method(instance):
    """How :func:`baseline_52` handles the free vertices of ``instance``.

    :rtype: str

    """
    free = instance.n - instance.k
    if free == 0:
        return CYCLE
    if free < CHRISTOFIDES_MIN_FREE:
        return INSERTION
    return CHRISTOFIDES


def _restrict(costs, vertices):
    return CostMatrix(
        [[costs(u, v) for v in vertices] for u in vertices], costs.scale)


def _cheapest_insertion(costs, cycle, free):
    cycle = list(cycle)
    free = sorted(free)
    while free:
        best = None
        for v in free:
            for at in range(len(cycle)):
                u, w = cycle[at], cycle[(at + 1) % len(cycle)]
                delta = costs(u, v) + costs(v, w) - costs(u, w)
                if best is None or (delta, v, at) < best:
                    best = (delta, v, at)
        _, v, at = best
        cycle.insert(at + 1, v)
        free.remove(v)
    return cycle


def baseline_52(instance):
    """Visit ``d_1, ..., d_k`` and then a Christofides tour of the rest.

    The Christofides tour runs on the free vertices plus ``d_1`` and is
    spliced in at ``d_1``. With fewer than three free vertices they are
    inserted into the ordered cycle by cheapest insertion instead.

    :param instance: Ordered TSP instance with ``k >= 2``
    :type instance: otsp.instance.Instance
    :rtype: otsp.instance.Tour

    """
    instance.require_ordered()
    costs = instance.costs
    order = list(instance.order)
    method = baseline_method(instance)
    free = sorted(set(range(instance.n)) - set(order))

    if method == CYCLE:
        return Tour.from_cycle(costs, order, order[0])
    if method == INSERTION:
        logger.warning(
            'Only %d free vertices; inserting them greedily', len(free))
        return Tour.from_cycle(
            costs, _cheapest_insertion(costs, order, free), order[0])

    vertices = [order[0]] + free
    inner = christofides(_restrict(costs, vertices), 0)
    rest = [vertices[v] for v in inner.cycle] + [order[0]]
    walk = order + rest
    multiset = EdgeMultiset(zip(walk, walk[1:]))
    tour = shortcut_to_tour(costs, multiset, walk, order)
    logger.debug('Baseline tour: cost %d', tour.cost)
    return tour
