"""TSP with precedence constraints given by disjoint chains.

Every minimal chain element is tried as the shared root ``d_0``. For a guess,
each chain ``D_j`` is solved as an ordered TSP instance on ``(d_0, D_j)``
(just ``D_j`` when it already starts at ``d_0``); the chosen trees of all
chains are assembled into one multigraph and shortcut so that the tour
visits ``d_0`` and then every chain as a block, in chain order.

"""

import logging

from dataclasses import dataclass
from fractions import Fraction

from otsp.assembly import (
    Certificate,
    ConnectingTreeDistribution,
    assemble,
    derandomize,
    exp_neg_upper,
    isolation_products,
    ordered_walk,
    prepare,
    sample_trees,
    shortcut_to_tour,
    solve_derandomized,
)
from otsp.decomposition import decompose_all
from otsp.instance import Instance, OrderConstraint, Tour
from otsp.relaxation import aggregate_held_karp, solve_relaxation
from otsp.spanning import EdgeMultiset, christofides, minimum_spanning_tree

logger = logging.getLogger(__name__)


def chain_bound(ell):
    """Upper bound on ``ell + 1/2 + e^(-ell)``."""
    return ell + Fraction(1, 2) + exp_neg_upper(ell)


def chain_orders(instance, root):
    """Order handed to the ordered TSP solver for every chain.

    Entries are ``None`` for the chain ``(d_0,)``, which constrains nothing.

    :rtype: tuple(tuple(int) | None)

    """
    orders = []
    for chain in instance.chains:
        order = chain if chain[0] == root else (root,) + chain
        orders.append(order if len(order) > 1 else None)
    return tuple(orders)


def visit_order(instance, root):
    """``d_0`` followed by every chain without ``d_0``, chain by chain."""
    order = [root]
    for chain in instance.chains:
        order.extend(v for v in chain if v != root)
    return order


def check_chain_order(tour, chains):
    """Whether some rotation and direction of the tour respects every chain.

    :param tour: Tour or cyclic vertex sequence
    :type tour: otsp.instance.Tour | sequence(int)
    :param chains: Disjoint chains
    :type chains: sequence(sequence(int))
    :rtype: bool

    """
    cycle = list(getattr(tour, 'cycle', tour))
    if any(v not in cycle for chain in chains for v in chain):
        return False
    n = len(cycle)
    for sequence in (cycle, cycle[::-1]):
        for start in range(n):
            position = {
                v: (index - start) % n for index, v in enumerate(sequence)}
            if all(
                    position[a] < position[b]
                    for chain in chains for a, b in zip(chain, chain[1:])):
                return True
    return False


@dataclass(frozen=True)
class ChainGuess:

    """Tour and certificate obtained for one guess of ``d_0``."""

    root: int
    orders: tuple
    c_lps: tuple
    tour: Tour
    certificate: Certificate


@dataclass(frozen=True)
class ChainResult:

    """Cheapest tour over all guesses, with every guess kept for reporting."""

    tour: Tour
    guesses: tuple

    @property
    def best(self):
        return next(
            guess for guess in self.guesses if guess.tour == self.tour)


def _fallback_tour(instance, root):
    if instance.n < 3:
        return Tour.from_cycle(instance.costs, range(instance.n), root)
    return Tour.from_cycle(
        instance.costs, christofides(instance.costs, root).cycle, root)


def solve_guess(instance, root, index=0, seed=None, cap=None):
    """Run the chain algorithm for one root guess.

    :param instance: Chain instance
    :type instance: otsp.instance.ChainInstance
    :param root: Guessed ``d_0``, the first element of some chain
    :type root: int
    :param index: Position of the guess, separating random streams
    :type index: int
    :param seed: Sampling seed; ``None`` derandomizes
    :type seed: int | None
    :rtype: ChainGuess

    """
    costs = instance.costs
    orders = chain_orders(instance, root)
    tree = minimum_spanning_tree(costs, root)
    c_lps = []
    distributions = []
    for order in orders:
        if order is None:
            c_lps.append(None)
            distributions.append(None)
            continue
        solution = solve_relaxation(Instance(costs, OrderConstraint(order)))
        aggregate_held_karp(solution, costs.n)
        c_lps.append(solution.objective)
        distributions.append(
            ConnectingTreeDistribution(decompose_all(solution, cap)))
    active = [j for j, order in enumerate(orders) if order is not None]

    if not active:
        tour = _fallback_tour(instance, root)
        certificate = Certificate(
            'chains', tour.cost, None, c_trees=tour.cost, c_mst=tree.cost,
            seed=seed, scale=costs.scale,
            extra={'guess': root, 'c_lp_j': list(c_lps)})
        return ChainGuess(root, orders, tuple(c_lps), tour, certificate)

    c_lp = min(c_lps[j] for j in active)
    joint = ConnectingTreeDistribution(tuple(
        family for j in active for family in distributions[j].families))
    telescope = ()
    if seed is None:
        chosen, telescope = derandomize(joint, costs, tree, c_lp / 2)
    else:
        chosen = tuple(
            tree_choice for j in active
            for tree_choice in sample_trees(
                distributions[j], seed, key=(index, j)))

    walk = [root]
    position = 0
    for j in active:
        size = len(distributions[j])
        walk.extend(
            ordered_walk(chosen[position:position + size], orders[j])[1:])
        position += size
    tour, (c_trees, connector, c_join) = assemble(
        costs, chosen, walk, visit_order(instance, root), tree)

    chain_vertices = {v for chain in instance.chains for v in chain}
    products = isolation_products(joint, costs.n, chain_vertices)
    certificate = Certificate(
        algorithm='chains',
        cost=tour.cost,
        c_lp=c_lp,
        c_trees=c_trees,
        c_connector=connector.edges.cost(costs),
        connector_bound=connector.bound,
        c_join=c_join,
        c_mst=tree.cost,
        seed=seed,
        expected_bound=telescope[0] if telescope else None,
        telescope=telescope,
        isolation_max=max(products.values(), default=Fraction(0)),
        isolation_bound=exp_neg_upper(len(active)),
        scale=costs.scale,
        extra={'guess': root, 'c_lp_j': list(c_lps)})
    logger.debug('Guess d_0=%d: tour cost %d', root, tour.cost)
    return ChainGuess(root, orders, tuple(c_lps), tour, certificate)


def solve_chains(instance, seed=None, cap=None):
    """Cheapest tour over all guesses of the shared root.

    :param instance: Chain instance
    :type instance: otsp.instance.ChainInstance
    :param seed: Sampling seed; ``None`` selects the derandomized variant
    :type seed: int | None
    :rtype: ChainResult

    """
    guesses = tuple(
        solve_guess(instance, chain[0], index, seed, cap)
        for index, chain in enumerate(instance.chains))
    best = min(guesses, key=lambda guess: guess.tour.cost)
    logger.info(
        'Chain tour: cost %d with d_0=%d over %d guesses',
        best.tour.cost, best.root, len(guesses))
    return ChainResult(best.tour, guesses)


def solve_chains_blackbox(instance, cap=None):
    """Concatenate one ordered TSP tour per chain, for every root guess.

    Each chain ``(d_0, D_j)`` is solved by the derandomized ordered TSP
    algorithm; the tours are glued at ``d_0`` and shortcut.

    :rtype: ChainResult

    """
    costs = instance.costs
    guesses = []
    for chain in instance.chains:
        root = chain[0]
        orders = chain_orders(instance, root)
        multiset = EdgeMultiset()
        walk = [root]
        c_lps = []
        for order in orders:
            if order is None:
                c_lps.append(None)
                continue
            ordered = Instance(costs, OrderConstraint(order))
            tour, certificate = solve_derandomized(
                ordered, prepare(ordered, cap))
            c_lps.append(certificate.c_lp)
            cycle = list(tour.cycle) + [tour.cycle[0]]
            multiset = multiset + EdgeMultiset(zip(cycle, cycle[1:]))
            walk.extend(cycle[1:])
        if len(walk) == 1:
            tour = _fallback_tour(instance, root)
            c_glued = tour.cost
        else:
            tour = shortcut_to_tour(
                costs, multiset, walk, visit_order(instance, root))
            c_glued = multiset.cost(costs)
        active = [value for value in c_lps if value is not None]
        certificate = Certificate(
            'chains-blackbox', tour.cost, min(active) if active else None,
            c_trees=c_glued, scale=costs.scale,
            extra={'guess': root, 'c_lp_j': c_lps})
        guesses.append(
            ChainGuess(root, orders, tuple(c_lps), tour, certificate))
    best = min(guesses, key=lambda guess: guess.tour.cost)
    logger.info('Black-box chain tour: cost %d', best.tour.cost)
    return ChainResult(best.tour, tuple(guesses))
