"""Chain precedence test cases."""

import unittest

from fractions import Fraction

from otsp.chains import (
    chain_bound,
    chain_orders,
    check_chain_order,
    solve_chains,
    solve_chains_blackbox,
    solve_guess,
    visit_order,
)
from otsp.instance import ChainInstance, CostMatrix, generate
from otsp.oracle import solve_exact_chains

SQUARE = CostMatrix([[0, 1, 2, 1], [1, 0, 1, 2], [2, 1, 0, 1], [1, 2, 1, 0]])


class ChainOrderTest(unittest.TestCase):

    """Orders derived from chains."""

    def setUp(self):
        """Two chains on the square."""
        self.instance = ChainInstance(SQUARE, ((0, 1), (2, 3)))

    def test_chain_orders(self):
        """The root is prepended to chains that do not start with it."""
        self.assertEqual(chain_orders(self.instance, 0), ((0, 1), (0, 2, 3)))
        self.assertEqual(chain_orders(self.instance, 2), ((2, 0, 1), (2, 3)))

    def test_singleton_root_chain(self):
        """The chain holding only the root constrains nothing."""
        instance = ChainInstance(SQUARE, ((0,), (2, 3)))
        self.assertEqual(chain_orders(instance, 0), (None, (0, 2, 3)))

    def test_visit_order(self):
        """Root first, then every chain as a block."""
        self.assertListEqual(visit_order(self.instance, 2), [2, 0, 1, 3])

    def test_check_chain_order(self):
        """Rotations and reversals are allowed; reordering is not."""
        self.assertTrue(check_chain_order([0, 1, 2, 3], [(0, 1), (2, 3)]))
        self.assertTrue(check_chain_order([1, 0, 3, 2], [(0, 1), (2, 3)]))
        self.assertTrue(check_chain_order([0, 2, 1, 3], [(0, 1), (2, 3)]))
        self.assertFalse(check_chain_order([0, 1, 2, 3, 4], [(0, 2, 1, 3)]))
        self.assertFalse(check_chain_order([0, 1, 2], [(0, 5)]))

    def test_chain_bound(self):
        """Bound is ell + 1/2 plus a little over e^-ell."""
        self.assertGreater(chain_bound(1), Fraction(3, 2) + Fraction(36, 100))
        self.assertLess(chain_bound(1), Fraction(3, 2) + Fraction(37, 100))
        self.assertLess(chain_bound(2), Fraction(5, 2) + Fraction(14, 100))


class SolveChainsTest(unittest.TestCase):

    """Chain algorithm against the exact optimum."""

    def test_within_bound(self):
        """Tours respect every chain and the approximation bound."""
        for seed in range(2):
            instance = generate('euclidean', 7, chain_sizes=[2, 2], seed=seed)
            result = solve_chains(instance)
            optimum = solve_exact_chains(instance).cost
            self.assertTrue(check_chain_order(result.tour, instance.chains))
            self.assertListEqual(result.tour.problems(instance.costs), [])
            self.assertLessEqual(
                result.tour.cost, chain_bound(instance.ell) * optimum)
            self.assertEqual(len(result.guesses), 2)
            self.assertEqual(result.best.tour, result.tour)

    def test_sampled(self):
        """Seeded runs are valid and repeatable."""
        instance = generate('random_closure', 7, chain_sizes=[3, 1], seed=4)
        first = solve_chains(instance, seed=9)
        second = solve_chains(instance, seed=9)
        self.assertEqual(first.tour, second.tour)
        self.assertTrue(check_chain_order(first.tour, instance.chains))

    def test_single_vertex_chain(self):
        """Nothing to order falls back to a plain tour."""
        instance = ChainInstance(SQUARE, ((0,),))
        result = solve_chains(instance)
        self.assertEqual(result.tour.cost, 4)
        self.assertIsNone(result.best.certificate.c_lp)

    def test_guess_certificate(self):
        """Every guess records its per-chain LP values."""
        instance = generate('euclidean', 6, chain_sizes=[2, 2], seed=5)
        root = instance.chains[1][0]
        guess = solve_guess(instance, root)
        self.assertEqual(guess.root, root)
        self.assertEqual(len(guess.c_lps), 2)
        self.assertEqual(guess.certificate.extra['guess'], root)
        self.assertListEqual(guess.certificate.failed(), [])

    def test_blackbox(self):
        """Glued ordered tours respect every chain."""
        instance = generate('euclidean', 6, chain_sizes=[2, 2], seed=6)
        result = solve_chains_blackbox(instance)
        self.assertTrue(check_chain_order(result.tour, instance.chains))
        self.assertListEqual(sorted(result.tour.cycle), list(range(6)))
