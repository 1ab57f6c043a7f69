import unittest

from fractions import Fraction
from operator import itemgetter

from otsp.util import average, decimal_text, ratio_text


class AverageTest(unittest.TestCase):

    """Average function tests."""

    def test_identity(self):
        """Identifiy function used by default."""
        self.assertEqual(average([1, 2]), Fraction(3, 2))

    def test_custom_function(self):
        """Custom function used if passed."""
        self.assertEqual(
            average(
                [
                    {'number': 1},
                    {'number': 2},
                ],
                itemgetter('number'),
            ),
            Fraction(3, 2),
        )

    def test_exact(self):
        """Averages of fractions are exact."""
        self.assertEqual(average([Fraction(1, 3), Fraction(1, 6)]),
                         Fraction(1, 4))


class DecimalTextTest(unittest.TestCase):

    """Outward rounded decimal rendering."""

    def test_upward(self):
        """Upper bounds are rounded up."""
        self.assertEqual(decimal_text(Fraction(2, 3), 4), '0.6667')
        self.assertEqual(decimal_text(Fraction(1, 3), 4), '0.3334')

    def test_downward(self):
        """Lower bounds are rounded down."""
        self.assertEqual(decimal_text(Fraction(2, 3), 4, upward=False),
                         '0.6666')

    def test_exact_value(self):
        """Exact decimals are printed unchanged."""
        self.assertEqual(decimal_text(Fraction(3, 2), 3), '1.500')

    def test_negative(self):
        """Sign is kept."""
        self.assertEqual(decimal_text(Fraction(-1, 4), 2), '-0.25')


class RatioTextTest(unittest.TestCase):

    """Ratios between costs."""

    def test_ratio(self):
        """Ratio printed with ten digits."""
        self.assertEqual(ratio_text(3, 2), '1.5000000000')

    def test_zero_over_zero(self):
        """Zero cost against a zero bound is a ratio of one."""
        self.assertEqual(ratio_text(0, 0), '1.0000000000')

    def test_positive_over_zero(self):
        """Positive cost against a zero bound is infinite."""
        self.assertEqual(ratio_text(5, 0), 'inf')
