"""Utility functionality."""

from fractions import Fraction

# Decimal digits printed for ratios
RATIO_DIGITS = 10


def average(collection, function=None):
    """Calculate the exact average of values in a collection.

    :param collection: The collection with the data to be averaged
    :type collection: list | tuple
    :param function:
        Function used to retrieve data from each element. If not passed an
        identity function will be used by default.
    :type function: callable
    :rtype: Fraction

    """
    if function is None:
        function = lambda x: x

    total = sum((Fraction(function(element)) for element in collection),
                Fraction(0))
    return total / len(collection)


def decimal_text(value, digits=RATIO_DIGITS, upward=True):
    """Render a rational with ``digits`` decimals, rounded outward.

    :param value: Exact value
    :type value: Fraction | int
    :param upward: Round toward +inf (upper bounds) or -inf (lower bounds)
    :type upward: bool
    :rtype: str

    """
    value = Fraction(value)
    unit = 10 ** digits
    scaled = value * unit
    rounded = -((-scaled.numerator) // scaled.denominator) if upward else \
        scaled.numerator // scaled.denominator
    sign = '-' if rounded < 0 else ''
    whole, fraction = divmod(abs(rounded), unit)
    return '{}{}.{:0{}d}'.format(sign, whole, fraction, digits)


def ratio_text(numerator, denominator, digits=RATIO_DIGITS):
    """Ratio of two costs as an upward-rounded decimal string.

    A zero denominator gives ``1`` when the numerator is zero too and ``inf``
    otherwise.

    """
    if not denominator:
        return decimal_text(1, digits) if not numerator else 'inf'
    return decimal_text(Fraction(numerator) / Fraction(denominator), digits)
