"""Extended reals as IEEE floats.

``math.inf`` and ``-math.inf`` stand for the two infinities. NaN is never a
valid value: every helper here raises instead of producing one.
"""

import math

from .errors import ExtendedArithmeticError

PLUS_INF = math.inf
MINUS_INF = -math.inf


def check(x):
    x = float(x)
    if math.isnan(x):
        raise ExtendedArithmeticError("NaN is not an extended real")
    return x


def add(a, b):
    a, b = check(a), check(b)
    if math.isinf(a) and math.isinf(b) and a != b:
        raise ExtendedArithmeticError(f"{a} + {b} is undefined")
    return a + b


def sub(a, b):
    return add(a, -check(b))


def scale(c, x):
    """c * x for finite c; 0 * inf is taken as 0 (payoff convention)."""
    x = check(x)
    if c == 0:
        return 0.0
    return c * x


def to_str(x):
    x = check(x)
    if x == PLUS_INF:
        return "+inf"
    if x == MINUS_INF:
        return "-inf"
    return repr(x)


def from_str(s):
    s = s.strip().lower()
    if s in ("+inf", "inf"):
        return PLUS_INF
    if s == "-inf":
        return MINUS_INF
    return check(float(s))
