"""Exact rational scalars.

Every time, position and game value in this package is an exact rational;
nothing is ever rounded.  gmpy2.mpq is used when available (much faster),
with fractions.Fraction as a drop-in fallback.
"""

from __future__ import annotations

try:
    from gmpy2 import mpq as Rat
except ImportError:  # pragma: no cover
    from fractions import Fraction as Rat

ZERO = Rat(0)
ONE = Rat(1)


def rat(num, den=1) -> Rat:
    """Build a rational from ints, another rational, or a string."""
    if isinstance(num, str):
        if den != 1:
            raise ValueError("cannot combine a string literal with a denominator")
        return parse_rational(num)
    return Rat(num, den)


def parse_rational(text: str) -> Rat:
    """Parse "p/q", an integer literal, or a plain decimal such as "0.00016".

    Decimal literals convert exactly (0.00016 -> 1/6250).  Scientific
    notation is rejected: "1e-4" is ambiguous shorthand, not an exact value.
    """
    s = text.strip()
    if not s:
        raise ValueError("empty rational literal")
    if "e" in s.lower():
        raise ValueError(f"scientific notation is not accepted: {text!r}")
    if "/" in s:
        p, _, q = s.partition("/")
        num, den = int(p), int(q)
        if den == 0:
            raise ValueError(f"zero denominator: {text!r}")
        return Rat(num, den)
    if "." in s:
        sign = -1 if s.startswith("-") else 1
        if s[0] in "+-":
            s = s[1:]
        whole, _, frac = s.partition(".")
        whole = whole or "0"
        if not frac:
            raise ValueError(f"malformed decimal: {text!r}")
        if not (whole.isdigit() and frac.isdigit()):
            raise ValueError(f"malformed decimal: {text!r}")
        return sign * Rat(int(whole) * 10 ** len(frac) + int(frac), 10 ** len(frac))
    return Rat(int(s))


def format_rational(value) -> str:
    """Serialize as "p/q" (always with the denominator, e.g. "21/1")."""
    return f"{value.numerator}/{value.denominator}"


def decimal_string(value, places: int = 15) -> str:
    """Fixed-point decimal rendering, for display columns only."""
    num, den = value.numerator, value.denominator
    sign = "-" if num < 0 else ""
    num = abs(num)
    whole, rem = divmod(num, den)
    digits = []
    for _ in range(places):
        rem *= 10
        d, rem = divmod(rem, den)
        digits.append(str(d))
    return f"{sign}{whole}.{''.join(digits)}"
