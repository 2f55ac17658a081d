"""Arithmetic in the ring of integers localised at a fixed prime.

Elements are plain :class:`fractions.Fraction` values whose denominator is
coprime to :data:`PRIME`.  Keeping the representation as ``Fraction`` means
ordinary arithmetic works unchanged; the helpers here enforce membership and
expose the valuation structure.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Union

PRIME = 3

Scalar = Union[int, Fraction]


class NotLocal(ValueError):
    """Raised when a rational number has the prime in its denominator."""


def valuation(x: Scalar, p: int = PRIME) -> float:
    """p-adic valuation; ``inf`` for zero."""
    x = Fraction(x)
    if x == 0:
        return float("inf")
    v = 0
    n, d = x.numerator, x.denominator
    while n % p == 0:
        n //= p
        v += 1
    while d % p == 0:
        d //= p
        v -= 1
    return v


def local(x: Scalar) -> Fraction:
    """Coerce ``x`` into the local ring, rejecting non-members."""
    x = Fraction(x)
    if x.denominator % PRIME == 0:
        raise NotLocal(f"{x} is not {PRIME}-local")
    return x


def is_unit(x: Scalar) -> bool:
    x = Fraction(x)
    return x != 0 and x.numerator % PRIME != 0 and x.denominator % PRIME != 0


def unit_part(x: Scalar) -> Fraction:
    """Return ``u`` with ``x = u * PRIME**valuation(x)``."""
    x = Fraction(x)
    if x == 0:
        raise ZeroDivisionError("zero has no unit part")
    return x / Fraction(PRIME) ** int(valuation(x))


def normalize(x: Scalar) -> Fraction:
    """Canonical associate: 0 or a power of the prime."""
    x = Fraction(x)
    if x == 0:
        return x
    return Fraction(PRIME) ** int(valuation(x))


def divides(a: Scalar, b: Scalar) -> bool:
    """Does ``a`` divide ``b`` in the local ring?"""
    if Fraction(b) == 0:
        return True
    if Fraction(a) == 0:
        return False
    return valuation(a) <= valuation(b)


def reduce_mod(x: Scalar, q: int) -> Fraction:
    """Reduce a local number modulo ``q`` (a power of the prime), as an integer in [0, q)."""
    x = local(x)
    if q == 0:
        return x
    inv = pow(x.denominator, -1, q)
    return Fraction((x.numerator * inv) % q)


def is_zero_mod(x: Scalar, q: int) -> bool:
    if q == 0:
        return Fraction(x) == 0
    if q == 1:
        return True
    return reduce_mod(x, q) == 0


def order_of(q: Scalar) -> int:
    """The cyclic order ``PRIME**v`` of Z_(p)/(q); 0 for q = 0, 1 for units."""
    if Fraction(q) == 0:
        return 0
    return PRIME ** int(valuation(q))
