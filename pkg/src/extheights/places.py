"""Exact rationals, places of Q, normalized absolute values and error-carrying reals.

Finite-place quantities are kept as exact rational multiples of ``log p``
(:class:`ExactLog`); archimedean ones as :class:`RealValue`, an mpmath float
with an absolute error bound.  Absolute values are normalized by
``|p|_p = 1/p`` and the usual ``|.|`` at infinity, so that the product formula
holds with unit weights.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, total_ordering
from typing import Union

import gmpy2
import mpmath
import sympy
from gmpy2 import mpq, mpz

Rational = type(mpq(0))

DEFAULT_DIGITS = int(os.environ.get("EXTHEIGHTS_PRECISION", "40"))


def as_rational(x) -> Rational:
    """Coerce ints, Fractions, mpq and strings like ``"-5/8"`` to an exact rational."""
    if isinstance(x, Rational):
        return x
    if isinstance(x, (int, type(mpz(0)))):
        return mpq(x)
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    if isinstance(x, str):
        x = x.strip()
        if "/" in x:
            num, den = x.split("/")
            return mpq(int(num), int(den))
        return mpq(int(x))
    if isinstance(x, bool):
        return mpq(int(x))
    raise TypeError(f"cannot interpret {x!r} as an exact rational")


def to_fraction(x) -> Fraction:
    x = as_rational(x)
    return Fraction(int(x.numerator), int(x.denominator))


def fmt_rational(x) -> str:
    x = as_rational(x)
    if x.denominator == 1:
        return str(int(x.numerator))
    return f"{int(x.numerator)}/{int(x.denominator)}"


@lru_cache(maxsize=4096)
def is_prime(p: int) -> bool:
    return p >= 2 and bool(sympy.isprime(int(p)))


def factor_int(n) -> dict[int, int]:
    n = abs(int(n))
    if n <= 1:
        return {}
    return {int(p): int(e) for p, e in sympy.factorint(n).items()}


def prime_support(*values) -> list[int]:
    """Primes dividing the numerator or denominator of any of the given rationals."""
    primes: set[int] = set()
    for v in values:
        v = as_rational(v)
        if v == 0:
            continue
        primes.update(factor_int(v.numerator))
        primes.update(factor_int(v.denominator))
    return sorted(primes)


@total_ordering
class Place:
    """A place of Q: ``Place(p)`` for a prime, ``Place(None)`` (``ARCH``) at infinity.

    Sorting puts finite primes in ascending order, then the archimedean place.
    """

    __slots__ = ("p",)

    def __init__(self, p: int | None = None):
        if p is not None:
            p = int(p)
            if not is_prime(p):
                raise ValueError(f"{p} is not prime")
        object.__setattr__(self, "p", p)

    def __setattr__(self, name, value):
        raise AttributeError("Place is immutable")

    @property
    def is_archimedean(self) -> bool:
        return self.p is None

    def _key(self):
        return (1, 0) if self.p is None else (0, self.p)

    def __eq__(self, other):
        return isinstance(other, Place) and other.p == self.p

    def __lt__(self, other):
        return self._key() < other._key()

    def __hash__(self):
        return hash(("Place", self.p))

    def __repr__(self) -> str:
        return "Place(inf)" if self.p is None else f"Place({self.p})"

    def __str__(self) -> str:
        return "inf" if self.p is None else str(self.p)

    @classmethod
    def parse(cls, s: str) -> "Place":
        s = s.strip().lower()
        return cls(None) if s in ("inf", "oo", "infinity", "arch") else cls(int(s))


ARCH = Place(None)


def valuation(x, p: int) -> int:
    """p-adic valuation of a nonzero rational."""
    x = as_rational(x)
    if x == 0:
        raise ValueError("valuation of 0 is undefined")
    if not is_prime(int(p)):
        raise ValueError(f"{p} is not prime")
    p = mpz(p)
    _, vn = gmpy2.remove(x.numerator, p)
    _, vd = gmpy2.remove(x.denominator, p)
    return int(vn) - int(vd)


def strip_primes(n, primes) -> int:
    """Remove every factor of the listed primes from the integer n (sign dropped)."""
    n = abs(mpz(n))
    for p in primes:
        if n == 0:
            break
        n, _ = gmpy2.remove(n, mpz(p))
    return int(n)


# ---------------------------------------------------------------------------
# error-carrying reals


def _mpf(x) -> mpmath.mpf:
    if isinstance(x, mpmath.mpf):
        return x
    with _arith():
        if isinstance(x, (Rational, Fraction)):
            return mpmath.mpf(int(x.numerator)) / int(x.denominator)
        return mpmath.mpf(x)


@dataclass(frozen=True)
class RealValue:
    """A real number known to lie in ``[value - abs_error, value + abs_error]``."""

    value: mpmath.mpf
    abs_error: mpmath.mpf = mpmath.mpf(0)

    def __post_init__(self):
        object.__setattr__(self, "value", _mpf(self.value))
        err = _mpf(self.abs_error)
        if err < 0:
            raise ValueError("abs_error must be nonnegative")
        object.__setattr__(self, "abs_error", err)

    @classmethod
    def exact(cls, x) -> "RealValue":
        return cls(_mpf(x), 0)

    def _coerce(self, other) -> "RealValue":
        if isinstance(other, RealValue):
            return other
        if isinstance(other, ExactLog):
            return other.to_real()
        return RealValue(_mpf(other), 0)

    def __add__(self, other):
        o = self._coerce(other)
        with _arith():
            v = self.value + o.value
            return RealValue(v, self.abs_error + o.abs_error + _ulp(v))

    __radd__ = __add__

    def __neg__(self):
        with _arith():
            return RealValue(-self.value, self.abs_error)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        with _arith():
            v = self.value * o.value
            err = abs(self.value) * o.abs_error + abs(o.value) * self.abs_error + self.abs_error * o.abs_error
            return RealValue(v, err + _ulp(v))

    __rmul__ = __mul__

    def __float__(self) -> float:
        return float(self.value)

    def __abs__(self):
        with _arith():
            return RealValue(abs(self.value), self.abs_error)

    def contains(self, x, slack=0) -> bool:
        with _arith():
            return abs(self.value - _mpf(x)) <= self.abs_error + _mpf(slack)

    def agrees_with(self, other, tol=0) -> bool:
        o = self._coerce(other)
        with _arith():
            return abs(self.value - o.value) <= self.abs_error + o.abs_error + _mpf(tol)

    def pos(self) -> "RealValue":
        """max(0, self), with the same error bound."""
        return RealValue(max(self.value, mpmath.mpf(0)), self.abs_error)

    def __repr__(self) -> str:
        return f"RealValue({mpmath.nstr(self.value, 20)} ± {mpmath.nstr(self.abs_error, 3)})"


# RealValue arithmetic never runs below this many decimal digits
ARITH_DPS = 150


def _arith():
    return mpmath.workdps(max(mpmath.mp.dps, ARITH_DPS))


def _ulp(x) -> mpmath.mpf:
    # one unit of the current working precision, relative to |x| (at least absolute)
    return mpmath.mpf(2) ** (-mpmath.mp.prec + 1) * max(abs(_mpf(x)), mpmath.mpf(1))


@lru_cache(maxsize=256)
def _log_int(n: int, dps: int) -> mpmath.mpf:
    with mpmath.workdps(dps):
        return +mpmath.log(n)


def log_real(x, digits: int = DEFAULT_DIGITS) -> RealValue:
    """log|x| of an exact nonzero rational as a RealValue."""
    x = as_rational(x)
    if x == 0:
        raise ValueError("log of 0")
    with mpmath.workdps(digits + 10):
        v = mpmath.log(abs(int(x.numerator))) - mpmath.log(int(x.denominator))
        return RealValue(v, mpmath.mpf(10) ** (-(digits + 5)))


@dataclass(frozen=True)
class ExactLog:
    """The exact quantity ``coeff * log p`` at the finite place p."""

    coeff: Fraction
    p: int

    def __post_init__(self):
        object.__setattr__(self, "coeff", to_fraction(self.coeff) if not isinstance(self.coeff, Fraction) else self.coeff)

    @property
    def place(self) -> Place:
        return Place(self.p)

    def _check(self, other: "ExactLog"):
        if other.p != self.p:
            raise ValueError(f"cannot combine values at places {self.p} and {other.p}")

    def __add__(self, other):
        if isinstance(other, ExactLog):
            self._check(other)
            return ExactLog(self.coeff + other.coeff, self.p)
        if other == 0:
            return self
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return ExactLog(-self.coeff, self.p)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, k):
        return ExactLog(self.coeff * to_fraction(k), self.p)

    __rmul__ = __mul__

    def pos(self) -> "ExactLog":
        return ExactLog(max(self.coeff, Fraction(0)), self.p)

    def is_zero(self) -> bool:
        return self.coeff == 0

    def to_real(self, digits: int = DEFAULT_DIGITS) -> RealValue:
        """Numeric collapse; one-way."""
        with mpmath.workdps(digits + 10):
            c = self.coeff
            v = _log_int(self.p, digits + 10) * c.numerator / c.denominator
            return RealValue(v, mpmath.mpf(10) ** (-(digits + 5)) * max(1, abs(c)))

    def __float__(self):
        return float(self.to_real(20).value)

    def __repr__(self) -> str:
        return f"{self.coeff}*log({self.p})"


LocalHeightValue = Union[ExactLog, RealValue]


def local_zero(v: Place) -> LocalHeightValue:
    return RealValue.exact(0) if v.is_archimedean else ExactLog(Fraction(0), v.p)


def to_real(x: LocalHeightValue, digits: int = DEFAULT_DIGITS) -> RealValue:
    return x.to_real(digits) if isinstance(x, ExactLog) else x


def log_abs_v(x, v: Place, digits: int = DEFAULT_DIGITS) -> LocalHeightValue:
    """``log |x|_v``: exact ``-v_p(x) log p`` at finite places, a RealValue at infinity."""
    x = as_rational(x)
    if x == 0:
        raise ValueError("log |0|_v is undefined")
    if v.is_archimedean:
        return log_real(x, digits)
    return ExactLog(Fraction(-valuation(x, v.p)), v.p)


def log_plus(x, digits: int = DEFAULT_DIGITS):
    """``log max(1, x)`` for x >= 0.

    Accepts a plain nonnegative number or RealValue (the value itself), or an
    :class:`ExactLog` standing for ``log x`` at a finite place, in which case
    the answer is ``max(0, coeff) log p`` in the same exact form.
    """
    if isinstance(x, ExactLog):
        return x.pos()
    if isinstance(x, RealValue):
        if x.value < 0 and not x.contains(0):
            raise ValueError("log_plus of a negative number")
        with mpmath.workdps(digits + 10):
            if x.value <= 1:
                return RealValue(0, max(mpmath.mpf(0), x.value + x.abs_error - 1))
            lo = max(x.value - x.abs_error, mpmath.mpf(1))
            v = mpmath.log(x.value)
            return RealValue(v, v - mpmath.log(lo) + _ulp(v))
    if isinstance(x, (int, Fraction, Rational, type(mpz(0)))):
        x = as_rational(x)
        if x < 0:
            raise ValueError("log_plus of a negative number")
        if x <= 1:
            return RealValue.exact(0)
        return log_real(x, digits)
    x = _mpf(x)
    if x < 0:
        raise ValueError("log_plus of a negative number")
    return mpmath.log(x) if x > 1 else mpmath.mpf(0)


@dataclass(frozen=True)
class ProductFormulaWitness:
    """Sum over all places of ``log |x|_v`` as an integer combination of ``log p``.

    ``finite`` holds the coefficients ``-v_p(x)``, ``archimedean`` the
    factorization of ``|x|`` (``log|x| = sum v_p log p``); ``total`` is their
    coefficient-wise sum, identically zero.
    """

    x: Rational
    finite: dict
    archimedean: dict
    total: dict

    @property
    def is_zero(self) -> bool:
        return all(c == 0 for c in self.total.values())


def product_formula_sum(x) -> ProductFormulaWitness:
    x = as_rational(x)
    if x == 0:
        raise ValueError("product formula needs x != 0")
    primes = prime_support(x)
    finite = {p: -valuation(x, p) for p in primes}
    # |x| factored independently: numerator and denominator prime powers
    arch: dict[int, int] = {}
    for p, e in factor_int(x.numerator).items():
        arch[p] = arch.get(p, 0) + e
    for p, e in factor_int(x.denominator).items():
        arch[p] = arch.get(p, 0) - e
    total = {p: finite.get(p, 0) + arch.get(p, 0) for p in sorted(set(finite) | set(arch))}
    return ProductFormulaWitness(x, finite, arch, total)
