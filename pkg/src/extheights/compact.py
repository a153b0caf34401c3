"""Fiberwise compactification P(O + L^dual) of the extension and its canonical norms.

Everything is kept in log form: for an interior point X = (P, t) the canonical
fiber norm is a_v = |t|_v exp(-lambda_D(P, v)), stored as log a_v (an exact
multiple of log p at finite places).  The boundary sections carry no t.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import mpmath

from .curve import O, Point
from .extension import ExtensionData, ExtPoint, ext_mul_n
from .heights import lambda_D
from .places import (
    DEFAULT_DIGITS,
    ExactLog,
    LocalHeightValue,
    Place,
    RealValue,
    as_rational,
    fmt_rational,
    log_abs_v,
    log_plus,
)

INTERIOR, ZERO, INF = "interior", "zero", "inf"


@dataclass(frozen=True)
class CompactPoint:
    base: Point
    fiber: str = INTERIOR
    t: object = None

    def __post_init__(self):
        if self.fiber not in (INTERIOR, ZERO, INF):
            raise ValueError(f"unknown fiber marker {self.fiber!r}")
        if self.fiber == INTERIOR:
            t = as_rational(self.t)
            if t == 0:
                raise ValueError("interior points need t != 0; use the zero section instead")
            object.__setattr__(self, "t", t)
        elif self.t is not None:
            raise ValueError("boundary points carry no fiber coordinate")

    @classmethod
    def interior(cls, X: ExtPoint) -> "CompactPoint":
        return cls(X.base, INTERIOR, X.t)

    @property
    def is_interior(self) -> bool:
        return self.fiber == INTERIOR

    def ext(self) -> ExtPoint:
        if not self.is_interior:
            raise ValueError("boundary point has no extension coordinate")
        return ExtPoint(self.base, self.t)

    def __str__(self) -> str:
        tail = f"t={fmt_rational(self.t)}" if self.is_interior else self.fiber
        return f"{self.base};{tail}"

    @classmethod
    def parse(cls, s: str) -> "CompactPoint":
        b, tail = s.rsplit(";", 1)
        tail = tail.strip()
        if tail in (ZERO, INF):
            return cls(Point.parse(b), tail)
        if tail.startswith("t="):
            tail = tail[2:]
        return cls(Point.parse(b), INTERIOR, as_rational(tail))


@dataclass(frozen=True)
class FiberNorm:
    """log a_v for a point at a place; a_v itself on demand."""

    place: Place
    log_a: LocalHeightValue

    @property
    def exact(self) -> bool:
        return isinstance(self.log_a, ExactLog)

    @property
    def a(self):
        """a_v: an exact rational when log a_v is an integer multiple of log p, else a float."""
        if self.exact:
            c = self.log_a.coeff
            if c.denominator == 1:
                return Fraction(self.log_a.p) ** c.numerator
            return float(self.log_a.p) ** float(c)
        with mpmath.workdps(DEFAULT_DIGITS + 10):
            return mpmath.exp(self.log_a.value)

    def log_plus(self) -> LocalHeightValue:
        """log+ a_v = -log ||s_Dinf||_v."""
        return log_plus(self.log_a) if self.exact else _log_plus_log(self.log_a)

    def log_plus_inv(self) -> LocalHeightValue:
        """log+ (1/a_v) = -log ||s_D0||_v."""
        neg = -self.log_a
        return log_plus(neg) if self.exact else _log_plus_log(neg)


def _log_plus_log(x: RealValue) -> RealValue:
    # log+ of a number given by its log: max(0, log a)
    return x.pos()


def fiber_coordinate_norm(data: ExtensionData, X, v: Place, digits: int = DEFAULT_DIGITS) -> FiberNorm:
    """Canonical v-norm of the fiber element of an interior point."""
    if isinstance(X, CompactPoint):
        if not X.is_interior:
            raise ValueError("fiber norm is only defined for interior points")
        X = X.ext()
    lam = lambda_D(data.param, X.base, v, digits)
    return FiberNorm(v, log_abs_v(X.t, v, digits) - lam)


@dataclass(frozen=True)
class SectionNorms:
    """-log of the norms of the canonical sections of D_0 and D_inf at a point; both >= 0."""

    place: Place
    neglog_D0: LocalHeightValue
    neglog_Dinf: LocalHeightValue
    # None on the boundary
    fiber: FiberNorm | None = None

    def norm_D0(self):
        return _exp_neg(self.neglog_D0)

    def norm_Dinf(self):
        return _exp_neg(self.neglog_Dinf)


def _exp_neg(x):
    if x is None:
        return 0
    if isinstance(x, ExactLog):
        c = x.coeff
        if c.denominator == 1:
            return Fraction(1, x.p ** int(c)) if c >= 0 else Fraction(x.p ** int(-c))
        return float(x.p) ** float(-c)
    return mpmath.exp(-x.value)


def section_norms(data: ExtensionData, X: CompactPoint, v: Place, digits: int = DEFAULT_DIGITS) -> SectionNorms:
    """Norms of s_{D_0} and s_{D_inf} at X; None stands for -log 0 = +infinity."""
    if X.fiber == INF:
        return SectionNorms(v, _zero(v), None)
    if X.fiber == ZERO:
        return SectionNorms(v, None, _zero(v))
    fn = fiber_coordinate_norm(data, X, v, digits)
    return SectionNorms(v, fn.log_plus_inv(), fn.log_plus(), fn)


def _zero(v: Place) -> LocalHeightValue:
    return RealValue.exact(0) if v.is_archimedean else ExactLog(Fraction(0), v.p)


def norm_s_Dinf(data: ExtensionData, X: CompactPoint, v: Place, digits: int = DEFAULT_DIGITS):
    """1 / max(1, a_v); 0 on the infinity section, 1 on the zero section."""
    return section_norms(data, X, v, digits).norm_Dinf()


def norm_s_D0(data: ExtensionData, X: CompactPoint, v: Place, digits: int = DEFAULT_DIGITS):
    """1 / max(1, 1/a_v); 0 on the zero section, 1 on the infinity section."""
    return section_norms(data, X, v, digits).norm_D0()


@dataclass(frozen=True)
class RatioCertificate:
    place: Place
    log_ratio: LocalHeightValue  # log(norm_D0 / norm_Dinf)
    log_a: LocalHeightValue
    residual: LocalHeightValue
    holds: bool


def ratio_identity_check(data: ExtensionData, X: CompactPoint, v: Place, digits: int = DEFAULT_DIGITS,
                         tol: float = 1e-12) -> RatioCertificate:
    """norm_D0 / norm_Dinf equals a_v; exact at finite places."""
    sn = section_norms(data, X, v, digits)
    if sn.fiber is None:
        raise ValueError("ratio identity needs an interior point")
    log_ratio = sn.neglog_Dinf - sn.neglog_D0
    res = log_ratio - sn.fiber.log_a
    if isinstance(res, ExactLog):
        ok = res.is_zero()
    else:
        ok = res.contains(0, tol)
    return RatioCertificate(v, log_ratio, sn.fiber.log_a, res, ok)


def compact_mul_n(data: ExtensionData, n: int, X: CompactPoint) -> CompactPoint:
    """Extension of [n] to the compactification.

    Interior points follow the group law.  For n > 0 each boundary section maps
    to itself over [n]P, for n < 0 the two sections are exchanged, and [0] is
    the constant map to the neutral point.
    """
    n = int(n)
    E = data.curve
    if n == 0:
        return CompactPoint(O, INTERIOR, 1)
    if X.is_interior:
        return CompactPoint.interior(ext_mul_n(data, n, X.ext()))
    base = E.mul(n, X.base)
    if n > 0:
        return CompactPoint(base, X.fiber)
    return CompactPoint(base, ZERO if X.fiber == INF else INF)
