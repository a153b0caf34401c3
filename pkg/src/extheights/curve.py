"""Weierstrass models over Q with an exact chord-tangent group law.

Coordinates are exact rationals (gmpy2 ``mpq``).  Curves may have rational
coefficients so that model changes are closed; height computations move to
the global minimal model first.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import gmpy2
from gmpy2 import mpq, mpz

from .places import Rational, as_rational, factor_int, fmt_rational, valuation

# Mazur: rational torsion points have order at most 12.
TORSION_ORDER_BOUND = 12


class NotOnCurve(ValueError):
    def __init__(self, curve, point, residue):
        self.residue = residue
        super().__init__(f"point {point} is not on {curve}: equation residue {fmt_rational(residue)}")


@dataclass(frozen=True)
class Point:
    """An affine point (x, y), or the point at infinity when both are None."""

    x: Rational | None = None
    y: Rational | None = None

    def __post_init__(self):
        if (self.x is None) != (self.y is None):
            raise ValueError("both coordinates or neither")
        if self.x is not None:
            object.__setattr__(self, "x", as_rational(self.x))
            object.__setattr__(self, "y", as_rational(self.y))

    @property
    def is_zero(self) -> bool:
        return self.x is None

    def __str__(self) -> str:
        if self.is_zero:
            return "O"
        return f"{fmt_rational(self.x)},{fmt_rational(self.y)}"

    def __repr__(self) -> str:
        return "Point(O)" if self.is_zero else f"Point({self})"

    @classmethod
    def parse(cls, s: str) -> "Point":
        s = s.strip()
        if s.upper() in ("O", "INF", "INFINITY", "0:1:0"):
            return O
        parts = s.strip("()[] ").split(",")
        if len(parts) != 2:
            raise ValueError(f"cannot parse point {s!r}; expected 'x,y' or 'O'")
        return cls(as_rational(parts[0]), as_rational(parts[1]))


O = Point()
CurvePoint = Point


@dataclass(frozen=True)
class ModelMap:
    """Change of coordinates x = u^2 x' + r, y = u^3 y' + s u^2 x' + t."""

    u: Rational
    r: Rational = mpq(0)
    s: Rational = mpq(0)
    t: Rational = mpq(0)

    def __post_init__(self):
        for name in ("u", "r", "s", "t"):
            object.__setattr__(self, name, as_rational(getattr(self, name)))
        if self.u == 0:
            raise ValueError("ModelMap needs u != 0")

    def inverse(self) -> "ModelMap":
        u, r, s, t = self.u, self.r, self.s, self.t
        return ModelMap(1 / u, -r / u**2, -s / u, (r * s - t) / u**3)

    def compose(self, other: "ModelMap") -> "ModelMap":
        """The map ``other`` applied after ``self``."""
        u1, r1, s1, t1 = self.u, self.r, self.s, self.t
        u2, r2, s2, t2 = other.u, other.r, other.s, other.t
        return ModelMap(u1 * u2, r1 + u1**2 * r2, s1 + u1 * s2, t1 + u1**2 * s1 * r2 + u1**3 * t2)

    def apply(self, P: Point) -> Point:
        if P.is_zero:
            return O
        xr = P.x - self.r
        return Point(xr / self.u**2, (P.y - self.s * xr - self.t) / self.u**3)

    @property
    def is_identity(self) -> bool:
        return self.u == 1 and self.r == 0 and self.s == 0 and self.t == 0


IDENTITY_MAP = ModelMap(1)


@dataclass(frozen=True)
class EllipticCurve:
    """y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6."""

    a1: Rational
    a2: Rational
    a3: Rational
    a4: Rational
    a6: Rational
    b2: Rational = field(init=False, repr=False, compare=False)
    b4: Rational = field(init=False, repr=False, compare=False)
    b6: Rational = field(init=False, repr=False, compare=False)
    b8: Rational = field(init=False, repr=False, compare=False)
    c4: Rational = field(init=False, repr=False, compare=False)
    c6: Rational = field(init=False, repr=False, compare=False)
    discriminant: Rational = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        a1, a2, a3, a4, a6 = (as_rational(getattr(self, n)) for n in ("a1", "a2", "a3", "a4", "a6"))
        for n, v in zip(("a1", "a2", "a3", "a4", "a6"), (a1, a2, a3, a4, a6)):
            object.__setattr__(self, n, v)
        b2 = a1 * a1 + 4 * a2
        b4 = 2 * a4 + a1 * a3
        b6 = a3 * a3 + 4 * a6
        b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4
        c4 = b2 * b2 - 24 * b4
        c6 = -b2**3 + 36 * b2 * b4 - 216 * b6
        disc = -b2 * b2 * b8 - 8 * b4**3 - 27 * b6 * b6 + 9 * b2 * b4 * b6
        if disc == 0:
            raise ValueError(f"singular Weierstrass equation {self.ainvs}")
        assert 4 * b8 == b2 * b6 - b4 * b4
        for n, v in (("b2", b2), ("b4", b4), ("b6", b6), ("b8", b8), ("c4", c4), ("c6", c6), ("discriminant", disc)):
            object.__setattr__(self, n, v)

    @property
    def ainvs(self) -> tuple:
        return (self.a1, self.a2, self.a3, self.a4, self.a6)

    @property
    def is_integral(self) -> bool:
        return all(a.denominator == 1 for a in self.ainvs)

    def __str__(self) -> str:
        return ",".join(fmt_rational(a) for a in self.ainvs)

    @classmethod
    def parse(cls, s: str) -> "EllipticCurve":
        parts = s.strip().strip("[]() ").split(",")
        if len(parts) != 5:
            raise ValueError(f"expected 'a1,a2,a3,a4,a6', got {s!r}")
        return cls(*(as_rational(p) for p in parts))

    # -- points -----------------------------------------------------------

    def residue(self, P: Point) -> Rational:
        x, y = P.x, P.y
        return y * y + self.a1 * x * y + self.a3 * y - x**3 - self.a2 * x * x - self.a4 * x - self.a6

    def on_curve(self, P: Point) -> bool:
        return P.is_zero or self.residue(P) == 0

    def point(self, x, y) -> Point:
        P = Point(as_rational(x), as_rational(y))
        if not self.on_curve(P):
            raise NotOnCurve(self, P, self.residue(P))
        return P

    def check(self, P: Point) -> Point:
        if not self.on_curve(P):
            raise NotOnCurve(self, P, self.residue(P))
        return P

    def neg(self, P: Point) -> Point:
        if P.is_zero:
            return O
        return Point(P.x, -P.y - self.a1 * P.x - self.a3)

    def is_two_torsion(self, P: Point) -> bool:
        return not P.is_zero and 2 * P.y + self.a1 * P.x + self.a3 == 0

    def slope(self, P1: Point, P2: Point):
        """Slope and intercept of the line through P1, P2 (tangent if equal), or None if vertical."""
        if P1.x == P2.x:
            if P1.y != P2.y or self.is_two_torsion(P1):
                return None
            lam = (3 * P1.x**2 + 2 * self.a2 * P1.x + self.a4 - self.a1 * P1.y) / (2 * P1.y + self.a1 * P1.x + self.a3)
        else:
            lam = (P2.y - P1.y) / (P2.x - P1.x)
        return lam, P1.y - lam * P1.x

    def add(self, P1: Point, P2: Point) -> Point:
        if P1.is_zero:
            return P2
        if P2.is_zero:
            return P1
        line = self.slope(P1, P2)
        if line is None:
            return O
        lam, nu = line
        x3 = lam * lam + self.a1 * lam - self.a2 - P1.x - P2.x
        y3 = -(lam + self.a1) * x3 - nu - self.a3
        return Point(x3, y3)

    def mul_n(self, n: int, P: Point) -> Point:
        return self.mul(n, P)

    def sub(self, P1: Point, P2: Point) -> Point:
        return self.add(P1, self.neg(P2))

    def double(self, P: Point) -> Point:
        return self.add(P, P)

    def mul(self, n: int, P: Point) -> Point:
        n = int(n)
        if n < 0:
            return self.mul(-n, self.neg(P))
        result, addend = O, P
        while n:
            if n & 1:
                result = self.add(result, addend)
            n >>= 1
            if n:
                addend = self.double(addend)
        return result

    def is_torsion(self, P: Point, bound: int = TORSION_ORDER_BOUND) -> tuple[bool, int | None]:
        """(True, order) if [m]P = O for some m <= bound, else (False, None)."""
        Q = P
        for m in range(1, bound + 1):
            if Q.is_zero:
                return True, m
            Q = self.add(Q, P)
        return False, None

    # -- models -----------------------------------------------------------

    def transform(self, m: ModelMap) -> "EllipticCurve":
        u, r, s, t = m.u, m.r, m.s, m.t
        a1, a2, a3, a4, a6 = self.ainvs
        return EllipticCurve(
            (a1 + 2 * s) / u,
            (a2 - s * a1 + 3 * r - s * s) / u**2,
            (a3 + r * a1 + 2 * t) / u**3,
            (a4 - s * a3 + 2 * r * a2 - (t + r * s) * a1 + 3 * r * r - 2 * s * t) / u**4,
            (a6 + r * a4 + r * r * a2 + r**3 - t * a3 - t * t - r * t * a1) / u**6,
        )

    def bad_primes(self) -> list[int]:
        return sorted(factor_int(self.discriminant.numerator)) if self.is_integral else []


def transform(E: EllipticCurve, m: ModelMap):
    """The transformed model and the point bijection E -> E'."""
    return E.transform(m), m.apply


def _kraus_ok(c4: int, c6: int, p: int) -> bool:
    # integral model with invariants (c4, c6) exists locally at p
    if p == 3:
        return not (c6 % 9 == 0 and c6 % 27 != 0)
    if p == 2:
        if c6 % 4 == 3:
            return True
        return c4 % 16 == 0 and c6 % 32 in (0, 8)
    return True


def _model_from_c4c6(c4: int, c6: int) -> EllipticCurve:
    b2 = (-c6) % 12
    if b2 > 6:
        b2 -= 12
    b4, r4 = divmod(b2 * b2 - c4, 24)
    b6, r6 = divmod(-(b2**3) + 36 * b2 * b4 - c6, 216)
    assert r4 == 0 and r6 == 0, "Kraus conditions violated"
    a1 = b2 % 2
    a3 = b6 % 2
    a2, q2 = divmod(b2 - a1, 4)
    a4, q4 = divmod(b4 - a1 * a3, 2)
    a6, q6 = divmod(b6 - a3, 4)
    assert q2 == q4 == q6 == 0
    return EllipticCurve(a1, a2, a3, a4, a6)


def _integral_scaling(E: EllipticCurve) -> ModelMap:
    """A pure scaling making the coefficients integral (identity if they already are)."""
    u = mpq(1)
    dens = [a.denominator for a in E.ainvs]
    primes = set()
    for d in dens:
        primes.update(factor_int(d))
    for p in sorted(primes):
        k = 0
        for i, a in zip((1, 2, 3, 4, 6), E.ainvs):
            if a != 0:
                v = valuation(a, p)
                k = max(k, -((v) // i) if v < 0 else 0)
        u /= mpz(p) ** k
    return ModelMap(u)


@lru_cache(maxsize=512)
def minimal_model(E: EllipticCurve) -> tuple[EllipticCurve, ModelMap]:
    """Global minimal model and the map from E to it.

    Already-minimal integral input is returned unchanged; otherwise the result
    is the reduced minimal model (a1, a3 in {0, 1}, a2 in {-1, 0, 1}).
    """
    m0 = _integral_scaling(E)
    E0 = E.transform(m0)
    assert E0.is_integral
    c4, c6, disc = int(E0.c4), int(E0.c6), int(E0.discriminant)
    u = 1
    for p, e in factor_int(disc).items():
        if e < 12:
            continue
        k = e // 12
        while k > 0 and (c4 % p ** (4 * k) or c6 % p ** (6 * k)):
            k -= 1
        while k > 0 and not _kraus_ok(c4 // p ** (4 * k), c6 // p ** (6 * k), p):
            k -= 1
        u *= p**k
    if u == 1:
        if m0.is_identity:
            return E, IDENTITY_MAP
        return E0, m0
    target = _model_from_c4c6(c4 // u**4, c6 // u**6)
    a1, a2, a3 = E0.a1, E0.a2, E0.a3
    U = mpq(u)
    s = (U * target.a1 - a1) / 2
    r = (U**2 * target.a2 - a2 + s * a1 + s * s) / 3
    t = (U**3 * target.a3 - a3 - r * a1) / 2
    m1 = ModelMap(U, r, s, t)
    assert E0.transform(m1) == target, "minimal model reconstruction failed"
    return target, m0.compose(m1)


def is_minimal(E: EllipticCurve) -> bool:
    return minimal_model(E)[1].is_identity
