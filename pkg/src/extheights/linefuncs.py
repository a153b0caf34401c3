"""Exact evaluation of products of linear forms a*y + b*x + c on a Weierstrass curve.

A rational function is kept as numerator and denominator lists of linear
forms.  At a point Q each form is expanded in a local uniformizer and only
its order and leading coefficient are kept, so zeros and poles of individual
factors that cancel in the product never cause a 0/0.
"""
from __future__ import annotations

from dataclasses import dataclass

from gmpy2 import mpq

from .curve import EllipticCurve, Point


class FunctionCollision(ZeroDivisionError):
    """The evaluation point is a genuine zero or pole of the function."""

    def __init__(self, point: Point, order: int):
        self.point = point
        self.order = order
        kind = "zero" if order > 0 else "pole"
        super().__init__(f"function has a {kind} of order {abs(order)} at {point}")


@dataclass(frozen=True)
class LinearForm:
    """a*y + b*x + c."""

    a: object = mpq(0)
    b: object = mpq(0)
    c: object = mpq(0)

    def at(self, P: Point):
        return self.a * P.y + self.b * P.x + self.c


def line_through(E: EllipticCurve, A: Point, B: Point) -> LinearForm:
    """The line through A and B (tangent if A == B); vertical when A + B = O."""
    sl = E.slope(A, B)
    if sl is None:
        return LinearForm(mpq(0), mpq(1), -A.x)
    lam, nu = sl
    return LinearForm(mpq(1), -lam, -nu)


def vertical(P: Point) -> LinearForm:
    return LinearForm(mpq(0), mpq(1), -P.x)


def h_forms(E: EllipticCurve, A: Point, B: Point) -> tuple[list, list]:
    """Forms of the function with divisor (A) + (B) - (A + B) - (O)."""
    if A.is_zero or B.is_zero:
        return [], []
    S = E.add(A, B)
    if S.is_zero:
        return [vertical(A)], []
    return [line_through(E, A, B)], [vertical(S)]


# -- local expansions -------------------------------------------------------

def _mul_series(f, g, n):
    out = [mpq(0)] * (n + 1)
    for i, a in enumerate(f[: n + 1]):
        if a == 0:
            continue
        for j, b in enumerate(g[: n + 1 - i]):
            out[i + j] += a * b
    return out


def _y_series(E: EllipticCurve, Q: Point, n: int = 3):
    """y as a power series in u = x - x(Q), coefficients 0..n (Q not 2-torsion)."""
    x0, y0 = Q.x, Q.y
    d = 2 * y0 + E.a1 * x0 + E.a3
    A1 = 3 * x0 * x0 + 2 * E.a2 * x0 + E.a4 - E.a1 * y0
    A2 = 3 * x0 + E.a2
    base = [mpq(0), A1, A2, mpq(1)] + [mpq(0)] * n
    s = [mpq(0)] * (n + 1)
    for _ in range(n):
        # s = (A1 u + A2 u^2 + u^3 - s^2 - a1 u s) / d
        s2 = _mul_series(s, s, n)
        us = [mpq(0)] + s[:n]
        s = [(base[k] - s2[k] - E.a1 * us[k]) / d for k in range(n + 1)]
    s[0] = y0
    return s


def _local(E: EllipticCurve, f: LinearForm, Q: Point, cache: dict) -> tuple[int, object]:
    """(order, leading coefficient) of f at Q in the fixed uniformizer at Q."""
    if Q.is_zero:
        # z = -x/y: y ~ -z^-3, x ~ z^-2
        if f.a != 0:
            return -3, -f.a
        if f.b != 0:
            return -2, f.b
        return 0, f.c
    c0 = f.at(Q)
    if c0 != 0:
        return 0, c0
    if E.is_two_torsion(Q):
        # uniformizer s = y - y0; x - x0 = s^2 / A1 + O(s^3)
        if f.a != 0:
            return 1, f.a
        A1 = 3 * Q.x**2 + 2 * E.a2 * Q.x + E.a4 - E.a1 * Q.y
        return 2, f.b / A1
    ys = cache.get("y")
    if ys is None:
        ys = cache["y"] = _y_series(E, Q, 3)
    coeffs = [None, f.a * ys[1] + f.b, f.a * ys[2], f.a * ys[3]]
    for k in (1, 2, 3):
        if coeffs[k] != 0:
            return k, coeffs[k]
    raise AssertionError("linear form vanishes to order > 3 on a cubic")


def local_value(E: EllipticCurve, num: list, den: list, Q: Point) -> tuple[int, object]:
    """(order, leading coefficient) of prod(num)/prod(den) at Q."""
    cache: dict = {}
    order, lead = 0, mpq(1)
    for f in num:
        k, c = _local(E, f, Q, cache)
        order += k
        lead *= c
    for f in den:
        k, c = _local(E, f, Q, cache)
        order -= k
        lead /= c
    return order, lead


def evaluate(E: EllipticCurve, num: list, den: list, Q: Point):
    order, lead = local_value(E, num, den, Q)
    if order != 0:
        raise FunctionCollision(Q, order)
    return lead


def evaluate_normalized(E: EllipticCurve, num: list, den: list, Q: Point):
    """Value at Q of the function scaled to take the value 1 at O."""
    return evaluate(E, num, den, Q) / evaluate(E, num, den, Point())
