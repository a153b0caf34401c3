"""The extension of E by the multiplicative group attached to a point Q0.

Points are pairs (P, t): a base point and the fiber coordinate against the
reference section s_D of D = (R) - (Q0 + R).  The group law is

    (P1, t1) + (P2, t2) = (P1 + P2, t1 t2 / g(P1, P2)),

where g is the rigidified function with divisor m*D - p1*D - p2*D, so that the
canonical fiber norm |t|_v exp(-lambda_D(P, v)) is multiplicative.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from gmpy2 import mpq

from .curve import O, EllipticCurve, Point
from .heights import DivisorClassParam, SupportCollision
from .linefuncs import FunctionCollision, h_forms, local_value
from .places import as_rational, fmt_rational


@dataclass(frozen=True)
class ExtensionData:
    param: DivisorClassParam
    # deterministic fallback references tried when a chain hits the support
    candidates: tuple = field(default=(), compare=False)

    @property
    def curve(self) -> EllipticCurve:
        return self.param.curve

    @property
    def Q0(self) -> Point:
        return self.param.Q0

    @property
    def R(self) -> Point:
        return self.param.R

    def with_R(self, R: Point) -> "ExtensionData":
        return ExtensionData(self.param.with_R(R), self.candidates)

    @classmethod
    def build(cls, E: EllipticCurve, Q0: Point, R: Point | None = None, extra_candidates=()) -> "ExtensionData":
        cands = tuple(reference_candidates(E, Q0, extra=extra_candidates))
        if R is None:
            if Q0.is_zero:
                R = cands[0] if cands else O
            else:
                if not cands:
                    raise SupportCollision("no admissible reference point found")
                R = cands[0]
        return cls(DivisorClassParam(E, Q0, R), cands)


@dataclass(frozen=True)
class ExtPoint:
    base: Point
    t: object

    def __post_init__(self):
        t = as_rational(self.t)
        if t == 0:
            raise ValueError("fiber coordinate must be nonzero")
        object.__setattr__(self, "t", t)

    def __str__(self) -> str:
        return f"{self.base};{fmt_rational(self.t)}"

    @classmethod
    def parse(cls, s: str) -> "ExtPoint":
        if ";" not in s:
            raise ValueError(f"expected 'x,y;t' or 'O;t', got {s!r}")
        b, t = s.rsplit(";", 1)
        return cls(Point.parse(b), as_rational(t))


NEUTRAL = ExtPoint(O, 1)


def admissible_reference(E: EllipticCurve, Q0: Point, R: Point) -> bool:
    """R, Q0 + R and their negatives pairwise distinct and away from O."""
    if R.is_zero or Q0.is_zero:
        return not R.is_zero
    T = E.add(Q0, R)
    pts = [R, T, E.neg(R), E.neg(T)]
    return not any(p.is_zero for p in pts) and len(set(pts)) == 4


def _small_integral_points(E: EllipticCurve, bound: int = 30) -> list[Point]:
    import gmpy2

    out = []
    if not E.is_integral:
        return out
    for x in range(-bound, bound + 1):
        b = int(E.a1) * x + int(E.a3)
        c = -(x**3 + int(E.a2) * x * x + int(E.a4) * x + int(E.a6))
        disc = b * b - 4 * c
        if disc < 0 or not gmpy2.is_square(disc):
            continue
        s = int(gmpy2.isqrt(disc))
        for y2 in sorted({-b + s, -b - s}):
            if y2 % 2 == 0:
                out.append(Point(x, y2 // 2))
    return out


def reference_candidates(E: EllipticCurve, Q0: Point, extra=(), limit: int = 24) -> list[Point]:
    """Deterministic list of admissible reference points.

    Small integral points S, then S + [k]Q0 for k = 1, -1, 2, -2, in that order.
    """
    base = list(extra) + _small_integral_points(E)
    seen, out = set(), []
    shifts = [0, 1, -1, 2, -2]
    for k in shifts:
        kQ = E.mul(k, Q0)
        for S in base:
            R = E.add(S, kQ)
            if R in seen or not admissible_reference(E, Q0, R):
                continue
            seen.add(R)
            out.append(R)
            if len(out) >= limit:
                return out
    return out


# ---------------------------------------------------------------------------
# cocycle


def _cocycle_forms(E: EllipticCurve, R: Point, T: Point, P2: Point):
    """Forms of F = h(R - P2, P2) / h(T - P2, P2), divisor (R-P2) - (R) - (T-P2) + (T) in P1."""
    n1, d1 = h_forms(E, E.sub(R, P2), P2)
    n2, d2 = h_forms(E, E.sub(T, P2), P2)
    return n1 + d2, d1 + n2


def cocycle_g(data: ExtensionData, P1: Point, P2: Point):
    """Value at (P1, P2) of the rigidified function with divisor m*D - p1*D - p2*D."""
    E, param = data.curve, data.param
    if P1.is_zero or P2.is_zero or param.Q0.is_zero:
        return mpq(1)
    R, T = param.R, param.T
    num, den = _cocycle_forms(E, R, T, P2)
    o1, v1 = local_value(E, num, den, P1)
    o0, v0 = local_value(E, num, den, O)
    if o1 != 0 or o0 != 0:
        raise SupportCollision(
            f"cocycle at ({P1}, {P2}) meets the reference divisor (R={R}) - (T={T})",
            divisor=(R, T),
        )
    return v1 / v0


def _check_base(data: ExtensionData, P: Point):
    if not data.param.admits(P):
        raise SupportCollision(f"base {P} lies on the reference divisor (R={data.R}, T={data.param.T})",
                               divisor=data.param.support)


def _add_direct(data: ExtensionData, X1: ExtPoint, X2: ExtPoint) -> ExtPoint:
    _check_base(data, X1.base)
    _check_base(data, X2.base)
    S = data.curve.add(X1.base, X2.base)
    _check_base(data, S)
    return ExtPoint(S, X1.t * X2.t / cocycle_g(data, X1.base, X2.base))


def _neg_direct(data: ExtensionData, X: ExtPoint) -> ExtPoint:
    _check_base(data, X.base)
    if X.base.is_zero:
        return ExtPoint(O, 1 / X.t)
    negP = data.curve.neg(X.base)
    _check_base(data, negP)
    return ExtPoint(negP, cocycle_g(data, X.base, negP) / X.t)


def _via_other_reference(data: ExtensionData, op, inputs, target: Point, first: Exception) -> ExtPoint:
    """Run op against another reference point and express the result against R again."""
    for X in inputs:
        _check_base(data, X.base)
    _check_base(data, target)
    for R2 in data.candidates:
        if R2 == data.R:
            continue
        try:
            moved = [change_reference(data, R2, X) for X in inputs]
            d2 = moved[0][0] if moved else data.with_R(R2)
            Y2 = op(d2, *[m[1] for m in moved])
            return ExtPoint(target, Y2.t / change_function_value(data, R2, target))
        except (SupportCollision, FunctionCollision):
            continue
    raise SupportCollision(f"no admissible reference among {len(data.candidates)} candidates: {first}")


def ext_add(data: ExtensionData, X1: ExtPoint, X2: ExtPoint) -> ExtPoint:
    """(P1 + P2, t1 t2 / g(P1, P2))."""
    try:
        return _add_direct(data, X1, X2)
    except (SupportCollision, FunctionCollision) as first:
        target = data.curve.add(X1.base, X2.base)
        return _via_other_reference(data, _add_direct, [X1, X2], target, first)


def ext_neg(data: ExtensionData, X: ExtPoint) -> ExtPoint:
    """(-P, g(P, -P) / t)."""
    try:
        return _neg_direct(data, X)
    except (SupportCollision, FunctionCollision) as first:
        return _via_other_reference(data, _neg_direct, [X], data.curve.neg(X.base), first)


def g_n(data: ExtensionData, n: int, P: Point):
    """Function with divisor [n]*D - nD, normalized at O; g_0 = g_1 = 1.

    Satisfies g_{a+b}(P) = g_a(P) g_b(P) g([a]P, [b]P).
    """
    E = data.curve
    if n < 0:
        mP = E.mul(-n, P)
        return 1 / (g_n(data, -n, P) * cocycle_g(data, mP, E.neg(mP)))
    if n <= 1 or P.is_zero:
        return mpq(1)
    # left-to-right binary chain
    bits = bin(n)[3:]
    k, Q, g = 1, P, mpq(1)
    for b in bits:
        g = g * g * cocycle_g(data, Q, Q)
        Q = E.double(Q)
        k *= 2
        if b == "1":
            g = g * cocycle_g(data, Q, P)
            Q = E.add(Q, P)
            k += 1
    return g


def change_function_value(data: ExtensionData, new_R: Point, P: Point):
    """f(P) for the function f with divisor D_R - D_new and f(O) = 1."""
    E, Q0, R = data.curve, data.Q0, data.R
    if Q0.is_zero or new_R == R:
        return mpq(1)
    n1, d1 = h_forms(E, R, Q0)
    n2, d2 = h_forms(E, new_R, Q0)
    num, den = n1 + d2, d1 + n2
    oP, vP = local_value(E, num, den, P)
    o0, v0 = local_value(E, num, den, O)
    if oP != 0 or o0 != 0:
        raise SupportCollision(f"reference change R={R} -> {new_R} undefined at {P}", divisor=(R, new_R))
    return vP / v0


def change_reference(data: ExtensionData, new_R: Point, X: ExtPoint) -> tuple[ExtensionData, ExtPoint]:
    """Express X against the reference section of D_{new_R}; t' = t f(P)."""
    E = data.curve
    if not admissible_reference(E, data.Q0, new_R):
        raise SupportCollision(f"inadmissible reference point {new_R}")
    new = data.with_R(new_R)
    _check_base(data, X.base)
    _check_base(new, X.base)
    return new, ExtPoint(X.base, X.t * change_function_value(data, new_R, X.base))


def _mul_direct(data: ExtensionData, n: int, X: ExtPoint) -> ExtPoint:
    E = data.curve
    _check_base(data, X.base)
    if n == 0:
        return NEUTRAL
    if n < 0:
        return _neg_direct(data, _mul_direct(data, -n, X))
    P = X.base
    # every intermediate multiple must avoid the support
    for k in _chain_multiples(n):
        _check_base(data, E.mul(k, P))
    return ExtPoint(E.mul(n, P), X.t**n / g_n(data, n, P))


def _chain_multiples(n: int) -> list[int]:
    ks, k = [], 1
    for b in bin(n)[3:]:
        k *= 2
        ks.append(k)
        if b == "1":
            k += 1
            ks.append(k)
    return ks


def ext_mul_n(data: ExtensionData, n: int, X: ExtPoint) -> ExtPoint:
    """[n]X: base [n]P, fiber t^n / g_n(P); retries with other references on collision."""
    n = int(n)
    try:
        return _mul_direct(data, n, X)
    except (SupportCollision, FunctionCollision) as first:
        target = data.curve.mul(n, X.base)
        return _via_other_reference(data, lambda d, Y: _mul_direct(d, n, Y), [X], target, first)


def ext_sum(data: ExtensionData, points) -> ExtPoint:
    acc = NEUTRAL
    for X in points:
        acc = ext_add(data, acc, X)
    return acc


# ---------------------------------------------------------------------------
# several factors over one base


@dataclass(frozen=True)
class MultiExtPoint:
    base: Point
    ts: tuple

    def __post_init__(self):
        ts = tuple(as_rational(t) for t in self.ts)
        if any(t == 0 for t in ts):
            raise ValueError("fiber coordinates must be nonzero")
        object.__setattr__(self, "ts", ts)

    def factor(self, i: int) -> ExtPoint:
        return ExtPoint(self.base, self.ts[i])


def multi_ext_add(datas, X1: MultiExtPoint, X2: MultiExtPoint) -> MultiExtPoint:
    parts = [ext_add(d, X1.factor(i), X2.factor(i)) for i, d in enumerate(datas)]
    base = datas[0].curve.add(X1.base, X2.base)
    return MultiExtPoint(base, tuple(p.t for p in parts))


def multi_ext_mul_n(datas, n: int, X: MultiExtPoint) -> MultiExtPoint:
    parts = [ext_mul_n(d, n, X.factor(i)) for i, d in enumerate(datas)]
    return MultiExtPoint(datas[0].curve.mul(n, X.base), tuple(p.t for p in parts))


def multi_neutral(k: int) -> MultiExtPoint:
    return MultiExtPoint(O, tuple([1] * k))
