"""Local and global canonical heights on elliptic curves over Q.

Normalization: the local heights satisfy, at every place v,

    lambda_v(2P) = 4 lambda_v(P) - log |2y + a1 x + a3|_v,

and lambda_v(P) - 1/2 log+ |x(P)|_v is bounded, so no discriminant term appears
and sum_v lambda_v(P) equals lim 4^-k * naive_height([2^k]P) with
naive_height = 1/2 log max(|num x|, den x).
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath
import sympy
from gmpy2 import mpq

from .curve import O, EllipticCurve, Point, minimal_model
from .places import (
    ARCH,
    DEFAULT_DIGITS,
    ExactLog,
    LocalHeightValue,
    Place,
    RealValue,
    _mpf,
    factor_int,
    log_real,
    to_real,
    valuation,
)


class SupportCollision(ValueError):
    """A point hit the support of a divisor or a function's zero/pole set."""

    def __init__(self, message: str, divisor=None):
        self.divisor = divisor
        super().__init__(message)


def _val(x, p: int) -> float | int:
    return float("inf") if x == 0 else valuation(x, p)


# ---------------------------------------------------------------------------
# archimedean


@lru_cache(maxsize=256)
def _real_roots_of_2tors(b2, b4, b6, dps: int) -> tuple:
    with mpmath.workdps(dps):
        roots = mpmath.polyroots([4, _mpf(b2), 2 * _mpf(b4), _mpf(b6)], maxsteps=200, extraprec=2 * dps)
        tol = mpmath.mpf(10) ** (-(dps // 2))
        real = sorted(mpmath.re(z) for z in roots if abs(mpmath.im(z)) < tol)
        return tuple(real)


def _shifted_b(E: EllipticCurve, r):
    b2, b4, b6, b8 = E.b2, E.b4, E.b6, E.b8
    return (
        b2 + 12 * r,
        b4 + r * b2 + 6 * r * r,
        b6 + 2 * r * b4 + r * r * b2 + 4 * r**3,
        b8 + 3 * r * b6 + 3 * r * r * b4 + r**3 * b2 + 3 * r**4,
    )


@lru_cache(maxsize=256)
def _arch_setup(E: EllipticCurve):
    """Integral shift r with x - r >= 1 on E(R), shifted b-invariants, and the bound on |log z|."""
    roots = _real_roots_of_2tors(E.b2, E.b4, E.b6, 60)
    r = mpq(int(mpmath.floor(roots[0])) - 1)
    b2, b4, b6, b8 = _shifted_b(E, r)
    with mpmath.workdps(60):
        sh = [x - _mpf(r) for x in roots]
        if len(sh) == 1:
            intervals = [(mpmath.mpf(0), 1 / sh[0])]
        else:
            intervals = [(mpmath.mpf(0), 1 / sh[2]), (1 / sh[1], 1 / sh[0])]
        B4, B6, B8 = _mpf(b4), _mpf(b6), _mpf(b8)

        def z(t):
            return 1 - B4 * t**2 - 2 * B6 * t**3 - B8 * t**4

        crit = [mpmath.mpf(0)]
        if B8 != 0 or B6 != 0:
            # z'(t) = -t (2 b4 + 6 b6 t + 4 b8 t^2)
            coeffs = [4 * B8, 6 * B6, 2 * B4] if B8 != 0 else [6 * B6, 2 * B4]
            for c in mpmath.polyroots(coeffs, maxsteps=200, extraprec=100):
                if abs(mpmath.im(c)) < mpmath.mpf(10) ** -30:
                    crit.append(mpmath.re(c))
        cands = []
        for lo, hi in intervals:
            cands += [lo, hi] + [c for c in crit if lo <= c <= hi]
        zs = [z(t) for t in cands]
        if min(zs) <= 0:
            raise ArithmeticError("Tate series: z not positive on E(R); shift failed")
        M = max(abs(mpmath.log(v)) for v in zs)
        M = M * mpmath.mpf("1.01") + mpmath.mpf(10) ** -20
    return r, (b2, b4, b6, b8), M


@lru_cache(maxsize=4096)
def lambda_arch(E: EllipticCurve, P: Point, digits: int = DEFAULT_DIGITS) -> RealValue:
    """Archimedean local height by Tate's series, with certified truncation error."""
    if P.is_zero:
        raise ValueError("archimedean local height has a log singularity at O")
    r, (b2, b4, b6, b8), M = _arch_setup(E)
    target = mpmath.mpf(10) ** (-(digits + 2))
    # tail after N terms is at most M 4^-N / 6
    N = 1
    while M * mpmath.mpf(4) ** (-N) / 6 > target:
        N += 1
    guard = 30 + int(0.61 * N)
    with mpmath.workdps(digits + guard):
        B2, B4, B6, B8 = (_mpf(b) for b in (b2, b4, b6, b8))
        xs = _mpf(P.x - r)
        t = 1 / xs
        acc = mpmath.mpf(0)
        scale = mpmath.mpf(1)
        for _ in range(N):
            if t == 0:
                break
            t2 = t * t
            w = 4 * t + B2 * t2 + 2 * B4 * t2 * t + B6 * t2 * t2
            zz = 1 - B4 * t2 - 2 * B6 * t2 * t - B8 * t2 * t2
            acc += scale * mpmath.log(zz)
            scale /= 4
            t = w / zz
        value = mpmath.log(xs) / 2 + acc / 8
        err = M * mpmath.mpf(4) ** (-N) / 6 + mpmath.mpf(10) ** (-(digits + guard - 5)) * N
    return RealValue(value, err)


# ---------------------------------------------------------------------------
# finite places


def lambda_p_minimal(E: EllipticCurve, P: Point, p: int) -> Fraction:
    """Coefficient of log p in lambda_p(P), E assumed minimal at p."""
    x, y = P.x, P.y
    vx = _val(x, p)
    if _val(E.discriminant, p) == 0:
        return Fraction(max(0, -vx), 2) if vx != float("inf") else Fraction(0)
    a1, a2, a3, a4 = E.a1, E.a2, E.a3, E.a4
    A = _val(3 * x * x + 2 * a2 * x + a4 - a1 * y, p)
    B = _val(2 * y + a1 * x + a3, p)
    if A <= 0 or B <= 0:
        return Fraction(max(0, -vx), 2) if vx != float("inf") else Fraction(0)
    C = _val(3 * x**4 + E.b2 * x**3 + 3 * E.b4 * x * x + 3 * E.b6 * x + E.b8, p)
    N = valuation(E.discriminant, p)
    if _val(E.c4, p) == 0:
        M = Fraction(N, 2) if B == float("inf") else min(Fraction(B), Fraction(N, 2))
        return -M * (N - M) / (2 * N)
    if C >= 3 * B:
        return Fraction(-B, 3)
    return Fraction(-C, 8)


@lru_cache(maxsize=4096)
def lambda_p(E: EllipticCurve, P: Point, p: int) -> ExactLog:
    """Finite local height at p as an exact multiple of log p.

    Non-minimal models are handled through the minimal model: if x = u^2 x' + r
    maps E to E_min then lambda_E(P) = lambda_min(P') + log|u|_p.
    """
    if P.is_zero:
        raise ValueError("finite local height has a log singularity at O")
    Em, m = minimal_model(E)
    c = lambda_p_minimal(Em, m.apply(P), p)
    if m.u != 1:
        c -= valuation(m.u, p)
    return ExactLog(c, p)


def lambda_v(E: EllipticCurve, P: Point, v: Place, digits: int = DEFAULT_DIGITS) -> LocalHeightValue:
    if v.is_archimedean:
        return lambda_arch(E, P, digits)
    return lambda_p(E, P, v.p)


def height_places(E: EllipticCurve, points) -> list[Place]:
    """Places where some lambda_v(P) can be nonzero, finite ascending then infinity."""
    Em, m = minimal_model(E)
    primes = set(factor_int(Em.discriminant.numerator))
    for P in points:
        if not P.is_zero:
            primes.update(factor_int(m.apply(P).x.denominator))
            primes.update(factor_int(P.x.denominator))
    if m.u != 1:
        primes.update(factor_int(m.u.numerator))
        primes.update(factor_int(m.u.denominator))
    return [Place(p) for p in sorted(primes)] + [ARCH]


def naive_height(E: EllipticCurve, P: Point, digits: int = DEFAULT_DIGITS) -> RealValue:
    if P.is_zero:
        return RealValue.exact(0)
    x = P.x
    m = max(abs(int(x.numerator)), int(x.denominator))
    return log_real(m, digits) * mpq(1, 2)


def local_height_table(E: EllipticCurve, P: Point, digits: int = DEFAULT_DIGITS) -> list[tuple[Place, LocalHeightValue]]:
    if P.is_zero:
        return []
    return [(v, lambda_v(E, P, v, digits)) for v in height_places(E, [P])]


def tate_limit_height(E: EllipticCurve, P: Point, digits: int = DEFAULT_DIGITS, depth: int | None = None) -> RealValue:
    """lim 4^-k naive_height([2^k]P) evaluated place by place, with certified tail."""
    return TateLimit.for_curve(E).height(P, digits=digits, depth=depth)


def canonical_height(E: EllipticCurve, P: Point, digits: int = DEFAULT_DIGITS, cross_check: bool = False,
                     cross_tol: float = 1e-8) -> RealValue:
    """Sum of local heights; optionally verified against the Tate limit."""
    if P.is_zero:
        return RealValue.exact(0)
    Em, m = minimal_model(E)
    Pm = m.apply(P)
    total = RealValue.exact(0)
    for _, lam in local_height_table(Em, Pm, digits):
        total = total + to_real(lam, digits)
    if cross_check:
        other = tate_limit_height(Em, Pm, digits=min(digits, 30))
        if not total.agrees_with(other, cross_tol):
            raise ArithmeticError(f"canonical height cross-check failed: {total} vs {other}")
    return total


def nt_pairing(E: EllipticCurve, P: Point, Q: Point, digits: int = DEFAULT_DIGITS) -> RealValue:
    """<P, Q> = h(P + Q) - h(P) - h(Q)."""
    return (canonical_height(E, E.add(P, Q), digits) - canonical_height(E, P, digits)
            - canonical_height(E, Q, digits))


# ---------------------------------------------------------------------------
# Tate limit evaluated place by place


def _poly_coeffs(E: EllipticCurve):
    # phi = X^4 - b4 X^2 Z^2 - 2 b6 X Z^3 - b8 Z^4, psi = 4 X^3 Z + b2 X^2 Z^2 + 2 b4 X Z^3 + b6 Z^4
    phi = [1, 0, -E.b4, -2 * E.b6, -E.b8]
    psi = [0, 4, E.b2, 2 * E.b4, E.b6]
    return [int(c) for c in phi], [int(c) for c in psi]


def _bezout(phi, psi, target: int):
    """Degree-3 forms f, g with f phi + g psi = X^7 (target 0) or Z^7 (target 7)."""
    rows = []
    for k in range(8):  # coefficient of X^{7-k} Z^k
        row = []
        for j in range(4):
            row.append(phi[k - j] if 0 <= k - j <= 4 else 0)
        for j in range(4):
            row.append(psi[k - j] if 0 <= k - j <= 4 else 0)
        rows.append(row)
    A = sympy.Matrix(rows)
    b = sympy.Matrix([1 if k == target else 0 for k in range(8)])
    return A, A.LUsolve(b)


@dataclass(frozen=True)
class TateLimit:
    """Iterates (X:Z) -> (phi:psi), tracking log max(|X|_v, |Z|_v) separately at every place."""

    curve: EllipticCurve
    phi: tuple
    psi: tuple
    resultant: int
    bad: tuple  # ((p, v_p(Res)), ...)
    arch_bound: object  # |log max(|phi|,|psi|) - 4 log max(|X|,|Z|)| <= arch_bound

    @classmethod
    @lru_cache(maxsize=64)
    def for_curve(cls, E: EllipticCurve) -> "TateLimit":
        if not E.is_integral:
            E = minimal_model(E)[0]
        phi, psi = _poly_coeffs(E)
        A, sol7 = _bezout(phi, psi, 7)
        _, sol0 = _bezout(phi, psi, 0)
        res = int(A.det())
        with mpmath.workdps(40):
            upper = max(sum(abs(c) for c in phi), sum(abs(c) for c in psi))
            C = max(sum(abs(sympy.Rational(c)) for c in sol7), sum(abs(sympy.Rational(c)) for c in sol0))
            arch_bound = max(mpmath.log(upper), mpmath.log(mpmath.mpf(C.p) / C.q), mpmath.mpf(0))
        bad = tuple(sorted(factor_int(abs(res)).items()))
        return cls(E, tuple(phi), tuple(psi), res, bad, arch_bound)

    @property
    def step_bound(self):
        """Bound on |sum_v (log max(|phi|,|psi|)_v - 4 log max(|X|,|Z|)_v)|."""
        return self.arch_bound + sum(e * mpmath.log(p) for p, e in self.bad)

    def depth_for(self, digits: int) -> int:
        K = 1
        B = self.step_bound
        while B / (6 * mpmath.mpf(4) ** K) > mpmath.mpf(10) ** (-digits):
            K += 1
        return K

    def _step(self, X, Z):
        phi, psi = self.phi, self.psi
        X2, Z2 = X * X, Z * Z
        f = X2 * X2 + phi[2] * X2 * Z2 + phi[3] * X * Z2 * Z + phi[4] * Z2 * Z2
        g = psi[1] * X2 * X * Z + psi[2] * X2 * Z2 + psi[3] * X * Z2 * Z + psi[4] * Z2 * Z2
        return f, g

    def arch_logs(self, x, K: int, digits: int) -> list:
        """L_k = log max(|X_k|, |Z_k|) for the unreduced integer iterates, k = 0..K."""
        with mpmath.workdps(digits + 20):
            X, Z = _mpf(int(x.numerator)), _mpf(int(x.denominator))
            m = max(abs(X), abs(Z))
            L = mpmath.log(m)
            X, Z = X / m, Z / m
            out = [L]
            for _ in range(K):
                X, Z = self._step(X, Z)
                m = max(abs(X), abs(Z))
                L = 4 * L + mpmath.log(m)
                X, Z = X / m, Z / m
                out.append(L)
        return out

    def padic_logs(self, x, p: int, e: int, K: int) -> list:
        """Coefficients c_k with log max(|X_k|_p, |Z_k|_p) = -c_k log p (exact)."""
        prec = K * e + 10
        mod = p**prec
        X, Z = int(x.numerator), int(x.denominator)
        out = [0]
        c = 0
        for _ in range(K):
            X, Z = self._step(X % mod, Z % mod)
            X, Z = X % mod, Z % mod
            s = min(_val(X, p), _val(Z, p))
            if s == float("inf") or s > e:
                raise ArithmeticError("p-adic precision exhausted in Tate limit")
            X, Z = X // p**s, Z // p**s
            c = 4 * c + s
            out.append(c)
        return out

    def terms(self, P: Point, K: int, digits: int) -> list:
        """a_k = 4^-k * 1/2 * sum_v log max(|X_k|_v, |Z_k|_v) for k = 0..K."""
        x = P.x
        arch = self.arch_logs(x, K, digits)
        fin = [0] * (K + 1)
        with mpmath.workdps(digits + 20):
            for p, e in self.bad:
                logp = mpmath.log(p)
                for k, c in enumerate(self.padic_logs(x, p, e, K)):
                    fin[k] = fin[k] - c * logp
            return [(arch[k] + fin[k]) / (2 * mpmath.mpf(4) ** k) for k in range(K + 1)]

    def height(self, P: Point, digits: int = DEFAULT_DIGITS, depth: int | None = None) -> RealValue:
        E = self.curve
        if P.is_zero:
            return RealValue.exact(0)
        K = depth if depth is not None else self.depth_for(digits + 1)
        a = self.terms(P, K, digits)[-1]
        with mpmath.workdps(digits + 20):
            tail = self.step_bound / (6 * mpmath.mpf(4) ** K)
        return RealValue(a, tail + mpmath.mpf(10) ** (-(digits + 10)))


# ---------------------------------------------------------------------------
# the degree-zero class attached to Q0


@dataclass(frozen=True)
class DivisorClassParam:
    """Parameter Q0 of the extension with an auxiliary point R.

    The reference divisor is D_R = (R) - (T), T = Q0 + R, which is linearly
    equivalent to (-Q0) - (O).  It must avoid the origin.
    """

    curve: EllipticCurve
    Q0: Point
    R: Point

    def __post_init__(self):
        E = self.curve
        E.check(self.Q0)
        E.check(self.R)
        T = E.add(self.Q0, self.R)
        pts = [self.R, T]
        if any(X.is_zero for X in pts):
            raise SupportCollision(f"reference divisor meets the origin (R={self.R}, Q0+R={T})")

    @property
    def T(self) -> Point:
        return self.curve.add(self.Q0, self.R)

    @property
    def support(self) -> tuple:
        return (self.R, self.T) if not self.Q0.is_zero else ()

    def with_R(self, R: Point) -> "DivisorClassParam":
        return DivisorClassParam(self.curve, self.Q0, R)

    def admits(self, P: Point) -> bool:
        return P not in self.support


def lambda_D(param: DivisorClassParam, P: Point, v: Place, digits: int = DEFAULT_DIGITS) -> LocalHeightValue:
    """Canonical local metric on the class of Q0: -log ||s_D||_v(P), zero at O.

    lambda_v(P - R) - lambda_v(P - T) - lambda_v(R) + lambda_v(T).
    """
    E, Q0 = param.curve, param.Q0
    if P.is_zero or Q0.is_zero:
        return ExactLog(Fraction(0), v.p) if not v.is_archimedean else RealValue.exact(0)
    if not param.admits(P):
        raise SupportCollision(f"point {P} lies on the reference divisor (R={param.R}, T={param.T})",
                               divisor=param.support)
    R, T = param.R, param.T
    return (lambda_v(E, E.sub(P, R), v, digits) - lambda_v(E, E.sub(P, T), v, digits)
            - lambda_v(E, R, v, digits) + lambda_v(E, T, v, digits))


def lambda_D_places(param: DivisorClassParam, P: Point, extra=()) -> list[Place]:
    """Places where lambda_D(P, .) may be nonzero."""
    E = param.curve
    if P.is_zero or param.Q0.is_zero:
        return [ARCH]
    pts = [E.sub(P, param.R), E.sub(P, param.T), param.R, param.T, *extra]
    return height_places(E, pts)
