"""Metrized rank-one modules over Z and adelic lines over Q.

An adelic line is a one-dimensional Q-vector space with basis e and norms
r_v = ||e||_v.  Finite norms are recorded as exponents (r_p = p^e_p); all
unlisted primes have r_p = 1.  The archimedean norm is exact when rational.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
from gmpy2 import mpq

from .curve import Point
from .extension import ExtensionData
from .heights import lambda_D, lambda_D_places
from .places import (
    ARCH,
    DEFAULT_DIGITS,
    RealValue,
    as_rational,
    fmt_rational,
    log_real,
    to_fraction,
    valuation,
    prime_support,
)
from .relative import LogRational


@dataclass(frozen=True)
class Section:
    c: object

    def __post_init__(self):
        c = as_rational(self.c)
        if c == 0:
            raise ValueError("the zero section has no degree")
        object.__setattr__(self, "c", c)


@dataclass(frozen=True)
class MetrizedLine:
    """Z e with ||e|| = r.  r is a positive rational, or a RealValue holding log r."""

    label: str = "e"
    r: object = mpq(1)
    log_r: RealValue | None = None

    def __post_init__(self):
        if self.log_r is None:
            r = as_rational(self.r)
            if r <= 0:
                raise ValueError("norm must be positive")
            object.__setattr__(self, "r", r)

    @property
    def exact(self) -> bool:
        return self.log_r is None


@dataclass(frozen=True)
class Degree:
    """A degree with exact part (1/e) log q plus an optional toleranced real part."""

    exact: LogRational
    approx: RealValue | None = None

    @property
    def is_exact(self) -> bool:
        return self.approx is None

    def to_real(self, digits: int = DEFAULT_DIGITS) -> RealValue:
        v = self.exact.to_real(digits)
        return v if self.approx is None else v + self.approx

    def __add__(self, other: "Degree") -> "Degree":
        a = self.approx
        if other.approx is not None:
            a = other.approx if a is None else a + other.approx
        return Degree(self.exact + other.exact, a)

    def __neg__(self) -> "Degree":
        return Degree(-self.exact, None if self.approx is None else -self.approx)

    def equals(self, other: "Degree", tol: float = 0) -> bool:
        if self.is_exact and other.is_exact:
            return self.exact == other.exact
        return self.to_real().agrees_with(other.to_real(), tol)


def deg_hat(L: MetrizedLine, s: Section) -> Degree:
    """log #(Z e / Z s) - log ||s||, evaluated literally as log|c| - log(|c| r)."""
    c = abs(s.c)
    index_part = LogRational(c)
    if L.exact:
        return Degree(index_part - LogRational(c * L.r))
    # log(|c| r) = log|c| + log r, with log r only known numerically
    return Degree(index_part - LogRational(c), -L.log_r)


# ---------------------------------------------------------------------------
# adelic lines


JSON_DIGITS = 30


@dataclass(frozen=True)
class AdelicLine:
    finite: tuple = ()          # ((p, exponent), ...) sorted, exponent a Fraction, r_p = p^exponent
    arch: object = mpq(1)       # exact r_inf, or None when only log r_inf is known
    arch_log: RealValue | None = None

    def __post_init__(self):
        clean = {}
        for p, e in self.finite:
            e = to_fraction(e)
            if e != 0:
                clean[int(p)] = clean.get(int(p), Fraction(0)) + e
        object.__setattr__(self, "finite", tuple(sorted((p, e) for p, e in clean.items() if e != 0)))
        if self.arch_log is None:
            a = as_rational(self.arch)
            if a <= 0:
                raise ValueError("archimedean norm must be positive")
            object.__setattr__(self, "arch", a)
        else:
            object.__setattr__(self, "arch", None)

    @property
    def arch_exact(self) -> bool:
        return self.arch_log is None

    def log_arch(self, digits: int = DEFAULT_DIGITS) -> RealValue:
        return log_real(self.arch, digits) if self.arch_exact else self.arch_log

    def exponent(self, p: int) -> Fraction:
        return dict(self.finite).get(p, Fraction(0))

    @classmethod
    def principal(cls, c) -> "AdelicLine":
        """Norms |c|_v at every place."""
        c = as_rational(c)
        return cls(tuple((p, Fraction(-valuation(c, p))) for p in prime_support(c)), abs(c))

    def to_json(self) -> str:
        d = {"finite": [{"p": p, "exponent": str(e)} for p, e in self.finite]}
        if self.arch_exact:
            d["inf"] = fmt_rational(self.arch)
        else:
            v = self.arch_log
            with mpmath.workdps(JSON_DIGITS + 10):
                # widen the bound by the rounding of the printed value
                err = v.abs_error + abs(v.value) * mpmath.mpf(10) ** (1 - JSON_DIGITS)
                d["inf"] = {"log": mpmath.nstr(v.value, JSON_DIGITS), "error": mpmath.nstr(2 * err, 3)}
        return json.dumps(d, sort_keys=True)

    @classmethod
    def from_json(cls, s: str) -> "AdelicLine":
        d = json.loads(s)
        fin = tuple((int(r["p"]), Fraction(r["exponent"])) for r in d.get("finite", []))
        inf = d.get("inf", "1")
        if isinstance(inf, dict):
            with mpmath.workdps(JSON_DIGITS + 10):
                return cls(fin, None, RealValue(mpmath.mpf(inf["log"]), mpmath.mpf(inf["error"])))
        return cls(fin, as_rational(inf))


def deg_hat_adelic(L: AdelicLine) -> Degree:
    """-sum_p log r_p - log r_inf."""
    acc = LogRational()
    for p, e in L.finite:
        acc = acc + LogRational.from_exact_coeff(p, -e)
    if L.arch_exact:
        return Degree(acc - LogRational(L.arch))
    return Degree(acc, -L.arch_log)


def tensor(L1: AdelicLine, L2: AdelicLine) -> AdelicLine:
    fin = L1.finite + L2.finite
    if L1.arch_exact and L2.arch_exact:
        return AdelicLine(fin, L1.arch * L2.arch)
    return AdelicLine(fin, None, L1.log_arch() + L2.log_arch())


def dual(L: AdelicLine) -> AdelicLine:
    fin = tuple((p, -e) for p, e in L.finite)
    if L.arch_exact:
        return AdelicLine(fin, 1 / L.arch)
    return AdelicLine(fin, None, -L.arch_log)


def tensor_power(L: AdelicLine, n: int) -> AdelicLine:
    fin = tuple((p, e * n) for p, e in L.finite)
    if L.arch_exact:
        return AdelicLine(fin, L.arch**n)
    return AdelicLine(fin, None, L.arch_log * n)


@dataclass(frozen=True)
class Triviality:
    trivial: bool
    witness: object = None
    reason: str = ""

    def __bool__(self):
        return self.trivial


def is_trivial(L: AdelicLine, tol: float = 1e-10) -> Triviality:
    """Is there c in Q^* with |c|_v = r_v everywhere?  c is returned as the witness."""
    c = mpq(1)
    for p, e in L.finite:
        if e.denominator != 1:
            return Triviality(False, None, f"r_{p} = {p}^{e} is not in the value group")
        c *= mpq(p) ** (-e.numerator)
    if L.arch_exact:
        if c == L.arch:
            return Triviality(True, c)
        return Triviality(False, None, f"|c|_inf = {fmt_rational(c)} != r_inf = {fmt_rational(L.arch)}")
    diff = log_real(c) - L.arch_log
    if diff.contains(0, tol):
        return Triviality(True, c)
    return Triviality(False, None, f"log|c| - log r_inf = {mpmath.nstr(diff.value, 12)}")


@dataclass(frozen=True)
class TorsionCertificate:
    n: int
    power_witness: object
    witness: object
    degree_zero: bool


def torsion_trivial_over_Q(L: AdelicLine, n: int, tol: float = 1e-10) -> TorsionCertificate:
    """If L^n is trivial then so is L over Q; returns both witnesses."""
    if n < 1:
        raise ValueError("n must be positive")
    Ln = is_trivial(tensor_power(L, n), tol)
    if not Ln:
        raise ValueError(f"precondition failed: L^{n} is not trivial ({Ln.reason})")
    # value groups p^Z and R_{>0} are torsion-free, so L itself is trivial
    L1 = is_trivial(L, tol)
    if not L1:
        raise ArithmeticError(f"L^{n} trivial but L not: {L1.reason}")
    if abs(L1.witness) ** n != abs(Ln.witness):
        raise ArithmeticError("witness of L does not power to the witness of L^n")
    deg = deg_hat_adelic(L)
    return TorsionCertificate(n, Ln.witness, L1.witness, deg.equals(Degree(LogRational()), tol))


def restrict_bundle(data: ExtensionData, P: Point, digits: int = DEFAULT_DIGITS) -> AdelicLine:
    """The fiber of the metrized class of Q0 at P: r_v = exp(-lambda_D(P, v))."""
    fin = []
    for v in lambda_D_places(data.param, P):
        if v.is_archimedean:
            continue
        fin.append((v.p, -lambda_D(data.param, P, v, digits).coeff))
    lam = lambda_D(data.param, P, ARCH, digits)
    if lam.value == 0 and lam.abs_error == 0:
        return AdelicLine(tuple(fin), mpq(1))
    return AdelicLine(tuple(fin), None, -lam)
