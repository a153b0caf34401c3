"""Relative heights H_0, H_inf of points on the extension, and height-zero lifts.

For X = (P, t) with canonical fiber norms a_v,

    deg H_inf(X) = sum_v log+ a_v,     deg H_0(X) = sum_v log+ (1 / a_v).

At primes of good reduction outside the support of the data the local terms
are read off one rational number s = t d1 dT / (d2 dR) (d = sqrt of the
denominator of the relevant x-coordinate), so the finite part needs no
factorization.  Bad primes are handled one by one and exactly.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm

import gmpy2
import mpmath
from gmpy2 import mpq, mpz

from .compact import fiber_coordinate_norm
from .curve import O, EllipticCurve, ModelMap, Point, minimal_model
from .extension import (
    NEUTRAL,
    ExtensionData,
    ExtPoint,
    MultiExtPoint,
    ext_mul_n,
    reference_candidates,
)
from .heights import (
    DivisorClassParam,
    canonical_height,
    lambda_D,
    lambda_D_places,
    nt_pairing,
)
from .places import (
    ARCH,
    DEFAULT_DIGITS,
    ExactLog,
    Place,
    RealValue,
    _mpf,
    factor_int,
    fmt_rational,
    log_real,
    strip_primes,
    to_real,
    valuation,
)


class OracleDecayError(ArithmeticError):
    """The Tate-limit iterates failed to show geometric decay."""


# ---------------------------------------------------------------------------
# exact finite sums of logarithms


@dataclass(frozen=True)
class LogRational:
    """The exact real number (1/e) * log q for a positive rational q."""

    q: object = mpq(1)
    e: int = 1

    def __post_init__(self):
        q = mpq(self.q)
        if q <= 0:
            raise ValueError("LogRational needs q > 0")
        object.__setattr__(self, "q", q)

    @classmethod
    def from_exact(cls, x: ExactLog) -> "LogRational":
        return cls.from_exact_coeff(x.p, x.coeff)

    @classmethod
    def from_exact_coeff(cls, p: int, c: Fraction) -> "LogRational":
        """c log p."""
        c = Fraction(c)
        return cls(mpq(p) ** c.numerator, c.denominator)

    def __add__(self, other: "LogRational") -> "LogRational":
        L = lcm(self.e, other.e)
        return LogRational(self.q ** (L // self.e) * other.q ** (L // other.e), L)

    def __neg__(self) -> "LogRational":
        return LogRational(1 / self.q, self.e)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, n: int) -> "LogRational":
        return LogRational(self.q ** n, self.e) if n >= 0 else LogRational((1 / self.q) ** -n, self.e)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LogRational):
            return NotImplemented
        return self.q ** other.e == other.q ** self.e

    def __hash__(self):
        return hash(("LogRational", float(self.to_real(20).value)))

    def is_zero(self) -> bool:
        return self.q == 1

    def to_real(self, digits: int = DEFAULT_DIGITS) -> RealValue:
        if self.q == 1:
            return RealValue.exact(0)
        return log_real(self.q, digits) * mpq(1, self.e)

    def __repr__(self) -> str:
        return f"(1/{self.e})*log({fmt_rational(self.q)})"


# ---------------------------------------------------------------------------
# transport to the minimal model


def _transport_point(m: ModelMap, P: Point) -> Point:
    return m.apply(P)


def to_minimal(data: ExtensionData, X: ExtPoint | None = None):
    """Same extension and point on the minimal model; fiber coordinates are unchanged."""
    E = data.curve
    Em, m = minimal_model(E)
    if m.is_identity:
        return data, X
    param = DivisorClassParam(Em, m.apply(data.Q0), m.apply(data.R))
    cands = tuple(m.apply(R) for R in data.candidates)
    new = ExtensionData(param, cands)
    return new, (None if X is None else ExtPoint(m.apply(X.base), X.t))


def _d(x) -> object:
    # square root of the denominator of an x-coordinate on an integral model
    den = mpz(x.denominator)
    r, exact = gmpy2.iroot(den, 2)
    if not exact:
        raise ArithmeticError("x-coordinate denominator is not a square; model not integral")
    return r


# ---------------------------------------------------------------------------
# local and global relative heights


def local_H(data: ExtensionData, X: ExtPoint, v: Place, digits: int = DEFAULT_DIGITS):
    """(local_H0, local_Hinf) = (log+ 1/a_v, log+ a_v)."""
    fn = fiber_coordinate_norm(data, X, v, digits)
    return fn.log_plus_inv(), fn.log_plus()


def bad_primes(data: ExtensionData) -> list[int]:
    Em, _ = minimal_model(data.curve)
    return sorted(factor_int(Em.discriminant.numerator))


def good_part_s(data: ExtensionData, X: ExtPoint):
    """s with log a_p = -v_p(s) log p at every prime of good reduction (minimal model)."""
    E = data.curve
    P, Q0 = X.base, data.Q0
    if P.is_zero or Q0.is_zero:
        return X.t
    R, T = data.R, data.param.T
    d1 = _d(E.sub(P, R).x)
    d2 = _d(E.sub(P, T).x)
    dR, dT = _d(R.x), _d(T.x)
    return X.t * mpq(d1 * dT, d2 * dR)


@dataclass(frozen=True)
class RelativeHeights:
    """deg H_0 and deg H_inf split into an exact finite part and an archimedean part."""

    H0_finite: LogRational
    Hinf_finite: LogRational
    H0_arch: RealValue
    Hinf_arch: RealValue
    log_a_arch: RealValue
    digits: int = DEFAULT_DIGITS

    @property
    def deg_H0(self) -> RealValue:
        return self.H0_finite.to_real(self.digits) + self.H0_arch

    @property
    def deg_Hinf(self) -> RealValue:
        return self.Hinf_finite.to_real(self.digits) + self.Hinf_arch

    @property
    def difference(self) -> RealValue:
        return self.deg_H0 - self.deg_Hinf


def relative_heights(data: ExtensionData, X: ExtPoint, digits: int = DEFAULT_DIGITS) -> RelativeHeights:
    data, X = to_minimal(data, X)
    bad = bad_primes(data)
    H0 = LogRational()
    Hinf = LogRational()
    for p in bad:
        fn = fiber_coordinate_norm(data, X, Place(p), digits)
        H0 = H0 + LogRational.from_exact(fn.log_plus_inv())
        Hinf = Hinf + LogRational.from_exact(fn.log_plus())
    s = good_part_s(data, X)
    num = strip_primes(abs(mpz(s.numerator)), bad)
    den = strip_primes(mpz(s.denominator), bad)
    H0 = H0 + LogRational(num)
    Hinf = Hinf + LogRational(den)
    fa = fiber_coordinate_norm(data, X, ARCH, digits)
    return RelativeHeights(H0, Hinf, fa.log_plus_inv(), fa.log_plus(), fa.log_a, digits)


def deg_H0(data: ExtensionData, X: ExtPoint, digits: int = DEFAULT_DIGITS) -> RealValue:
    return relative_heights(data, X, digits).deg_H0


def deg_Hinf(data: ExtensionData, X: ExtPoint, digits: int = DEFAULT_DIGITS) -> RealValue:
    return relative_heights(data, X, digits).deg_Hinf


def total_height(data: ExtensionData, X: ExtPoint, digits: int = DEFAULT_DIGITS) -> RealValue:
    rh = relative_heights(data, X, digits)
    return canonical_height(data.curve, X.base, digits) + rh.deg_H0 + rh.deg_Hinf


@dataclass(frozen=True)
class DifferenceCertificate:
    lhs: RealValue  # deg H_0 - deg H_inf
    rhs: RealValue  # <P, Q0>
    residual: RealValue
    holds: bool


def difference_identity_check(data: ExtensionData, X: ExtPoint, tol: float = 1e-8,
                              digits: int = DEFAULT_DIGITS) -> DifferenceCertificate:
    """deg H_0(X) - deg H_inf(X) = <P, Q0>, the right side computed from canonical heights."""
    lhs = relative_heights(data, X, digits).difference
    rhs = nt_pairing(data.curve, X.base, data.Q0, digits)
    res = lhs - rhs
    return DifferenceCertificate(lhs, rhs, res, res.contains(0, tol))


# ---------------------------------------------------------------------------
# Tate-limit oracle


def naive_relative_heights(data: ExtensionData, X: ExtPoint, digits: int = DEFAULT_DIGITS):
    """(h_0, h_inf) from the naive Weil function w(P) - w(O), where
    w(P) = 1/2 log+|x(P - R)|_v - 1/2 log+|x(P - T)|_v.

    Subtracting w(O) rigidifies w at the origin like lambda_D; the unrigidified
    version differs by a constant that only decays like n^-k.  Returns mpf values.
    """
    E = data.curve
    P, t = X.base, X.t
    with mpmath.workdps(digits + 20):
        if P.is_zero or data.Q0.is_zero:
            s = t
            log_a = _mpf_log_abs(t)
        else:
            R, T = data.R, data.param.T
            x1 = E.sub(P, R).x
            x2 = E.sub(P, T).x
            s = t * mpq(_d(x1) * _d(T.x), _d(x2) * _d(R.x))
            w = (_mpf_log_plus(x1) - _mpf_log_plus(x2) - _mpf_log_plus(R.x) + _mpf_log_plus(T.x)) / 2
            log_a = _mpf_log_abs(t) - w
        h_inf = _mpf_log_int(s.denominator) + max(log_a, 0)
        h_0 = _mpf_log_int(abs(s.numerator)) + max(-log_a, 0)
    return h_0, h_inf


def _mpf_log_int(n) -> mpmath.mpf:
    n = int(n)
    if n <= 0:
        raise ValueError("log of nonpositive integer")
    # exact integers can be huge; mpmath.log handles big ints through mpf conversion
    return mpmath.log(mpmath.mpf(n))


def _mpf_log_abs(q) -> mpmath.mpf:
    return _mpf_log_int(abs(q.numerator)) - _mpf_log_int(q.denominator)


def _mpf_log_plus(q) -> mpmath.mpf:
    if q == 0:
        return mpmath.mpf(0)
    return max(_mpf_log_abs(q), mpmath.mpf(0))


@dataclass
class OracleResult:
    n: int
    k_max: int
    H0: list = field(default_factory=list)    # n^-k h_0(X_k), k = 0..k_max
    Hinf: list = field(default_factory=list)
    decay_ratio: float | None = None
    constant: float | None = None

    @property
    def final(self) -> tuple:
        return self.H0[-1], self.Hinf[-1]

    def tail_bound(self) -> float:
        """Observed geometric bound on |h_k_max - lim|: C n^-k_max / (n - 1)."""
        if self.constant is None:
            return float("inf")
        return self.constant * self.n ** (-self.k_max) / (self.n - 1)


def _fitted_ratio(seq: list, floor) -> float | None:
    """exp of the least-squares slope of log|h_k - h_(k-1)| against k.

    Differences at rounding level (below floor) carry no rate information and are skipped.
    """
    pts = [(k, mpmath.log(abs(seq[k] - seq[k - 1]))) for k in range(1, len(seq)) if abs(seq[k] - seq[k - 1]) > floor]
    if len(pts) < 3:
        return None
    mk = sum(k for k, _ in pts) / len(pts)
    my = sum(y for _, y in pts) / len(pts)
    num = sum((k - mk) * (y - my) for k, y in pts)
    den = sum((k - mk) ** 2 for k, _ in pts)
    return float(mpmath.exp(num / den))


ORACLE_SIZE_BUDGET = 4.5e6


def _log_size(P: Point) -> float:
    # log max(|num x|, den x), cheap: bit lengths only
    if P.is_zero:
        return 0.0
    x = P.x
    return max(int(x.numerator).bit_length(), int(x.denominator).bit_length()) * math.log(2)


def tate_limit_oracle(data: ExtensionData, X: ExtPoint, n: int = 2, k_max: int = 12,
                      digits: int = 30, check_decay: bool = True,
                      size_budget: float | None = ORACLE_SIZE_BUDGET) -> OracleResult:
    """n^-k h_naive([n^k]X) for k = 0..k_max, with an observed decay certificate.

    Coordinates grow like n^(2k), so the iteration stops early (deterministically)
    once the next iterate's x-coordinate would exceed size_budget nats.
    """
    if n < 2:
        raise ValueError("oracle base must be at least 2")
    data, X = to_minimal(data, X)
    out = OracleResult(n, k_max)
    Xk = X
    with mpmath.workdps(digits + 20):
        for k in range(k_max + 1):
            if k:
                if size_budget is not None and _log_size(Xk.base) * n * n > size_budget:
                    out.k_max = k - 1
                    break
                Xk = ext_mul_n(data, n, Xk)
            h0, hinf = naive_relative_heights(data, Xk, digits)
            scale = mpmath.mpf(n) ** k
            out.H0.append(h0 / scale)
            out.Hinf.append(hinf / scale)
        K = out.k_max
        # geometric decay of successive differences, H0 and Hinf combined
        diffs = [max(abs(out.H0[k] - out.H0[k - 1]), abs(out.Hinf[k] - out.Hinf[k - 1])) for k in range(1, K + 1)]
        consts = [float(d * mpmath.mpf(n) ** k) for k, d in enumerate(diffs, start=1)]
        out.constant = max(consts) if consts else 0.0
        out.decay_ratio = _fitted_ratio([a + b for a, b in zip(out.H0, out.Hinf)], mpmath.mpf(10) ** (-digits))
    if check_decay and K >= 4:
        # late differences must stay below C n^-k with C fixed by the early iterates
        early = max(consts[: K // 2])
        late = max(consts[K // 2:])
        if late > 4 * early + 1e-30:
            raise OracleDecayError(f"no geometric decay: late constant {late:.3g} vs early {early:.3g}")
    return out


# ---------------------------------------------------------------------------
# per-place report


@dataclass(frozen=True)
class ReportRow:
    place: Place
    lambda_D: object
    h0_local: object
    hinf_local: object

    @property
    def exact(self) -> bool:
        return not self.place.is_archimedean


@dataclass
class HeightReport:
    curve: EllipticCurve
    Q0: Point
    point: ExtPoint
    R: Point
    rows: list
    deg_H0: RealValue
    deg_Hinf: RealValue
    nt_base_pairing: RealValue
    canonical_base: RealValue

    @property
    def total_height(self) -> RealValue:
        return self.canonical_base + self.deg_H0 + self.deg_Hinf

    def row_sums(self):
        h0 = sum((to_real(r.h0_local) for r in self.rows), RealValue.exact(0))
        hinf = sum((to_real(r.hinf_local) for r in self.rows), RealValue.exact(0))
        lam = sum((to_real(r.lambda_D) for r in self.rows), RealValue.exact(0))
        return h0, hinf, lam

    def to_dict(self, digits: int = 20) -> dict:
        def num(x):
            x = to_real(x)
            return {"value": mpmath.nstr(x.value, digits, strip_zeros=False),
                    "error": mpmath.nstr(x.abs_error, 3)}

        def local(x):
            if isinstance(x, ExactLog):
                return {"coeff": str(x.coeff), "log_of": x.p, "value": mpmath.nstr(x.to_real().value, digits, strip_zeros=False)}
            return num(x)

        rows = [{"place": str(r.place), "lambda_D": local(r.lambda_D), "h0_local": local(r.h0_local),
                 "hinf_local": local(r.hinf_local), "exact": r.exact} for r in self.rows]
        diff = self.deg_H0 - self.deg_Hinf - self.nt_base_pairing
        return {
            "curve": str(self.curve),
            "q0": str(self.Q0),
            "r": str(self.R),
            "point": str(self.point.base),
            "t": fmt_rational(self.point.t),
            "rows": rows,
            "totals": {
                "deg_H0": num(self.deg_H0),
                "deg_Hinf": num(self.deg_Hinf),
                "nt_base_pairing": num(self.nt_base_pairing),
                "canonical_height_base": num(self.canonical_base),
                "total_height": num(self.total_height),
                "difference_residual": num(diff),
            },
        }

    def to_json(self, digits: int = 20) -> str:
        return json.dumps(self.to_dict(digits), indent=2, sort_keys=False)

    def to_tsv(self, digits: int = 20) -> str:
        d = self.to_dict(digits)
        lines = ["place\tlambda_D\th0_local\thinf_local\texact"]
        for r in d["rows"]:
            lines.append("\t".join([r["place"], r["lambda_D"]["value"], r["h0_local"]["value"],
                                    r["hinf_local"]["value"], str(r["exact"]).lower()]))
        for k, v in d["totals"].items():
            lines.append(f"# {k}\t{v['value']}\t{v['error']}")
        return "\n".join(lines) + "\n"


def report_places(data: ExtensionData, X: ExtPoint) -> list[Place]:
    """Every place where lambda_D(P) or a local relative height can be nonzero."""
    places = set(lambda_D_places(data.param, X.base))
    for p in factor_int(X.t.numerator):
        places.add(Place(p))
    for p in factor_int(X.t.denominator):
        places.add(Place(p))
    for p in bad_primes(data):
        places.add(Place(p))
    places.add(ARCH)
    return sorted(places)


def decompose(data: ExtensionData, X: ExtPoint, digits: int = DEFAULT_DIGITS, tol: float = 1e-10) -> HeightReport:
    """Per-place table; totals re-derived and checked against the aggregate evaluation."""
    data, X = to_minimal(data, X)
    rows = []
    for v in report_places(data, X):
        lam = lambda_D(data.param, X.base, v, digits)
        h0, hinf = local_H(data, X, v, digits)
        rows.append(ReportRow(v, lam, h0, hinf))
    agg = relative_heights(data, X, digits)
    rep = HeightReport(
        data.curve, data.Q0, X, data.R, rows, agg.deg_H0, agg.deg_Hinf,
        nt_pairing(data.curve, X.base, data.Q0, digits), canonical_height(data.curve, X.base, digits),
    )
    h0, hinf, _ = rep.row_sums()
    if not (h0.agrees_with(agg.deg_H0, tol) and hinf.agrees_with(agg.deg_Hinf, tol)):
        raise ArithmeticError("per-place rows disagree with the aggregate relative heights")
    return rep


# ---------------------------------------------------------------------------
# height-zero lifts


@dataclass(frozen=True)
class Found:
    t: object
    n: int = 1

    def __str__(self):
        return f"Found(n={self.n}, t={fmt_rational(self.t)})" if self.n != 1 else f"Found(t={fmt_rational(self.t)})"


@dataclass(frozen=True)
class Obstructed:
    kind: str  # "pairing" | "finite" | "archimedean" | "collision"
    reason: str
    place: Place | None = None

    def __str__(self):
        return f"Obstructed({self.kind}: {self.reason})"


@dataclass(frozen=True)
class NotFound:
    reason: str

    def __str__(self):
        return f"NotFound({self.reason})"


def find_height_zero_lift(data: ExtensionData, P: Point, tol: float = 1e-10, digits: int = DEFAULT_DIGITS):
    """A t with deg H_0(P, t) = deg H_inf(P, t) = 0, or the first failed condition."""
    E = data.curve
    if P.is_zero:
        return Found(mpq(1))
    if not data.param.admits(P):
        return Obstructed("collision", f"{P} lies on the reference divisor", None)
    pair = nt_pairing(E, P, data.Q0, digits)
    if not pair.contains(0, tol):
        return Obstructed("pairing", f"<P, Q0> = {mpmath.nstr(pair.value, 15)} != 0", ARCH)
    t = mpq(1)
    for v in lambda_D_places(data.param, P):
        if v.is_archimedean:
            continue
        c = lambda_D(data.param, P, v, digits).coeff
        if c.denominator != 1:
            return Obstructed("finite", f"lambda_D(P, {v.p}) = {c} log {v.p} is not an integer multiple", v)
        t *= mpq(v.p) ** (-c.numerator)
    lam_inf = lambda_D(data.param, P, ARCH, digits)
    log_t = log_real(t, digits)
    if not (log_t - lam_inf).contains(0, tol):
        return Obstructed("archimedean", f"log|t| - lambda_D(P, inf) = {mpmath.nstr((log_t - lam_inf).value, 15)}", ARCH)
    return Found(t)


def multiple_with_lift(data: ExtensionData, P: Point, bound: int, tol: float = 1e-10, digits: int = DEFAULT_DIGITS):
    E = data.curve
    pair = nt_pairing(E, P, data.Q0, digits)
    if not pair.contains(0, tol):
        return NotFound("nonzero pairing")
    for n in range(1, bound + 1):
        nP = E.mul(n, P)
        res = find_height_zero_lift(data, nP, tol, digits)
        if isinstance(res, Found):
            return Found(res.t, n)
    return NotFound(f"no lift over [n]P for n <= {bound}")


def lift_scan(data: ExtensionData, P: Point, primes, bound: int = 10, digits: int = DEFAULT_DIGITS,
              tol: float = 1e-10) -> list:
    """All t = +-prod p^e (|e| <= bound) giving deg H_0 = deg H_inf = 0, by direct evaluation."""
    from itertools import product

    hits = []
    primes = list(primes)
    for exps in product(range(-bound, bound + 1), repeat=len(primes)):
        t = mpq(1)
        for p, e in zip(primes, exps):
            t *= mpq(p) ** e
        for sign in (1, -1):
            rh = relative_heights(data, ExtPoint(P, sign * t), digits)
            if rh.H0_finite.is_zero() and rh.Hinf_finite.is_zero() and \
                    rh.deg_H0.contains(0, tol) and rh.deg_Hinf.contains(0, tol):
                hits.append(sign * t)
    return hits


# ---------------------------------------------------------------------------
# several factors


@dataclass(frozen=True)
class MultiHeights:
    per_factor: tuple  # ((deg_H0_i, deg_Hinf_i), ...)
    sum_H0: RealValue
    sum_Hinf: RealValue
    canonical_base: RealValue

    @property
    def total(self) -> RealValue:
        return self.canonical_base + self.sum_H0 + self.sum_Hinf


def multi_relative_heights(datas, X: MultiExtPoint, digits: int = DEFAULT_DIGITS) -> MultiHeights:
    per = []
    for i, d in enumerate(datas):
        rh = relative_heights(d, X.factor(i), digits)
        per.append((rh.deg_H0, rh.deg_Hinf))
    s0 = sum((a for a, _ in per), RealValue.exact(0))
    sinf = sum((b for _, b in per), RealValue.exact(0))
    return MultiHeights(tuple(per), s0, sinf, canonical_height(datas[0].curve, X.base, digits))
