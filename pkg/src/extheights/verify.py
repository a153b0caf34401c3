"""Invariant suites behind ``extheights verify``.

Each check returns a CheckResult; a suite passes iff every check does.  The
``fault`` hook swaps in a corrupted cocycle so that the metric suite can be
shown to catch it.
"""
from __future__ import annotations

import random
import time
from dataclasses import dataclass

from gmpy2 import mpq

from .arakelov import AdelicLine, MetrizedLine, Section, deg_hat, deg_hat_adelic, tensor
from .corpus import CORPUS, CorpusConfig, random_ext_point, random_point, random_t
from .curve import O
from .extension import ExtPoint, cocycle_g, ext_add, ext_mul_n, ext_neg
from .heights import SupportCollision, canonical_height, lambda_D, lambda_D_places, tate_limit_height
from .linefuncs import FunctionCollision
from .places import ARCH, ExactLog, Place, log_abs_v, prime_support, product_formula_sum
from .relative import difference_identity_check, relative_heights, tate_limit_oracle

SUITES = ("core", "metric", "oracle")
SQUARE_ISOMETRY = "square-isometry identity"


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    passed: bool
    detail: str = ""

    def to_dict(self) -> dict:
        return {"suite": self.suite, "name": self.name, "passed": self.passed, "detail": self.detail}


def _corrupt(g):
    def bad(data, P1, P2):
        return 2 * g(data, P1, P2)
    return bad


def _cocycle(fault: str | None):
    return _corrupt(cocycle_g) if fault == "cocycle" else cocycle_g


def admissible_triples(cfg: CorpusConfig, rng, count: int):
    """Random (P1, P2, P3) whose partial sums and negatives all avoid the reference divisor."""
    d = cfg.data()
    out = []
    while len(out) < count:
        P1, P2, P3 = (random_point(cfg, rng, (d,)) for _ in range(3))
        E = cfg.curve
        sums = [E.add(P1, P2), E.add(P2, P3), E.add(E.add(P1, P2), P3), E.neg(P1), E.neg(P2), E.neg(P3)]
        if all(d.param.admits(S) for S in sums):
            out.append((P1, P2, P3))
    return out


# ---------------------------------------------------------------------------


def core_suite(samples: int = 30, seed: int = 1, fault: str | None = None) -> list[CheckResult]:
    rng = random.Random(seed)
    g = _cocycle(fault)
    res = []
    bad = [x for x in (mpq(rng.randint(-10**6, 10**6) or 1, rng.randint(1, 10**6)) for _ in range(samples))
           if not product_formula_sum(x).is_zero]
    res.append(CheckResult("core", "product formula", not bad, f"failures: {bad[:3]}" if bad else ""))
    for cfg in CORPUS:
        E, d = cfg.curve, cfg.data()
        trip = admissible_triples(cfg, rng, samples)
        assoc = all(E.add(E.add(a, b), c) == E.add(a, E.add(b, c)) and E.add(a, b) == E.add(b, a) for a, b, c in trip)
        res.append(CheckResult("core", f"{cfg.name}: group law", assoc))
        ok_norm = all(g(d, O, a) == 1 and g(d, a, O) == 1 for a, _, _ in trip)
        ok_sym = all(g(d, a, b) == g(d, b, a) for a, b, _ in trip)
        ok_123 = all(g(d, a, b) * g(d, E.add(a, b), c) == g(d, a, E.add(b, c)) * g(d, b, c) for a, b, c in trip)
        res.append(CheckResult("core", f"{cfg.name}: cocycle normalization", ok_norm))
        res.append(CheckResult("core", f"{cfg.name}: cocycle symmetry", ok_sym))
        res.append(CheckResult("core", f"{cfg.name}: cocycle p123 identity", ok_123))
        ok_ext = True
        for a, b, c in trip[: max(3, samples // 5)]:
            X = [ExtPoint(P, random_t(rng)) for P in (a, b, c)]
            lhs = ext_add(d, ext_add(d, X[0], X[1]), X[2])
            rhs = ext_add(d, X[0], ext_add(d, X[1], X[2]))
            ok_ext &= lhs == rhs and ext_add(d, X[0], ext_neg(d, X[0])) == ExtPoint(O, 1)
        res.append(CheckResult("core", f"{cfg.name}: extension group law", ok_ext))
    return res


def square_isometry_residuals(cfg: CorpusConfig, P1, P2, g=cocycle_g, digits: int = 40):
    """lambda_D(P1+P2) - lambda_D(P1) - lambda_D(P2) + log|g(P1, P2)|_v, per place."""
    d, E = cfg.data(), cfg.curve
    S = E.add(P1, P2)
    gv = g(d, P1, P2)
    places = {ARCH}
    for P in (S, P1, P2):
        places.update(lambda_D_places(d.param, P))
    places.update(Place(p) for p in prime_support(gv))
    out = []
    for v in sorted(places):
        r = (lambda_D(d.param, S, v, digits) - lambda_D(d.param, P1, v, digits)
             - lambda_D(d.param, P2, v, digits) + log_abs_v(gv, v, digits))
        out.append((v, r))
    return out


def metric_suite(samples: int = 10, seed: int = 2, fault: str | None = None, tol: float = 1e-10) -> list[CheckResult]:
    rng = random.Random(seed)
    g = _cocycle(fault)
    res = []
    for cfg in CORPUS:
        d = cfg.data()
        worst, ok = 0.0, True
        for a, b, _ in admissible_triples(cfg, rng, samples):
            for v, r in square_isometry_residuals(cfg, a, b, g):
                if isinstance(r, ExactLog):
                    ok &= r.is_zero()
                else:
                    worst = max(worst, float(abs(r.value)))
                    ok &= r.contains(0, tol)
        res.append(CheckResult("metric", f"{cfg.name}: {SQUARE_ISOMETRY}", ok, f"max archimedean residual {worst:.2e}"))
        ok_thm, ok_pos = True, True
        for _ in range(samples):
            X = ExtPoint(random_point(cfg, rng, (d,)), random_t(rng))
            ok_thm &= difference_identity_check(d, X).holds
            rh = relative_heights(d, X)
            ok_pos &= rh.deg_H0.value >= -1e-12 and rh.deg_Hinf.value >= -1e-12
        res.append(CheckResult("metric", f"{cfg.name}: difference identity", ok_thm))
        res.append(CheckResult("metric", f"{cfg.name}: positivity", ok_pos))
        ok_fe = True
        for _ in range(max(2, samples // 3)):
            X = random_ext_point(cfg, rng, d, multiples=(-1, 2, 3))
            rh = relative_heights(d, X)
            for n in (2, 3):
                rn = relative_heights(d, ext_mul_n(d, n, X))
                ok_fe &= rn.deg_H0.agrees_with(rh.deg_H0 * n, tol) and rn.deg_Hinf.agrees_with(rh.deg_Hinf * n, tol)
            rneg = relative_heights(d, ext_neg(d, X))
            ok_fe &= rneg.deg_H0.agrees_with(rh.deg_Hinf, tol)
        res.append(CheckResult("metric", f"{cfg.name}: functional equations", ok_fe))
        P = cfg.points[0]
        h1, h2 = canonical_height(cfg.curve, P), tate_limit_height(cfg.curve, P)
        res.append(CheckResult("metric", f"{cfg.name}: height convention", h1.agrees_with(h2, tol)))
    L = MetrizedLine("e", mpq(1, 2))
    ok_deg = all(deg_hat(L, Section(mpq(rng.randint(1, 999), rng.randint(1, 999)))).equals(deg_hat(L, Section(1)))
                 for _ in range(samples))
    res.append(CheckResult("metric", "Arakelov degree section independence", ok_deg))
    A, B = AdelicLine(((2, 1), (3, -2)), mpq(5, 7)), AdelicLine(((3, 1), (7, 4)), mpq(2))
    ok_add = (deg_hat_adelic(tensor(A, B)).exact == deg_hat_adelic(A).exact + deg_hat_adelic(B).exact)
    res.append(CheckResult("metric", "Arakelov degree additivity", ok_add))
    return res


def oracle_suite(budget_s: float = 300.0, k_max: int = 12, tol: float = 1e-4) -> list[CheckResult]:
    res = []
    for cfg in CORPUS:
        d = cfg.data()
        t0 = time.monotonic()
        for P, t in cfg.oracle_points:
            X = ExtPoint(P, t)
            rh = relative_heights(d, X)
            o = tate_limit_oracle(d, X, k_max=k_max)
            e0 = abs(float(o.H0[-1] - rh.deg_H0.value))
            ei = abs(float(o.Hinf[-1] - rh.deg_Hinf.value))
            ratio = o.decay_ratio
            ok = e0 <= tol and ei <= tol and (ratio is None or 0.3 <= ratio <= 0.7)
            res.append(CheckResult("oracle", f"{cfg.name}: oracle agreement at {X}", ok,
                                   f"k={o.k_max} err=({e0:.2e}, {ei:.2e}) ratio={ratio}"))
        el = time.monotonic() - t0
        res.append(CheckResult("oracle", f"{cfg.name}: oracle runtime", el <= budget_s, f"{el:.1f}s"))
    return res


def run(suite: str = "all", fault: str | None = None) -> list[CheckResult]:
    names = SUITES if suite == "all" else (suite,)
    out = []
    for s in names:
        if s == "core":
            out += core_suite(fault=fault)
        elif s == "metric":
            out += metric_suite(fault=fault)
        elif s == "oracle":
            out += oracle_suite()
        else:
            raise ValueError(f"unknown suite {s!r}")
    return out
