"""Reference configurations used by the test suite, the verify command and the scripts."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import gmpy2
from gmpy2 import mpq

from .curve import EllipticCurve, ModelMap, O, Point
from .extension import ExtensionData, ExtPoint, g_n


@dataclass(frozen=True)
class CorpusConfig:
    name: str
    curve: EllipticCurve
    Q0: Point
    R: Point
    # second reference point, for the invariance checks
    alt_R: Point
    points: tuple = ()            # base points away from the reference divisor
    oracle_points: tuple = ()     # (base, t) pairs fed to the Tate-limit oracle
    model_maps: tuple = field(default=(), compare=False)

    def data(self) -> ExtensionData:
        return _data(self.curve, self.Q0, self.R)

    def alt_data(self) -> ExtensionData:
        return _data(self.curve, self.Q0, self.alt_R)


@lru_cache(maxsize=None)
def _data(E, Q0, R) -> ExtensionData:
    return ExtensionData.build(E, Q0, R)


def _pts(*xy) -> tuple:
    return tuple(Point(x, y) for x, y in xy)


def _build() -> tuple:
    e37 = EllipticCurve(0, 0, 1, -1, 0)
    cong = EllipticCurve(0, 0, 0, -25, 0)
    c3 = EllipticCurve(1, 0, 1, 2, 0)
    g = Point(1, 1)
    maps = (ModelMap(2, 1, 0, 0), ModelMap(mpq(1, 3), -2, 1, 3))
    return (
        CorpusConfig(
            "37a1", e37, Point(1, 0), Point(-1, -1), Point(1, 0),
            _pts((0, 0), (6, 14), (0, -1), (-1, 0), (2, 2), (1, -1)),
            ((Point(0, 0), mpq(1)), (Point(6, 14), mpq(3, 7))),
            maps,
        ),
        CorpusConfig(
            "congruent5", cong, Point(0, 0), Point(45, -300), Point(45, 300),
            _pts((-4, 6), (5, 0), (-5, 0), (0, 0), (-4, -6), (mpq(25, 4), mpq(-75, 8))),
            ((Point(-4, 6), mpq(1)), (Point(5, 0), mpq(2))),
            maps,
        ),
        CorpusConfig(
            "rank1_a1", c3, g, c3.mul(5, g), c3.mul(4, g),
            tuple(c3.mul(k, g) for k in (1, 2, -1, 3, -3)),
            ((g, mpq(1)), (Point(0, 0), mpq(3, 7))),
            maps,
        ),
    )


CORPUS = _build()


def by_name(name: str) -> CorpusConfig:
    for c in CORPUS:
        if c.name == name:
            return c
    raise KeyError(name)


def torsion_config() -> CorpusConfig:
    """The configuration whose Q0 is torsion."""
    for c in CORPUS:
        if c.curve.is_torsion(c.Q0)[0]:
            return c
    raise LookupError("corpus has no torsion Q0")


def _rational_root(c, m: int):
    """Rational m-th root of c, or None."""
    c = mpq(c)
    if c < 0 and m % 2 == 0:
        return None
    sign = -1 if c < 0 else 1
    rn, en = gmpy2.iroot(gmpy2.mpz(abs(c.numerator)), m)
    rd, ed = gmpy2.iroot(gmpy2.mpz(c.denominator), m)
    if not (en and ed):
        return None
    return sign * mpq(rn, rd)


def torsion_extension_points(cfg: CorpusConfig) -> list:
    """(X, m) with [m]X = neutral verified exactly.

    Over a torsion base of order m, [m](P, t) = (O, t^m / g_m(P)); X is torsion
    iff t^m = +-g_m(P).  The points (O, +-1) are always included.
    """
    data = cfg.data()
    out = [(ExtPoint(O, 1), 1), (ExtPoint(O, -1), 2)]
    for P in cfg.points:
        ok, m = cfg.curve.is_torsion(P)
        if not ok:
            continue
        gm = g_n(data, m, P)
        for target in (gm, -gm):
            r = _rational_root(target, m)
            if r is None:
                continue
            for t in {r, -r}:
                X = ExtPoint(P, t)
                out.append((X, m if t**m == gm else 2 * m))
    return out


# ---------------------------------------------------------------------------
# randomized samples (rank one: every point is k*gen + torsion)

_GENERATORS = {
    "37a1": ((0, 0), ()),
    "congruent5": ((-4, 6), ((0, 0), (5, 0), (-5, 0))),
    "rank1_a1": ((1, 1), ()),
}
# keeps coordinates small; the generators have quite different heights
_MULT_BOUND = {"37a1": 6, "congruent5": 2, "rank1_a1": 4}


def random_point(cfg: CorpusConfig, rng, admissible_for=(), allow_zero: bool = True) -> Point:
    """k*gen + torsion with small |k|, rejecting points on any listed reference divisor."""
    gen, tors = _GENERATORS[cfg.name]
    E = cfg.curve
    G = Point(*gen)
    tors = [O] + [Point(*T) for T in tors]
    bound = _MULT_BOUND[cfg.name]
    while True:
        P = E.add(E.mul(rng.randint(-bound, bound), G), rng.choice(tors))
        if P.is_zero and not allow_zero:
            continue
        if all(d.param.admits(P) for d in admissible_for):
            return P


def random_t(rng, primes=(2, 3, 5, 7), max_exp: int = 3):
    t = mpq(rng.choice((1, -1)))
    for p in primes:
        t *= mpq(p) ** rng.randint(-max_exp, max_exp)
    return t


def random_ext_point(cfg: CorpusConfig, rng, data: ExtensionData | None = None, multiples=(1,),
                     allow_zero: bool = True) -> ExtPoint:
    """(P, t) with [m]P off the reference divisor for every m in multiples."""
    data = data or cfg.data()
    while True:
        P = random_point(cfg, rng, (data,), allow_zero)
        if all(data.param.admits(cfg.curve.mul(m, P)) for m in multiples):
            return ExtPoint(P, random_t(rng))
