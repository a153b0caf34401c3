import json
from fractions import Fraction

import mpmath
import pytest
from gmpy2 import mpq
from hypothesis import given, settings

from extheights.corpus import CORPUS, by_name, torsion_extension_points
from extheights.curve import O, Point
from extheights.extension import NEUTRAL, ExtPoint, MultiExtPoint, ext_mul_n, ext_neg
from extheights.heights import canonical_height, nt_pairing
from extheights.places import ARCH, ExactLog, Place, to_real
from extheights.relative import (
    Found,
    LogRational,
    NotFound,
    Obstructed,
    decompose,
    difference_identity_check,
    find_height_zero_lift,
    lift_scan,
    local_H,
    multi_relative_heights,
    multiple_with_lift,
    relative_heights,
    tate_limit_oracle,
    total_height,
)

from conftest import admissible_points, nonzero_t


def _zero(x):
    return to_real(x).contains(0, 0)


def test_logrational_arithmetic():
    a = LogRational(mpq(8))
    b = LogRational.from_exact_coeff(2, Fraction(3))
    assert a == b
    assert (a - b).is_zero()
    assert LogRational(mpq(4), 2) == LogRational(mpq(2))
    assert LogRational(mpq(3)).scale(-2) == LogRational(mpq(1, 9))
    with pytest.raises(ValueError):
        LogRational(mpq(-2))


def test_local_H_examples():
    d = by_name("37a1").data()
    for v in (ARCH, Place(2), Place(37)):
        h0, hinf = local_H(d, NEUTRAL, v)
        assert _zero(h0) and _zero(hinf)
    h0, hinf = local_H(d, ExtPoint(O, 2), ARCH)
    assert _zero(h0)
    with mpmath.workdps(50):
        assert to_real(hinf).contains(mpmath.log(2), 1e-35)
    # a_5 = |5|_5 = 1/5
    h0, hinf = local_H(d, ExtPoint(O, 5), Place(5))
    assert h0 == ExactLog(Fraction(1), 5) and hinf.is_zero()


@given(admissible_points("congruent5"), nonzero_t)
@settings(max_examples=15)
def test_local_terms_one_sided(P, t):
    d = by_name("congruent5").data()
    X = ExtPoint(P, t)
    for v in (ARCH, Place(2), Place(3), Place(5), Place(7)):
        h0, hinf = local_H(d, X, v)
        assert to_real(h0).value >= 0 and to_real(hinf).value >= 0
        assert _zero(h0) or _zero(hinf)


def test_neutral_heights_zero():
    d = by_name("37a1").data()
    rh = relative_heights(d, NEUTRAL)
    assert rh.deg_H0.value == 0 and rh.deg_Hinf.value == 0
    assert total_height(d, NEUTRAL).value == 0


@pytest.mark.parametrize("n", [2, 3, 5])
def test_functional_equation_mul_n(n):
    cfg = by_name("rank1_a1")
    d, E = cfg.data(), cfg.curve
    X = ExtPoint(E.neg(cfg.Q0), mpq(3, 7))
    Y = ext_mul_n(d, n, X)
    a, b = relative_heights(d, X), relative_heights(d, Y)
    assert b.deg_H0.agrees_with(a.deg_H0 * n, 1e-10)
    assert b.deg_Hinf.agrees_with(a.deg_Hinf * n, 1e-10)


@given(admissible_points("37a1", (1, -1)), nonzero_t)
@settings(max_examples=15)
def test_negation_swaps_exactly_at_finite_places(P, t):
    d = by_name("37a1").data()
    X = ExtPoint(P, t)
    a, b = relative_heights(d, X), relative_heights(d, ext_neg(d, X))
    assert b.H0_finite == a.Hinf_finite and b.Hinf_finite == a.H0_finite
    assert b.deg_H0.agrees_with(a.deg_Hinf, 1e-10)


def test_total_height_scaling():
    cfg = by_name("37a1")
    d, E = cfg.data(), cfg.curve
    X = ExtPoint(Point(6, 14), mpq(3, 7))
    Y = ext_mul_n(d, 2, X)
    a, b = relative_heights(d, X), relative_heights(d, Y)
    hb = canonical_height(E, Y.base)
    assert hb.agrees_with(canonical_height(E, X.base) * 4, 1e-10)
    assert (b.deg_H0 + b.deg_Hinf).agrees_with((a.deg_H0 + a.deg_Hinf) * 2, 1e-10)
    assert total_height(d, Y).agrees_with(hb + b.deg_H0 + b.deg_Hinf, 1e-30)


@pytest.mark.parametrize("cfg", CORPUS, ids=lambda c: c.name)
def test_total_height_torsion_and_positive(cfg):
    d = cfg.data()
    for X, _ in torsion_extension_points(cfg):
        assert total_height(d, X).contains(0, 1e-10)
    for P in cfg.points:
        if cfg.curve.is_torsion(P)[0]:
            continue
        assert total_height(d, ExtPoint(P, 1)).value > 1e-3


def test_difference_identity_base_origin():
    d = by_name("37a1").data()
    c = difference_identity_check(d, ExtPoint(O, mpq(5, 3)))
    assert c.holds and c.rhs.value == 0 and c.lhs.contains(0, 0)


def test_scaling_t_keeps_difference_exactly():
    d = by_name("37a1").data()
    P = Point(6, 14)
    a = relative_heights(d, ExtPoint(P, mpq(3, 7)))
    b = relative_heights(d, ExtPoint(P, mpq(3, 7) * 7))
    # the finite bookkeeping moves by exactly +log 7 ...
    assert (b.H0_finite - b.Hinf_finite) - (a.H0_finite - a.Hinf_finite) == LogRational(mpq(7))
    # ... and the archimedean part gives it back
    assert b.difference.agrees_with(a.difference, 1e-30)


@pytest.mark.parametrize("cfg", CORPUS, ids=lambda c: c.name)
def test_difference_identity(cfg):
    d = cfg.data()

    @given(admissible_points(cfg.name), nonzero_t)
    @settings(max_examples=10)
    def check(P, t):
        c = difference_identity_check(d, ExtPoint(P, t))
        assert c.holds, c.residual
        rh = relative_heights(d, ExtPoint(P, t))
        assert rh.deg_H0.value >= -1e-12 and rh.deg_Hinf.value >= -1e-12

    check()


def test_decompose_neutral():
    rep = decompose(by_name("37a1").data(), NEUTRAL)
    assert all(_zero(r.h0_local) and _zero(r.hinf_local) and _zero(r.lambda_D) for r in rep.rows)
    assert rep.total_height.value == 0


@pytest.mark.parametrize("cfg", CORPUS, ids=lambda c: c.name)
def test_decompose_rows_sum_and_exact_finite(cfg):
    d = cfg.data()
    P = cfg.points[0]
    X = ExtPoint(P, mpq(12, 35))
    rep = decompose(d, X)
    h0, hinf, lam = rep.row_sums()
    assert h0.agrees_with(rep.deg_H0, 1e-25) and hinf.agrees_with(rep.deg_Hinf, 1e-25)
    assert lam.agrees_with(rep.nt_base_pairing, 1e-20)
    for r in rep.rows:
        if r.exact:
            assert isinstance(r.h0_local, ExactLog) and isinstance(r.hinf_local, ExactLog)
    places = [r.place for r in rep.rows]
    assert places == sorted(places) and places[-1] == ARCH


def test_report_serializations_agree_and_are_deterministic():
    d = by_name("congruent5").data()
    X = ExtPoint(Point(-4, 6), mpq(2, 3))
    rep = decompose(d, X)
    js = rep.to_json()
    assert js == decompose(d, X).to_json()
    obj = json.loads(js)
    tsv = rep.to_tsv().splitlines()
    body = [l.split("\t") for l in tsv[1:] if not l.startswith("#")]
    for row, line in zip(obj["rows"], body):
        assert line[0] == row["place"]
        assert line[2] == row["h0_local"]["value"] and line[3] == row["hinf_local"]["value"]
    totals = {l.split("\t")[0][2:]: l.split("\t")[1] for l in tsv if l.startswith("#")}
    assert totals == {k: v["value"] for k, v in obj["totals"].items()}


def test_oracle_neutral_is_zero():
    res = tate_limit_oracle(by_name("37a1").data(), NEUTRAL, k_max=5)
    assert all(h == 0 for h in res.H0 + res.Hinf)


def test_oracle_tracks_closed_form():
    cfg = by_name("rank1_a1")
    d = cfg.data()
    X = ExtPoint(cfg.Q0, 1)
    res = tate_limit_oracle(d, X, k_max=8)
    rh = relative_heights(d, X)
    h0, hinf = res.final
    # loose: k = 8 only, the acceptance suite runs the full depth
    assert abs(h0 - rh.deg_H0.value) < 5e-3 and abs(hinf - rh.deg_Hinf.value) < 5e-3
    assert res.decay_ratio is None or 0.2 < res.decay_ratio < 0.8


def test_lift_examples():
    cfg = by_name("37a1")
    d = cfg.data()
    assert find_height_zero_lift(d, O) == Found(mpq(1))
    r = find_height_zero_lift(d, cfg.Q0)
    assert isinstance(r, Obstructed) and r.kind == "pairing"


def test_lift_on_torsion_q0():
    d = by_name("congruent5").data()
    r = find_height_zero_lift(d, Point(-4, 6))
    assert isinstance(r, (Found, Obstructed))
    if isinstance(r, Found):
        rh = relative_heights(d, ExtPoint(Point(-4, 6), r.t))
        assert rh.deg_H0.contains(0, 1e-10) and rh.deg_Hinf.contains(0, 1e-10)
    assert r == find_height_zero_lift(d, Point(-4, 6))


def test_finite_obstruction_confirmed_by_scan():
    d = by_name("congruent5").data()
    r = find_height_zero_lift(d, Point(5, 0))
    assert isinstance(r, Obstructed) and r.kind == "finite"
    assert lift_scan(d, Point(5, 0), [2, 3, 5], bound=4) == []


def test_multiple_with_lift():
    cfg = by_name("congruent5")
    d, E = cfg.data(), cfg.curve
    r = multiple_with_lift(d, Point(5, 0), 4)
    assert isinstance(r, Found) and r.n >= 1
    rh = relative_heights(d, ExtPoint(E.mul(r.n, Point(5, 0)), r.t))
    assert rh.deg_H0.contains(0, 1e-10) and rh.deg_Hinf.contains(0, 1e-10)
    c37 = by_name("37a1")
    assert multiple_with_lift(c37.data(), c37.Q0, 4) == NotFound("nonzero pairing")


def test_multi_relative_heights():
    cfg = by_name("37a1")
    d1, d2 = cfg.data(), cfg.alt_data()
    P = Point(6, 14)
    one = multi_relative_heights([d1], MultiExtPoint(P, (mpq(3, 7),)))
    rh = relative_heights(d1, ExtPoint(P, mpq(3, 7)))
    assert one.sum_H0.agrees_with(rh.deg_H0, 0) and one.sum_Hinf.agrees_with(rh.deg_Hinf, 0)
    two = multi_relative_heights([d1, d2], MultiExtPoint(P, (mpq(3, 7), 5)))
    swapped = multi_relative_heights([d2, d1], MultiExtPoint(P, (5, mpq(3, 7))))
    assert two.total.agrees_with(swapped.total, 1e-30)
    tors = by_name("congruent5")
    dt = tors.data()
    m = multi_relative_heights([dt, dt], MultiExtPoint(O, (1, 1)))
    assert m.total.contains(0, 1e-10)
