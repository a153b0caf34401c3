import os
import sys

import pytest
from gmpy2 import mpq
from hypothesis import HealthCheck, settings, strategies as st

from extheights.corpus import CORPUS, by_name
from extheights.curve import O, Point

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("ci", deadline=None, max_examples=15, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

GENS = {
    "37a1": (Point(0, 0), [O]),
    "congruent5": (Point(-4, 6), [O, Point(0, 0), Point(5, 0), Point(-5, 0)]),
    "rank1_a1": (Point(1, 1), [O]),
}
BOUNDS = {"37a1": 6, "congruent5": 2, "rank1_a1": 4}


def points(name: str):
    """Strategy: k*gen + torsion on a corpus curve."""
    cfg = by_name(name)
    gen, tors = GENS[name]
    b = BOUNDS[name]
    return st.builds(lambda k, T: cfg.curve.add(cfg.curve.mul(k, gen), T),
                     st.integers(-b, b), st.sampled_from(tors))


def admissible_points(name: str, multiples=(1,)):
    cfg = by_name(name)
    d = cfg.data()
    return points(name).filter(lambda P: all(d.param.admits(cfg.curve.mul(m, P)) for m in multiples))


nonzero_t = st.builds(
    lambda s, a, b, c: s * mpq(2) ** a * mpq(3) ** b * mpq(7) ** c,
    st.sampled_from([1, -1]), st.integers(-4, 4), st.integers(-4, 4), st.integers(-3, 3),
)

nonzero_rationals = st.builds(
    lambda n, d: mpq(n, d), st.integers(-10**9, 10**9).filter(bool), st.integers(1, 10**9)
)

CONFIG_NAMES = [c.name for c in CORPUS]


@pytest.fixture(params=CONFIG_NAMES)
def cfg(request):
    return by_name(request.param)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
