"""Relative heights, torsion checks and lift verdicts over the reference corpus.

    python3 scripts/run_corpus.py [--config NAME] [--t 3/7] [--json out.json]
"""
import argparse
import json
import sys
from dataclasses import asdict, dataclass

import mpmath
from gmpy2 import mpq

from extheights.arakelov import is_trivial, restrict_bundle
from extheights.corpus import CORPUS, by_name
from extheights.extension import ExtPoint
from extheights.heights import canonical_height, nt_pairing
from extheights.places import as_rational, fmt_rational
from extheights.relative import difference_identity_check, find_height_zero_lift, relative_heights


@dataclass
class Row:
    config: str
    point: str
    t: str
    canonical_height: float
    deg_H0: float
    deg_Hinf: float
    pairing: float
    residual: float
    torsion: bool
    lift: str
    bundle_trivial: bool


def run(names, t) -> list:
    rows = []
    for name in names:
        cfg = by_name(name)
        E, d = cfg.curve, cfg.data()
        for P in cfg.points:
            X = ExtPoint(P, t)
            rh = relative_heights(d, X)
            cert = difference_identity_check(d, X)
            rows.append(Row(
                name, str(P), fmt_rational(t),
                float(canonical_height(E, P).value), float(rh.deg_H0.value), float(rh.deg_Hinf.value),
                float(nt_pairing(E, P, cfg.Q0).value), float(mpmath.mpf(cert.residual.value)),
                E.is_torsion(P)[0], str(find_height_zero_lift(d, P)), bool(is_trivial(restrict_bundle(d, P))),
            ))
    return rows


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", action="append", choices=[c.name for c in CORPUS])
    ap.add_argument("--t", default="1")
    ap.add_argument("--json", default=None, help="also write the rows to this file")
    args = ap.parse_args(argv)
    rows = run(args.config or [c.name for c in CORPUS], as_rational(args.t))
    fields = list(Row.__dataclass_fields__)
    print("\t".join(fields))
    for r in rows:
        vals = asdict(r)
        print("\t".join(f"{v:.12g}" if isinstance(v, float) else str(v) for v in vals.values()))
    if args.json:
        with open(args.json, "w") as fh:
            json.dump([asdict(r) for r in rows], fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
