"""Tate-limit oracle against the closed-form relative heights, iterate by iterate.

Prints k, n^-k h_0, n^-k h_inf and their errors for every oracle point of the
chosen configurations, then the fitted decay ratio and wall time.

    python3 scripts/oracle_decay.py [--config NAME] [--k-max 12] [--tsv out.tsv]
"""
import argparse
import sys
import time
from dataclasses import dataclass

import mpmath

from extheights.corpus import CORPUS, by_name
from extheights.extension import ExtPoint
from extheights.relative import ORACLE_SIZE_BUDGET, relative_heights, tate_limit_oracle


@dataclass
class OracleRun:
    config: str
    k_max: int = 12
    n: int = 2
    size_budget: float = ORACLE_SIZE_BUDGET


def run(job: OracleRun, out) -> None:
    cfg = by_name(job.config)
    d = cfg.data()
    for P, t in cfg.oracle_points:
        X = ExtPoint(P, t)
        rh = relative_heights(d, X)
        t0 = time.monotonic()
        res = tate_limit_oracle(d, X, n=job.n, k_max=job.k_max, size_budget=job.size_budget, check_decay=False)
        el = time.monotonic() - t0
        for k, (a, b) in enumerate(zip(res.H0, res.Hinf)):
            e0 = a - rh.deg_H0.value
            e1 = b - rh.deg_Hinf.value
            out.write(f"{job.config}\t{X}\t{k}\t{mpmath.nstr(a, 15)}\t{mpmath.nstr(b, 15)}\t"
                      f"{mpmath.nstr(e0, 3)}\t{mpmath.nstr(e1, 3)}\n")
        ratio = "n/a" if res.decay_ratio is None else f"{res.decay_ratio:.3f}"
        out.write(f"# {job.config} {X}: k reached {res.k_max}, ratio {ratio}, C {res.constant:.3g}, {el:.1f}s\n")
        out.flush()


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", action="append", choices=[c.name for c in CORPUS])
    ap.add_argument("--k-max", type=int, default=12)
    ap.add_argument("--n", type=int, default=2)
    ap.add_argument("--no-budget", action="store_true", help="iterate to k-max regardless of coordinate size")
    ap.add_argument("--tsv", default=None)
    args = ap.parse_args(argv)
    out = open(args.tsv, "w") if args.tsv else sys.stdout
    out.write("config\tpoint\tk\tH0_k\tHinf_k\terr_H0\terr_Hinf\n")
    for name in args.config or [c.name for c in CORPUS]:
        run(OracleRun(name, args.k_max, args.n, None if args.no_budget else ORACLE_SIZE_BUDGET), out)
    if out is not sys.stdout:
        out.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
