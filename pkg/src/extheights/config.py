"""Run configuration shared by the CLI, the verification suites and the scripts."""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

from .curve import TORSION_ORDER_BOUND

PRECISION_ENV = "EXTHEIGHTS_PRECISION"


def default_precision() -> int:
    raw = os.environ.get(PRECISION_ENV)
    if raw is None:
        return 40
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{PRECISION_ENV} must be an integer, got {raw!r}") from None
    if value < 10:
        raise ValueError(f"{PRECISION_ENV} must be at least 10")
    return value


@dataclass(frozen=True)
class JobConfig:
    precision_digits: int = field(default_factory=default_precision)
    tolerance: float = 1e-10
    oracle_n: int = 2
    oracle_k_max: int = 12
    # "auto" searches the deterministic candidate list; otherwise an explicit "x,y"
    r_policy: str = "auto"
    torsion_bound: int = TORSION_ORDER_BOUND

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        need = 2 * (-math.log10(self.tolerance))
        if self.precision_digits < need:
            raise ValueError(
                f"precision_digits={self.precision_digits} is below 2*(-log10 tolerance)={need:.0f}"
            )
        if self.oracle_n < 2:
            raise ValueError("oracle base n must be >= 2")
        if self.oracle_k_max < 1:
            raise ValueError("oracle depth must be >= 1")
