"""Canonical heights on extensions of elliptic curves by the multiplicative group, over Q."""
from .arakelov import (
    AdelicLine,
    Degree,
    MetrizedLine,
    Section,
    deg_hat,
    deg_hat_adelic,
    dual,
    is_trivial,
    restrict_bundle,
    tensor,
    tensor_power,
    torsion_trivial_over_Q,
)
from .compact import CompactPoint, compact_mul_n, fiber_coordinate_norm, norm_s_D0, norm_s_Dinf, ratio_identity_check
from .config import JobConfig
from .curve import O, CurvePoint, EllipticCurve, ModelMap, NotOnCurve, Point, minimal_model
from .extension import (
    ExtensionData,
    ExtPoint,
    MultiExtPoint,
    change_reference,
    cocycle_g,
    ext_add,
    ext_mul_n,
    ext_neg,
    g_n,
)
from .heights import (
    DivisorClassParam,
    SupportCollision,
    canonical_height,
    lambda_D,
    lambda_v,
    naive_height,
    nt_pairing,
    tate_limit_height,
)
from .places import ARCH, ExactLog, Place, RealValue, product_formula_sum
from .relative import (
    Found,
    HeightReport,
    NotFound,
    Obstructed,
    decompose,
    deg_H0,
    deg_Hinf,
    difference_identity_check,
    find_height_zero_lift,
    multi_relative_heights,
    multiple_with_lift,
    relative_heights,
    tate_limit_oracle,
    total_height,
)

__version__ = "0.1.0"
