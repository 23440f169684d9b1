"""Finite-precision algebra for finitely presented Z_p[[X]]-modules."""

from .errors import (
    CongruenceViolation,
    CorankMismatch,
    DimensionBudgetExceeded,
    IwasawaError,
    NotDistinguished,
    NotDivisible,
    NotSquare,
    ParamMismatch,
    PrecisionExhausted,
    SizeExceeded,
    Unstable,
)
from .fplin import FpMatrix, cokernel_dim, cokernel_length, mult_matrix, rank_mod_p
from .harness import SelmerSkeleton, SuiteReport, assemble_delta, run_suite
from .modules import (
    ElementaryStructure,
    GrowthTrace,
    InvariantReport,
    PresentedModule,
    char_generator,
    char_invariants,
    direct_sum,
    elementary,
    growth_trace,
    ideal_syzygy,
    invariants_via_growth,
    rank_estimate,
    twist_module,
)
from .ring import (
    IwasawaSeries,
    RingParams,
    WeierstrassData,
    det,
    omega,
    series_invariants,
    twist_substitute,
    weierstrass_divide,
    weierstrass_prepare,
)

__all__ = [name for name in dir() if not name.startswith("_")]
