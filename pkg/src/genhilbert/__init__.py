"""Generalized Hilbert operators induced by measures on [0, 1).

The package computes moments and Carleson-type tail classifications of
measures, weighted Bergman/Dirichlet/Bloch norms of truncated Taylor series,
the operator ``H_{mu,beta}`` in matrix and integral form, and numerical
probes of its boundedness and compactness.
"""
from .carleson import (
    CarlesonQuery,
    CarlesonReport,
    LogCarlesonSpec,
    TailExponentRegressor,
    TheoremCase,
    ThresholdQuery,
    Verdict,
    carleson_constant,
    fit_exponent,
    threshold_exponent,
    vanishing_probe,
)
from .exceptions import (
    ConfigError,
    DegenerateTail,
    GenHilbertError,
    GridTooCoarse,
    InvalidCase,
    NonConvergent,
    TruncationInsufficient,
    WellDefinednessWarning,
)
from .measures import DensityTerm, MeasureSpec, integrate, moment, moments, tail, truncate_tail
from .operator import (
    GeneralizedHilbertOperator,
    OperatorSpec,
    apply_coefficient,
    apply_integral,
    apply_matrix,
    gamma_ratio,
    gamma_ratios,
    matrix_entry,
    well_definedness_gate,
)
from .probes import (
    Family,
    ProbeConfig,
    ProbeResult,
    ProbeVerdict,
    bergman_pairing,
    compactness_probe,
    duality_identity_bergman,
    duality_identity_dirichlet,
    embedding_ratio,
    lower_bound_scan,
    ratio_sup,
    reproducing_check,
)
from .spaces import (
    QuadratureGrid,
    SpaceKind,
    SpaceParams,
    TaylorPoly,
    bergman_norm,
    bloch_norm,
    dirichlet_norm,
    space_norm,
    test_f_bergman,
    test_f_dirichlet,
    test_g_bergman,
    test_g_log,
)

__version__ = "0.1.0"

import types as _types

__all__ = sorted(
    name for name, obj in globals().items() if not name.startswith("_") and not isinstance(obj, _types.ModuleType)
)
