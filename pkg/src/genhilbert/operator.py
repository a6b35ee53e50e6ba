"""The generalized Hilbert operator induced by a measure on [0, 1).

Matrix entries are ``Gamma(n+beta)/(n! Gamma(beta)) * m_{n+k}`` with
``m_j = int t**j dmu``. Only the ``2N+1`` moments are stored; row ``n`` of
the matrix is the moment window ``m[n : n+N+1]`` scaled by the row factor.

Three evaluation routes are provided and cross-checked in the tests:

* :func:`apply_matrix` -- the truncated matrix acting on coefficients,
* :func:`apply_coefficient` -- ``b_n = row(n) * int t**n f(t) dmu``,
* :func:`apply_integral` -- ``int f(t) / (1 - t z)**beta dmu`` at points z.
"""
from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import special
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import (
    check_coefficients,
    check_disk_points,
    check_nonneg_int,
    check_scalar,
)
from .carleson import (
    CarlesonQuery,
    CarlesonReport,
    TheoremCase,
    ThresholdQuery,
    carleson_constant,
    threshold_exponent,
)
from .exceptions import WellDefinednessWarning
from .measures import DEFAULT_TOL, MeasureSpec, integrate, moments
from .spaces import TaylorPoly

__all__ = [
    "gamma_ratio",
    "gamma_ratios",
    "gamma_ratio_lgamma",
    "OperatorSpec",
    "matrix_entry",
    "apply_matrix",
    "apply_integral",
    "apply_coefficient",
    "GateResult",
    "well_definedness_gate",
    "matrix_csv",
    "GeneralizedHilbertOperator",
]

_ROW_CHUNK_ELEMS = 1 << 23


def gamma_ratios(n_max, beta):
    """``Gamma(n+beta)/(n! Gamma(beta))`` for ``n = 0..n_max`` by the recurrence
    ``c_n = c_{n-1} (n-1+beta)/n``, which never forms the Gamma values themselves."""
    n_max = check_nonneg_int(n_max, "n_max")
    beta = check_scalar(beta, "beta", lower=0.0)
    n = np.arange(1, n_max + 1, dtype=float)
    return np.concatenate([[1.0], np.cumprod((n - 1.0 + beta) / n)])


def gamma_ratio(n, beta):
    """Single row factor ``Gamma(n+beta)/(n! Gamma(beta))``."""
    return float(gamma_ratios(n, beta)[-1])


def gamma_ratio_lgamma(n, beta):
    """Same quantity through log-Gamma; independent check of the recurrence."""
    n = np.asarray(n, dtype=float)
    return np.exp(special.gammaln(n + beta) - special.gammaln(n + 1.0) - special.gammaln(beta))


@dataclass(frozen=True)
class OperatorSpec:
    """``H_{mu,beta}`` truncated to output indices ``0..n_terms``.

    The moment cache ``m_0..m_{2N}`` and the row factors are computed once at
    construction; the object is immutable afterwards.
    """

    beta: float
    measure: MeasureSpec
    n_terms: int = 64
    moment_cache: np.ndarray = field(init=False, repr=False, compare=False)
    row_factors: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "beta", check_scalar(self.beta, "beta", lower=0.0))
        object.__setattr__(self, "n_terms", check_nonneg_int(self.n_terms, "n_terms"))
        if not isinstance(self.measure, MeasureSpec):
            raise TypeError("measure must be a MeasureSpec")
        object.__setattr__(self, "moment_cache", moments(self.measure, 2 * self.n_terms))
        rows = gamma_ratios(self.n_terms, self.beta)
        rows.setflags(write=False)
        object.__setattr__(self, "row_factors", rows)

    def with_terms(self, n_terms):
        return OperatorSpec(self.beta, self.measure, n_terms)


def matrix_entry(spec, n, k):
    """``Gamma(n+beta)/(n! Gamma(beta)) * m_{n+k}`` for ``n, k <= N``."""
    n = check_nonneg_int(n, "n")
    k = check_nonneg_int(k, "k")
    if n > spec.n_terms or k > spec.n_terms:
        raise IndexError(f"indices must be <= n_terms={spec.n_terms}")
    return float(spec.row_factors[n] * spec.moment_cache[n + k])


def _hankel_apply(m, a, n_out):
    """``sum_k m[n+k] a[k]`` for ``n < n_out`` without forming the matrix."""
    window = sliding_window_view(m[: n_out + a.size - 1], a.size)
    out = np.empty(n_out, dtype=complex)
    rows = max(1, _ROW_CHUNK_ELEMS // a.size)
    for start in range(0, n_out, rows):
        block = np.ascontiguousarray(window[start : start + rows])
        out[start : start + rows] = block @ a.real + 1j * (block @ a.imag)
    return out


def apply_matrix(spec, f, space=None):
    """Coefficients ``b_n = row(n) sum_k m_{n+k} a_k`` for ``n = 0..N``.

    Parameters
    ----------
    spec : OperatorSpec
    f : TaylorPoly
        Input series with order at most ``spec.n_terms``.
    space : SpaceParams, optional
        Source space. When given, the well-definedness gate is evaluated and
        a :class:`WellDefinednessWarning` is emitted if it fails; the result
        is still returned.
    """
    if f.order > spec.n_terms:
        raise ValueError(f"input order {f.order} exceeds operator truncation {spec.n_terms}")
    if space is not None:
        _warn_if_gate_fails(spec.measure, space.p, space.alpha)
    n_out = spec.n_terms + 1
    if f.coeffs.size == 0:
        return TaylorPoly(np.zeros(n_out))
    b = _hankel_apply(spec.moment_cache, f.coeffs, n_out)
    return TaylorPoly(spec.row_factors * b)


def apply_integral(spec, f, z, tol=DEFAULT_TOL):
    """``int_[0,1) f(t) (1 - t z)**(-beta) dmu(t)`` at points ``z`` of the disk.

    The complex power uses the principal branch; ``Re(1 - t z) > 0`` on the
    disk so the kernel is analytic there.
    """
    z_arr = check_disk_points(z)
    zf = z_arr.ravel()
    beta = spec.beta

    def phi(t):
        kern = np.exp(-beta * np.log(1.0 - np.outer(zf, t)))
        return f.evaluate_real(t)[None, :] * kern

    out = np.asarray(integrate(spec.measure, phi, tol=tol), dtype=complex)
    if z_arr.ndim == 0:
        return complex(out.reshape(-1)[0])
    return out.reshape(z_arr.shape)


def apply_coefficient(spec, f, tol=DEFAULT_TOL):
    """Coefficients ``b_n = row(n) int t**n f(t) dmu`` for ``n = 0..N``."""
    if f.order > spec.n_terms:
        raise ValueError(f"input order {f.order} exceeds operator truncation {spec.n_terms}")
    n = np.arange(spec.n_terms + 1, dtype=float)

    def phi(t):
        return np.power(t[None, :], n[:, None]) * f.evaluate_real(t)[None, :]

    vals = np.asarray(integrate(spec.measure, phi, tol=tol), dtype=complex)
    return TaylorPoly(spec.row_factors * vals)


@dataclass
class GateResult:
    """Outcome of the well-definedness check for ``A^p_alpha`` inputs."""

    passed: bool
    exponent: float
    cases: tuple
    report: CarlesonReport

    def __bool__(self):
        return self.passed


def _gate_cases(p):
    cases = []
    if p <= 1:
        cases.append(TheoremCase.T31_i)
    if 1 <= p <= 2:
        cases.append(TheoremCase.T31_ii)
    if p >= 2:
        cases.append(TheoremCase.T31_iii)
    return tuple(cases)


def well_definedness_gate(mu, p, alpha, t_grid=None):
    """Check the sufficient Carleson condition for ``H_{mu,beta}`` on ``A^p_alpha``.

    The exponent is ``(alpha+2)/p`` for p <= 1, ``(alpha+2-(p-1)**2)/p`` for
    1 <= p <= 2 and ``(alpha+1)/p`` for p >= 2; where two cases apply the
    smaller exponent is used. The gate passes when the tail ratio at that
    exponent does not keep growing toward t = 1.
    """
    p = check_scalar(p, "p", lower=0.0)
    alpha = check_scalar(alpha, "alpha", lower=-1.0)
    cases = _gate_cases(p)
    exps = [threshold_exponent(ThresholdQuery(p, max(p, 1.0), alpha, 2.0, c)) for c in cases]
    s = min(exps)
    report = carleson_constant(mu, CarlesonQuery(s, 0.0, t_grid))
    passed = bool(np.isfinite(report.constant_sup) and not report.growing)
    return GateResult(passed=passed, exponent=s, cases=cases, report=report)


_GATE_CACHE = {}


def _warn_if_gate_fails(mu, p, alpha):
    key = (mu, float(p), float(alpha))
    res = _GATE_CACHE.get(key)
    if res is None:
        res = well_definedness_gate(mu, p, alpha).passed
        _GATE_CACHE[key] = res
    if not res:
        warnings.warn(
            f"measure fails the Carleson condition for A^{p}_{alpha}; "
            "the truncated series is computed anyway",
            WellDefinednessWarning,
            stacklevel=3,
        )
    return res


def matrix_csv(spec, size=None):
    """CSV dump ``n,k,entry`` of the leading ``size x size`` block."""
    size = spec.n_terms + 1 if size is None else min(size, spec.n_terms + 1)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["n", "k", "entry"])
    for n in range(size):
        for k in range(size):
            writer.writerow([n, k, repr(float(spec.row_factors[n] * spec.moment_cache[n + k]))])
    return buf.getvalue()


class GeneralizedHilbertOperator(TransformerMixin, BaseEstimator):
    """Estimator-style wrapper around ``H_{mu,beta}``.

    ``fit`` builds the moment cache; ``transform`` maps rows of Taylor
    coefficients to the coefficients of their images.

    Parameters
    ----------
    measure : MeasureSpec, default=None
        Lebesgue measure when None (with ``beta=1`` the classical Hilbert matrix).
    beta : float, default=1.0
    n_terms : int, default=64
        Output truncation order N; inputs may have at most N+1 coefficients.
    method : {"matrix", "coefficient"}, default="matrix"
    p, alpha : float, optional
        Source space ``A^p_alpha``; enables the well-definedness gate.
    tol : float, default=1e-10
        Integration tolerance for ``method="coefficient"`` and :meth:`evaluate_integral`.

    Attributes
    ----------
    spec_ : OperatorSpec
    moments_ : ndarray of shape (2 * n_terms + 1,)
    row_factors_ : ndarray of shape (n_terms + 1,)
    gate_ : GateResult or None
    n_features_in_ : int
    """

    def __init__(self, measure=None, beta=1.0, n_terms=64, method="matrix", p=None, alpha=None, tol=DEFAULT_TOL):
        self.measure = measure
        self.beta = beta
        self.n_terms = n_terms
        self.method = method
        self.p = p
        self.alpha = alpha
        self.tol = tol

    def fit(self, X=None, y=None):
        if self.method not in ("matrix", "coefficient"):
            raise ValueError(f"method must be 'matrix' or 'coefficient', got {self.method!r}")
        measure = MeasureSpec.lebesgue() if self.measure is None else self.measure
        self.spec_ = OperatorSpec(self.beta, measure, self.n_terms)
        self.moments_ = self.spec_.moment_cache
        self.row_factors_ = self.spec_.row_factors
        self.gate_ = None
        if self.p is not None and self.alpha is not None:
            self.gate_ = well_definedness_gate(measure, self.p, self.alpha)
            if not self.gate_.passed:
                warnings.warn(
                    f"measure fails the Carleson condition (exponent {self.gate_.exponent:.4g})",
                    WellDefinednessWarning,
                    stacklevel=2,
                )
        if X is not None:
            X = check_coefficients(X, max_features=self.n_terms + 1)
            self.n_features_in_ = X.shape[1]
        else:
            self.n_features_in_ = self.n_terms + 1
        return self

    def transform(self, X):
        check_is_fitted(self, "spec_")
        X = check_coefficients(X, max_features=self.n_terms + 1)
        out = np.empty((X.shape[0], self.n_terms + 1), dtype=complex)
        for i, row in enumerate(X):
            f = TaylorPoly(row)
            if self.method == "matrix":
                out[i] = apply_matrix(self.spec_, f).coeffs
            else:
                out[i] = apply_coefficient(self.spec_, f, tol=self.tol).coeffs
        return out

    def evaluate(self, X, z):
        """Evaluate the truncated image series of each row at the points ``z``."""
        z = check_disk_points(z)
        coeffs = self.transform(X)
        return np.stack([np.polynomial.polynomial.polyval(z, c) for c in coeffs])

    def evaluate_integral(self, X, z):
        """Integral-form values ``int f(t)/(1-tz)**beta dmu`` for each row."""
        check_is_fitted(self, "spec_")
        X = check_coefficients(X, max_features=self.n_terms + 1)
        return np.stack([apply_integral(self.spec_, TaylorPoly(r), z, self.tol) for r in X])

    def matrix(self):
        """Dense truncated matrix of shape (N+1, N+1)."""
        check_is_fitted(self, "spec_")
        N = self.n_terms
        window = sliding_window_view(self.moments_, N + 1)
        return self.row_factors_[:, None] * window
