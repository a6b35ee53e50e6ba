"""Carleson-type classification of measures on [0, 1).

A measure is s-Carleson in radial form when ``mu([t,1)) <= C (1-t)**s``
and a-logarithmic s-Carleson when ``mu([t,1)) log(2/(1-t))**a <= C (1-t)**s``.
Suprema over t are replaced by maxima over grids that are geometric in
``1 - t``.
"""
from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_increasing_grid, check_scalar
from .exceptions import DegenerateTail, InvalidCase
from .measures import log_factor, tail, truncate_tail

__all__ = [
    "Verdict",
    "CarlesonQuery",
    "CarlesonReport",
    "TailExponentRegressor",
    "default_t_grid",
    "carleson_constant",
    "fit_exponent",
    "vanishing_probe",
    "VanishingProbe",
    "TheoremCase",
    "ThresholdQuery",
    "LogCarlesonSpec",
    "threshold_exponent",
]

VANISH_FRACTION = 0.1
PLATEAU_FRACTION = 0.9


class Verdict(str, enum.Enum):
    VANISHING = "Vanishing"
    NON_VANISHING = "NonVanishing"
    INCONCLUSIVE = "Inconclusive"


def default_t_grid(n=49, min_gap=1e-8):
    """Grid from t = 0 to ``1 - min_gap``, geometric in ``1 - t``."""
    return 1.0 - np.geomspace(1.0, min_gap, n)


@dataclass(frozen=True)
class CarlesonQuery:
    s: float
    log_order: float = 0.0
    t_grid: tuple = None

    def __post_init__(self):
        object.__setattr__(self, "s", check_scalar(self.s, "s", lower=0.0))
        object.__setattr__(
            self, "log_order", check_scalar(self.log_order, "log_order", lower=0.0, closed="left")
        )
        grid = default_t_grid() if self.t_grid is None else self.t_grid
        grid = check_increasing_grid(grid, "t_grid")
        object.__setattr__(self, "t_grid", tuple(grid.tolist()))


@dataclass
class CarlesonReport:
    """Tail-ratio table for one (s, a) query and the derived summaries."""

    s: float
    log_order: float
    constant_sup: float
    ratio_table: np.ndarray  # columns: t, tail, ratio
    vanishing_verdict: Verdict
    growing: bool
    fitted_exponent: float
    fitted_log_order: float

    def to_dict(self):
        return {
            "s": self.s,
            "log_order": self.log_order,
            "constant_sup": self.constant_sup,
            "vanishing_verdict": self.vanishing_verdict.value,
            "growing": self.growing,
            "fitted_exponent": self.fitted_exponent,
            "fitted_log_order": self.fitted_log_order,
            "ratio_table": [
                {"t": float(t), "tail": float(m), "ratio": float(r)} for t, m, r in self.ratio_table
            ],
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "tail", "ratio"])
        for row in self.ratio_table:
            writer.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


def _ratios(tails, t, s, log_order):
    gap = 1.0 - t
    ratio = tails / gap**s
    if log_order:
        ratio = ratio * log_factor(t) ** log_order
    return ratio


def _last_decade(t):
    gap = 1.0 - np.asarray(t)
    return gap <= 10.0 * gap[-1]


def _classify_sequence(values, monotone_mask=None):
    """Vanishing / NonVanishing / Inconclusive for a sequence that should decay."""
    values = np.asarray(values, dtype=float)
    ref = values.max() if values.size else 0.0
    if ref == 0.0:
        return Verdict.VANISHING
    seg = values if monotone_mask is None else values[monotone_mask]
    decreasing = bool(np.all(np.diff(seg) <= 1e-12 * ref))
    if values[-1] <= VANISH_FRACTION * ref and decreasing:
        return Verdict.VANISHING
    if values[-1] >= PLATEAU_FRACTION * ref:
        return Verdict.NON_VANISHING
    return Verdict.INCONCLUSIVE


def carleson_constant(mu, query):
    """Grid supremum of ``tail(t) log(2/(1-t))**a / (1-t)**s``.

    The supremum over the grid is a lower bound for the true Carleson
    constant. ``growing`` flags a ratio that still increases over the last
    decade of ``1 - t``, the signature of a measure that is not s-Carleson.
    """
    t = np.asarray(query.t_grid)
    tails = tail(mu, t)
    ratio = _ratios(tails, t, query.s, query.log_order)
    sup = float(ratio.max())
    mask = _last_decade(t)
    seg = ratio[mask]
    growing = bool(seg.size > 1 and seg[-1] > seg[0] * (1.0 + 1e-6) and sup > 0)
    verdict = _classify_sequence(ratio, mask)
    try:
        s_hat, a_hat = fit_exponent(mu, t)
    except DegenerateTail:
        s_hat = a_hat = float("nan")
    table = np.column_stack([t, tails, ratio])
    return CarlesonReport(
        s=query.s,
        log_order=query.log_order,
        constant_sup=sup,
        ratio_table=table,
        vanishing_verdict=verdict,
        growing=growing,
        fitted_exponent=s_hat,
        fitted_log_order=a_hat,
    )


class TailExponentRegressor(RegressorMixin, BaseEstimator):
    """Least-squares fit of ``log tail = log C + s log(1-t) - a log log(2/(1-t))``.

    Parameters
    ----------
    fit_log_order : bool, default=True
        If False the logarithmic order is pinned to zero.

    Attributes
    ----------
    exponent_ : float
    log_order_ : float
    log_constant_ : float
    """

    def __init__(self, fit_log_order=True):
        self.fit_log_order = fit_log_order

    def _design(self, t):
        t = np.asarray(t, dtype=float).ravel()
        cols = [np.ones_like(t), np.log1p(-t)]
        if self.fit_log_order:
            cols.append(-np.log(log_factor(t)))
        return np.column_stack(cols)

    def fit(self, X, y):
        t = check_increasing_grid(X, "t_grid")
        y = np.asarray(y, dtype=float).ravel()
        if y.shape != t.shape:
            raise ValueError("tail values must match the t grid")
        if np.any(y <= 0.0):
            bad = t[y <= 0.0][0]
            raise DegenerateTail(f"tail vanishes at t = {bad:.6g}; no power-law fit possible")
        coef, *_ = np.linalg.lstsq(self._design(t), np.log(y), rcond=None)
        self.log_constant_ = float(coef[0])
        self.exponent_ = float(coef[1])
        self.log_order_ = float(coef[2]) if self.fit_log_order else 0.0
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self)
        design = self._design(X)
        coef = [self.log_constant_, self.exponent_]
        if self.fit_log_order:
            coef.append(self.log_order_)
        return np.exp(design @ np.asarray(coef))


def fit_exponent(mu, t_grid=None):
    """Fitted ``(s_hat, a_hat)`` for the tail of ``mu`` on ``t_grid``.

    ``t_grid`` defaults to :func:`default_t_grid`.

    Raises
    ------
    DegenerateTail
        If the tail is zero somewhere on the grid.
    """
    t = check_increasing_grid(default_t_grid() if t_grid is None else t_grid, "t_grid")
    reg = TailExponentRegressor().fit(t, tail(mu, t))
    return reg.exponent_, reg.log_order_


@dataclass
class VanishingProbe:
    s: float
    rows: np.ndarray  # columns: r, sup_{t >= r} tail(t) / (1-t)**s
    verdict: Verdict

    def to_dict(self):
        return {
            "s": self.s,
            "verdict": self.verdict.value,
            "rows": [{"r": float(r), "sup_ratio": float(v)} for r, v in self.rows],
        }


def tail_sup(mu, s, r, log_order=0.0, n_points=33, min_gap=1e-8):
    """``sup_{t >= r} tail(t) log(2/(1-t))**a / (1-t)**s`` on a geometric grid."""
    gap0 = 1.0 - r
    if gap0 <= min_gap:
        t = np.array([r])
    else:
        t = 1.0 - np.geomspace(gap0, min_gap, n_points)
        t[0] = r
    return float(_ratios(tail(mu, t), t, s, log_order).max())


def vanishing_probe(mu, s, r_grid, log_order=0.0):
    """Carleson constants of the tail measures ``mu_r`` along ``r_grid``.

    The constant of ``mu_r`` equals ``sup_{t >= r}`` of the tail ratio of
    ``mu``; it stands in for the embedding norm of ``mu_r``. The verdict is
    Vanishing when the sequence decreases to below 10% of its first value.
    """
    s = check_scalar(s, "s", lower=0.0)
    r = check_increasing_grid(r_grid, "r_grid")
    vals = np.array([tail_sup(truncate_tail(mu, ri), s, ri, log_order) for ri in r])
    verdict = _classify_sequence_from_start(vals)
    return VanishingProbe(s=s, rows=np.column_stack([r, vals]), verdict=verdict)


def _classify_sequence_from_start(vals):
    first = vals[0]
    if first == 0.0:
        return Verdict.VANISHING
    if vals[-1] <= VANISH_FRACTION * first and np.all(np.diff(vals) <= 1e-12 * first):
        return Verdict.VANISHING
    if vals[-1] >= PLATEAU_FRACTION * first:
        return Verdict.NON_VANISHING
    return Verdict.INCONCLUSIVE


class TheoremCase(str, enum.Enum):
    T31_i = "T31_i"
    T31_ii = "T31_ii"
    T31_iii = "T31_iii"
    T41_necessary = "T41_necessary"
    T41_sufficient = "T41_sufficient"
    T41_q1 = "T41_q1"
    T43_necessary = "T43_necessary"
    T43_sufficient = "T43_sufficient"
    T401 = "T401"
    T403 = "T403"


@dataclass(frozen=True)
class LogCarlesonSpec:
    s: float
    log_order: float = 1.0


@dataclass(frozen=True)
class ThresholdQuery:
    p: float
    q: float
    alpha: float
    beta: float
    case: TheoremCase

    def __post_init__(self):
        object.__setattr__(self, "p", check_scalar(self.p, "p", lower=0.0))
        object.__setattr__(self, "q", check_scalar(self.q, "q", lower=0.0))
        object.__setattr__(self, "alpha", check_scalar(self.alpha, "alpha", lower=-1.0))
        object.__setattr__(self, "beta", check_scalar(self.beta, "beta", lower=0.0))
        object.__setattr__(self, "case", TheoremCase(self.case))

    @property
    def q_conj_inv(self):
        """``1/q'`` where ``1/q + 1/q' = 1``; only meaningful for q > 1."""
        return 1.0 - 1.0 / self.q


def _require(cond, msg):
    if not cond:
        raise InvalidCase(msg)


def threshold_exponent(query):
    """Carleson exponent attached to a theorem case; pure arithmetic.

    Returns a float, or a :class:`LogCarlesonSpec` for the ``q = 1`` cases.

    Raises
    ------
    InvalidCase
        If the parameters violate the hypotheses of the case.
    """
    p, q, a, b = query.p, query.q, query.alpha, query.beta
    case = query.case
    if case is TheoremCase.T31_i:
        _require(p <= 1, "T31_i needs 0 < p <= 1")
        return (a + 2) / p
    if case is TheoremCase.T31_ii:
        _require(1 <= p <= 2, "T31_ii needs 1 <= p <= 2")
        return (a + 2 - (p - 1) ** 2) / p
    if case is TheoremCase.T31_iii:
        _require(p >= 2, "T31_iii needs p >= 2")
        return (a + 1) / p

    if case in (TheoremCase.T41_necessary, TheoremCase.T41_sufficient, TheoremCase.T41_q1):
        _require(b > 1, f"{case.value} needs beta > 1")
        _require(q >= p, f"{case.value} needs q >= p")
        if case is TheoremCase.T41_q1:
            _require(q == 1, "T41_q1 needs q = 1")
            return LogCarlesonSpec(s=(a + 2) / p, log_order=1.0)
        _require(q > 1, f"{case.value} needs q > 1")
        if case is TheoremCase.T41_necessary:
            return (a + 2) / p + b * query.q_conj_inv
        return max(a + 2, b) * (1 / p + query.q_conj_inv)

    if case in (TheoremCase.T43_necessary, TheoremCase.T43_sufficient):
        _require(q > 1 and p <= q, f"{case.value} needs q > 1 and p <= q")
        _require(a > p - 1, f"{case.value} needs alpha > p - 1")
        _require(b > q, f"{case.value} needs beta > q")
        if case is TheoremCase.T43_necessary:
            return (a + 2) / p + (b + 1) * query.q_conj_inv - 1
        return max(a + 2 - p, b + 1) * (1 / p + query.q_conj_inv)

    if case is TheoremCase.T401:
        _require(math.isclose(b, a + 2), "T401 concerns the operator with beta = alpha + 2")
        _require(q >= p, "T401 needs q >= p")
        if q == 1:
            return LogCarlesonSpec(s=(a + 2) / p, log_order=1.0)
        _require(q > 1, "T401 needs q >= 1")
        return (a + 2) / p + (a + 2) * query.q_conj_inv

    # T403
    _require(q > 1 and p <= q, "T403 needs q > 1 and p <= q")
    _require(a > p - 1, "T403 needs alpha > p - 1")
    _require(math.isclose(b, a + 1 - p), "T403 concerns the operator with beta = alpha + 1 - p")
    return (a + 2 - p) / p + (a + 2 - p) * query.q_conj_inv
