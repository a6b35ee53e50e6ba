"""Numerical experiments around the boundedness and compactness theorems.

Every probe produces lower bounds or residuals over finite families; none of
them certifies an operator norm. Verdicts are phrased accordingly:
"consistent with bounded" versus "divergence detected".
"""
from __future__ import annotations

import csv
import enum
import io
import json
import math
from collections import namedtuple
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_increasing_grid, check_scalar
from .carleson import tail_sup
from .measures import integrate, log_factor, tail, truncate_tail
from .operator import OperatorSpec, apply_matrix
from .spaces import (
    QuadratureGrid,
    SpaceKind,
    SpaceParams,
    TaylorPoly,
    _checked_quadrature,
    circle_values,
    disk_integral,
    kernel_power,
    log_kernel,
    radial_rule,
    space_norm,
    test_f_bergman,
    test_f_dirichlet,
    test_g_log,
)

__all__ = [
    "ProbeVerdict",
    "Family",
    "ProbeConfig",
    "ProbeResult",
    "DualityResult",
    "bergman_pairing",
    "duality_identity_bergman",
    "duality_identity_dirichlet",
    "reproducing_check",
    "embedding_ratio",
    "lower_bound_scan",
    "ratio_sup",
    "compactness_probe",
    "random_poly",
    "default_a_grid",
]

DIVERGENCE_SLOPE = -0.2
RANDOM_DEGREE = 64


class ProbeVerdict(str, enum.Enum):
    BOUNDED_CONSISTENT = "BoundedConsistent"
    DIVERGENCE_DETECTED = "DivergenceDetected"
    INCONCLUSIVE = "Inconclusive"
    VANISHING_CONSISTENT = "VanishingConsistent"
    NON_VANISHING = "NonVanishing"


class Family(str, enum.Enum):
    BERGMAN_F = "BergmanF"
    DIRICHLET_F = "DirichletF"
    LOG_G = "LogG"
    RANDOM_POLY = "RandomPoly"


DualityResult = namedtuple("DualityResult", ["lhs", "rhs", "residual"])


def default_a_grid(n=13, min_gap=1e-3):
    """``a`` with ``1 - a`` geometric from 0.1 down to ``min_gap``."""
    return 1.0 - np.geomspace(0.1, min_gap, n)


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def _jsonable(v):
    if isinstance(v, enum.Enum):
        return v.value
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


@dataclass
class ProbeResult:
    """Rows of one probe plus its summary and verdict.

    ``summary["sup"]`` is always the maximum of the ``value`` column.
    ``settings`` records grids, seeds and tolerances for reproducibility.
    """

    kind: str
    columns: tuple
    rows: np.ndarray
    summary: dict
    verdict: ProbeVerdict
    settings: dict = field(default_factory=dict)

    def column(self, name):
        return self.rows[:, self.columns.index(name)]

    def to_dict(self):
        return _jsonable(
            {
                "kind": self.kind,
                "verdict": self.verdict,
                "summary": self.summary,
                "settings": self.settings,
                "columns": list(self.columns),
                "rows": self.rows,
            }
        )

    def to_json(self, **kwargs):
        kwargs.setdefault("sort_keys", True)
        return json.dumps(self.to_dict(), **kwargs)

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_fmt(v) for v in row])
        return buf.getvalue()


def _map(fn, items, n_jobs):
    """Ordered map, optionally over a process pool."""
    items = list(items)
    if not n_jobs or n_jobs == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(int(n_jobs), len(items))) as pool:
        return list(pool.map(fn, items))


# --- disk pairings ------------------------------------------------------------


def _disk_pairing(u, v, weight_exp, grid):
    """``int_D conj(u) v (1-|z|**2)**weight_exp dA`` for polynomials u, v."""
    grid = grid or QuadratureGrid()
    if not np.any(u.coeffs) or not np.any(v.coeffs):
        return 0j
    degree = u.order + v.order

    def run(n, M):
        rho, w = radial_rule(weight_exp, n)
        r = np.sqrt(rho)
        U = circle_values(u.coeffs, r, M)
        V = circle_values(v.coeffs, r, M)
        val = w @ (np.conj(U) * V).mean(axis=1)
        scale = w @ (np.abs(U) * np.abs(V)).mean(axis=1)
        return complex(val), float(scale)

    return _checked_quadrature(run, degree, grid, 1)


def bergman_pairing(h, g, p, alpha, gamma, grid=None):
    """``int_D h conj(g) (1-|z|**2)**(alpha/p + gamma/p') dA`` with ``p' = p/(p-1)``."""
    p = check_scalar(p, "p", lower=1.0)
    alpha = check_scalar(alpha, "alpha", lower=-1.0)
    gamma = check_scalar(gamma, "gamma", lower=-1.0)
    weight = alpha / p + gamma * (p - 1.0) / p
    return _disk_pairing(g, h, weight, grid)


def _residual(lhs, rhs):
    return abs(lhs - rhs) / (1.0 + abs(rhs))


def _measure_pairing(mu, fn):
    return complex(integrate(mu, fn))


def duality_identity_bergman(op, f, g, grid=None):
    """Both sides of ``<H f, g>_{beta-2} = (1/(beta-1)) int conj(f) g dmu``.

    The left side is the disk integral of ``conj(H f) g (1-|z|**2)**(beta-2)``
    computed by quadrature from the truncated operator. Truncation is exact
    here because only coefficients up to ``deg g`` survive the pairing.
    """
    beta = op.beta
    if beta <= 1:
        raise ValueError("the pairing identity needs beta > 1")
    spec = op if op.n_terms >= max(f.order, g.order) else op.with_terms(max(f.order, g.order))
    hf = apply_matrix(spec, f)
    lhs = _disk_pairing(hf, g, beta - 2.0, grid)
    rhs = _measure_pairing(
        op.measure, lambda t: np.conj(f.evaluate_real(t)) * g.evaluate_real(t)
    ) / (beta - 1.0)
    return DualityResult(lhs, rhs, _residual(lhs, rhs))


def duality_identity_dirichlet(op, f, g, grid=None, factor=None):
    """Both sides of the derivative pairing ``<(H f)', g'>_{beta-1}``.

    ``rhs = factor * int t conj(f(t)) g'(t) dmu`` with ``factor`` defaulting
    to ``beta/(beta-1)``. Pass ``factor=1.0`` for the value produced by the
    weighted kernel, see the notes in the README.
    """
    beta = op.beta
    if beta <= 1:
        raise ValueError("the derivative pairing identity needs beta > 1")
    if factor is None:
        factor = beta / (beta - 1.0)
    spec = op if op.n_terms >= max(f.order, g.order) else op.with_terms(max(f.order, g.order))
    dhf = apply_matrix(spec, f).derivative()
    dg = g.derivative()
    lhs = _disk_pairing(dhf, dg, beta - 1.0, grid)
    integral = _measure_pairing(
        op.measure, lambda t: t * np.conj(f.evaluate_real(t)) * dg.evaluate_real(t)
    )
    rhs = factor * integral
    return DualityResult(lhs, rhs, _residual(lhs, rhs))


def reproducing_check(f, alpha, z_grid, grid=None):
    """Max of ``|f(z) - (alpha+1) int f(w) (1-|w|**2)**alpha / (1 - z conj w)**(2+alpha) dA(w)|``."""
    alpha = check_scalar(alpha, "alpha", lower=-1.0)
    grid = grid or QuadratureGrid()
    z_grid = np.atleast_1d(np.asarray(z_grid, dtype=complex))
    if np.any(np.abs(z_grid) >= 1):
        raise ValueError("z_grid must lie in the open unit disk")
    worst = 0.0
    for z in z_grid:

        def run(n, M, z=z):
            def integrand(radii, m):
                vals = circle_values(f.coeffs, radii, m)
                w = radii[:, None] * np.exp(2j * np.pi * np.arange(m) / m)[None, :]
                return vals * np.exp(-(2.0 + alpha) * np.log(1.0 - z * np.conj(w)))

            def abs_integrand(radii, m):
                return np.abs(integrand(radii, m))

            val = (alpha + 1.0) * disk_integral(integrand, alpha, n, M)
            scale = (alpha + 1.0) * disk_integral(abs_integrand, alpha, n, M)
            return complex(val), float(scale)

        val = _checked_quadrature(run, f.order + 64, grid, 2)
        worst = max(worst, abs(f.evaluate(z) - val))
    return float(worst)


def embedding_ratio(mu, f, q, p, alpha, grid=None, source_norm=None, power=False):
    """``(int |f|**q dmu)**(1/q) / ||f||_{A^p_alpha}``.

    ``f`` is a :class:`TaylorPoly` or a callable on ``[0, 1)``; callables
    need ``source_norm``. With ``power=True`` the q-th power of the ratio is
    returned, which scales like a Carleson constant.
    """
    q = check_scalar(q, "q", lower=0.0)
    p = check_scalar(p, "p", lower=0.0)
    if isinstance(f, TaylorPoly):
        fn = f.evaluate_real
        if source_norm is None:
            source_norm = space_norm(f, SpaceParams.bergman(p, alpha), grid, "auto")
    else:
        fn = f
        if source_norm is None:
            raise ValueError("source_norm is required when f is a callable")
    if source_norm == 0:
        raise ValueError("f must be nonzero")
    if mu.is_zero:
        return 0.0
    num = float(integrate(mu, lambda t: np.abs(fn(t)) ** q))
    if power:
        return num / source_norm**q
    return num ** (1.0 / q) / source_norm


# --- scans --------------------------------------------------------------------


def _slope(x, y):
    """Least-squares slope of ``log y`` against ``log x``; nan when undefined."""
    ok = (y > 0) & np.isfinite(y)
    if ok.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0])


def _last_decade_mask(gap):
    return gap <= 10.0 * gap.min()


def _growth_summary(a, values):
    gap = 1.0 - a
    sup = float(values.max()) if values.size else 0.0
    slope = _slope(gap, values)
    mask = _last_decade_mask(gap)
    tail_slope = _slope(gap[mask], values[mask]) if mask.sum() >= 2 else slope
    vmin = float(values.min()) if values.size else 0.0
    spread = sup / vmin if vmin > 0 else (1.0 if sup == 0 else float("inf"))
    return {
        "sup": sup,
        "slope": slope,
        "last_decade_slope": tail_slope,
        "max_over_min": spread,
    }


def _slope_verdict(summary):
    if summary["sup"] == 0.0:
        return ProbeVerdict.BOUNDED_CONSISTENT
    s = summary["last_decade_slope"]
    if not math.isfinite(s):
        return ProbeVerdict.INCONCLUSIVE
    if s <= DIVERGENCE_SLOPE:
        return ProbeVerdict.DIVERGENCE_DETECTED
    if s >= 0.0:
        return ProbeVerdict.BOUNDED_CONSISTENT
    return ProbeVerdict.INCONCLUSIVE


def _log_regression(a, values):
    """Fit ``values ~ c0 + c1 log(2/(1-a))``; returns (c1, R^2)."""
    x = log_factor(a)
    if values.size < 3 or np.ptp(values) == 0:
        return 0.0, float("nan")
    c1, c0 = np.polyfit(x, values, 1)
    resid = values - (c0 + c1 * x)
    ss_tot = float(np.sum((values - values.mean()) ** 2))
    return float(c1), float(1.0 - np.sum(resid**2) / ss_tot)


def lower_bound_scan(op, p, q, alpha, a_grid=None, tol=None):
    """Pairing values along the test families used in the necessity proofs.

    For ``q > 1`` the value at ``a`` is ``int f_a g_a dmu`` with
    ``f_a g_a = ((1-a**2)/(1-a t)**2)**c`` and ``c = (alpha+2)/p + beta/q'``;
    the tail-side bound is ``mu([a,1)) / (1-a**2)**c``. For ``q = 1`` the
    value is ``int f_a(t) log(2/(1-a t)) dmu`` and the bound is
    ``log(2/(1-a)) mu([a,1)) / (1-a)**((alpha+2)/p)``.

    Both families are evaluated in closed form on ``[0, 1)``, so no series
    truncation is involved. The growth slope is fitted in ``log(1-a)``; a
    slope at most -0.2 over the last decade of ``1-a`` reports divergence.
    """
    p = check_scalar(p, "p", lower=0.0)
    q = check_scalar(q, "q", lower=1.0, closed="left")
    alpha = check_scalar(alpha, "alpha", lower=-1.0)
    a = check_increasing_grid(default_a_grid() if a_grid is None else a_grid, "a_grid")
    if a[0] <= 0:
        raise ValueError("a_grid must lie in (0, 1)")
    mu, beta = op.measure, op.beta
    cf = (alpha + 2.0) / p
    kw = {} if tol is None else {"tol": tol}
    if q > 1:
        c = cf + beta * (q - 1.0) / q

        def phi(t):
            return kernel_power(np.asarray(t)[None, :], a[:, None], c)

        values = np.asarray(integrate(mu, phi, **kw), dtype=float).reshape(a.shape)
        bound = tail(mu, a) / (1.0 - a * a) ** c
    else:
        c = cf

        def phi(t):
            t = np.asarray(t)[None, :]
            return kernel_power(t, a[:, None], c) * log_kernel(t, a[:, None])

        values = np.asarray(integrate(mu, phi, **kw), dtype=float).reshape(a.shape)
        bound = log_factor(a) * tail(mu, a) / (1.0 - a) ** c
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(bound > 0, values / np.where(bound > 0, bound, 1.0), np.nan)
    summary = _growth_summary(a, values)
    summary["exponent"] = c
    verdict = _slope_verdict(summary)
    if q == 1:
        c1, r2 = _log_regression(a, values)
        summary["log_coefficient"] = c1
        summary["log_r2"] = r2
        if verdict is not ProbeVerdict.DIVERGENCE_DETECTED and c1 > 0 and r2 >= 0.95 and summary["max_over_min"] >= 2:
            verdict = ProbeVerdict.DIVERGENCE_DETECTED
    return ProbeResult(
        kind="lower_bound_scan",
        columns=("a", "value", "bound", "ratio"),
        rows=np.column_stack([a, values, bound, ratio]),
        summary=summary,
        verdict=verdict,
        settings={"p": p, "q": q, "alpha": alpha, "beta": beta, "a_grid": a},
    )


def random_poly(alpha, p, seed, index, degree=RANDOM_DEGREE):
    """Random polynomial ``sum sigma_k u_k z**k``.

    ``sigma_k = (k+1)**(-(alpha+2)/p)`` and ``u_k`` is uniform on the unit
    disk (radius ``sqrt(U)``, angle ``2 pi V``). Member ``index`` draws from
    its own child of ``SeedSequence(seed)``, so results do not depend on
    evaluation order.
    """
    child = np.random.SeedSequence(seed).spawn(index + 1)[index]
    rng = np.random.default_rng(child)
    k = np.arange(degree + 1, dtype=float)
    radius = np.sqrt(rng.random(degree + 1))
    angle = 2.0 * np.pi * rng.random(degree + 1)
    sigma = (k + 1.0) ** (-(alpha + 2.0) / p)
    return TaylorPoly(sigma * radius * np.exp(1j * angle))


def _family_member(family, param, source, seed):
    if family is Family.BERGMAN_F:
        return test_f_bergman(param, source.p, source.alpha)
    if family is Family.DIRICHLET_F:
        return test_f_dirichlet(param, source.p, source.alpha)
    if family is Family.LOG_G:
        return test_g_log(param)
    return random_poly(source.alpha, source.p, seed, int(param))


def _ratio_row(args):
    op, source, target, family, param, seed, grid = args
    f = _family_member(family, param, source, seed)
    spec = op if op.n_terms >= f.order else op.with_terms(f.order)
    hf = apply_matrix(spec, f)
    src = space_norm(f, source, grid, "auto")
    tgt = space_norm(hf, target, grid, "auto")
    return param, tgt / src if src > 0 else float("nan"), src, tgt


def ratio_sup(op, source, target, family=Family.BERGMAN_F, a_grid=None, count=16, grid=None, seed=0, n_jobs=None):
    """Grid supremum of ``||H f||_target / ||f||_source`` over a test family.

    Families parametrized by ``a`` use ``a_grid``; ``RandomPoly`` draws
    ``count`` members from ``seed``. The operator truncation is raised to the
    order of each member so that no input coefficient is dropped. The value
    is a lower bound for the operator norm of the truncated operator.
    """
    family = Family(family)
    if target.kind is SpaceKind.BLOCH:
        raise ValueError("ratio_sup needs a Bergman or Dirichlet target")
    if family is Family.RANDOM_POLY:
        params = np.arange(int(count), dtype=float)
    else:
        params = check_increasing_grid(default_a_grid(7) if a_grid is None else a_grid, "a_grid")
    jobs = [(op, source, target, family, float(x), seed, grid) for x in params]
    rows = np.array(_map(_ratio_row, jobs, n_jobs), dtype=float).reshape(-1, 4)
    ratios = rows[:, 1]
    summary = {"sup": float(np.nanmax(ratios)) if ratios.size else 0.0}
    if family is Family.RANDOM_POLY:
        verdict = ProbeVerdict.INCONCLUSIVE if summary["sup"] > 0 else ProbeVerdict.BOUNDED_CONSISTENT
        summary["slope"] = float("nan")
    else:
        summary.update(_growth_summary(params, ratios))
        verdict = _slope_verdict(summary)
    return ProbeResult(
        kind="ratio_sup",
        columns=("param", "value", "source_norm", "target_norm"),
        rows=rows,
        summary=summary,
        verdict=verdict,
        settings={
            "family": family,
            "source": [source.kind, source.p, source.alpha],
            "target": [target.kind, target.p, target.alpha],
            "beta": op.beta,
            "n_terms": op.n_terms,
            "params": params,
            "seed": seed,
        },
    )


def _compact_row(args):
    mu, s, r, kappas, n_points = args
    mu_r = truncate_tail(mu, r)
    carleson = tail_sup(mu_r, s, r, n_points=n_points)
    if mu_r.is_zero:
        return r, carleson, 0.0
    best = 0.0
    for kappa in kappas:
        a = 1.0 - kappa * (1.0 - r)
        # |f_a|**q with q = s p / (alpha+2) is the kernel power with exponent s
        val = float(integrate(mu_r, lambda t, a=a: kernel_power(t, a, s)))
        best = max(best, val)
    return r, carleson, best


def compactness_probe(op, s, r_grid, source=None, kappas=(1.0, 0.5, 0.25, 0.125), n_points=33, n_jobs=None):
    """Carleson constants and embedding norms of the tail measures ``mu_r``.

    Columns: ``r``, the grid Carleson constant of ``truncate_tail(mu, r)`` at
    exponent ``s``, and the q-th power of the embedding ratio into
    ``L^q(mu_r)`` with ``q = s p / (alpha+2)``, maximized over ``f_a`` with
    ``a = 1 - kappa (1-r)``. Both columns scale like ``(1-r)**(s_mu - s)``
    for a power measure. Since ``||f_a||_{A^p_alpha} = 1`` for every ``a``
    the embedding column needs no norm evaluation.

    The verdict is VanishingConsistent when both columns end below 10% of
    their first value and NonVanishing when the Carleson column stays within
    ``[0.9, 1.1]`` of its first value.
    """
    s = check_scalar(s, "s", lower=0.0)
    r = check_increasing_grid(r_grid, "r_grid")
    source = source or SpaceParams.bergman(2.0, 0.0)
    q = s * source.p / (source.alpha + 2.0)
    jobs = [(op.measure, s, float(x), tuple(kappas), n_points) for x in r]
    rows = np.array(_map(_compact_row, jobs, n_jobs), dtype=float).reshape(-1, 3)
    carl, emb = rows[:, 1], rows[:, 2]
    summary = {
        "sup": float(carl.max()),
        "embedding_sup": float(emb.max()),
        "carleson_final_fraction": float(carl[-1] / carl[0]) if carl[0] > 0 else 0.0,
        "embedding_final_fraction": float(emb[-1] / emb[0]) if emb[0] > 0 else 0.0,
        "slope": _slope(1.0 - r, carl),
        "embedding_q": q,
    }
    if carl[0] == 0 and emb[0] == 0:
        verdict = ProbeVerdict.VANISHING_CONSISTENT
    elif summary["carleson_final_fraction"] < 0.1 and summary["embedding_final_fraction"] < 0.1:
        verdict = ProbeVerdict.VANISHING_CONSISTENT
    elif carl[0] > 0 and np.all(np.abs(carl / carl[0] - 1.0) <= 0.1):
        verdict = ProbeVerdict.NON_VANISHING
    else:
        verdict = ProbeVerdict.INCONCLUSIVE
    return ProbeResult(
        kind="compactness_probe",
        columns=("r", "value", "embedding"),
        rows=rows,
        summary=summary,
        verdict=verdict,
        settings={"s": s, "r_grid": r, "kappas": list(kappas), "source": [source.kind, source.p, source.alpha]},
    )


@dataclass(frozen=True)
class ProbeConfig:
    """One ratio-supremum experiment: spaces, operator, family and grids."""

    source: SpaceParams
    target: SpaceParams
    operator: OperatorSpec
    a_grid: tuple = tuple(default_a_grid(7))
    family: Family = Family.BERGMAN_F
    seed: int = 0
    count: int = 16
    grid: QuadratureGrid = field(default_factory=QuadratureGrid)

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        a = check_increasing_grid(self.a_grid, "a_grid")
        if a[0] <= 0:
            raise ValueError("a_grid must lie in (0, 1)")
        object.__setattr__(self, "a_grid", tuple(float(x) for x in a))
        if self.target.kind is SpaceKind.BLOCH:
            raise ValueError("target must be a Bergman or Dirichlet space")
        if self.target.kind is SpaceKind.BERGMAN and self.target.p < self.source.p:
            raise ValueError("the boundedness probes need p <= q")

    def run(self, n_jobs=None):
        return ratio_sup(
            self.operator,
            self.source,
            self.target,
            self.family,
            a_grid=self.a_grid,
            count=self.count,
            grid=self.grid,
            seed=self.seed,
            n_jobs=n_jobs,
        )
