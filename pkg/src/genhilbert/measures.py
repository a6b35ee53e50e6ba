"""Positive Borel measures on [0, 1): atoms plus log-power densities.

A measure is a finite sum of point masses ``w * delta_{t0}`` and density
terms ``c * (1-t)**gamma * log(2/(1-t))**delta`` restricted to
``(lower, 1)``. The family is closed under restriction to tails and under
mixtures, and it covers the power and logarithmic Carleson examples.

Integrals against density terms use the substitution ``t = 1 - exp(-x)``,
which turns the endpoint behaviour at ``t = 1`` into exponential decay in
``x``; composite Gauss-Legendre panels are then refined until two levels
agree.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field, replace

import mpmath
import numpy as np
from scipy import special

from ._validation import check_nonneg_int, check_scalar
from .exceptions import NonConvergent

__all__ = [
    "DensityTerm",
    "MeasureSpec",
    "moment",
    "moments",
    "tail",
    "integrate",
    "truncate_tail",
    "log_factor",
]

LOG2 = math.log(2.0)
DEFAULT_TOL = 1e-10

_GL_X, _GL_W = np.polynomial.legendre.leggauss(20)
# exp(-41) ~ 1.6e-18: panels stop once the density envelope falls below this
_T_MAX = float(np.nextafter(1.0, 0.0))
_ENVELOPE_LOG_CUTOFF = 41.0
_MOMENT_CHUNK = 1024


def log_factor(t):
    """``log(2 / (1 - t))`` evaluated stably for t close to 1."""
    t = np.asarray(t, dtype=float)
    return LOG2 - np.log1p(-t)


@dataclass(frozen=True)
class DensityTerm:
    """Density ``scale * (1-t)**power * log(2/(1-t))**log_power`` on ``(lower, 1)``.

    ``power > -1`` makes the term integrable for every ``log_power``.
    """

    scale: float
    power: float
    log_power: float = 0.0
    lower: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "scale", check_scalar(self.scale, "scale", lower=0.0))
        object.__setattr__(self, "power", check_scalar(self.power, "power", lower=-1.0))
        object.__setattr__(self, "log_power", check_scalar(self.log_power, "log_power"))
        object.__setattr__(
            self, "lower", check_scalar(self.lower, "lower", lower=0.0, upper=1.0, closed="left")
        )

    @property
    def decay(self):
        """Exponential decay rate of the density in ``x = -log(1-t)``, including dt."""
        return self.power + 1.0

    @property
    def x_lower(self):
        return -math.log1p(-self.lower)

    def density(self, t):
        t = np.asarray(t, dtype=float)
        out = self.scale * (1.0 - t) ** self.power
        if self.log_power != 0.0:
            out = out * log_factor(t) ** self.log_power
        return np.where(t > self.lower, out, 0.0)

    def mass_above(self, t):
        """Exact ``int_{max(t, lower)}^1`` of the density, for scalar t in [0, 1)."""
        u = 1.0 - max(float(t), self.lower)
        k = self.decay
        if u <= 0.0:
            return 0.0
        if self.log_power == 0.0:
            return self.scale * u**k / k
        # u = 2 exp(-v) maps the integral to an upper incomplete gamma function
        v0 = LOG2 - math.log(u)
        with mpmath.workdps(30):
            val = (
                mpmath.power(2, k)
                * mpmath.power(k, -(self.log_power + 1.0))
                * mpmath.gammainc(self.log_power + 1.0, a=k * v0)
            )
        return self.scale * float(val)

    def _x_end(self):
        x0 = self.x_lower
        k = self.decay
        d = self.log_power
        length = _ENVELOPE_LOG_CUTOFF / k
        if d > 0:
            for _ in range(8):
                length = (_ENVELOPE_LOG_CUTOFF + d * math.log((LOG2 + x0 + length) / (LOG2 + x0))) / k
        return x0 + length

    def panel_rule(self, width, x_end=None):
        """Nodes ``t``, weights and ``1 - t`` of the composite rule with panel ``width`` in x.

        The weights already contain the density and the Jacobian ``dt = exp(-x) dx``.
        The range ends at ``x_end`` (default: where the density envelope drops
        below ``exp(-41)``).
        """
        x0 = self.x_lower
        x1 = self._x_end() if x_end is None else x_end
        n_panels = max(1, int(math.ceil((x1 - x0) / width)))
        left = x0 + width * np.arange(n_panels)
        x = (left[:, None] + 0.5 * width * (_GL_X + 1.0)[None, :]).ravel()
        w = np.tile(0.5 * width * _GL_W, n_panels)
        one_minus_t = np.exp(-x)
        w = w * self.scale * np.exp(-self.decay * x)
        if self.log_power != 0.0:
            w = w * (LOG2 + x) ** self.log_power
        # past x ~ 36.7 the node would round to 1.0; keep it strictly inside [0, 1)
        return np.minimum(-np.expm1(-x), _T_MAX), w, one_minus_t

    def initial_width(self):
        return min(1.0, 2.0 / self.decay)


@dataclass(frozen=True)
class MeasureSpec:
    """Finite positive measure on [0, 1) given by atoms and density terms.

    Parameters
    ----------
    atoms : sequence of (location, weight)
        Point masses; locations in [0, 1), weights > 0.
    densities : sequence of DensityTerm
    """

    atoms: tuple = ()
    densities: tuple = ()
    _hash: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self):
        atoms = []
        for item in self.atoms:
            loc, weight = item
            loc = check_scalar(loc, "atom location", lower=0.0, upper=1.0, closed="left")
            weight = check_scalar(weight, "atom weight", lower=0.0)
            atoms.append((loc, weight))
        dens = tuple(self.densities)
        for d in dens:
            if not isinstance(d, DensityTerm):
                raise TypeError("densities must be DensityTerm instances")
        object.__setattr__(self, "atoms", tuple(atoms))
        object.__setattr__(self, "densities", dens)
        object.__setattr__(self, "_hash", hash((self.atoms, self.densities)))

    def __hash__(self):
        return self._hash

    # -- constructors -------------------------------------------------------
    @classmethod
    def zero(cls):
        return cls()

    @classmethod
    def atom(cls, location, weight=1.0):
        return cls(atoms=((location, weight),))

    @classmethod
    def lebesgue(cls):
        return cls(densities=(DensityTerm(1.0, 0.0),))

    @classmethod
    def density(cls, scale, power, log_power=0.0):
        return cls(densities=(DensityTerm(scale, power, log_power),))

    @classmethod
    def power_family(cls, s):
        """Density ``s (1-t)**(s-1)``, whose tail is exactly ``(1-t)**s``."""
        s = check_scalar(s, "s", lower=0.0)
        return cls.density(s, s - 1.0)

    @classmethod
    def log_carleson(cls, s, order):
        """Measure with tail exactly ``(1-t)**s / log(2/(1-t))**order``.

        For ``order = 1`` this is a 1-logarithmic s-Carleson measure that is
        not vanishing.
        """
        s = check_scalar(s, "s", lower=0.0)
        order = check_scalar(order, "order", lower=0.0, closed="left")
        terms = [DensityTerm(s, s - 1.0, -order)]
        if order > 0:
            terms.append(DensityTerm(order, s - 1.0, -order - 1.0))
        return cls(densities=tuple(terms))

    @classmethod
    def from_config(cls, items):
        """Build a measure from a list of ``{"type": ..., ...}`` dictionaries."""
        total = cls.zero()
        for item in items:
            kind = item["type"]
            if kind == "atom":
                part = cls.atom(item["location"], item.get("weight", 1.0))
            elif kind == "density":
                part = cls(
                    densities=(
                        DensityTerm(
                            item.get("scale", 1.0),
                            item.get("power", 0.0),
                            item.get("log_power", 0.0),
                            item.get("lower", 0.0),
                        ),
                    )
                )
            elif kind == "power":
                part = cls.power_family(item["s"])
            elif kind == "log_carleson":
                part = cls.log_carleson(item["s"], item.get("order", 1.0))
            else:
                raise ValueError(f"unknown measure component type {kind!r}")
            total = total + part
        return total

    def to_config(self):
        out = [{"type": "atom", "location": t, "weight": w} for t, w in self.atoms]
        for d in self.densities:
            out.append(
                {
                    "type": "density",
                    "scale": d.scale,
                    "power": d.power,
                    "log_power": d.log_power,
                    "lower": d.lower,
                }
            )
        return out

    # -- algebra ------------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, MeasureSpec):
            return NotImplemented
        return MeasureSpec(self.atoms + other.atoms, self.densities + other.densities)

    def scaled(self, factor):
        factor = check_scalar(factor, "factor", lower=0.0)
        return MeasureSpec(
            tuple((t, w * factor) for t, w in self.atoms),
            tuple(
                DensityTerm(d.scale * factor, d.power, d.log_power, d.lower)
                for d in self.densities
            ),
        )

    @property
    def is_zero(self):
        return not self.atoms and not self.densities

    @property
    def total_mass(self):
        return tail(self, 0.0)


def _beta_moments(term, n):
    """Closed-form moments of a pure power density term for orders ``n``."""
    k = term.decay
    # B(n+1, k) = B(n, k) n / (n + k); the product keeps relative error near sqrt(n) eps
    steps = np.ones_like(n)
    steps[1:] = n[1:] / (n[1:] + k)
    base = (term.scale / k) * np.cumprod(steps)
    if term.lower > 0.0:
        base = base * special.betainc(k, n + 1.0, 1.0 - term.lower)
    return base


def _quadrature_moments(term, n_max, tol=1e-13, max_depth=6):
    # integrate the unit-scale density so tiny scales cannot underflow the check
    scale = term.scale
    term = replace(term, scale=1.0)
    width = term.initial_width()
    prev = None
    for _ in range(max_depth + 1):
        t, w, _ = term.panel_rule(width)
        logt = np.log(t)
        out = np.empty(n_max + 1)
        for start in range(0, n_max + 1, _MOMENT_CHUNK):
            ns = np.arange(start, min(n_max + 1, start + _MOMENT_CHUNK), dtype=float)
            out[start : start + ns.size] = np.exp(ns[:, None] * logt[None, :]) @ w
        if prev is not None and np.max(np.abs(out - prev)) <= tol * out[0]:
            return scale * out
        prev = out
        width /= 2.0
    raise NonConvergent("moment quadrature failed to converge")


@functools.lru_cache(maxsize=256)
def _moments_cached(mu, n_max):
    n = np.arange(n_max + 1, dtype=float)
    out = np.zeros(n_max + 1)
    for loc, weight in mu.atoms:
        if loc == 0.0:
            out[0] += weight
        else:
            out += weight * np.exp(n * math.log(loc))
    for term in mu.densities:
        if term.log_power == 0.0:
            out += _beta_moments(term, n)
        else:
            out += _quadrature_moments(term, n_max)
    out.setflags(write=False)
    return out


def moments(mu, n_max):
    """Moments ``int t**n dmu`` for ``n = 0..n_max`` as a read-only array.

    Results are cached per ``(mu, n_max)``.
    """
    n_max = check_nonneg_int(n_max, "n_max")
    return _moments_cached(mu, n_max)


def moment(mu, n):
    """The n-th moment ``int_[0,1) t**n dmu(t)``."""
    n = check_nonneg_int(n, "n")
    return float(moments(mu, n)[n])


def tail(mu, t):
    """Tail mass ``mu([t, 1))``; ``t`` may be a scalar or an array."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0.0) or np.any(t_arr >= 1.0):
        raise ValueError("t must lie in [0, 1)")
    flat = t_arr.ravel()
    out = np.zeros(flat.shape)
    for loc, weight in mu.atoms:
        out += np.where(flat <= loc, weight, 0.0)
    for term in mu.densities:
        out += np.array([term.mass_above(x) for x in flat])
    if t_arr.ndim == 0:
        return float(out[0])
    return out.reshape(t_arr.shape)


def truncate_tail(mu, r):
    """Restriction of ``mu`` to ``[r, 1)``, so that its mass is ``tail(mu, r)``."""
    r = check_scalar(r, "r", lower=0.0, upper=1.0, closed="left")
    atoms = tuple((t, w) for t, w in mu.atoms if t >= r)
    dens = tuple(
        DensityTerm(d.scale, d.power, d.log_power, max(d.lower, r)) for d in mu.densities
    )
    return MeasureSpec(atoms, dens)


_MAX_RANGE_DOUBLINGS = 3


def _integrate_term(term, phi, tol, max_depth):
    x_end = term._x_end()
    for _ in range(_MAX_RANGE_DOUBLINGS):
        try:
            return _integrate_range(term, phi, tol, max_depth, x_end)
        except _TailNotNegligible:
            x_end = term.x_lower + 2.0 * (x_end - term.x_lower)
    return _integrate_range(term, phi, tol, max_depth, x_end, final=True)


class _TailNotNegligible(Exception):
    pass


def _integrate_range(term, phi, tol, max_depth, x_end, final=False):
    width = term.initial_width()
    prev = None
    for _ in range(max_depth + 1):
        t, w, _ = term.panel_rule(width, x_end)
        vals = np.asarray(phi(t))
        vals = np.broadcast_to(vals, np.broadcast_shapes(vals.shape, t.shape))
        if not np.all(np.isfinite(vals)):
            raise NonConvergent("integrand is not finite on the quadrature nodes")
        weighted = vals * w
        cur = weighted.sum(axis=-1)
        scale = np.abs(weighted).sum(axis=-1)
        # the last panel must be negligible, otherwise the integrand outgrows the density
        last = np.abs(weighted[..., -_GL_X.size :]).sum(axis=-1)
        if np.any(last > tol * np.maximum(scale, 1e-300)):
            if not final:
                raise _TailNotNegligible
            raise NonConvergent(
                f"integrand does not decay against the density near t = 1 (relative tolerance {tol:g})"
            )
        if prev is not None:
            err = np.abs(cur - prev)
            if np.all(err <= tol * np.maximum(scale, 1e-300)):
                return cur
        prev = cur
        width /= 2.0
    raise NonConvergent(f"adaptive refinement exceeded depth {max_depth}")


def integrate(mu, phi, tol=DEFAULT_TOL, max_depth=8):
    """Integrate ``phi`` against ``mu``.

    Parameters
    ----------
    mu : MeasureSpec
    phi : callable
        Vectorized function of ``t`` (1-D array). It may return an array of
        shape ``(..., len(t))`` to integrate several functions at once.
    tol : float
        Absolute tolerance relative to the scale ``int |phi| dmu``.
    max_depth : int
        Maximum number of panel halvings per density term.

    Raises
    ------
    NonConvergent
        If refinement does not settle or the integrand grows too fast near 1.

    Notes
    -----
    ``phi`` only sees ``t``, and doubles cannot resolve ``1 - t`` below about
    1e-16. Integrands that are unbounded at 1 are therefore accurate to the
    mass they carry beyond that point, e.g. about 1e-8 for ``(1-t)**-0.5``
    against Lebesgue measure.
    """
    probe = np.asarray(phi(np.zeros(0)))
    total = np.zeros(probe.shape[:-1], dtype=probe.dtype) if probe.ndim else 0.0
    if mu.atoms:
        locs = np.array([t for t, _ in mu.atoms])
        weights = np.array([w for _, w in mu.atoms])
        vals = np.asarray(phi(locs))
        total = total + (vals * weights).sum(axis=-1)
    for term in mu.densities:
        total = total + _integrate_term(term, phi, tol, max_depth)
    if np.ndim(total) == 0:
        return total.item() if isinstance(total, np.generic) else total
    return total
