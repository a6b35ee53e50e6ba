"""Truncated Taylor series on the unit disk and weighted space norms.

Norms use the normalized area measure ``dA = r dr dtheta / pi``. In the
variable ``rho = r**2`` this is ``drho dtheta / (2 pi)``, so a weighted disk
integral becomes a Gauss-Jacobi rule in ``rho`` (weight ``(1-rho)**alpha``)
times the mean over a uniform angular grid. Circle values come from one FFT
per radius.
"""
from __future__ import annotations

import enum
import functools
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from ._validation import check_scalar
from .exceptions import GridTooCoarse, TruncationInsufficient

__all__ = [
    "TaylorPoly",
    "SpaceKind",
    "SpaceParams",
    "QuadratureGrid",
    "radial_rule",
    "circle_values",
    "disk_integral",
    "bergman_norm",
    "dirichlet_norm",
    "bloch_norm",
    "space_norm",
    "binomial_coefficients",
    "kernel_power",
    "log_kernel",
    "test_f_bergman",
    "test_g_bergman",
    "test_g_log",
    "test_f_dirichlet",
    "coeff_decay_report",
    "DecayReport",
    "TRUNCATION_RTOL",
]

TRUNCATION_RTOL = 1e-8


class TaylorPoly:
    """Truncated Taylor series ``sum_k a_k z**k``.

    An empty coefficient vector represents the zero function.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        arr = np.array(coeffs, dtype=np.complex128).ravel()
        arr.setflags(write=False)
        self.coeffs = arr

    @classmethod
    def zero(cls):
        return cls([])

    @classmethod
    def monomial(cls, k, c=1.0):
        out = np.zeros(k + 1, dtype=complex)
        out[k] = c
        return cls(out)

    @property
    def order(self):
        """Truncation order N (index of the last stored coefficient); -1 for the empty series."""
        return self.coeffs.size - 1

    def __len__(self):
        return self.coeffs.size

    def __repr__(self):
        return f"TaylorPoly(order={self.order})"

    def __call__(self, z):
        return self.evaluate(z)

    def evaluate(self, z):
        """Horner evaluation at points of the open unit disk."""
        z = np.asarray(z)
        if self.coeffs.size == 0:
            return np.zeros(z.shape, dtype=complex) if z.ndim else 0j
        return np.polynomial.polynomial.polyval(z, self.coeffs)

    def evaluate_real(self, t):
        """Evaluation on real ``t`` (no disk restriction); used on [0, 1]."""
        return self.evaluate(np.asarray(t, dtype=float))

    def derivative(self):
        if self.coeffs.size <= 1:
            return TaylorPoly.zero()
        k = np.arange(1, self.coeffs.size)
        return TaylorPoly(self.coeffs[1:] * k)

    def antiderivative(self, constant=0.0):
        k = np.arange(1, self.coeffs.size + 1)
        return TaylorPoly(np.concatenate([[constant], self.coeffs / k]))

    def truncated(self, order):
        return TaylorPoly(self.coeffs[: order + 1])

    def padded(self, length):
        out = np.zeros(max(length, self.coeffs.size), dtype=complex)
        out[: self.coeffs.size] = self.coeffs
        return out

    def __add__(self, other):
        n = max(len(self), len(other))
        return TaylorPoly(self.padded(n) + other.padded(n))

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, scalar):
        if isinstance(scalar, TaylorPoly):
            return NotImplemented
        return TaylorPoly(self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return -1.0 * self

    def to_json(self):
        return json.dumps(self.to_list())

    def to_list(self):
        return [[float(c.real), float(c.imag)] for c in self.coeffs]

    @classmethod
    def from_json(cls, text):
        return cls.from_list(json.loads(text))

    @classmethod
    def from_list(cls, pairs):
        pairs = list(pairs)
        if not pairs:
            return cls.zero()
        arr = np.asarray(pairs, dtype=float)
        if arr.ndim == 1:
            return cls(arr)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError("TaylorPoly JSON must be a list of [re, im] pairs")
        return cls(arr[:, 0] + 1j * arr[:, 1])


class SpaceKind(str, enum.Enum):
    BERGMAN = "Bergman"
    DIRICHLET = "Dirichlet"
    BLOCH = "Bloch"


@dataclass(frozen=True)
class SpaceParams:
    """Identifies ``A^p_alpha``, ``D^p_alpha`` or the Bloch space."""

    kind: SpaceKind
    p: float = 2.0
    alpha: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", SpaceKind(self.kind))
        if self.kind is not SpaceKind.BLOCH:
            object.__setattr__(self, "p", check_scalar(self.p, "p", lower=0.0))
            object.__setattr__(self, "alpha", check_scalar(self.alpha, "alpha", lower=-1.0))

    @classmethod
    def bergman(cls, p, alpha):
        return cls(SpaceKind.BERGMAN, p, alpha)

    @classmethod
    def dirichlet(cls, p, alpha):
        return cls(SpaceKind.DIRICHLET, p, alpha)

    @classmethod
    def bloch(cls):
        return cls(SpaceKind.BLOCH)


def _next_pow2(n):
    return 1 << max(0, int(n - 1).bit_length())


@dataclass(frozen=True)
class QuadratureGrid:
    """Disk quadrature resolution.

    ``n_radial`` Gauss-Jacobi nodes in ``rho = |z|**2`` and ``n_angular``
    uniform angles (a power of two). Norm routines raise the angular count
    to resolve the polynomial degree and refine both counts up to
    ``max_radial`` when their self-check fails.

    ``rtol=None`` picks the self-check tolerance from the exponent. At zeros
    of ``f`` the integrand ``|f|**p`` has limited smoothness unless p is an
    even integer, and the rules converge only algebraically. The default is
    1e-10 for even integer p and ``min(1e-6, 10**-(4+2p))``, floored at
    1e-10, otherwise.
    """

    n_radial: int = 96
    n_angular: int = 256
    max_radial: int = 768
    rtol: float = None

    def __post_init__(self):
        if self.n_radial < 2:
            raise ValueError("n_radial must be at least 2")
        if self.n_angular < 4 or self.n_angular & (self.n_angular - 1):
            raise ValueError("n_angular must be a power of two >= 4")

    def rtol_for(self, p=2.0):
        if self.rtol is not None:
            return self.rtol
        if p == int(p) and int(p) % 2 == 0:
            return 1e-10
        return max(1e-10, min(1e-6, 10.0 ** -(4.0 + 2.0 * p)))

    def angular_for(self, degree, factor=2):
        return max(self.n_angular, _next_pow2(factor * (degree + 1)))


@functools.lru_cache(maxsize=128)
def _radial_rule_cached(weight_exp, n):
    x, w = special.roots_jacobi(n, weight_exp, 0.0)
    rho = 0.5 * (1.0 + x)
    w = w * 2.0 ** (-(weight_exp + 1.0))
    rho.setflags(write=False)
    w.setflags(write=False)
    return rho, w


def radial_rule(weight_exp, n):
    """Nodes/weights for ``int_0^1 g(rho) (1-rho)**weight_exp drho``."""
    return _radial_rule_cached(float(weight_exp), int(n))


def circle_values(coeffs, radii, n_angular):
    """Values ``f(r e^{2 pi i m / M})`` as an array of shape ``(len(radii), M)``."""
    coeffs = np.asarray(coeffs, dtype=complex)
    radii = np.asarray(radii, dtype=float)
    M = int(n_angular)
    out = np.empty((radii.size, M), dtype=complex)
    if coeffs.size == 0:
        out[:] = 0.0
        return out
    # frequencies >= M alias onto k mod M; folding keeps grid values exact
    folded_idx = np.arange(coeffs.size) % M if coeffs.size > M else None
    k = np.arange(coeffs.size)
    with np.errstate(under="ignore"):
        logr = np.log(np.where(radii > 0, radii, 1.0))
        chunk = max(1, (1 << 22) // max(M, coeffs.size))
        for start in range(0, radii.size, chunk):
            r_log = logr[start : start + chunk]
            scale = np.exp(np.outer(r_log, k))
            zero_r = radii[start : start + chunk] == 0
            if np.any(zero_r):
                scale[zero_r] = 0.0
                scale[zero_r, 0] = 1.0
            scaled = scale * coeffs[None, :]
            buf = np.zeros((scaled.shape[0], M), dtype=complex)
            if folded_idx is None:
                buf[:, : coeffs.size] = scaled
            else:
                np.add.at(buf, (slice(None), folded_idx), scaled)
            out[start : start + chunk] = np.fft.ifft(buf, axis=1) * M
    return out


def disk_integral(integrand, weight_exp, n_radial, n_angular):
    """``int_D F(z) (1-|z|**2)**weight_exp dA(z)`` for ``F`` given on circles.

    ``integrand(radii, M)`` must return the values of ``F`` on the polar
    grid as an array of shape ``(len(radii), M)``.
    """
    rho, w = radial_rule(weight_exp, n_radial)
    vals = integrand(np.sqrt(rho), n_angular)
    return w @ vals.mean(axis=1)


def _bergman_pth_power_quadrature(coeffs, p, alpha, n_radial, M):
    def integrand(radii, m):
        return np.abs(circle_values(coeffs, radii, m)) ** p

    return (alpha + 1.0) * disk_integral(integrand, alpha, n_radial, M)


def _bergman_pth_power_series(coeffs, alpha):
    k = np.arange(coeffs.size, dtype=float)
    # (alpha+1) int |z|^{2k} (1-|z|^2)^alpha dA = Gamma(k+1)Gamma(alpha+2)/Gamma(k+alpha+2)
    logw = special.gammaln(k + 1) + special.gammaln(alpha + 2) - special.gammaln(k + alpha + 2)
    return float(np.sum(np.abs(coeffs) ** 2 * np.exp(logw)))


def _checked_quadrature(fn, degree, grid, angular_factor, p=2.0):
    """Run ``fn(n_radial, M) -> (value, scale)`` with a halving self-check.

    The error estimate compares against half the radial nodes and, when the
    degree allows it, half the angles. Both counts double on failure.
    """
    n = grid.n_radial
    M = grid.angular_for(degree, angular_factor)
    rtol = grid.rtol_for(p)
    while True:
        full, scale = fn(n, M)
        est = abs(full - fn(max(2, n // 2), M)[0])
        if M // 2 > degree:
            est = max(est, abs(full - fn(n, M // 2)[0]))
        if est <= rtol * max(abs(scale), 1e-300) or scale == 0.0:
            return full
        if 2 * n > grid.max_radial:
            raise GridTooCoarse(
                f"disk quadrature self-check failed: estimated error {est:.3g} "
                f"at n_radial={n}, n_angular={M}"
            )
        n *= 2
        M *= 2


def bergman_norm(f, p, alpha, grid=None, method="quadrature"):
    """``((alpha+1) int_D |f|**p (1-|z|**2)**alpha dA)**(1/p)``.

    Parameters
    ----------
    method : {"quadrature", "series", "auto"}
        ``"series"`` uses the exact coefficient formula and needs ``p == 2``;
        ``"auto"`` picks it whenever ``p == 2``.

    Raises
    ------
    GridTooCoarse
        If the quadrature cannot meet ``grid.rtol_for(p)`` within ``grid.max_radial``.
    """
    p = check_scalar(p, "p", lower=0.0)
    alpha = check_scalar(alpha, "alpha", lower=-1.0)
    grid = grid or QuadratureGrid()
    coeffs = f.coeffs
    if coeffs.size == 0 or not np.any(coeffs):
        return 0.0
    if method == "auto":
        method = "series" if p == 2 else "quadrature"
    if method == "series":
        if p != 2:
            raise ValueError("the series formula is only exact for p = 2")
        return math.sqrt(_bergman_pth_power_series(coeffs, alpha))
    if method != "quadrature":
        raise ValueError(f"unknown method {method!r}")
    factor = 2 if p == 2 else 4

    def run(n, M):
        v = _bergman_pth_power_quadrature(coeffs, p, alpha, n, M)
        return v, v

    val = _checked_quadrature(run, f.order, grid, factor, p)
    return float(val) ** (1.0 / p)


def dirichlet_norm(f, p, alpha, grid=None, method="quadrature"):
    """``|f(0)| + ||f'||_{A^p_alpha}``."""
    head = abs(f.coeffs[0]) if f.coeffs.size else 0.0
    return float(head + bergman_norm(f.derivative(), p, alpha, grid, method))


def bloch_norm(f, grid=None, n_radii=200, min_gap=1e-6):
    """Lower bound for ``|f(0)| + sup_z (1-|z|**2) |f'(z)|``.

    The supremum is taken over a grid geometric in ``1 - r`` and uniform in
    angle; the best radius is then refined by a bounded scalar search.
    """
    grid = grid or QuadratureGrid()
    head = abs(f.coeffs[0]) if f.coeffs.size else 0.0
    df = f.derivative()
    if df.coeffs.size == 0:
        return float(head)
    radii = np.concatenate([[0.0], 1.0 - np.geomspace(1.0, min_gap, n_radii)[1:]])
    M = grid.angular_for(df.order, 4)

    def weighted(r):
        r = np.atleast_1d(r)
        return (1.0 - r**2)[:, None] * np.abs(circle_values(df.coeffs, r, M))

    vals = weighted(radii)
    i, j = np.unravel_index(np.argmax(vals), vals.shape)
    best = float(vals[i, j])
    # polish the best radius between its neighbours, on all angles
    lo, hi = radii[max(i - 1, 0)], radii[min(i + 1, radii.size - 1)]
    if hi > lo:
        res = optimize.minimize_scalar(
            lambda r: -weighted(r).max(), bounds=(lo, hi), method="bounded", options={"xatol": 1e-12}
        )
        best = max(best, float(-res.fun))
    return float(head + best)


def space_norm(f, space, grid=None, method="quadrature"):
    if space.kind is SpaceKind.BERGMAN:
        return bergman_norm(f, space.p, space.alpha, grid, method)
    if space.kind is SpaceKind.DIRICHLET:
        return dirichlet_norm(f, space.p, space.alpha, grid, method)
    return bloch_norm(f, grid)


# --- test families --------------------------------------------------------


def _log_gamma_ratios(order, e):
    """log of Gamma(n+e)/(n! Gamma(e)) for n = 0..order."""
    n = np.arange(1, order + 1, dtype=float)
    return np.concatenate([[0.0], np.cumsum(np.log((n - 1.0 + e) / n))])


def binomial_coefficients(a, exponent, order):
    """Taylor coefficients of ``(1 - a z)**(-exponent)`` up to ``z**order``."""
    if order < 0:
        return np.zeros(0)
    lg = _log_gamma_ratios(order, exponent)
    n = np.arange(order + 1)
    with np.errstate(under="ignore", divide="ignore"):
        return np.exp(lg + n * math.log(a)) if a > 0 else (n == 0).astype(float)


def _binomial_tail_bound(a, exponent, order, prefactor):
    nxt = order + 1
    term = prefactor * math.exp(_log_gamma_ratios(nxt, exponent)[-1] + nxt * math.log(a))
    rho = a * max(1.0, (nxt + exponent) / (nxt + 1.0))
    if rho >= 1.0:
        return math.inf
    return term / (1.0 - rho)


def _choose_order(bound_fn, coeff_fn, order, what):
    if order is not None:
        coeffs = coeff_fn(order)
        bound = bound_fn(order)
        proxy = np.sum(np.abs(coeffs))
        if bound > TRUNCATION_RTOL * proxy:
            raise TruncationInsufficient(
                f"{what}: order {order} leaves a tail bound {bound:.3g} "
                f"> {TRUNCATION_RTOL:g} x coefficient sum {proxy:.3g}"
            )
        return TaylorPoly(coeffs)
    order = 16
    while order <= 1 << 22:
        coeffs = coeff_fn(order)
        if bound_fn(order) <= TRUNCATION_RTOL * np.sum(np.abs(coeffs)):
            return TaylorPoly(coeffs)
        order *= 2
    raise TruncationInsufficient(f"{what}: no admissible truncation order up to 2**22")


def _check_a(a):
    return check_scalar(a, "a", lower=0.0, upper=1.0)


def kernel_power(z, a, c):
    """``((1 - a**2) / (1 - a z)**2)**c`` on the principal branch.

    ``Re(1 - a z) > 0`` on the closed disk for ``0 <= a < 1``, so the branch
    cut is never crossed.
    """
    z = np.asarray(z)
    return np.exp(c * (np.log1p(-a * a) - 2.0 * np.log(1.0 - a * z)))


def log_kernel(z, a):
    """``log(2 / (1 - a z))``."""
    return math.log(2.0) - np.log(1.0 - a * np.asarray(z))


def dirichlet_kernel(z, a, c):
    """``(1/a) (1-a**2)**c / (1 - a z)**(2c - 1)``."""
    z = np.asarray(z)
    return np.exp(c * np.log1p(-a * a) - (2.0 * c - 1.0) * np.log(1.0 - a * z)) / a


def _kernel_family(a, c, order, what):
    a = _check_a(a)
    pref = (1.0 - a * a) ** c
    return _choose_order(
        lambda n: _binomial_tail_bound(a, 2 * c, n, pref),
        lambda n: pref * binomial_coefficients(a, 2 * c, n),
        order,
        what,
    )


def test_f_bergman(a, p, alpha, order=None):
    """Truncated ``f_a(z) = ((1-a**2)/(1-a z)**2)**((alpha+2)/p)``.

    With ``order=None`` the smallest power of two whose tail bound is below
    ``1e-8`` of the coefficient sum is used.
    """
    return _kernel_family(a, (alpha + 2.0) / p, order, "f_a (Bergman)")


def test_g_bergman(a, beta, q_conj, order=None):
    """Truncated ``g_a(z) = ((1-a**2)/(1-a z)**2)**(beta/q')``."""
    return _kernel_family(a, beta / q_conj, order, "g_a (Bergman)")


def test_g_log(a, order=None):
    """Truncated ``log(2/(1 - a z)) = log 2 + sum_{n>=1} a**n z**n / n``."""
    a = _check_a(a)

    def coeffs(n_max):
        n = np.arange(1, n_max + 1, dtype=float)
        with np.errstate(under="ignore"):
            body = np.exp(n * math.log(a)) / n
        return np.concatenate([[math.log(2.0)], body])

    def bound(n_max):
        return math.exp((n_max + 1) * math.log(a)) / ((n_max + 1) * (1.0 - a))

    return _choose_order(bound, coeffs, order, "g_a (log)")


def test_f_dirichlet(a, p, alpha, order=None):
    """Truncated ``f_a(z) = (1/a)(1-a**2)**c / (1-a z)**(2c-1)``, ``c = (alpha+2)/p``."""
    a = _check_a(a)
    c = (alpha + 2.0) / p
    e = 2.0 * c - 1.0
    if e <= 0:
        raise ValueError("the Dirichlet test family needs 2(alpha+2)/p - 1 > 0")
    pref = (1.0 - a * a) ** c / a
    return _choose_order(
        lambda n: _binomial_tail_bound(a, e, n, pref),
        lambda n: pref * binomial_coefficients(a, e, n),
        order,
        "f_a (Dirichlet)",
    )


# --- coefficient decay ------------------------------------------------------


@dataclass
class DecayReport:
    """Coefficient-size diagnostics for membership in ``A^p_alpha``.

    Finite data only shows trends; ``flagged`` marks visible non-decay.
    """

    n: np.ndarray
    ratios: np.ndarray
    partial_sums: np.ndarray
    ratio_growing: bool
    sums_converging: bool

    @property
    def flagged(self):
        return self.ratio_growing or not self.sums_converging


def coeff_decay_report(f, p, alpha):
    """Ratios ``|a_n| / n**e`` and partial sums of ``n**(p-alpha-3) |a_n|**p``.

    ``e = (alpha+2)/p - 1`` for ``p <= 1`` and ``(alpha+1)/p`` for ``p >= 1``.
    """
    p = check_scalar(p, "p", lower=0.0)
    alpha = check_scalar(alpha, "alpha", lower=-1.0)
    a = np.abs(f.coeffs[1:])
    n = np.arange(1, a.size + 1, dtype=float)
    e = (alpha + 2.0) / p - 1.0 if p <= 1 else (alpha + 1.0) / p
    ratios = a / n**e
    terms = n ** (p - alpha - 3.0) * a**p
    sums = np.cumsum(terms)
    growing = False
    converging = True
    if a.size >= 8:
        q = a.size // 4
        growing = bool(ratios[-q:].max() > 1.05 * ratios[-2 * q : -q].max())
        late = terms[-max(1, a.size // 10) :].sum()
        converging = bool(late <= 1e-3 * max(sums[-1], 1e-300))
    return DecayReport(n, ratios, sums, growing, converging)


# keep pytest from collecting the family constructors when imported into tests
for _fn in (test_f_bergman, test_g_bergman, test_g_log, test_f_dirichlet):
    _fn.__test__ = False
del _fn
