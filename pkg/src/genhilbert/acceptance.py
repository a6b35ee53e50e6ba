"""Acceptance suite shared by ``genhilbert selftest`` and the test-suite.

Each criterion returns a :class:`CriterionResult`. ``details`` holds only
deterministic numbers so that result files are byte-identical between runs;
wall-clock times live in ``runtime`` and go to the metadata sidecar.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .carleson import fit_exponent
from .measures import MeasureSpec
from .operator import (
    OperatorSpec,
    apply_integral,
    apply_matrix,
    gamma_ratio_lgamma,
    gamma_ratios,
    well_definedness_gate,
)
from .probes import (
    compactness_probe,
    duality_identity_bergman,
    duality_identity_dirichlet,
    lower_bound_scan,
    ratio_sup,
    reproducing_check,
)
from .spaces import (
    SpaceParams,
    TaylorPoly,
    bergman_norm,
    dirichlet_norm,
    test_f_bergman,
)

__all__ = ["CriterionResult", "CRITERIA", "run_suite", "results_payload", "format_line"]


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    details: dict
    runtime: float = 0.0
    runtime_limit: float | None = None
    notes: list = field(default_factory=list)

    @property
    def runtime_ok(self):
        return self.runtime_limit is None or self.runtime < self.runtime_limit

    @property
    def ok(self):
        return self.passed and self.runtime_ok


def format_line(res):
    status = "PASS" if res.ok else "FAIL"
    limit = f" (limit {res.runtime_limit:g} s)" if res.runtime_limit else ""
    return f"[{status}] criterion {res.number:2d}: {res.title} | {_brief(res.details)} | {res.runtime:.2f} s{limit}"


def _brief(details):
    parts = []
    for k, v in details.items():
        if isinstance(v, float):
            parts.append(f"{k}={v:.3g}")
        elif isinstance(v, (bool, int, str)):
            parts.append(f"{k}={v}")
    return ", ".join(parts)


# --- shared corpora -------------------------------------------------------------


def _fixed_poly(seed, degree):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(degree + 1) + 1j * rng.standard_normal(degree + 1)
    return TaylorPoly(c / np.arange(1, degree + 2))


def identity_measures():
    return {
        "lebesgue": MeasureSpec.lebesgue(),
        "two_atoms": MeasureSpec.atom(0.5, 1.0) + MeasureSpec.atom(0.9, 0.5),
        "power_2": MeasureSpec.power_family(2.0),
        "log_carleson_1.5": MeasureSpec.log_carleson(1.5, 1.0),
        "power_0.75+atom": MeasureSpec.power_family(0.75) + MeasureSpec.atom(0.3, 0.25),
    }


def identity_functions():
    return {
        "one": TaylorPoly([1.0]),
        "z": TaylorPoly([0.0, 1.0]),
        "poly8": _fixed_poly(7, 8),
        "f_a(0.5)": test_f_bergman(0.5, 2.0, 0.0, order=64),
    }


def duality_corpus():
    measures = [
        ("atom(0.5)", MeasureSpec.atom(0.5, 1.0)),
        ("atoms(0.3,0.8)", MeasureSpec.atom(0.3, 2.0) + MeasureSpec.atom(0.8, 0.5)),
        ("lebesgue", MeasureSpec.lebesgue()),
        ("power_2", MeasureSpec.power_family(2.0)),
        ("density(1.5,0.5)", MeasureSpec.density(1.5, 0.5)),
    ]
    pairs = [
        (_fixed_poly(11, 3), _fixed_poly(12, 8)),
        (_fixed_poly(13, 8), _fixed_poly(14, 5)),
    ]
    out = []
    for name, mu in measures:
        for beta in (2.0, 3.0):
            for j, (f, g) in enumerate(pairs):
                out.append((f"{name}|beta={beta:g}|pair{j}", mu, beta, f, g))
    return out


def _disk_grid(radius, n_r=8, n_theta=16):
    r = np.linspace(0.0, radius, n_r)
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    return (r[:, None] * np.exp(1j * th)[None, :]).ravel()


# --- criteria -----------------------------------------------------------------


def criterion_1(seed, jobs):
    N = 256
    spec = OperatorSpec(1.0, MeasureSpec.lebesgue(), N)
    n = np.arange(N + 1)
    entries = spec.row_factors[:, None] * spec.moment_cache[n[:, None] + n[None, :]]
    exact = 1.0 / (n[:, None] + n[None, :] + 1.0)
    mask = (n[:, None] + n[None, :]) <= N
    err = float(np.max(np.abs(entries - exact)[mask]))
    return err <= 1e-12, {"max_abs_error": err, "entries_checked": int(mask.sum())}


def criterion_2(seed, jobs):
    z = _disk_grid(0.7)
    N = 160
    worst = 0.0
    gates = {}
    cases = 0
    for mname, mu in identity_measures().items():
        gates[mname] = bool(well_definedness_gate(mu, 2.0, 0.0).passed)
        for beta in (1.5, 2.0, 3.0):
            spec = OperatorSpec(beta, mu, N)
            for f in identity_functions().values():
                series = apply_matrix(spec, f).evaluate(z)
                integral = apply_integral(spec, f, z)
                rel = float(np.max(np.abs(series - integral)) / max(np.max(np.abs(integral)), 1e-300))
                worst = max(worst, rel)
                cases += 1
    all_gates = all(gates.values())
    return worst <= 1e-8 and all_gates, {
        "max_relative_residual": worst,
        "cases": cases,
        "n_terms": N,
        "all_gates_pass": all_gates,
    }


def criterion_3(seed, jobs):
    spec = OperatorSpec(2.0, MeasureSpec.lebesgue(), 256)
    b = apply_matrix(spec, TaylorPoly([1.0])).coeffs
    err = float(np.max(np.abs(b - 1.0)))
    return err <= 1e-12, {"max_abs_error": err, "n_coeffs": int(b.size)}


def criterion_4(seed, jobs):
    r42 = []
    r411 = []
    r411_unit = []
    for _, mu, beta, f, g in duality_corpus():
        spec = OperatorSpec(beta, mu, 16)
        r42.append(duality_identity_bergman(spec, f, g).residual)
        r411.append(duality_identity_dirichlet(spec, f, g).residual)
        r411_unit.append(duality_identity_dirichlet(spec, f, g, factor=1.0).residual)
    m42, m411, m411u = float(max(r42)), float(max(r411)), float(max(r411_unit))
    res = {
        "cases": len(r42),
        "max_residual_plain": m42,
        "max_residual_derivative": m411,
        "max_residual_derivative_unit_factor": m411u,
    }
    return m42 <= 1e-6 and m411 <= 1e-6, res


def criterion_5(seed, jobs):
    j = np.arange(12)
    z = np.linspace(0.05, 0.6, 12) * np.exp(2j * np.pi * j * (np.sqrt(5.0) - 1.0) / 2.0)
    polys = [TaylorPoly.monomial(k) for k in range(9)] + [_fixed_poly(5, 8)]
    worst = 0.0
    for alpha in (0.0, 1.0, 2.5):
        for f in polys:
            worst = max(worst, reproducing_check(f, alpha, z))
    return worst <= 1e-6, {"max_residual": worst, "functions": len(polys) * 3}


def criterion_6(seed, jobs):
    worst = 0.0
    n = np.arange(501)
    for beta in (0.5, 1.0, 2.0, 3.7):
        rec = gamma_ratios(500, beta)
        ref = np.array([gamma_ratio_lgamma(int(k), beta) for k in n])
        worst = max(worst, float(np.max(np.abs(rec - ref) / np.abs(ref))))
    return worst <= 1e-10, {"max_relative_difference": worst}


def criterion_7(seed, jobs):
    errs = {}
    for s in (0.5, 1.0, 2.0, 3.0):
        s_hat, _ = fit_exponent(MeasureSpec.power_family(s), None)
        errs[f"s={s:g}"] = abs(s_hat - s)
    s_hat, a_hat = fit_exponent(MeasureSpec.log_carleson(2.0, 1.0), None)
    worst_s = float(max(errs.values()))
    log_err = abs(a_hat - 1.0)
    return worst_s <= 0.05 and log_err <= 0.15, {
        "max_exponent_error": worst_s,
        "log_family_exponent": float(s_hat),
        "log_family_order": float(a_hat),
        "log_order_error": float(log_err),
    }


def criterion_8(seed, jobs):
    a = 1.0 - np.geomspace(0.1, 1e-3, 13)
    out = {}
    ok = True
    for s in (1.5, 2.5):
        res = lower_bound_scan(OperatorSpec(2.0, MeasureSpec.power_family(s), 4), 2.0, 2.0, 0.0, a)
        slope = res.summary["slope"]
        out[f"slope_s{s:g}"] = slope
        ok &= abs(slope - (s - 2.0)) <= 0.1
        if s == 1.5:
            v = res.column("value")
            growth = float(v[-1] / v[0])
            out["growth_s1.5"] = growth
            ok &= growth >= 10.0
    return bool(ok), out


def criterion_9(seed, jobs):
    a = 1.0 - np.geomspace(0.1, 1e-3, 13)
    bounded = lower_bound_scan(OperatorSpec(2.0, MeasureSpec.log_carleson(2.0, 1.0), 4), 1.0, 1.0, 0.0, a)
    growing = lower_bound_scan(OperatorSpec(2.0, MeasureSpec.power_family(2.0), 4), 1.0, 1.0, 0.0, a)
    spread = bounded.summary["max_over_min"]
    r2 = growing.summary["log_r2"]
    coef = growing.summary["log_coefficient"]
    return spread <= 5.0 and r2 >= 0.95 and coef > 0, {
        "log_measure_max_over_min": spread,
        "power_measure_log_r2": r2,
        "power_measure_log_coefficient": coef,
        "power_measure_verdict": growing.verdict.value,
    }


def criterion_10(seed, jobs):
    r = 1.0 - np.geomspace(0.1, 1e-4, 13)
    vanish = compactness_probe(OperatorSpec(2.0, MeasureSpec.power_family(2.5), 4), 2.0, r, n_jobs=jobs)
    critical = compactness_probe(OperatorSpec(2.0, MeasureSpec.power_family(2.0), 4), 2.0, r, n_jobs=jobs)
    c = critical.column("value")
    band = float(np.max(np.abs(c / c[0] - 1.0)))
    ok = (
        vanish.summary["carleson_final_fraction"] < 0.1
        and vanish.summary["embedding_final_fraction"] < 0.1
        and band <= 0.1
    )
    return bool(ok), {
        "vanishing_carleson_fraction": vanish.summary["carleson_final_fraction"],
        "vanishing_embedding_fraction": vanish.summary["embedding_final_fraction"],
        "critical_max_deviation": band,
        "critical_embedding_fraction": critical.summary["embedding_final_fraction"],
    }


def criterion_11(seed, jobs):
    worst_b = 0.0
    worst_d = 0.0
    for k in range(65):
        f = TaylorPoly.monomial(k)
        worst_b = max(worst_b, abs(bergman_norm(f, 2.0, 0.0, method="quadrature") - (k + 1) ** -0.5))
        # z^k in D^2_2: k * sqrt(Gamma(k)Gamma(4)/Gamma(k+3))
        exact = 1.0 if k == 0 else k * np.sqrt(6.0 / (k * (k + 1.0) * (k + 2.0)))
        worst_d = max(worst_d, abs(dirichlet_norm(f, 2.0, 2.0, method="quadrature") - exact))
    worst_c = 0.0
    worst_a = 0.0
    ratios = []
    for f in identity_functions().values():
        for alpha in (0.0, 1.0):
            q = dirichlet_norm(f, 2.0, alpha + 2.0, method="quadrature")
            s = dirichlet_norm(f, 2.0, alpha + 2.0, method="series")
            worst_c = max(worst_c, abs(q - s) / s)
            # an antiderivative F with F(0) = c has norm |c| + ||f|| at the same weight
            F = f.antiderivative(0.5)
            lhs = dirichlet_norm(F, 2.0, alpha + 2.0, method="series")
            rhs = 0.5 + bergman_norm(f, 2.0, alpha + 2.0, method="series")
            worst_a = max(worst_a, abs(lhs - rhs) / rhs)
            for p in (1.0, 2.0, 3.0):
                ratios.append(dirichlet_norm(f, p, alpha + p) / bergman_norm(f, p, alpha))
    ok = worst_b <= 1e-8 and worst_d <= 1e-8 and worst_c <= 1e-8 and worst_a <= 1e-12
    return ok, {
        "max_bergman_monomial_error": float(worst_b),
        "max_dirichlet_monomial_error": float(worst_d),
        "max_dirichlet_route_difference": float(worst_c),
        "max_antiderivative_error": float(worst_a),
        "equivalence_ratio_min": float(min(ratios)),
        "equivalence_ratio_max": float(max(ratios)),
    }


def _determinism_payload(seed, jobs):
    B = SpaceParams.bergman(2.0, 0.0)
    spec = OperatorSpec(2.0, MeasureSpec.power_family(2.5), 64)
    rnd = ratio_sup(spec, B, B, "RandomPoly", count=12, seed=seed, n_jobs=jobs)
    fam = ratio_sup(spec, B, B, "BergmanF", a_grid=[0.5, 0.8, 0.9, 0.95, 0.99], n_jobs=jobs)
    comp = compactness_probe(spec, 2.0, 1.0 - np.geomspace(0.5, 1e-3, 6), n_jobs=jobs)
    text = "".join(r.to_json() + r.to_csv() for r in (rnd, fam, comp))
    return text, rnd.summary["sup"], fam.summary["sup"]


def criterion_12(seed, jobs):
    first, rnd_sup, fam_sup = _determinism_payload(seed, jobs)
    second, _, _ = _determinism_payload(seed, jobs)
    serial, _, _ = _determinism_payload(seed, 1)
    same = first == second
    same_serial = first == serial
    return same and same_serial, {
        "identical_repeat": same,
        "identical_serial": same_serial,
        "payload_bytes": len(first),
        "random_family_sup": float(rnd_sup),
        "kernel_family_sup": float(fam_sup),
        "random_over_kernel": float(rnd_sup / fam_sup),
    }


CRITERIA = [
    (1, "Hilbert-matrix oracle", criterion_1, 1.0),
    (2, "integral identity matrix vs integral", criterion_2, 30.0),
    (3, "derivative-Hilbert closed form", criterion_3, None),
    (4, "duality factors", criterion_4, None),
    (5, "reproducing kernel", criterion_5, None),
    (6, "gamma-ratio stability", criterion_6, None),
    (7, "Carleson classification", criterion_7, None),
    (8, "threshold contrast", criterion_8, 60.0),
    (9, "q = 1 logarithmic case", criterion_9, None),
    (10, "compactness probe", criterion_10, None),
    (11, "monomial and Dirichlet norm oracles", criterion_11, None),
    (12, "determinism", criterion_12, None),
]


def run_criterion(number, seed=42, jobs=1):
    for num, title, fn, limit in CRITERIA:
        if num == number:
            t0 = time.perf_counter()
            passed, details = fn(seed, jobs)
            elapsed = time.perf_counter() - t0
            details = {k: (float(v) if isinstance(v, np.floating) else v) for k, v in details.items()}
            return CriterionResult(num, title, bool(passed), details, elapsed, limit)
    raise KeyError(f"no criterion {number}")


def run_suite(seed=42, jobs=1, only=None, echo=None):
    results = []
    for num, *_ in CRITERIA:
        if only and num not in only:
            continue
        res = run_criterion(num, seed, jobs)
        if echo:
            echo(format_line(res))
        results.append(res)
    return results


def results_payload(results, seed):
    """Deterministic JSON-ready summary; runtimes are excluded on purpose."""
    return {
        "seed": seed,
        "criteria": [
            {"number": r.number, "title": r.title, "passed": r.passed, "details": r.details} for r in results
        ],
    }


def runtime_payload(results):
    return {
        str(r.number): {"seconds": r.runtime, "limit": r.runtime_limit, "within_limit": r.runtime_ok}
        for r in results
    }


def dumps(obj):
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"
