import json

import numpy as np
import pytest

from genhilbert import (
    Family,
    MeasureSpec,
    OperatorSpec,
    ProbeConfig,
    ProbeVerdict,
    QuadratureGrid,
    SpaceParams,
    TaylorPoly,
    bergman_pairing,
    compactness_probe,
    duality_identity_bergman,
    duality_identity_dirichlet,
    embedding_ratio,
    lower_bound_scan,
    ratio_sup,
    reproducing_check,
    test_f_bergman,
)
from genhilbert.probes import default_a_grid, random_poly

B2 = SpaceParams.bergman(2.0, 0.0)
LEB = MeasureSpec.lebesgue()


class TestPairing:
    def test_constants(self):
        assert bergman_pairing(TaylorPoly([1]), TaylorPoly([1]), 2, 0, 0) == pytest.approx(1.0, abs=1e-14)

    def test_orthogonal(self):
        assert abs(bergman_pairing(TaylorPoly([0, 1]), TaylorPoly([1]), 2, 0, 0)) <= 1e-15

    def test_identity(self):
        assert bergman_pairing(TaylorPoly([0, 1]), TaylorPoly([0, 1]), 2, 0, 0) == pytest.approx(0.5, abs=1e-14)

    def test_weight_mixes_exponents(self):
        # weight alpha/p + gamma/p' = 1/2 + 1/2 = 1 gives int (1-|z|^2) dA = 1/2
        assert bergman_pairing(TaylorPoly([1]), TaylorPoly([1]), 2, 1, 1) == pytest.approx(0.5, abs=1e-14)

    def test_conjugate_linear_in_second(self):
        h, g = TaylorPoly([1, 2j, 0.5]), TaylorPoly([0.3, -1, 1j])
        assert bergman_pairing(h, 1j * g, 2, 0, 0) == pytest.approx(-1j * bergman_pairing(h, g, 2, 0, 0), abs=1e-14)


class TestDuality:
    def test_lebesgue_constants(self):
        res = duality_identity_bergman(OperatorSpec(3.0, LEB, 4), TaylorPoly([1]), TaylorPoly([1]))
        assert res.rhs == pytest.approx(0.5, abs=1e-14)
        assert res.residual <= 1e-6

    def test_zero_measure(self):
        res = duality_identity_bergman(OperatorSpec(2.0, MeasureSpec.zero(), 4), TaylorPoly([1, 1]), TaylorPoly([2]))
        assert res.lhs == 0 and res.rhs == 0

    def test_atom(self):
        res = duality_identity_bergman(OperatorSpec(2.0, MeasureSpec.atom(0.5), 4), TaylorPoly([1]), TaylorPoly([0, 1]))
        assert res.rhs == pytest.approx(0.5, abs=1e-15)
        assert res.residual <= 1e-6

    def test_random_corpus(self):
        rng = np.random.default_rng(11)
        mus = [LEB, MeasureSpec.power_family(2.5), MeasureSpec.atom(0.7, 0.5) + MeasureSpec.density(1.0, 1.0, 1.0)]
        for mu in mus:
            for beta in (2.0, 3.0, 4.5):
                f = TaylorPoly(rng.normal(size=6) + 1j * rng.normal(size=6))
                g = TaylorPoly(rng.normal(size=9) + 1j * rng.normal(size=9))
                assert duality_identity_bergman(OperatorSpec(beta, mu, 8), f, g).residual <= 1e-12

    def test_derivative_constant_g(self):
        res = duality_identity_dirichlet(OperatorSpec(2.0, LEB, 4), TaylorPoly([1, 2]), TaylorPoly([3]))
        assert res.lhs == 0 and res.rhs == 0

    def test_derivative_zero_measure(self):
        res = duality_identity_dirichlet(OperatorSpec(3.0, MeasureSpec.zero(), 4), TaylorPoly([1]), TaylorPoly([0, 1]))
        assert res.lhs == 0 and res.rhs == 0

    @pytest.mark.parametrize("beta", [2.0, 3.0])
    def test_derivative_atom_unit_factor(self, beta):
        c, w = 0.4, 2.0
        op = OperatorSpec(beta, MeasureSpec.atom(c, w), 4)
        f, g = TaylorPoly([1]), TaylorPoly([0, 1])
        # (H f)' = w beta c / (1 - c z)**(beta+1), paired with 1 against (1-|z|^2)**(beta-1)
        res = duality_identity_dirichlet(op, f, g, factor=1.0)
        assert res.lhs == pytest.approx(w * c, abs=1e-13)
        assert res.residual <= 1e-12
        quoted = duality_identity_dirichlet(op, f, g)
        assert quoted.rhs == pytest.approx(beta / (beta - 1) * w * c)
        assert quoted.residual > 0.1

    def test_needs_beta_above_one(self):
        with pytest.raises(ValueError):
            duality_identity_bergman(OperatorSpec(1.0, LEB, 4), TaylorPoly([1]), TaylorPoly([1]))


class TestReproducing:
    def test_constant(self):
        assert reproducing_check(TaylorPoly([1]), 0.0, [0.0, 0.5, 0.3j]) <= 1e-8

    def test_identity(self):
        assert reproducing_check(TaylorPoly([0, 1]), 0.0, [0.3]) <= 1e-8

    def test_weighted(self):
        assert reproducing_check(TaylorPoly([0, 0, 1]), 1.5, [0.2 - 0.4j, 0.6]) <= 1e-6

    def test_outside_disk(self):
        with pytest.raises(ValueError):
            reproducing_check(TaylorPoly([1]), 0.0, [1.0])


class TestEmbedding:
    def test_zero_measure(self):
        assert embedding_ratio(MeasureSpec.zero(), TaylorPoly([1]), 2, 2, 0) == 0.0

    def test_constant_lebesgue(self):
        assert embedding_ratio(LEB, TaylorPoly([1]), 2, 2, 0) == pytest.approx(1.0, abs=1e-14)

    def test_power(self):
        f = TaylorPoly([1, 1])
        r = embedding_ratio(LEB, f, 2, 2, 0)
        assert embedding_ratio(LEB, f, 2, 2, 0, power=True) == pytest.approx(r**2)

    def test_callable_needs_norm(self):
        with pytest.raises(ValueError):
            embedding_ratio(LEB, lambda t: t, 2, 2, 0)
        assert embedding_ratio(LEB, lambda t: np.ones_like(t), 2, 2, 0, source_norm=2.0) == pytest.approx(0.5)

    def test_family_bounded_at_critical_exponent(self):
        p, q, alpha = 2.0, 3.0, 0.0
        mu = MeasureSpec.power_family((2 + alpha) * q / p)
        vals = [embedding_ratio(mu, test_f_bergman(a, p, alpha), q, p, alpha) for a in (0.5, 0.9, 0.99, 0.999)]
        assert max(vals) / min(vals) <= 10


class TestLowerBoundScan:
    def test_above_threshold_bounded(self):
        res = lower_bound_scan(OperatorSpec(2.0, MeasureSpec.power_family(2.5), 8), 2, 2, 0)
        assert res.summary["last_decade_slope"] >= 0
        assert res.verdict is ProbeVerdict.BOUNDED_CONSISTENT

    @pytest.mark.parametrize("s", [0.5, 1.0, 1.5, 1.75, 2.25, 2.5, 3.0, 3.5])
    def test_slope_recovery(self, s):
        a = 1 - np.geomspace(1e-2, 1e-4, 9)
        res = lower_bound_scan(OperatorSpec(2.0, MeasureSpec.power_family(s), 8), 2, 2, 0, a)
        assert res.summary["slope"] == pytest.approx(s - 2.0, abs=0.1)

    def test_below_threshold_divergence(self):
        res = lower_bound_scan(OperatorSpec(2.0, MeasureSpec.power_family(1.5), 8), 2, 2, 0)
        assert res.verdict is ProbeVerdict.DIVERGENCE_DETECTED

    def test_zero_measure(self):
        res = lower_bound_scan(OperatorSpec(2.0, MeasureSpec.zero(), 8), 2, 2, 0)
        assert np.all(res.column("value") == 0)
        assert res.verdict is ProbeVerdict.BOUNDED_CONSISTENT

    def test_monotone_contrast(self):
        sups = [
            lower_bound_scan(OperatorSpec(2.0, MeasureSpec.power_family(s), 8), 2, 2, 0).summary["sup"]
            for s in (1.5, 2.0, 2.5)
        ]
        assert sups[0] >= sups[1] >= sups[2]

    def test_values_dominate_tail_bound(self):
        res = lower_bound_scan(OperatorSpec(3.0, MeasureSpec.power_family(2.0), 8), 1.5, 3, 0.5)
        assert np.all(res.column("ratio") >= 1 - 1e-12)

    def test_log_family(self):
        a = 1 - np.geomspace(0.1, 1e-3, 13)
        bounded = lower_bound_scan(OperatorSpec(2.0, MeasureSpec.log_carleson(2.0, 1.0), 8), 1, 1, 0, a)
        assert bounded.summary["max_over_min"] <= 5
        growing = lower_bound_scan(OperatorSpec(2.0, MeasureSpec.power_family(2.0), 8), 1, 1, 0, a)
        assert growing.summary["log_r2"] >= 0.95
        assert growing.summary["log_coefficient"] > 0
        assert growing.verdict is ProbeVerdict.DIVERGENCE_DETECTED

    def test_sup_is_column_max(self):
        res = lower_bound_scan(OperatorSpec(2.0, LEB, 8), 2, 2, 0)
        assert res.summary["sup"] == res.column("value").max()


class TestRatioSup:
    def test_atom_at_origin(self):
        op = OperatorSpec(2.5, MeasureSpec.atom(0.0), 8)
        res = ratio_sup(op, B2, B2, Family.BERGMAN_F, a_grid=[0.5, 0.9, 0.99])
        # H f = f(0), so the ratio is |f_a(0)| / ||f_a|| = (1 - a^2)
        np.testing.assert_allclose(res.column("value"), 1 - np.array([0.5, 0.9, 0.99]) ** 2, rtol=1e-10)

    def test_zero_measure(self):
        res = ratio_sup(OperatorSpec(2.0, MeasureSpec.zero(), 8), B2, B2, a_grid=[0.5, 0.9])
        assert res.summary["sup"] == 0

    def test_above_threshold_stable(self):
        op = OperatorSpec(2.0, MeasureSpec.power_family(2.5), 8)
        a = [0.9, 0.95, 0.99, 0.995, 0.999]
        res = ratio_sup(op, B2, B2, a_grid=a)
        vals = res.column("value")
        assert vals.max() <= 3 * vals[0]
        assert res.summary["sup"] == vals.max()

    def test_random_family_deterministic(self):
        op = OperatorSpec(2.0, MeasureSpec.power_family(2.5), 64)
        a = ratio_sup(op, B2, B2, Family.RANDOM_POLY, count=6, seed=5)
        b = ratio_sup(op, B2, B2, Family.RANDOM_POLY, count=6, seed=5, n_jobs=2)
        assert a.to_json() == b.to_json()
        assert a.to_csv() == b.to_csv()
        c = ratio_sup(op, B2, B2, Family.RANDOM_POLY, count=6, seed=6)
        assert c.to_csv() != a.to_csv()

    def test_random_poly_substreams(self):
        assert np.array_equal(random_poly(0, 2, 9, 3).coeffs, random_poly(0, 2, 9, 3).coeffs)
        f = random_poly(1.0, 1.5, 9, 0)
        k = np.arange(65)
        assert f.order == 64
        assert np.all(np.abs(f.coeffs) <= (k + 1.0) ** (-3 / 1.5) + 1e-15)

    def test_dirichlet_target(self):
        op = OperatorSpec(2.0, MeasureSpec.power_family(3.0), 8)
        res = ratio_sup(op, SpaceParams.dirichlet(2, 2), SpaceParams.dirichlet(2, 2), Family.DIRICHLET_F, a_grid=[0.5, 0.9])
        assert np.all(res.column("value") > 0)

    def test_bloch_target_rejected(self):
        with pytest.raises(ValueError):
            ratio_sup(OperatorSpec(2.0, LEB, 8), B2, SpaceParams.bloch())

    def test_probe_config(self):
        cfg = ProbeConfig(B2, B2, OperatorSpec(2.0, MeasureSpec.power_family(2.5), 8), a_grid=(0.5, 0.9))
        res = cfg.run()
        assert res.rows.shape == (2, 4)
        with pytest.raises(ValueError):
            ProbeConfig(B2, SpaceParams.bergman(1.0, 0.0), cfg.operator)


class TestCompactness:
    r_grid = 1 - np.geomspace(0.5, 1e-4, 10)

    def test_vanishing(self):
        res = compactness_probe(OperatorSpec(2.0, MeasureSpec.power_family(2.5), 8), 2.0, self.r_grid)
        assert res.verdict is ProbeVerdict.VANISHING_CONSISTENT
        gap = 1 - self.r_grid
        for col in ("value", "embedding"):
            v = res.column(col)
            assert np.polyfit(np.log(gap), np.log(v), 1)[0] == pytest.approx(0.5, abs=0.05)

    def test_critical(self):
        res = compactness_probe(OperatorSpec(2.0, MeasureSpec.power_family(2.0), 8), 2.0, self.r_grid)
        assert res.verdict is ProbeVerdict.NON_VANISHING
        v = res.column("value")
        assert np.all(np.abs(v / v[0] - 1) <= 0.1)

    def test_atom_beyond_support(self):
        res = compactness_probe(OperatorSpec(2.0, MeasureSpec.atom(0.99), 8), 2.0, [0.995, 0.999])
        assert np.all(res.rows[:, 1:] == 0)

    def test_parallel_matches_serial(self):
        op = OperatorSpec(2.0, MeasureSpec.power_family(2.5), 8)
        assert compactness_probe(op, 2.0, self.r_grid).to_json() == compactness_probe(op, 2.0, self.r_grid, n_jobs=2).to_json()


class TestProbeResult:
    def test_serialization(self):
        res = lower_bound_scan(OperatorSpec(2.0, MeasureSpec.power_family(2.5), 8), 2, 2, 0, default_a_grid(5))
        d = json.loads(res.to_json())
        assert d["kind"] == "lower_bound_scan"
        assert d["verdict"] == res.verdict.value
        assert d["columns"] == ["a", "value", "bound", "ratio"]
        assert len(d["rows"]) == 5
        lines = res.to_csv().splitlines()
        assert lines[0] == "a,value,bound,ratio"
        assert float(lines[1].split(",")[1]) == res.rows[0, 1]

    def test_non_finite_values_serialize(self):
        res = lower_bound_scan(OperatorSpec(2.0, MeasureSpec.zero(), 8), 2, 2, 0, [0.5, 0.9])
        d = json.loads(res.to_json())
        assert d["rows"][0][3] == "nan"

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            lower_bound_scan(OperatorSpec(2.0, LEB, 8), 2, 2, 0, [0.9, 0.5])
        with pytest.raises(ValueError):
            lower_bound_scan(OperatorSpec(2.0, LEB, 8), 2, 0.5, 0)

    def test_loose_grid_usable(self):
        f = TaylorPoly([1, -1])
        assert embedding_ratio(LEB, f, 1, 1, 0, QuadratureGrid(rtol=1e-6)) > 0
