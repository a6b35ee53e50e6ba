import json

import numpy as np
import pytest

from genhilbert import (
    CarlesonQuery,
    DegenerateTail,
    InvalidCase,
    LogCarlesonSpec,
    MeasureSpec,
    TailExponentRegressor,
    TheoremCase,
    ThresholdQuery,
    Verdict,
    carleson_constant,
    fit_exponent,
    threshold_exponent,
    vanishing_probe,
)
from genhilbert.carleson import default_t_grid


def fit_grid():
    # 40 points, geometric in 1 - t, down to 1 - 1e-6
    return 1.0 - np.geomspace(0.5, 1e-6, 40)


class TestCarlesonConstant:
    def test_power_family_at_its_exponent(self):
        rep = carleson_constant(MeasureSpec.power_family(2.0), CarlesonQuery(2.0))
        assert rep.constant_sup == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(rep.ratio_table[:, 2], 1.0, rtol=1e-12)
        assert rep.vanishing_verdict is Verdict.NON_VANISHING
        assert not rep.growing

    def test_lebesgue_at_one(self):
        rep = carleson_constant(MeasureSpec.lebesgue(), CarlesonQuery(1.0))
        assert rep.constant_sup == pytest.approx(1.0, abs=1e-14)

    def test_lebesgue_at_two_flags_growth(self):
        rep = carleson_constant(MeasureSpec.lebesgue(), CarlesonQuery(2.0))
        t = rep.ratio_table[:, 0]
        np.testing.assert_allclose(rep.ratio_table[:, 2], 1 / (1 - t), rtol=1e-9)
        assert rep.growing
        assert rep.constant_sup == pytest.approx(rep.ratio_table[-1, 2])

    @pytest.mark.parametrize("s", [0.5, 1.0, 2.0, 3.0])
    def test_power_family_monotonicity(self, s):
        mu = MeasureSpec.power_family(s)
        grid = np.asarray(CarlesonQuery(s).t_grid)
        assert carleson_constant(mu, CarlesonQuery(s, 0.0, grid)).constant_sup == pytest.approx(1.0, abs=1e-9)
        below = carleson_constant(mu, CarlesonQuery(s - 0.1, 0.0, grid)).ratio_table[:, 2]
        above = carleson_constant(mu, CarlesonQuery(s + 0.1, 0.0, grid)).ratio_table[:, 2]
        assert np.all(np.diff(below) < 0)
        assert np.all(np.diff(above) > 0)

    def test_log_order_ratio_is_flat_for_log_family(self):
        rep = carleson_constant(MeasureSpec.log_carleson(2.0, 1.0), CarlesonQuery(2.0, 1.0))
        np.testing.assert_allclose(rep.ratio_table[:, 2], 1.0, rtol=1e-10)

    def test_serialization(self):
        rep = carleson_constant(MeasureSpec.power_family(2.0), CarlesonQuery(2.0))
        d = json.loads(rep.to_json())
        assert d["vanishing_verdict"] == "NonVanishing"
        assert len(d["ratio_table"]) == len(rep.ratio_table)
        lines = rep.to_csv().splitlines()
        assert lines[0] == "t,tail,ratio"
        assert len(lines) == len(rep.ratio_table) + 1
        assert float(lines[1].split(",")[2]) == rep.ratio_table[0, 2]

    def test_query_validation(self):
        with pytest.raises(ValueError):
            CarlesonQuery(0.0)
        with pytest.raises(ValueError):
            CarlesonQuery(1.0, -1.0)
        with pytest.raises(ValueError):
            CarlesonQuery(1.0, 0.0, [0.5, 0.4])


class TestFitExponent:
    @pytest.mark.parametrize("s", [0.5, 1.0, 2.0, 3.0])
    def test_recovers_power(self, s):
        s_hat, a_hat = fit_exponent(MeasureSpec.power_family(s), fit_grid())
        assert abs(s_hat - s) <= 0.05
        assert abs(a_hat) <= 0.1

    def test_lebesgue(self):
        s_hat, _ = fit_exponent(MeasureSpec.lebesgue())
        assert s_hat == pytest.approx(1.0, abs=0.05)

    def test_log_family(self):
        s_hat, a_hat = fit_exponent(MeasureSpec.log_carleson(2.0, 1.0), fit_grid())
        assert s_hat == pytest.approx(2.0, abs=0.05)
        assert a_hat == pytest.approx(1.0, abs=0.15)

    def test_atom_is_degenerate(self):
        with pytest.raises(DegenerateTail):
            fit_exponent(MeasureSpec.atom(0.9))

    def test_regressor_estimator_api(self):
        t = default_t_grid()
        reg = TailExponentRegressor(fit_log_order=False)
        assert reg.get_params() == {"fit_log_order": False}
        y = 3.0 * (1 - t) ** 1.5
        reg.fit(t, y)
        assert reg.exponent_ == pytest.approx(1.5, abs=1e-10)
        assert reg.log_order_ == 0.0
        np.testing.assert_allclose(reg.predict(t), y, rtol=1e-10)


class TestVanishingProbe:
    r_grid = 1.0 - np.geomspace(0.5, 1e-4, 12)

    def test_decaying(self):
        res = vanishing_probe(MeasureSpec.density(1.0, 1.5), 2.0, self.r_grid)
        assert res.verdict is Verdict.VANISHING
        gap = 1 - res.rows[:, 0]
        np.testing.assert_allclose(res.rows[:, 1] / res.rows[0, 1], np.sqrt(gap / gap[0]), rtol=1e-9)

    def test_critical(self):
        res = vanishing_probe(MeasureSpec.power_family(2.0), 2.0, self.r_grid)
        assert res.verdict is Verdict.NON_VANISHING
        np.testing.assert_allclose(res.rows[:, 1], 1.0, rtol=1e-12)

    def test_zero_measure(self):
        res = vanishing_probe(MeasureSpec.zero(), 2.0, self.r_grid)
        assert res.verdict is Verdict.VANISHING
        assert np.all(res.rows[:, 1] == 0)

    def test_to_dict(self):
        d = vanishing_probe(MeasureSpec.zero(), 1.0, [0.5, 0.9]).to_dict()
        assert d["verdict"] == "Vanishing"
        assert [row["r"] for row in d["rows"]] == [0.5, 0.9]


class TestThreshold:
    def test_necessary_exponent(self):
        q = ThresholdQuery(2, 2, 0, 2, TheoremCase.T41_necessary)
        assert threshold_exponent(q) == pytest.approx(2.0)

    def test_well_definedness_middle_case(self):
        q = ThresholdQuery(1.5, 1.5, 0, 2, TheoremCase.T31_ii)
        assert threshold_exponent(q) == pytest.approx(7 / 6)

    def test_q1_log_spec(self):
        assert threshold_exponent(ThresholdQuery(1, 1, 0, 2, "T41_q1")) == LogCarlesonSpec(2.0, 1.0)

    def test_other_cases(self):
        assert threshold_exponent(ThresholdQuery(0.5, 1, 0, 2, "T31_i")) == pytest.approx(4.0)
        assert threshold_exponent(ThresholdQuery(4, 4, 1, 2, "T31_iii")) == pytest.approx(0.5)
        assert threshold_exponent(ThresholdQuery(2, 2, 0, 2, "T401")) == pytest.approx(2.0)
        assert threshold_exponent(ThresholdQuery(1, 1, 0, 2, "T401")) == LogCarlesonSpec(2.0, 1.0)
        assert threshold_exponent(ThresholdQuery(2, 2, 2, 3, "T43_necessary")) == pytest.approx(2 + 2 - 1)
        assert threshold_exponent(ThresholdQuery(2, 2, 2, 3, "T43_sufficient")) == pytest.approx(4.0)
        assert threshold_exponent(ThresholdQuery(2, 2, 2, 1, "T403")) == pytest.approx(2.0)

    @pytest.mark.parametrize(
        "args",
        [
            (2, 2, 0, 2, "T31_i"),
            (0.5, 0.5, 0, 2, "T31_iii"),
            (2, 2, 0, 1, "T41_necessary"),
            (2, 1.5, 0, 2, "T41_sufficient"),
            (2, 2, 0, 2, "T41_q1"),
            (2, 2, 0.5, 3, "T43_necessary"),
            (2, 2, 0, 2.5, "T401"),
        ],
    )
    def test_invalid_cases(self, args):
        with pytest.raises(InvalidCase):
            threshold_exponent(ThresholdQuery(*args))

    def test_sufficient_dominates_necessary(self):
        rng = np.random.default_rng(7)
        for _ in range(500):
            p = rng.uniform(0.2, 5)
            q = p + rng.uniform(0, 5)
            if q <= 1:
                q = 1 + rng.uniform(0.01, 3)
                p = min(p, q)
            alpha = rng.uniform(-0.99, 5)
            beta = rng.uniform(1.01, 8)
            nec = threshold_exponent(ThresholdQuery(p, q, alpha, beta, "T41_necessary"))
            suf = threshold_exponent(ThresholdQuery(p, q, alpha, beta, "T41_sufficient"))
            assert suf >= nec - 1e-12

    def test_pure_function_of_parameters(self):
        q = ThresholdQuery(2, 3, 1, 2.5, "T41_necessary")
        assert threshold_exponent(q) == threshold_exponent(ThresholdQuery(2, 3, 1, 2.5, "T41_necessary"))
