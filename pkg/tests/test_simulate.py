import json
import math

import numpy as np
import pytest
from scipy.stats import kstest

from dualdose.core import EndpointSpec
from dualdose.simulate import (
    OperatingCharacteristics,
    Scenario,
    SimConfig,
    aggregate,
    builtin_scenarios,
    generate_patient,
    load_scenario,
    run_batch,
    run_trial,
    sensitivity_suite,
)


def flat_scenario(dlt, intol, mtd=None, **kwargs):
    return Scenario(name="test", dlt_probs=dlt, intol_probs=intol,
                    true_mtd=mtd, **kwargs)


class TestScenario:
    def test_builtins_load_and_validate(self):
        fixtures = builtin_scenarios()
        assert len(fixtures) == 11
        for sc in fixtures.values():
            assert len(sc.dlt_probs) == 5
            assert 1 <= sc.true_mtd <= 5

    def test_load_by_name_and_round_trip(self):
        sc = load_scenario("scenario1")
        assert sc.true_mtd == 3
        assert Scenario.from_json(sc.to_json()) == sc

    def test_load_from_file(self, tmp_path):
        sc = load_scenario("scenario2")
        path = tmp_path / "custom.json"
        path.write_text(json.dumps(sc.to_json()))
        assert load_scenario(str(path)) == sc

    def test_unknown_name_rejected(self):
        with pytest.raises(ValueError):
            load_scenario("scenario99")

    def test_nonmonotone_probs_rejected(self):
        with pytest.raises(ValueError):
            flat_scenario((0.3, 0.2), (0.1, 0.2))

    def test_bad_weights_rejected(self):
        with pytest.raises(ValueError):
            flat_scenario((0.1, 0.2), (0.1, 0.2),
                          event_time_weights_r=(0.5, 0.5, 0.5))


class TestGeneratePatient:
    def test_zero_probability_never_events(self):
        sc = flat_scenario((0.0, 0.5), (0.0, 0.5))
        rng = np.random.default_rng(0)
        for _ in range(500):
            y_t, y_r, x_t, x_r = generate_patient(sc, 1, rng)
            assert y_t == 0 and y_r == 0
            assert math.isinf(x_t) and math.isinf(x_r)

    def test_marginal_rates_match(self):
        sc = flat_scenario((0.2,), (0.6,))
        rng = np.random.default_rng(1)
        draws = [generate_patient(sc, 1, rng) for _ in range(20000)]
        assert np.mean([d[0] for d in draws]) == pytest.approx(0.2, abs=0.01)
        assert np.mean([d[1] for d in draws]) == pytest.approx(0.6, abs=0.01)

    def test_copula_induces_positive_dependence(self):
        sc = flat_scenario((0.3,), (0.3,), outcome_copula_rho=0.8)
        rng = np.random.default_rng(2)
        draws = np.array([generate_patient(sc, 1, rng)[:2]
                          for _ in range(20000)])
        both = np.mean(draws[:, 0] * draws[:, 1])
        assert both > 0.3 * 0.3 + 0.02  # well above the independent rate

    def test_uniform_event_times_pass_ks(self):
        sc = flat_scenario((0.0,), (1.0,))
        rng = np.random.default_rng(3)
        x_r = np.array([generate_patient(sc, 1, rng)[3]
                        for _ in range(10**5)])
        stat = kstest(x_r / 63.0, "uniform")
        assert stat.pvalue > 0.01

    def test_late_weighted_mass(self):
        sc = flat_scenario((0.0,), (1.0,),
                           event_time_weights_r=(0.1, 0.1, 0.8))
        rng = np.random.default_rng(4)
        x_r = np.array([generate_patient(sc, 1, rng)[3]
                        for _ in range(10**5)])
        frac_cycle3 = np.mean(x_r >= 42.0)
        assert frac_cycle3 == pytest.approx(0.8, abs=0.005)


def config(**kwargs):
    base = dict(design="boin", n_replicates=1, seed=0)
    base.update(kwargs)
    return SimConfig(**base)


class TestRunTrial:
    def test_no_events_escalates_to_top_and_selects_it(self):
        sc = flat_scenario((0.0,) * 5, (0.0,) * 5, mtd=5)
        result = run_trial(sc, config(), rep=0)
        assert result.selected == 5
        assert result.n_per_dose.sum() == 30
        # monotone climb: three cohorts before reaching the top dose
        assert tuple(result.n_per_dose[:4]) == (3.0, 3.0, 3.0, 3.0)

    def test_certain_dlt_terminates_without_selection(self):
        sc = flat_scenario((1.0,) * 3, (0.0,) * 3, mtd=1)
        result = run_trial(sc, config(), rep=0)
        assert result.terminated
        assert result.selected is None
        assert result.n_per_dose.sum() < 30

    def test_deterministic_given_seed_and_rep(self):
        sc = load_scenario("scenario5")
        a = run_trial(sc, config(design="tite-boin-dc"), rep=7)
        b = run_trial(sc, config(design="tite-boin-dc"), rep=7)
        assert a.selected == b.selected
        assert np.array_equal(a.n_per_dose, b.n_per_dose)
        assert a.duration_days == b.duration_days

    def test_overdose_counts_patients_above_true_mtd(self):
        sc = flat_scenario((0.0,) * 5, (0.0,) * 5, mtd=3)
        result = run_trial(sc, config(), rep=0)
        above = result.n_per_dose[3] + result.n_per_dose[4]
        assert result.n_overdose == above

    def test_duration_covers_last_window(self):
        sc = flat_scenario((0.0,) * 5, (0.0,) * 5, mtd=5)
        result = run_trial(sc, config(design="tite-boin-dc"), rep=0)
        assert result.duration_days > 63.0

    def test_model_based_design_runs(self):
        sc = load_scenario("scenario1")
        result = run_trial(sc, config(design="tite-dc", max_n=9), rep=0)
        assert result.n_per_dose.sum() <= 9


class TestTiteReducesToCompleteData:
    def test_zero_windows_make_designs_identical(self):
        # with instant outcome resolution nothing is ever pending, so the
        # time-to-event design walks the exact path of its complete-data twin
        sc = load_scenario("scenario3")
        for rep in range(5):
            kwargs = dict(dlt=EndpointSpec(0.25, 0.0),
                          intolerance=EndpointSpec(0.50, 0.0))
            a = run_trial(sc, config(design="tite-boin-dc", **kwargs), rep=rep)
            b = run_trial(sc, config(design="boin-dc", **kwargs), rep=rep)
            assert a.selected == b.selected
            assert np.array_equal(a.n_per_dose, b.n_per_dose)


class TestAggregation:
    def results(self, n=40, seed=0):
        sc = load_scenario("scenario1")
        cfg = config(design="boin-dc")
        return sc, [run_trial(sc, cfg, rep) for rep in range(n)]

    def test_single_replicate_batch_equals_that_replicate(self):
        sc = load_scenario("scenario1")
        cfg = config(design="boin-dc", n_replicates=1)
        oc = run_batch(sc, cfg)
        r = run_trial(sc, cfg, 0)
        expected = np.zeros(5)
        if r.selected:
            expected[r.selected - 1] = 100.0
        assert oc.selection_pct == pytest.approx(expected)
        assert oc.mean_patients == pytest.approx(r.n_per_dose)

    def test_percentages_sum_to_100(self):
        sc, results = self.results()
        oc = aggregate(results, 5)
        assert oc.selection_pct.sum() + oc.none_pct == pytest.approx(100.0)
        assert oc.mean_patients.sum() <= 30.0 + 1e-9

    def test_permutation_invariance(self):
        sc, results = self.results()
        a = aggregate(results, 5)
        b = aggregate(list(reversed(results)), 5)
        assert a.selection_pct == pytest.approx(b.selection_pct)
        assert a.mean_duration_months == pytest.approx(b.mean_duration_months)
        assert a.overdose_pct == pytest.approx(b.overdose_pct)

    def test_json_and_csv_shapes(self):
        sc, results = self.results(n=10)
        oc = aggregate(results, 5)
        doc = oc.to_json()
        assert len(doc["selection_pct"]) == 5
        rows = oc.csv_rows()
        assert rows[0][0] == "metric"
        assert len(rows) == 3


class TestSensitivity:
    def test_empty_variants_give_empty_report(self):
        sc = load_scenario("scenario2")
        assert sensitivity_suite(sc, config(design="boin")) == []

    def test_one_row_per_variant(self):
        sc = load_scenario("scenario2")
        cfg = config(design="boin", n_replicates=3)
        report = sensitivity_suite(
            sc, cfg,
            weight_variants=[(1 / 3, 1 / 3, 1 / 3), (0.8, 0.1, 0.1)],
            accrual_rates=[0.2])
        assert len(report) == 3
        assert report[0]["variant"] == "event_time_weights_r"
        assert report[2]["variant"] == "accrual_rate"
        assert "selection_pct" in report[0]

    def test_slower_accrual_lengthens_trials(self):
        sc = load_scenario("scenario2")
        cfg = config(design="boin", n_replicates=30)
        fast = run_batch(sc, SimConfig(design="boin", n_replicates=30,
                                       seed=0, accrual_rate=0.2))
        slow = run_batch(sc, SimConfig(design="boin", n_replicates=30,
                                       seed=0, accrual_rate=1 / 30))
        assert slow.mean_duration_months > fast.mean_duration_months
