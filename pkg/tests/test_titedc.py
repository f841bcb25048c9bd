import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from dualdose.core import (
    NO_EVENT,
    Action,
    DoseGrid,
    EndpointSpec,
    MissingPattern,
    PatientRecord,
    TrialState,
    observed_yes,
)
from dualdose.titedc import (
    CellProbs,
    McmcConfig,
    PosteriorDraws,
    PriorConfig,
    ProbitParams,
    TiteDcConfig,
    cell_probs,
    decide_titedc,
    elimination_verdicts,
    fit_posterior,
    overdose_prob_titedc,
    predictive_probs,
    select_mtd_titedc,
)

GRID5 = DoseGrid.equally_spaced(5)
CONFIG = TiteDcConfig(dlt=EndpointSpec(0.25, 21.0),
                      intolerance=EndpointSpec(0.50, 63.0))


class StubDraws(PosteriorDraws):
    """Posterior draws with directly specified event-rate samples."""

    def __init__(self, pi_t, pi_r, grid=GRID5):
        self._pi_t = np.atleast_2d(np.asarray(pi_t, float))
        self._pi_r = np.atleast_2d(np.asarray(pi_r, float))
        super().__init__(params=np.zeros((self._pi_t.shape[0], 5)), grid=grid)

    @property
    def pi_t_draws(self):
        return self._pi_t

    @property
    def pi_r_draws(self):
        return self._pi_r


class TestProbitParams:
    def test_negative_slope_rejected(self):
        with pytest.raises(ValueError):
            ProbitParams(0.0, -0.1, 0.0, 1.0, 0.3)

    def test_rho_range(self):
        with pytest.raises(ValueError):
            ProbitParams(0.0, 1.0, 0.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            ProbitParams(0.0, 1.0, 0.0, 1.0, -0.2)


class TestCellProbs:
    def test_symmetric_independent_quarters(self):
        cells = cell_probs(ProbitParams(0, 0, 0, 0, 0.0), 1.0)
        assert cells.as_tuple() == pytest.approx((0.25,) * 4, abs=1e-10)

    def test_independence_factorizes(self):
        params = ProbitParams(-0.5, 0.8, 0.2, 0.3, 0.0)
        cells = cell_probs(params, 0.6)
        mu_t = -0.5 + 0.8 * 0.6
        mu_r = 0.2 + 0.3 * 0.6
        assert cells.p11 == pytest.approx(norm.cdf(mu_t) * norm.cdf(mu_r),
                                          abs=1e-10)

    def test_against_simulation_oracle(self):
        params = ProbitParams(-1.0, 0.5, 0.0, 1.0, 0.4)
        cells = cell_probs(params, 1.0)
        rng = np.random.default_rng(11)
        n = 10**6
        z_t = rng.standard_normal(n)
        z_r = 0.4 * z_t + np.sqrt(1 - 0.4**2) * rng.standard_normal(n)
        y_t = (z_t + (-1.0 + 0.5)) >= 0
        y_r = (z_r + (0.0 + 1.0)) >= 0
        mc = np.array([
            np.mean(~y_t & ~y_r), np.mean(~y_t & y_r),
            np.mean(y_t & ~y_r), np.mean(y_t & y_r),
        ])
        se = np.sqrt(mc * (1 - mc) / n)
        for got, want, s in zip(cells.as_tuple(), mc, se):
            assert got == pytest.approx(want, abs=max(3 * s, 1e-4))

    def test_cells_sum_to_one_and_marginals_match(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            params = ProbitParams(rng.normal(), abs(rng.normal()),
                                  rng.normal(), abs(rng.normal()),
                                  rng.uniform(0, 0.99))
            d = rng.uniform(0.05, 1.0)
            c = cell_probs(params, d)
            assert sum(c.as_tuple()) == pytest.approx(1.0, abs=1e-10)
            assert c.p10 + c.p11 == pytest.approx(
                norm.cdf(params.alpha_t + params.beta_t * d), abs=1e-7)
            assert c.p01 + c.p11 == pytest.approx(
                norm.cdf(params.alpha_r + params.beta_r * d), abs=1e-7)


@st.composite
def random_cells(draw):
    raw = [draw(st.floats(0.01, 1.0)) for _ in range(4)]
    total = sum(raw)
    return CellProbs(*[x / total for x in raw])


class TestPredictiveProbs:
    def test_no_followup_reduces_to_cells(self):
        cells = CellProbs(0.4, 0.3, 0.2, 0.1)
        out = predictive_probs(cells, 0.0, 21.0, 63.0,
                               MissingPattern.BOTH_PENDING)
        assert out[(0, 0)] == pytest.approx(0.4)
        assert out[(0, 1)] == pytest.approx(0.3)
        assert out[(1, 0)] == pytest.approx(0.2)
        assert out[(1, 1)] == pytest.approx(0.1)

    def test_observed_dlt_pending_intolerance_arithmetic(self):
        cells = CellProbs(0.3, 0.3, 0.2, 0.2)
        out = predictive_probs(cells, 31.5, 21.0, 63.0,
                               MissingPattern.T_OBS_R_PENDING,
                               observed_value=1)
        # halfway through the window the event cell is halved:
        # (0.5 * 0.2) / (0.5 * 0.2 + 0.2)
        assert out[(1, 1)] == pytest.approx(1 / 3)
        assert out[(1, 0)] == pytest.approx(2 / 3)

    def test_degenerate_cells(self):
        cells = CellProbs(1.0, 0.0, 0.0, 0.0)
        out = predictive_probs(cells, 5.0, 21.0, 63.0,
                               MissingPattern.BOTH_PENDING)
        assert out[(0, 0)] == pytest.approx(1.0)

    def test_pattern_time_preconditions(self):
        cells = CellProbs(0.25, 0.25, 0.25, 0.25)
        with pytest.raises(ValueError):
            predictive_probs(cells, 21.0, 21.0, 63.0,
                             MissingPattern.BOTH_PENDING)
        with pytest.raises(ValueError):
            predictive_probs(cells, 63.0, 21.0, 63.0,
                             MissingPattern.T_OBS_R_PENDING, observed_value=0)
        with pytest.raises(ValueError):
            predictive_probs(cells, 5.0, 21.0, 63.0,
                             MissingPattern.T_OBS_R_PENDING)
        with pytest.raises(ValueError):
            predictive_probs(cells, 5.0, 21.0, 63.0,
                             MissingPattern.BOTH_OBSERVED)

    @settings(max_examples=500, deadline=None)
    @given(cells=random_cells(), t=st.floats(0.0, 20.99),
           pattern=st.sampled_from([MissingPattern.BOTH_PENDING,
                                    MissingPattern.T_OBS_R_PENDING,
                                    MissingPattern.T_PENDING_R_OBS]),
           observed=st.integers(0, 1))
    def test_normalization(self, cells, t, pattern, observed):
        kwargs = {}
        if pattern is not MissingPattern.BOTH_PENDING:
            kwargs["observed_value"] = observed
        out = predictive_probs(cells, t, 21.0, 63.0, pattern, **kwargs)
        assert sum(out.values()) == pytest.approx(1.0, abs=1e-10)
        assert all(v >= 0 for v in out.values())

    @settings(max_examples=200, deadline=None)
    @given(cells=random_cells(), t=st.floats(0.0, 20.0),
           dt=st.floats(0.01, 0.9))
    def test_event_probability_shrinks_with_followup(self, cells, t, dt):
        early = predictive_probs(cells, t, 21.0, 63.0,
                                 MissingPattern.BOTH_PENDING)
        late = predictive_probs(cells, t + dt, 21.0, 63.0,
                                MissingPattern.BOTH_PENDING)
        assert late[(0, 0)] >= early[(0, 0)] - 1e-12


def mcmc(retained=2000, burn_in=500, seed=0):
    return McmcConfig(warm=200, burn_in=burn_in, retained=retained, seed=seed)


def complete_patient(pid, level, y_t, y_r):
    return PatientRecord(
        id=pid, dose_level=level, enroll_time=0.0,
        dlt=observed_yes(10.0) if y_t else NO_EVENT,
        intolerance=observed_yes(30.0) if y_r else NO_EVENT)


class TestFitPosterior:
    def test_prior_recovery_with_no_data(self):
        draws = fit_posterior([], GRID5, CONFIG, mcmc(retained=4000), now=0.0)
        rng = np.random.default_rng(123)
        n = 10**5
        prior = PriorConfig()
        alpha = rng.normal(0, prior.intercept_sd, n)
        beta = np.abs(rng.normal(0, prior.slope_sd, n))
        oracle_pi = norm.cdf(alpha + beta * 1.0)
        se = oracle_pi.std() / np.sqrt(4000)  # chain MC error dominates
        # autocorrelation inflates the effective error; allow a wide band
        assert draws.pi_hat_t[-1] == pytest.approx(
            oracle_pi.mean(), abs=10 * se + 0.01)
        assert abs(draws.params[:, 4].mean() - 0.5) < 0.05

    def test_consistency_with_large_complete_data(self):
        truth = ProbitParams(-1.2, 0.9, -0.4, 1.1, 0.3)
        rng = np.random.default_rng(7)
        patients = []
        for level, d in enumerate(GRID5.standardized, start=1):
            p_t = norm.cdf(truth.alpha_t + truth.beta_t * d)
            p_r = norm.cdf(truth.alpha_r + truth.beta_r * d)
            for i in range(300):
                patients.append(complete_patient(
                    f"p{level}_{i}", level,
                    int(rng.random() < p_t), int(rng.random() < p_r)))
        draws = fit_posterior(patients, GRID5, CONFIG, mcmc(), now=1e9)
        for j, d in enumerate(GRID5.standardized):
            assert draws.pi_hat_t[j] == pytest.approx(
                norm.cdf(truth.alpha_t + truth.beta_t * d), abs=0.05)
            assert draws.pi_hat_r[j] == pytest.approx(
                norm.cdf(truth.alpha_r + truth.beta_r * d), abs=0.05)

    def test_seed_determinism(self):
        patients = [complete_patient(f"p{i}", 1 + i % 3, i % 4 == 0, i % 2)
                    for i in range(12)]
        a = fit_posterior(patients, GRID5, CONFIG, mcmc(seed=9), now=100.0)
        b = fit_posterior(patients, GRID5, CONFIG, mcmc(seed=9), now=100.0)
        assert np.array_equal(a.params, b.params)

    def test_chain_noise_small_with_complete_data(self):
        # with nothing pending the augmentation step is vacuous; two seeds
        # differ only by Monte Carlo noise
        rng = np.random.default_rng(21)
        patients = [complete_patient(f"p{i}", 1 + i % 5,
                                     int(rng.random() < 0.2),
                                     int(rng.random() < 0.4))
                    for i in range(30)]
        a = fit_posterior(patients, GRID5, CONFIG, mcmc(seed=1), now=1e9)
        b = fit_posterior(patients, GRID5, CONFIG, mcmc(seed=2), now=1e9)
        for j in range(5):
            se = (a.pi_t_draws[:, j].std() + b.pi_t_draws[:, j].std()) / 2
            se_mean = 5 * se / np.sqrt(a.n_draws)  # generous autocorr factor
            assert abs(a.pi_hat_t[j] - b.pi_hat_t[j]) < max(se_mean, 0.02)

    def test_monotone_rates_in_every_draw(self):
        patients = [complete_patient(f"p{i}", 1 + i % 3, i % 5 == 0, i % 3 == 0)
                    for i in range(15)]
        draws = fit_posterior(patients, GRID5, CONFIG,
                              mcmc(retained=500), now=200.0)
        assert np.all(np.diff(draws.pi_t_draws, axis=1) >= -1e-12)
        assert np.all(np.diff(draws.pi_r_draws, axis=1) >= -1e-12)
        assert np.all((draws.params[:, [1, 3]]) >= 0)
        assert np.all((draws.params[:, 4] >= 0) & (draws.params[:, 4] <= 1))


class TestOverdoseProb:
    def test_counting(self):
        pi = np.full((100, 5), 0.1)
        pi[:96, 2] = 0.9
        draws = StubDraws(pi_t=pi, pi_r=np.full((100, 5), 0.1))
        assert overdose_prob_titedc(draws, 3, 0.25, "T") == pytest.approx(0.96)
        assert overdose_prob_titedc(draws, 1, 0.25, "T") == pytest.approx(0.0)
        verdicts = elimination_verdicts(draws, CONFIG)
        assert verdicts == [False, False, True, False, False]

    def test_all_above_gives_one(self):
        draws = StubDraws(pi_t=np.full((50, 5), 0.9),
                          pi_r=np.full((50, 5), 0.1))
        assert overdose_prob_titedc(draws, 2, 0.25, "T") == pytest.approx(1.0)


def scenario1_draws():
    return StubDraws(pi_t=(0.05, 0.10, 0.15, 0.20, 0.25),
                     pi_r=(0.10, 0.30, 0.50, 0.70, 0.90))


class TestDecide:
    def state(self, level, clock=100.0):
        patients = [complete_patient(f"p{i}", level, 0, 0) for i in range(3)]
        return TrialState(grid=GRID5, patients=patients, current_level=level,
                          clock=clock)

    def test_moves_one_step_toward_joint_target(self):
        decision, _ = decide_titedc(self.state(2), scenario1_draws(), CONFIG)
        assert decision.action is Action.ESCALATE
        assert decision.next_level == 3
        assert decision.rationale["j_star"] == 3

    def test_fixed_point_stays(self):
        decision, _ = decide_titedc(self.state(3), scenario1_draws(), CONFIG)
        assert decision.action is Action.STAY
        assert decision.next_level == 3

    def test_descends_toward_target(self):
        # posterior uncertain enough that elimination stays quiet
        pi_t = np.tile((0.05, 0.10, 0.15, 0.20, 0.25), (2, 1))
        pi_r = np.array([(0.05, 0.25, 0.45, 0.45, 0.50),
                         (0.15, 0.35, 0.55, 0.65, 0.70)])
        draws = StubDraws(pi_t=pi_t, pi_r=pi_r)
        decision, _ = decide_titedc(self.state(5), draws, CONFIG)
        assert decision.action is Action.DE_ESCALATE
        assert decision.next_level == 4

    def test_elimination_pulls_level_down_past_one_step(self):
        # near-degenerate posterior: doses 4-5 are certainly above the
        # intolerance target, so the level drops straight to dose 3
        decision, out = decide_titedc(self.state(5), scenario1_draws(), CONFIG)
        assert out.eliminated == [False, False, False, True, True]
        assert decision.action is Action.STAY
        assert decision.next_level == 3

    def test_cannot_deescalate_below_bottom(self):
        draws = StubDraws(pi_t=(0.5, 0.6, 0.7, 0.8, 0.9),
                          pi_r=(0.1, 0.2, 0.3, 0.4, 0.5))
        # overdose draws would also eliminate; bypass by wide posterior
        pi_t = np.vstack([np.full(5, 0.3), np.full(5, 0.1)])
        draws = StubDraws(pi_t=pi_t, pi_r=np.full((2, 5), 0.49))
        decision, _ = decide_titedc(self.state(1), draws, CONFIG)
        assert decision.action is Action.STAY
        assert decision.next_level == 1

    def test_elimination_blocks_escalation(self):
        pi_t = np.full((100, 5), 0.1)
        pi_t[:98, 3:] = 0.8  # doses 4-5 almost surely above target
        draws = StubDraws(pi_t=pi_t, pi_r=np.full((100, 5), 0.2))
        state = self.state(3)
        decision, out = decide_titedc(state, draws, CONFIG)
        assert out.eliminated == [False, False, False, True, True]
        assert decision.next_level <= 4

    def test_suspension_short_circuits(self):
        patients = [PatientRecord(id=f"p{i}", dose_level=2, enroll_time=95.0)
                    for i in range(3)]
        state = TrialState(grid=GRID5, patients=patients, current_level=2,
                           clock=100.0)
        decision, _ = decide_titedc(state, scenario1_draws(), CONFIG)
        assert decision.action is Action.SUSPEND


class TestSelectMtd:
    def test_scenario1_curves_select_dose_3(self):
        assert select_mtd_titedc(scenario1_draws(), CONFIG, [False] * 5) == 3

    def test_all_eliminated_selects_none(self):
        assert select_mtd_titedc(scenario1_draws(), CONFIG, [True] * 5) is None

    def test_dlt_driven_when_intolerance_never_binds(self):
        config = TiteDcConfig(dlt=EndpointSpec(0.25, 21.0),
                              intolerance=EndpointSpec(0.99, 63.0))
        draws = StubDraws(pi_t=(0.05, 0.15, 0.25, 0.35, 0.45),
                          pi_r=(0.05, 0.10, 0.20, 0.30, 0.40))
        assert select_mtd_titedc(draws, config, [False] * 5) == 3

    def test_eliminated_doses_excluded(self):
        assert select_mtd_titedc(scenario1_draws(), CONFIG,
                                 [False, False, True, True, True]) == 2
