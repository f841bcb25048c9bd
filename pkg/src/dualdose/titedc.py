"""Model-based dual-criterion engine (TITE-DC family).

Bivariate probit dose-response model on latent normal traits, posterior
fitting by Gibbs sampling with data augmentation of pending outcomes, and
the posterior dose-assignment / MTD-selection rules.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from . import _gibbs
from .bvn import bvn_cdf
from .core import (
    Action,
    Decision,
    DoseGrid,
    EndpointSpec,
    EventStatus,
    MissingPattern,
    PatientRecord,
    TrialState,
    apply_elimination,
    classify_pattern,
    suspension_check,
)


@dataclass(frozen=True)
class ProbitParams:
    """Regression coefficients on the probit scale; latent variances are 1."""

    alpha_t: float
    beta_t: float
    alpha_r: float
    beta_r: float
    rho: float

    def __post_init__(self):
        if self.beta_t < 0 or self.beta_r < 0:
            raise ValueError("slopes must be nonnegative")
        if not 0.0 <= self.rho < 1.0:
            raise ValueError("rho must be in [0, 1)")


@dataclass(frozen=True)
class CellProbs:
    """Joint (DLT, intolerance) cell probabilities at one dose."""

    p00: float
    p01: float
    p10: float
    p11: float

    def as_tuple(self):
        return (self.p00, self.p01, self.p10, self.p11)


@dataclass(frozen=True)
class PriorConfig:
    """Prior scales for the probit regression parameters.

    The defaults put the +-1 sd band of the intercept at event
    probabilities 0.006..0.994, and one prior sd of slope moves the
    probability at the top standardized dose to 0.994.
    """

    intercept_sd: float = 2.5
    slope_sd: float = 2.48  # half-normal scale for the nonnegative slopes

    def __post_init__(self):
        if self.intercept_sd <= 0 or self.slope_sd <= 0:
            raise ValueError("prior scales must be positive")


@dataclass(frozen=True)
class McmcConfig:
    warm: int = 200
    burn_in: int = 1000
    retained: int = 2000
    thinning: int = 1
    rho_proposal_sd: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if min(self.burn_in, self.retained, self.thinning) < 1 or self.warm < 0:
            raise ValueError("MCMC counts must be positive")


@dataclass
class PosteriorDraws:
    """Retained parameter samples plus the grid they score against."""

    params: np.ndarray  # (n_draws, 5): alpha_T, beta_T, alpha_R, beta_R, rho
    grid: DoseGrid

    def __post_init__(self):
        if not np.all(np.isfinite(self.params)):
            raise RuntimeError("MCMC produced non-finite parameter draws")

    @property
    def n_draws(self) -> int:
        return self.params.shape[0]

    def _pi(self, alpha_col: int, beta_col: int) -> np.ndarray:
        d = np.asarray(self.grid.standardized)
        mu = (self.params[:, alpha_col:alpha_col + 1]
              + self.params[:, beta_col:beta_col + 1] * d[None, :])
        return ndtr(mu)

    @property
    def pi_t_draws(self) -> np.ndarray:
        return self._pi(0, 1)

    @property
    def pi_r_draws(self) -> np.ndarray:
        return self._pi(2, 3)

    @property
    def pi_hat_t(self) -> np.ndarray:
        return self.pi_t_draws.mean(axis=0)

    @property
    def pi_hat_r(self) -> np.ndarray:
        return self.pi_r_draws.mean(axis=0)


def cell_probs(params: ProbitParams, d_star: float) -> CellProbs:
    """Joint outcome-cell probabilities at standardized dose ``d_star``."""
    mu_t = params.alpha_t + params.beta_t * d_star
    mu_r = params.alpha_r + params.beta_r * d_star
    p11 = bvn_cdf(mu_t, mu_r, params.rho)
    pt = float(ndtr(mu_t))
    pr = float(ndtr(mu_r))
    p10 = max(pt - p11, 0.0)
    p01 = max(pr - p11, 0.0)
    p00 = max(1.0 - pt - pr + p11, 0.0)
    return CellProbs(p00, p01, p10, p11)


def predictive_probs(cells: CellProbs, t: float, window_t: float,
                     window_r: float, pattern: MissingPattern,
                     observed_value: int | None = None) -> dict:
    """Predictive distribution of the pending outcome(s) given follow-up t.

    Event times are taken uniform over their windows and conditionally
    independent, so surviving follow-up t scales each event cell by its
    remaining window fraction. Keys are (y_T, y_R) pairs; values sum to 1.
    """
    p00, p01, p10, p11 = cells.as_tuple()
    if pattern is MissingPattern.BOTH_PENDING:
        if not (t < window_t and t < window_r):
            raise ValueError("both_pending requires t below both windows")
        st = 1.0 - t / window_t
        sr = 1.0 - t / window_r
        q = {(1, 1): st * sr * p11, (1, 0): st * p10,
             (0, 1): sr * p01, (0, 0): p00}
        total = sum(q.values())
        if total <= 0.0:
            return {(0, 0): 1.0, (0, 1): 0.0, (1, 0): 0.0, (1, 1): 0.0}
        return {k: v / total for k, v in q.items()}
    if pattern is MissingPattern.T_OBS_R_PENDING:
        if observed_value is None:
            raise ValueError("observed DLT value required")
        if not t < window_r:
            raise ValueError("pending intolerance requires t < its window")
        sr = 1.0 - t / window_r
        if observed_value == 1:
            denom = sr * p11 + p10
            prob_r = sr * p11 / denom if denom > 0 else 0.0
        else:
            denom = sr * p01 + p00
            prob_r = sr * p01 / denom if denom > 0 else 0.0
        return {(observed_value, 1): prob_r, (observed_value, 0): 1.0 - prob_r}
    if pattern is MissingPattern.T_PENDING_R_OBS:
        if observed_value is None:
            raise ValueError("observed intolerance value required")
        if not t < window_t:
            raise ValueError("pending DLT requires t < its window")
        st = 1.0 - t / window_t
        if observed_value == 1:
            denom = st * p11 + p01
            prob_t = st * p11 / denom if denom > 0 else 0.0
        else:
            denom = st * p10 + p00
            prob_t = st * p10 / denom if denom > 0 else 0.0
        return {(1, observed_value): prob_t, (0, observed_value): 1.0 - prob_t}
    raise ValueError("no pending outcome for pattern both_observed")


@dataclass(frozen=True)
class TiteDcConfig:
    """Design parameters for the model-based engine."""

    dlt: EndpointSpec
    intolerance: EndpointSpec
    priors: PriorConfig = PriorConfig()
    elimination_threshold: float = 0.95


def _encode(patients: list[PatientRecord], grid: DoseGrid, now: float,
            window_t: float, window_r: float):
    d_star = np.asarray(grid.standardized)
    n = len(patients)
    d = np.empty(n)
    y_t = np.empty(n, dtype=np.int8)
    y_r = np.empty(n, dtype=np.int8)
    t_follow = np.empty(n)
    code = {EventStatus.NO: 0, EventStatus.YES: 1, EventStatus.PENDING: -1}
    for i, p in enumerate(patients):
        d[i] = d_star[p.dose_level - 1]
        y_t[i] = code[p.dlt.status]
        y_r[i] = code[p.intolerance.status]
        t_follow[i] = p.follow_up(now, window_r)
    return d, y_t, y_r, t_follow


def fit_posterior(patients: list[PatientRecord], grid: DoseGrid,
                  config: TiteDcConfig, mcmc: McmcConfig,
                  now: float) -> PosteriorDraws:
    """Fit the augmented-data posterior to the data visible at ``now``."""
    d, y_t, y_r, t_follow = _encode(
        patients, grid, now, config.dlt.window, config.intolerance.window)
    params = _gibbs.run_chain(
        d, y_t, y_r, t_follow,
        float(config.dlt.window), float(config.intolerance.window),
        config.priors.intercept_sd, config.priors.slope_sd,
        mcmc.warm, mcmc.burn_in, mcmc.retained, mcmc.thinning,
        mcmc.rho_proposal_sd, mcmc.seed,
    )
    return PosteriorDraws(params=params, grid=grid)


def _joint_target(draws: PosteriorDraws, phi_t: float, phi_r: float,
                  candidates: list[int] | None = None) -> int:
    """Lower of the two per-endpoint closest-to-target doses (1-based)."""
    if candidates is None:
        candidates = list(range(1, draws.grid.n_levels + 1))
    idx = np.array(candidates) - 1
    j_t = candidates[int(np.argmin(np.abs(draws.pi_hat_t[idx] - phi_t)))]
    j_r = candidates[int(np.argmin(np.abs(draws.pi_hat_r[idx] - phi_r)))]
    return min(j_t, j_r)


def overdose_prob_titedc(draws: PosteriorDraws, level: int, phi: float,
                         endpoint: str = "T") -> float:
    """Posterior probability that the event rate at ``level`` exceeds phi."""
    pi = draws.pi_t_draws if endpoint == "T" else draws.pi_r_draws
    return float(np.mean(pi[:, level - 1] > phi))


def elimination_verdicts(draws: PosteriorDraws, config: TiteDcConfig) -> list[bool]:
    verdicts = []
    for level in range(1, draws.grid.n_levels + 1):
        over = (overdose_prob_titedc(draws, level, config.dlt.target, "T")
                > config.elimination_threshold
                or overdose_prob_titedc(draws, level, config.intolerance.target, "R")
                > config.elimination_threshold)
        verdicts.append(over)
    return verdicts


def decide_titedc(state: TrialState, draws: PosteriorDraws,
                  config: TiteDcConfig,
                  check_suspension: bool = True) -> tuple[Decision, TrialState]:
    """One interim decision; returns it with the post-elimination state."""
    if check_suspension and suspension_check(state):
        at_dose = state.patients_at(state.current_level)
        pending = sum(
            classify_pattern(p, state.clock).pending_count()
            for p in at_dose)
        return (Decision(Action.SUSPEND, None, {
            "pending": pending, "resolved": 2 * len(at_dose) - pending,
        }), state)

    state = apply_elimination(state, elimination_verdicts(draws, config))
    if state.status.value == "terminated":
        return Decision(Action.TERMINATE, None,
                        {"reason": "lowest dose eliminated"}), state

    jc = state.current_level
    j_star = _joint_target(draws, config.dlt.target, config.intolerance.target)
    if j_star > jc and jc < state.grid.n_levels and not state.eliminated[jc]:
        action, nxt = Action.ESCALATE, jc + 1
    elif j_star < jc and jc > 1:
        action, nxt = Action.DE_ESCALATE, jc - 1
    else:
        action, nxt = Action.STAY, jc
    rationale = {
        "pi_hat_T": [float(x) for x in draws.pi_hat_t],
        "pi_hat_R": [float(x) for x in draws.pi_hat_r],
        "j_star": j_star,
        "rule": "one step toward the joint closest-to-target dose",
    }
    return Decision(action, nxt, rationale), state


def select_mtd_titedc(draws: PosteriorDraws, config: TiteDcConfig,
                      eliminated: list[bool]) -> int | None:
    """Final MTD from the complete-data posterior, non-eliminated doses only."""
    candidates = [j for j in range(1, draws.grid.n_levels + 1)
                  if not eliminated[j - 1]]
    if not candidates:
        return None
    return _joint_target(draws, config.dlt.target, config.intolerance.target,
                         candidates)
