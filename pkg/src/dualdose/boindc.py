"""Model-assisted dual-criterion engine (TITE-BOIN-DC family).

Interval boundaries per endpoint, fractional single imputation of pending
outcomes, beta-binomial estimates, the overdose elimination rule, and
isotonic-regression MTD selection. The plain DLT-only BOIN comparator is
the same machinery with the intolerance endpoint switched off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betainc

from .core import (
    Action,
    Decision,
    EndpointSpec,
    EventStatus,
    PatientRecord,
    TrialState,
    apply_elimination,
    suspension_check,
)


@dataclass(frozen=True)
class BoinBoundaries:
    """Escalation / de-escalation thresholds for one endpoint."""

    phi: float
    phi1: float
    phi2: float
    lambda_e: float
    lambda_d: float


def boin_boundaries(phi: float, phi1: float | None = None,
                    phi2: float | None = None) -> BoinBoundaries:
    """Optimal interval boundaries for target ``phi``.

    Defaults phi1 = 0.6 phi and phi2 = 1.4 phi.
    """
    if phi1 is None:
        phi1 = 0.6 * phi
    if phi2 is None:
        phi2 = 1.4 * phi
    if not 0.0 < phi1 < phi < phi2 < 1.0:
        raise ValueError("need 0 < phi1 < phi < phi2 < 1")
    lambda_e = (math.log((1 - phi1) / (1 - phi))
                / math.log(phi * (1 - phi1) / (phi1 * (1 - phi))))
    lambda_d = (math.log((1 - phi) / (1 - phi2))
                / math.log(phi2 * (1 - phi) / (phi * (1 - phi2))))
    return BoinBoundaries(phi, phi1, phi2, lambda_e, lambda_d)


def posterior_mean_pi(m: int, n: int, alpha0: float, beta0: float) -> float:
    """Posterior mean of an event rate under Beta(alpha0, beta0) prior."""
    if not 0 <= m <= n:
        raise ValueError("need 0 <= m <= n")
    return (m + alpha0) / (n + alpha0 + beta0)


def impute_pending_R(pi_hat: float, t: float, window: float) -> float:
    """Expected value of a pending intolerance outcome after follow-up t."""
    if not 0.0 <= t < window:
        raise ValueError("imputation requires 0 <= t < window")
    surv = pi_hat * (1.0 - t / window)
    return surv / (surv + (1.0 - pi_hat))


def impute_pending_T(pi_hat: float, t: float, window: float,
                     approximate: bool = True) -> float:
    """Expected value of a pending DLT outcome after follow-up t.

    The approximate form drops the survival term in the denominator; it is
    conservative (never below the exact value) and adequate for the small
    DLT rates typical of phase I trials.
    """
    if not 0.0 <= t < window:
        raise ValueError("imputation requires 0 <= t < window")
    num = pi_hat * (1.0 - t / window)
    if approximate:
        return num / (1.0 - pi_hat)
    return num / (num + (1.0 - pi_hat))


@dataclass
class DoseTally:
    """Per-dose, per-endpoint observation counts at a decision time."""

    n: int = 0
    events_t: int = 0
    events_r: int = 0
    resolved_t: int = 0  # DLT status known (event or window elapsed)
    resolved_r: int = 0
    pending_t: list[float] = field(default_factory=list)  # follow-up times
    pending_r: list[float] = field(default_factory=list)


def tally_dose(patients: list[PatientRecord], level: int, now: float,
               window_t: float, window_r: float) -> DoseTally:
    tally = DoseTally()
    for p in patients:
        if p.dose_level != level:
            continue
        tally.n += 1
        if p.dlt.status is EventStatus.PENDING:
            tally.pending_t.append(min(now - p.enroll_time, window_t))
        else:
            tally.resolved_t += 1
            if p.dlt.status is EventStatus.YES:
                tally.events_t += 1
        if p.intolerance.status is EventStatus.PENDING:
            tally.pending_r.append(p.follow_up(now, window_r))
        else:
            tally.resolved_r += 1
            if p.intolerance.status is EventStatus.YES:
                tally.events_r += 1
    return tally


def estimate_pi_hat(tally: DoseTally, spec: EndpointSpec, endpoint: str,
                    approximate_dlt: bool = True) -> float:
    """Imputation-completed sample mean of the event rate at one dose.

    The plug-in rate for pending patients is the beta-binomial posterior
    mean for the observed events out of all n patients at the dose
    (prior effective sample size 1), so pending patients count toward
    the denominator even though their outcome is still open.
    """
    if tally.n < 1:
        raise ValueError("no patients at this dose")
    alpha0 = 0.5 * spec.target
    beta0 = 1.0 - alpha0
    if endpoint == "T":
        m, pending = tally.events_t, tally.pending_t
    elif endpoint == "R":
        m, pending = tally.events_r, tally.pending_r
    else:
        raise ValueError("endpoint must be 'T' or 'R'")
    plug_in = posterior_mean_pi(m, tally.n, alpha0, beta0)
    imputed = 0.0
    for t in pending:
        if endpoint == "T":
            imputed += impute_pending_T(plug_in, t, spec.window, approximate_dlt)
        else:
            imputed += impute_pending_R(plug_in, t, spec.window)
    return (m + imputed) / tally.n


def overdose_prob_beta(m: int, n: int, phi: float) -> float:
    """Pr(rate > phi) under Beta(1 + m, 1 + n - m) (vague Beta(1,1) prior)."""
    if not 0 <= m <= n or n < 1:
        raise ValueError("need 0 <= m <= n and n >= 1")
    return 1.0 - float(betainc(1 + m, 1 + n - m, phi))


def pava_isotonic(values, weights) -> np.ndarray:
    """Weighted least-squares projection onto the nondecreasing cone.

    Pool-adjacent-violators: pooled blocks carry their weighted means.
    """
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if values.shape != weights.shape or values.ndim != 1:
        raise ValueError("values and weights must be equal-length vectors")
    if np.any(weights <= 0):
        raise ValueError("weights must be positive")
    # blocks as (mean, weight, size)
    blocks: list[list[float]] = []
    for v, w in zip(values, weights):
        blocks.append([v, w, 1])
        while len(blocks) > 1 and blocks[-2][0] > blocks[-1][0]:
            v1, w1, c1 = blocks.pop()
            v0, w0, c0 = blocks.pop()
            w = w0 + w1
            blocks.append([(v0 * w0 + v1 * w1) / w, w, c0 + c1])
    out = np.empty_like(values)
    pos = 0
    for v, _, c in blocks:
        out[pos:pos + c] = v
        pos += c
    return out


@dataclass(frozen=True)
class BoinDcConfig:
    """Design parameters for the model-assisted engine."""

    dlt: EndpointSpec
    intolerance: EndpointSpec
    phi1_t: float | None = None
    phi2_t: float | None = None
    phi1_r: float | None = None
    phi2_r: float | None = None
    elimination_threshold: float = 0.95
    elimination_min_n: int = 3
    approximate_dlt_imputation: bool = True
    dlt_only: bool = False  # plain BOIN comparator
    mtd_tie_break: str = "directional"  # or "low" (lowest tied dose)

    @property
    def boundaries_t(self) -> BoinBoundaries:
        return boin_boundaries(self.dlt.target, self.phi1_t, self.phi2_t)

    @property
    def boundaries_r(self) -> BoinBoundaries:
        return boin_boundaries(self.intolerance.target, self.phi1_r, self.phi2_r)


def elimination_verdicts(state: TrialState, config: BoinDcConfig) -> list[bool]:
    """Per-dose overdose verdicts from the Beta(1,1) tail rule.

    Counts are observed events over all patients treated at the dose.
    Restricting the denominator to resolved patients would bias the rate
    upward mid-trial: with uniform event times, patients without an event
    only resolve once the full window has elapsed, so early resolvers are
    disproportionately those with events.
    """
    verdicts = [False] * state.grid.n_levels
    for level in range(1, state.grid.n_levels + 1):
        tally = tally_dose(state.patients, level, state.clock,
                           config.dlt.window, config.intolerance.window)
        if tally.n < config.elimination_min_n:
            continue
        if (overdose_prob_beta(tally.events_t, tally.n, config.dlt.target)
                > config.elimination_threshold):
            verdicts[level - 1] = True
        if (not config.dlt_only
                and overdose_prob_beta(tally.events_r, tally.n,
                                       config.intolerance.target)
                > config.elimination_threshold):
            verdicts[level - 1] = True
    return verdicts


def decide_boindc(state: TrialState, config: BoinDcConfig,
                  check_suspension: bool = True) -> tuple[Decision, TrialState]:
    """One interim decision; returns it with the post-elimination state."""
    if check_suspension and suspension_check(state, dlt_only=config.dlt_only):
        at_dose = state.patients_at(state.current_level)
        pending = sum((p.dlt.status is EventStatus.PENDING)
                      + (not config.dlt_only
                         and p.intolerance.status is EventStatus.PENDING)
                      for p in at_dose)
        per_patient = 1 if config.dlt_only else 2
        return (Decision(Action.SUSPEND, None, {
            "pending": pending,
            "resolved": per_patient * len(at_dose) - pending,
        }), state)

    state = apply_elimination(state, elimination_verdicts(state, config))
    if state.status.value == "terminated":
        return Decision(Action.TERMINATE, None,
                        {"reason": "lowest dose eliminated"}), state

    jc = state.current_level
    n_levels = state.grid.n_levels
    tally = tally_dose(state.patients, jc, state.clock,
                       config.dlt.window, config.intolerance.window)
    bt = config.boundaries_t
    pi_t = estimate_pi_hat(tally, config.dlt, "T",
                           config.approximate_dlt_imputation)
    rationale: dict = {
        "pi_hat_T": pi_t, "lambda_Te": bt.lambda_e, "lambda_Td": bt.lambda_d,
    }

    def endpoint_target(pi_hat: float, b: BoinBoundaries) -> int:
        if pi_hat <= b.lambda_e and jc < n_levels:
            return jc + 1
        if pi_hat >= b.lambda_d and jc > 1:
            return jc - 1
        return jc

    j_star = endpoint_target(pi_t, bt)
    if not config.dlt_only:
        br = config.boundaries_r
        pi_r = estimate_pi_hat(tally, config.intolerance, "R")
        rationale.update({
            "pi_hat_R": pi_r, "lambda_Re": br.lambda_e, "lambda_Rd": br.lambda_d,
        })
        j_star = min(j_star, endpoint_target(pi_r, br))

    if j_star > jc and state.eliminated[j_star - 1]:
        j_star = jc  # escalation capped by elimination
    if j_star > jc:
        action = Action.ESCALATE
    elif j_star < jc:
        action = Action.DE_ESCALATE
    else:
        action = Action.STAY
    rationale["rule"] = "interval comparison at the current dose"
    return Decision(action, j_star, rationale), state


def _argmin_near_target(estimates: np.ndarray, phi: float,
                        candidates: list[int], tie_break: str) -> int:
    """1-based level whose estimate is closest to the target."""
    if tie_break == "directional":
        # A tiny dose-increasing perturbation makes tied below-target
        # estimates resolve to the highest tied dose and at-or-above ties
        # to the lowest, without affecting non-tied comparisons.
        dist = {j: abs(estimates[j - 1] + j * 1e-10 - phi) for j in candidates}
        return min(candidates, key=lambda j: dist[j])
    dist = {j: abs(estimates[j - 1] - phi) for j in candidates}
    best = min(dist.values())
    return min(j for j in candidates if dist[j] <= best + 1e-12)


def select_mtd_boindc(state: TrialState, config: BoinDcConfig) -> int | None:
    """Final MTD from isotonic event-rate estimates on complete data."""
    candidates = []
    values_t, values_r, weights = [], [], []
    for level in range(1, state.grid.n_levels + 1):
        tally = tally_dose(state.patients, level, math.inf,
                           config.dlt.window, config.intolerance.window)
        if tally.n == 0:
            continue
        values_t.append(tally.events_t / tally.n)
        values_r.append(tally.events_r / tally.n)
        weights.append(tally.n)
        if not state.eliminated[level - 1]:
            candidates.append(level)
    if not candidates:
        return None
    tried = [level for level in range(1, state.grid.n_levels + 1)
             if any(p.dose_level == level for p in state.patients)]
    iso_t = pava_isotonic(values_t, weights)
    full_t = np.full(state.grid.n_levels, np.nan)
    full_t[[j - 1 for j in tried]] = iso_t
    j_star = _argmin_near_target(full_t, config.dlt.target, candidates,
                                 config.mtd_tie_break)
    if not config.dlt_only:
        iso_r = pava_isotonic(values_r, weights)
        full_r = np.full(state.grid.n_levels, np.nan)
        full_r[[j - 1 for j in tried]] = iso_r
        j_star = min(j_star, _argmin_near_target(
            full_r, config.intolerance.target, candidates, config.mtd_tie_break))
    return j_star


def decision_table(config: BoinDcConfig, max_n: int = 12) -> list[dict]:
    """Protocol-ready decision rows for complete data at one dose.

    For each number treated (1..max_n) and each event count, the interval
    action and whether the elimination rule fires, per endpoint.
    """
    rows = []
    for endpoint, spec, bounds in (
        ("DLT", config.dlt, config.boundaries_t),
        ("intolerance", config.intolerance, config.boundaries_r),
    ):
        if config.dlt_only and endpoint == "intolerance":
            continue
        for n in range(1, max_n + 1):
            for m in range(0, n + 1):
                rate = m / n
                if rate <= bounds.lambda_e:
                    action = "escalate"
                elif rate >= bounds.lambda_d:
                    action = "de-escalate"
                else:
                    action = "stay"
                eliminate = (n >= config.elimination_min_n
                             and overdose_prob_beta(m, n, spec.target)
                             > config.elimination_threshold)
                rows.append({
                    "endpoint": endpoint, "n_treated": n, "n_events": m,
                    "action": action, "eliminate": eliminate,
                })
    return rows
