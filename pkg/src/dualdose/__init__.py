"""Dual-criterion phase I dose finding.

Designs that locate the maximum tolerated dose from two safety endpoints,
dose-limiting toxicity and non-DLT intolerance, with real-time decisions
while late outcomes are still pending, plus a Monte Carlo simulator for
operating characteristics and a trial-conduct CLI/HTTP service.
"""

from .bvn import bvn_cdf
from .core import (
    Action,
    Decision,
    DoseGrid,
    Endpoint,
    EndpointSpec,
    EventStatus,
    MissingPattern,
    PatientRecord,
    TrialState,
    TrialStatus,
    apply_elimination,
    classify_pattern,
    suspension_check,
)
from .boindc import (
    BoinBoundaries,
    BoinDcConfig,
    boin_boundaries,
    decide_boindc,
    estimate_pi_hat,
    impute_pending_R,
    impute_pending_T,
    overdose_prob_beta,
    pava_isotonic,
    posterior_mean_pi,
    select_mtd_boindc,
)
from .titedc import (
    CellProbs,
    McmcConfig,
    PosteriorDraws,
    PriorConfig,
    ProbitParams,
    TiteDcConfig,
    cell_probs,
    decide_titedc,
    fit_posterior,
    overdose_prob_titedc,
    predictive_probs,
    select_mtd_titedc,
)
from .simulate import (
    OperatingCharacteristics,
    Scenario,
    SimConfig,
    TrialResult,
    builtin_scenarios,
    generate_patient,
    load_scenario,
    run_batch,
    run_trial,
    sensitivity_suite,
)

__version__ = "0.1.0"
