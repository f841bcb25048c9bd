"""
Walking one cohort at a time through the dual-endpoint interval design
=====================================================================

A phase I trial tracks two binary safety endpoints per patient: a
dose-limiting toxicity (DLT, assessed over 21 days, target rate 25%) and a
broader intolerance endpoint (assessed over 63 days, target rate 50%). The
interval design compares per-dose event-rate estimates against fixed
escalation/de-escalation boundaries; the recommended dose is governed by
whichever endpoint is more restrictive.

This script enrolls a few cohorts by hand and prints the decision the
design makes after each one, including how pending (not-yet-resolved)
outcomes are imputed from partial follow-up.
"""

from dualdose.boindc import BoinDcConfig, decide_boindc, decision_table
from dualdose.core import (
    EndpointSpec,
    NO_EVENT,
    PENDING,
    DoseGrid,
    PatientRecord,
    TrialState,
    observed_yes,
)

config = BoinDcConfig(dlt=EndpointSpec(0.25, 21.0),
                      intolerance=EndpointSpec(0.50, 63.0))

# The design is boundary-based: these tables are all a study team needs at
# the bedside. lambda_e (escalate below) and lambda_d (de-escalate above)
# come from the optimal-interval construction around each target rate.
print("decision boundaries (first few rows):")
for row in decision_table(config, max_n=6)[:8]:
    print("  ", row)

grid = DoseGrid.equally_spaced(5)

# --- Cohort 1: three patients at dose 1, everyone sails through ----------
patients = [
    PatientRecord(id=f"c1_{i}", dose_level=1, enroll_time=0.0,
                  dlt=NO_EVENT, intolerance=NO_EVENT)
    for i in range(3)
]
state = TrialState(grid=grid, patients=patients, current_level=1, clock=63.0)
decision, _ = decide_boindc(state, config)
print(f"\nafter a clean cohort at dose 1: {decision.action.value} "
      f"-> dose {decision.next_level}")

# --- Cohort 2: at dose 2, one DLT and one intolerance event --------------
patients += [
    PatientRecord(id="c2_0", dose_level=2, enroll_time=63.0,
                  dlt=observed_yes(10.0), intolerance=observed_yes(10.0)),
    PatientRecord(id="c2_1", dose_level=2, enroll_time=63.0,
                  dlt=NO_EVENT, intolerance=observed_yes(40.0)),
    PatientRecord(id="c2_2", dose_level=2, enroll_time=63.0,
                  dlt=NO_EVENT, intolerance=NO_EVENT),
]
state = TrialState(grid=grid, patients=patients, current_level=2, clock=126.0)
decision, _ = decide_boindc(state, config)
print(f"after 1/3 DLTs and 2/3 intolerance at dose 2: {decision.action.value} "
      f"-> dose {decision.next_level}")

# --- Same cohort, but seen mid-follow-up ---------------------------------
# At day 30 of cohort 2's follow-up the third patient's DLT window (21
# days) has closed event-free, but the 63-day intolerance window is still
# open. The design imputes the pending outcome as a fractional event based
# on survived follow-up, so the trial can act without waiting the full 63
# days. (If BOTH endpoints were pending for too many patients, accrual
# would suspend instead — try setting dlt=PENDING below to see it.)
partial = patients[:3] + [
    PatientRecord(id="c2_0", dose_level=2, enroll_time=63.0,
                  dlt=observed_yes(10.0), intolerance=observed_yes(10.0)),
    PatientRecord(id="c2_1", dose_level=2, enroll_time=63.0,
                  dlt=NO_EVENT, intolerance=observed_yes(40.0)),
    PatientRecord(id="c2_2", dose_level=2, enroll_time=63.0,
                  dlt=NO_EVENT, intolerance=PENDING),
]
state = TrialState(grid=grid, patients=partial, current_level=2, clock=93.0)
decision, _ = decide_boindc(state, config)
print(f"same cohort at day 30 of follow-up: {decision.action.value} "
      f"-> dose {decision.next_level}")
print(f"  rationale: {decision.rationale}")
