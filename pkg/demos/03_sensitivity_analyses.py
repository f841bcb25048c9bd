"""
Stress-testing the design: event timing and accrual speed
=========================================================

Two robustness questions come up in every design review:

1. The fractional imputation of pending outcomes assumes event times are
   roughly uniform over the observation window. What happens when events
   cluster late (e.g. cumulative intolerance that only shows in the third
   treatment cycle) or early?

2. The time-to-event machinery exists to cope with fast accrual, where
   new patients arrive before earlier outcomes resolve. How do the
   operating characteristics move as accrual slows from six patients per
   month to one?

``sensitivity_suite`` re-runs the same seeded simulation under controlled
perturbations of the data-generating process, leaving the design itself
untouched.
"""

from dualdose.core import DAYS_PER_MONTH
from dualdose.simulate import SimConfig, load_scenario, sensitivity_suite

scenario = load_scenario("scenario2")
config = SimConfig(design="tite-boin-dc", n_replicates=200, seed=7)

# Each weight triple splits the event-time mass across the three 21-day
# cycles of the intolerance window. (1/3, 1/3, 1/3) is uniform; the later
# triples push events into the last cycle (late-onset intolerance) or the
# first (acute intolerance).
weights = [(1 / 3, 1 / 3, 1 / 3),
           (1 / 7, 2 / 7, 4 / 7),
           (1 / 10, 1 / 10, 8 / 10),
           (8 / 10, 1 / 10, 1 / 10)]
accrual = [6 / DAYS_PER_MONTH, 2 / DAYS_PER_MONTH, 1 / DAYS_PER_MONTH]

report = sensitivity_suite(scenario, config,
                           weight_variants=weights, accrual_rates=accrual)

true_mtd = scenario.true_mtd
print(f"scenario: {scenario.name}, true MTD = dose {true_mtd}\n")
print(f"{'variant':42s} {'PCS%':>6s} {'overdose%':>9s} {'months':>7s}")
for row in report:
    if row["variant"] == "accrual_rate":
        label = f"accrual = {row['value'] * DAYS_PER_MONTH:.0f}/month"
    else:
        label = ("cycle weights = ("
                 + ", ".join(f"{w:.2f}" for w in row["value"]) + ")")
    pcs = row["selection_pct"][true_mtd - 1]
    print(f"{label:42s} {pcs:6.1f} {row['overdose_pct']:9.1f} "
          f"{row['mean_duration_months']:7.1f}")

print("""
What to look for: correct-selection stays within a few points across all
event-time patterns -- the imputation is approximate, not load-bearing.
Late-clustered events do push a few more patients above the MTD before the
signal arrives, which is the expected price of acting early. Slowing
accrual barely moves selection but stretches the calendar time roughly in
proportion, because with sparse arrivals most outcomes resolve before the
next cohort anyway.
""")
