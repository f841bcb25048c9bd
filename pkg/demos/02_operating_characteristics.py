"""
Comparing designs by simulated operating characteristics
========================================================

The practical questions for a dose-finding design are: how often does it
select the right dose, where do patients end up being treated, how often
are they treated above the true maximum tolerated dose, and how long does
the trial take? This script runs seeded simulations of several designs on
one benchmark scenario and prints those summaries side by side.

Designs compared here:

- ``boin``          DLT-only interval design (ignores the second endpoint)
- ``boin-dc``       dual-endpoint interval design, complete-data version
                    (waits for every outcome to resolve before deciding)
- ``tite-boin-dc``  dual-endpoint interval design with fractional
                    imputation of pending outcomes (no waiting)

The trade-off to look for: the complete-data design and the time-to-event
design make near-identical selections, but the time-to-event version
finishes the trial many months sooner because it only waits out the
63-day intolerance window when too much of the data at the current dose
is still unresolved.
"""

import numpy as np

from dualdose.simulate import SimConfig, load_scenario, run_batch

REPS = 200  # enough for a stable qualitative picture; bump for publication
scenario = load_scenario("scenario1")
print(f"scenario: {scenario.name}, true MTD = dose {scenario.true_mtd}")
print(f"true DLT rates:         {scenario.dlt_probs}")
print(f"true intolerance rates: {scenario.intol_probs}\n")

header = f"{'design':14s} {'selection % by dose':38s} {'none':>5s} " \
         f"{'overdose%':>9s} {'months':>7s}"
print(header)
print("-" * len(header))
for design in ("boin", "boin-dc", "tite-boin-dc"):
    oc = run_batch(scenario, SimConfig(design=design, n_replicates=REPS,
                                       seed=2026))
    sel = " ".join(f"{x:6.1f}" for x in oc.selection_pct)
    print(f"{design:14s} {sel:38s} {oc.none_pct:5.1f} "
          f"{oc.overdose_pct:9.1f} {oc.mean_duration_months:7.1f}")

print("""
Reading the table: the DLT-only design keeps escalating because DLTs are
rare at every dose here -- it routinely lands above the dose that patients
can actually tolerate for a full treatment course. Both dual-endpoint
designs concentrate selection on the true MTD; the time-to-event variant
does so in roughly a third less calendar time than the complete-data
variant.
""")

# Per-dose patient allocation for the time-to-event design: most patients
# should be treated at or adjacent to the true MTD.
oc = run_batch(scenario, SimConfig(design="tite-boin-dc", n_replicates=REPS,
                                   seed=2026))
alloc = np.asarray(oc.mean_patients)
print("mean patients per dose (tite-boin-dc):",
      " ".join(f"{x:5.2f}" for x in alloc))
print(f"treated at/below true MTD: "
      f"{100 * alloc[:scenario.true_mtd].sum() / alloc.sum():.0f}%")
