"""Monte Carlo trial engine.

Generates patient streams under scenario truths (Poisson accrual,
uniform or piecewise-uniform event times), runs any of the five designs
to completion, and aggregates operating characteristics.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np
from joblib import Parallel, delayed
from scipy.special import ndtr

from .boindc import BoinDcConfig, decide_boindc, select_mtd_boindc
from .core import (
    DAYS_PER_MONTH,
    Action,
    DoseGrid,
    EndpointSpec,
    PatientRecord,
    TrialState,
    TrialStatus,
    observed_yes,
    Endpoint,
    EventStatus,
)
from .titedc import (
    McmcConfig,
    PriorConfig,
    TiteDcConfig,
    decide_titedc,
    fit_posterior,
    select_mtd_titedc,
)

DESIGNS = ("tite-dc", "tite-boin-dc", "dc", "boin-dc", "boin")
MODEL_BASED = ("tite-dc", "dc")
COMPLETE_DATA = ("dc", "boin-dc", "boin")


@dataclass(frozen=True)
class Scenario:
    """Simulation truth: per-dose event probabilities and time-to-event law."""

    name: str
    dlt_probs: tuple[float, ...]
    intol_probs: tuple[float, ...]
    true_mtd: int | None
    event_time_weights_r: tuple[float, ...] = (1 / 3, 1 / 3, 1 / 3)
    event_time_weights_t: tuple[float, ...] | None = None
    outcome_copula_rho: float = 0.0

    def __post_init__(self):
        for probs in (self.dlt_probs, self.intol_probs):
            if len(probs) != len(self.dlt_probs):
                raise ValueError("probability vectors must have equal length")
            if any(not 0.0 <= p <= 1.0 for p in probs):
                raise ValueError("probabilities must be in [0, 1]")
            if any(b < a for a, b in zip(probs, probs[1:])):
                raise ValueError("probability vectors must be nondecreasing")
        for weights in (self.event_time_weights_r, self.event_time_weights_t):
            if weights is None:
                continue
            if any(w < 0 for w in weights) or abs(sum(weights) - 1.0) > 1e-9:
                raise ValueError("weights must be nonnegative and sum to 1")
        if not -1.0 < self.outcome_copula_rho < 1.0:
            raise ValueError("copula correlation must be in (-1, 1)")

    @property
    def n_levels(self) -> int:
        return len(self.dlt_probs)

    def to_json(self) -> dict:
        doc = {
            "name": self.name,
            "dlt_probs": list(self.dlt_probs),
            "intol_probs": list(self.intol_probs),
            "true_mtd": self.true_mtd,
            "event_time_weights_r": list(self.event_time_weights_r),
            "outcome_copula_rho": self.outcome_copula_rho,
        }
        if self.event_time_weights_t is not None:
            doc["event_time_weights_t"] = list(self.event_time_weights_t)
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "Scenario":
        return cls(
            name=str(doc["name"]),
            dlt_probs=tuple(doc["dlt_probs"]),
            intol_probs=tuple(doc["intol_probs"]),
            true_mtd=doc.get("true_mtd"),
            event_time_weights_r=tuple(doc.get("event_time_weights_r",
                                               (1 / 3, 1 / 3, 1 / 3))),
            event_time_weights_t=(tuple(doc["event_time_weights_t"])
                                  if doc.get("event_time_weights_t") else None),
            outcome_copula_rho=float(doc.get("outcome_copula_rho", 0.0)),
        )


def load_scenario(source) -> Scenario:
    """Load a scenario from a dict, a JSON file path, or a built-in name."""
    if isinstance(source, Scenario):
        return source
    if isinstance(source, dict):
        return Scenario.from_json(source)
    name = str(source)
    if name.endswith(".json"):
        with open(name) as fh:
            return Scenario.from_json(json.load(fh))
    fixtures = builtin_scenarios()
    if name in fixtures:
        return fixtures[name]
    raise ValueError(f"unknown scenario {name!r}; "
                     f"built-ins: {sorted(fixtures)}")


def builtin_scenarios() -> dict[str, Scenario]:
    """The eleven bundled benchmark scenarios, keyed by name."""
    out = {}
    root = resources.files("dualdose").joinpath("scenarios")
    for entry in sorted(root.iterdir()):
        if entry.name.endswith(".json"):
            sc = Scenario.from_json(json.loads(entry.read_text()))
            out[sc.name] = sc
    return out


@dataclass(frozen=True)
class SimConfig:
    design: str = "tite-boin-dc"
    cohort_size: int = 3
    max_n: int = 30
    accrual_rate: float = 0.1  # mean arrivals per day
    n_replicates: int = 1000
    seed: int = 0
    start_level: int = 1
    dlt: EndpointSpec = EndpointSpec(0.25, 21.0)
    intolerance: EndpointSpec = EndpointSpec(0.50, 63.0)
    mcmc_warm: int = 200
    mcmc_burn_in: int = 500
    mcmc_retained: int = 1000
    n_jobs: int = 1
    raw_doses: tuple[float, ...] | None = None
    priors: PriorConfig = PriorConfig()

    def __post_init__(self):
        if self.design not in DESIGNS:
            raise ValueError(f"design must be one of {DESIGNS}")
        if min(self.cohort_size, self.max_n, self.n_replicates) < 1:
            raise ValueError("counts must be positive")
        if self.accrual_rate <= 0:
            raise ValueError("accrual rate must be positive")

    def boin_config(self) -> BoinDcConfig:
        return BoinDcConfig(dlt=self.dlt, intolerance=self.intolerance,
                            dlt_only=self.design == "boin")

    def titedc_config(self) -> TiteDcConfig:
        return TiteDcConfig(dlt=self.dlt, intolerance=self.intolerance,
                            priors=self.priors)


@dataclass
class TrialResult:
    selected: int | None
    n_per_dose: np.ndarray
    duration_days: float
    n_overdose: int
    terminated: bool


@dataclass
class OperatingCharacteristics:
    """Aggregate design performance over a replicate batch."""

    selection_pct: np.ndarray  # per dose
    none_pct: float
    mean_patients: np.ndarray
    mean_duration_months: float
    overdose_pct: float
    n_replicates: int

    def to_json(self) -> dict:
        return {
            "selection_pct": [round(float(x), 4) for x in self.selection_pct],
            "none_pct": round(self.none_pct, 4),
            "mean_patients": [round(float(x), 4) for x in self.mean_patients],
            "mean_duration_months": round(self.mean_duration_months, 4),
            "overdose_pct": round(self.overdose_pct, 4),
            "n_replicates": self.n_replicates,
        }

    def csv_rows(self) -> list[list]:
        levels = [f"d{j}" for j in range(1, len(self.selection_pct) + 1)]
        return [
            ["metric"] + levels + ["none", "duration_months", "overdose_pct"],
            (["selection_pct"] + [round(float(x), 2) for x in self.selection_pct]
             + [round(self.none_pct, 2), "", ""]),
            (["mean_patients"] + [round(float(x), 2) for x in self.mean_patients]
             + ["", round(self.mean_duration_months, 2),
                round(self.overdose_pct, 2)]),
        ]


@dataclass
class _SimPatient:
    """Ground-truth patient; observed records are derived per time point."""

    idx: int
    dose_level: int
    enroll_time: float
    y_t: int
    y_r: int
    x_t: float  # inf when no event
    x_r: float

    def record(self, now: float, window_t: float, window_r: float) -> PatientRecord:
        # Compare in absolute time so resolution instants agree bit-for-bit
        # with resolved_at (enroll + offset can round differently from
        # now - enroll).
        if self.y_t and self.enroll_time + self.x_t <= now:
            dlt = observed_yes(self.x_t)
        elif self.enroll_time + window_t <= now:
            dlt = Endpoint(EventStatus.NO)
        else:
            dlt = Endpoint(EventStatus.PENDING)
        if self.y_r and self.enroll_time + self.x_r <= now:
            intol = observed_yes(self.x_r)
        elif self.enroll_time + window_r <= now:
            intol = Endpoint(EventStatus.NO)
        else:
            intol = Endpoint(EventStatus.PENDING)
        return PatientRecord(id=f"p{self.idx}", dose_level=self.dose_level,
                             enroll_time=self.enroll_time, dlt=dlt,
                             intolerance=intol)

    def resolved_at(self, window_t: float, window_r: float,
                    dlt_only: bool = False) -> float:
        """Time at which every tracked endpoint is observed."""
        res_t = self.x_t if self.y_t else window_t
        if dlt_only:
            return self.enroll_time + res_t
        res_r = self.x_r if self.y_r else window_r
        return self.enroll_time + max(res_t, res_r)


def _draw_event_time(rng, window: float, weights) -> float:
    if window <= 0.0:
        return 0.0
    if weights is None:
        return rng.uniform(0.0, window)
    cycles = len(weights)
    c = rng.choice(cycles, p=np.asarray(weights))
    width = window / cycles
    return c * width + rng.uniform(0.0, width)


def generate_patient(scenario: Scenario, dose_level: int, rng,
                     window_t: float = 21.0,
                     window_r: float = 63.0) -> tuple[int, int, float, float]:
    """Draw (Y_T, Y_R, X_T, X_R) for one patient at ``dose_level``.

    The joint outcome uses a Gaussian copula with the scenario's
    correlation (0 = independent). Event times are inf when no event.
    """
    p_t = scenario.dlt_probs[dose_level - 1]
    p_r = scenario.intol_probs[dose_level - 1]
    rho = scenario.outcome_copula_rho
    z1 = rng.standard_normal()
    z2 = rho * z1 + math.sqrt(1.0 - rho * rho) * rng.standard_normal()
    y_t = int(ndtr(z1) < p_t)
    y_r = int(ndtr(z2) < p_r)
    x_t = (_draw_event_time(rng, window_t, scenario.event_time_weights_t)
           if y_t else math.inf)
    x_r = (_draw_event_time(rng, window_r, scenario.event_time_weights_r)
           if y_r else math.inf)
    return y_t, y_r, x_t, x_r


def _clear_suspension(patients: list[_SimPatient], level: int, clock: float,
                      window_t: float, window_r: float) -> float:
    """Earliest time >= clock at which the pending ratio drops below 0.5.

    The ratio counts endpoint observations (two per patient), matching
    ``suspension_check``.
    """
    at_dose = [p for p in patients if p.dose_level == level]
    resolution = []
    for p in at_dose:
        resolution.append(p.enroll_time + (p.x_t if p.y_t else window_t))
        resolution.append(p.enroll_time + (p.x_r if p.y_r else window_r))
    times = sorted(set(resolution))

    def clears(t: float) -> bool:
        pending = sum(1 for r in resolution if r > t)
        resolved = len(resolution) - pending
        return resolved > 0 and pending / resolved < 0.5

    if clears(clock):
        return clock
    for t in times:
        if t > clock and clears(t):
            return t
    return max(times) if times else clock


def _mcmc_seed(master_seed: int, rep: int, step: int) -> int:
    return int(np.random.SeedSequence([master_seed, rep, step])
               .generate_state(1)[0] % (2 ** 31))


def run_trial(scenario: Scenario, config: SimConfig, rep: int = 0) -> TrialResult:
    """Simulate one trial to completion; deterministic given (seed, rep)."""
    if scenario.n_levels < 1:
        raise ValueError("scenario has no doses")
    n_levels = scenario.n_levels
    if config.raw_doses is not None:
        grid = DoseGrid(config.raw_doses)
        if grid.n_levels != n_levels:
            raise ValueError("raw_doses length must match the scenario")
    else:
        grid = DoseGrid.equally_spaced(n_levels)
    rng = np.random.default_rng([config.seed, rep])
    window_t = config.dlt.window
    window_r = config.intolerance.window
    design = config.design
    dlt_only = design == "boin"

    boin_cfg = config.boin_config()
    dc_cfg = config.titedc_config()
    mcmc_base = McmcConfig(warm=config.mcmc_warm, burn_in=config.mcmc_burn_in,
                           retained=config.mcmc_retained)

    patients: list[_SimPatient] = []
    level = config.start_level
    eliminated = [False] * n_levels
    clock = 0.0
    terminated = False
    step = 0

    while len(patients) < config.max_n and not terminated:
        for _ in range(config.cohort_size):
            clock += rng.exponential(1.0 / config.accrual_rate)
            y_t, y_r, x_t, x_r = generate_patient(
                scenario, level, rng, window_t, window_r)
            patients.append(_SimPatient(len(patients), level, clock,
                                        y_t, y_r, x_t, x_r))
            if len(patients) >= config.max_n:
                break
        if len(patients) >= config.max_n:
            break

        if design in COMPLETE_DATA:
            at_dose = [p for p in patients if p.dose_level == level]
            t_dec = max([clock] + [p.resolved_at(window_t, window_r, dlt_only)
                                   for p in at_dose])
        else:
            t_dec = _clear_suspension(patients, level, clock,
                                      window_t, window_r)
        clock = t_dec

        records = [p.record(t_dec, window_t, window_r) for p in patients]
        state = TrialState(grid=grid, patients=records, current_level=level,
                           eliminated=list(eliminated), clock=t_dec)
        if design in MODEL_BASED:
            mcmc = replace(mcmc_base, seed=_mcmc_seed(config.seed, rep, step))
            draws = fit_posterior(records, grid, dc_cfg, mcmc, t_dec)
            decision, state = decide_titedc(state, draws, dc_cfg)
        else:
            decision, state = decide_boindc(state, boin_cfg)
        step += 1

        eliminated = list(state.eliminated)
        if decision.action is Action.TERMINATE:
            terminated = True
        elif decision.action is Action.SUSPEND:
            raise RuntimeError("suspension should have been cleared "
                               "before the decision point")
        else:
            level = decision.next_level

    final_window = window_t if dlt_only else window_r
    duration = max((p.enroll_time + final_window for p in patients),
                   default=0.0)

    selected = None
    if not terminated and patients:
        records = [p.record(math.inf, window_t, window_r) for p in patients]
        final_state = TrialState(
            grid=grid, patients=records, current_level=level,
            eliminated=list(eliminated), clock=duration,
            status=TrialStatus.COMPLETED)
        if design in MODEL_BASED:
            mcmc = replace(mcmc_base, seed=_mcmc_seed(config.seed, rep, 10_000))
            draws = fit_posterior(records, grid, dc_cfg, mcmc, math.inf)
            selected = select_mtd_titedc(draws, dc_cfg, eliminated)
        else:
            selected = select_mtd_boindc(final_state, boin_cfg)

    n_per_dose = np.zeros(n_levels)
    for p in patients:
        n_per_dose[p.dose_level - 1] += 1
    if scenario.true_mtd is None:
        n_overdose = 0
    else:
        n_overdose = sum(1 for p in patients if p.dose_level > scenario.true_mtd)
    return TrialResult(selected=selected, n_per_dose=n_per_dose,
                       duration_days=duration, n_overdose=n_overdose,
                       terminated=terminated)


def aggregate(results: list[TrialResult], n_levels: int) -> OperatingCharacteristics:
    n = len(results)
    selection = np.zeros(n_levels)
    none_count = 0
    for r in results:
        if r.selected is None:
            none_count += 1
        else:
            selection[r.selected - 1] += 1
    total_patients = sum(float(r.n_per_dose.sum()) for r in results)
    overdose = sum(r.n_overdose for r in results)
    return OperatingCharacteristics(
        selection_pct=100.0 * selection / n,
        none_pct=100.0 * none_count / n,
        mean_patients=np.sum([r.n_per_dose for r in results], axis=0) / n,
        mean_duration_months=float(np.mean([r.duration_days for r in results])
                                   / DAYS_PER_MONTH),
        overdose_pct=100.0 * overdose / total_patients if total_patients else 0.0,
        n_replicates=n,
    )


def run_batch(scenario, config: SimConfig) -> OperatingCharacteristics:
    """Operating characteristics over ``config.n_replicates`` seeded trials."""
    scenario = load_scenario(scenario)
    reps = range(config.n_replicates)
    if config.n_jobs != 1:
        results = Parallel(n_jobs=config.n_jobs)(
            delayed(run_trial)(scenario, config, rep) for rep in reps)
    else:
        results = [run_trial(scenario, config, rep) for rep in reps]
    return aggregate(results, scenario.n_levels)


def sensitivity_suite(scenario, config: SimConfig,
                      weight_variants: list[tuple[float, ...]] = (),
                      accrual_rates: list[float] = ()) -> list[dict]:
    """One OC row per variant (event-time weights or accrual rates)."""
    scenario = load_scenario(scenario)
    report = []
    for weights in weight_variants:
        variant = replace(scenario, event_time_weights_r=tuple(weights))
        oc = run_batch(variant, config)
        report.append({"variant": "event_time_weights_r",
                       "value": list(weights), **oc.to_json()})
    for rate in accrual_rates:
        oc = run_batch(scenario, replace(config, accrual_rate=rate))
        report.append({"variant": "accrual_rate", "value": rate,
                       **oc.to_json()})
    return report
