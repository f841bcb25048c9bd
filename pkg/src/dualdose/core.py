"""Core trial types and design-agnostic conduct rules.

Doses, endpoints, patient timelines, missing-data-pattern classification,
accrual suspension, dose elimination bookkeeping, and the versioned JSON
trial-state document used for persistence and API payloads.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

STATE_SCHEMA_VERSION = 1

# Calendar-mean month; used only when reporting durations.
DAYS_PER_MONTH = 30.4375


class EventStatus(str, enum.Enum):
    NO = "no"
    YES = "yes"
    PENDING = "pending"


class MissingPattern(str, enum.Enum):
    BOTH_OBSERVED = "both_observed"
    T_OBS_R_PENDING = "T_obs_R_pending"
    T_PENDING_R_OBS = "T_pending_R_obs"
    BOTH_PENDING = "both_pending"

    def pending_count(self) -> int:
        """Number of still-pending endpoint observations (0, 1, or 2)."""
        return {MissingPattern.BOTH_OBSERVED: 0,
                MissingPattern.T_OBS_R_PENDING: 1,
                MissingPattern.T_PENDING_R_OBS: 1,
                MissingPattern.BOTH_PENDING: 2}[self]


class TrialStatus(str, enum.Enum):
    ENROLLING = "enrolling"
    SUSPENDED = "suspended"
    COMPLETED = "completed"
    TERMINATED = "terminated"


class Action(str, enum.Enum):
    ESCALATE = "escalate"
    STAY = "stay"
    DE_ESCALATE = "de-escalate"
    SUSPEND = "suspend"
    TERMINATE = "terminate"


@dataclass(frozen=True)
class DoseGrid:
    """Ordered dose amounts; standardized values are dose / highest dose."""

    raw_doses: tuple[float, ...]

    def __post_init__(self):
        doses = tuple(float(d) for d in self.raw_doses)
        if len(doses) == 0:
            raise ValueError("dose grid is empty")
        if any(d <= 0 for d in doses):
            raise ValueError("doses must be positive")
        if any(b <= a for a, b in zip(doses, doses[1:])):
            raise ValueError("doses must be strictly increasing")
        object.__setattr__(self, "raw_doses", doses)

    @property
    def standardized(self) -> tuple[float, ...]:
        top = self.raw_doses[-1]
        return tuple(d / top for d in self.raw_doses)

    @property
    def n_levels(self) -> int:
        return len(self.raw_doses)

    @classmethod
    def equally_spaced(cls, n_levels: int) -> "DoseGrid":
        return cls(tuple(float(j) for j in range(1, n_levels + 1)))


@dataclass(frozen=True)
class EndpointSpec:
    """Target event probability and assessment-window length (days)."""

    target: float
    window: float

    def __post_init__(self):
        if not 0.0 < self.target < 1.0:
            raise ValueError("target must be in (0, 1)")
        if self.window < 0.0:
            raise ValueError("window must be nonnegative")


@dataclass(frozen=True)
class Endpoint:
    """Observed state of one binary endpoint for one patient."""

    status: EventStatus
    event_time: float | None = None  # days from enrollment, set when YES

    def __post_init__(self):
        if self.status is EventStatus.YES and self.event_time is None:
            raise ValueError("observed event requires an event time")
        if self.status is not EventStatus.YES and self.event_time is not None:
            raise ValueError("event time only valid for observed events")


PENDING = Endpoint(EventStatus.PENDING)
NO_EVENT = Endpoint(EventStatus.NO)


def observed_yes(event_time: float) -> Endpoint:
    return Endpoint(EventStatus.YES, float(event_time))


@dataclass(frozen=True)
class PatientRecord:
    """One patient's dose assignment and endpoint observations.

    dose_level is 1-based. Times are day offsets: enroll_time from trial
    start, event times from enrollment.
    """

    id: str
    dose_level: int
    enroll_time: float
    dlt: Endpoint = PENDING
    intolerance: Endpoint = PENDING

    def follow_up(self, now: float, window_r: float) -> float:
        """Follow-up time t = min(now - enroll, T_R), floored at 0."""
        return min(max(now - self.enroll_time, 0.0), window_r)

    def validate(self, window_t: float, window_r: float, now: float | None = None):
        if self.dlt.status is EventStatus.YES and self.dlt.event_time > window_t:
            raise ValueError("DLT event time exceeds the DLT window")
        if (self.intolerance.status is EventStatus.YES
                and self.intolerance.event_time > window_r):
            raise ValueError("intolerance event time exceeds the intolerance window")
        if now is not None:
            t = now - self.enroll_time
            if t < 0:
                raise ValueError("patient enrolled after the reference time")
            if t >= window_t and self.dlt.status is EventStatus.PENDING:
                raise ValueError("DLT cannot be pending once the window has elapsed")
            if t >= window_r and self.intolerance.status is EventStatus.PENDING:
                raise ValueError("intolerance cannot be pending once the window has elapsed")


def classify_pattern(p: PatientRecord, now: float) -> MissingPattern:
    """Missing-data pattern of a patient at decision time ``now``."""
    if p.enroll_time > now:
        raise ValueError("patient not yet enrolled at the given time")
    t_pending = p.dlt.status is EventStatus.PENDING
    r_pending = p.intolerance.status is EventStatus.PENDING
    if t_pending and r_pending:
        return MissingPattern.BOTH_PENDING
    if r_pending:
        return MissingPattern.T_OBS_R_PENDING
    if t_pending:
        return MissingPattern.T_PENDING_R_OBS
    return MissingPattern.BOTH_OBSERVED


@dataclass(frozen=True)
class Decision:
    """A dose-assignment decision with the evidence that produced it."""

    action: Action
    next_level: int | None
    rationale: dict = field(default_factory=dict)


@dataclass
class TrialState:
    """Accumulated trial data plus conduct bookkeeping."""

    grid: DoseGrid
    patients: list[PatientRecord] = field(default_factory=list)
    current_level: int = 1
    eliminated: list[bool] = field(default_factory=list)
    clock: float = 0.0
    status: TrialStatus = TrialStatus.ENROLLING

    def __post_init__(self):
        if not self.eliminated:
            self.eliminated = [False] * self.grid.n_levels
        if len(self.eliminated) != self.grid.n_levels:
            raise ValueError("elimination flags must match the dose grid")
        if not 1 <= self.current_level <= self.grid.n_levels:
            raise ValueError("current level outside the dose grid")

    def patients_at(self, level: int) -> list[PatientRecord]:
        return [p for p in self.patients if p.dose_level == level]

    def lowest_eliminated(self) -> int | None:
        for j, flag in enumerate(self.eliminated, start=1):
            if flag:
                return j
        return None


def suspension_check(state: TrialState, dlt_only: bool = False) -> bool:
    """True when enrollment must pause at the current dose.

    The ratio counts endpoint observations, not patients: each patient
    contributes a DLT datum and an intolerance datum, each either pending
    or resolved. The rule fires when pending / resolved >= 0.5, with a
    zero denominator treated as suspend. With ``dlt_only`` the intolerance
    endpoint is ignored (one datum per patient).
    """
    at_dose = state.patients_at(state.current_level)
    if not at_dose:
        raise ValueError("no patients at the current dose; nothing to decide")
    pending = sum(
        (p.dlt.status is EventStatus.PENDING)
        + (not dlt_only and p.intolerance.status is EventStatus.PENDING)
        for p in at_dose
    )
    per_patient = 1 if dlt_only else 2
    resolved = per_patient * len(at_dose) - pending
    if resolved == 0:
        return True
    return pending / resolved >= 0.5


def apply_elimination(state: TrialState, flags: list[bool]) -> TrialState:
    """Fold per-dose overdose verdicts into the state.

    A verdict on dose j eliminates j and every higher dose; flags are
    monotone (never cleared). Eliminating the lowest dose terminates the
    trial with no selectable MTD.
    """
    if len(flags) != state.grid.n_levels:
        raise ValueError("verdicts must match the dose grid")
    lowest = None
    for j, verdict in enumerate(flags, start=1):
        if verdict:
            lowest = j
            break
    new_flags = list(state.eliminated)
    if lowest is not None:
        for j in range(lowest - 1, state.grid.n_levels):
            new_flags[j] = True
    new_status = state.status
    new_level = state.current_level
    if new_flags[0]:
        new_flags = [True] * state.grid.n_levels
        new_status = TrialStatus.TERMINATED
    else:
        while new_level > 1 and new_flags[new_level - 1]:
            new_level -= 1
    return TrialState(
        grid=state.grid,
        patients=list(state.patients),
        current_level=new_level,
        eliminated=new_flags,
        clock=state.clock,
        status=new_status,
    )


# ---------------------------------------------------------------------------
# JSON document form (persistence / API payload)

def endpoint_to_json(e: Endpoint) -> dict:
    d: dict = {"status": e.status.value}
    if e.event_time is not None:
        d["event_time"] = e.event_time
    return d


def endpoint_from_json(d: dict) -> Endpoint:
    return Endpoint(EventStatus(d["status"]), d.get("event_time"))


def patient_to_json(p: PatientRecord) -> dict:
    return {
        "id": p.id,
        "dose_level": p.dose_level,
        "enroll_time": p.enroll_time,
        "dlt": endpoint_to_json(p.dlt),
        "intolerance": endpoint_to_json(p.intolerance),
    }


def patient_from_json(d: dict) -> PatientRecord:
    return PatientRecord(
        id=str(d["id"]),
        dose_level=int(d["dose_level"]),
        enroll_time=float(d["enroll_time"]),
        dlt=endpoint_from_json(d["dlt"]),
        intolerance=endpoint_from_json(d["intolerance"]),
    )


def state_to_json(state: TrialState) -> dict:
    return {
        "schema_version": STATE_SCHEMA_VERSION,
        "grid": list(state.grid.raw_doses),
        "patients": [patient_to_json(p) for p in state.patients],
        "current_level": state.current_level,
        "eliminated": list(state.eliminated),
        "clock": state.clock,
        "status": state.status.value,
    }


def state_from_json(doc: dict) -> TrialState:
    version = doc.get("schema_version", STATE_SCHEMA_VERSION)
    if version != STATE_SCHEMA_VERSION:
        raise ValueError(f"unsupported trial-state schema version {version}")
    return TrialState(
        grid=DoseGrid(tuple(doc["grid"])),
        patients=[patient_from_json(p) for p in doc.get("patients", [])],
        current_level=int(doc.get("current_level", 1)),
        eliminated=[bool(x) for x in doc["eliminated"]] if "eliminated" in doc else [],
        clock=float(doc.get("clock", 0.0)),
        status=TrialStatus(doc.get("status", "enrolling")),
    )


def with_patient(state: TrialState, p: PatientRecord) -> TrialState:
    return replace(state, patients=state.patients + [p])
