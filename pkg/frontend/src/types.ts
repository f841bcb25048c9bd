/** Shapes of the JSON documents the dose-finding service exchanges. */

export type EventStatus = "yes" | "no" | "pending";

export interface Outcome {
  status: EventStatus;
  event_time?: number | null;
}

export interface PatientRecord {
  id: string;
  dose_level: number;
  enroll_time: number;
  dlt: Outcome;
  intolerance: Outcome;
}

export interface TrialConfig {
  design: string;
  phi_t: number;
  phi_r: number;
  window_t: number;
  window_r: number;
  start_level: number;
}

export interface TrialState {
  grid: number[];
  patients: PatientRecord[];
  current_level: number;
  clock: number;
  eliminated: boolean[];
  status: string;
}

export interface DecisionEntry {
  clock: number;
  action: string;
  next_level: number | null;
  eliminated: boolean[];
}

export interface TrialDocument {
  schema_version: number;
  id: string;
  version: number;
  config: TrialConfig;
  state: TrialState;
  decision_log: DecisionEntry[];
}

export interface Recommendation {
  action: string;
  next_level: number | null;
  rationale: Record<string, unknown>;
  hypothetical?: boolean;
}

/** Client-side form checks; the server re-validates everything. */
export function validateOutcome(
  outcome: Outcome,
  window: number,
  label: string,
): string | null {
  if (outcome.status === "yes") {
    const t = outcome.event_time;
    if (t == null || Number.isNaN(t)) {
      return `${label}: event time required`;
    }
    if (t < 0 || t > window) {
      return `${label}: event time must be within [0, ${window}] days`;
    }
  }
  return null;
}

export function validateDoseLevel(
  level: number,
  nLevels: number,
): string | null {
  if (!Number.isInteger(level) || level < 1 || level > nLevels) {
    return `dose level must be an integer in 1..${nLevels}`;
  }
  return null;
}
