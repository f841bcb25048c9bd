/** Display-state derivation: bookkeeping counts only.
 *
 * Everything decision-related (estimates, boundaries, eliminations) comes
 * verbatim from the API; this module just tallies the patient list for
 * display so the table matches what the server saw.
 */

import type { TrialDocument } from "./types.js";

export interface DoseTally {
  level: number;
  n: number;
  dltEvents: number;
  intolEvents: number;
  dltPending: number;
  intolPending: number;
  bothPending: number;
  eliminated: boolean;
}

export function doseTallies(doc: TrialDocument): DoseTally[] {
  const tallies: DoseTally[] = doc.state.grid.map((_, i) => ({
    level: i + 1,
    n: 0,
    dltEvents: 0,
    intolEvents: 0,
    dltPending: 0,
    intolPending: 0,
    bothPending: 0,
    eliminated: doc.state.eliminated[i] ?? false,
  }));
  for (const p of doc.state.patients) {
    const t = tallies[p.dose_level - 1];
    if (!t) continue;
    t.n += 1;
    if (p.dlt.status === "yes") t.dltEvents += 1;
    if (p.dlt.status === "pending") t.dltPending += 1;
    if (p.intolerance.status === "yes") t.intolEvents += 1;
    if (p.intolerance.status === "pending") t.intolPending += 1;
    if (p.dlt.status === "pending" && p.intolerance.status === "pending") {
      t.bothPending += 1;
    }
  }
  return tallies;
}

export function totalEnrolled(doc: TrialDocument): number {
  return doc.state.patients.length;
}
