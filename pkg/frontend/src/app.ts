/** Browser wiring: forms, API calls, and panel refresh. */

import { ApiClient, ApiError } from "./api.js";
import {
  renderFieldErrors,
  renderTrialView,
  renderRecommendation,
} from "./render.js";
import type { Outcome, Recommendation, TrialDocument } from "./types.js";
import { validateDoseLevel, validateOutcome } from "./types.js";

const api = new ApiClient("");

let currentDoc: TrialDocument | null = null;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function showError(target: HTMLElement, err: unknown): void {
  target.innerHTML =
    err instanceof ApiError
      ? renderFieldErrors(err.detail)
      : `<p class="form-error">${String(err)}</p>`;
}

async function refresh(): Promise<void> {
  if (!currentDoc) return;
  const [doc, rec] = await Promise.all([
    api.getTrial(currentDoc.id),
    api.recommendation(currentDoc.id),
  ]);
  currentDoc = doc;
  el("trial-panel").innerHTML = renderTrialView(doc, rec);
}

function outcomeFromForm(prefix: string, form: FormData): Outcome {
  const status = String(form.get(`${prefix}-status`) ?? "pending");
  if (status === "yes") {
    return { status, event_time: Number(form.get(`${prefix}-time`)) };
  }
  return { status: status as Outcome["status"] };
}

async function onCreateTrial(event: Event): Promise<void> {
  event.preventDefault();
  const form = new FormData(event.target as HTMLFormElement);
  const doses = String(form.get("doses") ?? "")
    .split(",")
    .map((d) => Number(d.trim()))
    .filter((d) => !Number.isNaN(d));
  try {
    currentDoc = await api.createTrial({
      design: String(form.get("design") ?? "tite-boin-dc"),
      doses,
    });
    await refresh();
  } catch (err) {
    showError(el("create-errors"), err);
  }
}

async function onAddPatient(event: Event): Promise<void> {
  event.preventDefault();
  if (!currentDoc) return;
  const form = new FormData(event.target as HTMLFormElement);
  const doseLevel = Number(form.get("dose_level"));
  const dlt = outcomeFromForm("dlt", form);
  const intolerance = outcomeFromForm("intol", form);
  const errors = [
    validateDoseLevel(doseLevel, currentDoc.state.grid.length),
    validateOutcome(dlt, currentDoc.config.window_t, "DLT"),
    validateOutcome(intolerance, currentDoc.config.window_r, "intolerance"),
  ].filter((e): e is string => e !== null);
  const errorBox = el("entry-errors");
  if (errors.length) {
    errorBox.innerHTML = renderFieldErrors(errors);
    return;
  }
  try {
    currentDoc = await api.addPatient(currentDoc.id, currentDoc.version, {
      dose_level: doseLevel,
      enroll_time: Number(form.get("enroll_time")),
      dlt,
      intolerance,
    });
    errorBox.innerHTML = "";
    await refresh();
  } catch (err) {
    if (err instanceof ApiError && err.status === 409) {
      errorBox.innerHTML =
        `<p class="form-error">Trial changed elsewhere; reloading. ` +
        `Please re-submit.</p>`;
      await refresh();
      return;
    }
    showError(errorBox, err);
  }
}

async function onApplyDecision(): Promise<void> {
  if (!currentDoc) return;
  try {
    currentDoc = await api.applyDecision(currentDoc.id, currentDoc.version);
    await refresh();
  } catch (err) {
    showError(el("entry-errors"), err);
  }
}

async function onWhatIf(event: Event): Promise<void> {
  event.preventDefault();
  if (!currentDoc) return;
  const form = new FormData(event.target as HTMLFormElement);
  const n = Number(form.get("count") ?? 1);
  const doseLevel = Number(form.get("dose_level"));
  const dlt = outcomeFromForm("dlt", form);
  const intolerance = outcomeFromForm("intol", form);
  const patients = Array.from({ length: n }, (_, i) => ({
    id: `hypothetical-${Date.now()}-${i}`,
    dose_level: doseLevel,
    enroll_time: currentDoc!.state.clock,
    dlt,
    intolerance,
  }));
  try {
    const rec: Recommendation = await api.whatIf(currentDoc.id, patients);
    el("whatif-result").innerHTML = renderRecommendation(rec);
  } catch (err) {
    showError(el("whatif-result"), err);
  }
}

function onClearWhatIf(): void {
  el("whatif-result").innerHTML = "";
}

export function main(): void {
  el("create-form").addEventListener("submit", onCreateTrial);
  el("entry-form").addEventListener("submit", onAddPatient);
  el("whatif-form").addEventListener("submit", onWhatIf);
  el("apply-decision").addEventListener("click", onApplyDecision);
  el("clear-whatif").addEventListener("click", onClearWhatIf);
}

if (typeof document !== "undefined" && document.readyState !== "loading") {
  main();
} else if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", main);
}
