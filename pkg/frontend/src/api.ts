/** Thin typed client for the trial-management HTTP API. */

import type { PatientRecord, Recommendation, TrialDocument } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: unknown,
  ) {
    super(`API error ${status}`);
  }
}

async function unwrap<T>(response: Response): Promise<T> {
  const body = await response.json().catch(() => null);
  if (!response.ok) {
    throw new ApiError(response.status, body?.detail ?? body);
  }
  return body as T;
}

export class ApiClient {
  constructor(private readonly base: string = "") {}

  private url(path: string): string {
    return this.base + path;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return fetch(this.url(path), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    }).then((r) => unwrap<T>(r));
  }

  createTrial(payload: Record<string, unknown>): Promise<TrialDocument> {
    return this.post("/trials", payload);
  }

  getTrial(id: string): Promise<TrialDocument> {
    return fetch(this.url(`/trials/${id}`)).then((r) =>
      unwrap<TrialDocument>(r),
    );
  }

  addPatient(
    id: string,
    version: number,
    patient: Partial<PatientRecord>,
  ): Promise<TrialDocument> {
    return this.post(`/trials/${id}/patients`, { version, ...patient });
  }

  updatePatient(
    trialId: string,
    patientId: string,
    version: number,
    update: Record<string, unknown>,
  ): Promise<TrialDocument> {
    return fetch(this.url(`/trials/${trialId}/patients/${patientId}`), {
      method: "PATCH",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ version, ...update }),
    }).then((r) => unwrap<TrialDocument>(r));
  }

  recommendation(id: string): Promise<Recommendation> {
    return fetch(this.url(`/trials/${id}/recommendation`)).then((r) =>
      unwrap<Recommendation>(r),
    );
  }

  applyDecision(id: string, version: number): Promise<TrialDocument> {
    return this.post(`/trials/${id}/decisions`, { version });
  }

  whatIf(
    id: string,
    patients: Partial<PatientRecord>[],
  ): Promise<Recommendation> {
    return this.post(`/trials/${id}/whatif`, { patients });
  }

  boundaryTable(params: {
    phiT?: number;
    phiR?: number;
    max_n?: number;
  }): Promise<Record<string, unknown>> {
    const q = new URLSearchParams();
    if (params.phiT !== undefined) q.set("phiT", String(params.phiT));
    if (params.phiR !== undefined) q.set("phiR", String(params.phiR));
    if (params.max_n !== undefined) q.set("max_n", String(params.max_n));
    const suffix = q.toString() ? `?${q}` : "";
    return fetch(this.url(`/designs/boin-dc/table${suffix}`)).then((r) =>
      unwrap<Record<string, unknown>>(r),
    );
  }
}
