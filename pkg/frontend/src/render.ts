/** Pure HTML-string renderers for the dashboard panels.
 *
 * Every renderer is a function of API data only; the contract tests replay
 * recorded API responses through these functions. Nothing here recomputes
 * design math -- estimates, boundaries, and decisions are displayed
 * verbatim from the service.
 */

import { doseTallies } from "./derive.js";
import type { Recommendation, TrialDocument } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

const ACTION_TEXT: Record<string, (level: number | null) => string> = {
  start: (l) => `Start at d${l}`,
  escalate: (l) => `Escalate to d${l}`,
  "de-escalate": (l) => `De-escalate to d${l}`,
  stay: (l) => `Stay at d${l}`,
  suspend: () => "Enrollment suspended: pending ratio ≥ 0.5",
  terminate: () => "Trial terminated: no tolerable dose",
};

export function actionText(rec: Recommendation): string {
  const fmt = ACTION_TEXT[rec.action];
  return fmt ? fmt(rec.next_level) : `${rec.action} (d${rec.next_level})`;
}

function describeBindingEndpoint(rec: Recommendation): string {
  const r = rec.rationale;
  const piT = r["pi_hat_T"];
  const piR = r["pi_hat_R"];
  if (typeof piT !== "number" || typeof piR !== "number") return "";
  const lambdaTd = r["lambda_Td"] as number | undefined;
  const lambdaRd = r["lambda_Rd"] as number | undefined;
  const parts = [
    `DLT estimate ${piT.toFixed(3)}`,
    `intolerance estimate ${piR.toFixed(3)}`,
  ];
  let binding = "";
  if (lambdaTd !== undefined && piT > lambdaTd) binding = "DLT";
  if (lambdaRd !== undefined && piR > lambdaRd) {
    binding = binding ? "both endpoints" : "intolerance";
  }
  if (binding) parts.push(`bound by ${binding}`);
  return parts.join(" · ");
}

export function renderRecommendation(rec: Recommendation): string {
  const classes = ["recommendation", `action-${rec.action}`];
  if (rec.hypothetical) classes.push("hypothetical");
  const badge = rec.hypothetical
    ? '<span class="badge-hypothetical">what-if</span>'
    : "";
  const detail = describeBindingEndpoint(rec);
  const rule = rec.rationale["rule"];
  return [
    `<div class="${classes.join(" ")}">`,
    badge,
    `<p class="action-text">${escapeHtml(actionText(rec))}</p>`,
    detail ? `<p class="detail">${escapeHtml(detail)}</p>` : "",
    typeof rule === "string"
      ? `<p class="rule">${escapeHtml(rule)}</p>`
      : "",
    `</div>`,
  ].join("");
}

export function renderSuspensionBanner(rec: Recommendation): string {
  if (rec.action !== "suspend") return "";
  const pending = rec.rationale["pending"];
  const resolved = rec.rationale["resolved"];
  return (
    `<div class="banner-suspended">Enrollment suspended: ` +
    `pending ratio ≥ 0.5 (${pending} pending / ${resolved} resolved ` +
    `observations at the current dose)</div>`
  );
}

export function renderDoseTable(doc: TrialDocument): string {
  const rows = doseTallies(doc).map((t) => {
    const classes = [];
    if (t.level === doc.state.current_level) classes.push("current");
    if (t.eliminated) classes.push("eliminated");
    const badge = t.eliminated ? ' <span class="badge-elim">eliminated</span>' : "";
    return (
      `<tr class="${classes.join(" ")}">` +
      `<td>d${t.level}${badge}</td><td>${t.n}</td>` +
      `<td>${t.dltEvents}</td><td>${t.dltPending}</td>` +
      `<td>${t.intolEvents}</td><td>${t.intolPending}</td></tr>`
    );
  });
  return [
    `<table class="dose-table"><thead><tr>`,
    `<th>dose</th><th>n</th><th>DLT events</th><th>DLT pending</th>`,
    `<th>intol events</th><th>intol pending</th>`,
    `</tr></thead><tbody>`,
    ...rows,
    `</tbody></table>`,
  ].join("");
}

/** Horizontal bar chart of observed per-dose event fractions as inline SVG.
 *
 * Bars show raw observed fractions (bookkeeping, not design estimates);
 * dashed lines mark the two target rates.
 */
export function renderTargetChart(doc: TrialDocument): string {
  const tallies = doseTallies(doc);
  const { phi_t: phiT, phi_r: phiR } = doc.config;
  const width = 420;
  const rowH = 34;
  const height = tallies.length * rowH + 24;
  const barMax = width - 90;
  const x = (frac: number) => 70 + frac * barMax;
  const parts = [
    `<svg class="target-chart" viewBox="0 0 ${width} ${height}" role="img">`,
  ];
  tallies.forEach((t, i) => {
    const y = i * rowH + 18;
    const fracT = t.n ? t.dltEvents / t.n : 0;
    const fracR = t.n ? t.intolEvents / t.n : 0;
    parts.push(
      `<text x="4" y="${y + 12}">d${t.level}</text>`,
      `<rect class="bar-dlt" x="70" y="${y}" width="${fracT * barMax}" height="10"></rect>`,
      `<rect class="bar-intol" x="70" y="${y + 12}" width="${fracR * barMax}" height="10"></rect>`,
    );
  });
  parts.push(
    `<line class="target-dlt" x1="${x(phiT)}" y1="10" x2="${x(phiT)}" y2="${height - 14}" stroke-dasharray="4 3"></line>`,
    `<line class="target-intol" x1="${x(phiR)}" y1="10" x2="${x(phiR)}" y2="${height - 14}" stroke-dasharray="4 3"></line>`,
    `<text x="${x(phiT) - 12}" y="${height - 2}">φT</text>`,
    `<text x="${x(phiR) - 12}" y="${height - 2}">φR</text>`,
    `</svg>`,
  );
  return parts.join("");
}

export function renderTrialView(
  doc: TrialDocument,
  rec: Recommendation,
): string {
  return [
    `<section class="trial-view" data-trial="${escapeHtml(doc.id)}" data-version="${doc.version}">`,
    `<h2>Trial ${escapeHtml(doc.id)} · ${escapeHtml(doc.config.design)}</h2>`,
    renderSuspensionBanner(rec),
    renderRecommendation(rec),
    renderDoseTable(doc),
    renderTargetChart(doc),
    `</section>`,
  ].join("");
}

export function renderFieldErrors(detail: unknown): string {
  if (!Array.isArray(detail)) {
    return `<p class="form-error">${escapeHtml(String(detail))}</p>`;
  }
  const items = detail.map((d) => {
    const loc = Array.isArray(d?.loc) ? d.loc.join(".") : "";
    const msg = typeof d?.msg === "string" ? d.msg : JSON.stringify(d);
    return `<li>${escapeHtml(loc ? `${loc}: ${msg}` : msg)}</li>`;
  });
  return `<ul class="form-errors">${items.join("")}</ul>`;
}
