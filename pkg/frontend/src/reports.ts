/**
 * Report rendering. These functions turn reports API payloads into HTML
 * strings without computing any statistics themselves: every number on
 * screen is a server value passed through String().
 */

import { AgreementReport, CrosstabReport, ProportionsReport } from './api.js';

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

export const NO_PAIRS_MESSAGE = 'no jointly-labeled questions';
export const UNDEFINED_KAPPA_MESSAGE = 'undefined (degenerate marginals)';

/** 4x4 confusion matrix plus percent agreement and kappa. */
export function renderAgreement(report: AgreementReport): string {
  const header = report.classes.map((cls) => `<th>${escapeHtml(cls)}</th>`).join('');
  const rows = report.matrix
    .map((row, i) => {
      const cells = row.map((count) => `<td>${String(count)}</td>`).join('');
      return `<tr><th>${escapeHtml(report.classes[i])}</th>${cells}</tr>`;
    })
    .join('');
  const kappa =
    report.kappa === null ? UNDEFINED_KAPPA_MESSAGE : String(report.kappa);
  return [
    `<table class="matrix"><thead><tr><th></th>${header}</tr></thead>`,
    `<tbody>${rows}</tbody></table>`,
    `<dl class="stats">`,
    `<dt>pairs</dt><dd>${String(report.pairs)}</dd>`,
    `<dt>percent agreement</dt><dd>${String(report.percent_agreement)}</dd>`,
    `<dt>&kappa;</dt><dd>${kappa}</dd>`,
    `</dl>`,
  ].join('');
}

/** Explicit empty-state panel, used when a report has nothing to show. */
export function renderEmptyPanel(message: string): string {
  return `<div class="empty-panel">${escapeHtml(message)}</div>`;
}

/** Horizontal bars, one per entry, heights straight from the payload. */
export function renderProportions(report: ProportionsReport): string {
  if (report.entries.length === 0) {
    return renderEmptyPanel('no data');
  }
  const bars = report.entries
    .map((entry) => {
      const percent = entry.decimal * 100;
      return [
        `<div class="bar-row">`,
        `<span class="bar-label">${escapeHtml(entry.key)}</span>`,
        `<span class="bar" style="width: ${percent}%"></span>`,
        `<span class="bar-value" title="${escapeHtml(entry.fraction)}">${String(entry.decimal)}</span>`,
        `</div>`,
      ].join('');
    })
    .join('');
  return `<div class="bars" data-dimension="${escapeHtml(report.dimension)}">${bars}</div>`;
}

/** Prompt-category by label-class contingency table. */
export function renderCrosstab(report: CrosstabReport): string {
  if (report.total === 0) {
    return renderEmptyPanel(NO_PAIRS_MESSAGE);
  }
  const header = report.labels.map((label) => `<th>${escapeHtml(label)}</th>`).join('');
  const rows = report.counts
    .map((row, i) => {
      const cells = row.map((count) => `<td>${String(count)}</td>`).join('');
      return `<tr><th>${escapeHtml(report.categories[i])}</th>${cells}</tr>`;
    })
    .join('');
  return [
    `<table class="matrix crosstab"><thead><tr><th></th>${header}</tr></thead>`,
    `<tbody>${rows}</tbody>`,
    `<tfoot><tr><th>total</th><td colspan="${report.labels.length}">${String(report.total)}</td></tr></tfoot>`,
    `</table>`,
  ].join('');
}
