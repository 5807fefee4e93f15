/**
 * Browser entry point: wires the review session and report views into
 * the page served by the cfq service. All state of record lives on the
 * server; the only thing kept locally is the reviewer's display name.
 */

import { ApiClient, Challenge, LabelDefinition, Theme } from './api.js';
import { ApiError } from './api.js';
import {
  NO_PAIRS_MESSAGE,
  renderAgreement,
  renderCrosstab,
  renderEmptyPanel,
  renderProportions,
} from './reports.js';
import { ReviewSession, contextFor } from './review.js';

const ANNOTATOR_KEY = 'cfq-annotator';

const api = new ApiClient();
let session: ReviewSession | null = null;
let labels: LabelDefinition[] = [];
let themes: Theme[] = [];
const challenges = new Map<string, Challenge>();

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
}

function annotatorName(): string {
  let name = localStorage.getItem(ANNOTATOR_KEY) ?? '';
  while (!name.trim()) {
    name = window.prompt('Your reviewer name:') ?? 'anonymous';
  }
  localStorage.setItem(ANNOTATOR_KEY, name);
  return name;
}

function showError(message: string | null): void {
  const banner = el('error-banner');
  banner.textContent = message ?? '';
  banner.style.display = message ? 'block' : 'none';
}

function renderCurrent(): void {
  if (!session) return;
  const pane = el('review-pane');
  const item = session.current;
  if (item === null) {
    pane.innerHTML = renderEmptyPanel('queue finished');
    return;
  }
  const challenge = challenges.get(item.question.challenge_id);
  const context = challenge ? contextFor(item.question, challenge) : [];
  const contextHtml = context.length
    ? context
        .map(
          (line) =>
            `<div class="src-line${line.isAnchor ? ' anchor' : ''}">` +
            `<span class="num">${line.number}</span>` +
            `<code>${escapeText(line.text)}</code></div>`,
        )
        .join('')
    : `<div class="src-line unanchored"><code>${escapeText(item.question.line_code)}</code>` +
      `<span class="note">(not anchored to the source)</span></div>`;
  const labelButtons = labels
    .map(
      (label) =>
        `<button class="label-btn${session!.draftLabel === label.id ? ' active' : ''}" ` +
        `data-label="${label.id}" title="${escapeText(label.definition)}">${label.id}</button>`,
    )
    .join('');
  const themeOptions = ['<option value="">(no theme)</option>']
    .concat(
      themes.map(
        (theme) =>
          `<option value="${theme.id}"${session!.draftTheme === theme.id ? ' selected' : ''}>` +
          `${escapeText(theme.display_name)}</option>`,
      ),
    )
    .join('');
  pane.innerHTML = `
    <div class="progress">${session.position + 1} / ${session.length}</div>
    <div class="question-meta">${escapeText(item.question.category)}
      · ${escapeText(item.question.anchor_status)}
      ${item.suggestedLabel ? `· model suggests <b>${item.suggestedLabel}</b>` : ''}</div>
    <div class="source">${contextHtml}</div>
    <p class="question-text">${escapeText(item.question.question)}</p>
    <div class="controls">
      <div class="labels">${labelButtons}</div>
      <select id="theme-picker">${themeOptions}</select>
      <button id="accept-btn">Accept</button>
      <button id="reject-btn">Reject</button>
      <button id="skip-btn">Skip</button>
    </div>`;
  pane.querySelectorAll<HTMLButtonElement>('.label-btn').forEach((button) => {
    button.addEventListener('click', () => {
      session!.setLabel(button.dataset.label!);
      renderCurrent();
    });
  });
  (el('theme-picker') as HTMLSelectElement).addEventListener('change', (event) => {
    const value = (event.target as HTMLSelectElement).value;
    session!.setTheme(value || null);
  });
  el('accept-btn').addEventListener('click', () => void decide('accept'));
  el('reject-btn').addEventListener('click', () => void decide('reject'));
  el('skip-btn').addEventListener('click', () => {
    session!.skip();
    renderCurrent();
  });
}

function escapeText(text: string): string {
  const div = document.createElement('div');
  div.textContent = text;
  return div.innerHTML;
}

async function decide(action: 'accept' | 'reject'): Promise<void> {
  if (!session) return;
  const result = action === 'accept' ? await session.accept() : await session.reject();
  showError(result.ok ? null : result.error);
  renderCurrent();
}

function bindKeys(): void {
  document.addEventListener('keydown', (event) => {
    if (!session || event.target instanceof HTMLInputElement) return;
    const key = event.key.toUpperCase();
    const byKey: Record<string, string> = { S: 'S', P: 'PL', G: 'G', M: 'M' };
    if (key in byKey) {
      session.setLabel(byKey[key]);
      renderCurrent();
    } else if (key === 'A') {
      void decide('accept');
    } else if (key === 'R') {
      void decide('reject');
    }
  });
}

async function loadReports(): Promise<void> {
  const a = (el('annotator-a') as HTMLInputElement).value.trim();
  const b = (el('annotator-b') as HTMLInputElement).value.trim();
  const agreementPane = el('agreement-pane');
  if (a && b) {
    try {
      agreementPane.innerHTML = renderAgreement(await api.agreement(a, b));
    } catch (error) {
      agreementPane.innerHTML =
        error instanceof ApiError && error.name === 'EmptyMatrix'
          ? renderEmptyPanel(NO_PAIRS_MESSAGE)
          : renderEmptyPanel(String(error));
    }
  }
  for (const dimension of ['labels', 'themes', 'categories']) {
    try {
      el(`proportions-${dimension}`).innerHTML = renderProportions(
        await api.proportions(dimension),
      );
    } catch (error) {
      el(`proportions-${dimension}`).innerHTML = renderEmptyPanel(String(error));
    }
  }
  try {
    el('crosstab-pane').innerHTML = renderCrosstab(await api.crosstab());
  } catch (error) {
    el('crosstab-pane').innerHTML = renderEmptyPanel(String(error));
  }
}

async function createTheme(): Promise<void> {
  const id = (el('theme-id') as HTMLInputElement).value.trim();
  const display = (el('theme-display') as HTMLInputElement).value.trim();
  const description = (el('theme-description') as HTMLInputElement).value.trim();
  if (!id || !display) {
    showError('theme id and display name are required');
    return;
  }
  // themes are shared by every reviewer, so require an explicit confirmation
  if (!window.confirm(`Create the global theme "${id}" for all reviewers?`)) {
    return;
  }
  try {
    await api.addTheme(id, display, description);
    themes = await api.listThemes();
    showError(null);
    renderCurrent();
  } catch (error) {
    showError(String(error));
  }
}

function switchPane(name: string): void {
  document.querySelectorAll<HTMLElement>('.pane').forEach((pane) => {
    pane.style.display = pane.id === `${name}-root` ? 'block' : 'none';
  });
  if (name === 'reports') void loadReports();
}

async function boot(): Promise<void> {
  const annotator = annotatorName();
  el('who').textContent = annotator;
  labels = await api.listLabels();
  themes = await api.listThemes();
  for (const challenge of await api.listChallenges()) {
    challenges.set(challenge.id, challenge);
  }
  session = new ReviewSession(api, annotator);

  const filterSelect = el('challenge-filter') as HTMLSelectElement;
  filterSelect.innerHTML =
    '<option value="">all challenges</option>' +
    Array.from(challenges.values())
      .map((c) => `<option value="${c.id}">${escapeText(c.title)}</option>`)
      .join('');
  const reload = async () => {
    const unlabeledOnly = (el('unlabeled-only') as HTMLInputElement).checked;
    await session!.load({
      challenge: filterSelect.value || undefined,
      onlyUnlabeled: unlabeledOnly,
    });
    renderCurrent();
  };
  filterSelect.addEventListener('change', () => void reload());
  el('unlabeled-only').addEventListener('change', () => void reload());
  el('reload-btn').addEventListener('click', () => void reload());
  el('create-theme-btn').addEventListener('click', () => void createTheme());
  el('refresh-reports-btn').addEventListener('click', () => void loadReports());
  document.querySelectorAll<HTMLElement>('[data-pane]').forEach((tab) => {
    tab.addEventListener('click', () => switchPane(tab.dataset.pane!));
  });

  bindKeys();
  await reload();
}

void boot().catch((error) => showError(String(error)));
