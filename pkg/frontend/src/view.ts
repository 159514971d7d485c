// DOM rendering: screenshot with box overlays, reason form, status strip.

import { AnnotationApi } from './api.js';
import { DecisionDraft, canSubmit, draftProblems } from './decision.js';
import { scaleBoxes } from './overlay.js';
import { REASONS, REASON_LABELS, UiRecord } from './types.js';

export interface ViewElements {
  stage: HTMLElement;
  image: HTMLImageElement;
  overlay: HTMLElement;
  placeholder: HTMLElement;
  retryButton: HTMLButtonElement;
  meta: HTMLElement;
  form: HTMLElement;
  otherInput: HTMLInputElement;
  submitButton: HTMLButtonElement;
  notice: HTMLElement;
  progress: HTMLElement;
}

export function grabElements(root: Document): ViewElements {
  const byId = (id: string) => {
    const el = root.getElementById(id);
    if (!el) {
      throw new Error(`missing element #${id}`);
    }
    return el;
  };
  return {
    stage: byId('stage'),
    image: byId('screenshot') as HTMLImageElement,
    overlay: byId('overlay'),
    placeholder: byId('placeholder'),
    retryButton: byId('retry') as HTMLButtonElement,
    meta: byId('meta'),
    form: byId('reasons'),
    otherInput: byId('other-text') as HTMLInputElement,
    submitButton: byId('submit') as HTMLButtonElement,
    notice: byId('notice'),
    progress: byId('progress'),
  };
}

export function renderRecord(els: ViewElements, api: AnnotationApi, record: UiRecord | null): void {
  els.overlay.replaceChildren();
  els.placeholder.style.display = 'none';
  if (!record) {
    els.image.style.display = 'none';
    els.meta.textContent = 'Queue drained - nothing left to annotate.';
    return;
  }
  els.image.style.display = '';
  els.image.src = api.screenshotUrl(record.screenshot_url);
  els.meta.textContent = `${record.app_id} - ${record.activity} - ${record.boxes.length} elements`;
}

/** Draw one absolutely positioned div per payload box at the displayed scale. */
export function renderOverlay(els: ViewElements, record: UiRecord): void {
  const displayWidth = els.image.clientWidth;
  const displayHeight = els.image.clientHeight;
  if (displayWidth === 0 || displayHeight === 0) {
    return;
  }
  els.overlay.style.left = `${els.image.offsetLeft}px`;
  els.overlay.style.top = `${els.image.offsetTop}px`;
  els.overlay.style.width = `${displayWidth}px`;
  els.overlay.style.height = `${displayHeight}px`;
  const scaled = scaleBoxes(record.boxes, record.screen, displayWidth, displayHeight);
  els.overlay.replaceChildren(
    ...scaled.map((box) => {
      const div = document.createElement('div');
      div.className = 'vh-box';
      div.style.left = `${box.left}px`;
      div.style.top = `${box.top}px`;
      div.style.width = `${box.width}px`;
      div.style.height = `${box.height}px`;
      return div;
    }),
  );
}

export function showImageFailure(els: ViewElements): void {
  els.image.style.display = 'none';
  els.overlay.replaceChildren();
  els.placeholder.style.display = '';
}

export function renderForm(els: ViewElements, draft: DecisionDraft): void {
  els.form.replaceChildren();
  for (const [i, reason] of REASONS.entries()) {
    const label = document.createElement('label');
    const box = document.createElement('input');
    box.type = 'checkbox';
    box.checked = draft.reasons.has(reason);
    box.dataset.reason = reason;
    label.append(box, ` [${i + 1}] ${REASON_LABELS[reason]}`);
    els.form.append(label);
  }
  const verdictLine = document.createElement('p');
  verdictLine.textContent =
    draft.verdict === null ? 'verdict: (press v or i)' : `verdict: ${draft.verdict}`;
  els.form.append(verdictLine);
  els.otherInput.style.display = draft.reasons.has('other') ? '' : 'none';
  els.submitButton.disabled = !canSubmit(draft);
  els.submitButton.title = draftProblems(draft).join('; ');
}

export function renderStatus(
  els: ViewElements,
  notice: string,
  decided: number,
  retries: number,
): void {
  els.notice.textContent = notice;
  const retryNote = retries > 0 ? ` (${retries} decision(s) queued offline)` : '';
  els.progress.textContent = `${decided} decided${retryNote}`;
}
