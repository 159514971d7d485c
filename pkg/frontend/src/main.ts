// Bootstrap: wire the queue, keyboard loop and view together.

import { AnnotationApi } from './api.js';
import { DecisionDraft, buildDecision, emptyDraft } from './decision.js';
import { handleKey } from './keyboard.js';
import { AnnotationQueue } from './queue.js';
import {
  grabElements,
  renderForm,
  renderOverlay,
  renderRecord,
  renderStatus,
  showImageFailure,
} from './view.js';

function apiBase(): string {
  const fromQuery = new URLSearchParams(window.location.search).get('api');
  return (fromQuery ?? '').replace(/\/$/, '');
}

function annotatorId(): string {
  const fromQuery = new URLSearchParams(window.location.search).get('annotator');
  return fromQuery ?? 'anonymous';
}

async function boot(): Promise<void> {
  const els = grabElements(document);
  const api = new AnnotationApi(apiBase());
  const queue = new AnnotationQueue(api);
  let draft: DecisionDraft = emptyDraft();

  const refresh = () => {
    renderRecord(els, api, queue.current());
    renderForm(els, draft);
    renderStatus(els, queue.notice() || queue.rejection(), queue.progress().decided, queue.pendingRetries());
    const next = queue.upNext();
    if (next) {
      new Image().src = api.screenshotUrl(next.screenshot_url);
    }
  };

  els.image.addEventListener('load', () => {
    const record = queue.current();
    if (record) {
      renderOverlay(els, record);
    }
  });
  els.image.addEventListener('error', () => showImageFailure(els));
  els.retryButton.addEventListener('click', () => {
    const record = queue.current();
    if (record) {
      els.placeholder.style.display = 'none';
      els.image.style.display = '';
      els.image.src = `${api.screenshotUrl(record.screenshot_url)}?retry=${Date.now()}`;
    }
  });

  const submit = async () => {
    const record = queue.current();
    if (!record) {
      return;
    }
    await queue.submit(buildDecision(draft, annotatorId()));
    draft = emptyDraft();
    refresh();
  };

  els.submitButton.addEventListener('click', () => void submit());
  els.form.addEventListener('change', (event) => {
    const target = event.target as HTMLInputElement;
    if (target.dataset.reason) {
      const outcome = handleKey(
        String(Array.from(els.form.querySelectorAll('input')).indexOf(target) + 1),
        draft,
      );
      draft = outcome.draft;
      refresh();
    }
  });
  els.otherInput.addEventListener('input', () => {
    draft = { ...draft, otherText: els.otherInput.value };
    renderForm(els, draft);
    els.otherInput.focus();
  });

  document.addEventListener('keydown', (event) => {
    if (event.target === els.otherInput && event.key !== 'Enter') {
      return;
    }
    const outcome = handleKey(event.key, draft);
    if (!outcome.handled) {
      return;
    }
    event.preventDefault();
    draft = outcome.draft;
    if (outcome.command === 'submit') {
      void submit();
      return;
    }
    if (outcome.command === 'focus-other') {
      els.otherInput.style.display = '';
      els.otherInput.focus();
    }
    refresh();
  });

  await queue.start();
  refresh();
}

void boot();
