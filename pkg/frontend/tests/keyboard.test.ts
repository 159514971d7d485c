import { describe, expect, it } from 'vitest';

import { buildDecision, canSubmit, emptyDraft } from '../src/decision.js';
import { handleKey } from '../src/keyboard.js';

describe('keyboard loop', () => {
  it('marks valid and submits with keys alone', () => {
    let draft = emptyDraft();
    draft = handleKey('v', draft).draft;
    expect(canSubmit(draft)).toBe(true);
    const outcome = handleKey('Enter', draft);
    expect(outcome.command).toBe('submit');
  });

  it('digit keys toggle reasons and imply the invalid verdict', () => {
    let draft = emptyDraft();
    draft = handleKey('3', draft).draft;
    expect(draft.verdict).toBe('invalid');
    expect([...draft.reasons]).toEqual(['duplicate_ui']);
    const body = buildDecision(draft, 'kb');
    expect(body.reasons).toEqual(['duplicate_ui']);
  });

  it('enter does nothing while the draft is unsubmittable', () => {
    const outcome = handleKey('Enter', emptyDraft());
    expect(outcome.command).toBeNull();
    expect(outcome.handled).toBe(false);
  });

  it('o requests focus for the other-text field', () => {
    expect(handleKey('o', emptyDraft()).command).toBe('focus-other');
  });

  it('unknown keys are left to the browser', () => {
    expect(handleKey('x', emptyDraft()).handled).toBe(false);
  });
});
