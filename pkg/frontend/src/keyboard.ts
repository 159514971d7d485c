// Keyboard-only decide-advance loop: verdicts, reason toggles, submit.

import { DecisionDraft, canSubmit, chooseVerdict, toggleReason } from './decision.js';
import { REASONS } from './types.js';

export type Command = 'submit' | 'focus-other' | null;

export interface KeyOutcome {
  draft: DecisionDraft;
  command: Command;
  handled: boolean;
}

export const KEY_HELP = [
  ['v', 'mark valid'],
  ['i', 'mark invalid'],
  ['1-4', 'toggle reason (implies invalid)'],
  ['o', 'edit the other-reason text'],
  ['Enter', 'submit and advance'],
] as const;

export function handleKey(key: string, draft: DecisionDraft): KeyOutcome {
  if (key === 'v') {
    return { draft: chooseVerdict(draft, 'valid'), command: null, handled: true };
  }
  if (key === 'i') {
    return { draft: chooseVerdict(draft, 'invalid'), command: null, handled: true };
  }
  const reasonIndex = Number.parseInt(key, 10) - 1;
  if (reasonIndex >= 0 && reasonIndex < REASONS.length) {
    return { draft: toggleReason(draft, REASONS[reasonIndex]), command: null, handled: true };
  }
  if (key === 'o') {
    return { draft, command: 'focus-other', handled: true };
  }
  if (key === 'Enter' && canSubmit(draft)) {
    return { draft, command: 'submit', handled: true };
  }
  return { draft, command: null, handled: false };
}
