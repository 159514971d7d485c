// Decision drafting with client-side mirrors of the service's 422 rules:
// the webapp must never send a request the service would reject.

import { DecisionBody, Reason, Verdict } from './types.js';

export interface DecisionDraft {
  verdict: Verdict | null;
  reasons: Set<Reason>;
  otherText: string;
}

export function emptyDraft(): DecisionDraft {
  return { verdict: null, reasons: new Set(), otherText: '' };
}

/** Human-readable rule violations; empty means the draft is submittable. */
export function draftProblems(draft: DecisionDraft): string[] {
  const problems: string[] = [];
  if (draft.verdict === null) {
    problems.push('choose a verdict first');
    return problems;
  }
  if (draft.verdict === 'valid' && draft.reasons.size > 0) {
    problems.push('a valid UI must not carry reasons');
  }
  if (draft.verdict === 'invalid' && draft.reasons.size === 0) {
    problems.push('an invalid UI needs at least one reason');
  }
  if (draft.reasons.has('other') && draft.otherText.trim() === '') {
    problems.push("reason 'other' needs a short explanation");
  }
  return problems;
}

export function canSubmit(draft: DecisionDraft): boolean {
  return draftProblems(draft).length === 0;
}

/** Toggling a reason implies the invalid verdict; valid clears reasons. */
export function toggleReason(draft: DecisionDraft, reason: Reason): DecisionDraft {
  const reasons = new Set(draft.reasons);
  if (reasons.has(reason)) {
    reasons.delete(reason);
  } else {
    reasons.add(reason);
  }
  return { verdict: 'invalid', reasons, otherText: draft.otherText };
}

export function chooseVerdict(draft: DecisionDraft, verdict: Verdict): DecisionDraft {
  if (verdict === 'valid') {
    return { verdict, reasons: new Set(), otherText: draft.otherText };
  }
  return { ...draft, verdict };
}

export function buildDecision(draft: DecisionDraft, annotatorId: string): DecisionBody {
  const problems = draftProblems(draft);
  if (problems.length > 0) {
    throw new Error(`draft not submittable: ${problems.join('; ')}`);
  }
  return {
    verdict: draft.verdict as Verdict,
    reasons: [...draft.reasons],
    other_text: draft.reasons.has('other') ? draft.otherText.trim() : '',
    annotator_id: annotatorId,
  };
}
