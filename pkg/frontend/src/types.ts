// Wire types for the annotation service HTTP API.

export interface Box {
  left: number;
  top: number;
  right: number;
  bottom: number;
}

export interface ScreenSize {
  width: number;
  height: number;
}

export interface UiRecord {
  record_id: string;
  app_id: string;
  activity: string;
  status: string;
  screenshot_url: string;
  screen: ScreenSize;
  boxes: Box[];
}

export interface UiPage {
  items: UiRecord[];
  next_cursor: string | null;
}

export type Verdict = 'valid' | 'invalid';

export type Reason =
  | 'partially_rendered'
  | 'overlaid_view_hierarchy'
  | 'duplicate_ui'
  | 'other';

export const REASONS: Reason[] = [
  'partially_rendered',
  'overlaid_view_hierarchy',
  'duplicate_ui',
  'other',
];

export const REASON_LABELS: Record<Reason, string> = {
  partially_rendered: 'Partially rendered UI',
  overlaid_view_hierarchy: 'Overlaid view hierarchy',
  duplicate_ui: 'Duplicate UI',
  other: 'Other reason',
};

export interface DecisionBody {
  verdict: Verdict;
  reasons: Reason[];
  other_text: string;
  annotator_id: string;
}
