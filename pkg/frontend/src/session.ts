// Headless survey-session flow: instructions gate, per-item state, progress.
// All UI-independent logic lives here so it can be tested without a DOM.

import { ItemPayload, NextResult, SubmitRequest, SurveyClient } from './api';

export const INSTRUCTIONS: Record<'intrusion' | 'rating', string> = {
  intrusion:
    'You will see six words. Five of them belong together; one does not. ' +
    'Pick the word that does not fit with the others, then tell us whether ' +
    'the words are from a subject area you are familiar with.',
  rating:
    'You will see ten words. Rate how related the words are to each other ' +
    'on a three-point scale, then tell us whether the words are from a ' +
    'subject area you are familiar with.',
};

export const RATING_LABELS = ['Not related', 'Somewhat related', 'Very related'];

export interface ItemState {
  item: ItemPayload;
  /** Selected option index (intrusion) or rating 1-3; null until chosen. */
  selection: number | null;
  /** Familiarity control; null until answered. */
  familiar: boolean | null;
  /** Epoch ms when the item was rendered; the timer starts then. */
  renderedAt: number;
}

export function newItemState(item: ItemPayload, now: number = Date.now()): ItemState {
  return { item, selection: null, familiar: null, renderedAt: now };
}

/** Submit stays disabled until both the answer and familiarity are set. */
export function canSubmit(state: ItemState): boolean {
  return state.selection !== null && state.familiar !== null;
}

export function progressFraction(item: ItemPayload): number {
  return (item.n_total - item.n_remaining + 1) / item.n_total;
}

export function buildSubmission(state: ItemState, now: number = Date.now()): SubmitRequest {
  if (!canSubmit(state)) {
    throw new Error('selection and familiarity must both be set before submitting');
  }
  // The timer starts on render, so duration is strictly positive.
  const duration = Math.max((now - state.renderedAt) / 1000, 0.001);
  return {
    item_id: state.item.item_id,
    response: state.selection as number,
    familiar: state.familiar as boolean,
    duration,
  };
}

export function isDone(next: NextResult): next is { done: true } {
  return 'done' in next && next.done === true;
}

/** Fields the service must never include in an item payload. */
const FORBIDDEN_PAYLOAD_FIELDS = ['intruder_index', 'displayed_words', 'topic_ref'];

export function assertNoLeakedFields(payload: object): void {
  for (const field of FORBIDDEN_PAYLOAD_FIELDS) {
    if (field in payload) {
      throw new Error(`service payload leaked forbidden field: ${field}`);
    }
  }
}

export interface SessionCallbacks {
  onInstructions?: (task: 'intrusion' | 'rating') => Promise<void> | void;
  onItem: (state: ItemState) => Promise<void>;
  onProgress?: (fraction: number) => void;
}

/**
 * Drive a full session: acknowledge instructions once per task kind, then
 * answer every assigned item in order. `callbacks.onItem` must set
 * `selection` and `familiar` on the given state (the UI does this through
 * user interaction; tests do it directly).
 */
export async function runSession(
  client: SurveyClient,
  annotatorId: string,
  callbacks: SessionCallbacks,
  now: () => number = Date.now,
): Promise<{ sessionId: string; answered: number }> {
  const session = await client.createSession(annotatorId);
  const instructed = new Set<string>();
  let answered = 0;
  for (;;) {
    const next = await client.nextItem(session.session_id);
    if (isDone(next)) break;
    assertNoLeakedFields(next);
    if (!instructed.has(next.task)) {
      await callbacks.onInstructions?.(next.task);
      instructed.add(next.task);
    }
    callbacks.onProgress?.(progressFraction(next));
    const state = newItemState(next, now());
    await callbacks.onItem(state);
    await client.submitResponse(session.session_id, buildSubmission(state, now()));
    answered += 1;
  }
  return { sessionId: session.session_id, answered };
}
