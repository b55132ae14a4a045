// Question-box controller: validates the (selection, question) precondition,
// posts at most one in-flight request, and hands rendered exchanges back to
// the caller. DOM-free; app.ts owns the actual elements.

import { ApiClient } from "./api.js";
import { renderQaError, renderQaResponse } from "./render.js";
import { SelectionState } from "./selection.js";
import { QAResponseBody } from "./types.js";

export interface SubmitGate {
  enabled: boolean;
  hint: string | null;
}

// the submit button is disabled until both preconditions hold
export function submitGate(state: SelectionState, question: string): SubmitGate {
  if (state.selectedIds.length === 0) {
    return { enabled: false, hint: "Select chart elements (box or lasso) to anchor your question." };
  }
  if (question.trim().length === 0) {
    return { enabled: false, hint: "Type a question about the selection." };
  }
  return { enabled: true, hint: null };
}

export interface QaOutcome {
  html: string;
  response: QAResponseBody | null;
  error: boolean;
}

export class QaController {
  private inFlight = false;
  private queue: { selection: string[]; question: string }[] = [];
  readonly exchanges: QaOutcome[] = [];

  constructor(
    private client: ApiClient,
    private reportId: string,
  ) {}

  get busy(): boolean {
    return this.inFlight;
  }

  // at most one in-flight request; later submissions queue in order
  async submit(state: SelectionState, question: string): Promise<QaOutcome> {
    const gate = submitGate(state, question);
    if (!gate.enabled) {
      const outcome = { html: renderQaError(gate.hint ?? "Cannot submit yet."), response: null, error: true };
      return outcome;
    }
    if (this.inFlight) {
      this.queue.push({ selection: [...state.selectedIds], question });
      return { html: "", response: null, error: false };
    }
    return this.send([...state.selectedIds], question);
  }

  private async send(selection: string[], question: string): Promise<QaOutcome> {
    this.inFlight = true;
    let outcome: QaOutcome;
    try {
      const response = await this.client.ask(this.reportId, { selection, question });
      outcome = { html: renderQaResponse(response), response, error: false };
    } catch (err) {
      const detail = err instanceof Error ? err.message : String(err);
      outcome = { html: renderQaError(`The question could not be answered: ${detail}`), response: null, error: true };
    } finally {
      this.inFlight = false;
    }
    this.exchanges.push(outcome);
    const next = this.queue.shift();
    if (next) {
      await this.send(next.selection, next.question);
    }
    return outcome;
  }
}
