import { ApiClient, ApiError } from "./api";
import { ActionComposer } from "./composer";
import {
  renderComposer,
  renderError,
  renderResults,
  renderState,
  renderTimeline,
} from "./render";
import type { HistoryEntry, QueryActionRow, QueryForm, StateDoc } from "./types";

export interface ExplorerElements {
  state: HTMLElement;
  composer: HTMLElement;
  results: HTMLElement;
  timeline: HTMLElement;
  error: HTMLElement;
  stepButton: HTMLButtonElement;
}

/**
 * Controller for one planning session. Every number shown to the user is
 * taken verbatim from a service response; the composer refuses to submit
 * out-of-bounds cell values.
 */
export class Explorer {
  readonly composer = new ActionComposer();
  sessionId: string | null = null;
  private history: HistoryEntry[] = [];
  private lastForm: QueryForm | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly elements: ExplorerElements,
  ) {
    renderState(this.elements.state, null);
    this.elements.stepButton.disabled = true;
  }

  async createSession(n: number, mode: "exact" | "approx", seed = 0): Promise<void> {
    await this.guard(async () => {
      const created = await this.api.createSession({
        family: "epidemic",
        n,
        mode,
        seed,
      });
      this.sessionId = created.session_id;
      this.history = [];
      await this.refresh(created.initial_state);
      renderResults(this.elements.results, [], () => undefined);
      renderTimeline(this.elements.timeline, this.history);
    });
  }

  private async refresh(state?: StateDoc): Promise<void> {
    if (!this.sessionId) return;
    const current =
      state ?? (await this.api.getState(this.sessionId)).state;
    renderState(this.elements.state, current);
    const actions = await this.api.getActions(this.sessionId);
    this.composer.setBounds(actions.actions);
    this.renderComposerPanel();
  }

  private renderComposerPanel(): void {
    renderComposer(this.elements.composer, this.composer.allCells(), (p, b, v) => {
      this.composer.setValue(p, b, v);
      this.renderComposerPanel();
    });
    this.elements.stepButton.disabled =
      this.sessionId === null || !this.composer.isValid();
  }

  async runQuery(form: QueryForm): Promise<QueryActionRow[]> {
    if (!this.sessionId) return [];
    this.lastForm = form;
    let rows: QueryActionRow[] = [];
    await this.guard(async () => {
      const result = await this.api.postQuery(this.sessionId!, form);
      rows = result.actions;
      this.history.push({ kind: "query", result_size: rows.length });
      renderResults(this.elements.results, rows, (row) => this.selectRow(row));
      renderTimeline(this.elements.timeline, this.history);
    });
    return rows;
  }

  selectRow(row: QueryActionRow): void {
    this.composer.load(row.action);
    this.renderComposerPanel();
  }

  async step(): Promise<void> {
    if (!this.sessionId || !this.composer.isValid()) return;
    const action = this.composer.toAction();
    await this.guard(async () => {
      const result = await this.api.postStep(this.sessionId!, action);
      this.history.push({
        kind: "step",
        action,
        reward: result.reward,
        next_state: result.next_state,
      });
      renderTimeline(this.elements.timeline, this.history);
      this.composer.reset();
      await this.refresh(result.next_state);
      if (this.lastForm) {
        await this.runQuery(this.lastForm);
      }
    });
  }

  private async guard(work: () => Promise<void>): Promise<void> {
    try {
      renderError(this.elements.error, null);
      await work();
    } catch (err) {
      const message =
        err instanceof ApiError
          ? `service error ${err.status}: ${err.message}`
          : String(err);
      renderError(this.elements.error, message);
    }
  }
}

/** Compose the service predicate grammar from form fields. */
export function buildPredicate(
  prv: string,
  value: "true" | "false",
  cmp: ">=" | "<=" | "=",
  threshold: string,
): string | null {
  if (!prv) return null;
  const bound = threshold.trim() === "half" ? "half" : String(parseInt(threshold, 10));
  return `count(${prv},${value}) ${cmp} ${bound}`;
}
