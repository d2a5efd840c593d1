// JSON shapes mirrored from the planning service.

/** Counting state: clique name -> bucket counts, or a boolean flag. */
export type StateDoc = Record<string, number[] | boolean>;

/** Action histogram: parfactor name -> action-true count per input bucket. */
export type ActionDoc = Record<string, number[]>;

export interface CreateSessionResponse {
  session_id: string;
  mode: "exact" | "approx";
  initial_state: StateDoc;
}

export interface StateResponse {
  state: StateDoc;
  steps: number;
  reward: number;
}

export interface ActionsResponse {
  actions: ActionDoc[];
}

export interface QueryActionRow {
  action: ActionDoc;
  q: number;
  probability: number;
}

export interface QueryResponse {
  mode: string;
  min_reward: number | null;
  min_prob: number;
  state: StateDoc;
  actions: QueryActionRow[];
}

export interface StepResponse {
  next_state: StateDoc;
  reward: number;
  steps: number;
}

export interface HistoryEntry {
  kind: "query" | "step";
  [key: string]: unknown;
}

export interface HistoryResponse {
  history: HistoryEntry[];
}

export interface QueryForm {
  minReward: number | null;
  restriction: string | null;
  minProb: number;
}
