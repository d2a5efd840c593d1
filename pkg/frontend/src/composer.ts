import type { ActionDoc } from "./types";

export interface ComposerCell {
  parfactor: string;
  bucket: number;
  max: number;
  value: number;
}

/**
 * Action composer backing model. Cell maxima are derived from the server's
 * admissible-action list, so the composer can never submit a request the
 * server would reject for bounds.
 */
export class ActionComposer {
  private cells: ComposerCell[] = [];

  /** Rebuild cell bounds from the admissible actions of the current state. */
  setBounds(actions: ActionDoc[]): void {
    const maxima = new Map<string, number[]>();
    for (const action of actions) {
      for (const [parfactor, counts] of Object.entries(action)) {
        const current = maxima.get(parfactor) ?? new Array(counts.length).fill(0);
        counts.forEach((count, i) => {
          current[i] = Math.max(current[i], count);
        });
        maxima.set(parfactor, current);
      }
    }
    this.cells = [];
    for (const [parfactor, bounds] of maxima.entries()) {
      bounds.forEach((max, bucket) => {
        this.cells.push({ parfactor, bucket, max, value: 0 });
      });
    }
  }

  allCells(): readonly ComposerCell[] {
    return this.cells;
  }

  /** Clamp into [0, max]; returns the accepted value. */
  setValue(parfactor: string, bucket: number, raw: number): number {
    const cell = this.cells.find(
      (c) => c.parfactor === parfactor && c.bucket === bucket,
    );
    if (!cell) throw new Error(`no composer cell ${parfactor}[${bucket}]`);
    const value = Math.round(raw);
    cell.value = Math.min(Math.max(value, 0), cell.max);
    return cell.value;
  }

  /** True when every cell sits inside its bounds. */
  isValid(): boolean {
    return this.cells.every((c) => c.value >= 0 && c.value <= c.max);
  }

  /** Load an action (e.g. a clicked result row) into the composer. */
  load(action: ActionDoc): void {
    for (const cell of this.cells) {
      const counts = action[cell.parfactor];
      cell.value = counts ? Math.min(counts[cell.bucket] ?? 0, cell.max) : 0;
    }
  }

  reset(): void {
    for (const cell of this.cells) cell.value = 0;
  }

  toAction(): ActionDoc {
    if (!this.isValid()) {
      throw new Error("composer holds an out-of-bounds action");
    }
    const out: ActionDoc = {};
    for (const cell of this.cells) {
      const counts = out[cell.parfactor] ?? [];
      counts[cell.bucket] = cell.value;
      out[cell.parfactor] = counts;
    }
    return out;
  }
}
