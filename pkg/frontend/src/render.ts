import type { ComposerCell } from "./composer";
import type { HistoryEntry, QueryActionRow, StateDoc } from "./types";

/** Bucket labels in binary-counting order: f, t / ff, ft, tf, tt / ... */
export function bucketLabels(buckets: number): string[] {
  const bits = Math.max(1, Math.round(Math.log2(buckets)));
  const labels: string[] = [];
  for (let i = 0; i < buckets; i++) {
    labels.push(i.toString(2).padStart(bits, "0").replace(/0/g, "f").replace(/1/g, "t"));
  }
  return labels;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  if (text !== undefined) node.textContent = text;
  return node;
}

/** Histograms as labeled counts, propositional RVs as on/off badges. */
export function renderState(container: HTMLElement, state: StateDoc | null): void {
  container.replaceChildren();
  if (state === null) {
    container.append(el("p", { class: "placeholder" }, "No session yet."));
    return;
  }
  for (const [name, entry] of Object.entries(state)) {
    if (typeof entry === "boolean") {
      const badge = el(
        "span",
        {
          class: `badge ${entry ? "badge-on" : "badge-off"}`,
          "data-testid": `badge-${name}`,
          "data-value": String(entry),
        },
        `${name}: ${entry ? "on" : "off"}`,
      );
      container.append(badge);
      continue;
    }
    const block = el("div", { class: "clique", "data-testid": `clique-${name}` });
    block.append(el("h3", {}, name));
    const list = el("ul", { class: "buckets" });
    const labels = bucketLabels(entry.length);
    entry.forEach((count, i) => {
      list.append(
        el(
          "li",
          { "data-bucket": labels[i], "data-count": String(count) },
          `${labels[i]}: ${count}`,
        ),
      );
    });
    block.append(list);
    container.append(block);
  }
}

/** Sliders bounded by the current state's bucket counts. */
export function renderComposer(
  container: HTMLElement,
  cells: readonly ComposerCell[],
  onChange: (parfactor: string, bucket: number, value: number) => void,
): void {
  container.replaceChildren();
  if (cells.length === 0) {
    container.append(el("p", { class: "placeholder" }, "No concurrent action cells."));
    return;
  }
  for (const cell of cells) {
    const row = el("label", { class: "composer-row" });
    const labels = bucketLabels(
      cells.filter((c) => c.parfactor === cell.parfactor).length,
    );
    row.append(
      el("span", {}, `${cell.parfactor} @ ${labels[cell.bucket]} (max ${cell.max})`),
    );
    const slider = el("input", {
      type: "range",
      min: "0",
      max: String(cell.max),
      value: String(cell.value),
      "data-testid": `cell-${cell.parfactor}-${cell.bucket}`,
    });
    slider.addEventListener("input", () => {
      onChange(cell.parfactor, cell.bucket, Number(slider.value));
    });
    const readout = el(
      "output",
      { "data-testid": `cell-value-${cell.parfactor}-${cell.bucket}` },
      String(cell.value),
    );
    row.append(slider, readout);
    container.append(row);
  }
}

/** Result rows sorted by the server; clicking one loads it into the composer. */
export function renderResults(
  container: HTMLElement,
  rows: QueryActionRow[],
  onSelect: (row: QueryActionRow) => void,
): void {
  container.replaceChildren();
  if (rows.length === 0) {
    container.append(el("p", { class: "placeholder" }, "No actions satisfy the query."));
    return;
  }
  const table = el("table", { class: "results", "data-testid": "results-table" });
  const head = el("tr");
  for (const title of ["action", "Q", "restriction probability"]) {
    head.append(el("th", {}, title));
  }
  table.append(head);
  rows.forEach((row, index) => {
    const tr = el("tr", {
      class: "result-row",
      "data-testid": `result-row-${index}`,
      "data-q": String(row.q),
      "data-prob": String(row.probability),
    });
    tr.append(el("td", {}, formatAction(row.action)));
    tr.append(el("td", { class: "q-value" }, String(row.q)));
    tr.append(el("td", {}, String(row.probability)));
    tr.addEventListener("click", () => onSelect(row));
    table.append(tr);
  });
  container.append(table);
}

export function formatAction(action: Record<string, number[]>): string {
  return Object.entries(action)
    .map(([parfactor, counts]) => `${parfactor}[${counts.join(",")}]`)
    .join(" ");
}

export function renderTimeline(container: HTMLElement, entries: HistoryEntry[]): void {
  container.replaceChildren();
  const list = el("ol", { class: "timeline", "data-testid": "timeline" });
  for (const entry of entries) {
    if (entry.kind === "step") {
      const action = formatAction(entry.action as Record<string, number[]>);
      list.append(
        el(
          "li",
          { class: "timeline-step" },
          `step ${action} -> reward ${entry.reward}`,
        ),
      );
    } else {
      list.append(
        el("li", { class: "timeline-query" }, `query (${entry.result_size} actions)`),
      );
    }
  }
  container.append(list);
}

export function renderError(container: HTMLElement, message: string | null): void {
  container.textContent = message ?? "";
  container.toggleAttribute("hidden", message === null);
}
