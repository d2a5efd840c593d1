import { ApiClient } from "./api";
import { buildPredicate, Explorer } from "./app";
import type { QueryForm } from "./types";

function need<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

export function boot(apiBase?: string): Explorer {
  const params = new URLSearchParams(window.location.search);
  const base = apiBase ?? params.get("api") ?? "http://127.0.0.1:8080";
  const api = new ApiClient(base);
  const explorer = new Explorer(api, {
    state: need("state-panel"),
    composer: need("composer-panel"),
    results: need("results-panel"),
    timeline: need("timeline-panel"),
    error: need("error-panel"),
    stepButton: need<HTMLButtonElement>("step-button"),
  });

  need<HTMLButtonElement>("create-button").addEventListener("click", () => {
    const n = parseInt(need<HTMLInputElement>("create-n").value, 10);
    const mode = need<HTMLSelectElement>("create-mode").value as "exact" | "approx";
    const seed = parseInt(need<HTMLInputElement>("create-seed").value, 10) || 0;
    void explorer.createSession(n, mode, seed);
  });

  need<HTMLButtonElement>("query-button").addEventListener("click", () => {
    const rawReward = need<HTMLInputElement>("query-min-reward").value.trim();
    const prv = need<HTMLSelectElement>("pred-prv").value;
    const form: QueryForm = {
      minReward: rawReward === "" ? null : Number(rawReward),
      restriction: buildPredicate(
        prv,
        need<HTMLSelectElement>("pred-value").value as "true" | "false",
        need<HTMLSelectElement>("pred-cmp").value as ">=" | "<=" | "=",
        need<HTMLInputElement>("pred-threshold").value,
      ),
      minProb: Number(need<HTMLInputElement>("query-min-prob").value) || 0,
    };
    void explorer.runQuery(form);
  });

  need<HTMLButtonElement>("step-button").addEventListener("click", () => {
    void explorer.step();
  });

  return explorer;
}

if (typeof document !== "undefined" && document.getElementById("state-panel")) {
  boot();
}
