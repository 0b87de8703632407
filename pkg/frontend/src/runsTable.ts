// Run list with live status cells; rows appear optimistically on submit.

import type { RunRecord } from "./types";

export class RunsTable {
  readonly el: HTMLElement;
  private records = new Map<string, RunRecord>();
  private onSelect: (record: RunRecord) => void;
  private selected: string | null = null;

  constructor(container: HTMLElement, onSelect: (record: RunRecord) => void) {
    this.el = container;
    this.onSelect = onSelect;
    this.el.innerHTML = `
      <table class="runs-table">
        <thead><tr><th>run</th><th>&epsilon;</th><th>replicates</th><th>status</th></tr></thead>
        <tbody></tbody>
      </table>`;
    this.el.addEventListener("click", (ev) => {
      const row = (ev.target as HTMLElement).closest("tr[data-run]");
      if (!row) return;
      const record = this.records.get((row as HTMLElement).dataset.run ?? "");
      if (record) {
        this.selected = record.run_id;
        this.highlight();
        this.onSelect(record);
      }
    });
  }

  upsert(record: RunRecord): void {
    const fresh = !this.records.has(record.run_id);
    this.records.set(record.run_id, record);
    const body = this.el.querySelector("tbody")!;
    let row = body.querySelector<HTMLTableRowElement>(`tr[data-run="${record.run_id}"]`);
    if (!row) {
      row = document.createElement("tr");
      row.dataset.run = record.run_id;
      body.prepend(row);
    }
    const eps = (record.config.epsilons ?? []).join(", ");
    row.innerHTML = `
      <td class="run-id">${record.run_id}</td>
      <td>${eps}</td>
      <td>${record.config.replicates ?? ""}</td>
      <td class="run-status" data-status="${record.status}">${record.status}${record.error ? `: ${record.error}` : ""}</td>`;
    if (fresh) this.highlight();
  }

  get(runId: string): RunRecord | undefined {
    return this.records.get(runId);
  }

  private highlight(): void {
    this.el.querySelectorAll("tr[data-run]").forEach((row) => {
      row.classList.toggle(
        "selected",
        (row as HTMLElement).dataset.run === this.selected,
      );
    });
  }
}
