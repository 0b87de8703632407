// Metrics panel: dissimilarity bars with CI whiskers, per-group tables, and
// delta badges against a chosen baseline.
//
// Every displayed statistic comes verbatim from the API payload; the only
// arithmetic performed here is the baseline subtraction for delta badges.
// Exact values ride along in data-value attributes so fidelity is testable.

import type { RunRecord, RunSummary } from "./types";

function fmt(value: number): string {
  return value.toFixed(4);
}

function bar(label: string, value: number, ci?: [number, number]): string {
  const width = Math.min(100, Math.max(0, value * 100));
  const whisker = ci
    ? `<span class="ci-whisker" data-ci-low="${ci[0]}" data-ci-high="${ci[1]}"
         style="left:${Math.min(100, ci[0] * 100)}%;width:${Math.max(0, (ci[1] - ci[0]) * 100)}%"></span>`
    : "";
  return `
    <div class="di-bar" data-label="${label}" data-value="${value}">
      <span class="di-label">${label}</span>
      <span class="di-track"><span class="di-fill" style="width:${width}%"></span>${whisker}</span>
      <span class="di-value">${fmt(value)}</span>
    </div>`;
}

function groupTable(
  title: string,
  columns: Array<{ label: string; values: Record<string, number> }>,
  kind: string,
): string {
  const groups = Object.keys(columns[0]?.values ?? {}).sort();
  const head = columns.map((c) => `<th>${c.label}</th>`).join("");
  const rows = groups
    .map((g) => {
      const cells = columns
        .map(
          (c) =>
            `<td data-kind="${kind}" data-group="${g}" data-column="${c.label}" data-value="${c.values[g]}">${fmt(c.values[g])}</td>`,
        )
        .join("");
      return `<tr><th>${g}</th>${cells}</tr>`;
    })
    .join("");
  return `
    <table class="group-table" data-kind="${kind}">
      <caption>${title}</caption>
      <thead><tr><th>group</th>${head}</tr></thead>
      <tbody>${rows}</tbody>
    </table>`;
}

export class MetricsPanel {
  readonly el: HTMLElement;

  constructor(container: HTMLElement) {
    this.el = container;
    this.el.innerHTML = `<p class="panel-placeholder">No completed run selected yet.</p>`;
  }

  /** Render the candidate run's metrics, with deltas against the baseline. */
  setRuns(candidate: RunRecord, baseline: RunRecord | null = null): void {
    if (candidate.status !== "done" || !candidate.summary) {
      this.el.innerHTML = `<p class="panel-placeholder">Run ${candidate.run_id} is ${candidate.status}&hellip;</p>`;
      return;
    }
    const s = candidate.summary;
    const bars = [
      bar("current", s.current_dissimilarity),
      bar("nonprivate", s.nonprivate_dissimilarity),
      ...s.private.map((p) =>
        bar(`eps=${p.epsilon}`, p.mean_dissimilarity, p.dissimilarity_ci),
      ),
    ].join("");

    const travel = groupTable(
      "mean travel minutes by group",
      [
        { label: "current", values: s.travel_by_group.current },
        { label: "nonprivate", values: s.travel_by_group.nonprivate },
        ...s.private.map((p) => ({
          label: `eps=${p.epsilon}`,
          values: p.mean_travel_by_group,
        })),
      ],
      "travel",
    );
    const rezoned = groupTable(
      "share of students rezoned by group",
      [
        { label: "nonprivate", values: s.pct_rezoned_by_group.nonprivate },
        ...s.private.map((p) => ({
          label: `eps=${p.epsilon}`,
          values: p.mean_pct_rezoned_by_group,
        })),
      ],
      "pct_rezoned",
    );

    this.el.innerHTML = `
      <div class="di-bars">${bars}</div>
      ${this.deltaBadges(s, baseline)}
      ${travel}
      ${rezoned}`;
  }

  private deltaBadges(candidate: RunSummary, baseline: RunRecord | null): string {
    if (!baseline || baseline.status !== "done" || !baseline.summary) return "";
    const b = baseline.summary;
    const entries: Array<[string, number]> = [
      ["current DI", candidate.current_dissimilarity - b.current_dissimilarity],
      ["nonprivate DI", candidate.nonprivate_dissimilarity - b.nonprivate_dissimilarity],
    ];
    for (const p of candidate.private) {
      const match = b.private.find((q) => q.epsilon === p.epsilon);
      if (match) {
        entries.push([
          `eps=${p.epsilon} DI`,
          p.mean_dissimilarity - match.mean_dissimilarity,
        ]);
      }
    }
    const badges = entries
      .map(
        ([label, delta]) =>
          `<span class="delta-badge" data-label="${label}" data-value="${delta}">${label}: ${delta >= 0 ? "+" : ""}${fmt(delta)}</span>`,
      )
      .join("");
    return `<div class="delta-badges">${badges}</div>`;
  }
}
