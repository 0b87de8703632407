import { beforeEach, describe, expect, it } from "vitest";

import { MetricsPanel } from "../src/metricsPanel";
import type { RunRecord } from "../src/types";
import runDone from "./fixtures/run_done.json";

// recorded straight from the live service; display fidelity is checked
// against these exact numbers
const RECORD = runDone as unknown as RunRecord;

let container: HTMLElement;

beforeEach(() => {
  document.body.innerHTML = `<div id="m"></div>`;
  container = document.getElementById("m")!;
});

describe("MetricsPanel display fidelity", () => {
  it("renders every DI bar with the fixture's exact values", () => {
    new MetricsPanel(container).setRuns(RECORD);
    const summary = RECORD.summary!;
    const byLabel = new Map(
      Array.from(container.querySelectorAll<HTMLElement>(".di-bar")).map((el) => [
        el.dataset.label,
        el,
      ]),
    );
    expect(Number(byLabel.get("current")!.dataset.value)).toBe(
      summary.current_dissimilarity,
    );
    expect(Number(byLabel.get("nonprivate")!.dataset.value)).toBe(
      summary.nonprivate_dissimilarity,
    );
    for (const p of summary.private) {
      expect(Number(byLabel.get(`eps=${p.epsilon}`)!.dataset.value)).toBe(
        p.mean_dissimilarity,
      );
    }
  });

  it("CI whiskers span exactly the API's (lo, hi)", () => {
    new MetricsPanel(container).setRuns(RECORD);
    const whiskers = container.querySelectorAll<HTMLElement>(".ci-whisker");
    const summary = RECORD.summary!;
    expect(whiskers).toHaveLength(summary.private.length);
    summary.private.forEach((p, i) => {
      expect(Number(whiskers[i].dataset.ciLow)).toBe(p.dissimilarity_ci[0]);
      expect(Number(whiskers[i].dataset.ciHigh)).toBe(p.dissimilarity_ci[1]);
    });
  });

  it("per-group tables carry the fixture's travel and rezone values verbatim", () => {
    new MetricsPanel(container).setRuns(RECORD);
    const summary = RECORD.summary!;
    for (const [group, minutes] of Object.entries(summary.travel_by_group.current)) {
      const cell = container.querySelector<HTMLElement>(
        `td[data-kind="travel"][data-group="${group}"][data-column="current"]`,
      )!;
      expect(Number(cell.dataset.value)).toBe(minutes);
    }
    const eps = summary.private[0];
    for (const [group, share] of Object.entries(eps.mean_pct_rezoned_by_group)) {
      const cell = container.querySelector<HTMLElement>(
        `td[data-kind="pct_rezoned"][data-group="${group}"][data-column="eps=${eps.epsilon}"]`,
      )!;
      expect(Number(cell.dataset.value)).toBe(share);
    }
  });

  it("baseline equal to candidate gives all-zero deltas", () => {
    new MetricsPanel(container).setRuns(RECORD, RECORD);
    const badges = container.querySelectorAll<HTMLElement>(".delta-badge");
    expect(badges.length).toBeGreaterThan(0);
    badges.forEach((badge) => expect(Number(badge.dataset.value)).toBe(0));
  });

  it("shows a placeholder for incomplete runs", () => {
    const running = { ...RECORD, status: "running" as const, summary: undefined };
    new MetricsPanel(container).setRuns(running);
    expect(container.querySelector(".panel-placeholder")!.textContent).toMatch(/running/);
  });
});
