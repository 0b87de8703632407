// App wiring: district picker, run composer, run list with polling, map, metrics.

import { ApiClient, pollRun } from "./api";
import { Choropleth } from "./choropleth";
import { RunComposer } from "./composer";
import { MetricsPanel } from "./metricsPanel";
import { RunsTable } from "./runsTable";
import type { CompareState, DistrictHandle, RunConfig, RunRecord } from "./types";
import "./style.css";

export class App {
  private api: ApiClient;
  private districts: DistrictHandle[] = [];
  private districtId: string | null = null;
  private compare: CompareState = { baselineRunId: null, candidateRunId: null };
  private pollers = new Map<string, () => void>();

  composer!: RunComposer;
  private runs!: RunsTable;
  private map!: Choropleth;
  private metrics!: MetricsPanel;

  constructor(private root: HTMLElement, api?: ApiClient) {
    this.api = api ?? new ApiClient();
    this.render();
  }

  private render(): void {
    this.root.innerHTML = `
      <header>
        <h1>dp-rezone explorer</h1>
        <p class="tagline">What would privacy-noised student counts do to a diversity-promoting rezoning?</p>
      </header>
      <section class="district-bar">
        <label>district
          <select id="district-select"><option value="">loading&hellip;</option></select>
        </label>
        <button id="new-synthetic">+ synthetic district</button>
      </section>
      <main class="layout">
        <aside>
          <section id="composer"></section>
          <section id="runs"></section>
        </aside>
        <section class="map-pane">
          <div class="layer-controls">
            <label>scenario
              <select id="scenario-select">
                <option value="current">current</option>
                <option value="nonprivate">non-private</option>
                <option value="private">private (mean)</option>
              </select>
            </label>
            <label>epsilon <select id="epsilon-select" disabled></select></label>
            <label>layer
              <select id="layer-select">
                <option value="assignment">assignment</option>
                <option value="rezone_probability">rezone probability</option>
                <option value="population">population</option>
              </select>
            </label>
          </div>
          <div id="map"></div>
        </section>
        <section id="metrics" class="metrics-pane"></section>
      </main>
    `;
    this.composer = new RunComposer(
      this.root.querySelector("#composer")!,
      (config) => void this.launchRun(config),
    );
    this.runs = new RunsTable(this.root.querySelector("#runs")!, (record) =>
      void this.selectRun(record),
    );
    this.map = new Choropleth(this.root.querySelector("#map")!);
    this.metrics = new MetricsPanel(this.root.querySelector("#metrics")!);

    this.root.querySelector("#district-select")!.addEventListener("change", (ev) => {
      this.districtId = (ev.target as HTMLSelectElement).value || null;
    });
    this.root.querySelector("#new-synthetic")!.addEventListener("click", () =>
      void this.createSynthetic(),
    );
    for (const id of ["scenario-select", "epsilon-select", "layer-select"]) {
      this.root.querySelector(`#${id}`)!.addEventListener("change", () =>
        this.applyViewControls(),
      );
    }
    void this.refreshDistricts();
  }

  private async refreshDistricts(): Promise<void> {
    try {
      this.districts = await this.api.listDistricts();
    } catch {
      this.districts = [];
    }
    const select = this.root.querySelector("#district-select") as HTMLSelectElement;
    select.innerHTML =
      `<option value="">pick a district</option>` +
      this.districts
        .map(
          (d) =>
            `<option value="${d.district_id}">${d.name} (${d.n_blocks} blocks, ${d.n_schools} schools)</option>`,
        )
        .join("");
    if (this.districtId) select.value = this.districtId;
  }

  private async createSynthetic(): Promise<void> {
    const handle = await this.api.createSyntheticDistrict(
      { rows: 12, cols: 12, schools: 4, strength: 0.8, mean_pop: 8, seed: Date.now() % 100000 },
      `synthetic-${new Date().toISOString().slice(0, 10)}`,
    );
    this.districtId = handle.district_id;
    await this.refreshDistricts();
  }

  private async launchRun(config: RunConfig): Promise<void> {
    if (!this.districtId) {
      (this.root.querySelector(".composer-error") as HTMLElement).textContent =
        "pick a district first";
      return;
    }
    const record = await this.api.createRun(this.districtId, config);
    this.runs.upsert(record); // optimistic row with live status
    const cancel = pollRun(this.api, record.run_id, (update) => {
      this.runs.upsert(update);
      if (update.status === "done") {
        void this.selectRun(update);
      }
    });
    this.pollers.set(record.run_id, cancel);
  }

  private async selectRun(record: RunRecord): Promise<void> {
    this.compare = {
      baselineRunId: this.compare.candidateRunId ?? record.run_id,
      candidateRunId: record.run_id,
    };
    const baseline = this.compare.baselineRunId
      ? this.runs.get(this.compare.baselineRunId) ?? null
      : null;
    this.metrics.setRuns(record, baseline);
    if (record.status !== "done") return;

    const epsilons = (record.summary?.private ?? []).map((p) => p.epsilon);
    const epsSelect = this.root.querySelector("#epsilon-select") as HTMLSelectElement;
    epsSelect.innerHTML = epsilons
      .map((e) => `<option value="${e}">${e}</option>`)
      .join("");
    try {
      const geo = await this.api.getAssignmentGeo(record.run_id);
      this.map.setGeometry(geo);
    } catch {
      this.map.setGeometry(null);
    }
    this.map.setView({ runId: record.run_id, epsilon: epsilons[0] ?? null });
    this.applyViewControls();
  }

  private applyViewControls(): void {
    const scenario = (this.root.querySelector("#scenario-select") as HTMLSelectElement)
      .value as "current" | "nonprivate" | "private";
    const layer = (this.root.querySelector("#layer-select") as HTMLSelectElement)
      .value as "assignment" | "rezone_probability" | "population";
    const epsSelect = this.root.querySelector("#epsilon-select") as HTMLSelectElement;
    epsSelect.disabled = scenario !== "private" && layer !== "rezone_probability";
    const epsilon = epsSelect.value ? Number(epsSelect.value) : null;
    this.map.setView({ scenario, layer, epsilon });
  }
}

const rootElement = document.getElementById("app");
if (rootElement) {
  new App(rootElement);
}
