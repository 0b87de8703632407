// Block choropleth: SVG circles over the district's centroids.
//
// The GeoJSON is fetched once per run; its properties carry every scenario's
// school and the per-epsilon rezone probabilities, so switching scenario or
// layer only recolors the existing nodes.

import { blueRamp, redRamp, schoolColor } from "./color";
import type { AssignmentGeo, BlockFeature, ScenarioView } from "./types";

const WIDTH = 640;
const HEIGHT = 520;
const PAD = 16;

function epsTag(epsilon: number): string {
  // mirrors the service's property naming: 2.0 -> "2", 0.5 -> "0.5"
  return String(epsilon).replace(/\.0+$/, "");
}

export function schoolOf(feature: BlockFeature, view: ScenarioView): string {
  const props = feature.properties;
  if (view.scenario === "current") return props.current;
  if (view.scenario === "nonprivate") return props.nonprivate;
  const key = `private_mean_eps${epsTag(view.epsilon ?? 0)}`;
  return (props[key] as string | undefined) ?? props.current;
}

export function rezoneProbability(feature: BlockFeature, view: ScenarioView): number {
  const key = `rezone_prob_eps${epsTag(view.epsilon ?? 0)}`;
  const value = feature.properties[key];
  return typeof value === "number" ? value : 0;
}

export function fillFor(feature: BlockFeature, view: ScenarioView, maxTotal: number): string {
  switch (view.layer) {
    case "assignment":
      return schoolColor(schoolOf(feature, view));
    case "rezone_probability":
      return redRamp(rezoneProbability(feature, view));
    case "population":
      return blueRamp(maxTotal > 0 ? feature.properties.n_total / maxTotal : 0);
  }
}

export class Choropleth {
  readonly el: HTMLElement;
  private geo: AssignmentGeo | null = null;
  private view: ScenarioView = {
    scenario: "current",
    epsilon: null,
    layer: "assignment",
    runId: null,
  };

  constructor(container: HTMLElement) {
    this.el = container;
  }

  /** Install the run's geometry (or null when the run has none). */
  setGeometry(geo: AssignmentGeo | null): void {
    this.geo = geo;
    this.renderBase();
    this.recolor();
  }

  setView(view: Partial<ScenarioView>): void {
    this.view = { ...this.view, ...view };
    this.recolor();
  }

  currentView(): ScenarioView {
    return { ...this.view };
  }

  private renderBase(): void {
    if (!this.geo || this.geo.features.length === 0) {
      this.el.innerHTML = `
        <p class="map-notice">No geometry for this run (blocks lack centroids); showing the table view.</p>
        <table class="map-fallback"><thead>
          <tr><th>block</th><th>current</th><th>non-private</th></tr>
        </thead><tbody></tbody></table>`;
      return;
    }
    const lons = this.geo.features.map((f) => f.geometry.coordinates[0]);
    const lats = this.geo.features.map((f) => f.geometry.coordinates[1]);
    const [minLon, maxLon] = [Math.min(...lons), Math.max(...lons)];
    const [minLat, maxLat] = [Math.min(...lats), Math.max(...lats)];
    const sx = (WIDTH - 2 * PAD) / Math.max(maxLon - minLon, 1e-9);
    const sy = (HEIGHT - 2 * PAD) / Math.max(maxLat - minLat, 1e-9);
    const scale = Math.min(sx, sy);
    const radius = Math.max(3, Math.min(12, scale * 0.004));

    const circles = this.geo.features
      .map((f) => {
        const [lon, lat] = f.geometry.coordinates;
        const x = PAD + (lon - minLon) * scale;
        const y = HEIGHT - PAD - (lat - minLat) * scale;
        return `<circle data-block="${f.properties.block_id}" cx="${x.toFixed(1)}" cy="${y.toFixed(1)}" r="${radius.toFixed(1)}"><title></title></circle>`;
      })
      .join("");
    this.el.innerHTML = `<svg viewBox="0 0 ${WIDTH} ${HEIGHT}" class="block-map">${circles}</svg>`;
  }

  private recolor(): void {
    if (!this.geo || this.geo.features.length === 0) {
      this.fillFallbackTable();
      return;
    }
    const maxTotal = Math.max(...this.geo.features.map((f) => f.properties.n_total), 1);
    const byId = new Map(this.geo.features.map((f) => [f.properties.block_id, f]));
    this.el.querySelectorAll<SVGCircleElement>("circle[data-block]").forEach((node) => {
      const feature = byId.get(node.dataset.block ?? "");
      if (!feature) return;
      node.setAttribute("fill", fillFor(feature, this.view, maxTotal));
      const title = node.querySelector("title");
      if (title) {
        const p = feature.properties;
        title.textContent =
          `${p.block_id}: ${p.n_total} students, current ${p.current}, ` +
          `proposed ${schoolOf(feature, this.view)}`;
      }
    });
  }

  private fillFallbackTable(): void {
    const body = this.el.querySelector("tbody");
    if (!body) return;
    body.innerHTML = "";
  }
}
