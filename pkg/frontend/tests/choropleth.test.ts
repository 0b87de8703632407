import { beforeEach, describe, expect, it } from "vitest";

import { Choropleth, fillFor, rezoneProbability, schoolOf } from "../src/choropleth";
import { redRamp, schoolColor } from "../src/color";
import type { AssignmentGeo, BlockFeature, ScenarioView } from "../src/types";
import geoFixture from "./fixtures/assignment_private_mean.json";

const GEO = geoFixture as unknown as AssignmentGeo;

function view(overrides: Partial<ScenarioView>): ScenarioView {
  return { scenario: "current", epsilon: null, layer: "assignment", runId: "r", ...overrides };
}

let container: HTMLElement;

beforeEach(() => {
  document.body.innerHTML = `<div id="map"></div>`;
  container = document.getElementById("map")!;
});

describe("property selection", () => {
  const feature = GEO.features[0] as BlockFeature;

  it("picks the scenario's school from the embedded properties", () => {
    expect(schoolOf(feature, view({ scenario: "current" }))).toBe(feature.properties.current);
    expect(schoolOf(feature, view({ scenario: "nonprivate" }))).toBe(
      feature.properties.nonprivate,
    );
    const eps2 = schoolOf(feature, view({ scenario: "private", epsilon: 2 }));
    expect(eps2).toBe(feature.properties["private_mean_eps2"]);
  });

  it("reads the per-epsilon rezone probability", () => {
    const p = rezoneProbability(feature, view({ epsilon: 2 }));
    expect(p).toBe(feature.properties["rezone_prob_eps2"]);
  });

  it("zero probability renders the ramp's zero color exactly", () => {
    const zero = GEO.features.find((f) => f.properties["rezone_prob_eps2"] === 0)!;
    const fill = fillFor(zero as BlockFeature, view({ layer: "rezone_probability", epsilon: 2 }), 10);
    expect(fill).toBe(redRamp(0));
  });
});

describe("Choropleth", () => {
  it("renders one circle per block", () => {
    const map = new Choropleth(container);
    map.setGeometry(GEO);
    expect(container.querySelectorAll("circle[data-block]")).toHaveLength(GEO.features.length);
  });

  it("toggling scenario recolors without touching the geometry nodes", () => {
    const map = new Choropleth(container);
    map.setGeometry(GEO);
    map.setView(view({ scenario: "current", layer: "assignment" }));
    const nodes = Array.from(container.querySelectorAll<SVGCircleElement>("circle[data-block]"));
    const identity = nodes[0];

    map.setView({ scenario: "private", epsilon: 2 });
    const after = container.querySelectorAll<SVGCircleElement>("circle[data-block]");
    expect(after[0]).toBe(identity); // same DOM nodes, no re-render/refetch

    // colors now reflect the private scenario's schools
    const moved = GEO.features.find(
      (f) => f.properties["private_mean_eps2"] !== f.properties.current,
    );
    if (moved) {
      const node = container.querySelector<SVGCircleElement>(
        `circle[data-block="${moved.properties.block_id}"]`,
      )!;
      expect(node.getAttribute("fill")).toBe(
        schoolColor(moved.properties["private_mean_eps2"] as string),
      );
    }
  });

  it("rezone-probability layer uses the red ramp", () => {
    const map = new Choropleth(container);
    map.setGeometry(GEO);
    map.setView(view({ layer: "rezone_probability", epsilon: 2 }));
    const feature = GEO.features[3] as BlockFeature;
    const node = container.querySelector<SVGCircleElement>(
      `circle[data-block="${feature.properties.block_id}"]`,
    )!;
    expect(node.getAttribute("fill")).toBe(
      redRamp(rezoneProbability(feature, view({ epsilon: 2 }))),
    );
  });

  it("falls back to a table with a notice when no geometry exists", () => {
    const map = new Choropleth(container);
    map.setGeometry(null);
    expect(container.querySelector(".map-notice")).not.toBeNull();
    expect(container.querySelector("table.map-fallback")).not.toBeNull();
  });

  it("hover titles name the block and its proposed school", () => {
    const map = new Choropleth(container);
    map.setGeometry(GEO);
    map.setView(view({ scenario: "nonprivate" }));
    const feature = GEO.features[0] as BlockFeature;
    const title = container.querySelector(
      `circle[data-block="${feature.properties.block_id}"] title`,
    )!;
    expect(title.textContent).toContain(feature.properties.block_id);
    expect(title.textContent).toContain(feature.properties.nonprivate);
  });
});
