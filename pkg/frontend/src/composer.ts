// Run composer: the parameter form that turns knobs into a POST /api/runs config.

import type { RunConfig } from "./types";

export interface ComposerDefaults {
  epsilon: number;
  alphaT: number;
  alphaP: number;
  replicates: number;
}

// Paper-protocol alphas; replicates lowered from 200 for interactive feedback.
export const DEFAULTS: ComposerDefaults = {
  epsilon: 2,
  alphaT: 0.5,
  alphaP: 0.15,
  replicates: 25,
};

export class RunComposer {
  readonly el: HTMLElement;
  private onSubmit: (config: RunConfig) => void;

  constructor(container: HTMLElement, onSubmit: (config: RunConfig) => void) {
    this.el = container;
    this.onSubmit = onSubmit;
    this.render();
  }

  private render(): void {
    this.el.innerHTML = `
      <form class="composer">
        <label>privacy budget &epsilon;
          <input name="epsilon" type="number" step="0.1" value="${DEFAULTS.epsilon}">
        </label>
        <label>max travel increase &alpha;<sub>t</sub>
          <input name="alpha_t" type="range" min="0" max="2" step="0.05" value="${DEFAULTS.alphaT}">
          <output name="alpha_t_out">${DEFAULTS.alphaT}</output>
        </label>
        <label>max size increase &alpha;<sub>P</sub>
          <input name="alpha_p" type="range" min="0" max="2" step="0.05" value="${DEFAULTS.alphaP}">
          <output name="alpha_p_out">${DEFAULTS.alphaP}</output>
        </label>
        <label>replicates
          <input name="replicates" type="number" min="1" step="1" value="${DEFAULTS.replicates}">
        </label>
        <label>objective
          <select name="objective">
            <option value="race" selected>race</option>
            <option value="ses">ses</option>
          </select>
        </label>
        <label>seed
          <input name="seed" type="number" step="1" value="0">
        </label>
        <button type="submit">launch run</button>
        <span class="composer-error" role="alert"></span>
      </form>
    `;
    const form = this.el.querySelector("form")!;
    for (const slider of ["alpha_t", "alpha_p"]) {
      const input = this.input(slider);
      input.addEventListener("input", () => {
        (form.elements.namedItem(`${slider}_out`) as HTMLOutputElement).value = input.value;
      });
    }
    form.addEventListener("submit", (ev) => {
      ev.preventDefault();
      this.submit();
    });
  }

  private input(name: string): HTMLInputElement {
    return this.el.querySelector(`[name="${name}"]`) as HTMLInputElement;
  }

  readConfig(): RunConfig {
    const objective = (this.el.querySelector('[name="objective"]') as HTMLSelectElement)
      .value as RunConfig["objective"];
    return {
      epsilons: [Number(this.input("epsilon").value)],
      replicates: Number(this.input("replicates").value),
      alpha_t: Number(this.input("alpha_t").value),
      alpha_p: Number(this.input("alpha_p").value),
      seed: Number(this.input("seed").value),
      objective,
    };
  }

  /** Returns null when valid, otherwise the message shown inline. */
  validate(config: RunConfig): string | null {
    if (!(config.epsilons[0] > 0) || !Number.isFinite(config.epsilons[0])) {
      return "privacy budget must be a positive number";
    }
    if (config.alpha_t < 0 || config.alpha_t > 2) {
      return "travel slack must be within [0, 2]";
    }
    if (config.alpha_p < 0 || config.alpha_p > 2) {
      return "size slack must be within [0, 2]";
    }
    if (!Number.isInteger(config.replicates) || config.replicates < 1) {
      return "replicates must be a positive integer";
    }
    return null;
  }

  /** Validate and either surface the error inline or hand the config up. */
  submit(): void {
    const config = this.readConfig();
    const error = this.validate(config);
    const slot = this.el.querySelector(".composer-error") as HTMLElement;
    if (error) {
      slot.textContent = error;
      return;
    }
    slot.textContent = "";
    this.onSubmit(config);
  }

  setEpsilon(value: number): void {
    this.input("epsilon").value = String(value);
  }
}
