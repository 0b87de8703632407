// Color ramps and the categorical school palette.

/** Linear interpolation between two RGB triples. */
function lerp(a: [number, number, number], b: [number, number, number], t: number): string {
  const clamped = Math.min(1, Math.max(0, t));
  const mix = a.map((v, i) => Math.round(v + (b[i] - v) * clamped));
  return `rgb(${mix[0]}, ${mix[1]}, ${mix[2]})`;
}

const RED_LO: [number, number, number] = [255, 245, 240];
const RED_HI: [number, number, number] = [103, 0, 13];
const BLUE_LO: [number, number, number] = [247, 251, 255];
const BLUE_HI: [number, number, number] = [8, 48, 107];

/** Monotone white-to-dark-red ramp over [0, 1]; 0 maps to the exact zero color. */
export function redRamp(t: number): string {
  return lerp(RED_LO, RED_HI, t);
}

/** Monotone white-to-dark-blue ramp over [0, 1]. */
export function blueRamp(t: number): string {
  return lerp(BLUE_LO, BLUE_HI, t);
}

/** Perceived luminance of an rgb(...) string; lower = darker = more intense. */
export function luminance(rgb: string): number {
  const m = rgb.match(/rgb\((\d+), (\d+), (\d+)\)/);
  if (!m) return NaN;
  const [r, g, b] = [Number(m[1]), Number(m[2]), Number(m[3])];
  return 0.2126 * r + 0.7152 * g + 0.0722 * b;
}

// Distinct hues for categorical school coloring; chosen for contrast on white.
const SCHOOL_PALETTE = [
  "#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#b07aa1", "#76b7b2",
  "#edc948", "#ff9da7", "#9c755f", "#bab0ac", "#86bcb6", "#d37295",
];

/** FNV-1a over the id so a school keeps its color across runs and sessions. */
function fnv1a(text: string): number {
  let hash = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    hash ^= text.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193) >>> 0;
  }
  return hash;
}

export function schoolColor(schoolId: string): string {
  return SCHOOL_PALETTE[fnv1a(schoolId) % SCHOOL_PALETTE.length];
}
