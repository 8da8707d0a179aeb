/**
 * Interval chart geometry: the update_interval_s series as a first-class
 * line, the 13 s guide-line, degraded-point markers, and alert ticks.
 * Pure geometry in, SVG string out, so it is testable without a DOM.
 */

import { GUIDE_LINE_S, ViewState, degradedSeqs } from "./state.js";

export interface ChartGeometry {
  width: number;
  height: number;
  points: { x: number; y: number; seq: number; intervalS: number; degraded: boolean }[];
  guideY: number;
  alertXs: number[];
  maxY: number;
}

export function buildChart(
  state: ViewState,
  width = 640,
  height = 220,
  guideS: number = GUIDE_LINE_S,
): ChartGeometry {
  const snaps = state.snapshots;
  const maxInterval = Math.max(guideS + 2, ...snaps.map((s) => s.update_interval_s));
  const tMin = snaps.length ? snaps[0]!.t : 0;
  const tMax = snaps.length ? Math.max(snaps[snaps.length - 1]!.t, tMin + 1) : 1;
  const x = (t: number) => ((t - tMin) / (tMax - tMin)) * (width - 20) + 10;
  const y = (v: number) => height - 10 - (v / maxInterval) * (height - 20);
  const degraded = new Set(degradedSeqs(state));
  return {
    width,
    height,
    points: snaps.map((s) => ({
      x: x(s.t),
      y: y(s.update_interval_s),
      seq: s.seq,
      intervalS: s.update_interval_s,
      degraded: degraded.has(s.seq),
    })),
    guideY: y(guideS),
    alertXs: state.alerts.map((a) => x(a.t)),
    maxY: maxInterval,
  };
}

export function renderChartSvg(geometry: ChartGeometry): string {
  const { width, height, points, guideY, alertXs } = geometry;
  const path = points.map((p, i) => `${i === 0 ? "M" : "L"}${p.x.toFixed(1)},${p.y.toFixed(1)}`).join(" ");
  const markers = points
    .filter((p) => p.degraded)
    .map((p) => `<circle cx="${p.x.toFixed(1)}" cy="${p.y.toFixed(1)}" r="4" class="degraded"/>`)
    .join("");
  const dots = points
    .filter((p) => !p.degraded)
    .map((p) => `<circle cx="${p.x.toFixed(1)}" cy="${p.y.toFixed(1)}" r="2.5" class="ok"/>`)
    .join("");
  const alerts = alertXs
    .map((ax) => `<line x1="${ax.toFixed(1)}" y1="0" x2="${ax.toFixed(1)}" y2="${height}" class="alert"/>`)
    .join("");
  return [
    `<svg viewBox="0 0 ${width} ${height}" xmlns="http://www.w3.org/2000/svg">`,
    alerts,
    `<line x1="0" y1="${guideY.toFixed(1)}" x2="${width}" y2="${guideY.toFixed(1)}" class="guide"/>`,
    `<path d="${path}" fill="none" class="series"/>`,
    dots,
    markers,
    `</svg>`,
  ].join("");
}
