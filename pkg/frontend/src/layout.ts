// Pure chart layout: ChartSpec -> positioned marks with stable element ids.
// Kept DOM-free so hit-testing and tests can run anywhere.

import { ChartSpec } from "./types.js";

export interface Mark {
  elementId: string;
  // centroid of the rendered mark, in SVG user units
  cx: number;
  cy: number;
  // bounding box, used for bar rendering
  x: number;
  y: number;
  width: number;
  height: number;
  seriesName: string;
  label: string;
  value: number | null;
  shape: "rect" | "circle" | "ring";
}

export interface Layout {
  width: number;
  height: number;
  padding: { left: number; right: number; top: number; bottom: number };
  marks: Mark[];
  // polyline points per series (line charts)
  paths: { seriesName: string; points: { x: number; y: number }[] }[];
  links: { x1: number; y1: number; x2: number; y2: number }[];
}

export const CHART_WIDTH = 560;
export const CHART_HEIGHT = 260;
const PAD = { left: 48, right: 16, top: 28, bottom: 36 };

function valueExtent(spec: ChartSpec): [number, number] {
  let lo = 0;
  let hi = 0;
  for (const series of spec.series) {
    for (const v of series.y) {
      if (v === null) continue;
      lo = Math.min(lo, v);
      hi = Math.max(hi, v);
    }
  }
  if (hi === lo) hi = lo + 1;
  return [lo, hi];
}

export function layoutChart(spec: ChartSpec): Layout {
  const layout: Layout = {
    width: CHART_WIDTH,
    height: CHART_HEIGHT,
    padding: PAD,
    marks: [],
    paths: [],
    links: [],
  };
  const innerW = CHART_WIDTH - PAD.left - PAD.right;
  const innerH = CHART_HEIGHT - PAD.top - PAD.bottom;
  const [lo, hi] = valueExtent(spec);
  const yPos = (v: number) => PAD.top + innerH - ((v - lo) / (hi - lo)) * innerH;

  const categories = spec.series[0]?.x ?? [];
  const n = Math.max(categories.length, 1);
  const slotW = innerW / n;
  const xCenter = (i: number) => PAD.left + slotW * i + slotW / 2;

  if (spec.kind === "line") {
    for (const series of spec.series) {
      const points: { x: number; y: number }[] = [];
      series.y.forEach((v, i) => {
        if (v === null) return;
        const x = xCenter(i);
        const y = yPos(v);
        points.push({ x, y });
        layout.marks.push({
          elementId: series.element_ids[i],
          cx: x, cy: y, x: x - 4, y: y - 4, width: 8, height: 8,
          seriesName: series.name,
          label: String(series.x[i]),
          value: v,
          shape: "circle",
        });
      });
      layout.paths.push({ seriesName: series.name, points });
    }
    return layout;
  }

  if (spec.kind === "bar") {
    const bands = spec.series.length;
    const barW = Math.min(34, (slotW * 0.8) / bands);
    spec.series.forEach((series, s) => {
      series.y.forEach((v, i) => {
        const x = xCenter(i) - (bands * barW) / 2 + s * barW;
        const base = yPos(Math.min(0, lo) > 0 ? lo : 0);
        const top = v === null ? base : yPos(v);
        layout.marks.push({
          elementId: series.element_ids[i],
          cx: x + barW / 2, cy: (top + base) / 2,
          x, y: Math.min(top, base), width: barW, height: Math.max(Math.abs(base - top), 2),
          seriesName: series.name,
          label: String(series.x[i]),
          value: v,
          shape: "rect",
        });
      });
    });
    return layout;
  }

  if (spec.kind === "stacked_bar") {
    const barW = Math.min(44, slotW * 0.6);
    for (let i = 0; i < n; i++) {
      let acc = 0;
      for (const series of spec.series) {
        const v = series.y[i];
        const h = v === null ? 0 : (v / 1.0) * innerH; // shares are 0..1
        const y = PAD.top + innerH - acc - h;
        layout.marks.push({
          elementId: series.element_ids[i],
          cx: xCenter(i), cy: y + h / 2,
          x: xCenter(i) - barW / 2, y, width: barW, height: Math.max(h, 1),
          seriesName: series.name,
          label: String(series.x[i]),
          value: v,
          shape: "rect",
        });
        acc += h;
      }
    }
    return layout;
  }

  if (spec.kind === "radial_progress") {
    const series = spec.series[0];
    series.y.forEach((v, i) => {
      const cx = xCenter(i);
      const cy = PAD.top + innerH / 2;
      layout.marks.push({
        elementId: series.element_ids[i],
        cx, cy, x: cx - 34, y: cy - 34, width: 68, height: 68,
        seriesName: series.name,
        label: String(series.x[i]),
        value: v,
        shape: "ring",
      });
    });
    return layout;
  }

  // node_link: nodes on a row, sized by value, with unit-to-unit links
  const series = spec.series[0];
  const byId: Record<string, { x: number; y: number }> = {};
  series.y.forEach((v, i) => {
    const cx = xCenter(i);
    const cy = PAD.top + innerH / 2;
    byId[series.element_ids[i]] = { x: cx, y: cy };
    layout.marks.push({
      elementId: series.element_ids[i],
      cx, cy, x: cx - 26, y: cy - 26, width: 52, height: 52,
      seriesName: series.name,
      label: String(series.x[i]),
      value: v,
      shape: "ring",
    });
  });
  for (const link of spec.links) {
    const a = byId[link.source];
    const b = byId[link.target];
    if (a && b) layout.links.push({ x1: a.x, y1: a.y, x2: b.x, y2: b.y });
  }
  return layout;
}

export interface Centroid {
  elementId: string;
  x: number;
  y: number;
}

export function chartCentroids(spec: ChartSpec): Centroid[] {
  return layoutChart(spec).marks.map((m) => ({ elementId: m.elementId, x: m.cx, y: m.cy }));
}
