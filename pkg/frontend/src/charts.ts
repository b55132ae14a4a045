// ChartSpec -> SVG markup. A thin adapter over the layout module so the
// spec schema stays grammar-agnostic; every mark carries its registry id in
// data-element-id for selection.

import { Layout, Mark, layoutChart } from "./layout.js";
import { ChartSpec } from "./types.js";

const SERIES_COLORS = ["#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#b07aa1"];

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function seriesColor(spec: ChartSpec, name: string): string {
  const idx = spec.series.findIndex((s) => s.name === name);
  return SERIES_COLORS[Math.max(idx, 0) % SERIES_COLORS.length];
}

function markSvg(spec: ChartSpec, mark: Mark): string {
  const color = seriesColor(spec, mark.seriesName);
  const title = `${mark.label} — ${mark.seriesName}: ${mark.value === null ? "n/a" : mark.value}`;
  const common = `data-element-id="${esc(mark.elementId)}" class="mark" fill="${color}"`;
  if (mark.shape === "circle") {
    return `<circle ${common} cx="${mark.cx}" cy="${mark.cy}" r="4"><title>${esc(title)}</title></circle>`;
  }
  if (mark.shape === "ring") {
    const r = mark.width / 2 - 4;
    const frac = mark.value === null ? 0 : Math.max(0, Math.min(1, mark.value));
    const circumference = 2 * Math.PI * r;
    return [
      `<g data-element-id="${esc(mark.elementId)}" class="mark ring">`,
      `<circle cx="${mark.cx}" cy="${mark.cy}" r="${r}" fill="none" stroke="#e3e3e3" stroke-width="7"/>`,
      `<circle cx="${mark.cx}" cy="${mark.cy}" r="${r}" fill="none" stroke="${color}" stroke-width="7" ` +
        `stroke-dasharray="${(frac * circumference).toFixed(2)} ${circumference.toFixed(2)}" ` +
        `transform="rotate(-90 ${mark.cx} ${mark.cy})"/>`,
      `<text x="${mark.cx}" y="${mark.cy + 4}" text-anchor="middle" class="ring-label">${esc(mark.label)}</text>`,
      `<title>${esc(title)}</title>`,
      `</g>`,
    ].join("");
  }
  return (
    `<rect ${common} x="${mark.x}" y="${mark.y}" width="${mark.width}" height="${mark.height}">` +
    `<title>${esc(title)}</title></rect>`
  );
}

export function renderChartSvg(spec: ChartSpec): string {
  const layout: Layout = layoutChart(spec);
  const parts: string[] = [];
  parts.push(
    `<svg class="chart" role="img" data-chart-id="${esc(spec.chart_id)}" data-kind="${spec.kind}" ` +
      `viewBox="0 0 ${layout.width} ${layout.height}" width="${layout.width}" height="${layout.height}">`,
  );
  parts.push(`<text x="${layout.width / 2}" y="18" text-anchor="middle" class="chart-title">${esc(spec.title)}</text>`);

  for (const link of layout.links) {
    parts.push(
      `<line x1="${link.x1}" y1="${link.y1}" x2="${link.x2}" y2="${link.y2}" stroke="#b8b8b8" stroke-width="1.5"/>`,
    );
  }
  for (const path of layout.paths) {
    if (path.points.length < 2) continue;
    const d = path.points.map((p, i) => `${i === 0 ? "M" : "L"}${p.x},${p.y}`).join(" ");
    parts.push(`<path d="${d}" fill="none" stroke="${seriesColor(spec, path.seriesName)}" stroke-width="2"/>`);
  }
  for (const mark of layout.marks) {
    parts.push(markSvg(spec, mark));
  }

  // x labels under each slot, taken from the first series
  const first = spec.series[0];
  if (first && spec.kind !== "node_link") {
    const slots = first.x.length;
    const innerW = layout.width - layout.padding.left - layout.padding.right;
    first.x.forEach((label, i) => {
      const x = layout.padding.left + (innerW / Math.max(slots, 1)) * (i + 0.5);
      parts.push(
        `<text x="${x}" y="${layout.height - 12}" text-anchor="middle" class="axis-label">${esc(String(label))}</text>`,
      );
    });
  }

  // annotations point at their target mark
  for (const ann of spec.annotations) {
    const target = layout.marks.find((m) => m.elementId === ann.target);
    if (target) {
      parts.push(
        `<text x="${target.cx}" y="${Math.max(target.y - 6, 24)}" text-anchor="middle" class="annotation">${esc(ann.text)}</text>`,
      );
    }
  }

  // legend for multi-series charts
  if (spec.series.length > 1) {
    spec.series.forEach((s, i) => {
      const x = layout.padding.left + i * 130;
      parts.push(
        `<rect x="${x}" y="24" width="10" height="10" fill="${seriesColor(spec, s.name)}"/>` +
          `<text x="${x + 14}" y="33" class="legend">${esc(s.name)}</text>`,
      );
    });
  }

  parts.push("</svg>");
  return parts.join("");
}
