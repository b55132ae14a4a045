// Report document -> HTML. Pure string builders so tests can assert
// structure without a DOM; app.ts mounts the result and wires events.

import { renderChartSvg } from "./charts.js";
import {
  QAResponseBody,
  ReportDocument,
  SidebarEntry,
  Stage,
  SUPPORTED_SCHEMA_VERSION,
} from "./types.js";

const GROUP_TITLES: Record<string, string> = {
  overview_intro: "Overview and Introduction",
  summary_info: "Summary Information",
  formative_guidance: "Formative Guidance",
};

const GROUP_ORDER = ["overview_intro", "summary_info", "formative_guidance"];

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export interface SidebarGroup {
  infoGroup: string;
  title: string;
  entries: SidebarEntry[];
}

// the grouped model behind the sidebar; 12 entries in 3/6/3 groups
export function sidebarModel(doc: ReportDocument): SidebarGroup[] {
  return GROUP_ORDER.map((group) => ({
    infoGroup: group,
    title: GROUP_TITLES[group],
    entries: doc.sidebar.filter((e) => e.info_group === group),
  }));
}

export function renderSidebar(doc: ReportDocument): string {
  const groups = sidebarModel(doc);
  const parts = [`<nav class="sidebar" aria-label="report index">`];
  for (const group of groups) {
    parts.push(`<div class="sidebar-group" data-group="${group.infoGroup}">`);
    parts.push(`<h3>${esc(group.title)}</h3><ul>`);
    for (const entry of group.entries) {
      parts.push(
        `<li><a href="#${entry.stage_id}" class="sidebar-entry" data-stage="${entry.stage_id}">` +
          `<span class="stage-id">${entry.stage_id}</span> ${esc(entry.title)}</a></li>`,
      );
    }
    parts.push(`</ul></div>`);
  }
  parts.push(`</nav>`);
  return parts.join("");
}

export function renderStage(stage: Stage): string {
  const parts = [
    `<section class="stage${stage.transitional ? " transitional" : ""}" id="${stage.stage_id}" data-stage="${stage.stage_id}">`,
    `<h2><span class="stage-id">${stage.stage_id}</span> ${esc(stage.title)}</h2>`,
    `<p class="narrative">${esc(stage.narrative)}</p>`,
  ];
  if (stage.transitional) {
    // transitional stages are text-only by contract: no charts, no panels
    parts.push(`</section>`);
    return parts.join("");
  }
  if (stage.insights.length) {
    parts.push(`<ul class="insights">`);
    for (const insight of stage.insights) {
      parts.push(
        `<li class="insight" data-insight-id="${esc(insight.id)}">` +
          `<span class="kind">${esc(insight.kind)}</span> ${esc(insight.text ?? "")}</li>`,
      );
    }
    parts.push(`</ul>`);
  }
  if (stage.feedback.length) {
    parts.push(`<ul class="feedback">`);
    for (const item of stage.feedback) {
      parts.push(
        `<li class="feedback-item ${esc(item.category)}">` +
          `<strong>${esc(item.label)} (${esc(item.objective_id)})</strong> ` +
          `${esc(item.gap ?? item.praise ?? "")} <em>${esc(item.action)}</em></li>`,
      );
    }
    parts.push(`</ul>`);
  }
  for (const chart of stage.charts) {
    parts.push(`<figure class="chart-box" data-chart-id="${esc(chart.chart_id)}">${renderChartSvg(chart)}</figure>`);
  }
  parts.push(`</section>`);
  return parts.join("");
}

export interface RenderResult {
  html: string;
  ok: boolean;
  chartCount: number;
}

export function renderReport(doc: ReportDocument): RenderResult {
  if (doc.schema_version !== SUPPORTED_SCHEMA_VERSION) {
    return {
      ok: false,
      chartCount: 0,
      html:
        `<div class="banner error">This report uses schema version ${doc.schema_version}, ` +
        `but the viewer supports version ${SUPPORTED_SCHEMA_VERSION}. Upgrade the viewer to render it.</div>`,
    };
  }
  const stages = doc.stages.map(renderStage).join("");
  const chartCount = doc.stages.reduce((acc, s) => acc + (s.transitional ? 0 : s.charts.length), 0);
  const html =
    renderSidebar(doc) +
    `<main class="report">` +
    `<header class="report-header"><h1>${esc(doc.metadata.unit_title)}</h1>` +
    `<p class="meta">student ${esc(doc.metadata.student_token)} · engine ${esc(doc.metadata.engine_version)} · ` +
    `${esc(doc.metadata.backend_mode)} narration</p></header>` +
    stages +
    `</main>`;
  return { ok: true, chartCount, html };
}

export function renderQaResponse(response: QAResponseBody): string {
  const parts = [
    `<div class="qa-exchange">`,
    `<p class="qa-answer">${esc(response.answer)}</p>`,
  ];
  for (const chart of response.charts) {
    parts.push(`<figure class="chart-box qa-chart">${renderChartSvg(chart)}</figure>`);
  }
  parts.push(
    `<p class="qa-grounding">grounded in ${response.grounding.objective_ids.map(esc).join(", ")} · ` +
      `intent ${esc(response.grounding.intent)}${response.fallback ? " · deterministic fallback" : ""}</p>`,
  );
  parts.push(`</div>`);
  return parts.join("");
}

export function renderQaError(message: string): string {
  return `<div class="qa-exchange qa-error"><p>${esc(message)}</p><button class="qa-retry">Retry</button></div>`;
}
