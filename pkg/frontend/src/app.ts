// Browser bootstrap: loads a report, mounts the rendered HTML, and wires
// box/lasso selection plus the question box. All analytics arrive in API
// payloads; nothing is computed here.

import { ApiClient } from "./api.js";
import { chartCentroids } from "./layout.js";
import { QaController, submitGate } from "./qa.js";
import { renderReport } from "./render.js";
import {
  SelectionState,
  addToSelection,
  emptySelection,
  hitTestBox,
  hitTestLasso,
  Point,
} from "./selection.js";
import { ChartSpec, ReportDocument } from "./types.js";

interface AppState {
  doc: ReportDocument;
  selection: SelectionState;
  controller: QaController;
}

function svgPoint(svg: SVGSVGElement, event: MouseEvent): Point {
  const rect = svg.getBoundingClientRect();
  const viewBox = svg.viewBox.baseVal;
  return {
    x: ((event.clientX - rect.left) / rect.width) * viewBox.width,
    y: ((event.clientY - rect.top) / rect.height) * viewBox.height,
  };
}

function chartSpecById(doc: ReportDocument, chartId: string): ChartSpec | null {
  for (const stage of doc.stages) {
    for (const chart of stage.charts) {
      if (chart.chart_id === chartId) return chart;
    }
  }
  return null;
}

function highlightSelection(state: SelectionState): void {
  document.querySelectorAll<SVGElement>("[data-element-id]").forEach((el) => {
    const id = el.dataset.elementId ?? "";
    el.classList.toggle("selected", state.selectedIds.includes(id));
  });
  const count = document.querySelector("#selection-count");
  if (count) count.textContent = `${state.selectedIds.length} selected`;
}

function wireSelection(app: AppState): void {
  document.querySelectorAll<SVGSVGElement>("svg.chart").forEach((svg) => {
    const chartId = svg.dataset.chartId ?? "";
    const spec = chartSpecById(app.doc, chartId);
    if (!spec) return;
    const centroids = chartCentroids(spec);
    const stage = (svg.closest("[data-stage]") as HTMLElement | null)?.dataset.stage ?? null;

    let dragStart: Point | null = null;
    let lassoPath: Point[] = [];

    svg.addEventListener("mousedown", (event) => {
      dragStart = svgPoint(svg, event);
      lassoPath = [dragStart];
      event.preventDefault();
    });
    svg.addEventListener("mousemove", (event) => {
      if (dragStart && app.selection.tool === "lasso") {
        lassoPath.push(svgPoint(svg, event));
      }
    });
    svg.addEventListener("mouseup", (event) => {
      if (!dragStart) return;
      const end = svgPoint(svg, event);
      let ids: string[];
      if (app.selection.tool === "lasso" && lassoPath.length >= 3) {
        ids = hitTestLasso(centroids, lassoPath);
      } else {
        const tiny = Math.abs(end.x - dragStart.x) < 4 && Math.abs(end.y - dragStart.y) < 4;
        ids = tiny
          ? hitTestBox(centroids, { x0: end.x - 8, y0: end.y - 8, x1: end.x + 8, y1: end.y + 8 })
          : hitTestBox(centroids, { x0: dragStart.x, y0: dragStart.y, x1: end.x, y1: end.y });
      }
      app.selection = addToSelection({ ...app.selection, selectedIds: event.shiftKey ? app.selection.selectedIds : [] }, ids, stage ?? "");
      highlightSelection(app.selection);
      refreshGate(app);
      dragStart = null;
      lassoPath = [];
    });
  });
}

function refreshGate(app: AppState): void {
  const question = (document.querySelector("#question") as HTMLInputElement | null)?.value ?? "";
  const gate = submitGate(app.selection, question);
  const button = document.querySelector("#ask") as HTMLButtonElement | null;
  const hint = document.querySelector("#qa-hint");
  if (button) button.disabled = !gate.enabled;
  if (hint) hint.textContent = gate.hint ?? "";
}

function appendExchange(app: AppState, html: string): void {
  const anchor = app.selection.anchorStage
    ? document.querySelector(`section[data-stage="${app.selection.anchorStage}"]`)
    : null;
  const host = document.createElement("div");
  host.innerHTML = html;
  (anchor ?? document.querySelector("main.report"))?.appendChild(host);
}

async function submitQuestion(app: AppState): Promise<void> {
  const input = document.querySelector("#question") as HTMLInputElement | null;
  if (!input) return;
  const outcome = await app.controller.submit(app.selection, input.value);
  if (outcome.html) appendExchange(app, outcome.html);
  if (!outcome.error) input.value = "";
  refreshGate(app);
}

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const client = new ApiClient("");
  let reportId = params.get("report");
  if (!reportId) {
    const student = params.get("student") ?? "steven";
    const unit = params.get("unit") ?? "U7";
    const created = await client.createReport(student, unit, params.get("backend") ?? "template");
    reportId = created.report_id;
  }
  const doc = await client.getReport(reportId);
  const result = renderReport(doc);
  const root = document.querySelector("#root");
  if (!root) return;
  root.innerHTML = result.html;
  if (!result.ok) return; // schema mismatch: banner only, no charts, no wiring

  const app: AppState = {
    doc,
    selection: emptySelection(),
    controller: new QaController(client, reportId),
  };
  wireSelection(app);

  document.querySelectorAll<HTMLButtonElement>("[data-tool]").forEach((button) => {
    button.addEventListener("click", () => {
      app.selection = { ...app.selection, tool: (button.dataset.tool as "box" | "lasso") ?? "box" };
      document.querySelectorAll("[data-tool]").forEach((b) => b.classList.toggle("active", b === button));
    });
  });
  document.querySelector("#question")?.addEventListener("input", () => refreshGate(app));
  document.querySelector("#ask")?.addEventListener("click", () => void submitQuestion(app));
  document.querySelector("#clear-selection")?.addEventListener("click", () => {
    app.selection = { ...app.selection, selectedIds: [] };
    highlightSelection(app.selection);
    refreshGate(app);
  });
  refreshGate(app);
}

void boot();
