// Box and lasso selection over rendered chart marks. Hit-testing runs on
// mark centroids (point-in-rect / point-in-polygon), so the ids a gesture
// produces are exactly the marks it covered.

import { Centroid } from "./layout.js";
import { ReportDocument } from "./types.js";

export type SelectionTool = "box" | "lasso" | "text";

export interface SelectionState {
  tool: SelectionTool;
  selectedIds: string[];
  anchorStage: string | null;
}

export function emptySelection(): SelectionState {
  return { tool: "box", selectedIds: [], anchorStage: null };
}

export interface Box {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
}

export function hitTestBox(centroids: Centroid[], box: Box): string[] {
  const xLo = Math.min(box.x0, box.x1);
  const xHi = Math.max(box.x0, box.x1);
  const yLo = Math.min(box.y0, box.y1);
  const yHi = Math.max(box.y0, box.y1);
  const hits = centroids.filter((c) => c.x >= xLo && c.x <= xHi && c.y >= yLo && c.y <= yHi);
  return dedupe(hits.map((c) => c.elementId));
}

export interface Point {
  x: number;
  y: number;
}

// ray-casting point-in-polygon; polygon closes implicitly
export function pointInPolygon(pt: Point, polygon: Point[]): boolean {
  let inside = false;
  for (let i = 0, j = polygon.length - 1; i < polygon.length; j = i++) {
    const a = polygon[i];
    const b = polygon[j];
    const intersects =
      a.y > pt.y !== b.y > pt.y &&
      pt.x < ((b.x - a.x) * (pt.y - a.y)) / (b.y - a.y) + a.x;
    if (intersects) inside = !inside;
  }
  return inside;
}

export function hitTestLasso(centroids: Centroid[], polygon: Point[]): string[] {
  if (polygon.length < 3) return [];
  const hits = centroids.filter((c) => pointInPolygon({ x: c.x, y: c.y }, polygon));
  return dedupe(hits.map((c) => c.elementId));
}

function dedupe(ids: string[]): string[] {
  return [...new Set(ids)];
}

// every selected id must exist in the loaded report's element registry
export function validateSelection(ids: string[], doc: ReportDocument): { ok: string[]; unknown: string[] } {
  const ok: string[] = [];
  const unknown: string[] = [];
  for (const id of ids) {
    if (id.startsWith("text:") || id in doc.registry) ok.push(id);
    else unknown.push(id);
  }
  return { ok, unknown };
}

export function addToSelection(state: SelectionState, ids: string[], anchorStage: string): SelectionState {
  return {
    tool: state.tool,
    selectedIds: dedupe([...state.selectedIds, ...ids]),
    anchorStage,
  };
}
