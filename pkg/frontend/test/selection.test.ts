import { describe, expect, it } from "vitest";

import report from "./fixtures/report.json";
import { chartCentroids } from "../src/layout.js";
import {
  emptySelection,
  addToSelection,
  hitTestBox,
  hitTestLasso,
  pointInPolygon,
  validateSelection,
} from "../src/selection.js";
import { ChartSpec, ReportDocument } from "../src/types.js";

const doc = report as unknown as ReportDocument;

const syntheticCentroids = [
  { elementId: "a", x: 10, y: 10 },
  { elementId: "b", x: 50, y: 50 },
  { elementId: "c", x: 90, y: 90 },
];

describe("box hit-testing", () => {
  it("selects exactly the centroids the box covers", () => {
    expect(hitTestBox(syntheticCentroids, { x0: 0, y0: 0, x1: 60, y1: 60 })).toEqual(["a", "b"]);
    expect(hitTestBox(syntheticCentroids, { x0: 80, y0: 80, x1: 100, y1: 100 })).toEqual(["c"]);
    expect(hitTestBox(syntheticCentroids, { x0: 20, y0: 20, x1: 40, y1: 40 })).toEqual([]);
  });

  it("is orientation independent", () => {
    expect(hitTestBox(syntheticCentroids, { x0: 60, y0: 60, x1: 0, y1: 0 })).toEqual(["a", "b"]);
  });
});

describe("lasso hit-testing", () => {
  it("ray-casting agrees with hand-checked points", () => {
    const triangle = [
      { x: 0, y: 0 },
      { x: 100, y: 0 },
      { x: 0, y: 100 },
    ];
    expect(pointInPolygon({ x: 10, y: 10 }, triangle)).toBe(true);
    expect(pointInPolygon({ x: 90, y: 90 }, triangle)).toBe(false);
  });

  it("selects centroids inside the polygon only", () => {
    const polygon = [
      { x: 0, y: 0 },
      { x: 70, y: 0 },
      { x: 70, y: 70 },
      { x: 0, y: 70 },
    ];
    expect(hitTestLasso(syntheticCentroids, polygon)).toEqual(["a", "b"]);
    expect(hitTestLasso(syntheticCentroids, polygon.slice(0, 2))).toEqual([]);
  });
});

describe("selection over the real journey map", () => {
  const journeyMap = doc.stages[0].charts[0] as ChartSpec;

  it("a box around the Unit 3 node selects exactly that element", () => {
    const centroids = chartCentroids(journeyMap);
    const u3 = centroids.find((c) => c.elementId === "el-unit-U3")!;
    const ids = hitTestBox(centroids, { x0: u3.x - 10, y0: u3.y - 10, x1: u3.x + 10, y1: u3.y + 10 });
    expect(ids).toEqual(["el-unit-U3"]);
  });

  it("selection state accumulates ids without duplicates", () => {
    let state = emptySelection();
    state = addToSelection(state, ["el-unit-U3"], "S1");
    state = addToSelection(state, ["el-unit-U3", "el-unit-U7"], "S1");
    expect(state.selectedIds).toEqual(["el-unit-U3", "el-unit-U7"]);
    expect(state.anchorStage).toBe("S1");
  });

  it("ids are validated against the report registry", () => {
    const { ok, unknown } = validateSelection(["el-unit-U3", "made-up"], doc);
    expect(ok).toEqual(["el-unit-U3"]);
    expect(unknown).toEqual(["made-up"]);
  });
});
