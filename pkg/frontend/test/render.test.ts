import { describe, expect, it } from "vitest";

import report from "./fixtures/report.json";
import { renderReport, renderSidebar, renderStage, sidebarModel } from "../src/render.js";
import { ReportDocument } from "../src/types.js";

const doc = report as unknown as ReportDocument;

describe("sidebar", () => {
  it("lists twelve stage entries grouped 3/6/3", () => {
    const groups = sidebarModel(doc);
    expect(groups.map((g) => g.infoGroup)).toEqual([
      "overview_intro",
      "summary_info",
      "formative_guidance",
    ]);
    expect(groups.map((g) => g.entries.length)).toEqual([3, 6, 3]);
    expect(groups.flatMap((g) => g.entries).length).toBe(12);
  });

  it("renders one anchor link per stage", () => {
    const html = renderSidebar(doc);
    const anchors = html.match(/class="sidebar-entry"/g) ?? [];
    expect(anchors.length).toBe(12);
    for (const stage of doc.stages) {
      expect(html).toContain(`href="#${stage.stage_id}"`);
    }
  });
});

describe("stage rendering", () => {
  it("renders transitional stages text-only", () => {
    const transitional = doc.stages.filter((s) => s.transitional);
    expect(transitional.length).toBeGreaterThan(0);
    for (const stage of transitional) {
      const html = renderStage(stage);
      expect(html).toContain(stage.narrative.slice(0, 24));
      expect(html).not.toContain("<svg");
      expect(html).not.toContain("<ul");
    }
  });

  it("mounts charts with selectable element ids on data stages", () => {
    const s1 = doc.stages[0];
    const html = renderStage(s1);
    expect(html).toContain("<svg");
    expect(html).toContain('data-element-id="el-unit-U3"');
  });

  it("renders embedded insights with their verbalized text", () => {
    const s6 = doc.stages[5];
    expect(s6.stage_id).toBe("S6");
    const html = renderStage(s6);
    expect(s6.insights.length).toBe(3);
    for (const insight of s6.insights) {
      expect(html).toContain(`data-insight-id="${insight.id}"`);
    }
  });
});

describe("document gate", () => {
  it("renders the full report when the schema version matches", () => {
    const result = renderReport(doc);
    expect(result.ok).toBe(true);
    expect(result.chartCount).toBeGreaterThan(0);
    expect(result.html).toContain(doc.metadata.student_token);
  });

  it("shows an upgrade banner and zero charts on schema mismatch", () => {
    const future = { ...doc, schema_version: 99 } as ReportDocument;
    const result = renderReport(future);
    expect(result.ok).toBe(false);
    expect(result.chartCount).toBe(0);
    expect(result.html).toContain("schema version 99");
    expect(result.html).not.toContain("<svg");
  });
});
