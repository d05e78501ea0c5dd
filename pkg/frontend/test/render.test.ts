/**
 * Spec-driven rendering: the chart view shows side-by-side images plus an
 * editable table, the QA view shows highlighted passages with metric cards
 * and approval buttons, and missing artifacts degrade to an error panel.
 */

import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { renderUiSpec, type RenderContext } from "../src/components.js";
import { LabelDrafts } from "../src/labels.js";
import { RecordedApi } from "./stub.js";

let stub: RecordedApi;
let api: ApiClient;

beforeEach(() => {
  stub = new RecordedApi();
  api = new ApiClient("", stub.fetch);
  document.body.innerHTML = '<div id="app"></div>';
});

async function contextFor(taskId: string, exampleIndex = 0): Promise<RenderContext> {
  const uiSpec = await api.getUiSpec(taskId);
  const examples = await api.getExamples(taskId);
  const view = await api.getExampleView(examples.examples[exampleIndex].example_id);
  return {
    api,
    view,
    uiSpec: uiSpec.ui_spec,
    labelSpec: uiSpec.label_spec,
    drafts: new LabelDrafts(),
    onStatus: () => {},
    onRefresh: () => {},
  };
}

function app(): HTMLElement {
  return document.getElementById("app")!;
}

describe("chart review view", () => {
  it("renders side-by-side images and an editable table in spec order", async () => {
    const ctx = await contextFor("chart-demo");
    renderUiSpec(app(), ctx);

    const kinds = [...app().querySelectorAll<HTMLElement>("section.component")].map(
      (s) => s.dataset.kind,
    );
    expect(kinds).toEqual(["side_by_side_image", "editable_table", "summary_panel", "notes"]);

    const images = app().querySelectorAll(".side-by-side img");
    expect(images).toHaveLength(2);
    expect(images[0].className).toBe("original-image");
    expect(images[1].className).toBe("regenerated-image");

    const table = app().querySelector("table.editable-table")!;
    expect(table).not.toBeNull();
    const inputs = table.querySelectorAll("input.cell-input");
    const exampleRows = ctx.view.example.fm_output.table!.rows;
    expect(inputs).toHaveLength(exampleRows.length * 2); // x and y columns
  });

  it("color-keys the summary panel error classes", async () => {
    const ctx = await contextFor("chart-demo", 0); // example 0 is the failing one
    renderUiSpec(app(), ctx);
    const counts = app().querySelectorAll(".error-count");
    expect(counts).toHaveLength(3);
    const incorrect = app().querySelector<HTMLElement>(".error-incorrect")!;
    expect(incorrect.style.color).toBe("rgb(214, 39, 40)"); // #d62728
  });

  it("renders an error panel when the regenerated image artifact is missing", async () => {
    const ctx = await contextFor("chart-demo");
    ctx.view.latest_result = null; // simulate a missing evaluation result
    renderUiSpec(app(), ctx);

    const slot = app().querySelector(".regenerated")!;
    expect(slot.querySelector(".error-panel")).not.toBeNull();
    // the rest still renders
    expect(app().querySelector(".original-image")).not.toBeNull();
    expect(app().querySelector("table.editable-table")).not.toBeNull();
  });
});

describe("document QA review view", () => {
  it("renders highlighted passages, approval buttons and metric cards", async () => {
    const ctx = await contextFor("doc-qa-demo", 1); // a passing, fully-supported answer
    renderUiSpec(app(), ctx);

    const kinds = [...app().querySelectorAll<HTMLElement>("section.component")].map(
      (s) => s.dataset.kind,
    );
    expect(kinds).toEqual([
      "highlighted_document",
      "approval_buttons",
      "metric_cards",
      "notes",
    ]);

    const highlighted = app().querySelectorAll(".word.highlight");
    expect(highlighted.length).toBeGreaterThan(0);

    const metricNames = [...app().querySelectorAll<HTMLElement>(".metric-card")].map(
      (c) => c.dataset.metric,
    );
    expect(metricNames).toEqual(["answer_relevancy", "faithfulness"]);

    const approvals = app().querySelectorAll(".approval-row button.approve");
    expect(approvals).toHaveLength(3); // one per source passage
  });

  it("highlight indices match the served spans exactly", async () => {
    const ctx = await contextFor("doc-qa-demo", 1);
    renderUiSpec(app(), ctx);
    const spans = ctx.view.latest_result!.outputs["span_highlighting"].spans!;
    for (const span of spans) {
      const block = app().querySelector(`[data-passage-index="${span.passage_index}"]`)!;
      const words = block.querySelectorAll(".word");
      const expected = span.end_word - span.start_word + 1;
      const got = block.querySelectorAll(".word.highlight").length;
      expect(got).toBe(expected);
      expect(words.length).toBeGreaterThanOrEqual(expected);
    }
  });
});
