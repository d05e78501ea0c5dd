/**
 * Spec-driven rendering of the review surface.
 *
 * Every component kind served in the UI spec renders to a DOM section; a slot
 * whose data is missing renders an error panel instead of blanking the page.
 * Span highlights use the word indices served by the API verbatim; the UI
 * never re-computes matches.
 */

import { ApiClient } from "./api.js";
import { LabelDrafts, submitApproval, submitNote } from "./labels.js";
import type {
  ComponentKind,
  EvalOutputData,
  ExampleView,
  LabelSpecData,
  SpanData,
  UISpecData,
} from "./types.js";

// Color keys for the three review classes: wrong values red, fabricated rows
// yellow, dropped rows purple.
export const ERROR_CLASS_COLORS: Record<string, string> = {
  incorrect: "#d62728",
  spurious: "#e6b800",
  missing: "#7e57c2",
};

export interface RenderContext {
  api: ApiClient;
  view: ExampleView;
  uiSpec: UISpecData;
  labelSpec: LabelSpecData;
  drafts: LabelDrafts;
  onStatus: (message: string) => void;
  onRefresh: () => void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className = "",
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

export function errorPanel(message: string): HTMLElement {
  const panel = el("div", "error-panel", message);
  panel.setAttribute("role", "alert");
  return panel;
}

function outputFor(ctx: RenderContext, source: string): EvalOutputData | null {
  const result = ctx.view.latest_result;
  if (!result || !(source in result.outputs)) return null;
  return result.outputs[source];
}

export function renderUiSpec(container: HTMLElement, ctx: RenderContext): void {
  container.innerHTML = "";
  container.classList.toggle("two-column", ctx.uiSpec.layout === "two_column");
  for (const component of ctx.uiSpec.components) {
    const section = el("section", `component component-${component.kind}`);
    section.dataset.kind = component.kind;
    section.dataset.source = component.source;
    try {
      RENDERERS[component.kind](section, ctx, component.source);
    } catch (error) {
      section.appendChild(errorPanel(`failed to render ${component.kind}: ${String(error)}`));
    }
    container.appendChild(section);
  }
  renderNotesBox(container, ctx);
}

const RENDERERS: Record<
  ComponentKind,
  (section: HTMLElement, ctx: RenderContext, source: string) => void
> = {
  side_by_side_image: renderSideBySideImage,
  editable_table: renderEditableTable,
  highlighted_document: renderHighlightedDocument,
  metric_cards: renderMetricCards,
  approval_buttons: renderApprovalButtons,
  summary_panel: renderSummaryPanel,
};

// --- side-by-side original vs regenerated chart -------------------------------

function renderSideBySideImage(section: HTMLElement, ctx: RenderContext, source: string): void {
  section.appendChild(el("h3", "", "Original vs regenerated"));
  const row = el("div", "side-by-side");

  const originalSlot = el("figure", "original");
  const input = ctx.view.example.inputs.find((i) => i.blob_ref);
  if (input) {
    const img = el("img", "original-image");
    img.src = ctx.api.blobUrl(input.blob_ref, input.media_type || "image/svg+xml");
    img.alt = "original chart";
    originalSlot.appendChild(img);
    originalSlot.appendChild(el("figcaption", "", "original"));
  } else {
    originalSlot.appendChild(errorPanel("original image unavailable"));
  }
  row.appendChild(originalSlot);

  const regeneratedSlot = el("figure", "regenerated");
  const output = outputFor(ctx, source);
  const artifact = output?.artifacts?.find((a) => a.ref);
  if (artifact) {
    const img = el("img", "regenerated-image");
    img.src = ctx.api.blobUrl(artifact.ref, artifact.media_type || "image/svg+xml");
    img.alt = "regenerated chart";
    regeneratedSlot.appendChild(img);
    regeneratedSlot.appendChild(el("figcaption", "", "regenerated"));
  } else {
    regeneratedSlot.appendChild(errorPanel("regenerated image unavailable"));
  }
  row.appendChild(regeneratedSlot);
  section.appendChild(row);
}

// --- extracted table with numeric cell editing -----------------------------------

function renderEditableTable(section: HTMLElement, ctx: RenderContext, source: string): void {
  section.appendChild(el("h3", "", "Extracted table"));
  const table = ctx.view.example.fm_output.table;
  if (!table) {
    section.appendChild(errorPanel("example has no output table"));
    return;
  }
  const corrected = ctx.view.corrected_table;
  const grid = el("table", "editable-table");
  const head = el("tr");
  for (const [name] of table.columns) {
    head.appendChild(el("th", "", name));
  }
  grid.appendChild(head);

  table.rows.forEach((row, rowIndex) => {
    const tr = el("tr");
    row.forEach((cell, colIndex) => {
      const [name, kind] = table.columns[colIndex];
      const td = el("td");
      const shown = corrected ? corrected.rows[rowIndex][colIndex] : cell;
      if (kind === "numeric") {
        const inputEl = el("input", "cell-input");
        inputEl.value = String(shown);
        inputEl.dataset.row = String(rowIndex);
        inputEl.dataset.column = name;
        if (corrected && corrected.rows[rowIndex][colIndex] !== cell) {
          td.classList.add("edited");
          td.title = `edited (was ${String(cell)})`;
        }
        inputEl.addEventListener("input", () => {
          ctx.drafts.setCell(rowIndex, name, shown, inputEl.value);
        });
        td.appendChild(inputEl);
      } else {
        td.textContent = String(shown);
      }
      tr.appendChild(td);
    });
    grid.appendChild(tr);
  });
  section.appendChild(grid);

  const submit = el("button", "submit-edits", "Submit edits");
  submit.addEventListener("click", () => {
    void (async () => {
      if (ctx.drafts.dirtyCount === 0) {
        ctx.onStatus("no pending edits");
        return;
      }
      const outcome = await ctx.drafts.submitCellEdits(ctx.api, ctx.view.example.example_id, source);
      if (outcome.errors.length > 0) {
        ctx.onStatus(`edit rejected: ${outcome.errors.join("; ")}`);
      } else {
        ctx.onStatus(`saved ${outcome.submitted} edit(s)`);
        ctx.onRefresh();
      }
    })();
  });
  section.appendChild(submit);
}

// --- passages with highlighted support spans -----------------------------------------

/**
 * Map a normalized word index (as served by the API) to the raw token stream:
 * raw tokens that contain no letters or digits are skipped by normalization,
 * so they never consume an index.
 */
export function renderPassageWithSpans(passage: string, spans: SpanData[]): HTMLElement {
  const paragraph = el("p", "passage");
  const rawTokens = passage.split(/\s+/).filter((t) => t.length > 0);
  const highlighted = new Set<number>();
  for (const span of spans) {
    for (let w = span.start_word; w <= span.end_word; w++) {
      highlighted.add(w);
    }
  }
  let normalizedIndex = 0;
  rawTokens.forEach((token, i) => {
    const counts = /[\p{L}\p{N}]/u.test(token);
    const isHighlighted = counts && highlighted.has(normalizedIndex);
    if (counts) normalizedIndex += 1;
    const word = el("span", isHighlighted ? "word highlight" : "word", token);
    paragraph.appendChild(word);
    if (i < rawTokens.length - 1) {
      paragraph.appendChild(document.createTextNode(" "));
    }
  });
  return paragraph;
}

function renderHighlightedDocument(section: HTMLElement, ctx: RenderContext, source: string): void {
  section.appendChild(el("h3", "", "Source passages"));
  const passages = ctx.view.example.inputs.filter((i) => i.modality === "document");
  if (passages.length === 0) {
    section.appendChild(errorPanel("example has no document passages"));
    return;
  }
  const output = outputFor(ctx, source);
  const spans = output?.spans ?? [];
  const ranking = new Map<number, number>(output?.support_ranking ?? []);
  passages.forEach((passage, index) => {
    const block = el("div", "passage-block");
    block.dataset.passageIndex = String(index);
    const count = ranking.get(index) ?? 0;
    block.appendChild(el("h4", "", `Passage ${index} (${count} supporting words)`));
    block.appendChild(
      renderPassageWithSpans(
        passage.text,
        spans.filter((s) => s.passage_index === index),
      ),
    );
    section.appendChild(block);
  });
  if (!output) {
    section.appendChild(errorPanel("no evaluation result yet; highlights unavailable"));
  }
}

// --- metric cards ------------------------------------------------------------------------

function renderMetricCards(section: HTMLElement, ctx: RenderContext, source: string): void {
  section.appendChild(el("h3", "", "Metrics"));
  const output = outputFor(ctx, source);
  if (!output) {
    section.appendChild(errorPanel("no evaluation result yet; metrics unavailable"));
    return;
  }
  const rowEl = el("div", "metric-cards");
  const entries = Object.entries(output.metrics ?? {});
  if (output.score !== undefined && entries.length === 0) {
    entries.push(["score", output.score]);
  }
  if (entries.length === 0) {
    rowEl.appendChild(errorPanel("result carries no metric values"));
  }
  for (const [name, value] of entries) {
    const card = el("div", "metric-card");
    card.dataset.metric = name;
    card.appendChild(el("div", "metric-name", name));
    card.appendChild(el("div", "metric-value", value.toFixed(3)));
    rowEl.appendChild(card);
  }
  if (output.rationale) {
    rowEl.appendChild(el("p", "rationale", output.rationale));
  }
  section.appendChild(rowEl);
}

// --- per-source approval toggles ----------------------------------------------------------

function renderApprovalButtons(section: HTMLElement, ctx: RenderContext, source: string): void {
  section.appendChild(el("h3", "", "Source approvals"));
  const passages = ctx.view.example.inputs.filter((i) => i.modality === "document");
  if (passages.length === 0) {
    section.appendChild(errorPanel("nothing to approve: no document passages"));
    return;
  }
  const approved = new Set(ctx.view.approved_sources);
  passages.forEach((_passage, index) => {
    const row = el("div", "approval-row");
    row.appendChild(el("span", "", `Passage ${index}`));
    const approve = el("button", approved.has(index) ? "approve active" : "approve", "supports answer");
    approve.dataset.sourceIndex = String(index);
    approve.addEventListener("click", () => {
      void submitApproval(ctx.api, ctx.view.example.example_id, source, index, !approved.has(index))
        .then(() => {
          ctx.onStatus(`approval saved for passage ${index}`);
          ctx.onRefresh();
        })
        .catch((error) => ctx.onStatus(`approval failed: ${String(error)}`));
    });
    row.appendChild(approve);
    section.appendChild(row);
  });
}

// --- summary panel ---------------------------------------------------------------------------

function renderSummaryPanel(section: HTMLElement, ctx: RenderContext, source: string): void {
  section.appendChild(el("h3", "", "Summary"));
  const output = outputFor(ctx, source);
  if (!output) {
    section.appendChild(errorPanel("no evaluation result yet; summary unavailable"));
    return;
  }
  if (output.skipped_missing_reference) {
    section.appendChild(el("p", "needs-review", "needs review: no reference data for this check"));
    return;
  }
  if (output.report) {
    const list = el("ul", "error-counts");
    for (const [cls, count] of Object.entries(output.report.counts)) {
      const item = el("li", `error-count error-${cls}`, `${cls}: ${count}`);
      item.style.color = ERROR_CLASS_COLORS[cls] ?? "inherit";
      list.appendChild(item);
    }
    section.appendChild(list);
    if (output.score !== undefined) {
      section.appendChild(el("p", "score", `score: ${output.score.toFixed(3)}`));
    }
    return;
  }
  if (output.violations && output.violations.length > 0) {
    const list = el("ul", "violations");
    for (const violation of output.violations) {
      list.appendChild(el("li", "violation", `${violation.path}: ${violation.message}`));
    }
    section.appendChild(list);
    return;
  }
  const stats = Object.entries(output.stats ?? {});
  if (stats.length === 0) {
    section.appendChild(el("p", "", "no findings"));
    return;
  }
  const list = el("ul", "stats");
  for (const [name, value] of stats) {
    list.appendChild(el("li", "stat", `${name}: ${value}`));
  }
  section.appendChild(list);
}

// --- standing free-text notes box ------------------------------------------------------------

function renderNotesBox(container: HTMLElement, ctx: RenderContext): void {
  const channel = ctx.labelSpec.channels.find((c) => c.kind === "free_text");
  if (!channel) return;
  const section = el("section", "component notes-box");
  section.dataset.kind = "notes";
  section.appendChild(el("h3", "", "Notes"));
  const textarea = el("textarea", "note-input");
  textarea.placeholder = "free-form feedback for this example";
  section.appendChild(textarea);
  const submit = el("button", "submit-note", "Save note");
  submit.addEventListener("click", () => {
    const text = textarea.value.trim();
    if (!text) {
      ctx.onStatus("nothing to save");
      return;
    }
    void submitNote(ctx.api, ctx.view.example.example_id, channel.channel_id, text)
      .then(() => {
        textarea.value = "";
        ctx.onStatus("note saved");
        ctx.onRefresh();
      })
      .catch((error) => ctx.onStatus(`note failed: ${String(error)}`));
  });
  section.appendChild(submit);
  container.appendChild(section);
}
