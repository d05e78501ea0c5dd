/**
 * Label draft management. Drafts stay local until the reviewer explicitly
 * submits; client-side validation blocks bad payloads before any request.
 */

import { ApiClient, ApiError } from "./api.js";

export interface CellDraft {
  row: number;
  column: string;
  oldValue: number | string;
  rawText: string;
}

export interface SubmitResult {
  submitted: number;
  errors: string[];
}

export class LabelDrafts {
  private cells = new Map<string, CellDraft>();

  setCell(row: number, column: string, oldValue: number | string, rawText: string): void {
    const key = `${row}:${column}`;
    if (rawText === String(oldValue)) {
      this.cells.delete(key);
    } else {
      this.cells.set(key, { row, column, oldValue, rawText });
    }
  }

  get dirtyCount(): number {
    return this.cells.size;
  }

  /** Numeric validation happens here, before any request is issued. */
  validateNumeric(): string[] {
    const problems: string[] = [];
    for (const draft of this.cells.values()) {
      if (draft.rawText.trim() === "" || Number.isNaN(Number(draft.rawText))) {
        problems.push(`cell (${draft.row}, ${draft.column}): "${draft.rawText}" is not a number`);
      }
    }
    return problems;
  }

  async submitCellEdits(
    api: ApiClient,
    exampleId: string,
    channelId: string,
    labeler = "reviewer",
  ): Promise<SubmitResult> {
    const problems = this.validateNumeric();
    if (problems.length > 0) {
      return { submitted: 0, errors: problems };
    }
    const errors: string[] = [];
    let submitted = 0;
    for (const draft of [...this.cells.values()]) {
      try {
        await api.postLabel(exampleId, {
          channel_id: channelId,
          kind: "cell_edit",
          payload: {
            row: draft.row,
            column: draft.column,
            old_value: draft.oldValue,
            new_value: Number(draft.rawText),
          },
          labeler,
        });
        submitted += 1;
        this.cells.delete(`${draft.row}:${draft.column}`);
      } catch (error) {
        errors.push(error instanceof ApiError ? error.message : String(error));
      }
    }
    return { submitted, errors };
  }

  clear(): void {
    this.cells.clear();
  }
}

export async function submitApproval(
  api: ApiClient,
  exampleId: string,
  channelId: string,
  sourceIndex: number,
  approved: boolean,
): Promise<{ label_id: string }> {
  return api.postLabel(exampleId, {
    channel_id: channelId,
    kind: "binary_approval",
    payload: { source_index: sourceIndex, approved },
    labeler: "reviewer",
  });
}

export async function submitNote(
  api: ApiClient,
  exampleId: string,
  channelId: string,
  text: string,
): Promise<{ label_id: string }> {
  return api.postLabel(exampleId, {
    channel_id: channelId,
    kind: "free_text",
    payload: { text },
    labeler: "reviewer",
  });
}
