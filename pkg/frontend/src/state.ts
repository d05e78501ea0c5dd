/** App-level view state: which task, which example, what is pending. */

import { LabelDrafts } from "./labels.js";
import type { SessionView, UiSpecResponse } from "./types.js";

export class ViewState {
  taskId = "";
  session: SessionView | null = null;
  uiSpec: UiSpecResponse | null = null;
  exampleIds: string[] = [];
  cursor = 0;
  drafts = new LabelDrafts();

  get currentExampleId(): string | null {
    return this.exampleIds[this.cursor] ?? null;
  }

  next(): boolean {
    if (this.cursor + 1 >= this.exampleIds.length) return false;
    this.cursor += 1;
    this.drafts.clear();
    return true;
  }

  prev(): boolean {
    if (this.cursor === 0) return false;
    this.cursor -= 1;
    this.drafts.clear();
    return true;
  }
}
