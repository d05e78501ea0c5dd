/** Review app shell: protocol screens on top, example review below. */

import { ApiClient } from "./api.js";
import { renderUiSpec } from "./components.js";
import { ProtocolReview } from "./protocol.js";
import { ViewState } from "./state.js";
import type { SessionView } from "./types.js";

export class ReviewApp {
  readonly state = new ViewState();
  private protocolPane: HTMLElement;
  private reviewPane: HTMLElement;
  private statusBar: HTMLElement;
  private review: ProtocolReview;

  constructor(
    private root: HTMLElement,
    private api: ApiClient,
  ) {
    this.root.innerHTML = "";
    this.statusBar = document.createElement("p");
    this.statusBar.className = "status-bar";
    this.protocolPane = document.createElement("div");
    this.protocolPane.className = "protocol-pane";
    this.reviewPane = document.createElement("div");
    this.reviewPane.className = "review-pane";

    const nav = document.createElement("div");
    nav.className = "example-nav";
    const prev = document.createElement("button");
    prev.textContent = "previous example";
    prev.className = "nav-prev";
    prev.addEventListener("click", () => {
      if (this.state.prev()) void this.renderExample();
    });
    const next = document.createElement("button");
    next.textContent = "next example";
    next.className = "nav-next";
    next.addEventListener("click", () => {
      if (this.state.next()) void this.renderExample();
    });
    nav.append(prev, next);

    this.root.append(this.statusBar, this.protocolPane, nav, this.reviewPane);
    this.review = new ProtocolReview(
      this.api,
      "",
      (session) => this.onSession(session),
      (message) => this.setStatus(message),
    );
  }

  setStatus(message: string): void {
    this.statusBar.textContent = message;
  }

  async load(taskId: string): Promise<void> {
    this.state.taskId = taskId;
    this.review = new ProtocolReview(
      this.api,
      taskId,
      (session) => this.onSession(session),
      (message) => this.setStatus(message),
    );
    const session = await this.api.getTask(taskId);
    this.state.session = session;
    const examples = await this.api.getExamples(taskId);
    this.state.exampleIds = examples.examples.map((e) => e.example_id);
    this.state.cursor = 0;
    this.review.render(this.protocolPane, session);
    await this.renderExample();
  }

  private onSession(session: SessionView): void {
    this.state.session = session;
    this.review.render(this.protocolPane, session);
    this.setStatus(`stage: ${session.stage}`);
    void this.renderExample();
  }

  async renderExample(): Promise<void> {
    const exampleId = this.state.currentExampleId;
    this.reviewPane.innerHTML = "";
    if (!exampleId) {
      const empty = document.createElement("p");
      empty.textContent = "no examples loaded for this task yet";
      this.reviewPane.appendChild(empty);
      return;
    }
    let uiSpec;
    try {
      uiSpec = await this.api.getUiSpec(this.state.taskId);
    } catch {
      const note = document.createElement("p");
      note.className = "error-panel";
      note.textContent = "no plan yet: finish the review stages above to generate one";
      this.reviewPane.appendChild(note);
      return;
    }
    this.state.uiSpec = uiSpec;
    const view = await this.api.getExampleView(exampleId);
    renderUiSpec(this.reviewPane, {
      api: this.api,
      view,
      uiSpec: uiSpec.ui_spec,
      labelSpec: uiSpec.label_spec,
      drafts: this.state.drafts,
      onStatus: (message) => this.setStatus(message),
      onRefresh: () => void this.renderExample(),
    });
  }
}
