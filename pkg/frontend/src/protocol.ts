/**
 * Staged protocol review screens.
 *
 * Elicit: validate the proposed failure modes (per-item delete plus an add
 * form); one ValidateErrors message carries the proposal and the reviewer's
 * amendments. Map: inspect strategy bindings and approve the plan against its
 * hash. Refine: add/delete/edit forms that become ProvideFeedback edit ops.
 * Protocol actions always wait for the API; a 409 renders the stale-session
 * notice instead of silently retrying.
 */

import { ApiClient, ApiError } from "./api.js";
import type {
  EditOpData,
  FailureModeData,
  MessageData,
  ResponseData,
  SessionView,
} from "./types.js";

export const STALE_SESSION_NOTICE = "stale session - reload";

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

export class ProtocolReview {
  private pendingDeletes = new Set<string>();
  private pendingAdds: FailureModeData[] = [];

  constructor(
    private api: ApiClient,
    private taskId: string,
    private onSession: (session: SessionView) => void,
    private onStatus: (message: string) => void,
  ) {}

  render(container: HTMLElement, session: SessionView): void {
    container.innerHTML = "";
    container.appendChild(el("h2", "stage-title", `Stage: ${session.stage}`));
    switch (session.stage) {
      case "Elicit":
        this.renderElicit(container, session);
        break;
      case "Map":
        this.renderMap(container, session);
        break;
      case "Run":
        this.renderRun(container, session);
        break;
      case "Refine":
        this.renderRefine(container, session);
        break;
      default:
        container.appendChild(el("p", "finalised", "Plan finalised; review below."));
    }
  }

  private async post(message: MessageData, response: ResponseData, container: HTMLElement) {
    try {
      const session = await this.api.postMessage(this.taskId, message, response);
      this.onSession(session);
    } catch (error) {
      if (error instanceof ApiError && error.isConflict) {
        container.appendChild(el("p", "stale-notice", STALE_SESSION_NOTICE));
        this.onStatus(STALE_SESSION_NOTICE);
      } else {
        this.onStatus(`protocol action failed: ${String(error)}`);
      }
    }
  }

  // --- Elicit: validate failure modes ------------------------------------------

  private renderElicit(container: HTMLElement, session: SessionView): void {
    container.appendChild(
      el("p", "", "Review the hypothesised failure modes. Delete what does not apply, add what is missing."),
    );
    const list = el("ul", "failure-modes");
    for (const mode of session.descriptor.failure_modes) {
      const item = el("li", "failure-mode");
      item.dataset.modeId = mode.id;
      if (this.pendingDeletes.has(mode.id)) item.classList.add("pending-delete");
      item.appendChild(el("span", "mode-name", `${mode.id} [${mode.severity}] ${mode.description}`));
      const remove = el(
        "button",
        "delete-mode",
        this.pendingDeletes.has(mode.id) ? "undo delete" : "delete",
      );
      remove.addEventListener("click", () => {
        if (this.pendingDeletes.has(mode.id)) {
          this.pendingDeletes.delete(mode.id);
        } else {
          this.pendingDeletes.add(mode.id);
        }
        this.render(container, session);
      });
      item.appendChild(remove);
      list.appendChild(item);
    }
    for (const added of this.pendingAdds) {
      const item = el("li", "failure-mode pending-add");
      item.appendChild(el("span", "mode-name", `${added.id} [${added.severity}] (to add)`));
      list.appendChild(item);
    }
    container.appendChild(list);

    const form = el("div", "add-mode-form");
    const idInput = el("input", "new-mode-id");
    idInput.placeholder = "failure mode id (e.g. axis_swap)";
    const descriptionInput = el("input", "new-mode-description");
    descriptionInput.placeholder = "what goes wrong";
    const addButton = el("button", "add-mode", "add failure mode");
    addButton.addEventListener("click", () => {
      const id = idInput.value.trim();
      if (!id) {
        this.onStatus("failure mode id is required");
        return;
      }
      this.pendingAdds.push({
        id,
        name: id,
        description: descriptionInput.value.trim(),
        severity: "medium",
        origin: "human_added",
      });
      idInput.value = "";
      descriptionInput.value = "";
      this.render(container, session);
    });
    form.append(idInput, descriptionInput, addButton);
    container.appendChild(form);

    const submit = el("button", "submit-review", "Submit review");
    submit.addEventListener("click", () => {
      const amendments: EditOpData[] = [
        ...[...this.pendingDeletes].map(
          (id): EditOpData => ({ op: "delete", target: "failure_mode", target_id: id }),
        ),
        ...this.pendingAdds.map((mode): EditOpData => ({ op: "add", target: "failure_mode", value: mode })),
      ];
      const message: MessageData = {
        kind: "ValidateErrors",
        session_id: session.session_id,
        seq: session.next_seq,
        payload: session.descriptor.failure_modes,
      };
      const response: ResponseData =
        amendments.length > 0 ? { verdict: "amend", amendments } : { verdict: "approve" };
      this.pendingDeletes.clear();
      this.pendingAdds = [];
      void this.post(message, response, container);
    });
    container.appendChild(submit);
  }

  // --- Map: strategies and plan approval ------------------------------------------

  private renderMap(container: HTMLElement, session: SessionView): void {
    container.appendChild(el("p", "", "Proposed strategies bind failure modes to executable checks."));
    const list = el("ul", "bindings");
    const bindings = session.descriptor.strategy_bindings;
    if (bindings.length === 0) {
      container.appendChild(
        el("p", "bindings-pending", "Strategies will be proposed automatically; approve the plan to accept them."),
      );
    }
    for (const binding of bindings) {
      const item = el(
        "li",
        "binding",
        `${binding.category}/${binding.template_id} -> ${binding.failure_mode_id || "(general)"}`,
      );
      list.appendChild(item);
    }
    container.appendChild(list);

    const approve = el("button", "approve-plan", "Approve plan");
    approve.addEventListener("click", () => {
      void (async () => {
        try {
          const plan = await this.api.getPlan(this.taskId);
          const session2 = await this.api.approvePlan(this.taskId, plan.plan.plan_hash);
          this.onSession(session2);
        } catch (error) {
          if (error instanceof ApiError && error.isConflict) {
            container.appendChild(el("p", "stale-notice", STALE_SESSION_NOTICE));
            this.onStatus(STALE_SESSION_NOTICE);
          } else {
            this.onStatus(`plan approval failed: ${String(error)}`);
          }
        }
      })();
    });
    container.appendChild(approve);
  }

  // --- Run: trigger evaluation ----------------------------------------------------

  private renderRun(container: HTMLElement, session: SessionView): void {
    container.appendChild(el("p", "", "Plan approved. Run the evaluation over the stored examples."));
    const run = el("button", "run-evaluation", "Run evaluation");
    run.addEventListener("click", () => {
      const message: MessageData = {
        kind: "RunEvaluation",
        session_id: session.session_id,
        seq: session.next_seq,
        payload: "stored",
      };
      void this.post(message, { verdict: "approve" }, container);
    });
    container.appendChild(run);
  }

  // --- Refine: edits or finalisation ---------------------------------------------------

  private renderRefine(container: HTMLElement, session: SessionView): void {
    container.appendChild(
      el("p", "", "Apply refinements (returns to Map for re-approval) or finalise the plan."),
    );

    const objectiveForm = el("div", "refine-form");
    const nameInput = el("input", "objective-name");
    nameInput.placeholder = "objective name";
    const thresholdInput = el("input", "objective-threshold");
    thresholdInput.placeholder = "threshold 0..1";
    const addObjective = el("button", "add-objective", "add objective");
    addObjective.addEventListener("click", () => {
      const name = nameInput.value.trim();
      if (!name) {
        this.onStatus("objective name is required");
        return;
      }
      const threshold = Number(thresholdInput.value);
      const op: EditOpData = {
        op: "add",
        target: "objective",
        value: {
          name,
          description: "",
          ...(Number.isNaN(threshold) ? {} : { threshold }),
        },
      };
      const message: MessageData = {
        kind: "ProvideFeedback",
        session_id: session.session_id,
        seq: session.next_seq,
        payload: [op],
      };
      void this.post(message, { verdict: "approve" }, container);
    });
    objectiveForm.append(nameInput, thresholdInput, addObjective);
    container.appendChild(objectiveForm);

    const finalise = el("button", "finalise", "Finalise plan");
    finalise.addEventListener("click", () => {
      const message: MessageData = {
        kind: "ProvideFeedback",
        session_id: session.session_id,
        seq: session.next_seq,
        payload: [],
      };
      void this.post(message, { verdict: "approve" }, container);
    });
    container.appendChild(finalise);
  }
}
