/**
 * Protocol review screens: the Elicit delete action emits one ValidateErrors
 * amend with one delete edit op, plan approval sends the served hash, and a
 * stale submission surfaces the conflict instead of silently retrying.
 */

import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { ProtocolReview, STALE_SESSION_NOTICE } from "../src/protocol.js";
import type { SessionView } from "../src/types.js";
import { RecordedApi } from "./stub.js";

let stub: RecordedApi;
let api: ApiClient;
let container: HTMLElement;
let sessions: SessionView[];
let statuses: string[];

beforeEach(() => {
  stub = new RecordedApi();
  api = new ApiClient("", stub.fetch);
  document.body.innerHTML = '<div id="pane"></div>';
  container = document.getElementById("pane")!;
  sessions = [];
  statuses = [];
});

function reviewFor(taskId: string): ProtocolReview {
  return new ProtocolReview(
    api,
    taskId,
    (session) => sessions.push(session),
    (message) => statuses.push(message),
  );
}

async function flush(): Promise<void> {
  await new Promise((resolve) => setTimeout(resolve, 0));
}

describe("elicit screen", () => {
  it("lists every proposed failure mode with delete controls and an add form", async () => {
    const session = await api.getTask(stub.draftTaskId);
    reviewFor(stub.draftTaskId).render(container, session);

    const items = container.querySelectorAll("li.failure-mode");
    expect(items).toHaveLength(session.descriptor.failure_modes.length);
    expect(container.querySelector(".add-mode-form")).not.toBeNull();
    expect(container.querySelector("button.submit-review")).not.toBeNull();
  });

  it("deleting one failure mode emits a ValidateErrors amend with one delete op", async () => {
    const session = await api.getTask(stub.draftTaskId);
    const review = reviewFor(stub.draftTaskId);
    review.render(container, session);

    const target = container.querySelector<HTMLElement>('li[data-mode-id="spurious_value"]')!;
    target.querySelector<HTMLButtonElement>("button.delete-mode")!.click();
    container.querySelector<HTMLButtonElement>("button.submit-review")!.click();
    await flush();

    const protocolPosts = stub.posts.filter((p) => p.path.includes("/protocol/messages"));
    expect(protocolPosts).toHaveLength(1);
    const { message, response } = protocolPosts[0].body;
    expect(message.kind).toBe("ValidateErrors");
    expect(message.seq).toBe(session.next_seq);
    expect(message.payload).toHaveLength(session.descriptor.failure_modes.length);
    expect(response.verdict).toBe("amend");
    expect(response.amendments).toEqual([
      { op: "delete", target: "failure_mode", target_id: "spurious_value" },
    ]);
    // the session callback received the post-amendment state
    expect(sessions).toHaveLength(1);
    expect(sessions[0].descriptor.failure_modes.map((m) => m.id)).not.toContain("spurious_value");
  });

  it("an untouched review submits a plain approval", async () => {
    const session = await api.getTask(stub.draftTaskId);
    reviewFor(stub.draftTaskId).render(container, session);
    container.querySelector<HTMLButtonElement>("button.submit-review")!.click();
    await flush();

    const { response } = stub.posts[0].body;
    expect(response.verdict).toBe("approve");
    expect(response.amendments).toBeUndefined();
  });

  it("a stale-seq submission surfaces the 409 as a stale-session notice", async () => {
    const session = await api.getTask(stub.draftTaskId);
    const review = reviewFor(stub.draftTaskId);
    review.render(container, session);
    stub.forceConflict = true; // another tab advanced the session

    container.querySelector<HTMLButtonElement>("button.submit-review")!.click();
    await flush();

    expect(sessions).toHaveLength(0); // no silent overwrite
    expect(statuses).toContain(STALE_SESSION_NOTICE);
    expect(container.querySelector(".stale-notice")!.textContent).toBe(STALE_SESSION_NOTICE);
  });
});

describe("map screen", () => {
  it("approve plan fetches the current hash and posts it", async () => {
    const session = await api.getTask("chart-demo");
    const mapSession: SessionView = { ...session, stage: "Map" };
    reviewFor("chart-demo").render(container, mapSession);

    container.querySelector<HTMLButtonElement>("button.approve-plan")!.click();
    await flush();

    const approvals = stub.posts.filter((p) => p.path.endsWith("/plan/approve"));
    expect(approvals).toHaveLength(1);
    const servedHash = stub.fixture("GET /tasks/chart-demo/plan").plan.plan_hash;
    expect(approvals[0].body.plan_hash).toBe(servedHash);
    expect(sessions[0].stage).toBe("Run");
  });

  it("a conflicting approval also shows the stale notice", async () => {
    const session = await api.getTask("chart-demo");
    reviewFor("chart-demo").render(container, { ...session, stage: "Map" });
    stub.forceConflict = true;
    container.querySelector<HTMLButtonElement>("button.approve-plan")!.click();
    await flush();
    expect(statuses).toContain(STALE_SESSION_NOTICE);
  });
});

describe("refine screen", () => {
  it("adding an objective posts a ProvideFeedback message with one add op", async () => {
    const session = await api.getTask("chart-demo");
    reviewFor("chart-demo").render(container, { ...session, stage: "Refine" });

    container.querySelector<HTMLInputElement>("input.objective-name")!.value = "legibility";
    container.querySelector<HTMLInputElement>("input.objective-threshold")!.value = "0.5";
    container.querySelector<HTMLButtonElement>("button.add-objective")!.click();
    await flush();

    const { message } = stub.posts[0].body;
    expect(message.kind).toBe("ProvideFeedback");
    expect(message.payload).toEqual([
      { op: "add", target: "objective", value: { name: "legibility", description: "", threshold: 0.5 } },
    ]);
  });

  it("finalising sends an empty ProvideFeedback payload", async () => {
    const session = await api.getTask("chart-demo");
    reviewFor("chart-demo").render(container, { ...session, stage: "Refine" });
    container.querySelector<HTMLButtonElement>("button.finalise")!.click();
    await flush();
    expect(stub.posts[0].body.message.payload).toEqual([]);
  });
});
