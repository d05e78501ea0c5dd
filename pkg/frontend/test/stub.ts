/**
 * Recorded API stub: serves fixture responses captured from the real backend
 * (scripts/record_ui_fixtures.py) and records every POST so tests can assert
 * exactly what the UI sent.
 */

import type { FetchLike } from "../src/api.js";
import recordedFixtures from "./fixtures/recorded.json";

const fixtures = recordedFixtures as Record<string, any>;

export interface RecordedPost {
  path: string;
  body: any;
}

export class RecordedApi {
  posts: RecordedPost[] = [];
  /** When set, the next protocol-affecting POST answers 409. */
  forceConflict = false;

  readonly draftTaskId: string = fixtures["draft_task_id"];

  fixture(key: string): any {
    const value = fixtures[key];
    if (value === undefined) {
      throw new Error(`no recorded fixture for ${key}`);
    }
    return structuredClone(value);
  }

  private json(body: unknown, status = 200): Response {
    return new Response(JSON.stringify(body), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  }

  fetch: FetchLike = async (url, init) => {
    const method = (init?.method ?? "GET").toUpperCase();
    const path = url.replace(/^https?:\/\/[^/]+/, "").split("?")[0];
    const body = init?.body ? JSON.parse(String(init.body)) : undefined;

    if (method === "GET") {
      const key = `GET ${path}`;
      if (fixtures[key] !== undefined) {
        if (path.startsWith("/blobs/")) {
          const bytes = Uint8Array.from(atob(fixtures[key].b64), (c) => c.charCodeAt(0));
          return new Response(bytes, { status: 200, headers: { "Content-Type": "image/svg+xml" } });
        }
        return this.json(this.fixture(key));
      }
      return this.json({ code: "unknown", message: `no fixture for ${key}`, detail: "" }, 404);
    }

    this.posts.push({ path, body });

    if (path.endsWith("/labels")) {
      return this.json(this.fixture("POST /examples/{id}/labels -> 201"), 201);
    }

    if (path.includes("/protocol/messages")) {
      const taskId = path.split("/")[2];
      const current = this.fixture(`GET /tasks/${taskId}/protocol/messages`);
      if (this.forceConflict || body.message.seq !== current.next_seq) {
        return this.json(this.fixture("POST stale -> 409"), 409);
      }
      const session = this.fixture(`GET /tasks/${taskId}`);
      session.stage = "Map";
      session.next_seq = current.next_seq + 1;
      if (body.response.verdict === "amend") {
        // apply delete amendments so the test can observe the new state
        const deleted = new Set(
          body.response.amendments
            .filter((op: any) => op.op === "delete" && op.target === "failure_mode")
            .map((op: any) => op.target_id),
        );
        session.descriptor.failure_modes = session.descriptor.failure_modes.filter(
          (m: any) => !deleted.has(m.id),
        );
      }
      return this.json(session);
    }

    if (path.endsWith("/plan/approve")) {
      const taskId = path.split("/")[2];
      if (this.forceConflict) {
        return this.json(this.fixture("POST stale -> 409"), 409);
      }
      const session = this.fixture(`GET /tasks/${taskId}`);
      session.stage = "Run";
      session.plan_approved = true;
      session.plan_version = 1;
      return this.json(session);
    }

    return this.json({ code: "unknown", message: `unhandled ${method} ${path}`, detail: "" }, 404);
  };
}
