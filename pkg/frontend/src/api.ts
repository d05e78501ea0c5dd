/**
 * Typed client for the evaluator API. Only the documented endpoints are used;
 * the fetch implementation is injectable so tests run against a recorded stub.
 */

import type {
  ExampleData,
  ExampleView,
  MessageData,
  PlanResponse,
  ResponseData,
  ResultData,
  SessionView,
  UiSpecResponse,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }

  get isConflict(): boolean {
    return this.status === 409;
  }
}

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchFn: FetchLike = (url, init) => globalThis.fetch(url, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { "Content-Type": "application/json" } };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchFn(this.baseUrl + path, init);
    if (!response.ok) {
      let code = "http_error";
      let message = `HTTP ${response.status}`;
      try {
        const payload = (await response.json()) as { code?: string; message?: string };
        code = payload.code ?? code;
        message = payload.message ?? message;
      } catch {
        // non-JSON error body; keep defaults
      }
      throw new ApiError(response.status, code, message);
    }
    return (await response.json()) as T;
  }

  getTask(taskId: string): Promise<SessionView> {
    return this.request("GET", `/tasks/${taskId}`);
  }

  getProtocolLog(taskId: string): Promise<{ next_seq: number; stage: string; log: unknown[] }> {
    return this.request("GET", `/tasks/${taskId}/protocol/messages`);
  }

  postMessage(taskId: string, message: MessageData, response: ResponseData): Promise<SessionView> {
    return this.request("POST", `/tasks/${taskId}/protocol/messages`, { message, response });
  }

  getPlan(taskId: string): Promise<PlanResponse> {
    return this.request("GET", `/tasks/${taskId}/plan`);
  }

  approvePlan(taskId: string, planHash: string): Promise<SessionView> {
    return this.request("POST", `/tasks/${taskId}/plan/approve`, { plan_hash: planHash });
  }

  getUiSpec(taskId: string): Promise<UiSpecResponse> {
    return this.request("GET", `/tasks/${taskId}/ui-spec`);
  }

  getExamples(taskId: string): Promise<{ examples: ExampleData[] }> {
    return this.request("GET", `/tasks/${taskId}/examples`);
  }

  getExampleView(exampleId: string): Promise<ExampleView> {
    return this.request("GET", `/examples/${exampleId}`);
  }

  getResults(taskId: string): Promise<{ results: ResultData[] }> {
    return this.request("GET", `/tasks/${taskId}/results`);
  }

  postLabel(
    exampleId: string,
    body: { channel_id: string; kind: string; payload: Record<string, unknown>; labeler?: string },
  ): Promise<{ label_id: string }> {
    return this.request("POST", `/examples/${exampleId}/labels`, body);
  }

  /** URL for binary content; used directly as an <img> source. */
  blobUrl(ref: string, mediaType: string): string {
    return `${this.baseUrl}/blobs/${ref}?media_type=${encodeURIComponent(mediaType)}`;
  }
}
