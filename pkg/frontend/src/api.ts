import type { AnnotationRecord, ServiceError, SessionView, SubmitResponse } from "./types.js";

/** The service answered with a structured error: the action was acknowledged and rejected. */
export class ServiceRejection extends Error {
  constructor(
    public readonly code: string,
    message: string,
    public readonly status: number,
  ) {
    super(message);
  }
}

/** The service could not be reached; the action was NOT acknowledged. */
export class ServiceUnreachable extends Error {}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ServiceClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => globalThis.fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, {
        method,
        headers: body === undefined ? undefined : { "Content-Type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new ServiceUnreachable(String(err));
    }
    let payload: unknown;
    try {
      payload = await response.json();
    } catch {
      throw new ServiceUnreachable(`non-JSON response (${response.status})`);
    }
    if (!response.ok) {
      const error = payload as ServiceError;
      throw new ServiceRejection(error.code ?? "unknown", error.message ?? "unknown error", response.status);
    }
    return payload as T;
  }

  createSession(annotatorId: string, sampleIds: string[], k?: number): Promise<SessionView> {
    return this.request<SessionView>("POST", "/sessions", {
      annotator_id: annotatorId,
      sample_ids: sampleIds,
      ...(k === undefined ? {} : { k }),
    });
  }

  view(sessionId: string): Promise<SessionView> {
    return this.request<SessionView>("GET", `/sessions/${sessionId}/view`);
  }

  expand(sessionId: string): Promise<SessionView> {
    return this.request<SessionView>("POST", `/sessions/${sessionId}/expand`);
  }

  revealEntityTypes(sessionId: string): Promise<SessionView> {
    return this.request<SessionView>("POST", `/sessions/${sessionId}/entity-types`);
  }

  submit(sessionId: string, label: string): Promise<SubmitResponse> {
    return this.request<SubmitResponse>("POST", `/sessions/${sessionId}/submit`, { label });
  }

  exportAnnotations(annotatorId?: string): Promise<{ records: AnnotationRecord[] }> {
    const query = annotatorId ? `?annotator=${encodeURIComponent(annotatorId)}` : "";
    return this.request<{ records: AnnotationRecord[] }>("GET", `/annotations/export${query}`);
  }
}

interface QueuedAction<T> {
  run: () => Promise<T>;
  resolve: (value: T) => void;
  reject: (err: unknown) => void;
}

const sleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

/**
 * Serializes service calls: at most one in flight, later actions wait.
 *
 * An unreachable service keeps the head action queued and retries it; once a
 * call is acknowledged (success or rejection) it leaves the queue and is
 * never replayed.
 */
export class ActionQueue {
  private queue: Array<QueuedAction<unknown>> = [];
  private pumping = false;

  constructor(
    private readonly retryDelayMs = 500,
    private readonly maxRetries = Infinity,
    private readonly delay: (ms: number) => Promise<void> = sleep,
  ) {}

  get pending(): number {
    return this.queue.length;
  }

  push<T>(run: () => Promise<T>): Promise<T> {
    return new Promise<T>((resolve, reject) => {
      this.queue.push({ run, resolve, reject } as QueuedAction<unknown>);
      void this.pump();
    });
  }

  private async pump(): Promise<void> {
    if (this.pumping) return;
    this.pumping = true;
    try {
      while (this.queue.length > 0) {
        const head = this.queue[0];
        let retries = 0;
        for (;;) {
          try {
            const result = await head.run();
            this.queue.shift();
            head.resolve(result);
            break;
          } catch (err) {
            if (err instanceof ServiceUnreachable && retries < this.maxRetries) {
              retries += 1;
              await this.delay(this.retryDelayMs);
              continue; // same unsent action, try again
            }
            this.queue.shift();
            head.reject(err);
            break;
          }
        }
      }
    } finally {
      this.pumping = false;
    }
  }
}
