import { ActionQueue, ServiceClient, ServiceRejection } from "./api.js";
import { defaultKeymap, resolveKey, type Action, type Keymap } from "./keymap.js";
import { MalformedView, renderError, renderView } from "./render.js";
import type { AnnotationRecord, SessionView, ViewState } from "./types.js";

export interface SessionSummary {
  total: number;
  bySemanticClass: Record<string, number>;
  byLabel: Record<string, number>;
}

export interface ControllerOptions {
  root?: HTMLElement | null;
  keymap?: Keymap;
  queue?: ActionQueue;
}

/**
 * Drives one annotation session over the wire protocol.
 *
 * The server owns all session state; the controller only holds the latest
 * view (so reloads can resume from a bare session id) plus records it has
 * seen acknowledged, used for the previous-decision hint.
 */
export class SessionController {
  readonly keymap: Keymap;
  state: ViewState | null = null;
  acked: AnnotationRecord[] = [];

  private readonly root: HTMLElement | null;
  private readonly queue: ActionQueue;

  constructor(
    private readonly client: ServiceClient,
    options: ControllerOptions = {},
  ) {
    this.root = options.root ?? null;
    this.keymap = options.keymap ?? defaultKeymap;
    this.queue = options.queue ?? new ActionQueue();
  }

  get sessionId(): string {
    if (!this.state) throw new Error("no active session");
    return this.state.view.session_id;
  }

  async start(annotatorId: string, sampleIds: string[], k?: number): Promise<SessionView> {
    const view = await this.queue.push(() => this.client.createSession(annotatorId, sampleIds, k));
    this.apply(view);
    return view;
  }

  /** Rebuild purely from the server: used on page reload. */
  async resume(sessionId: string): Promise<SessionView> {
    const view = await this.queue.push(() => this.client.view(sessionId));
    this.apply(view);
    return view;
  }

  /** Handle one key press; returns the resolved action for callers/tests. */
  async handleKey(key: string): Promise<Action> {
    if (!this.state) throw new Error("no active session");
    const action = resolveKey(key, this.state.view, this.keymap);
    switch (action.kind) {
      case "ignored":
        this.update({ hint: action.hint });
        break;
      case "glossary":
        this.update({ glossaryOpen: !this.state.glossaryOpen });
        break;
      case "prev": {
        const last = this.acked[this.acked.length - 1];
        this.update({
          hint: last ? `previous: ${last.sample_id} -> ${last.label} (${last.semantic_class})` : "nothing decided yet",
        });
        break;
      }
      case "next": {
        const view = await this.queue.push(() => this.client.view(this.sessionId));
        this.apply(view);
        break;
      }
      case "expand": {
        const view = await this.queue.push(() => this.client.expand(this.sessionId));
        this.apply(view);
        break;
      }
      case "entityTypes": {
        const view = await this.queue.push(() => this.client.revealEntityTypes(this.sessionId));
        this.apply(view);
        break;
      }
      case "submit": {
        try {
          const response = await this.queue.push(() => this.client.submit(this.sessionId, action.label));
          this.acked.push(response.record);
          this.apply(response.view, action.label);
        } catch (err) {
          if (err instanceof ServiceRejection) {
            this.update({ hint: `${err.code}: ${err.message}` });
          } else {
            throw err;
          }
        }
        break;
      }
    }
    return action;
  }

  /** Counts per semantic class and per label, from the server's export. */
  async summary(): Promise<SessionSummary> {
    if (!this.state) throw new Error("no active session");
    const annotator = this.state.view.annotator_id;
    const { records } = await this.queue.push(() => this.client.exportAnnotations(annotator));
    const bySemanticClass: Record<string, number> = {};
    const byLabel: Record<string, number> = {};
    for (const record of records) {
      bySemanticClass[record.semantic_class] = (bySemanticClass[record.semantic_class] ?? 0) + 1;
      byLabel[record.label] = (byLabel[record.label] ?? 0) + 1;
    }
    return { total: records.length, bySemanticClass, byLabel };
  }

  private apply(view: SessionView, selectedLabel: string | null = null): void {
    this.state = {
      view,
      selectedLabel,
      hint: null,
      glossaryOpen: this.state?.glossaryOpen ?? false,
    };
    this.render();
  }

  private update(patch: Partial<ViewState>): void {
    if (!this.state) return;
    this.state = { ...this.state, ...patch };
    this.render();
  }

  private render(): void {
    if (!this.root || !this.state) return;
    try {
      renderView(this.root, this.state);
    } catch (err) {
      if (err instanceof MalformedView) {
        renderError(this.root, `malformed view: ${err.message}`);
      } else {
        throw err;
      }
    }
  }
}
