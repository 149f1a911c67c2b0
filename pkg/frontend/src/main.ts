import { ActionQueue, ServiceClient } from "./api.js";
import { SessionController } from "./session.js";

/** Browser bootstrap: config form, keyboard listener, session lifecycle. */

function queryParam(name: string): string | null {
  return new URLSearchParams(window.location.search).get(name);
}

function setup(): void {
  const app = document.getElementById("app");
  const form = document.getElementById("config") as HTMLFormElement | null;
  if (!app || !form) return;

  const controller = { current: null as SessionController | null };

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const data = new FormData(form);
    const base = String(data.get("base") || "http://127.0.0.1:8765");
    const client = new ServiceClient(base);
    const session = new SessionController(client, { root: app, queue: new ActionQueue(1000) });
    controller.current = session;

    const resumeId = String(data.get("session") || "");
    if (resumeId) {
      void session.resume(resumeId);
      return;
    }
    const annotator = String(data.get("annotator") || "anonymous");
    const sampleIds = String(data.get("samples") || "")
      .split(/[\s,]+/)
      .filter(Boolean);
    void session.start(annotator, sampleIds);
  });

  // at most one in-flight call; the queue serializes rapid key presses
  document.addEventListener("keydown", (event) => {
    if (!controller.current) return;
    if (event.target instanceof HTMLInputElement || event.target instanceof HTMLTextAreaElement) return;
    void controller.current.handleKey(event.key).then(async () => {
      const state = controller.current?.state;
      if (state?.view.done) {
        const summary = await controller.current!.summary();
        const box = document.getElementById("summary");
        if (box) box.textContent = JSON.stringify(summary, null, 2);
      }
    });
  });

  const base = queryParam("base");
  if (base) {
    (form.elements.namedItem("base") as HTMLInputElement).value = base;
  }
}

if (typeof document !== "undefined") {
  if (document.readyState === "loading") {
    document.addEventListener("DOMContentLoaded", setup);
  } else {
    setup();
  }
}
