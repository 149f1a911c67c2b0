import { REJECT, type SessionView } from "./types.js";

/** Keyboard bindings; digits 1..k always select preselected labels. */
export interface Keymap {
  expand: string;
  reject: string;
  entityTypes: string;
  next: string;
  prev: string;
  glossary: string;
}

export const defaultKeymap: Keymap = {
  expand: "e",
  reject: "r",
  entityTypes: "t",
  next: "n",
  prev: "p",
  glossary: "g",
};

export type Action =
  | { kind: "submit"; label: string }
  | { kind: "expand" }
  | { kind: "entityTypes" }
  | { kind: "next" }
  | { kind: "prev" }
  | { kind: "glossary" }
  | { kind: "ignored"; hint: string };

/** Map a key press onto a service call or local navigation for the current view. */
export function resolveKey(key: string, view: SessionView, keymap: Keymap = defaultKeymap): Action {
  if (key === keymap.glossary) return { kind: "glossary" };
  if (view.done) {
    return { kind: "ignored", hint: "session complete" };
  }
  if (/^[1-9]$/.test(key)) {
    const offered = view.preselected ?? [];
    const index = Number(key) - 1;
    if (index >= offered.length) {
      return { kind: "ignored", hint: `no label ${key}; ${offered.length} offered` };
    }
    return { kind: "submit", label: offered[index] };
  }
  switch (key) {
    case keymap.reject:
      return { kind: "submit", label: REJECT };
    case keymap.expand:
      if (view.all_revealed) {
        return { kind: "ignored", hint: "all tokens revealed" };
      }
      return { kind: "expand" };
    case keymap.entityTypes:
      return { kind: "entityTypes" };
    case keymap.next:
      return { kind: "next" };
    case keymap.prev:
      return { kind: "prev" };
    default:
      return { kind: "ignored", hint: `key "${key}" not bound` };
  }
}
