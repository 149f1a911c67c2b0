import type { SessionView, TokenView, ViewState } from "./types.js";

/** Uniform glyph for hidden tokens: preserves the count, never the length. */
export const PLACEHOLDER = "██";

export class MalformedView extends Error {}

/** Reject views that would leak or drop tokens before anything is rendered. */
export function validateView(view: SessionView): void {
  if (view.done) return;
  if (!view.sample_id || !Array.isArray(view.tokens) || !Array.isArray(view.preselected)) {
    throw new MalformedView("view is missing sample fields");
  }
  for (const token of view.tokens) {
    if (token.revealed && token.text === null) {
      throw new MalformedView(`revealed token ${token.index} has no text`);
    }
    if (!token.revealed && token.text !== null) {
      throw new MalformedView(`hidden token ${token.index} carries text`);
    }
  }
}

function el(tag: string, className?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function tokenSpan(token: TokenView): HTMLElement {
  const classes = ["token", token.revealed ? "revealed" : "hidden"];
  if (token.argument) classes.push("argument");
  const span = el("span", classes.join(" "), token.revealed ? (token.text ?? "") : PLACEHOLDER);
  span.dataset.index = String(token.index);
  return span;
}

const GLOSSARY_LINES: Array<[string, string]> = [
  ["1..9", "choose the corresponding offered label"],
  ["e", "reveal the next token"],
  ["r", "reject this sample"],
  ["t", "show argument entity types"],
  ["n / p", "refresh view / recall previous decision"],
  ["g", "toggle this panel"],
];

/**
 * Render the full screen state for one view.
 *
 * Only revealed tokens become readable; hidden tokens render as uniform
 * placeholders; arguments are highlighted; offered labels carry their hotkey
 * digit.  A malformed view raises before the DOM is touched, so callers can
 * keep the previous screen and show a banner instead.
 */
export function renderView(root: HTMLElement, state: ViewState): void {
  validateView(state.view);
  const view = state.view;
  root.textContent = "";

  const header = el("header", "status");
  header.appendChild(el("span", "annotator", view.annotator_id));
  header.appendChild(el("span", "progress", `${view.progress.done} / ${view.progress.total}`));
  root.appendChild(header);

  if (view.done) {
    root.appendChild(el("section", "done", "Session complete."));
  } else {
    const sentence = el("div", "sentence");
    for (const token of view.tokens ?? []) {
      sentence.appendChild(tokenSpan(token));
    }
    root.appendChild(sentence);

    if (view.entity_types) {
      const types = el("div", "entity-types");
      types.appendChild(
        el("span", "arg1-type", `arg1: ${view.entity_types.arg1.type}/${view.entity_types.arg1.subtype ?? "-"}`),
      );
      types.appendChild(
        el("span", "arg2-type", `arg2: ${view.entity_types.arg2.type}/${view.entity_types.arg2.subtype ?? "-"}`),
      );
      root.appendChild(types);
    }

    const labels = el("ol", "labels");
    (view.preselected ?? []).forEach((label, i) => {
      const item = el("li", label === state.selectedLabel ? "label selected" : "label");
      item.appendChild(el("kbd", undefined, String(i + 1)));
      item.appendChild(el("span", undefined, label));
      labels.appendChild(item);
    });
    root.appendChild(labels);

    if (view.all_revealed) {
      root.appendChild(el("div", "all-revealed", "all tokens revealed"));
    }
  }

  if (state.hint) {
    root.appendChild(el("div", "hint", state.hint));
  }
  if (state.glossaryOpen) {
    const panel = el("aside", "glossary");
    for (const [keys, what] of GLOSSARY_LINES) {
      const row = el("div", "glossary-row");
      row.appendChild(el("kbd", undefined, keys));
      row.appendChild(el("span", undefined, what));
      panel.appendChild(row);
    }
    root.appendChild(panel);
  }
}

/** Error banner that leaves the current screen in place. */
export function renderError(root: HTMLElement, message: string): void {
  let banner = root.querySelector<HTMLElement>(".error-banner");
  if (!banner) {
    banner = el("div", "error-banner");
    root.prepend(banner);
  }
  banner.textContent = message;
}
