/**
 * DOM rendering for the two role views.
 *
 * Rendering is wholesale: each state change rebuilds the view from
 * ClientSessionView plus a small scratch object holding in-progress
 * input text (so rebuilding never eats what the user is typing).
 * Element ids are part of the testing surface; keep them stable.
 */

import { ClientSessionView, recommendationsStale } from "./store.js";

export interface ViewActions {
  submitAttempt(text: string): void;
  requestHint(): void;
  sendChat(text: string): void;
  rerender(): void;
}

/** In-progress input text, owned by the caller so it survives renders. */
export interface Scratch {
  attempt: string;
  compose: string;
  chat: string;
}

export function emptyScratch(): Scratch {
  return { attempt: "", compose: "", chat: "" };
}

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  attrs: Record<string, string> = {},
  children: Array<Node | string> = [],
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  for (const child of children) {
    node.append(child);
  }
  return node;
}

function header(doc: Document, view: ClientSessionView): HTMLElement {
  const badge = el(
    doc,
    "span",
    { id: "connection", class: `conn ${view.connection}` },
    [view.connection],
  );
  const progress = el(doc, "span", { class: "progress" }, [
    `problem ${view.problemIndex + 1} of ${view.problemTotal}`,
  ]);
  return el(doc, "header", {}, [progress, badge]);
}

function questionBlock(doc: Document, view: ClientSessionView): HTMLElement {
  if (view.completed) {
    return el(doc, "h2", { id: "question", class: "done" }, [
      "All problems solved. Nice work!",
    ]);
  }
  return el(doc, "h2", { id: "question" }, [view.question ?? ""]);
}

function stepsList(doc: Document, view: ClientSessionView): HTMLElement {
  const list = el(doc, "ol", { id: "steps" });
  for (const step of view.stepHistory) {
    const item = el(doc, "li", { class: `step ${step.accuracy}` }, [
      el(doc, "span", { class: "step-text" }, [step.text]),
      el(doc, "span", { class: "feedback" }, [step.feedback]),
    ]);
    list.append(item);
  }
  return list;
}

function chatPanel(
  doc: Document,
  view: ClientSessionView,
  scratch: Scratch,
  actions: ViewActions,
): HTMLElement {
  const log = el(doc, "ul", { id: "chat-log" });
  for (const entry of view.chat) {
    log.append(
      el(doc, "li", { class: `msg ${entry.role}` }, [
        el(doc, "span", { class: "who" }, [entry.role]),
        el(doc, "span", { class: "text" }, [entry.text]),
      ]),
    );
  }
  const input = el(doc, "input", {
    id: "chat-input",
    type: "text",
    placeholder: "message",
  });
  input.value = scratch.chat;
  input.addEventListener("input", () => {
    scratch.chat = input.value;
  });
  const send = el(doc, "button", { id: "chat-send" }, ["Send"]);
  send.addEventListener("click", () => {
    const text = scratch.chat.trim();
    if (!text) return;
    scratch.chat = "";
    actions.sendChat(text);
    actions.rerender();
  });
  return el(doc, "section", { id: "chat", class: "chat" }, [log, input, send]);
}

function errorBanner(doc: Document, view: ClientSessionView): HTMLElement | null {
  if (!view.lastError) return null;
  return el(doc, "div", { id: "error-banner", class: "error-banner" }, [
    view.lastError,
  ]);
}

export function renderStudent(
  root: HTMLElement,
  view: ClientSessionView,
  scratch: Scratch,
  actions: ViewActions,
): void {
  const doc = root.ownerDocument;
  const input = el(doc, "input", {
    id: "attempt-input",
    type: "text",
    placeholder: "write the next line of your solution",
  });
  input.value = scratch.attempt;
  input.addEventListener("input", () => {
    scratch.attempt = input.value;
  });
  const submit = el(doc, "button", { id: "attempt-send" }, ["Check step"]);
  submit.addEventListener("click", () => {
    const text = scratch.attempt.trim();
    if (!text) return;
    scratch.attempt = "";
    actions.submitAttempt(text);
    actions.rerender();
  });
  const hintButton = el(doc, "button", { id: "hint-btn" }, ["Hint"]);
  hintButton.addEventListener("click", () => actions.requestHint());
  const hintText = el(doc, "p", { id: "hint-text", class: "hint" }, [
    view.hint ? view.hint.text : "",
  ]);

  const children: Array<Node> = [
    header(doc, view),
    questionBlock(doc, view),
    stepsList(doc, view),
  ];
  const banner = errorBanner(doc, view);
  if (banner) children.push(banner);
  if (!view.completed) {
    children.push(
      el(doc, "div", { class: "attempt-row" }, [input, submit, hintButton]),
      hintText,
    );
  }
  children.push(chatPanel(doc, view, scratch, actions));
  root.replaceChildren(...children);
}

export function renderCaregiver(
  root: HTMLElement,
  view: ClientSessionView,
  scratch: Scratch,
  actions: ViewActions,
): void {
  const doc = root.ownerDocument;

  const nextStepsSelect = el(doc, "select", { id: "next-steps" });
  nextStepsSelect.append(
    el(doc, "option", { value: "" }, [
      view.nextSteps.length
        ? "Next steps the tutor would take"
        : "No next steps yet",
    ]),
  );
  view.nextSteps.forEach((step, i) => {
    nextStepsSelect.append(el(doc, "option", { value: String(i) }, [step]));
  });

  const recsLabel =
    view.recommendationsBy === "fallback"
      ? "Standard suggestions"
      : "Suggested messages";
  const recsSelect = el(doc, "select", { id: "recommendations" });
  recsSelect.append(
    el(doc, "option", { value: "" }, [
      view.recommendations.length ? recsLabel : "No suggestions yet",
    ]),
  );
  view.recommendations.forEach((rec, i) => {
    recsSelect.append(
      el(doc, "option", { value: String(i) }, [`[${rec.tag}] ${rec.body}`]),
    );
  });
  recsSelect.addEventListener("change", () => {
    const index = Number(recsSelect.value);
    const rec = view.recommendations[index];
    if (rec) {
      scratch.compose = rec.body;
      actions.rerender();
    }
  });

  const staleBadge = recommendationsStale(view)
    ? el(doc, "span", { id: "stale-badge", class: "stale" }, [
        "written before the latest step",
      ])
    : null;

  const compose = el(doc, "textarea", {
    id: "compose",
    placeholder: "pick a suggestion or write your own",
  });
  compose.value = scratch.compose;
  compose.addEventListener("input", () => {
    scratch.compose = compose.value;
  });
  const composeSend = el(doc, "button", { id: "compose-send" }, ["Send to student"]);
  composeSend.addEventListener("click", () => {
    const text = scratch.compose.trim();
    if (!text) return;
    scratch.compose = "";
    actions.sendChat(text);
    actions.rerender();
  });

  const supportChildren: Array<Node> = [
    el(doc, "label", { for: "next-steps" }, ["Where the solution goes next"]),
    nextStepsSelect,
    el(doc, "label", { for: "recommendations" }, [recsLabel]),
    recsSelect,
  ];
  if (staleBadge) supportChildren.push(staleBadge);
  supportChildren.push(compose, composeSend);

  const children: Array<Node> = [
    header(doc, view),
    questionBlock(doc, view),
    stepsList(doc, view),
  ];
  const banner = errorBanner(doc, view);
  if (banner) children.push(banner);
  children.push(
    el(doc, "section", { id: "support", class: "support" }, supportChildren),
    chatPanel(doc, view, scratch, actions),
  );
  root.replaceChildren(...children);
}
