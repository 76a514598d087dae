/**
 * Entry point: read the join parameters from the URL, open the session
 * channel, and keep the role view rendered.
 */

import { SessionSocket } from "./client.js";
import { Role } from "./protocol.js";
import { SessionStore } from "./store.js";
import { Scratch, emptyScratch, renderCaregiver, renderStudent } from "./views.js";

function wsUrl(sessionId: string, role: string, token: string): string {
  const scheme = location.protocol === "https:" ? "wss" : "ws";
  return `${scheme}://${location.host}/ws/${sessionId}?role=${role}&token=${encodeURIComponent(token)}`;
}

export function boot(root: HTMLElement): void {
  const params = new URLSearchParams(location.search);
  const sessionId = params.get("session");
  const role = params.get("role") as Role | null;
  const token = params.get("token");
  if (!sessionId || !token || (role !== "student" && role !== "caregiver")) {
    root.textContent =
      "This page needs a join link with session, role, and token parameters.";
    return;
  }

  const store = new SessionStore(role);
  const scratch: Scratch = emptyScratch();
  const render =
    role === "student"
      ? () => renderStudent(root, store.view, scratch, actions)
      : () => renderCaregiver(root, store.view, scratch, actions);

  const socket = new SessionSocket({
    url: wsUrl(sessionId, role, token),
    onFrame: (frame) => store.apply(frame),
    onState: (state) => store.setConnection(state),
  });

  const actions = {
    submitAttempt: (text: string) => socket.send({ type: "attempt", payload: { text } }),
    requestHint: () => socket.send({ type: "hint_request", payload: {} }),
    sendChat: (text: string) => socket.send({ type: "chat", payload: { text } }),
    rerender: () => render(),
  };

  store.subscribe(() => render());
  render();
  socket.connect();
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  boot(document.getElementById("app") as HTMLElement);
}
