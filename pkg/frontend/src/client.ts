/**
 * SessionSocket: one realtime connection per tab, with automatic
 * reconnection on exponential backoff.
 *
 * The server replays full session state (state_sync) on every join, so
 * reconnecting is just reopening the socket; no client-side resume
 * bookkeeping is needed. The WebSocket constructor and timer are
 * injectable so tests can drive the state machine deterministically.
 */

import { ClientFrame, ServerFrame, parseServerFrame } from "./protocol.js";

export type ConnectionState = "connecting" | "open" | "reconnecting" | "closed";

/** The subset of the WebSocket API the client relies on. */
export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
}

export interface SessionSocketOptions {
  url: string;
  onFrame: (frame: ServerFrame) => void;
  onState?: (state: ConnectionState) => void;
  makeSocket?: (url: string) => SocketLike;
  schedule?: (fn: () => void, delayMs: number) => void;
  baseDelayMs?: number;
  maxDelayMs?: number;
}

const DEFAULT_BASE_DELAY_MS = 250;
const DEFAULT_MAX_DELAY_MS = 8000;

export class SessionSocket {
  private readonly url: string;
  private readonly onFrame: (frame: ServerFrame) => void;
  private readonly onState: (state: ConnectionState) => void;
  private readonly makeSocket: (url: string) => SocketLike;
  private readonly schedule: (fn: () => void, delayMs: number) => void;
  private readonly baseDelayMs: number;
  private readonly maxDelayMs: number;

  private socket: SocketLike | null = null;
  private attempts = 0;
  private stopped = false;
  private connState: ConnectionState = "closed";

  constructor(options: SessionSocketOptions) {
    this.url = options.url;
    this.onFrame = options.onFrame;
    this.onState = options.onState ?? (() => {});
    this.makeSocket =
      options.makeSocket ?? ((url) => new WebSocket(url) as unknown as SocketLike);
    this.schedule = options.schedule ?? ((fn, ms) => setTimeout(fn, ms));
    this.baseDelayMs = options.baseDelayMs ?? DEFAULT_BASE_DELAY_MS;
    this.maxDelayMs = options.maxDelayMs ?? DEFAULT_MAX_DELAY_MS;
  }

  get state(): ConnectionState {
    return this.connState;
  }

  connect(): void {
    if (this.stopped) return;
    this.setState(this.attempts === 0 ? "connecting" : "reconnecting");
    const socket = this.makeSocket(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.attempts = 0;
      this.setState("open");
    };
    socket.onmessage = (event) => {
      const frame = parseServerFrame(String(event.data));
      if (frame) this.onFrame(frame);
    };
    socket.onerror = () => {
      // the close handler owns retry scheduling
    };
    socket.onclose = () => {
      this.socket = null;
      if (this.stopped) {
        this.setState("closed");
        return;
      }
      const delay = Math.min(
        this.baseDelayMs * 2 ** this.attempts,
        this.maxDelayMs,
      );
      this.attempts += 1;
      this.setState("reconnecting");
      this.schedule(() => this.connect(), delay);
    };
  }

  /** Send one client frame; silently dropped while disconnected. */
  send(frame: ClientFrame): boolean {
    if (this.connState !== "open" || this.socket === null) return false;
    this.socket.send(JSON.stringify(frame));
    return true;
  }

  close(): void {
    this.stopped = true;
    if (this.socket) this.socket.close();
    this.setState("closed");
  }

  private setState(state: ConnectionState): void {
    if (state === this.connState) return;
    this.connState = state;
    this.onState(state);
  }
}
