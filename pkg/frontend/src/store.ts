/**
 * Client-side session view: a reducer over incoming server frames.
 *
 * The view renders only what arrives on the wire. There is no grading,
 * planning, or text generation in the browser; every judgement shown
 * comes from a frame, in arrival order.
 */

import {
  Accuracy,
  ChatEntry,
  Recommendation,
  Role,
  ServerFrame,
  StepRow,
} from "./protocol.js";
import { ConnectionState } from "./client.js";

export interface ClientSessionView {
  role: Role;
  question: string | null;
  problemIndex: number;
  problemTotal: number;
  stepHistory: StepRow[];
  chat: ChatEntry[];
  nextSteps: string[];
  recommendations: Recommendation[];
  recommendationsBy: "llm" | "fallback" | null;
  /** Highest server seq seen on a student-driven frame. */
  lastStudentEventSeq: number;
  /** Server seq of the recommendations currently shown, if any. */
  recommendationsSeq: number | null;
  hint: { level: number; text: string } | null;
  lastAccuracy: Accuracy | "none";
  lastError: string | null;
  completed: boolean;
  connection: ConnectionState;
}

export function initialView(role: Role): ClientSessionView {
  return {
    role,
    question: null,
    problemIndex: 0,
    problemTotal: 1,
    stepHistory: [],
    chat: [],
    nextSteps: [],
    recommendations: [],
    recommendationsBy: null,
    lastStudentEventSeq: 0,
    recommendationsSeq: null,
    hint: null,
    lastAccuracy: "none",
    lastError: null,
    completed: false,
    connection: "closed",
  };
}

/**
 * Suggestions predating the latest student activity are stale: the
 * situation they were written for may have moved on.
 */
export function recommendationsStale(view: ClientSessionView): boolean {
  return (
    view.recommendationsSeq !== null &&
    view.lastStudentEventSeq > view.recommendationsSeq
  );
}

export class SessionStore {
  view: ClientSessionView;
  private listeners: Array<(view: ClientSessionView) => void> = [];

  constructor(role: Role) {
    this.view = initialView(role);
  }

  subscribe(listener: (view: ClientSessionView) => void): void {
    this.listeners.push(listener);
  }

  setConnection(state: ConnectionState): void {
    this.view.connection = state;
    this.emit();
  }

  apply(frame: ServerFrame): void {
    const view = this.view;
    switch (frame.type) {
      case "state_sync": {
        const p = frame.payload;
        view.question = p.question;
        view.problemIndex = p.index;
        view.problemTotal = p.total;
        view.stepHistory = [...p.steps];
        view.chat = [...p.chat];
        view.lastAccuracy = p.last_accuracy;
        view.completed = p.completed;
        break;
      }
      case "attempt_result": {
        view.stepHistory.push({
          text: frame.payload.text,
          accuracy: frame.payload.accuracy,
          feedback: frame.payload.feedback,
        });
        view.lastAccuracy = frame.payload.accuracy;
        view.lastStudentEventSeq = frame.seq;
        if (frame.payload.accuracy === "correct") view.hint = null;
        break;
      }
      case "hint": {
        view.hint = { level: frame.payload.level, text: frame.payload.text };
        view.lastStudentEventSeq = frame.seq;
        break;
      }
      case "chat": {
        view.chat.push(frame.payload);
        if (frame.payload.role === "student") {
          view.lastStudentEventSeq = frame.seq;
        }
        break;
      }
      case "next_steps": {
        view.nextSteps = [...frame.payload.steps];
        break;
      }
      case "recommendations": {
        view.recommendations = [...frame.payload.items];
        view.recommendationsBy = frame.payload.generated_by;
        view.recommendationsSeq = frame.seq;
        break;
      }
      case "problem_advanced": {
        view.question = frame.payload.new_question;
        view.problemIndex = frame.payload.index;
        view.nextSteps = [];
        view.hint = null;
        view.completed = frame.payload.new_question === null;
        view.lastStudentEventSeq = frame.seq;
        break;
      }
      case "error": {
        view.lastError = `${frame.payload.code}: ${frame.payload.detail}`;
        break;
      }
    }
    this.emit();
  }

  private emit(): void {
    for (const listener of this.listeners) listener(this.view);
  }
}
