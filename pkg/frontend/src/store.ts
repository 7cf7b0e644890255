/**
 * Session view state.
 *
 * The server is the single source of truth: the store keeps only what
 * arrived on the wire (hello, snapshots, acks) plus connection status and
 * toasts. The approval queue is always read straight off the latest
 * snapshot, never copied, so the view cannot drift from the controller.
 */

import type { Hello, Snapshot } from "./protocol.js";

export const HISTORY_LIMIT = 600;
export const TOAST_LIMIT = 5;

export type ConnectionState = "connecting" | "connected" | "disconnected";

export interface Toast {
  id: number;
  kind: "success" | "error" | "info";
  text: string;
  retry?: () => void;
}

export interface SessionView {
  connection: ConnectionState;
  hello: Hello | null;
  latest: Snapshot | null;
  history: Snapshot[];
  toasts: Toast[];
}

export class SessionStore {
  private listeners = new Set<(view: SessionView) => void>();
  private toastSeq = 0;

  view: SessionView = {
    connection: "connecting",
    hello: null,
    latest: null,
    history: [],
    toasts: [],
  };

  subscribe(listener: (view: SessionView) => void): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener(this.view);
  }

  setConnection(state: ConnectionState): void {
    this.view = { ...this.view, connection: state };
    this.emit();
  }

  applyHello(hello: Hello): void {
    this.view = { ...this.view, hello };
    this.emit();
  }

  /** Stale or duplicate ticks are dropped: the rendered tick never decreases. */
  applySnapshot(snapshot: Snapshot): void {
    const latest = this.view.latest;
    if (latest !== null && snapshot.tick <= latest.tick) return;
    const history = [...this.view.history, snapshot];
    if (history.length > HISTORY_LIMIT) history.splice(0, history.length - HISTORY_LIMIT);
    this.view = { ...this.view, latest: snapshot, history };
    this.emit();
  }

  pushToast(kind: Toast["kind"], text: string, retry?: () => void): Toast {
    const toast: Toast = { id: ++this.toastSeq, kind, text, retry };
    const toasts = [...this.view.toasts, toast];
    if (toasts.length > TOAST_LIMIT) toasts.splice(0, toasts.length - TOAST_LIMIT);
    this.view = { ...this.view, toasts };
    this.emit();
    return toast;
  }

  dismissToast(id: number): void {
    this.view = { ...this.view, toasts: this.view.toasts.filter((t) => t.id !== id) };
    this.emit();
  }
}
