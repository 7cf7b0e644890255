/**
 * WebSocket client: dispatches inbound messages to the store, sends
 * commands with correlation ids, and surfaces acks as toasts. Commands
 * that receive no ack within the timeout produce a retriable error toast.
 * The socket is injectable so tests can drive the client without a network.
 */

import {
  buildCommand,
  parseServerMessage,
  ProtocolError,
  type CommandKind,
  type CommandPayload,
} from "./protocol.js";
import type { SessionStore } from "./store.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onmessage: ((event: { data: string }) => void) | null;
  onclose: (() => void) | null;
}

export interface ClientOptions {
  url: string;
  store: SessionStore;
  socketFactory?: (url: string) => SocketLike;
  ackTimeoutMs?: number;
  reconnectDelayMs?: number;
}

interface Pending {
  kind: CommandKind;
  payload: CommandPayload;
  timer: ReturnType<typeof setTimeout>;
}

const COMMAND_LABELS: Record<string, string> = {
  select_scenario: "scenario selected",
  start: "session started",
  pause: "paused",
  resume: "resumed",
  stop: "emergency stop",
  set_mode: "mode changed",
  approve: "behavior approved",
  deny: "behavior denied",
  override_behavior: "override sent",
  set_difficulty: "difficulty set",
};

export class SupervisionClient {
  private readonly url: string;
  private readonly store: SessionStore;
  private readonly socketFactory: (url: string) => SocketLike;
  private readonly ackTimeoutMs: number;
  private readonly reconnectDelayMs: number;
  private socket: SocketLike | null = null;
  private pending = new Map<string, Pending>();
  private seq = 0;
  private closed = false;

  constructor(options: ClientOptions) {
    this.url = options.url;
    this.store = options.store;
    this.socketFactory =
      options.socketFactory ?? ((url) => new WebSocket(url) as unknown as SocketLike);
    this.ackTimeoutMs = options.ackTimeoutMs ?? 2000;
    this.reconnectDelayMs = options.reconnectDelayMs ?? 1000;
  }

  connect(): void {
    this.store.setConnection("connecting");
    const socket = this.socketFactory(this.url);
    this.socket = socket;
    socket.onopen = () => this.store.setConnection("connected");
    socket.onmessage = (event) => this.handleMessage(event.data);
    socket.onclose = () => {
      this.store.setConnection("disconnected");
      this.socket = null;
      for (const pending of this.pending.values()) clearTimeout(pending.timer);
      this.pending.clear();
      if (!this.closed) {
        setTimeout(() => this.connect(), this.reconnectDelayMs);
      }
    };
  }

  close(): void {
    this.closed = true;
    this.socket?.close();
  }

  handleMessage(raw: string): void {
    let message;
    try {
      message = parseServerMessage(raw);
    } catch (err) {
      if (err instanceof ProtocolError) {
        this.store.pushToast("error", `protocol violation: ${err.message}`);
        return;
      }
      throw err;
    }
    switch (message.type) {
      case "hello":
        this.store.applyHello(message.payload);
        break;
      case "snapshot":
        this.store.applySnapshot(message.payload);
        break;
      case "ack": {
        const correlation = message.payload.correlation_id ?? null;
        if (correlation !== null) {
          const pending = this.pending.get(correlation);
          if (pending) {
            clearTimeout(pending.timer);
            this.pending.delete(correlation);
          }
        }
        const label = COMMAND_LABELS[message.payload.kind] ?? message.payload.kind;
        if (message.payload.accepted) {
          this.store.pushToast("success", label);
        } else {
          this.store.pushToast("error", `${message.payload.kind} rejected: ${message.payload.reason ?? "no reason"}`);
        }
        break;
      }
      case "error":
        this.store.pushToast("error", message.payload.message);
        break;
    }
  }

  /** Serialize and send one command; ack timeout produces a retriable toast. */
  send(kind: CommandKind, payload: CommandPayload = {}): void {
    const socket = this.socket;
    if (socket === null || this.store.view.connection !== "connected") {
      this.store.pushToast("error", `not connected; ${kind} not sent`, () => this.send(kind, payload));
      return;
    }
    const correlationId = `c${++this.seq}`;
    const timer = setTimeout(() => {
      this.pending.delete(correlationId);
      this.store.pushToast("error", `${kind}: no acknowledgment`, () => this.send(kind, payload));
    }, this.ackTimeoutMs);
    this.pending.set(correlationId, { kind, payload, timer });
    socket.send(buildCommand(kind, payload, correlationId));
  }
}
