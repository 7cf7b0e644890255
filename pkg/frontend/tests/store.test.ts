import { describe, expect, it } from "vitest";

import type { Snapshot } from "../src/protocol.js";
import { HISTORY_LIMIT, SessionStore, TOAST_LIMIT } from "../src/store.js";

function snapshot(tick: number, extra: Partial<Snapshot> = {}): Snapshot {
  return {
    tick,
    mode: "autonomous",
    mood_valence: 0,
    mood_arousal: 0,
    emotion: "neutral",
    emotion_intensity: 0,
    engagement: 0.4,
    drives: { social_contact: 0.5 },
    scenario_id: "turn_taking",
    scenario_state: "robot_turn",
    counters: { correct_responses: 0 },
    goal_reached: false,
    difficulty: 0,
    expected_token: "red",
    behavior_tag: null,
    provenance: {},
    approval_queue: [],
    ...extra,
  };
}

describe("snapshot history ring", () => {
  it("holds exactly the last 600 snapshots", () => {
    const store = new SessionStore();
    for (let t = 0; t < 700; t++) store.applySnapshot(snapshot(t));
    expect(store.view.history.length).toBe(HISTORY_LIMIT);
    expect(store.view.history[0]!.tick).toBe(100);
    expect(store.view.history.at(-1)!.tick).toBe(699);
    expect(store.view.latest!.tick).toBe(699);
  });

  it("never lets the rendered tick decrease", () => {
    const store = new SessionStore();
    store.applySnapshot(snapshot(10));
    store.applySnapshot(snapshot(5));
    expect(store.view.latest!.tick).toBe(10);
    expect(store.view.history.length).toBe(1);
    store.applySnapshot(snapshot(10, { engagement: 0.9 }));
    expect(store.view.latest!.engagement).toBe(0.4);
  });

  it("mirrors the approval queue of the last snapshot exactly", () => {
    const store = new SessionStore();
    const queue = [{ id: "q1", tag: "prompt_turn" }];
    store.applySnapshot(snapshot(1, { approval_queue: queue }));
    expect(store.view.latest!.approval_queue).toBe(queue);
    store.applySnapshot(snapshot(2, { approval_queue: [] }));
    expect(store.view.latest!.approval_queue).toEqual([]);
  });
});

describe("toasts", () => {
  it("appends and dismisses", () => {
    const store = new SessionStore();
    const toast = store.pushToast("success", "paused");
    expect(store.view.toasts.map((t) => t.text)).toEqual(["paused"]);
    store.dismissToast(toast.id);
    expect(store.view.toasts).toEqual([]);
  });

  it("keeps only the most recent toasts", () => {
    const store = new SessionStore();
    for (let i = 0; i < TOAST_LIMIT + 3; i++) store.pushToast("info", `t${i}`);
    expect(store.view.toasts.length).toBe(TOAST_LIMIT);
    expect(store.view.toasts[0]!.text).toBe("t3");
  });
});

describe("subscriptions", () => {
  it("notifies on every applied change and supports unsubscribe", () => {
    const store = new SessionStore();
    let calls = 0;
    const unsubscribe = store.subscribe(() => calls++);
    store.setConnection("connected");
    store.applySnapshot(snapshot(0));
    store.applySnapshot(snapshot(0)); // dropped: no notification
    expect(calls).toBe(2);
    unsubscribe();
    store.setConnection("disconnected");
    expect(calls).toBe(2);
  });
});
