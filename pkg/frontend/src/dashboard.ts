/**
 * Dashboard renderer.
 *
 * Pure function of the session view: every displayed value is read from
 * the latest snapshot or the hello message, nothing is derived or
 * simulated locally. The emergency stop control is rendered in the fixed
 * header on every screen, connected or not, so it is always one
 * interaction away.
 */

import type { CommandKind, CommandPayload, Snapshot } from "./protocol.js";
import { MODES } from "./protocol.js";
import type { SessionView } from "./store.js";

export type SendFn = (kind: CommandKind, payload?: CommandPayload) => void;

const RUN_MODES = ["autonomous", "approval", "wizard_of_oz"] as const;

export function renderDashboard(view: SessionView, root: HTMLElement, send: SendFn): void {
  root.textContent = "";
  root.appendChild(header(view, send));
  if (view.connection === "disconnected") {
    root.appendChild(banner("connection lost, retrying", "reconnect-banner"));
  }
  const main = el("main", view.connection === "disconnected" ? "panel stale" : "panel");
  if (view.latest === null) {
    main.appendChild(el("p", "empty", "waiting for the first snapshot"));
  } else {
    main.appendChild(affectSection(view.latest));
    main.appendChild(scenarioSection(view.latest));
    main.appendChild(behaviorSection(view.latest));
    main.appendChild(queueSection(view.latest, send));
  }
  main.appendChild(controlsSection(view, send));
  root.appendChild(main);
  root.appendChild(toastArea(view));
}

function el(tag: string, className?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function field(name: string, value: string, className = "field"): HTMLElement {
  const wrap = el("span", className);
  wrap.setAttribute("data-field", name);
  wrap.appendChild(el("label", "field-name", name.replace(/_/g, " ")));
  const valueNode = el("span", "field-value", value);
  valueNode.setAttribute("data-value", value);
  wrap.appendChild(valueNode);
  return wrap;
}

function banner(text: string, id: string): HTMLElement {
  const node = el("div", "banner", text);
  node.id = id;
  return node;
}

function header(view: SessionView, send: SendFn): HTMLElement {
  const bar = el("header", "topbar");
  bar.appendChild(el("h1", "title", "careloop console"));
  if (view.hello) {
    bar.appendChild(field("robot_id", view.hello.robot_id, "meta"));
    bar.appendChild(field("session_id", view.hello.session_id, "meta"));
  }
  bar.appendChild(field("connection", view.connection, "meta"));
  if (view.latest) {
    bar.appendChild(field("tick", String(view.latest.tick), "meta"));
    bar.appendChild(field("mode", view.latest.mode, `meta mode-${view.latest.mode}`));
  }
  const stop = el("button", "stop-button", "STOP") as HTMLButtonElement;
  stop.id = "stop-button";
  stop.setAttribute("aria-label", "emergency stop");
  stop.onclick = () => send("stop");
  bar.appendChild(stop);
  return bar;
}

function affectSection(snapshot: Snapshot): HTMLElement {
  const section = el("section", "affect");
  section.appendChild(el("h2", undefined, "affect"));

  const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("viewBox", "0 0 120 120");
  svg.setAttribute("class", "mood-disc");
  const disc = document.createElementNS("http://www.w3.org/2000/svg", "circle");
  disc.setAttribute("cx", "60");
  disc.setAttribute("cy", "60");
  disc.setAttribute("r", "50");
  disc.setAttribute("class", "disc");
  svg.appendChild(disc);
  const marker = document.createElementNS("http://www.w3.org/2000/svg", "circle");
  marker.setAttribute("id", "mood-marker");
  marker.setAttribute("cx", String(60 + snapshot.mood_valence * 50));
  marker.setAttribute("cy", String(60 - snapshot.mood_arousal * 50));
  marker.setAttribute("r", "4");
  svg.appendChild(marker);
  section.appendChild(svg);

  section.appendChild(field("mood_valence", snapshot.mood_valence.toFixed(3)));
  section.appendChild(field("mood_arousal", snapshot.mood_arousal.toFixed(3)));
  section.appendChild(field("emotion", snapshot.emotion));
  section.appendChild(field("emotion_intensity", snapshot.emotion_intensity.toFixed(3)));

  const gauge = el("div", "gauge");
  gauge.setAttribute("data-field", "engagement");
  const fill = el("div", "gauge-fill");
  fill.style.width = `${Math.round(snapshot.engagement * 100)}%`;
  gauge.appendChild(fill);
  gauge.appendChild(el("span", "field-value", snapshot.engagement.toFixed(3)));
  section.appendChild(gauge);

  const drives = el("div", "drives");
  for (const [name, level] of Object.entries(snapshot.drives).sort()) {
    const row = el("div", "drive-row");
    row.setAttribute("data-field", `drive.${name}`);
    row.appendChild(el("label", "field-name", name));
    const bar = el("div", "drive-bar");
    const barFill = el("div", "drive-fill");
    barFill.style.width = `${Math.round(level * 100)}%`;
    bar.appendChild(barFill);
    row.appendChild(bar);
    row.appendChild(el("span", "field-value", level.toFixed(3)));
    drives.appendChild(row);
  }
  section.appendChild(drives);
  return section;
}

function scenarioSection(snapshot: Snapshot): HTMLElement {
  const section = el("section", "scenario");
  section.appendChild(el("h2", undefined, "scenario"));
  section.appendChild(field("scenario_id", snapshot.scenario_id));
  section.appendChild(field("scenario_state", snapshot.scenario_state));
  section.appendChild(field("difficulty", String(snapshot.difficulty)));
  section.appendChild(field("goal_reached", String(snapshot.goal_reached)));
  section.appendChild(field("expected_token", snapshot.expected_token ?? "none"));
  const counters = el("div", "counters");
  for (const [name, count] of Object.entries(snapshot.counters).sort()) {
    const cell = field(`counter.${name}`, String(count), "counter");
    counters.appendChild(cell);
  }
  section.appendChild(counters);
  return section;
}

function behaviorSection(snapshot: Snapshot): HTMLElement {
  const section = el("section", "behavior");
  section.appendChild(el("h2", undefined, "current behavior"));
  section.appendChild(field("behavior_tag", snapshot.behavior_tag ?? "none"));
  const provenance = el("ul", "provenance");
  provenance.setAttribute("data-field", "provenance");
  for (const [unit, source] of Object.entries(snapshot.provenance).sort()) {
    provenance.appendChild(el("li", `prov-${source}`, `${unit} ← ${source}`));
  }
  section.appendChild(provenance);
  return section;
}

function queueSection(snapshot: Snapshot, send: SendFn): HTMLElement {
  const section = el("section", "approval");
  section.appendChild(el("h2", undefined, `approval queue (${snapshot.approval_queue.length})`));
  const list = el("div", "queue");
  list.id = "approval-queue";
  for (const entry of snapshot.approval_queue) {
    const row = el("div", "queue-row");
    row.setAttribute("data-queue-id", entry.id);
    row.appendChild(el("span", "queue-tag", `${entry.id}: ${entry.tag}`));
    const approve = el("button", "approve", "approve") as HTMLButtonElement;
    approve.onclick = () => send("approve", { id: entry.id });
    const deny = el("button", "deny", "deny") as HTMLButtonElement;
    deny.onclick = () => send("deny", { id: entry.id });
    row.appendChild(approve);
    row.appendChild(deny);
    list.appendChild(row);
  }
  section.appendChild(list);
  return section;
}

function controlsSection(view: SessionView, send: SendFn): HTMLElement {
  const section = el("section", "controls");
  section.appendChild(el("h2", undefined, "controls"));

  const scenarioRow = el("div", "control-row");
  const scenarioSelect = el("select") as HTMLSelectElement;
  scenarioSelect.id = "scenario-select";
  for (const name of view.hello?.scenarios ?? []) {
    const option = el("option", undefined, name) as HTMLOptionElement;
    option.value = name;
    scenarioSelect.appendChild(option);
  }
  const scenarioButton = el("button", undefined, "select scenario") as HTMLButtonElement;
  scenarioButton.id = "select-scenario";
  scenarioButton.onclick = () => send("select_scenario", { scenario: scenarioSelect.value });
  scenarioRow.appendChild(scenarioSelect);
  scenarioRow.appendChild(scenarioButton);
  section.appendChild(scenarioRow);

  const modeRow = el("div", "control-row");
  for (const mode of RUN_MODES) {
    const button = el("button", "mode-button", mode) as HTMLButtonElement;
    button.setAttribute("data-mode", mode);
    button.onclick = () => send("set_mode", { mode });
    modeRow.appendChild(button);
  }
  section.appendChild(modeRow);

  const flowRow = el("div", "control-row");
  const start = el("button", undefined, "start") as HTMLButtonElement;
  start.id = "start-button";
  start.onclick = () => send("start");
  const pause = el("button", undefined, "pause") as HTMLButtonElement;
  pause.id = "pause-button";
  pause.onclick = () => send("pause");
  const resume = el("button", undefined, "resume") as HTMLButtonElement;
  resume.id = "resume-button";
  resume.onclick = () => send("resume");
  flowRow.appendChild(start);
  flowRow.appendChild(pause);
  flowRow.appendChild(resume);
  section.appendChild(flowRow);

  const difficultyRow = el("div", "control-row");
  const current = view.latest?.difficulty ?? 0;
  const easier = el("button", undefined, "easier") as HTMLButtonElement;
  easier.id = "difficulty-down";
  easier.onclick = () => send("set_difficulty", { index: Math.max(0, current - 1) });
  const harder = el("button", undefined, "harder") as HTMLButtonElement;
  harder.id = "difficulty-up";
  harder.onclick = () => send("set_difficulty", { index: current + 1 });
  difficultyRow.appendChild(easier);
  difficultyRow.appendChild(harder);
  section.appendChild(difficultyRow);

  const overrideRow = el("div", "control-row");
  const behaviorSelect = el("select") as HTMLSelectElement;
  behaviorSelect.id = "override-select";
  for (const tag of view.hello?.behaviors ?? []) {
    const option = el("option", undefined, tag) as HTMLOptionElement;
    option.value = tag;
    behaviorSelect.appendChild(option);
  }
  const overrideButton = el("button", undefined, "override") as HTMLButtonElement;
  overrideButton.id = "override-button";
  overrideButton.onclick = () => send("override_behavior", { tag: behaviorSelect.value });
  overrideRow.appendChild(behaviorSelect);
  overrideRow.appendChild(overrideButton);
  section.appendChild(overrideRow);

  return section;
}

function toastArea(view: SessionView): HTMLElement {
  const area = el("div", "toasts");
  area.id = "toasts";
  for (const toast of view.toasts) {
    const node = el("div", `toast toast-${toast.kind}`, toast.text);
    node.setAttribute("data-toast-id", String(toast.id));
    if (toast.retry) {
      const retry = el("button", "retry", "retry") as HTMLButtonElement;
      retry.onclick = toast.retry;
      node.appendChild(retry);
    }
    area.appendChild(node);
  }
  return area;
}

export { MODES };
