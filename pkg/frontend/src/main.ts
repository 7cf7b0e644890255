/** Browser entry point: wire the socket client, store, and renderer. */

import { SupervisionClient } from "./client.js";
import { renderDashboard } from "./dashboard.js";
import { SessionStore } from "./store.js";

const params = new URLSearchParams(window.location.search);
const endpoint = params.get("endpoint") ?? "ws://127.0.0.1:8765";

const root = document.getElementById("app");
if (root === null) {
  throw new Error("missing #app mount point");
}

const store = new SessionStore();
const client = new SupervisionClient({ url: endpoint, store });
store.subscribe((view) => renderDashboard(view, root, (kind, payload) => client.send(kind, payload)));
client.connect();
renderDashboard(store.view, root, (kind, payload) => client.send(kind, payload));
