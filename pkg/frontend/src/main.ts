/** Browser entry point: wires the controller to the DOM. */

import { App, AppView } from "./app.js";
import { HttpApi } from "./client.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const view: AppView = {
  renderSchematic(svg: string): void {
    el("schematic").innerHTML = svg;
  },
  renderTimeline(text: string): void {
    el("timeline").textContent = text;
  },
  renderPanels(panels: Record<string, string>): void {
    el("panel-goal").textContent = panels["design_goal"] ?? "";
    el("panel-truth").textContent = panels["truth_table"] ?? "";
    el("panel-io").textContent = panels["io_design"] ?? "";
  },
  showError(code: string, message: string): void {
    const banner = el("error-banner");
    banner.textContent = `${code}: ${message}`;
    banner.style.display = "block";
  },
  clearError(): void {
    el("error-banner").style.display = "none";
  },
};

/** Adapt the browser WebSocket to the injectable socket surface. */
function browserSocket(url: string) {
  const ws = new WebSocket(url);
  const adapter = {
    send: (data: string) => ws.send(data),
    close: () => ws.close(),
    onmessage: null as ((event: { data: string }) => void) | null,
    onclose: null as ((event: { code: number }) => void) | null,
    onopen: null as (() => void) | null,
  };
  ws.onmessage = (event) => adapter.onmessage?.({ data: String(event.data) });
  ws.onclose = (event) => adapter.onclose?.({ code: event.code });
  ws.onopen = () => adapter.onopen?.();
  return adapter;
}

const base = window.location.origin;
const wsBase = base.replace(/^http/, "ws");
const app = new App(
  new HttpApi(base, (url, init) => fetch(url, init)),
  view,
  browserSocket,
  wsBase,
);

el<HTMLButtonElement>("load-button").addEventListener("click", () => {
  const circuit = el<HTMLTextAreaElement>("circuit-text").value;
  const timeScale = Number(el<HTMLInputElement>("time-scale").value) || 1.0;
  const autorun = el<HTMLInputElement>("autorun").checked;
  void app.loadCircuit(circuit, { timeScale, autorun });
});

el<HTMLInputElement>("time-scale").addEventListener("change", (event) => {
  const value = Number((event.target as HTMLInputElement).value) || 1.0;
  if (app.sessionId) void app.setTimeScale(value);
});

el("schematic").addEventListener("click", (event) => {
  const target = (event.target as Element).closest(".input-node");
  const net = target?.getAttribute("data-net");
  if (net) app.toggleInput(net);
});

el<HTMLButtonElement>("load-project-button").addEventListener("click", () => {
  const name = el<HTMLInputElement>("project-name").value.trim();
  if (name) void app.loadProject(name, { timeScale: 0.001, autorun: true });
});
