/**
 * Pure view model of a placed circuit under live simulation.
 *
 * The model is server-authoritative by construction: the only way a net
 * value enters is through a server snapshot or a server event frame, and
 * each stored value carries its provenance. Rendering a net whose value
 * never arrived from the server throws (the instrumented assertion the
 * tests rely on); the renderer itself is a pure function of the model
 * state, so re-rendering an unchanged model yields an identical document.
 */

import {
  EventFrame,
  LayoutResponse,
  NetlistJson,
  SessionStateJson,
  TimerStateJson,
} from "./types.js";

export type Provenance = "snapshot" | "frame";

export interface NetValue {
  value: number;
  provenance: Provenance;
  t: number;
}

export interface OperatorBox {
  id: number;
  kind: string;
  x: number;
  y: number;
  width: number;
  height: number;
  rot: number;
}

export interface WirePath {
  net: string;
  points: Array<[number, number]>;
}

export interface TimelineEntry {
  t: number;
  net: string;
  v: number;
}

/** Footprints mirror the placer's table (gates 2x2, timed 2x3, ...). */
const FOOTPRINTS: Record<string, [number, number]> = {
  NOT: [2, 2],
  OR: [2, 2],
  AND: [2, 2],
  NOR: [2, 2],
  NAND: [2, 2],
  XOR: [2, 2],
  FILTER: [2, 3],
  TIMER: [2, 3],
  EDGE_DETECTOR: [2, 3],
  REGISTER: [2, 3],
  MULTIPLEXER: [3, 4],
  DEMULTIPLEXER: [3, 4],
  DIODE: [1, 2],
};

export const CELL_PX = 24;
export const TIMELINE_LIMIT = 40;

export class ServerAuthorityError extends Error {
  constructor(net: string) {
    super(
      `net ${JSON.stringify(net)} has no server-provided value; ` +
        "the view must never invent one",
    );
  }
}

export class CircuitViewModel {
  readonly netlist: NetlistJson;
  readonly operators: OperatorBox[] = [];
  readonly inputs: Set<string>;
  readonly outputs: Set<string>;
  private readonly values = new Map<string, NetValue>();
  private timers: TimerStateJson[] = [];
  readonly timeline: TimelineEntry[] = [];
  private clock = 0;

  constructor(netlist: NetlistJson, layout: LayoutResponse) {
    this.netlist = netlist;
    this.inputs = new Set(netlist.inputs);
    this.outputs = new Set(netlist.outputs);
    for (const placement of layout.placements) {
      const op = netlist.operators[placement.id];
      const [w, h] = FOOTPRINTS[op.kind] ?? [2, 2];
      const swapped = placement.rot % 180 !== 0;
      this.operators.push({
        id: placement.id,
        kind: op.kind,
        x: placement.x,
        y: placement.y,
        width: swapped ? h : w,
        height: swapped ? w : h,
        rot: placement.rot,
      });
    }
  }

  /** All nets referenced by the circuit. */
  nets(): string[] {
    const seen = new Set<string>();
    for (const op of this.netlist.operators) {
      for (const net of [...op.inputs, ...op.outputs]) seen.add(net);
    }
    return [...seen].sort();
  }

  applySnapshot(state: SessionStateJson): void {
    this.clock = state.t;
    for (const [net, value] of Object.entries(state.values)) {
      this.values.set(net, { value, provenance: "snapshot", t: state.t });
    }
    this.timers = state.timers ?? [];
  }

  applyFrame(frame: EventFrame): void {
    this.clock = Math.max(this.clock, frame.t);
    this.values.set(frame.net, { value: frame.v, provenance: "frame", t: frame.t });
    this.timeline.push({ t: frame.t, net: frame.net, v: frame.v });
    if (this.timeline.length > TIMELINE_LIMIT) {
      this.timeline.splice(0, this.timeline.length - TIMELINE_LIMIT);
    }
  }

  applyTimers(timers: TimerStateJson[]): void {
    this.timers = timers;
  }

  /** Server-provided value of a net; throws if none ever arrived. */
  valueOf(net: string): number {
    const entry = this.values.get(net);
    if (entry === undefined) throw new ServerAuthorityError(net);
    return entry.value;
  }

  provenanceOf(net: string): NetValue | undefined {
    return this.values.get(net);
  }

  hasValue(net: string): boolean {
    return this.values.has(net);
  }

  time(): number {
    return this.clock;
  }

  timerProgress(): Array<{ op: number; fraction: number; elapsed: number; threshold: number }> {
    return this.timers.map((t) => ({
      op: t.op,
      fraction: t.threshold > 0 ? Math.min(1, t.elapsed / t.threshold) : 0,
      elapsed: t.elapsed,
      threshold: t.threshold,
    }));
  }

  /** Wires: one polyline per net from its driver through every consumer. */
  wirePaths(): WirePath[] {
    const paths: WirePath[] = [];
    const drivers = new Map<string, [number, number]>();
    const consumers = new Map<string, Array<[number, number]>>();
    for (const box of this.operators) {
      const op = this.netlist.operators[box.id];
      op.outputs.forEach((net, i) => {
        const frac = (i + 1) / (op.outputs.length + 1);
        drivers.set(net, [box.x + box.width, box.y + box.height * frac]);
      });
      op.inputs.forEach((net, i) => {
        const frac = (i + 1) / (op.inputs.length + 1);
        const list = consumers.get(net) ?? [];
        list.push([box.x, box.y + box.height * frac]);
        consumers.set(net, list);
      });
    }
    for (const [net, ends] of [...consumers.entries()].sort()) {
      const start = drivers.get(net);
      const points: Array<[number, number]> = [];
      let previous = start;
      for (const end of ends) {
        if (previous) {
          points.push(previous, [end[0], previous[1]], end);
        } else {
          points.push([end[0] - 0.8, end[1]], end); // primary-input stub
        }
        previous = end;
      }
      paths.push({ net, points });
    }
    return paths;
  }

  /**
   * Render the schematic as an SVG string. Pure projection of the model:
   * identical state renders to an identical document.
   */
  renderSVG(): string {
    const pad = 2;
    const maxX = Math.max(1, ...this.operators.map((b) => b.x + b.width));
    const maxY = Math.max(1, ...this.operators.map((b) => b.y + b.height));
    const width = (maxX + 2 * pad) * CELL_PX;
    const height = (maxY + 2 * pad) * CELL_PX;
    const px = (gx: number) => ((gx + pad) * CELL_PX).toFixed(0);
    const parts: string[] = [
      `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
        `viewBox="0 0 ${width} ${height}" font-family="sans-serif" font-size="10">`,
    ];

    for (const path of this.wirePaths()) {
      const active = this.hasValue(path.net) && this.valueOf(path.net) === 1;
      const points = path.points.map(([x, y]) => `${px(x)},${px(y)}`).join(" ");
      parts.push(
        `<polyline class="wire" data-net="${escapeAttr(path.net)}" ` +
          `data-state="${active ? 1 : 0}" points="${points}" fill="none" ` +
          `stroke="${active ? "#e2574c" : "#9aa7b4"}" stroke-width="2"/>`,
      );
    }

    for (const box of this.operators) {
      parts.push(
        `<rect class="operator" data-op="${box.id}" x="${px(box.x)}" y="${px(box.y)}" ` +
          `width="${box.width * CELL_PX}" height="${box.height * CELL_PX}" ` +
          `fill="#ffffff" stroke="#2c3e50" rx="3"/>`,
        `<text x="${(box.x + pad) * CELL_PX + 4}" y="${(box.y + pad) * CELL_PX + 12}">` +
          `${escapeText(box.kind)} #${box.id}</text>`,
      );
    }

    for (const net of [...this.inputs].sort()) {
      const value = this.hasValue(net) ? this.valueOf(net) : null;
      parts.push(
        `<g class="input-node" data-net="${escapeAttr(net)}" data-state="${value ?? "?"}" ` +
          `cursor="pointer"><circle cx="${CELL_PX}" cy="${inputY(this, net)}" r="9" ` +
          `fill="${value === 1 ? "#2eaf5d" : "#dfe7ee"}" stroke="#2c3e50"/>` +
          `<text x="${CELL_PX + 14}" y="${inputY(this, net) + 4}">${escapeText(net)}</text></g>`,
      );
    }

    for (const net of [...this.outputs].sort()) {
      // an output airbag renders inflated (value 1) or deflated (0)
      const value = this.valueOf(net);
      const r = value === 1 ? 12 : 7;
      parts.push(
        `<g class="output-node" data-net="${escapeAttr(net)}" data-state="${value}">` +
          `<circle cx="${width - CELL_PX}" cy="${outputY(this, net)}" r="${r}" ` +
          `fill="${value === 1 ? "#f3b23e" : "#dfe7ee"}" stroke="#2c3e50"/>` +
          `<text x="${width - CELL_PX - 10}" y="${outputY(this, net) - 16}">` +
          `${escapeText(net)}</text></g>`,
      );
    }

    const timers = this.timerProgress();
    timers.forEach((timer, index) => {
      const y = height - 12 - index * 14;
      parts.push(
        `<g class="timer-progress" data-op="${timer.op}">` +
          `<rect x="8" y="${y}" width="80" height="8" fill="#dfe7ee"/>` +
          `<rect x="8" y="${y}" width="${(80 * timer.fraction).toFixed(1)}" height="8" ` +
          `fill="#4f7cac"/><text x="92" y="${y + 8}">` +
          `${timer.elapsed.toFixed(2)}/${timer.threshold.toFixed(2)}s</text></g>`,
      );
    });

    parts.push("</svg>");
    return parts.join("\n");
  }

  /** Timeline strip entries, most recent last. */
  renderTimeline(): string {
    return this.timeline
      .map((e) => `${e.t.toFixed(2)}s ${e.net}=${e.v}`)
      .join("\n");
  }
}

function escapeAttr(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/"/g, "&quot;").replace(/</g, "&lt;");
}

function escapeText(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;");
}

function inputY(model: CircuitViewModel, net: string): number {
  const index = [...model.inputs].sort().indexOf(net);
  return 2 * CELL_PX + index * 28;
}

function outputY(model: CircuitViewModel, net: string): number {
  const index = [...model.outputs].sort().indexOf(net);
  return 2 * CELL_PX + index * 34;
}
