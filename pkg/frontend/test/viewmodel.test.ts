import { describe, expect, it } from "vitest";

import { CircuitViewModel, ServerAuthorityError, TIMELINE_LIMIT } from "../src/viewmodel.js";
import { INSOLE_LAYOUT, INSOLE_NETLIST, NOT_LAYOUT, NOT_NETLIST, stateOf } from "./helpers.js";

function insoleModel(): CircuitViewModel {
  const model = new CircuitViewModel(INSOLE_NETLIST, INSOLE_LAYOUT);
  model.applySnapshot(
    stateOf(
      { A: 0, B: 0, C: 1, D: 1, Q: 1, TimerOutput: 0, "Output I": 0 },
      0,
      { inputs: ["A", "B"], outputs: ["Output I"] },
    ),
  );
  return model;
}

describe("CircuitViewModel", () => {
  it("builds operator boxes with rotation-aware footprints", () => {
    const model = insoleModel();
    expect(model.operators).toHaveLength(5);
    const timer = model.operators[3]; // TIMER rotated 90: 2x3 -> 3x2
    expect([timer.width, timer.height]).toEqual([3, 2]);
    const gate = model.operators[0];
    expect([gate.width, gate.height]).toEqual([2, 2]);
  });

  it("flags inputs clickable and outputs animated in the rendering", () => {
    const svg = insoleModel().renderSVG();
    expect(svg).toContain('class="input-node" data-net="A"');
    expect(svg).toContain('class="input-node" data-net="B"');
    expect(svg).toContain('class="output-node" data-net="Output I" data-state="0"');
    expect(svg).toContain('cursor="pointer"');
  });

  it("never displays a net value that did not come from the server", () => {
    const model = new CircuitViewModel(INSOLE_NETLIST, INSOLE_LAYOUT);
    expect(() => model.valueOf("Output I")).toThrow(ServerAuthorityError);
    expect(() => model.renderSVG()).toThrow(ServerAuthorityError);
  });

  it("tracks provenance of every value", () => {
    const model = insoleModel();
    expect(model.provenanceOf("Q")?.provenance).toBe("snapshot");
    model.applyFrame({ t: 1.8, net: "Output I", v: 1 });
    expect(model.provenanceOf("Output I")).toEqual({
      value: 1,
      provenance: "frame",
      t: 1.8,
    });
    // nets the server never mentioned stay unknown
    expect(model.hasValue("nonexistent")).toBe(false);
  });

  it("re-rendering an unchanged model yields an identical document", () => {
    const model = insoleModel();
    const first = model.renderSVG();
    expect(model.renderSVG()).toBe(first);
    model.applyFrame({ t: 0.5, net: "Q", v: 0 });
    const second = model.renderSVG();
    expect(second).not.toBe(first);
    expect(model.renderSVG()).toBe(second);
  });

  it("applies frames to wires and output inflation state", () => {
    const model = insoleModel();
    const before = model.renderSVG();
    expect(before).toContain('data-net="Output I" data-state="0"');
    model.applyFrame({ t: 1.8, net: "Output I", v: 1 });
    const after = model.renderSVG();
    expect(after).toContain('data-net="Output I" data-state="1"');
  });

  it("keeps a bounded timeline of transitions", () => {
    const model = insoleModel();
    for (let i = 0; i < TIMELINE_LIMIT + 10; i += 1) {
      model.applyFrame({ t: i * 0.1, net: "Q", v: i % 2 });
    }
    expect(model.timeline).toHaveLength(TIMELINE_LIMIT);
    const text = model.renderTimeline();
    expect(text).toContain("Q=1");
    expect(text.split("\n")).toHaveLength(TIMELINE_LIMIT);
  });

  it("exposes timer progress from server state only", () => {
    const model = insoleModel();
    model.applyTimers([{ op: 3, elapsed: 0.9, threshold: 1.8 }]);
    const progress = model.timerProgress();
    expect(progress[0].fraction).toBeCloseTo(0.5);
    const svg = model.renderSVG();
    expect(svg).toContain('class="timer-progress"');
    expect(svg).toContain("0.90/1.80s");
  });

  it("draws one wire path per connected net plus input stubs", () => {
    const model = insoleModel();
    const paths = model.wirePaths();
    const nets = paths.map((p) => p.net).sort();
    expect(nets).toEqual(["A", "B", "C", "D", "Q", "TimerOutput"]);
  });

  it("single-gate model renders a single operator", () => {
    const model = new CircuitViewModel(NOT_NETLIST, NOT_LAYOUT);
    model.applySnapshot(stateOf({ A: 0, Q: 1 }));
    const svg = model.renderSVG();
    expect(svg.match(/class="operator"/g)).toHaveLength(1);
  });
});
