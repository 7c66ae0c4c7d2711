/**
 * Application controller: loads a circuit (or a saved project), renders
 * the schematic, and steers a live session.
 *
 * Every displayed net value originates in a server frame (snapshot or
 * change event); clicking an input sends a set command and waits for the
 * server's echo frame — there is no optimistic update.
 */

import { ApiError, HttpApi, SessionSocket, SocketFactory } from "./client.js";
import { CircuitViewModel } from "./viewmodel.js";
import { SessionStateJson } from "./types.js";

export interface AppView {
  renderSchematic(svg: string): void;
  renderTimeline(text: string): void;
  renderPanels(panels: Record<string, string>): void;
  showError(code: string, message: string): void;
  clearError(): void;
}

export interface AppOptions {
  timeScale?: number;
  dt?: number;
  autorun?: boolean;
  seed?: number;
}

export class App {
  model: CircuitViewModel | null = null;
  private socket: SessionSocket | null = null;
  sessionId: string | null = null;
  private circuit = "";
  private options: AppOptions = {};
  /** epoch guard: frames from a superseded session are stale */
  private epoch = 0;

  constructor(
    private readonly api: HttpApi,
    private readonly view: AppView,
    private readonly socketFactory: SocketFactory,
    private readonly wsBase: string,
  ) {}

  /** Fetch compile + layout, build the view model, open the session. */
  async loadCircuit(circuit: string, options: AppOptions = {}): Promise<void> {
    this.view.clearError();
    this.circuit = circuit;
    this.options = options;
    try {
      const compiled = await this.api.compile(circuit);
      const layout = await this.api.layout(circuit, options.seed ?? 1);
      this.model = new CircuitViewModel(compiled.netlist, layout);
      const session = await this.api.createSession(
        circuit,
        { time_scale: options.timeScale ?? 1.0, dt: options.dt ?? 0.1 },
        options.autorun ?? false,
      );
      this.sessionId = session.id;
      this.attachSocket(session.id);
      this.model.applySnapshot(session.state);
      this.refresh();
    } catch (error) {
      if (error instanceof ApiError) {
        this.view.showError(error.code, error.message);
        return;
      }
      throw error;
    }
  }

  /** Load the documents of a saved project and its generated circuit. */
  async loadProject(name: string, options: AppOptions = {}): Promise<void> {
    const circuitDoc = (await this.api.getProjectDocument(name, "circuit.json")) as {
      circuit?: string;
      truth_table?: string;
    } | null;
    if (!circuitDoc?.circuit) {
      this.view.showError("missing_document", `project ${name} has no circuit.json`);
      return;
    }
    const panels: Record<string, string> = {};
    const goal = (await this.api.getProjectDocument(name, "design_goal.json")) as {
      design_goal?: string;
    } | null;
    if (goal?.design_goal) panels["design_goal"] = goal.design_goal;
    if (circuitDoc.truth_table) panels["truth_table"] = circuitDoc.truth_table;
    const io = (await this.api.getProjectDocument(name, "io_design.json")) as {
      input_description?: string;
      output_description?: string;
      patterns?: Array<Record<string, unknown>>;
    } | null;
    if (io) {
      panels["io_design"] = [io.input_description, io.output_description]
        .filter(Boolean)
        .join("\n");
      if (io.patterns?.length) {
        panels["patterns"] = JSON.stringify(io.patterns, null, 2);
      }
    }
    this.view.renderPanels(panels);
    await this.loadCircuit(circuitDoc.circuit, options);
  }

  private attachSocket(sessionId: string): void {
    this.socket?.close();
    this.epoch += 1;
    const epoch = this.epoch;
    const socket = new SessionSocket(
      `${this.wsBase}/api/sessions/${sessionId}/ws`,
      this.socketFactory,
      {
        onSnapshot: (state: SessionStateJson) => {
          if (epoch !== this.epoch || !this.model) return; // stale session
          this.model.applySnapshot(state);
          this.refresh();
        },
        onEvent: (frame) => {
          if (epoch !== this.epoch || !this.model) return;
          this.model.applyFrame(frame);
          this.refresh();
        },
        onStatus: (status) => {
          if (status === "expired") {
            this.view.showError("session_expired", "the live session expired");
          }
        },
      },
    );
    socket.open();
    this.socket = socket;
  }

  /** True once the live session socket is connected. */
  isLive(): boolean {
    return this.socket?.isConnected() ?? false;
  }

  /** Toggle a primary input; the view updates when the echo frame lands. */
  toggleInput(net: string): boolean {
    if (!this.model || !this.socket) return false;
    if (!this.model.inputs.has(net)) return false;
    const current = this.model.hasValue(net) ? this.model.valueOf(net) : 0;
    return this.socket.setInput(net, current === 1 ? 0 : 1);
  }

  /** Recreate the session at a new time scale (slider control). */
  async setTimeScale(timeScale: number): Promise<void> {
    await this.loadCircuit(this.circuit, { ...this.options, timeScale });
  }

  refresh(): void {
    if (!this.model) return;
    this.view.renderSchematic(this.model.renderSVG());
    this.view.renderTimeline(this.model.renderTimeline());
  }
}
