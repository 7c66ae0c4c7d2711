/** Wire formats of the fluidc service (the only backend this UI talks to). */

export interface OperatorJson {
  kind: string;
  inputs: string[];
  params: number[];
  outputs: string[];
  direction?: string;
}

export interface NetlistJson {
  operators: OperatorJson[];
  inputs: string[];
  outputs: string[];
}

export interface DiagnosticJson {
  code: string;
  severity: string;
  message: string;
  nets: string[];
  operators: number[];
}

export interface CompileResponse {
  netlist: NetlistJson;
  diagnostics: DiagnosticJson[];
}

export interface PlacementJson {
  id: number;
  x: number;
  y: number;
  rot: number;
}

export interface LayoutResponse {
  placements: PlacementJson[];
  cost: { overlap: number; wire: number; area: number; total: number };
  seed: number;
  feasible: boolean;
  svg?: string;
}

export interface TimerStateJson {
  op: number;
  elapsed: number;
  threshold: number;
}

export interface SessionStateJson {
  id: string;
  t: number;
  values: Record<string, number>;
  inputs: string[];
  outputs: string[];
  timers: TimerStateJson[];
  autorun: boolean;
}

export interface SessionCreateResponse {
  id: string;
  state: SessionStateJson;
}

/** Outbound frame on the session socket. */
export interface SetCommand {
  set: { net: string; v: number };
}

/** Inbound frames on the session socket. */
export interface SnapshotFrame {
  snapshot: SessionStateJson;
}

export interface EventFrame {
  t: number;
  net: string;
  v: number;
}

export interface HeartbeatFrame {
  heartbeat: true;
}

export type ServerFrame = SnapshotFrame | EventFrame | HeartbeatFrame;

export function isSnapshot(frame: ServerFrame): frame is SnapshotFrame {
  return "snapshot" in frame;
}

export function isHeartbeat(frame: ServerFrame): frame is HeartbeatFrame {
  return "heartbeat" in frame;
}

export function isEvent(frame: ServerFrame): frame is EventFrame {
  return "net" in frame && "v" in frame;
}

export interface ApiErrorBody {
  code: string;
  message: string;
  detail?: unknown;
}
