/** Test doubles speaking the service's exact wire formats. */

import { FetchLike, SocketFactory, SocketLike } from "../src/client.js";
import {
  LayoutResponse,
  NetlistJson,
  SessionStateJson,
} from "../src/types.js";

export const NOT_NETLIST: NetlistJson = {
  operators: [{ kind: "NOT", inputs: ["A"], params: [], outputs: ["Q"] }],
  inputs: ["A"],
  outputs: ["Q"],
};

export const NOT_LAYOUT: LayoutResponse = {
  placements: [{ id: 0, x: 0, y: 0, rot: 0 }],
  cost: { overlap: 0, wire: 0, area: 4, total: 8 },
  seed: 1,
  feasible: true,
};

export const INSOLE_NETLIST: NetlistJson = {
  operators: [
    { kind: "NOT", inputs: ["A"], params: [], outputs: ["C"] },
    { kind: "NOT", inputs: ["B"], params: [], outputs: ["D"] },
    { kind: "OR", inputs: ["C", "D"], params: [], outputs: ["Q"] },
    { kind: "TIMER", inputs: ["Q"], params: [1800], outputs: ["TimerOutput"] },
    { kind: "AND", inputs: ["Q", "TimerOutput"], params: [], outputs: ["Output I"] },
  ],
  inputs: ["A", "B"],
  outputs: ["Output I"],
};

export const INSOLE_LAYOUT: LayoutResponse = {
  placements: [
    { id: 0, x: 0, y: 0, rot: 0 },
    { id: 1, x: 0, y: 3, rot: 0 },
    { id: 2, x: 3, y: 1, rot: 0 },
    { id: 3, x: 6, y: 0, rot: 90 },
    { id: 4, x: 9, y: 1, rot: 0 },
  ],
  cost: { overlap: 0, wire: 17, area: 28, total: 73 },
  seed: 1,
  feasible: true,
};

export function stateOf(
  values: Record<string, number>,
  t = 0,
  extras: Partial<SessionStateJson> = {},
): SessionStateJson {
  return {
    id: "s1",
    t,
    values,
    inputs: extras.inputs ?? ["A"],
    outputs: extras.outputs ?? ["Q"],
    timers: extras.timers ?? [],
    autorun: extras.autorun ?? false,
  };
}

/** In-memory socket; the test script plays the server side. */
export class FakeSocket implements SocketLike {
  sent: string[] = [];
  closed = false;
  onmessage: ((event: { data: string }) => void) | null = null;
  onclose: ((event: { code: number }) => void) | null = null;
  onopen: (() => void) | null = null;

  constructor(readonly url: string) {}

  send(data: string): void {
    this.sent.push(data);
  }

  close(): void {
    this.closed = true;
  }

  serverSend(frame: unknown): void {
    this.onmessage?.({ data: JSON.stringify(frame) });
  }

  serverClose(code = 1000): void {
    this.onclose?.({ code });
  }

  openNow(): void {
    this.onopen?.();
  }
}

export class FakeSocketFactory {
  sockets: FakeSocket[] = [];
  factory: SocketFactory = (url) => {
    const socket = new FakeSocket(url);
    this.sockets.push(socket);
    queueMicrotask(() => socket.openNow());
    return socket;
  };

  latest(): FakeSocket {
    return this.sockets[this.sockets.length - 1];
  }
}

/** Canned HTTP backend for compile/layout/sessions/projects. */
export function fakeFetch(
  routes: Record<string, unknown | ((body: unknown) => unknown)>,
): FetchLike {
  return async (url, init) => {
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    const handler = routes[path];
    if (handler === undefined) {
      return {
        status: 404,
        json: async () => ({ code: "not_found", message: `no route ${path}` }),
      };
    }
    const body = init?.body ? JSON.parse(init.body) : undefined;
    const payload = typeof handler === "function" ? (handler as (b: unknown) => unknown)(body) : handler;
    if (payload && typeof payload === "object" && "__status" in (payload as object)) {
      const { __status, ...rest } = payload as { __status: number } & Record<string, unknown>;
      return { status: __status, json: async () => rest };
    }
    return { status: 200, json: async () => payload };
  };
}
