/**
 * HTTP and WebSocket clients for the fluidc service.
 *
 * Both transports are injectable so the UI logic is testable without a
 * browser: `HttpApi` takes a fetch-like function, `SessionSocket` a
 * WebSocket factory. The socket reconnects with exponential backoff and
 * resyncs from the server's snapshot frame; commands issued while the
 * socket is down are dropped (stale input clicks must not replay later).
 */

import {
  ApiErrorBody,
  CompileResponse,
  LayoutResponse,
  ServerFrame,
  SessionCreateResponse,
  SessionStateJson,
} from "./types.js";

export type FetchLike = (url: string, init?: {
  method?: string;
  headers?: Record<string, string>;
  body?: string;
}) => Promise<{ status: number; json(): Promise<unknown> }>;

export class ApiError extends Error {
  readonly code: string;
  readonly status: number;
  constructor(status: number, body: ApiErrorBody) {
    super(body.message);
    this.code = body.code;
    this.status = status;
  }
}

export class HttpApi {
  constructor(
    private readonly base: string,
    private readonly fetchFn: FetchLike,
  ) {}

  private async post<T>(path: string, body: unknown): Promise<T> {
    const response = await this.fetchFn(`${this.base}${path}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    const payload = (await response.json()) as T | ApiErrorBody;
    if (response.status !== 200) {
      throw new ApiError(response.status, payload as ApiErrorBody);
    }
    return payload as T;
  }

  compile(circuit: string): Promise<CompileResponse> {
    return this.post("/api/compile", { circuit });
  }

  layout(circuit: string, seed = 1): Promise<LayoutResponse> {
    return this.post("/api/layout", { circuit, sa_config: { seed } });
  }

  createSession(
    circuit: string,
    simConfig: { dt?: number; time_scale?: number } = {},
    autorun = false,
  ): Promise<SessionCreateResponse> {
    return this.post("/api/sessions", {
      circuit,
      sim_config: simConfig,
      autorun,
    });
  }

  async getProjectDocument(name: string, document: string): Promise<unknown | null> {
    const response = await this.fetchFn(`${this.base}/api/projects/${name}/${document}`);
    if (response.status !== 200) return null;
    return response.json();
  }
}

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onmessage: ((event: { data: string }) => void) | null;
  onclose: ((event: { code: number }) => void) | null;
  onopen: (() => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface SessionSocketHandlers {
  onSnapshot(state: SessionStateJson): void;
  onEvent(frame: { t: number; net: string; v: number }): void;
  onStatus?(status: "open" | "closed" | "reconnecting" | "expired"): void;
}

export class SessionSocket {
  private socket: SocketLike | null = null;
  private closedByUser = false;
  private retryDelayMs = 100;
  private connected = false;

  constructor(
    private readonly url: string,
    private readonly factory: SocketFactory,
    private readonly handlers: SessionSocketHandlers,
    private readonly scheduler: (fn: () => void, ms: number) => void = (fn, ms) =>
      setTimeout(fn, ms),
  ) {}

  open(): void {
    this.socket = this.factory(this.url);
    this.socket.onopen = () => {
      this.connected = true;
      this.retryDelayMs = 100;
      this.handlers.onStatus?.("open");
    };
    this.socket.onmessage = (event) => {
      let frame: ServerFrame;
      try {
        frame = JSON.parse(event.data) as ServerFrame;
      } catch {
        return;
      }
      if ("snapshot" in frame) {
        this.handlers.onSnapshot(frame.snapshot);
      } else if ("net" in frame && "v" in frame) {
        this.handlers.onEvent(frame);
      }
      // heartbeats keep the connection warm; nothing to do
    };
    this.socket.onclose = (event) => {
      this.connected = false;
      if (this.closedByUser) return;
      if (event.code === 4008) {
        this.handlers.onStatus?.("expired");
        return;
      }
      this.handlers.onStatus?.("reconnecting");
      this.scheduler(() => this.open(), this.retryDelayMs);
      this.retryDelayMs = Math.min(this.retryDelayMs * 2, 5000);
    };
  }

  /** Send an input toggle; dropped (returns false) while disconnected. */
  setInput(net: string, value: number): boolean {
    if (!this.socket || !this.connected) return false;
    this.socket.send(JSON.stringify({ set: { net, v: value } }));
    return true;
  }

  isConnected(): boolean {
    return this.connected;
  }

  close(): void {
    this.closedByUser = true;
    this.handlers.onStatus?.("closed");
    this.socket?.close();
  }
}
