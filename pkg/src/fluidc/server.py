"""HTTP + WebSocket service over the compiler, simulator, verifier,
layout, patterns and design pipeline.

Sessions live in memory with a TTL and one lock each (mutations are
serialized per session); projects persist on disk through the atomic
:class:`~fluidc.agents.project.ProjectStore`.  Every capability has an
HTTP endpoint; live sessions additionally stream change-event frames over
a WebSocket that also accepts ``{"set": {"net": ..., "v": ...}}`` input
commands.
"""

from __future__ import annotations

import asyncio
import json
import os
import secrets
import threading
import time
from dataclasses import dataclass, field
from typing import Optional

from fastapi import FastAPI, Request, Response, WebSocket, WebSocketDisconnect
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from . import fchdl, layout, patterns, simulator, verifier
from .agents import (
    DesignProject,
    HttpTransport,
    MockTransport,
    PipelineConfig,
    ProjectStore,
    run_design_pipeline,
)
from .agents.project import DocumentError

DEFAULT_SESSION_TTL = 30 * 60.0
WS_CLOSE_EXPIRED = 4008
HEARTBEAT_SECONDS = 10.0
_WS_POLL_SECONDS = 0.02


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, detail=None):
        self.status = status
        self.code = code
        self.message = message
        self.detail = detail
        super().__init__(message)


@dataclass
class Session:
    id: str
    state: simulator.SimState
    config: simulator.SimConfig
    autorun: bool = False
    created_at: float = field(default_factory=time.monotonic)
    last_touched: float = field(default_factory=time.monotonic)
    lock: threading.Lock = field(default_factory=threading.Lock)
    event_log: list[dict] = field(default_factory=list)
    subscribers: int = 0
    closed: bool = False

    def touch(self) -> None:
        self.last_touched = time.monotonic()

    def push_events(self, events) -> None:
        for e in events:
            self.event_log.append({"t": e.t, "net": e.net, "v": e.new, "old": e.old})

    def state_json(self) -> dict:
        netlist = self.state.netlist
        timers = []
        ops = netlist.operators
        for i, op in enumerate(ops):
            if op.kind is fchdl.OperatorKind.TIMER:
                timers.append(
                    {
                        "op": i,
                        "elapsed": self.state.elapsed[i],
                        "threshold": self.state.compiled.thresholds[i],
                    }
                )
        return {
            "id": self.id,
            "t": self.state.t,
            "values": self.state.net_values,
            "inputs": sorted(netlist.primary_inputs),
            "outputs": sorted(netlist.primary_outputs),
            "timers": timers,
            "autorun": self.autorun,
        }


class SessionRegistry:
    def __init__(self, ttl: float = DEFAULT_SESSION_TTL):
        self.ttl = ttl
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def create(self, state: simulator.SimState, config, autorun: bool) -> Session:
        session = Session(
            id=secrets.token_hex(8), state=state, config=config, autorun=autorun
        )
        with self._lock:
            self._sessions[session.id] = session
        return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            session = self._sessions.get(session_id)
            if session is None:
                raise ApiError(404, "unknown_session", f"no session {session_id!r}")
            if time.monotonic() - session.last_touched > self.ttl:
                session.closed = True
                del self._sessions[session_id]
                raise ApiError(404, "session_expired", f"session {session_id!r} expired")
            return session

    def peek(self, session_id: str) -> Optional[Session]:
        with self._lock:
            return self._sessions.get(session_id)

    def expired(self, session: Session) -> bool:
        return session.closed or time.monotonic() - session.last_touched > self.ttl


def _parse_netlist_payload(body: dict) -> fchdl.Netlist:
    if "circuit" in body and body["circuit"] is not None:
        try:
            return fchdl.parse_circuit(body["circuit"])
        except fchdl.CircuitError as exc:
            raise ApiError(
                422, "parse_error", str(exc), detail={"offset": exc.offset}
            ) from exc
    if "netlist" in body and body["netlist"] is not None:
        try:
            return fchdl.netlist_from_json(body["netlist"])
        except (KeyError, ValueError, TypeError) as exc:
            raise ApiError(422, "bad_netlist", f"malformed netlist JSON: {exc}") from exc
    raise ApiError(400, "validation_error", "body needs 'circuit' or 'netlist'")


def _sim_config(body: dict) -> simulator.SimConfig:
    raw = body.get("sim_config") or {}
    try:
        return simulator.SimConfig(
            dt=raw.get("dt", 0.1),
            max_settle_iters=raw.get("max_settle_iters"),
            time_scale=raw.get("time_scale", 1.0),
            filter_tolerance=raw.get("filter_tolerance", 0.20),
        )
    except ValueError as exc:
        raise ApiError(422, "bad_sim_config", str(exc)) from exc


def _sa_config(body: dict) -> layout.SAConfig:
    raw = body.get("sa_config") or {}
    try:
        return layout.SAConfig(
            seed=raw.get("seed", 1),
            w_overlap=raw.get("w_overlap", 1000.0),
            w_wire=raw.get("w_wire", 1.0),
            w_area=raw.get("w_area", 2.0),
            moves_per_epoch=raw.get("moves_per_epoch"),
            cooling_alpha=raw.get("cooling_alpha", 0.95),
            initial_acceptance=raw.get("initial_acceptance", 0.8),
            min_temp_ratio=raw.get("min_temp_ratio", 1e-4),
            stall_epochs=raw.get("stall_epochs", 20),
            grid=raw.get("grid"),
        )
    except ValueError as exc:
        raise ApiError(422, "bad_sa_config", str(exc)) from exc


async def _read_json(request: Request) -> dict:
    try:
        body = await request.json()
    except Exception as exc:
        raise ApiError(400, "validation_error", f"body is not valid JSON: {exc}") from exc
    if not isinstance(body, dict):
        raise ApiError(400, "validation_error", "body must be a JSON object")
    return body


def create_app(
    projects_dir: Optional[str] = None,
    session_ttl: float = DEFAULT_SESSION_TTL,
    transport_factory=None,
) -> FastAPI:
    app = FastAPI(title="fluidc", docs_url=None, redoc_url=None)
    registry = SessionRegistry(ttl=session_ttl)
    app.state.sessions = registry
    projects_root = projects_dir or os.environ.get("FLUIDC_PROJECTS") or "./projects"
    store = ProjectStore(projects_root)
    app.state.store = store

    if transport_factory is None:

        def transport_factory(config: dict):
            if config.get("mock_fixtures"):
                return MockTransport(config["mock_fixtures"])
            endpoint = config.get("endpoint") or {}
            if not endpoint.get("base_url"):
                raise ApiError(
                    400,
                    "validation_error",
                    "pipeline_config needs 'mock_fixtures' or endpoint.base_url",
                )
            return HttpTransport(
                base_url=endpoint["base_url"],
                model=endpoint.get("model", "gpt-4"),
                token_env=endpoint.get("token_env", "FLUIDC_LLM_TOKEN"),
                temperature=endpoint.get("temperature"),
            )

    @app.exception_handler(ApiError)
    async def _api_error(_request, exc: ApiError):
        return JSONResponse(
            {"code": exc.code, "message": exc.message, "detail": exc.detail},
            status_code=exc.status,
        )

    @app.exception_handler(RequestValidationError)
    async def _validation_error(_request, exc: RequestValidationError):
        return JSONResponse(
            {"code": "validation_error", "message": "invalid request", "detail": exc.errors()},
            status_code=400,
        )

    @app.exception_handler(Exception)
    async def _internal_error(_request, exc: Exception):
        return JSONResponse(
            {"code": "internal_error", "message": str(exc), "detail": None},
            status_code=500,
        )

    @app.post("/api/compile")
    async def compile_endpoint(request: Request):
        body = await _read_json(request)
        netlist = _parse_netlist_payload(body)
        return {
            "netlist": fchdl.netlist_to_json(netlist),
            "diagnostics": fchdl.diagnostics_to_json(netlist.diagnostics),
        }

    @app.post("/api/verify")
    async def verify_endpoint(request: Request):
        body = await _read_json(request)
        netlist = _parse_netlist_payload(body)
        spec = body.get("spec")
        if not isinstance(spec, dict):
            raise ApiError(400, "validation_error", "body needs a 'spec' object")
        config = _sim_config(body)
        try:
            if "rows" in spec:
                tt = verifier.TruthTableSpec.from_json(spec)
                for net in (*tt.input_nets, *tt.output_nets):
                    if net not in netlist.nets:
                        raise verifier.SpecNetUnknown(net)
                report = verifier.inspect(netlist, tt, config)
                findings = [f.message for f in report.all_findings()]
                return {
                    "review": report.review_text(),
                    "score": report.score,
                    "pass": report.passed,
                    "findings": findings,
                }
            if "expect" in spec:
                temporal = verifier.TemporalSpec.from_json(spec)
                findings = verifier.check_temporal(netlist, temporal, config)
                passed = not findings
                return {
                    "review": "\n".join(f.message for f in findings) or "all expectations met",
                    "score": 5 if passed else 2,
                    "pass": passed,
                    "findings": [f.message for f in findings],
                }
        except verifier.SpecNetUnknown as exc:
            raise ApiError(422, "spec_net_unknown", str(exc)) from exc
        except (KeyError, ValueError) as exc:
            raise ApiError(400, "validation_error", f"malformed spec: {exc}") from exc
        raise ApiError(400, "validation_error", "spec needs 'rows' or 'expect'")

    @app.post("/api/layout")
    async def layout_endpoint(request: Request):
        body = await _read_json(request)
        netlist = _parse_netlist_payload(body)
        config = _sa_config(body)
        try:
            result = layout.place(netlist, config)
        except layout.PlacementError as exc:
            raise ApiError(422, "placement_error", str(exc)) from exc
        payload = result.to_json()
        if body.get("svg"):
            payload["svg"] = layout.export_layout_svg(result, netlist)
        return payload

    @app.post("/api/patterns")
    async def patterns_endpoint(request: Request):
        body = await _read_json(request)
        shape = body.get("shape")
        if not shape:
            raise ApiError(400, "validation_error", "body needs 'shape'")
        kwargs = {
            k: body[k]
            for k in ("radius", "height", "length", "width", "angle")
            if k in body
        }
        try:
            result = patterns.calc_shape(shape, **kwargs)
        except KeyError as exc:
            raise ApiError(
                400, "validation_error", f"missing geometry argument {exc.args[0]!r}"
            ) from exc
        except patterns.PatternError as exc:
            raise ApiError(422, "pattern_error", str(exc)) from exc
        payload = result.to_json()
        payload["svg"] = patterns.pattern_svg(result)
        return payload

    @app.post("/api/sessions")
    def create_session(request_body: dict):
        netlist = _parse_netlist_payload(request_body)
        config = _sim_config(request_body)
        try:
            state = simulator.init_session(netlist, config)
        except simulator.InvalidNetlistError as exc:
            raise ApiError(422, "invalid_netlist", str(exc)) from exc
        except simulator.OscillationError as exc:
            raise ApiError(422, "oscillation", str(exc)) from exc
        autorun = bool(request_body.get("autorun", False))
        session = registry.create(state, config, autorun)
        if autorun:
            thread = threading.Thread(
                target=_autorun_loop, args=(registry, session), daemon=True
            )
            thread.start()
        return {"id": session.id, "state": session.state_json()}

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str):
        session = registry.get(session_id)
        with session.lock:
            session.touch()
            return session.state_json()

    @app.post("/api/sessions/{session_id}/inputs")
    def set_session_input(session_id: str, request_body: dict):
        session = registry.get(session_id)
        net = request_body.get("net")
        value = request_body.get("v")
        if net is None or value not in (0, 1):
            raise ApiError(400, "validation_error", "body needs 'net' and 'v' in {0,1}")
        with session.lock:
            session.touch()
            try:
                simulator.set_input(session.state, net, value)
            except simulator.NotAnInputError as exc:
                raise ApiError(422, "not_an_input", str(exc)) from exc
            except simulator.OscillationError as exc:
                raise ApiError(422, "oscillation", str(exc)) from exc
            session.push_events(session.state.last_events)
            return {
                "state": session.state_json(),
                "events": [
                    {"t": e.t, "net": e.net, "old": e.old, "new": e.new}
                    for e in session.state.last_events
                ],
            }

    @app.post("/api/sessions/{session_id}/step")
    def step_session(session_id: str, request_body: Optional[dict] = None):
        session = registry.get(session_id)
        body = request_body or {}
        dt = body.get("dt")
        if dt is not None and (not isinstance(dt, (int, float)) or dt <= 0):
            raise ApiError(400, "validation_error", "'dt' must be a positive number")
        with session.lock:
            session.touch()
            try:
                _, events = simulator.step(session.state, dt)
            except simulator.OscillationError as exc:
                raise ApiError(422, "oscillation", str(exc)) from exc
            session.push_events(events)
            return {
                "state": session.state_json(),
                "events": [
                    {"t": e.t, "net": e.net, "old": e.old, "new": e.new} for e in events
                ],
            }

    @app.post("/api/design/run")
    def design_run(request_body: dict):
        raw_project = request_body.get("project")
        if not isinstance(raw_project, dict):
            raise ApiError(400, "validation_error", "body needs a 'project' object")
        name = request_body.get("project_name", "default")
        pipeline_raw = request_body.get("pipeline_config") or {}
        try:
            project = DesignProject()
            project.set_design_goal(raw_project.get("design_goal", ""))
            project.set_inputs(raw_project.get("inputs", []))
            project.set_outputs(raw_project.get("outputs", []))
            project.set_conditions(raw_project.get("conditions", []))
        except (DocumentError, KeyError, TypeError) as exc:
            raise ApiError(422, "bad_project", str(exc)) from exc
        try:
            config = PipelineConfig(
                inspector_pass_threshold=pipeline_raw.get("inspector_pass_threshold", 4),
                max_review_rounds=pipeline_raw.get("max_review_rounds", 3),
                model=pipeline_raw.get("model", "gpt-4"),
                temperature=pipeline_raw.get("temperature"),
            )
        except ValueError as exc:
            raise ApiError(422, "bad_pipeline_config", str(exc)) from exc
        transport = transport_factory(pipeline_raw)
        sim_config = _sim_config(request_body)
        from .agents import PipelineError, TransportError

        try:
            return run_design_pipeline(
                project, config, transport, store, name, sim_config
            )
        except TransportError as exc:
            raise ApiError(422, "transport_error", str(exc)) from exc
        except PipelineError as exc:
            raise ApiError(422, "pipeline_error", str(exc)) from exc

    @app.get("/api/projects/{name}")
    def list_project(name: str):
        try:
            return {"documents": store.list_documents(name)}
        except DocumentError as exc:
            raise ApiError(400, "validation_error", str(exc)) from exc

    @app.get("/api/projects/{name}/{document}")
    def get_document(name: str, document: str):
        try:
            payload = store.read_bytes(name, document)
        except DocumentError as exc:
            raise ApiError(404, "unknown_document", str(exc)) from exc
        except FileNotFoundError:
            raise ApiError(404, "missing_document", f"{document} not written yet")
        return Response(content=payload, media_type="application/json")

    @app.put("/api/projects/{name}/{document}")
    async def put_document(name: str, document: str, request: Request):
        payload = await request.body()
        try:
            json.loads(payload.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ApiError(400, "validation_error", f"document must be JSON: {exc}") from exc
        try:
            store.write_bytes(name, document, payload)
        except DocumentError as exc:
            raise ApiError(404, "unknown_document", str(exc)) from exc
        return {"ok": True, "document": document}

    @app.websocket("/api/sessions/{session_id}/ws")
    async def session_ws(websocket: WebSocket, session_id: str):
        session = registry.peek(session_id)
        await websocket.accept()
        if session is None or registry.expired(session):
            await websocket.close(code=WS_CLOSE_EXPIRED, reason="session expired")
            return
        with session.lock:
            session.subscribers += 1
            snapshot = {"snapshot": session.state_json()}
            last_index = len(session.event_log)
        await websocket.send_text(json.dumps(snapshot))

        stop = asyncio.Event()

        async def reader():
            try:
                while not stop.is_set():
                    text = await websocket.receive_text()
                    try:
                        command = json.loads(text)
                    except json.JSONDecodeError:
                        continue
                    setter = command.get("set")
                    if isinstance(setter, dict) and "net" in setter and "v" in setter:
                        with session.lock:
                            session.touch()
                            try:
                                simulator.set_input(
                                    session.state, setter["net"], setter["v"]
                                )
                                session.push_events(session.state.last_events)
                            except simulator.SimulationError:
                                pass
            except WebSocketDisconnect:
                stop.set()

        async def writer():
            nonlocal last_index
            last_heartbeat = time.monotonic()
            try:
                while not stop.is_set():
                    if registry.expired(session):
                        await websocket.close(
                            code=WS_CLOSE_EXPIRED, reason="session expired"
                        )
                        stop.set()
                        return
                    with session.lock:
                        pendings = session.event_log[last_index:]
                        last_index = len(session.event_log)
                    for frame in pendings:
                        await websocket.send_text(
                            json.dumps({"t": frame["t"], "net": frame["net"], "v": frame["v"]})
                        )
                    now = time.monotonic()
                    if now - last_heartbeat >= HEARTBEAT_SECONDS:
                        await websocket.send_text(json.dumps({"heartbeat": True}))
                        last_heartbeat = now
                    await asyncio.sleep(_WS_POLL_SECONDS)
            except WebSocketDisconnect:
                stop.set()

        reader_task = asyncio.create_task(reader())
        writer_task = asyncio.create_task(writer())
        try:
            await asyncio.wait(
                {reader_task, writer_task}, return_when=asyncio.FIRST_COMPLETED
            )
        finally:
            stop.set()
            for task in (reader_task, writer_task):
                task.cancel()
            with session.lock:
                session.subscribers -= 1

    return app


def _autorun_loop(registry: SessionRegistry, session: Session) -> None:
    dt = session.config.dt
    while not registry.expired(session):
        start = time.monotonic()
        with session.lock:
            try:
                _, events = simulator.step(session.state, dt)
                session.push_events(events)
            except simulator.SimulationError:
                session.closed = True
                return
        time.sleep(max(0.0, dt - (time.monotonic() - start)))


def serve(host: str = "127.0.0.1", port: int = 8080, projects_dir: Optional[str] = None):
    import uvicorn

    uvicorn.run(create_app(projects_dir=projects_dir), host=host, port=port)
