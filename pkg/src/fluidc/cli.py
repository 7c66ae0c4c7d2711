"""Command-line interface mirroring every service capability.

Machine output is JSON on stdout; human diagnostics go to stderr.  Exit
codes: 0 success, 1 domain failure (verification findings, infeasible
placement), 2 usage or parse errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import fchdl, layout, patterns, simulator, verifier

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2


def _read_source(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text("utf-8")


def _load_netlist(path: str) -> fchdl.Netlist:
    """Accepts FC-HDL source or a netlist JSON document ('-' for stdin)."""
    text = _read_source(path)
    stripped = text.lstrip()
    if stripped.startswith("{"):
        data = json.loads(text)
        if "netlist" in data:
            data = data["netlist"]
        return fchdl.netlist_from_json(data)
    return fchdl.parse_circuit(text)


def _emit(payload: dict, output: str | None) -> None:
    text = json.dumps(payload, indent=2, ensure_ascii=False)
    if output:
        Path(output).write_text(text + "\n", "utf-8")
    else:
        print(text)


def _err(message: str) -> None:
    print(message, file=sys.stderr)


def _sim_config(args) -> simulator.SimConfig:
    return simulator.SimConfig(
        dt=args.dt,
        time_scale=args.time_scale,
    )


def cmd_compile(args) -> int:
    try:
        netlist = fchdl.parse_circuit(_read_source(args.source))
    except fchdl.CircuitError as exc:
        _err(f"parse error: {exc}")
        return EXIT_USAGE
    payload = {
        "netlist": fchdl.netlist_to_json(netlist),
        "diagnostics": fchdl.diagnostics_to_json(netlist.diagnostics),
    }
    _emit(payload, args.output)
    for diag in netlist.diagnostics:
        _err(f"{diag.severity}: {diag.message}")
    if netlist.has_errors():
        return EXIT_DOMAIN
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        netlist = _load_netlist(args.netlist)
    except (fchdl.CircuitError, json.JSONDecodeError, OSError) as exc:
        _err(f"cannot load netlist: {exc}")
        return EXIT_USAGE
    try:
        stimulus_data = json.loads(_read_source(args.stimulus))
        stimulus = simulator.Stimulus.from_json(stimulus_data)
    except (json.JSONDecodeError, KeyError, ValueError, OSError) as exc:
        _err(f"cannot load stimulus: {exc}")
        return EXIT_USAGE
    try:
        trace = simulator.run(netlist, stimulus, args.until, _sim_config(args))
    except simulator.SimulationError as exc:
        _err(f"simulation failed: {exc}")
        return EXIT_DOMAIN
    _emit(trace.to_json(), args.output)
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        netlist = _load_netlist(args.netlist)
        spec_data = json.loads(_read_source(args.spec))
    except (fchdl.CircuitError, json.JSONDecodeError, OSError) as exc:
        _err(f"cannot load inputs: {exc}")
        return EXIT_USAGE
    config = _sim_config(args)
    try:
        if "rows" in spec_data:
            spec = verifier.TruthTableSpec.from_json(spec_data)
            report = verifier.inspect(netlist, spec, config)
            findings = [f.message for f in report.all_findings()]
            payload = {
                "review": report.review_text(),
                "score": report.score,
                "pass": report.passed,
                "findings": findings,
            }
            failed = not report.passed
        elif "expect" in spec_data:
            spec = verifier.TemporalSpec.from_json(spec_data)
            temporal_findings = verifier.check_temporal(netlist, spec, config)
            payload = {
                "review": "\n".join(f.message for f in temporal_findings)
                or "all expectations met",
                "score": 5 if not temporal_findings else 2,
                "pass": not temporal_findings,
                "findings": [f.message for f in temporal_findings],
            }
            failed = bool(temporal_findings)
        else:
            _err("spec must contain 'rows' (truth table) or 'expect' (temporal)")
            return EXIT_USAGE
    except verifier.SpecNetUnknown as exc:
        _err(str(exc))
        return EXIT_USAGE
    _emit(payload, args.output)
    for finding in payload["findings"]:
        _err(f"finding: {finding}")
    return EXIT_DOMAIN if failed else EXIT_OK


def cmd_layout(args) -> int:
    try:
        netlist = _load_netlist(args.netlist)
    except (fchdl.CircuitError, json.JSONDecodeError, OSError) as exc:
        _err(f"cannot load netlist: {exc}")
        return EXIT_USAGE
    config = layout.SAConfig(seed=args.seed)
    try:
        if args.restarts > 1:
            result = layout.place_best_of(netlist, config, args.restarts)
        else:
            result = layout.place(netlist, config)
    except layout.PlacementError as exc:
        _err(f"placement failed: {exc}")
        return EXIT_DOMAIN
    _emit(result.to_json(), args.output)
    if args.svg:
        Path(args.svg).write_text(layout.export_layout_svg(result, netlist), "utf-8")
    if not result.feasible:
        _err("placement infeasible: overlap remains at the end of the schedule")
        return EXIT_DOMAIN
    return EXIT_OK


def cmd_pattern(args) -> int:
    kwargs = {}
    for key in ("radius", "height", "length", "width", "angle"):
        value = getattr(args, key, None)
        if value is not None:
            kwargs[key] = value
    try:
        result = patterns.calc_shape(args.shape, **kwargs)
    except KeyError as exc:
        _err(f"missing required geometry --{exc.args[0]}")
        return EXIT_USAGE
    except patterns.PatternError as exc:
        _err(f"pattern error: {exc}")
        return EXIT_DOMAIN
    payload = result.to_json()
    _emit(payload, args.output)
    if args.svg:
        Path(args.svg).write_text(patterns.pattern_svg(result), "utf-8")
    return EXIT_OK


def cmd_design(args) -> int:
    from .agents import (
        HttpTransport,
        MockTransport,
        PipelineConfig,
        PipelineError,
        ProjectStore,
        TransportError,
        run_design_pipeline,
    )

    project_dir = Path(args.project)
    if not project_dir.exists():
        _err(f"project directory {project_dir} does not exist")
        return EXIT_USAGE
    store = ProjectStore(project_dir.parent)
    name = project_dir.name
    project = store.load_project(name)
    if not project.all_documents_present():
        missing = [k for k, v in project.flags.items() if not v]
        _err("project documents missing: " + ", ".join(missing))
        return EXIT_USAGE
    if args.mock:
        transport = MockTransport(args.mock)
    elif args.endpoint:
        transport = HttpTransport(
            base_url=args.endpoint, model=args.model, token_env=args.token_env
        )
    else:
        _err("need --mock FIXTURES or --endpoint URL")
        return EXIT_USAGE
    config = PipelineConfig(
        inspector_pass_threshold=args.pass_threshold,
        max_review_rounds=args.max_rounds,
        model=args.model,
    )
    sim_config = simulator.SimConfig(time_scale=args.time_scale)
    try:
        artifacts = run_design_pipeline(project, config, transport, store, name, sim_config)
    except (TransportError, PipelineError) as exc:
        _err(f"pipeline failed: {exc}")
        return EXIT_DOMAIN
    _emit(artifacts, args.output)
    return EXIT_OK


def cmd_serve(args) -> int:
    from .server import serve

    serve(host=args.host, port=args.port, projects_dir=args.projects_dir)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fluidc",
        description="Fluidic logic circuit toolkit: compile, simulate, verify, "
        "place, generate heat-seal patterns, run the design pipeline, serve.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="parse FC-HDL into a netlist JSON")
    p.add_argument("source", help="FC-HDL file, or - for stdin")
    p.add_argument("-o", "--output", help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("simulate", help="run a stimulus against a netlist")
    p.add_argument("netlist", help="netlist JSON or FC-HDL file, or - for stdin")
    p.add_argument("--stimulus", required=True, help="stimulus JSON file")
    p.add_argument("--until", type=float, required=True, help="simulated seconds")
    p.add_argument("--dt", type=float, default=0.1)
    p.add_argument("--time-scale", type=float, default=1.0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="check a truth-table or temporal spec")
    p.add_argument("netlist")
    p.add_argument("--spec", required=True, help="spec JSON file")
    p.add_argument("--dt", type=float, default=0.1)
    p.add_argument("--time-scale", type=float, default=1.0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("layout", help="place operators with simulated annealing")
    p.add_argument("netlist")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--restarts", type=int, default=1)
    p.add_argument("--svg", help="also write an SVG rendering here")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_layout)

    p = sub.add_parser("pattern", help="heat-seal pattern for an airbag shape")
    p.add_argument("shape", choices=["sphere", "cylinder", "box", "fold", "bend"])
    p.add_argument("--radius", type=float)
    p.add_argument("--height", type=float)
    p.add_argument("--length", type=float)
    p.add_argument("--width", type=float)
    p.add_argument("--angle", type=float)
    p.add_argument("--svg", help="also write the pattern SVG here")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_pattern)

    p = sub.add_parser("design", help="run the agent pipeline on a project")
    p.add_argument("--project", required=True, help="project directory")
    p.add_argument("--mock", help="mock-transport fixture directory")
    p.add_argument("--endpoint", help="chat-completions base URL")
    p.add_argument("--model", default="gpt-4")
    p.add_argument("--token-env", default="FLUIDC_LLM_TOKEN")
    p.add_argument("--pass-threshold", type=int, default=4)
    p.add_argument("--max-rounds", type=int, default=3)
    p.add_argument("--time-scale", type=float, default=1.0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("serve", help="start the HTTP/WebSocket service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--projects-dir")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
