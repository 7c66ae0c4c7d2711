import json

import pytest

from fluidc.cli import main

from conftest import INSOLE_CIRCUIT, insole_scripted_transport, corpus_circuits
from test_agents import io_designer_script


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestCompile:
    def test_file_to_json(self, tmp_path, capsys):
        source = tmp_path / "c.fchdl"
        source.write_text("NOT(A; Q)")
        code, out, err = run_cli(capsys, "compile", str(source))
        assert code == 0
        body = json.loads(out)
        assert body["netlist"]["operators"][0]["kind"] == "NOT"

    def test_stdin_dash(self, tmp_path, capsys, monkeypatch):
        import io
        monkeypatch.setattr("sys.stdin", io.StringIO("AND(A, B; Q)"))
        code, out, _ = run_cli(capsys, "compile", "-")
        assert code == 0
        assert json.loads(out)["netlist"]["inputs"] == ["A", "B"]

    def test_syntax_error_exit_2_with_offset(self, tmp_path, capsys):
        source = tmp_path / "bad.fchdl"
        source.write_text("NOT(A; Q")
        code, out, err = run_cli(capsys, "compile", str(source))
        assert code == 2
        assert out == ""
        assert "offset 3" in err

    def test_hard_diagnostics_exit_1(self, tmp_path, capsys):
        source = tmp_path / "multi.fchdl"
        source.write_text("AND(A, B; Q) OR(C, D; Q)")
        code, out, err = run_cli(capsys, "compile", str(source))
        assert code == 1
        assert "MultipleDrivers" in json.dumps(json.loads(out))

    def test_output_file(self, tmp_path, capsys):
        source = tmp_path / "c.fchdl"
        source.write_text("NOT(A; Q)")
        out_file = tmp_path / "netlist.json"
        code, out, _ = run_cli(capsys, "compile", str(source), "-o", str(out_file))
        assert code == 0
        assert out == ""
        assert json.loads(out_file.read_text())["netlist"]["outputs"] == ["Q"]


class TestSimulate:
    def test_trace_json(self, tmp_path, capsys):
        circuit = tmp_path / "c.fchdl"
        circuit.write_text("AND(A, B; Q)")
        stimulus = tmp_path / "stim.json"
        stimulus.write_text(json.dumps([
            {"t": 0, "net": "A", "v": 1},
            {"t": 1.0, "net": "B", "v": 1},
        ]))
        code, out, _ = run_cli(
            capsys, "simulate", str(circuit), "--stimulus", str(stimulus), "--until", "2",
        )
        assert code == 0
        trace = json.loads(out)
        rises = [e for e in trace["events"] if e["net"] == "Q" and e["new"] == 1]
        assert len(rises) == 1
        assert abs(rises[0]["t"] - 1.0) < 0.11

    def test_netlist_json_input(self, tmp_path, capsys):
        circuit = tmp_path / "c.fchdl"
        circuit.write_text("NOT(A; Q)")
        compiled = tmp_path / "n.json"
        run_cli(capsys, "compile", str(circuit), "-o", str(compiled))
        stimulus = tmp_path / "stim.json"
        stimulus.write_text(json.dumps([{"t": 0.5, "net": "A", "v": 1}]))
        code, out, _ = run_cli(
            capsys, "simulate", str(compiled), "--stimulus", str(stimulus), "--until", "1",
        )
        assert code == 0
        assert json.loads(out)["samples"][0]["values"] == {"A": 0, "Q": 1}


class TestVerify:
    def test_pass_exit_0(self, tmp_path, capsys):
        circuit = tmp_path / "insole.fchdl"
        circuit.write_text(INSOLE_CIRCUIT)
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({
            "inputs": ["A", "B"],
            "outputs": ["Output I"],
            "rows": [
                {"in": {"A": 0, "B": 0}, "out": {"Output I": 1}},
                {"in": {"A": 1, "B": 1}, "out": {"Output I": 0}},
            ],
        }))
        code, out, _ = run_cli(
            capsys, "verify", str(circuit), "--spec", str(spec), "--time-scale", "0.001",
        )
        assert code == 0
        assert json.loads(out)["score"] == 5

    def test_findings_exit_1(self, tmp_path, capsys):
        circuit = tmp_path / "and.fchdl"
        circuit.write_text("AND(A, B; Q)")
        spec = tmp_path / "spec.json"
        spec.write_text(json.dumps({
            "inputs": ["A", "B"],
            "outputs": ["Q"],
            "rows": [{"in": {"A": 1, "B": 0}, "out": {"Q": 1}}],
        }))
        code, out, err = run_cli(capsys, "verify", str(circuit), "--spec", str(spec))
        assert code == 1
        assert "finding:" in err


class TestLayout:
    def test_layout_json_and_svg(self, tmp_path, capsys):
        circuit = tmp_path / "c.fchdl"
        circuit.write_text(INSOLE_CIRCUIT)
        svg = tmp_path / "layout.svg"
        code, out, _ = run_cli(
            capsys, "layout", str(circuit), "--seed", "7", "--svg", str(svg),
        )
        assert code == 0
        body = json.loads(out)
        assert body["cost"]["overlap"] == 0
        assert body["seed"] == 7
        assert svg.read_text().count('class="operator"') == 5

    def test_restarts(self, tmp_path, capsys):
        circuit = tmp_path / "c.fchdl"
        circuit.write_text("NOT(A; C) AND(C, B; Q)")
        code, out, _ = run_cli(capsys, "layout", str(circuit), "--restarts", "3")
        assert code == 0


class TestPattern:
    def test_bend_reference_values(self, capsys):
        code, out, _ = run_cli(
            capsys, "pattern", "bend", "--length", "60", "--width", "10", "--angle", "45",
        )
        assert code == 0
        body = json.loads(out)
        assert body["d"] == pytest.approx(8.08)
        assert body["n"] == 2

    def test_missing_geometry_exit_2(self, capsys):
        code, _, err = run_cli(capsys, "pattern", "sphere")
        assert code == 2
        assert "radius" in err

    def test_domain_error_exit_1(self, capsys):
        code, _, err = run_cli(
            capsys, "pattern", "bend", "--length", "60", "--width", "10", "--angle", "5",
        )
        assert code == 1

    def test_svg_written(self, tmp_path, capsys):
        svg = tmp_path / "p.svg"
        code, _, _ = run_cli(
            capsys, "pattern", "sphere", "--radius", "12.7", "--svg", str(svg),
        )
        assert code == 0
        assert svg.read_text().startswith("<?xml")


class TestDesign:
    def test_mock_pipeline(self, tmp_path, capsys, insole_project):
        from fluidc.agents import ProjectStore, RecordingTransport, ScriptedTransport
        from fluidc.agents.pipeline import PipelineConfig, run_design_pipeline
        from fluidc.simulator import SimConfig

        fixtures = tmp_path / "fixtures"
        scripted = ScriptedTransport(
            insole_scripted_transport().responses + io_designer_script()
        )
        run_design_pipeline(
            insole_project,
            PipelineConfig(),
            RecordingTransport(scripted, fixtures),
            ProjectStore(tmp_path / "seed"),
            "insole",
            SimConfig(time_scale=0.001),
        )
        # materialize the project documents for the CLI run
        store = ProjectStore(tmp_path / "projects")
        for doc, payload in insole_project.documents().items():
            store.write_json("insole", doc, payload)

        code, out, _ = run_cli(
            capsys,
            "design",
            "--project", str(tmp_path / "projects" / "insole"),
            "--mock", str(fixtures),
            "--time-scale", "0.001",
        )
        assert code == 0
        body = json.loads(out)
        assert body["accepted"] is True
        assert body["rounds"] == 2
        assert (tmp_path / "projects" / "insole" / "circuit.json").exists()

    def test_missing_documents_exit_2(self, tmp_path, capsys):
        project = tmp_path / "projects" / "empty"
        project.mkdir(parents=True)
        code, _, err = run_cli(
            capsys, "design", "--project", str(project), "--mock", str(tmp_path),
        )
        assert code == 2
        assert "missing" in err


class TestUsage:
    def test_unknown_subcommand_exit_2(self, capsys):
        assert main(["frobnicate"]) == 2

    def test_cli_service_parity_on_patterns(self, capsys):
        from fastapi.testclient import TestClient
        from fluidc.server import create_app

        code, out, _ = run_cli(
            capsys, "pattern", "bend", "--length", "60", "--width", "10", "--angle", "45",
        )
        cli_body = json.loads(out)
        with TestClient(create_app(projects_dir="/tmp/parity-projects")) as client:
            service_body = client.post(
                "/api/patterns",
                json={"shape": "bend", "length": 60, "width": 10, "angle": 45},
            ).json()
        service_body.pop("svg")
        assert cli_body == service_body

    def test_cli_service_parity_on_compile(self, tmp_path, capsys):
        from fastapi.testclient import TestClient
        from fluidc.server import create_app

        with TestClient(create_app(projects_dir=str(tmp_path))) as client:
            for text in corpus_circuits():
                source = tmp_path / "c.fchdl"
                source.write_text(text)
                code, out, _ = run_cli(capsys, "compile", str(source))
                cli_body = json.loads(out)
                service_body = client.post("/api/compile", json={"circuit": text}).json()
                assert cli_body == service_body
