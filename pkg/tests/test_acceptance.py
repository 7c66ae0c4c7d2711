"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL
line with its runtime (run with ``pytest tests/test_acceptance.py -s``).

Criterion 5's second assertion ("Output I falls after A=1 alone") is
implemented exactly as stated and marked as a strict expected failure: the
published corrected circuit computes Q = (not A) or (not B), so with B
still 0 the output provably stays high; see the companion test asserting
the fall once both inputs are released.  The analysis lives in the
project's decision notes.
"""

import random
import time
from contextlib import contextmanager
from itertools import product

import pytest

from fluidc.fchdl import (
    netlist_to_json,
    parse_circuit,
    serialize_circuit,
    structurally_equal,
    validate_netlist,
)
from fluidc.layout import SAConfig, layout_cost, place
from fluidc.patterns import calc_bend, calc_sphere
from fluidc.simulator import (
    CompiledCircuit,
    SimConfig,
    Stimulus,
    init_session,
    run,
    set_input,
    settle_assignment,
    step,
)
from fluidc.verifier import TruthTableSpec, inspect

from conftest import (
    INSOLE_FAULTY,
    INSOLE_CIRCUIT,
    insole_scripted_transport,
    corpus_circuits,
)
from oracles import eval_combinational, exhaustive_layout_optimum, random_gate_netlist
from test_agents import io_designer_script


@contextmanager
def criterion(number: int, name: str, budget_s: float):
    start = time.perf_counter()
    try:
        yield
    except BaseException:
        elapsed = time.perf_counter() - start
        print(f"ACCEPTANCE {number} ({name}): FAIL in {elapsed:.2f}s")
        raise
    elapsed = time.perf_counter() - start
    print(f"ACCEPTANCE {number} ({name}): PASS in {elapsed:.2f}s")
    assert elapsed < budget_s, f"criterion {number} exceeded budget {budget_s}s"


def test_criterion_01_pattern_regression():
    with criterion(1, "pattern regression", 1.0):
        bend = calc_bend(60, 10, 45)
        assert bend.seal_inset == pytest.approx(3.33, abs=0.01)
        assert bend.tab_spacing == pytest.approx(8.08, abs=0.01)
        assert bend.crease_pitch == pytest.approx(20, abs=0.01)
        assert bend.crease_count == 2
        sphere = calc_sphere(12.7)
        assert sphere.length == pytest.approx(79.80, abs=0.10)
        assert sphere.width == pytest.approx(39.90, abs=0.10)
        assert sphere.tab_spacing == pytest.approx(4.99, abs=0.05)


def test_criterion_02_circuit_corpus():
    with criterion(2, "circuit corpus", 1.0):
        corpus = corpus_circuits()
        assert len(corpus) >= 12
        for text in corpus:
            netlist = parse_circuit(text)
            assert not netlist.has_errors(), text
            validate_netlist(netlist)
            again = parse_circuit(serialize_circuit(netlist))
            assert structurally_equal(netlist, again), text


def test_criterion_03_combinational_oracle_equivalence():
    with criterion(3, "combinational oracle equivalence", 30.0):
        # every single-gate circuit over all assignments
        singles = [
            "NOT(A; Q)",
            "OR(A, B; Q)",
            "AND(A, B; Q)",
            "NOR(A, B; Q)",
            "NAND(A, B; Q)",
            "XOR(A, B; Q)",
            "Diode(A, forward; Q)",
            "Diode(A, backward; Q)",
            "Multiplexer(D0, D1, D2, D3; S1, S2; Q)",
            "Demultiplexer(In; S1, S2; D0, D1, D2, D3)",
        ]
        for text in singles:
            netlist = parse_circuit(text)
            compiled = CompiledCircuit(netlist, SimConfig())
            inputs = sorted(netlist.primary_inputs)
            for combo in product((0, 1), repeat=len(inputs)):
                assignment = dict(zip(inputs, combo))
                assert settle_assignment(compiled, assignment) == eval_combinational(
                    netlist, assignment
                ), text

        rng = random.Random(2024)
        for index in range(1000):
            netlist = random_gate_netlist(rng, max_inputs=8, max_gates=15)
            compiled = CompiledCircuit(netlist, SimConfig())
            inputs = sorted(netlist.primary_inputs)
            for combo in product((0, 1), repeat=len(inputs)):
                assignment = dict(zip(inputs, combo))
                settled = settle_assignment(compiled, assignment)
                direct = eval_combinational(netlist, assignment)
                assert settled == direct, (index, assignment)


def test_criterion_04_timed_operator_semantics():
    with criterion(4, "timed operator semantics", 5.0):
        dt = 0.1
        # timer reset: rise at t=16 +- 1 tick
        trace = run(
            parse_circuit("Timer(A, 10; Q)"),
            Stimulus.from_events([(0, "A", 1), (5, "A", 0), (6, "A", 1)]),
            until=20,
            config=SimConfig(dt=dt),
        )
        rises = [e.t for e in trace.events if e.net == "Q" and e.new == 1]
        assert len(rises) == 1 and rises[0] == pytest.approx(16.0, abs=dt + 1e-9)

        # edge detector pulse width tau +- 1 tick
        tau = 0.5
        trace = run(
            parse_circuit(f"EdgeDetector(A; Q, {tau})"),
            Stimulus.from_events([(1.0, "A", 1)]),
            until=3.0,
            config=SimConfig(dt=dt),
        )
        high = sum(dt for _, snap in trace.samples if snap["Q"] == 1)
        assert high == pytest.approx(tau, abs=dt + 1e-9)

        # filter passes at f, rejects at 0.3f and 3f
        f = 1.0
        netlist = parse_circuit(f"Filter(A, {f}; Q)")
        for mult, expected in ((1.0, True), (0.3, False), (3.0, False)):
            period = 1.0 / (f * mult)
            events, t, i = [], 0.0, 0
            while t < 12.0:
                events.append((round(t, 4), "A", 1 if i % 2 == 0 else 0))
                t += period / 2
                i += 1
            trace = run(
                netlist, Stimulus.from_events(events), until=12.0, config=SimConfig(dt=dt)
            )
            locked = any(e.net == "Q" and e.new == 1 for e in trace.events)
            assert locked is expected, f"filter at {mult}x target"

        # register: tracks when E=0, holds when E=1
        state = init_session(parse_circuit("Register(D, E; Q, iQ)"))
        set_input(state, "D", 1)
        assert state.net_values["Q"] == 1 and state.net_values["iQ"] == 0
        set_input(state, "E", 1)
        set_input(state, "D", 0)
        step(state)
        assert state.net_values["Q"] == 1, "register must hold while E=1"


INSOLE_CONFIG = SimConfig(dt=0.1, time_scale=0.001)
INSOLE_STATED_STIMULUS = Stimulus.from_events([(0, "A", 0), (0, "B", 0), (2.0, "A", 1)])


def test_criterion_05_insole_rise():
    with criterion(5, "insole end-to-end rise at 1.8 s", 5.0):
        trace = run(parse_circuit(INSOLE_CIRCUIT), INSOLE_STATED_STIMULUS, 3.0, INSOLE_CONFIG)
        rises = [e.t for e in trace.events if e.net == "Output I" and e.new == 1]
        assert len(rises) == 1
        assert rises[0] == pytest.approx(1.8, abs=2 * INSOLE_CONFIG.dt + 1e-9)


@pytest.mark.xfail(
    strict=True,
    reason="as-stated stimulus cannot produce a fall: the corrected circuit "
    "computes Q = NOT(A) OR NOT(B), so with B held 0 the walking condition "
    "remains true after A=1 and Output I stays high (see decision notes)",
)
def test_criterion_05_insole_fall_as_stated():
    with criterion(5, "insole end-to-end fall after A=1 (as stated)", 5.0):
        trace = run(parse_circuit(INSOLE_CIRCUIT), INSOLE_STATED_STIMULUS, 3.0, INSOLE_CONFIG)
        falls = [
            e.t
            for e in trace.events
            if e.net == "Output I" and e.new == 0 and e.t > 1.8
        ]
        assert falls, "Output I never fell after A=1"


def test_criterion_05_insole_fall_when_walking_stops():
    """Companion check: the output falls once both inputs are released."""
    with criterion(5, "insole fall when A=B=1", 5.0):
        stimulus = Stimulus.from_events(
            [(0, "A", 0), (0, "B", 0), (2.0, "A", 1), (2.0, "B", 1)]
        )
        trace = run(parse_circuit(INSOLE_CIRCUIT), stimulus, 3.0, INSOLE_CONFIG)
        falls = [e.t for e in trace.events if e.net == "Output I" and e.new == 0]
        assert falls and falls[0] == pytest.approx(2.0, abs=2 * INSOLE_CONFIG.dt + 1e-9)


def insole_truth_spec() -> TruthTableSpec:
    return TruthTableSpec(
        input_nets=("A", "B"),
        output_nets=("Output I",),
        rows=(
            ({"A": 0, "B": 0}, {"Output I": 1}),
            ({"A": 0, "B": 1}, {"Output I": 1}),
            ({"A": 1, "B": 0}, {"Output I": 1}),
            ({"A": 1, "B": 1}, {"Output I": 0}),
        ),
    )


def test_criterion_06_inspector_mechanization():
    with criterion(6, "inspector mechanization", 5.0):
        spec = insole_truth_spec()
        faulty = inspect(parse_circuit(INSOLE_FAULTY), spec, INSOLE_CONFIG)
        assert faulty.truth_table_findings, "faulty variant must be flagged"
        assert faulty.score <= 3
        assert any("inversion" in f.message for f in faulty.truth_table_findings)
        corrected = inspect(parse_circuit(INSOLE_CIRCUIT), spec, INSOLE_CONFIG)
        assert corrected.score == 5


def test_criterion_07_layout_properties():
    with criterion(7, "layout properties", 120.0):
        # seeded determinism
        netlist = parse_circuit(INSOLE_CIRCUIT)
        config = SAConfig(seed=13)
        assert place(netlist, config).to_json() == place(netlist, config).to_json()

        # final cost never exceeds the initial placement's cost
        rng = random.Random(99)
        light = dict(moves_per_epoch=50, stall_epochs=5)
        for _ in range(100):
            candidate = random_gate_netlist(rng, max_inputs=6, max_gates=12)
            result = place(candidate, SAConfig(seed=rng.randrange(1 << 30), **light))
            assert result.cost.total <= result.initial_cost + 1e-9

        # zero overlap on the fixture circuits with the default config
        for text in (
            INSOLE_CIRCUIT,
            INSOLE_FAULTY,
            "XOR(a, b; S1) XOR(S1, cin; sum)",
            "Filter(input, 3; output)",
            "NOT(NOT_A;A) EdgeDetector(A; Q, 0.5)",
        ):
            result = place(parse_circuit(text), SAConfig(seed=5))
            assert result.feasible, text
            check = layout_cost(result.placement, parse_circuit(text))
            assert check.overlap_cells == 0, text

        # small instances land within 10% of the exhaustive optimum
        for text in ("NOT(A; C) AND(C, B; Q)", "NOT(A; C) AND(C, B; Q) NOT(Q; R)"):
            instance = parse_circuit(text)
            best_total, _, _ = exhaustive_layout_optimum(instance, grid=10)
            good = 0
            for seed in range(1, 21):
                result = place(instance, SAConfig(seed=seed, grid=10))
                assert result.cost.overlap_cells == 0
                achieved = result.cost.total
                if achieved <= 1.10 * best_total + 1e-9:
                    good += 1
            assert good >= 18, f"{text}: only {good}/20 seeds within 10%"


def test_criterion_08_agent_pipeline_offline(tmp_path, insole_project):
    from fluidc.agents import (
        CountingTransport,
        MockTransport,
        PipelineConfig,
        ProjectStore,
        RecordingTransport,
        ScriptedTransport,
        run_design_pipeline,
    )
    from fluidc.agents.project import DOCUMENT_NAMES, DesignProject

    with criterion(8, "agent pipeline offline", 5.0):
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
            INSOLE_CONFIG,
        )

        # replay over the fixture directory and count engineer calls
        replay = DesignProject.from_documents(dict(insole_project.documents()))
        counting = CountingTransport(MockTransport(fixtures))
        store = ProjectStore(tmp_path / "projects")
        artifacts = run_design_pipeline(
            replay, PipelineConfig(), counting, store, "insole", INSOLE_CONFIG
        )
        engineer_calls = sum(
            1
            for request in counting.requests
            if "you are a circuit engineer" in request["messages"][0]["content"].lower()
        )
        assert engineer_calls == 2
        assert artifacts["accepted"] is True

        # every persisted file name matches the write_* document set
        written = sorted(p.name for p in (tmp_path / "projects" / "insole").iterdir())
        assert set(written) <= set(DOCUMENT_NAMES)
        assert {
            "design_goal.json",
            "input_module.json",
            "output_module.json",
            "computation_module.json",
            "circuit.json",
            "review.json",
            "io_design.json",
        } == set(written)

        # the persisted circuit passes the insole trace verification
        circuit_text = store.read_json("insole", "circuit.json")["circuit"]
        netlist = parse_circuit(circuit_text)
        trace = run(netlist, INSOLE_STATED_STIMULUS, 3.0, INSOLE_CONFIG)
        rises = [e.t for e in trace.events if e.net == "Output I" and e.new == 1]
        assert rises and rises[0] == pytest.approx(1.8, abs=2 * INSOLE_CONFIG.dt + 1e-9)
        stop = Stimulus.from_events(
            [(0, "A", 0), (0, "B", 0), (2.0, "A", 1), (2.0, "B", 1)]
        )
        trace = run(netlist, stop, 3.0, INSOLE_CONFIG)
        assert any(e.net == "Output I" and e.new == 0 for e in trace.events)


def test_criterion_09_service_parity_and_isolation(tmp_path):
    from concurrent.futures import ThreadPoolExecutor

    from fastapi.testclient import TestClient

    from fluidc.server import create_app

    with criterion(9, "service parity and isolation", 30.0):
        app = create_app(projects_dir=str(tmp_path))
        with TestClient(app) as client:
            # /api/compile equals direct parse_circuit over the corpus
            for text in corpus_circuits():
                body = client.post("/api/compile", json={"circuit": text}).json()
                assert body["netlist"] == netlist_to_json(parse_circuit(text))

            # ten concurrent sessions, interleaved workloads, no cross-talk
            sids = [
                client.post("/api/sessions", json={"circuit": "NOT(A; Q)"}).json()["id"]
                for _ in range(10)
            ]

            def workload(pair):
                index, sid = pair
                observed = []
                for k in range(10):
                    value = (index + k) % 2
                    response = client.post(
                        f"/api/sessions/{sid}/inputs", json={"net": "A", "v": value}
                    ).json()
                    observed.append(response["state"]["values"]["A"])
                    client.post(f"/api/sessions/{sid}/step", json={})
                return observed, client.get(f"/api/sessions/{sid}").json()

            with ThreadPoolExecutor(max_workers=8) as pool:
                results = list(pool.map(workload, enumerate(sids)))
            for index, (observed, final) in enumerate(results):
                # linearizability: each response reflects this session's own
                # serialized order (the input just applied)
                assert observed == [(index + k) % 2 for k in range(10)]
                expected_a = (index + 9) % 2
                assert final["values"]["A"] == expected_a
                assert final["values"]["Q"] == 1 - expected_a
                assert final["t"] == pytest.approx(1.0)
