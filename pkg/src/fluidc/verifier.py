"""Deterministic circuit inspection: truth tables, temporal specs,
redundancy, and a 1-5 scoring rubric.

Truth tables over purely combinational circuits are checked by settling
each row.  Circuits containing Timer/Filter/EdgeDetector operators are
lowered to temporal runs: each row's inputs are held for a configurable
duration (default twice the largest Timer threshold) and the outputs are
sampled at the end of the hold.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from itertools import product
from typing import Optional

from .fchdl import (
    Netlist,
    OperatorKind,
    parse_circuit,
    reachable_operators,
    CircuitError,
)
from .simulator import (
    CompiledCircuit,
    SimConfig,
    Stimulus,
    run,
    settle_assignment,
)

TIMED_KINDS = (OperatorKind.TIMER, OperatorKind.FILTER, OperatorKind.EDGE_DETECTOR)

DEFAULT_PASS_THRESHOLD = 4


class SpecNetUnknown(ValueError):
    def __init__(self, net):
        self.net = net
        super().__init__(f"spec references net {net!r} absent from the netlist")


@dataclass(frozen=True)
class TruthTableSpec:
    input_nets: tuple[str, ...]
    output_nets: tuple[str, ...]
    rows: tuple[tuple[dict, dict], ...]  # (input assignment, expected outputs)
    hold: Optional[float] = None  # seconds per row for timed circuits

    def __post_init__(self):
        seen = set()
        for inputs, outputs in self.rows:
            key = tuple(sorted(inputs.items()))
            if key in seen:
                raise ValueError(f"duplicate input assignment {inputs}")
            seen.add(key)
            missing = set(self.output_nets) - set(outputs)
            if missing:
                raise ValueError(f"row missing expected outputs {sorted(missing)}")

    @property
    def complete(self) -> bool:
        return len(self.rows) == 2 ** len(self.input_nets)

    @classmethod
    def from_json(cls, data: dict) -> "TruthTableSpec":
        rows = tuple(
            (dict(row["in"]), dict(row["out"])) for row in data["rows"]
        )
        return cls(
            input_nets=tuple(data["inputs"]),
            output_nets=tuple(data["outputs"]),
            rows=rows,
            hold=data.get("hold"),
        )

    def to_json(self) -> dict:
        out = {
            "inputs": list(self.input_nets),
            "outputs": list(self.output_nets),
            "rows": [{"in": dict(i), "out": dict(o)} for i, o in self.rows],
        }
        if self.hold is not None:
            out["hold"] = self.hold
        return out


@dataclass(frozen=True)
class TemporalSpec:
    stimulus: Stimulus
    expectations: tuple[tuple[float, str, int, float], ...]  # (t, net, expected, window)
    until: Optional[float] = None

    @classmethod
    def from_json(cls, data: dict) -> "TemporalSpec":
        return cls(
            stimulus=Stimulus.from_json(data.get("stimulus", [])),
            expectations=tuple(
                (float(e["t"]), e["net"], int(e["v"]), float(e.get("w", 0.1)))
                for e in data["expect"]
            ),
            until=data.get("until"),
        )

    def to_json(self) -> dict:
        out = {
            "stimulus": self.stimulus.to_json(),
            "expect": [
                {"t": t, "net": n, "v": v, "w": w} for t, n, v, w in self.expectations
            ],
        }
        if self.until is not None:
            out["until"] = self.until
        return out


@dataclass(frozen=True)
class Finding:
    category: str  # truth_table | grammar | redundancy | temporal | other
    message: str
    location: str = ""


@dataclass
class InspectionReport:
    truth_table_findings: list[Finding] = field(default_factory=list)
    grammar_findings: list[Finding] = field(default_factory=list)
    redundancy_findings: list[Finding] = field(default_factory=list)
    other_findings: list[Finding] = field(default_factory=list)
    score: int = 5
    pass_threshold: int = DEFAULT_PASS_THRESHOLD

    @property
    def passed(self) -> bool:
        return self.score >= self.pass_threshold

    def all_findings(self) -> list[Finding]:
        return (
            self.grammar_findings
            + self.truth_table_findings
            + self.redundancy_findings
            + self.other_findings
        )

    def review_text(self) -> str:
        if not self.all_findings():
            return "No issues found; the circuit matches the specification."
        lines = []
        for f in self.all_findings():
            loc = f" [{f.location}]" if f.location else ""
            lines.append(f"{f.category}: {f.message}{loc}")
        return "\n".join(lines)

    def to_json(self) -> dict:
        return {"review": self.review_text(), "score": self.score}


def _check_spec_nets(netlist: Netlist, nets) -> None:
    for net in nets:
        if net not in netlist.nets:
            raise SpecNetUnknown(net)


def _has_timed(netlist: Netlist) -> bool:
    return any(op.kind in TIMED_KINDS for op in netlist.operators)


def _default_hold(netlist: Netlist, config: SimConfig) -> float:
    timers = [
        op.params[0] for op in netlist.operators if op.kind is OperatorKind.TIMER
    ]
    base = 2.0 * max(timers) * config.time_scale if timers else 0.0
    return max(base, 10.0 * config.dt)


def _row_outputs_static(
    compiled: CompiledCircuit, inputs: dict, extra_zero: tuple[str, ...]
) -> dict[str, int]:
    assignment = {net: 0 for net in extra_zero}
    assignment.update(inputs)
    return settle_assignment(compiled, assignment)


def _row_outputs_timed(
    netlist: Netlist, inputs: dict, hold: float, config: SimConfig
) -> dict[str, int]:
    events = [(0.0, net, int(v)) for net, v in sorted(inputs.items())]
    trace = run(netlist, Stimulus.from_events(events), until=hold, config=config)
    return trace.samples[-1][1]


def check_truth_table(
    netlist: Netlist,
    spec: TruthTableSpec,
    config: Optional[SimConfig] = None,
) -> list[Finding]:
    """One finding per mismatching row; empty list means compliant."""
    config = config or SimConfig()
    _check_spec_nets(netlist, spec.input_nets)
    _check_spec_nets(netlist, spec.output_nets)
    timed = _has_timed(netlist)
    hold = spec.hold if spec.hold is not None else _default_hold(netlist, config)
    compiled = None if timed else CompiledCircuit(netlist, config)
    other_inputs = tuple(netlist.primary_inputs - set(spec.input_nets))

    findings: list[Finding] = []
    observed_rows: list[dict] = []
    for index, (inputs, expected) in enumerate(spec.rows):
        if timed:
            values = _row_outputs_timed(netlist, inputs, hold, config)
        else:
            values = _row_outputs_static(compiled, inputs, other_inputs)
        observed_rows.append(values)
        for net, want in expected.items():
            got = values[net]
            if got != int(want):
                assign = ", ".join(f"{k}={v}" for k, v in sorted(inputs.items()))
                findings.append(
                    Finding(
                        category="truth_table",
                        message=f"with {assign}: expected {net} = {want}, observed {got}",
                        location=f"row {index}",
                    )
                )

    if findings:
        findings.extend(
            _inversion_hint(netlist, spec, config, timed, hold, compiled, other_inputs)
        )
    return findings


def _inversion_hint(
    netlist, spec, config, timed, hold, compiled, other_inputs
) -> list[Finding]:
    """If complementing every input makes all rows pass, say so.

    This reproduces the classic reviewer catch where a designer forgot to
    invert the input conditions.
    """
    for inputs, expected in spec.rows:
        flipped = {net: 1 - int(v) for net, v in inputs.items()}
        if timed:
            values = _row_outputs_timed(netlist, flipped, hold, config)
        else:
            values = _row_outputs_static(compiled, flipped, other_inputs)
        for net, want in expected.items():
            if values[net] != int(want):
                return []
    return [
        Finding(
            category="truth_table",
            message="the circuit matches the truth table with all inputs "
            "complemented; an inversion of the input conditions is required",
        )
    ]


def check_temporal(
    netlist: Netlist,
    spec: TemporalSpec,
    config: Optional[SimConfig] = None,
) -> list[Finding]:
    """Each expectation must hold at some tick within [t - w, t + w]."""
    config = config or SimConfig()
    _check_spec_nets(netlist, (net for _, net, _, _ in spec.expectations))
    _check_spec_nets(netlist, (net for _, net, _ in spec.stimulus.events))
    horizon = spec.until
    if horizon is None:
        horizon = max((t + w for t, _, _, w in spec.expectations), default=1.0)
        horizon = max(horizon, config.dt)
    trace = run(netlist, spec.stimulus, until=horizon, config=config)

    findings: list[Finding] = []
    for t, net, expected, window in spec.expectations:
        in_window = [
            (st, snap[net])
            for st, snap in trace.samples
            if t - window - 1e-9 <= st <= t + window + 1e-9
        ]
        if any(v == expected for _, v in in_window):
            continue
        excerpt = ", ".join(f"{st:g}:{v}" for st, v in in_window[:8])
        findings.append(
            Finding(
                category="temporal",
                message=f"{net} never held {expected} within "
                f"[{t - window:g}, {t + window:g}]; observed {excerpt}",
                location=f"t={t:g}",
            )
        )
    return findings


def find_redundant(netlist: Netlist) -> list[int]:
    """Operator ids with no directed path to any primary output."""
    marked = reachable_operators(netlist)
    return [op.id for op in netlist.operators if op.id not in marked]


def inspect(
    netlist: Netlist,
    spec: Optional[TruthTableSpec],
    config: Optional[SimConfig] = None,
    pass_threshold: int = DEFAULT_PASS_THRESHOLD,
) -> InspectionReport:
    """Aggregate grammar, truth-table and redundancy checks into a score.

    Rubric: 5 = clean; 4 = only warnings/redundancy; 3 = one truth-table
    mismatch; 2 = several mismatches; 1 = grammar errors.
    """
    config = config or SimConfig()
    report = InspectionReport(pass_threshold=pass_threshold)

    for diag in netlist.diagnostics:
        finding = Finding(
            category="grammar",
            message=diag.message,
            location=diag.code,
        )
        if diag.severity == "error":
            report.grammar_findings.append(finding)
        else:
            report.other_findings.append(finding)

    mismatches = 0
    if spec is not None and not report.grammar_findings:
        try:
            tt = check_truth_table(netlist, spec, config)
        except SpecNetUnknown as exc:
            tt = [Finding(category="truth_table", message=str(exc))]
        report.truth_table_findings.extend(tt)
        mismatches = sum(1 for f in tt if f.location.startswith("row"))

    for op_id in find_redundant(netlist):
        op = netlist.operators[op_id]
        report.redundancy_findings.append(
            Finding(
                category="redundancy",
                message=f"operator {op_id} ({op.kind.value}) does not contribute "
                "to any output",
                location=f"operator {op_id}",
            )
        )

    if report.grammar_findings:
        report.score = 1
    elif mismatches >= 2:
        report.score = 2
    elif mismatches == 1 or report.truth_table_findings:
        report.score = 3
    elif report.redundancy_findings or report.other_findings:
        report.score = 4
    else:
        report.score = 5
    return report


def inspect_text(
    circuit_text: str,
    spec: Optional[TruthTableSpec],
    config: Optional[SimConfig] = None,
    pass_threshold: int = DEFAULT_PASS_THRESHOLD,
) -> InspectionReport:
    """Like :func:`inspect` but accepts raw source; parse failures score 1."""
    try:
        netlist = parse_circuit(circuit_text)
    except CircuitError as exc:
        report = InspectionReport(pass_threshold=pass_threshold)
        report.grammar_findings.append(
            Finding(category="grammar", message=str(exc), location="parse")
        )
        report.score = 1
        return report
    return inspect(netlist, spec, config, pass_threshold)


_COND_RE = re.compile(r"^\s*(.+?)\s*=\s*([01])\s*$")


def parse_truth_table_text(
    text: str, input_nets, output_nets
) -> Optional[TruthTableSpec]:
    """Best-effort lowering of conditional prose rows to a structured table.

    Understands statements shaped like ``If A = 1 and B = 0, then Out = 1``
    separated by ';' or newlines.  Inputs not mentioned in a condition are
    expanded over both values.  Returns None when nothing usable parses.
    """
    input_nets = tuple(input_nets)
    output_nets = tuple(output_nets)
    rows: dict[tuple, dict] = {}
    for statement in re.split(r"[;\n]", text):
        statement = statement.strip()
        match = re.match(r"(?i)^if\s+(.*?),?\s*then\s+(.*)$", statement)
        if not match:
            continue
        cond_part, result_part = match.groups()
        conds = {}
        ok = True
        for piece in re.split(r"(?i)\s+and\s+", cond_part):
            m = _COND_RE.match(piece)
            if not m or m.group(1) not in input_nets:
                ok = False
                break
            conds[m.group(1)] = int(m.group(2))
        results = {}
        for piece in re.split(r"(?i)\s+and\s+|,", result_part):
            m = _COND_RE.match(piece)
            if not m or m.group(1) not in output_nets:
                ok = False
                break
            results[m.group(1)] = int(m.group(2))
        if not ok or not results:
            continue
        free = [net for net in input_nets if net not in conds]
        for combo in product((0, 1), repeat=len(free)):
            assignment = dict(conds)
            assignment.update(zip(free, combo))
            key = tuple(assignment[n] for n in input_nets)
            rows.setdefault(key, {}).update(results)
    if not rows:
        return None
    full_rows = []
    for key, outs in sorted(rows.items()):
        if set(outs) != set(output_nets):
            continue
        full_rows.append((dict(zip(input_nets, key)), outs))
    if not full_rows:
        return None
    return TruthTableSpec(
        input_nets=input_nets, output_nets=output_nets, rows=tuple(full_rows)
    )
