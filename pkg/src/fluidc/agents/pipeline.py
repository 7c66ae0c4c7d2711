"""Five-agent design pipeline: consultant turns, the logic-designer /
circuit-engineer / inspector review loop, and the I/O designer with its
pattern-calculation tool calls.

Every candidate circuit is re-parsed before being accepted, and a
deterministic inspection runs alongside the model's review: the effective
score is the lower of the two, so a generous model score cannot push a
failing circuit through.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Optional

from .. import verifier
from ..fchdl import CircuitError, parse_circuit
from ..patterns import PatternError, calc_shape
from ..simulator import SimConfig
from .project import DesignProject, DocumentError, ProjectStore
from .roles import (
    CONSULTANT_TOOL_SCHEMAS,
    IO_TOOL_SCHEMAS,
    ROLES,
    render_instruction,
)
from .transport import (
    ChatTransport,
    NoJsonFound,
    SchemaMismatch,
    extract_json,
    response_message,
)

log = logging.getLogger(__name__)


class PipelineError(Exception):
    pass


class JsonExtractionFailed(PipelineError):
    pass


class ToolDispatchError(PipelineError):
    pass


class MalformedToolCall(PipelineError):
    pass


class PhaseOrderViolation(PipelineError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    inspector_pass_threshold: int = 4
    max_review_rounds: int = 3
    model: str = "gpt-4"
    temperature: Optional[float] = None

    def __post_init__(self):
        if not 1 <= self.inspector_pass_threshold <= 5:
            raise ValueError("inspector_pass_threshold must lie in [1, 5]")
        if self.max_review_rounds < 1:
            raise ValueError("max_review_rounds must be >= 1")


@dataclass
class ChatExchange:
    messages: list[dict] = field(default_factory=list)


def _base_request(config: PipelineConfig, messages: list[dict], tools=None) -> dict:
    request: dict = {"model": config.model, "messages": messages}
    if tools:
        request["tools"] = tools
    if config.temperature is not None:
        request["temperature"] = config.temperature
    return request


def _ask_json(
    transport: ChatTransport,
    config: PipelineConfig,
    system: str,
    user: str,
    required: tuple[str, ...],
) -> dict:
    """One call plus one reprompt; raises JsonExtractionFailed after that."""
    messages = [
        {"role": "system", "content": system},
        {"role": "user", "content": user},
    ]
    reply = response_message(transport.complete(_base_request(config, messages)))
    try:
        return extract_json(reply.get("content", ""), required)
    except (NoJsonFound, SchemaMismatch) as first:
        messages.append({"role": "assistant", "content": reply.get("content", "")})
        messages.append(
            {
                "role": "user",
                "content": "Respond with exactly one JSON object containing the fields: "
                + ", ".join(required),
            }
        )
        reply = response_message(transport.complete(_base_request(config, messages)))
        try:
            return extract_json(reply.get("content", ""), required)
        except (NoJsonFound, SchemaMismatch) as second:
            raise JsonExtractionFailed(f"{first}; after reprompt: {second}") from second


@dataclass
class ConsultantTurn:
    reply: str
    project: DesignProject
    flags: dict
    violations: list[str] = field(default_factory=list)


def _persist_documents(project: DesignProject, store: Optional[ProjectStore], name: str):
    if store is None:
        return
    for doc_name, payload in project.documents().items():
        key = doc_name.replace(".json", "")
        if project.flags.get(key, False):
            store.write_json(name, doc_name, payload)


def consultant_turn(
    project: DesignProject,
    history: ChatExchange,
    user_message: str,
    transport: ChatTransport,
    config: Optional[PipelineConfig] = None,
    store: Optional[ProjectStore] = None,
    project_name: str = "default",
) -> ConsultantTurn:
    """One conversational round with the consultant, executing tool calls.

    ``ask_user_next_agent`` is suppressed (and logged) until all four
    design documents have been written, even if the model calls it early.
    """
    config = config or PipelineConfig()
    system = render_instruction(ROLES["Consultant"])
    if not history.messages:
        history.messages.append({"role": "system", "content": system})
    history.messages.append({"role": "user", "content": user_message})

    violations: list[str] = []
    reply_text = ""
    for _hop in range(8):  # tool-call round limit for one turn
        request = _base_request(config, list(history.messages), CONSULTANT_TOOL_SCHEMAS)
        message = response_message(transport.complete(request))
        tool_calls = message.get("tool_calls") or []
        history.messages.append(
            {
                "role": "assistant",
                "content": message.get("content") or "",
                **({"tool_calls": tool_calls} if tool_calls else {}),
            }
        )
        if not tool_calls:
            reply_text = message.get("content") or ""
            break
        for call in tool_calls:
            name = call.get("function", {}).get("name", "")
            raw_args = call.get("function", {}).get("arguments", "{}")
            try:
                args = json.loads(raw_args) if raw_args else {}
                result = _dispatch_consultant_tool(project, name, args)
            except (json.JSONDecodeError, DocumentError, KeyError, TypeError) as exc:
                violations.append(f"MalformedToolCall:{name}: {exc}")
                result = {"error": f"malformed arguments: {exc}"}
            except PhaseOrderViolation as exc:
                violations.append(f"PhaseOrderViolation:{name}")
                log.warning("suppressed early %s: %s", name, exc)
                result = {"error": str(exc)}
            history.messages.append(
                {
                    "role": "tool",
                    "tool_call_id": call.get("id", ""),
                    "content": json.dumps(result),
                }
            )
        _persist_documents(project, store, project_name)
    return ConsultantTurn(
        reply=reply_text, project=project, flags=dict(project.flags), violations=violations
    )


def _dispatch_consultant_tool(project: DesignProject, name: str, args: dict) -> dict:
    if name == "write_design_goal":
        project.set_design_goal(args["goal"])
    elif name == "write_input_module":
        project.set_inputs(args["inputs"])
    elif name == "write_output_module":
        project.set_outputs(args["outputs"])
    elif name == "write_computation_module":
        project.set_conditions(args["conditions"])
    elif name == "ask_user_next_agent":
        if not project.all_documents_present():
            missing = [k for k, v in project.flags.items() if not v]
            raise PhaseOrderViolation(
                "cannot hand off before all documents are written; missing: "
                + ", ".join(missing)
            )
        return {"ok": True, "next": "implementation"}
    else:
        raise MalformedToolCall(f"unknown tool {name!r}")
    return {"ok": True}


@dataclass
class Candidate:
    round: int
    circuit: str
    description: str
    llm_score: int
    llm_review: str
    deterministic_score: Optional[int]
    effective_score: int
    parse_error: Optional[str] = None


@dataclass
class ClusterResult:
    circuit: str
    description: str
    truth_table: str
    truth_table_description: str
    review: str
    score: int
    accepted: bool
    rounds: int
    engineer_calls: int
    candidates: list[Candidate] = field(default_factory=list)

    def circuit_document(self) -> dict:
        return {
            "circuit": self.circuit,
            "description": self.description,
            "truth_table": self.truth_table,
            "accepted": self.accepted,
            "rounds": self.rounds,
        }

    def review_document(self) -> dict:
        return {"review": self.review, "score": self.score}


def _coerce_score(value) -> int:
    try:
        score = int(str(value).strip())
    except ValueError as exc:
        raise JsonExtractionFailed(f"inspector score {value!r} is not a number") from exc
    return min(5, max(1, score))


def run_computation_cluster(
    project: DesignProject,
    config: Optional[PipelineConfig] = None,
    transport: ChatTransport = None,
    store: Optional[ProjectStore] = None,
    project_name: str = "default",
    sim_config: Optional[SimConfig] = None,
) -> ClusterResult:
    """Logic designer -> (circuit engineer -> inspector) review loop.

    Loops back to the engineer with the review while the effective score is
    below the pass threshold and rounds remain; returns the last accepted
    candidate, or the best-scoring one flagged unaccepted.
    """
    config = config or PipelineConfig()
    if not project.all_documents_present():
        missing = [k for k, v in project.flags.items() if not v]
        raise PipelineError("project documents missing: " + ", ".join(missing))
    info = project.module_info()

    ld = _ask_json(
        transport,
        config,
        render_instruction(ROLES["LogicDesigner"], **info),
        "Design the truth table for this module information now.",
        required=("truth_table", "description"),
    )
    truth_table_text = str(ld["truth_table"])
    ld_description = str(ld["description"])

    engineer_system = render_instruction(ROLES["CircuitEngineer"])
    candidates: list[Candidate] = []
    review: Optional[str] = None
    engineer_calls = 0
    accepted = False

    for round_no in range(1, config.max_review_rounds + 1):
        design_doc = {
            "truth_table": truth_table_text,
            "truth_table_description": ld_description,
        }
        if review is not None:
            design_doc["inspector_review"] = review
        engineer_calls += 1
        eng = _ask_json(
            transport,
            config,
            engineer_system,
            json.dumps(design_doc, ensure_ascii=False),
            required=("circuit", "description"),
        )
        circuit_text = str(eng["circuit"])
        description = str(eng["description"])

        try:
            netlist = parse_circuit(circuit_text)
            parse_error = None
        except CircuitError as exc:
            netlist = None
            parse_error = str(exc)

        if netlist is None:
            # unparseable output forces another round regardless of score
            review = f"the circuit does not parse: {parse_error}"
            candidates.append(
                Candidate(
                    round=round_no,
                    circuit=circuit_text,
                    description=description,
                    llm_score=1,
                    llm_review=review,
                    deterministic_score=1,
                    effective_score=1,
                    parse_error=parse_error,
                )
            )
            continue

        insp = _ask_json(
            transport,
            config,
            render_instruction(
                ROLES["Inspector"],
                description=ld_description,
                truth_table=truth_table_text,
                computation_module=info["computation_module"],
                design_goal=info["design_goal"],
                circuit=circuit_text,
            ),
            "Review the circuit now.",
            required=("review", "score"),
        )
        llm_score = _coerce_score(insp["score"])
        llm_review = str(insp["review"])

        det_spec = verifier.parse_truth_table_text(
            truth_table_text,
            input_nets=sorted(netlist.primary_inputs),
            output_nets=sorted(netlist.primary_outputs),
        )
        det_report = verifier.inspect(
            netlist, det_spec, sim_config, config.inspector_pass_threshold
        )
        effective = min(llm_score, det_report.score)
        candidates.append(
            Candidate(
                round=round_no,
                circuit=circuit_text,
                description=description,
                llm_score=llm_score,
                llm_review=llm_review,
                deterministic_score=det_report.score,
                effective_score=effective,
            )
        )
        review = llm_review
        if effective >= config.inspector_pass_threshold:
            accepted = True
            break

    if accepted:
        chosen = candidates[-1]
    else:
        chosen = max(candidates, key=lambda c: c.effective_score)
    result = ClusterResult(
        circuit=chosen.circuit,
        description=chosen.description,
        truth_table=truth_table_text,
        truth_table_description=ld_description,
        review=chosen.llm_review,
        score=chosen.effective_score,
        accepted=accepted,
        rounds=len(candidates),
        engineer_calls=engineer_calls,
        candidates=candidates,
    )
    project.generated["circuit"] = result.circuit_document()
    project.generated["review"] = result.review_document()
    if store is not None:
        store.write_json(project_name, "circuit.json", result.circuit_document())
        store.write_json(project_name, "review.json", result.review_document())
    return result


_SHAPE_BY_TOOL = {
    "Calculate_Sphere": "sphere",
    "Calculate_Cylinder": "cylinder",
    "Calculate_Box": "box",
    "Calculate_Fold": "fold",
    "Calculate_Bend": "bend",
}


def run_io_designer(
    project: DesignProject,
    transport: ChatTransport,
    config: Optional[PipelineConfig] = None,
    store: Optional[ProjectStore] = None,
    project_name: str = "default",
) -> dict:
    """One I/O-designer call with pattern tools dispatched locally.

    A failing tool call is surfaced back to the model once; a second
    failure aborts.  Returns the io_design document.
    """
    config = config or PipelineConfig()
    if not project.all_documents_present():
        missing = [k for k, v in project.flags.items() if not v]
        raise PipelineError("project documents missing: " + ", ".join(missing))
    info = project.module_info()
    messages = [
        {"role": "system", "content": render_instruction(ROLES["IODesigner"], **info)},
        {
            "role": "user",
            "content": "Provide the I/O module design JSON now, calling the "
            "pattern functions for any preset shapes.",
        },
    ]
    computed_patterns: list[dict] = []
    tool_failures = 0
    final_text = ""
    for _hop in range(8):
        request = _base_request(config, list(messages), IO_TOOL_SCHEMAS)
        message = response_message(transport.complete(request))
        tool_calls = message.get("tool_calls") or []
        messages.append(
            {
                "role": "assistant",
                "content": message.get("content") or "",
                **({"tool_calls": tool_calls} if tool_calls else {}),
            }
        )
        if not tool_calls:
            final_text = message.get("content") or ""
            break
        for call in tool_calls:
            name = call.get("function", {}).get("name", "")
            raw_args = call.get("function", {}).get("arguments", "{}")
            try:
                args = json.loads(raw_args) if raw_args else {}
                shape = _SHAPE_BY_TOOL[name]
                pattern = calc_shape(shape, **args)
                result = pattern.to_json()
                computed_patterns.append(result)
            except (PatternError, KeyError, TypeError, json.JSONDecodeError) as exc:
                tool_failures += 1
                if tool_failures > 1:
                    raise ToolDispatchError(
                        f"pattern tool {name} failed twice: {exc}"
                    ) from exc
                result = {"error": str(exc)}
            messages.append(
                {
                    "role": "tool",
                    "tool_call_id": call.get("id", ""),
                    "content": json.dumps(result),
                }
            )

    reply = extract_json_with_retry(
        transport, config, messages, final_text, ("input_description", "output_description")
    )
    document = {
        "input_description": reply["input_description"],
        "output_description": reply["output_description"],
        "patterns": computed_patterns,
    }
    project.generated["io_design"] = document
    if store is not None:
        store.write_json(project_name, "io_design.json", document)
    return document


def extract_json_with_retry(transport, config, messages, text, required):
    try:
        return extract_json(text, required)
    except (NoJsonFound, SchemaMismatch) as first:
        messages.append(
            {
                "role": "user",
                "content": "Respond with exactly one JSON object containing the fields: "
                + ", ".join(required),
            }
        )
        message = response_message(transport.complete(_base_request(config, messages)))
        try:
            return extract_json(message.get("content", ""), required)
        except (NoJsonFound, SchemaMismatch) as second:
            raise JsonExtractionFailed(f"{first}; after reprompt: {second}") from second


def run_design_pipeline(
    project: DesignProject,
    config: Optional[PipelineConfig] = None,
    transport: ChatTransport = None,
    store: Optional[ProjectStore] = None,
    project_name: str = "default",
    sim_config: Optional[SimConfig] = None,
) -> dict:
    """Computation cluster plus I/O designer; returns both artifacts.

    With a store, the four consultation documents are materialized next to
    the generated circuit.json / review.json / io_design.json.
    """
    if store is not None:
        for doc_name, payload in project.documents().items():
            store.write_json(project_name, doc_name, payload)
    cluster = run_computation_cluster(
        project, config, transport, store, project_name, sim_config
    )
    io_design = run_io_designer(project, transport, config, store, project_name)
    return {
        "circuit": cluster.circuit_document(),
        "review": cluster.review_document(),
        "io_design": io_design,
        "accepted": cluster.accepted,
        "rounds": cluster.rounds,
    }
