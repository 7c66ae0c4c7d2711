"""Agent role definitions, instruction templates and tool schemas."""

from __future__ import annotations

from dataclasses import dataclass
from importlib.resources import files


class TemplateError(KeyError):
    pass


@dataclass(frozen=True)
class AgentRole:
    name: str
    template: str  # asset file under templates/
    tools: tuple[str, ...] = ()
    requires_memory: bool = False  # stateful assistant vs one-shot completion


CONSULTANT_TOOLS = (
    "write_design_goal",
    "write_input_module",
    "write_output_module",
    "write_computation_module",
    "ask_user_next_agent",
)

IO_DESIGNER_TOOLS = (
    "Calculate_Sphere",
    "Calculate_Cylinder",
    "Calculate_Box",
    "Calculate_Fold",
    "Calculate_Bend",
)

ROLES: dict[str, AgentRole] = {
    "Consultant": AgentRole(
        name="Consultant",
        template="consultant.txt",
        tools=CONSULTANT_TOOLS,
        requires_memory=True,
    ),
    "LogicDesigner": AgentRole(name="LogicDesigner", template="logic_designer.txt"),
    "CircuitEngineer": AgentRole(
        name="CircuitEngineer", template="circuit_engineer.txt", requires_memory=True
    ),
    "Inspector": AgentRole(name="Inspector", template="inspector.txt"),
    "IODesigner": AgentRole(
        name="IODesigner",
        template="io_designer.txt",
        tools=IO_DESIGNER_TOOLS,
        requires_memory=True,
    ),
}


def load_template(role: AgentRole) -> str:
    return files("fluidc.agents").joinpath("templates", role.template).read_text("utf-8")


def render_instruction(role: AgentRole, **bindings: str) -> str:
    """Fill the template's substitution slots; every slot needs a binding."""
    template = load_template(role)
    try:
        return template.format(**bindings)
    except KeyError as exc:
        raise TemplateError(
            f"template {role.template} has unbound slot {exc.args[0]!r}"
        ) from exc
    except IndexError as exc:
        raise TemplateError(f"template {role.template} has a positional slot") from exc


def _fn(name: str, description: str, properties: dict, required: list[str]) -> dict:
    return {
        "type": "function",
        "function": {
            "name": name,
            "description": description,
            "parameters": {
                "type": "object",
                "properties": properties,
                "required": required,
            },
        },
    }


_INPUT_ITEM = {
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "attribute": {"type": "string", "enum": ["Binary", "Duration", "Frequency", "Edge"]},
        "location": {"type": "string"},
        "manipulation": {"type": "string"},
        "note": {"type": "string"},
    },
    "required": ["name", "attribute"],
}

_OUTPUT_ITEM = {
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "feedback": {
            "type": "string",
            "enum": ["Shape-changing", "Haptic", "Olfactory", "Acoustic"],
        },
        "note": {"type": "string"},
    },
    "required": ["name", "feedback"],
}

CONSULTANT_TOOL_SCHEMAS = [
    _fn(
        "write_design_goal",
        "Persist the agreed design goal.",
        {"goal": {"type": "string"}},
        ["goal"],
    ),
    _fn(
        "write_input_module",
        "Persist the input module definition.",
        {"inputs": {"type": "array", "items": _INPUT_ITEM}},
        ["inputs"],
    ),
    _fn(
        "write_output_module",
        "Persist the output module definition.",
        {"outputs": {"type": "array", "items": _OUTPUT_ITEM}},
        ["outputs"],
    ),
    _fn(
        "write_computation_module",
        "Persist the computation module conditions.",
        {
            "conditions": {
                "type": "array",
                "items": {
                    "type": "object",
                    "properties": {
                        "output": {"type": "string"},
                        "condition": {"type": "string"},
                    },
                    "required": ["output", "condition"],
                },
            }
        },
        ["conditions"],
    ),
    _fn(
        "ask_user_next_agent",
        "Ask the user whether to proceed to the next design step. "
        "Only valid once all four documents are written.",
        {},
        [],
    ),
]

_MM = {"type": "number", "description": "millimeters"}

IO_TOOL_SCHEMAS = [
    _fn("Calculate_Sphere", "Heat-seal pattern for a spherical airbag.", {"radius": _MM}, ["radius"]),
    _fn(
        "Calculate_Cylinder",
        "Heat-seal pattern for a cylindrical airbag.",
        {"radius": _MM, "height": _MM},
        ["radius", "height"],
    ),
    _fn(
        "Calculate_Box",
        "Heat-seal pattern for a box airbag.",
        {"length": _MM, "width": _MM, "height": _MM},
        ["length", "width", "height"],
    ),
    _fn(
        "Calculate_Fold",
        "Heat-seal pattern for a folding strip (angle in (0, 180] degrees).",
        {"length": _MM, "width": _MM, "angle": {"type": "number"}},
        ["length", "width", "angle"],
    ),
    _fn(
        "Calculate_Bend",
        "Heat-seal pattern for a bending strip (angle in [20, 180] degrees).",
        {"length": _MM, "width": _MM, "angle": {"type": "number"}},
        ["length", "width", "angle"],
    ),
]
