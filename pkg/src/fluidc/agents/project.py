"""Design-project documents and their on-disk store.

A project persists up to seven JSON documents, named after the functions
that write them: the four module documents from the consultation phase plus
the generated circuit, review and I/O design.  Writes are atomic
(write-temp-then-rename).
"""

from __future__ import annotations

import json
import os
import re
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

ATTRIBUTES = ("Binary", "Duration", "Frequency", "Edge")
FEEDBACK_TYPES = ("Shape-changing", "Haptic", "Olfactory", "Acoustic")

DOCUMENT_NAMES = (
    "design_goal.json",
    "input_module.json",
    "output_module.json",
    "computation_module.json",
    "circuit.json",
    "review.json",
    "io_design.json",
)

_INPUT_NAME_RE = re.compile(r"^(Input )?[A-Z]$")
_OUTPUT_NAME_RE = re.compile(r"^(Output )?[IVXLCDM]+$")


class DocumentError(ValueError):
    pass


@dataclass
class InputSpec:
    name: str
    attribute: str
    location: str = ""
    manipulation: str = ""
    note: str = ""

    def validate(self) -> None:
        if not _INPUT_NAME_RE.match(self.name):
            raise DocumentError(
                f"input name must be alphabetic (Input A, Input B, ...), got {self.name!r}"
            )
        if self.attribute not in ATTRIBUTES:
            raise DocumentError(
                f"attribute must be one of {ATTRIBUTES}, got {self.attribute!r}"
            )

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "attribute": self.attribute,
            "location": self.location,
            "manipulation": self.manipulation,
            "note": self.note,
        }


@dataclass
class OutputSpec:
    name: str
    feedback: str
    note: str = ""

    def validate(self) -> None:
        if not _OUTPUT_NAME_RE.match(self.name):
            raise DocumentError(
                f"output name must be Roman (Output I, Output II, ...), got {self.name!r}"
            )
        if self.feedback not in FEEDBACK_TYPES:
            raise DocumentError(
                f"feedback must be one of {FEEDBACK_TYPES}, got {self.feedback!r}"
            )

    def to_json(self) -> dict:
        return {"name": self.name, "feedback": self.feedback, "note": self.note}


@dataclass
class DesignProject:
    design_goal: str = ""
    inputs: list[InputSpec] = field(default_factory=list)
    outputs: list[OutputSpec] = field(default_factory=list)
    conditions: list[dict] = field(default_factory=list)  # {"output":..., "condition":...}
    generated: dict = field(default_factory=dict)
    flags: dict = field(
        default_factory=lambda: {
            "design_goal": False,
            "input_module": False,
            "output_module": False,
            "computation_module": False,
        }
    )

    def all_documents_present(self) -> bool:
        return all(self.flags.values())

    def set_design_goal(self, goal: str) -> None:
        if not goal or not goal.strip():
            raise DocumentError("design goal must be non-empty")
        self.design_goal = goal.strip()
        self.flags["design_goal"] = True

    def set_inputs(self, entries: list[dict]) -> None:
        specs = [
            InputSpec(
                name=e["name"],
                attribute=e["attribute"],
                location=e.get("location", ""),
                manipulation=e.get("manipulation", ""),
                note=e.get("note", ""),
            )
            for e in entries
        ]
        for spec in specs:
            spec.validate()
        self.inputs = specs
        self.flags["input_module"] = True

    def set_outputs(self, entries: list[dict]) -> None:
        specs = [
            OutputSpec(name=e["name"], feedback=e["feedback"], note=e.get("note", ""))
            for e in entries
        ]
        for spec in specs:
            spec.validate()
        self.outputs = specs
        self.flags["output_module"] = True

    def set_conditions(self, entries: list[dict]) -> None:
        for e in entries:
            if "output" not in e or "condition" not in e:
                raise DocumentError("each condition needs 'output' and 'condition'")
        self.conditions = [
            {"output": e["output"], "condition": e["condition"]} for e in entries
        ]
        self.flags["computation_module"] = True

    def module_info(self) -> dict[str, str]:
        """Substitution values for the instruction templates."""
        inputs = "; ".join(
            f"${s.name}$, ${s.attribute}$, ${s.location}$, ${s.manipulation}$, ${s.note}$"
            for s in self.inputs
        )
        outputs = "; ".join(f"${s.name}$, ${s.feedback}$, ${s.note}$" for s in self.outputs)
        conditions = "; ".join(f"${c['output']}$, ${c['condition']}$" for c in self.conditions)
        return {
            "design_goal": self.design_goal,
            "input_module": inputs,
            "output_module": outputs,
            "computation_module": conditions,
        }

    def documents(self) -> dict[str, dict]:
        return {
            "design_goal.json": {"design_goal": self.design_goal},
            "input_module.json": {"inputs": [s.to_json() for s in self.inputs]},
            "output_module.json": {"outputs": [s.to_json() for s in self.outputs]},
            "computation_module.json": {"conditions": list(self.conditions)},
        }

    @classmethod
    def from_documents(cls, docs: dict[str, dict]) -> "DesignProject":
        project = cls()
        if "design_goal.json" in docs:
            project.set_design_goal(docs["design_goal.json"]["design_goal"])
        if "input_module.json" in docs:
            project.set_inputs(docs["input_module.json"]["inputs"])
        if "output_module.json" in docs:
            project.set_outputs(docs["output_module.json"]["outputs"])
        if "computation_module.json" in docs:
            project.set_conditions(docs["computation_module.json"]["conditions"])
        return project


class ProjectStore:
    """Directory of projects; one subdirectory of JSON documents each."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def project_dir(self, name: str) -> Path:
        if not re.match(r"^[A-Za-z0-9_.-]+$", name):
            raise DocumentError(f"invalid project name {name!r}")
        path = self.root / name
        path.mkdir(parents=True, exist_ok=True)
        return path

    def write_bytes(self, project: str, document: str, payload: bytes) -> Path:
        if document not in DOCUMENT_NAMES:
            raise DocumentError(f"unknown document {document!r}")
        target = self.project_dir(project) / document
        fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=".tmp-", suffix=".json")
        try:
            with os.fdopen(fd, "wb") as handle:
                handle.write(payload)
            os.replace(tmp, target)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        return target

    def write_json(self, project: str, document: str, data: dict) -> Path:
        payload = json.dumps(data, indent=2, ensure_ascii=False).encode("utf-8")
        return self.write_bytes(project, document, payload)

    def read_bytes(self, project: str, document: str) -> bytes:
        if document not in DOCUMENT_NAMES:
            raise DocumentError(f"unknown document {document!r}")
        target = self.project_dir(project) / document
        if not target.exists():
            raise FileNotFoundError(document)
        return target.read_bytes()

    def read_json(self, project: str, document: str) -> dict:
        return json.loads(self.read_bytes(project, document).decode("utf-8"))

    def list_documents(self, project: str) -> list[str]:
        path = self.project_dir(project)
        return sorted(p.name for p in path.iterdir() if p.name in DOCUMENT_NAMES)

    def load_project(self, project: str) -> DesignProject:
        docs = {}
        for name in DOCUMENT_NAMES[:4]:
            try:
                docs[name] = self.read_json(project, name)
            except FileNotFoundError:
                pass
        return DesignProject.from_documents(docs)
