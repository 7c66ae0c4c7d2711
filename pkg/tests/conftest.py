import json
from pathlib import Path

import pytest

from fluidc.agents import DesignProject, ScriptedTransport
from fluidc.agents.transport import text_response

DATA_DIR = Path(__file__).parent / "data"

INSOLE_FAULTY = "OR (A, B; Q) Timer(Q, 1800; TimerOutput) AND(Q, TimerOutput; Output I)"
INSOLE_CIRCUIT = (
    "NOT(A; C) NOT(B; D) OR (C, D; Q) "
    "Timer(Q, 1800; TimerOutput) AND(Q, TimerOutput; Output I)"
)
INSOLE_TRUTH_TABLE = (
    "If A = 0 and B = 0, then Output I = 1; "
    "If A = 0 and B = 1, then Output I = 1; "
    "If A = 1 and B = 0, then Output I = 1; "
    "If A = 1 and B = 1, then Output I = 0"
)


def corpus_circuits() -> list[str]:
    lines = (DATA_DIR / "circuit_corpus.txt").read_text("utf-8").splitlines()
    return [line for line in (l.strip() for l in lines) if line]


@pytest.fixture
def insole_project() -> DesignProject:
    project = DesignProject()
    project.set_design_goal(
        "An insole that reminds the wearer once they have been walking "
        "continuously for 30 minutes and are still walking."
    )
    project.set_inputs(
        [
            {
                "name": "Input A",
                "attribute": "Duration",
                "location": "under the ball of the sole",
                "manipulation": "Step",
                "note": "30 minutes",
            },
            {
                "name": "Input B",
                "attribute": "Duration",
                "location": "under the heel of the sole",
                "manipulation": "Step",
                "note": "30 minutes",
            },
        ]
    )
    project.set_outputs(
        [{"name": "Output I", "feedback": "Haptic", "note": "ankle area"}]
    )
    project.set_conditions(
        [
            {
                "output": "Output I",
                "condition": "at least one sole region unloaded continuously "
                "for 30 minutes while still walking",
            }
        ]
    )
    return project


def insole_scripted_transport() -> ScriptedTransport:
    """Two-round review: faulty circuit first, corrected on resubmission."""
    return ScriptedTransport(
        [
            text_response(
                json.dumps(
                    {
                        "truth_table": INSOLE_TRUTH_TABLE,
                        "description": "Duration inputs A and B; hold the walking "
                        "indicator through a 1800 s timer and gate the output on it.",
                    }
                )
            ),
            text_response(
                json.dumps({"circuit": INSOLE_FAULTY, "description": "or into timer"})
            ),
            text_response(
                json.dumps(
                    {
                        "review": "The truth table specifications are not fully met "
                        "by the current circuit description; an inversion of "
                        "Input A and Input B's condition is required.",
                        "score": "2",
                    }
                )
            ),
            text_response(
                json.dumps(
                    {
                        "circuit": INSOLE_CIRCUIT,
                        "description": "inverted inputs joined by OR, gated by the timer",
                    }
                )
            ),
            text_response(
                json.dumps({"review": "Matches every truth-table row.", "score": "5"})
            ),
        ]
    )
