"""FC-HDL front end: lexing, parsing, validation and serialization.

A circuit description is a whitespace-separated sequence of operator calls
such as ``NOT(A; C) OR (C, D; Q) Timer(Q, 1800; TimerOutput)``.  Arguments
are split into sections by ``;`` and into items by ``,``.  All sections but
the last are the input side (nets plus numeric/enum parameters where the
operator takes them); the last section is the output side.  Net names may
contain interior spaces (``Output I``) and are compared exactly after
trimming.  Operator names are matched case-insensitively; net names are
case-sensitive.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Iterable, Optional


class OperatorKind(enum.Enum):
    NOT = "NOT"
    OR = "OR"
    AND = "AND"
    NOR = "NOR"
    NAND = "NAND"
    XOR = "XOR"
    FILTER = "FILTER"
    TIMER = "TIMER"
    REGISTER = "REGISTER"
    EDGE_DETECTOR = "EDGE_DETECTOR"
    MULTIPLEXER = "MULTIPLEXER"
    DEMULTIPLEXER = "DEMULTIPLEXER"
    DIODE = "DIODE"


# kind -> (input net count, numeric param count, output net count)
ARITY: dict[OperatorKind, tuple[int, int, int]] = {
    OperatorKind.NOT: (1, 0, 1),
    OperatorKind.OR: (2, 0, 1),
    OperatorKind.AND: (2, 0, 1),
    OperatorKind.NOR: (2, 0, 1),
    OperatorKind.NAND: (2, 0, 1),
    OperatorKind.XOR: (2, 0, 1),
    OperatorKind.FILTER: (1, 1, 1),
    OperatorKind.TIMER: (1, 1, 1),
    OperatorKind.REGISTER: (2, 0, 2),
    OperatorKind.EDGE_DETECTOR: (1, 1, 1),  # the numeric param is optional
    OperatorKind.MULTIPLEXER: (6, 0, 1),  # 4 data + 2 select
    OperatorKind.DEMULTIPLEXER: (3, 0, 4),  # 1 data + 2 select
    OperatorKind.DIODE: (1, 0, 1),  # plus a direction enum
}

GATE_KINDS = frozenset(
    {
        OperatorKind.NOT,
        OperatorKind.OR,
        OperatorKind.AND,
        OperatorKind.NOR,
        OperatorKind.NAND,
        OperatorKind.XOR,
    }
)

# Operators whose outputs are a pure function of current net values; these
# participate in the zero-delay settle and in combinational-cycle detection.
COMBINATIONAL_KINDS = GATE_KINDS | {
    OperatorKind.MULTIPLEXER,
    OperatorKind.DEMULTIPLEXER,
    OperatorKind.DIODE,
}

EDGE_DETECTOR_DEFAULT_PULSE = 0.5  # seconds, when the time argument is omitted

# canonical spelling used by the serializer
_CANONICAL_NAME = {
    OperatorKind.NOT: "NOT",
    OperatorKind.OR: "OR",
    OperatorKind.AND: "AND",
    OperatorKind.NOR: "NOR",
    OperatorKind.NAND: "NAND",
    OperatorKind.XOR: "XOR",
    OperatorKind.FILTER: "Filter",
    OperatorKind.TIMER: "Timer",
    OperatorKind.REGISTER: "Register",
    OperatorKind.EDGE_DETECTOR: "EdgeDetector",
    OperatorKind.MULTIPLEXER: "Multiplexer",
    OperatorKind.DEMULTIPLEXER: "Demultiplexer",
    OperatorKind.DIODE: "Diode",
}

_NAME_TO_KIND = {kind.value.replace("_", ""): kind for kind in OperatorKind}


class CircuitError(ValueError):
    """Base class for FC-HDL front-end failures."""

    def __init__(self, message: str, offset: Optional[int] = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)


class EmptyCircuitError(CircuitError):
    pass


class CircuitSyntaxError(CircuitError):
    pass


class UnknownOperatorError(CircuitError):
    pass


class ArityError(CircuitError):
    pass


class BadParameterError(CircuitError):
    pass


@dataclass(frozen=True)
class OperatorInstance:
    """One parsed operator call; ``id`` is its ordinal in source order."""

    id: int
    kind: OperatorKind
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    params: tuple[float, ...] = ()
    direction: Optional[str] = None  # "forward"/"backward", Diode only


@dataclass(frozen=True)
class Diagnostic:
    code: str  # MultipleDrivers | DanglingNet | UnreachableOperator | CombinationalCycle | SelfLoop
    severity: str  # "error" | "warning"
    message: str
    nets: tuple[str, ...] = ()
    operators: tuple[int, ...] = ()


@dataclass(frozen=True)
class Netlist:
    operators: tuple[OperatorInstance, ...]
    nets: frozenset[str]
    primary_inputs: frozenset[str]
    primary_outputs: frozenset[str]
    diagnostics: tuple[Diagnostic, ...] = ()

    def has_errors(self) -> bool:
        return any(d.severity == "error" for d in self.diagnostics)

    def drivers(self) -> dict[str, list[tuple[int, int]]]:
        """Map net -> [(operator id, output port index)]."""
        out: dict[str, list[tuple[int, int]]] = {}
        for op in self.operators:
            for port, net in enumerate(op.outputs):
                out.setdefault(net, []).append((op.id, port))
        return out

    def consumers(self) -> dict[str, list[tuple[int, int]]]:
        """Map net -> [(operator id, input port index)]."""
        out: dict[str, list[tuple[int, int]]] = {}
        for op in self.operators:
            for port, net in enumerate(op.inputs):
                out.setdefault(net, []).append((op.id, port))
        return out


_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NUMBER_RE = re.compile(r"[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?\Z")


def _split_sections(body: str, base: int) -> list[list[tuple[str, int]]]:
    """Split an argument body into ;-separated sections of (item, offset)."""
    sections: list[list[tuple[str, int]]] = []
    current: list[tuple[str, int]] = []
    start = 0
    for i, ch in enumerate(body + ";"):
        if ch in ",;":
            raw = body[start:i]
            stripped = raw.strip()
            pad = len(raw) - len(raw.lstrip())
            current.append((stripped, base + start + pad))
            if ch == ";":
                sections.append(current)
                current = []
            start = i + 1
    return sections


def _is_number(token: str) -> bool:
    return bool(_NUMBER_RE.match(token))


def _positive_number(token: str, offset: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise BadParameterError(f"expected a number, got {token!r}", offset) from None
    if value <= 0:
        raise BadParameterError(f"parameter must be positive, got {token}", offset)
    return value


def _check_net(token: str, offset: int) -> str:
    if not token:
        raise CircuitSyntaxError("empty net name", offset)
    return token


def _build_operator(
    op_id: int,
    kind: OperatorKind,
    sections: list[list[tuple[str, int]]],
    name_offset: int,
) -> OperatorInstance:
    if len(sections) < 2:
        raise CircuitSyntaxError(
            f"{_CANONICAL_NAME[kind]} needs a ';' separating inputs from outputs",
            name_offset,
        )
    max_sections = 3 if kind in (OperatorKind.MULTIPLEXER, OperatorKind.DEMULTIPLEXER) else 2
    if len(sections) > max_sections:
        raise ArityError(f"too many ';' sections for {_CANONICAL_NAME[kind]}", name_offset)

    in_items = [item for sec in sections[:-1] for item in sec]
    out_items = list(sections[-1])
    n_in, n_par, n_out = ARITY[kind]
    params: list[float] = []
    direction: Optional[str] = None

    if kind is OperatorKind.DIODE:
        if len(in_items) != 2:
            raise ArityError("Diode takes one input net and a direction", name_offset)
        net_tok, dir_tok = in_items
        direction = dir_tok[0].lower()
        if direction not in ("forward", "backward"):
            raise BadParameterError(
                f"Diode direction must be forward or backward, got {dir_tok[0]!r}", dir_tok[1]
            )
        inputs = [_check_net(*net_tok)]
    elif kind in (OperatorKind.FILTER, OperatorKind.TIMER):
        if len(in_items) != 2:
            raise ArityError(
                f"{_CANONICAL_NAME[kind]} takes one input net and one number", name_offset
            )
        inputs = [_check_net(*in_items[0])]
        params.append(_positive_number(*in_items[1]))
    elif kind is OperatorKind.EDGE_DETECTOR:
        # The pulse time may ride on either side: EdgeDetector(A; Q, 0.5)
        # is the customary form, EdgeDetector(A, 0.5; Q) is also accepted,
        # and the parameter may be omitted entirely.
        if in_items and _is_number(in_items[-1][0]):
            params.append(_positive_number(*in_items.pop()))
        if out_items and _is_number(out_items[-1][0]):
            if params:
                raise ArityError("EdgeDetector takes at most one time parameter", name_offset)
            params.append(_positive_number(*out_items.pop()))
        if not params:
            params.append(EDGE_DETECTOR_DEFAULT_PULSE)
        if len(in_items) != 1:
            raise ArityError("EdgeDetector takes exactly one input net", name_offset)
        inputs = [_check_net(*in_items[0])]
    else:
        if len(in_items) != n_in:
            raise ArityError(
                f"{_CANONICAL_NAME[kind]} takes exactly {n_in} input net(s), got {len(in_items)}",
                name_offset,
            )
        inputs = [_check_net(tok, off) for tok, off in in_items]

    if len(out_items) != n_out:
        raise ArityError(
            f"{_CANONICAL_NAME[kind]} produces exactly {n_out} output net(s), got {len(out_items)}",
            name_offset,
        )
    outputs = [_check_net(tok, off) for tok, off in out_items]
    return OperatorInstance(
        id=op_id,
        kind=kind,
        inputs=tuple(inputs),
        outputs=tuple(outputs),
        params=tuple(params),
        direction=direction,
    )


def parse_circuit(text: str) -> Netlist:
    """Parse FC-HDL source into a validated :class:`Netlist`.

    Raises :class:`EmptyCircuitError`, :class:`CircuitSyntaxError`,
    :class:`UnknownOperatorError`, :class:`ArityError` or
    :class:`BadParameterError`; structural oddities (multiple drivers,
    cycles, dangling nets) are reported as diagnostics on the netlist
    instead of failing the parse.
    """
    if text is None or not text.strip():
        raise EmptyCircuitError("circuit description is empty")

    operators: list[OperatorInstance] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace() or ch in ";,":
            # stray separators between calls are tolerated ("Timer(A,10;B);")
            i += 1
            continue
        m = _NAME_RE.match(text, i)
        if not m:
            raise CircuitSyntaxError(f"unexpected character {ch!r}", i)
        name = m.group(0)
        kind = _NAME_TO_KIND.get(name.upper())
        if kind is None:
            raise UnknownOperatorError(f"unknown operator {name!r}", i)
        j = m.end()
        while j < n and text[j].isspace():
            j += 1
        if j >= n or text[j] != "(":
            raise CircuitSyntaxError(f"expected '(' after operator {name!r}", j if j < n else n)
        close = text.find(")", j + 1)
        if close == -1:
            raise CircuitSyntaxError("unbalanced parenthesis", j)
        inner = text[j + 1 : close]
        if "(" in inner:
            raise CircuitSyntaxError("unbalanced parenthesis", j + 1 + inner.index("("))
        sections = _split_sections(inner, j + 1)
        operators.append(_build_operator(len(operators), kind, sections, i))
        i = close + 1

    return _finish_netlist(operators)


def _finish_netlist(operators: list[OperatorInstance]) -> Netlist:
    nets: set[str] = set()
    driven: set[str] = set()
    consumed: set[str] = set()
    for op in operators:
        nets.update(op.inputs)
        nets.update(op.outputs)
        driven.update(op.outputs)
        consumed.update(op.inputs)

    primary_inputs = frozenset(consumed - driven)
    named_outputs = {net for net in nets if net.startswith("Output")}
    if named_outputs:
        primary_outputs = frozenset(named_outputs)
    else:
        primary_outputs = frozenset(driven - consumed)

    netlist = Netlist(
        operators=tuple(operators),
        nets=frozenset(nets),
        primary_inputs=primary_inputs,
        primary_outputs=primary_outputs,
    )
    diagnostics = tuple(validate_netlist(netlist))
    return Netlist(
        operators=netlist.operators,
        nets=netlist.nets,
        primary_inputs=netlist.primary_inputs,
        primary_outputs=netlist.primary_outputs,
        diagnostics=diagnostics,
    )


def reachable_operators(netlist: Netlist) -> set[int]:
    """Ids of operators with a directed path to some primary output."""
    drivers = netlist.drivers()
    marked: set[int] = set()
    stack = [
        op.id
        for op in netlist.operators
        if any(net in netlist.primary_outputs for net in op.outputs)
    ]
    ops = {op.id: op for op in netlist.operators}
    while stack:
        oid = stack.pop()
        if oid in marked:
            continue
        marked.add(oid)
        for net in ops[oid].inputs:
            for producer_id, _ in drivers.get(net, ()):
                if producer_id not in marked:
                    stack.append(producer_id)
    return marked


def validate_netlist(netlist: Netlist) -> list[Diagnostic]:
    """Structural checks; empty list means clean."""
    diags: list[Diagnostic] = []
    drivers = netlist.drivers()
    consumers = netlist.consumers()
    ops = {op.id: op for op in netlist.operators}

    for net, drs in sorted(drivers.items()):
        if len(drs) <= 1:
            continue
        all_forward_diodes = all(
            ops[oid].kind is OperatorKind.DIODE and ops[oid].direction == "forward"
            for oid, _ in drs
        )
        if not all_forward_diodes:
            diags.append(
                Diagnostic(
                    code="MultipleDrivers",
                    severity="error",
                    message=f"net {net!r} is driven by {len(drs)} operators; "
                    "only forward diode outputs may be joined",
                    nets=(net,),
                    operators=tuple(oid for oid, _ in drs),
                )
            )

    for net in sorted(drivers):
        if net not in consumers and net not in netlist.primary_outputs:
            diags.append(
                Diagnostic(
                    code="DanglingNet",
                    severity="warning",
                    message=f"net {net!r} is driven but never consumed and is not an output",
                    nets=(net,),
                    operators=tuple(oid for oid, _ in drivers[net]),
                )
            )

    for op in netlist.operators:
        loops = set(op.inputs) & set(op.outputs)
        if loops:
            diags.append(
                Diagnostic(
                    code="SelfLoop",
                    severity="warning",
                    message=f"operator {op.id} ({_CANONICAL_NAME[op.kind]}) feeds itself "
                    f"through {sorted(loops)}",
                    nets=tuple(sorted(loops)),
                    operators=(op.id,),
                )
            )

    marked = reachable_operators(netlist)
    for op in netlist.operators:
        if op.id not in marked:
            diags.append(
                Diagnostic(
                    code="UnreachableOperator",
                    severity="warning",
                    message=f"operator {op.id} ({_CANONICAL_NAME[op.kind]}) has no path "
                    "to any primary output",
                    operators=(op.id,),
                )
            )

    cycle_ops = _combinational_cycles(netlist)
    if cycle_ops:
        diags.append(
            Diagnostic(
                code="CombinationalCycle",
                severity="warning",
                message="combinational cycle through operators "
                + ", ".join(str(o) for o in sorted(cycle_ops)),
                operators=tuple(sorted(cycle_ops)),
            )
        )
    return diags


def _combinational_cycles(netlist: Netlist) -> set[int]:
    """Operators on a cycle in the gate-only (zero-delay) subgraph."""
    comb = {op.id for op in netlist.operators if op.kind in COMBINATIONAL_KINDS}
    succ: dict[int, set[int]] = {oid: set() for oid in comb}
    consumers = netlist.consumers()
    for op in netlist.operators:
        if op.id not in comb:
            continue
        for net in op.outputs:
            for cons_id, _ in consumers.get(net, ()):
                if cons_id in comb:
                    succ[op.id].add(cons_id)

    # iterative Tarjan SCC; members of SCCs with size > 1 or with a self-edge
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    result: set[int] = set()
    counter = [0]

    def strongconnect(root: int) -> None:
        work = [(root, iter(sorted(succ[root])))]
        index[root] = low[root] = counter[0]
        counter[0] += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(sorted(succ[w]))))
                    advanced = True
                    break
                elif w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                pv = work[-1][0]
                low[pv] = min(low[pv], low[v])
            if low[v] == index[v]:
                scc = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    scc.append(w)
                    if w == v:
                        break
                if len(scc) > 1 or v in succ[v]:
                    result.update(scc)

    for oid in sorted(comb):
        if oid not in index:
            strongconnect(oid)
    return result


def serialize_circuit(netlist: Netlist) -> str:
    """Emit canonical source; parse(serialize(n)) is structurally equal to n."""
    parts = []
    for op in netlist.operators:
        in_side: list[str] = list(op.inputs)
        if op.kind is OperatorKind.DIODE:
            in_side.append(op.direction or "forward")
        elif op.kind in (OperatorKind.FILTER, OperatorKind.TIMER):
            in_side.append(_format_number(op.params[0]))
        out_side: list[str] = list(op.outputs)
        if op.kind is OperatorKind.EDGE_DETECTOR:
            out_side.append(_format_number(op.params[0]))
        parts.append(
            f"{_CANONICAL_NAME[op.kind]}({', '.join(in_side)}; {', '.join(out_side)})"
        )
    return " ".join(parts)


def _format_number(value: float) -> str:
    if value == int(value):
        return str(int(value))
    return repr(value)


def structurally_equal(a: Netlist, b: Netlist) -> bool:
    if len(a.operators) != len(b.operators):
        return False
    for x, y in zip(a.operators, b.operators):
        if (x.kind, x.inputs, x.outputs, x.params, x.direction) != (
            y.kind,
            y.inputs,
            y.outputs,
            y.params,
            y.direction,
        ):
            return False
    return True


def netlist_to_json(netlist: Netlist) -> dict:
    """Wire format used by the server, CLI and UI."""
    ops = []
    for op in netlist.operators:
        entry: dict = {
            "kind": op.kind.value,
            "inputs": list(op.inputs),
            "params": [int(p) if p == int(p) else p for p in op.params],
            "outputs": list(op.outputs),
        }
        if op.direction is not None:
            entry["direction"] = op.direction
        ops.append(entry)
    return {
        "operators": ops,
        "inputs": sorted(netlist.primary_inputs),
        "outputs": sorted(netlist.primary_outputs),
    }


def netlist_from_json(data: dict) -> Netlist:
    operators = []
    for i, entry in enumerate(data["operators"]):
        kind = OperatorKind[entry["kind"]]
        operators.append(
            OperatorInstance(
                id=i,
                kind=kind,
                inputs=tuple(entry["inputs"]),
                outputs=tuple(entry["outputs"]),
                params=tuple(float(p) for p in entry.get("params", ())),
                direction=entry.get("direction"),
            )
        )
    return _finish_netlist(operators)


def diagnostics_to_json(diags: Iterable[Diagnostic]) -> list[dict]:
    return [
        {
            "code": d.code,
            "severity": d.severity,
            "message": d.message,
            "nets": list(d.nets),
            "operators": list(d.operators),
        }
        for d in diags
    ]
