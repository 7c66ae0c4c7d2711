"""Discrete-time simulation of a netlist under binary pneumatic semantics.

Each tick runs four phases: (1) apply stimulus events that are due,
(2) advance timed operator state (Timer elapsed, EdgeDetector pulse,
Filter edge history) by dt, (3) settle the zero-delay combinational logic
to a fixpoint with a synchronous (Jacobi) sweep, (4) latch register state
and emit change events.  All nets start at atmospheric pressure (0).

Timed operators sample their inputs at tick boundaries: a Timer
accumulates dt only across intervals where its input was 1 at both ends,
so its output rises exactly when the input has been continuously 1 for
the configured time.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from ._kernels.codes import (
    K_AND,
    K_DEMUX,
    K_DIODE_B,
    K_DIODE_F,
    K_EDGE,
    K_FILTER,
    K_MUX,
    K_NAND,
    K_NOR,
    K_NOT,
    K_OR,
    K_REGISTER,
    K_TIMER,
    K_XOR,
)
from .fchdl import Netlist, OperatorKind

_EPS = 1e-9

_KIND_CODE = {
    OperatorKind.NOT: K_NOT,
    OperatorKind.OR: K_OR,
    OperatorKind.AND: K_AND,
    OperatorKind.NOR: K_NOR,
    OperatorKind.NAND: K_NAND,
    OperatorKind.XOR: K_XOR,
    OperatorKind.FILTER: K_FILTER,
    OperatorKind.TIMER: K_TIMER,
    OperatorKind.REGISTER: K_REGISTER,
    OperatorKind.EDGE_DETECTOR: K_EDGE,
    OperatorKind.MULTIPLEXER: K_MUX,
    OperatorKind.DEMULTIPLEXER: K_DEMUX,
}

_MAX_IN = 6
_MAX_OUT = 4


class SimulationError(Exception):
    pass


class InvalidNetlistError(SimulationError):
    def __init__(self, diagnostics):
        self.diagnostics = diagnostics
        super().__init__(
            "netlist has hard diagnostics: "
            + "; ".join(d.message for d in diagnostics)
        )


class NotAnInputError(SimulationError):
    def __init__(self, net):
        self.net = net
        super().__init__(f"net {net!r} is not a primary input")


class OscillationError(SimulationError):
    def __init__(self, time, nets):
        self.time = time
        self.nets = tuple(sorted(nets))
        super().__init__(
            f"combinational settle did not converge at t={time:g}; "
            f"oscillating nets: {', '.join(self.nets)}"
        )


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.1
    max_settle_iters: Optional[int] = None  # defaults to max(64, 2 * op count)
    time_scale: float = 1.0
    filter_tolerance: float = 0.20

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.max_settle_iters is not None and self.max_settle_iters < 1:
            raise ValueError("max_settle_iters must be >= 1")
        if self.time_scale <= 0:
            raise ValueError("time_scale must be positive")
        if not 0 < self.filter_tolerance < 1:
            raise ValueError("filter_tolerance must lie in (0, 1)")


@dataclass(frozen=True)
class ChangeEvent:
    t: float
    net: str
    old: int
    new: int


@dataclass(frozen=True)
class Stimulus:
    """Time-ordered input waveform: (time, net, value) events."""

    events: tuple[tuple[float, str, int], ...]

    @classmethod
    def from_events(cls, events) -> "Stimulus":
        evs = sorted(((float(t), str(n), int(v)) for t, n, v in events), key=lambda e: e[0])
        for t, _, v in evs:
            if t < 0:
                raise ValueError("stimulus times must be >= 0")
            if v not in (0, 1):
                raise ValueError("stimulus values must be 0 or 1")
        return cls(events=tuple(evs))

    @classmethod
    def from_json(cls, data) -> "Stimulus":
        return cls.from_events((e["t"], e["net"], e["v"]) for e in data)

    def to_json(self) -> list[dict]:
        return [{"t": t, "net": n, "v": v} for t, n, v in self.events]


@dataclass
class Trace:
    samples: list[tuple[float, dict[str, int]]] = field(default_factory=list)
    events: list[ChangeEvent] = field(default_factory=list)

    def value_at(self, net: str, time: float) -> int:
        """Value of ``net`` at the latest sample with t <= time."""
        value = None
        for t, snap in self.samples:
            if t <= time + _EPS:
                value = snap[net]
            else:
                break
        if value is None:
            raise ValueError(f"no sample at or before t={time}")
        return value

    def to_json(self) -> dict:
        return {
            "samples": [{"t": t, "values": dict(v)} for t, v in self.samples],
            "events": [
                {"t": e.t, "net": e.net, "old": e.old, "new": e.new} for e in self.events
            ],
        }


class CompiledCircuit:
    """Opcode-encoded netlist shared by every session that simulates it."""

    def __init__(self, netlist: Netlist, config: SimConfig):
        self.netlist = netlist
        self.config = config
        self.net_names: list[str] = []
        self.net_index: dict[str, int] = {}
        for op in netlist.operators:
            for net in (*op.inputs, *op.outputs):
                if net not in self.net_index:
                    self.net_index[net] = len(self.net_names)
                    self.net_names.append(net)
        n_ops = len(netlist.operators)
        n_nets = len(self.net_names)
        kinds = np.zeros(n_ops, dtype=np.int32)
        ins = np.full((n_ops, _MAX_IN), 0, dtype=np.int32)
        outs = np.full((n_ops, _MAX_OUT), 0, dtype=np.int32)
        driven = np.zeros(n_nets, dtype=np.int8)
        for i, op in enumerate(netlist.operators):
            if op.kind is OperatorKind.DIODE:
                kinds[i] = K_DIODE_F if op.direction == "forward" else K_DIODE_B
            else:
                kinds[i] = _KIND_CODE[op.kind]
            for j, net in enumerate(op.inputs):
                ins[i, j] = self.net_index[net]
            for j, net in enumerate(op.outputs):
                outs[i, j] = self.net_index[net]
                driven[self.net_index[net]] = 1
        self.kinds = kinds
        self.ins = ins
        self.outs = outs
        self.driven = driven
        self.n_ops = n_ops
        self.n_nets = n_nets
        self.max_settle_iters = config.max_settle_iters or max(64, 2 * n_ops)
        self.program = _kernels.SettleProgram(kinds, ins, outs, driven)
        self.timed_ids = [
            i
            for i, op in enumerate(netlist.operators)
            if op.kind in (OperatorKind.TIMER, OperatorKind.EDGE_DETECTOR, OperatorKind.FILTER)
        ]
        self.register_ids = [
            i for i, op in enumerate(netlist.operators) if op.kind is OperatorKind.REGISTER
        ]
        # scaled thresholds: Timer duration / EdgeDetector pulse; Filter keeps Hz
        self.thresholds = np.zeros(n_ops, dtype=np.float64)
        for i, op in enumerate(netlist.operators):
            if op.kind in (OperatorKind.TIMER, OperatorKind.EDGE_DETECTOR):
                self.thresholds[i] = op.params[0] * config.time_scale
            elif op.kind is OperatorKind.FILTER:
                self.thresholds[i] = op.params[0]

    def settle_values(self, values: np.ndarray, timed_out=None, reg_stored=None) -> None:
        """Settle ``values`` in place with the given timed/register bits."""
        if timed_out is None:
            timed_out = np.zeros(self.n_ops, dtype=np.int8)
        if reg_stored is None:
            reg_stored = np.zeros(self.n_ops, dtype=np.int8)
        result = self.program.settle(values, timed_out, reg_stored, self.max_settle_iters)
        if result < 0:
            before = values.copy()
            self.program.settle(values, timed_out, reg_stored, 1)
            changed = [
                self.net_names[k] for k in range(self.n_nets) if values[k] != before[k]
            ]
            raise OscillationError(float("nan"), changed)


class SimState:
    """Mutable per-session simulation state; owned by a single session."""

    def __init__(self, compiled: CompiledCircuit):
        self.compiled = compiled
        self.config = compiled.config
        self.t = 0.0
        self.values = np.zeros(compiled.n_nets, dtype=np.int8)
        n_ops = compiled.n_ops
        self.elapsed = [0.0] * n_ops
        self.pulse = [0.0] * n_ops
        self.last_in = [0] * n_ops
        self.stored = np.zeros(n_ops, dtype=np.int8)
        self.edge_times: list[list[float]] = [[] for _ in range(n_ops)]
        self.pending: list[tuple[float, int, int, int]] = []  # (t, seq, net idx, value)
        self._seq = 0
        self.last_events: list[ChangeEvent] = []

    @property
    def netlist(self) -> Netlist:
        return self.compiled.netlist

    @property
    def net_values(self) -> dict[str, int]:
        return {name: int(self.values[i]) for i, name in enumerate(self.compiled.net_names)}

    def op_state(self) -> dict:
        ops = self.compiled.netlist.operators
        out: dict[int, dict] = {}
        for i in self.compiled.timed_ids:
            kind = ops[i].kind
            if kind is OperatorKind.TIMER:
                out[i] = {"elapsed": self.elapsed[i], "threshold": self.compiled.thresholds[i]}
            elif kind is OperatorKind.EDGE_DETECTOR:
                out[i] = {"pulse_remaining": self.pulse[i], "last_input": self.last_in[i]}
            else:
                out[i] = {"rising_edge_times": list(self.edge_times[i])}
        for i in self.compiled.register_ids:
            out[i] = {"stored": int(self.stored[i])}
        return out

    def queue_event(self, t: float, net: str, value: int) -> None:
        idx = self._input_index(net)
        heapq.heappush(self.pending, (t, self._seq, idx, int(value)))
        self._seq += 1

    def _input_index(self, net: str) -> int:
        if net not in self.compiled.netlist.primary_inputs:
            raise NotAnInputError(net)
        return self.compiled.net_index[net]

    def _timed_bits(self) -> np.ndarray:
        compiled = self.compiled
        bits = np.zeros(compiled.n_ops, dtype=np.int8)
        ops = compiled.netlist.operators
        tol = self.config.filter_tolerance
        for i in compiled.timed_ids:
            kind = ops[i].kind
            if kind is OperatorKind.TIMER:
                bits[i] = 1 if self.elapsed[i] + _EPS >= compiled.thresholds[i] else 0
            elif kind is OperatorKind.EDGE_DETECTOR:
                bits[i] = 1 if self.pulse[i] > _EPS else 0
            else:  # FILTER
                target = compiled.thresholds[i]
                edges = self.edge_times[i]
                ok = 0
                if len(edges) >= 3:
                    span = edges[-1] - edges[-3]
                    if span > 0:
                        f_meas = 2.0 / span
                        in_band = abs(f_meas - target) <= tol * target + _EPS
                        fresh = (self.t - edges[-1]) <= 1.5 / target + _EPS
                        ok = 1 if (in_band and fresh) else 0
                bits[i] = ok
        return bits

    def _settle(self) -> list[ChangeEvent]:
        compiled = self.compiled
        before = self.values.copy()
        bits = self._timed_bits()
        result = compiled.program.settle(self.values, bits, self.stored, compiled.max_settle_iters)
        if result < 0:
            pre = self.values.copy()
            compiled.program.settle(self.values, bits, self.stored, 1)
            changed = [
                compiled.net_names[k]
                for k in range(compiled.n_nets)
                if self.values[k] != pre[k]
            ]
            raise OscillationError(self.t, changed)
        return self._diff_events(before)

    def _diff_events(self, before: np.ndarray) -> list[ChangeEvent]:
        """Change events vs a snapshot, in canonical (net name) order."""
        compiled = self.compiled
        events = [
            ChangeEvent(self.t, compiled.net_names[k], int(before[k]), int(self.values[k]))
            for k in range(compiled.n_nets)
            if before[k] != self.values[k]
        ]
        events.sort(key=lambda e: e.net)
        return events

    def _latch_registers(self) -> None:
        ops = self.compiled.netlist.operators
        for i in self.compiled.register_ids:
            d_idx = self.compiled.net_index[ops[i].inputs[0]]
            e_idx = self.compiled.net_index[ops[i].inputs[1]]
            if self.values[e_idx] == 0:
                self.stored[i] = self.values[d_idx]

    def _sample_timed_inputs(self) -> None:
        """Record current timed-operator input values as the last samples."""
        ops = self.compiled.netlist.operators
        for i in self.compiled.timed_ids:
            in_idx = self.compiled.net_index[ops[i].inputs[0]]
            self.last_in[i] = int(self.values[in_idx])

    def _initial_edges(self) -> bool:
        """Zero-width edge pass for stimulus applied at t = 0.

        Inputs raised at t = 0 count as rising edges from the atmospheric
        start state: edge detectors begin their pulse at 0 and filters
        record an edge time of 0.  Returns True if any pulse started.
        """
        compiled = self.compiled
        ops = compiled.netlist.operators
        changed = False
        for i in compiled.timed_ids:
            in_idx = compiled.net_index[ops[i].inputs[0]]
            v = int(self.values[in_idx])
            if v == 1 and self.last_in[i] == 0:
                kind = ops[i].kind
                if kind is OperatorKind.EDGE_DETECTOR:
                    self.pulse[i] = compiled.thresholds[i]
                    changed = True
                elif kind is OperatorKind.FILTER:
                    self.edge_times[i].append(0.0)
            self.last_in[i] = v
        return changed


def init_session(netlist: Netlist, config: Optional[SimConfig] = None) -> SimState:
    """All nets at 0, timers reset, one settle pass so gates are consistent."""
    config = config or SimConfig()
    hard = [d for d in netlist.diagnostics if d.severity == "error"]
    if hard:
        raise InvalidNetlistError(hard)
    compiled = CompiledCircuit(netlist, config)
    state = SimState(compiled)
    state._settle()
    state._latch_registers()
    state._sample_timed_inputs()
    return state


def set_input(state: SimState, net: str, value: int) -> SimState:
    """Set a primary input at the current time and resettle immediately.

    Change events are recorded on ``state.last_events``.  Timed-operator
    state is untouched; edges are observed by the next :func:`step`.
    """
    idx = state._input_index(net)
    value = int(value)
    if value not in (0, 1):
        raise ValueError("input value must be 0 or 1")
    if int(state.values[idx]) == value:
        state.last_events = []
        return state
    before = state.values.copy()
    state.values[idx] = value
    state._settle()
    state._latch_registers()
    state.last_events = state._diff_events(before)
    return state


def step(state: SimState, dt: Optional[float] = None) -> tuple[SimState, list[ChangeEvent]]:
    """Advance one tick; returns the state and the tick's change events."""
    dt = state.config.dt if dt is None else float(dt)
    if dt <= 0:
        raise ValueError("dt must be positive")
    compiled = state.compiled
    ops = compiled.netlist.operators
    before = state.values.copy()
    t_new = state.t + dt

    while state.pending and state.pending[0][0] <= t_new + _EPS:
        _, _, idx, value = heapq.heappop(state.pending)
        state.values[idx] = value

    for i in compiled.timed_ids:
        in_idx = compiled.net_index[ops[i].inputs[0]]
        v = int(state.values[in_idx])
        p = state.last_in[i]
        state.last_in[i] = v
        kind = ops[i].kind
        if kind is OperatorKind.TIMER:
            if v == 0:
                state.elapsed[i] = 0.0
            elif p == 1:
                state.elapsed[i] += dt
            else:
                state.elapsed[i] = 0.0  # rising edge: the count starts now
        elif kind is OperatorKind.EDGE_DETECTOR:
            if v == 1 and p == 0:
                state.pulse[i] = compiled.thresholds[i]
            else:
                state.pulse[i] = max(0.0, state.pulse[i] - dt)
        else:  # FILTER
            if v == 1 and p == 0:
                history = state.edge_times[i]
                history.append(t_new)
                if len(history) > 3:
                    del history[0]

    state.t = t_new
    try:
        state._settle()
    except OscillationError as exc:
        raise OscillationError(t_new, exc.nets) from None
    state._latch_registers()
    events = state._diff_events(before)
    state.last_events = events
    return state, events


def run(
    netlist: Netlist,
    stimulus: Stimulus,
    until: float,
    config: Optional[SimConfig] = None,
) -> Trace:
    """Batch simulation; deterministic in (netlist, stimulus, config)."""
    if until <= 0:
        raise ValueError("until must be positive")
    config = config or SimConfig()
    state = init_session(netlist, config)
    trace = Trace()
    before = state.values.copy()
    initial = False
    for t, net, value in stimulus.events:
        if t <= _EPS:
            state.values[state._input_index(net)] = int(value)
            initial = True
        else:
            state.queue_event(t, net, value)
    if initial:
        state._settle()
        if state._initial_edges():
            state._settle()  # pulses raised at t = 0 propagate immediately
        state._latch_registers()
        trace.events.extend(state._diff_events(before))
    trace.samples.append((0.0, state.net_values))
    while state.t < until - _EPS:
        try:
            _, events = step(state, config.dt)
        except OscillationError:
            raise
        trace.events.extend(events)
        trace.samples.append((state.t, state.net_values))
    return trace


def settle_assignment(
    compiled: CompiledCircuit, assignment: dict[str, int]
) -> dict[str, int]:
    """Settled net values for a static input assignment (gate circuits)."""
    values = np.zeros(compiled.n_nets, dtype=np.int8)
    for net, value in assignment.items():
        if net not in compiled.net_index:
            raise KeyError(net)
        values[compiled.net_index[net]] = int(value)
    compiled.settle_values(values)
    return {name: int(values[i]) for i, name in enumerate(compiled.net_names)}
