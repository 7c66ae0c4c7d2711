"""Parity between the pure-Python and compiled kernel backends."""

import random
from itertools import product

import numpy as np
import pytest

from fluidc import _kernels
from fluidc.fchdl import parse_circuit
from fluidc.simulator import CompiledCircuit, SimConfig

from oracles import random_gate_netlist

BACKENDS = _kernels.available_backends()
needs_both = pytest.mark.skipif(
    "compiled" not in BACKENDS, reason="compiled kernel not built"
)


def test_backend_selected():
    assert _kernels.BACKEND in ("compiled", "pure")


def test_unknown_backend_rejected():
    with pytest.raises(ValueError):
        _kernels.get_backend("fortran")


def _settle_with(backend, compiled: CompiledCircuit, assignment):
    program = backend.SettleProgram(
        compiled.kinds, compiled.ins, compiled.outs, compiled.driven
    )
    values = np.zeros(compiled.n_nets, dtype=np.int8)
    for net, value in assignment.items():
        values[compiled.net_index[net]] = value
    bits = np.zeros(compiled.n_ops, dtype=np.int8)
    stored = np.zeros(compiled.n_ops, dtype=np.int8)
    sweeps = program.settle(values, bits, stored, compiled.max_settle_iters)
    return sweeps, values.tolist()


@needs_both
def test_settle_parity_random_circuits():
    rng = random.Random(23)
    pure = _kernels.get_backend("pure")
    comp = _kernels.get_backend("compiled")
    for _ in range(60):
        netlist = random_gate_netlist(rng, max_inputs=5, max_gates=10)
        compiled = CompiledCircuit(netlist, SimConfig())
        inputs = sorted(netlist.primary_inputs)
        for combo in product((0, 1), repeat=min(len(inputs), 5)):
            assignment = dict(zip(inputs, combo))
            assert _settle_with(pure, compiled, assignment) == _settle_with(
                comp, compiled, assignment
            )


@needs_both
def test_settle_nonconvergence_parity():
    netlist = parse_circuit("NOT(Q; P) NOT(P; Q)")
    compiled = CompiledCircuit(netlist, SimConfig())
    pure = _kernels.get_backend("pure")
    comp = _kernels.get_backend("compiled")
    assert _settle_with(pure, compiled, {})[0] == -1
    assert _settle_with(comp, compiled, {})[0] == -1


@needs_both
def test_anneal_stream_parity():
    """Identical RNG streams make the two backends bit-identical."""
    fw = [2, 2, 2, 1]
    fh = [2, 3, 2, 2]
    port_op = [0, 0, 1, 1, 2, 2, 3, 3]
    port_dx = [0, 1, 0, 1, 0, 1, 0, 0]
    port_dy = [1, 1, 1, 1, 0, 0, 0, 1]
    conn_a = [1, 3, 5]
    conn_b = [2, 4, 6]
    args = (12, 1000.0, 1.0, 2.0, 80, 0.9, 0.8, 1e-3, 6)
    results = []
    for name in ("pure", "compiled"):
        backend = _kernels.get_backend(name)
        program = backend.AnnealProgram(
            fw, fh, port_op, port_dx, port_dy, conn_a, conn_b, 12
        )
        results.append(program.anneal(*args))
    assert results[0] == results[1]
