#!/usr/bin/env python3
"""Benchmark the pure-Python kernels against the compiled extension.

Two hot paths are measured: the combinational settle sweep (driven over
exhaustive input assignments of random gate circuits) and the annealing
loop (full placement runs).  Results also cross-check that both backends
produce identical outputs.

Usage: python3 benchmarks/kernel_bench.py [--settle-circuits N] [--seeds N]
"""

import argparse
import random
import sys
import time
from itertools import product
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

import numpy as np

from fluidc import _kernels
from fluidc.fchdl import parse_circuit
from fluidc.layout import SAConfig, place
from fluidc.simulator import CompiledCircuit, SimConfig

from oracles import random_gate_netlist

INSOLE_CIRCUIT = (
    "NOT(A; C) NOT(B; D) OR (C, D; Q) "
    "Timer(Q, 1800; TimerOutput) AND(Q, TimerOutput; Output I)"
)


def bench_settle(backend, circuits) -> tuple[float, int]:
    total_assignments = 0
    checksum = 0
    start = time.perf_counter()
    for compiled, assignments in circuits:
        program = backend.SettleProgram(
            compiled.kinds, compiled.ins, compiled.outs, compiled.driven
        )
        bits = np.zeros(compiled.n_ops, dtype=np.int8)
        stored = np.zeros(compiled.n_ops, dtype=np.int8)
        for values in assignments:
            work = values.copy()
            program.settle(work, bits, stored, compiled.max_settle_iters)
            checksum += int(work.sum())
            total_assignments += 1
    elapsed = time.perf_counter() - start
    return elapsed, checksum


def prepare_settle_inputs(n_circuits: int):
    rng = random.Random(1234)
    circuits = []
    for _ in range(n_circuits):
        netlist = random_gate_netlist(rng, max_inputs=8, max_gates=15)
        compiled = CompiledCircuit(netlist, SimConfig())
        inputs = sorted(netlist.primary_inputs)
        assignments = []
        for combo in product((0, 1), repeat=len(inputs)):
            values = np.zeros(compiled.n_nets, dtype=np.int8)
            for net, value in zip(inputs, combo):
                values[compiled.net_index[net]] = value
            assignments.append(values)
        circuits.append((compiled, assignments))
    return circuits


def bench_anneal(backend, seeds: int) -> tuple[float, float]:
    netlist = parse_circuit(INSOLE_CIRCUIT)
    start = time.perf_counter()
    total_cost = 0.0
    for seed in range(1, seeds + 1):
        result = place(netlist, SAConfig(seed=seed), backend=backend)
        total_cost += result.cost.total
    return time.perf_counter() - start, total_cost


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--settle-circuits", type=int, default=120)
    parser.add_argument("--seeds", type=int, default=8)
    args = parser.parse_args()

    backends = _kernels.available_backends()
    if "compiled" not in backends:
        print("compiled kernel not built; benchmarking pure only")

    circuits = prepare_settle_inputs(args.settle_circuits)
    rows = []
    checksums = set()
    costs = set()
    for name in backends:
        backend = _kernels.get_backend(name)
        settle_s, checksum = bench_settle(backend, circuits)
        anneal_s, cost = bench_anneal(backend, args.seeds)
        checksums.add(checksum)
        costs.add(round(cost, 9))
        rows.append((name, settle_s, anneal_s))

    n_assign = sum(len(a) for _, a in circuits)
    print(f"\nsettle: {len(circuits)} circuits, {n_assign} assignments total")
    print(f"anneal: 5-op insole circuit x {args.seeds} seeds, default schedule\n")
    print(f"{'backend':<10} {'settle [s]':>12} {'anneal [s]':>12}")
    for name, settle_s, anneal_s in rows:
        print(f"{name:<10} {settle_s:>12.3f} {anneal_s:>12.3f}")
    if len(rows) == 2:
        print(
            f"{'speedup':<10} {rows[1][1] / rows[0][1]:>11.1f}x "
            f"{rows[1][2] / rows[0][2]:>11.1f}x"
        )
    if len(checksums) != 1 or len(costs) != 1:
        print("ERROR: backends disagree on results", file=sys.stderr)
        return 1
    print("\nbackends agree on all outputs")
    return 0


if __name__ == "__main__":
    sys.exit(main())
