"""Independent oracles for the test suite.

``eval_combinational`` evaluates a gate netlist directly (memoized
recursion over the drive structure, ordinary Python booleans) — a route
entirely separate from the simulator's settle kernel.
``random_gate_netlist`` builds random acyclic gate circuits for the
equivalence sweeps.
"""

from __future__ import annotations

import random

from fluidc.fchdl import Netlist, OperatorKind, parse_circuit

GATES = [
    OperatorKind.NOT,
    OperatorKind.OR,
    OperatorKind.AND,
    OperatorKind.NOR,
    OperatorKind.NAND,
    OperatorKind.XOR,
]


def eval_combinational(netlist: Netlist, assignment: dict[str, int]) -> dict[str, int]:
    """Direct boolean evaluation of an acyclic gate/diode netlist."""
    drivers: dict[str, list] = {}
    for op in netlist.operators:
        for port, net in enumerate(op.outputs):
            drivers.setdefault(net, []).append((op, port))

    cache: dict[str, int] = dict(assignment)

    def net_value(net: str) -> int:
        if net in cache:
            return cache[net]
        drs = drivers.get(net)
        if not drs:
            cache[net] = 0  # undriven, unassigned: atmospheric
            return 0
        value = 0
        cache[net] = 0  # guards against accidental cycles
        for op, port in drs:
            value |= op_output(op, port)
        cache[net] = value
        return value

    def op_output(op, port: int) -> int:
        kind = op.kind
        if kind is OperatorKind.NOT:
            return 1 - net_value(op.inputs[0])
        if kind is OperatorKind.OR:
            return net_value(op.inputs[0]) | net_value(op.inputs[1])
        if kind is OperatorKind.AND:
            return net_value(op.inputs[0]) & net_value(op.inputs[1])
        if kind is OperatorKind.NOR:
            return 1 - (net_value(op.inputs[0]) | net_value(op.inputs[1]))
        if kind is OperatorKind.NAND:
            return 1 - (net_value(op.inputs[0]) & net_value(op.inputs[1]))
        if kind is OperatorKind.XOR:
            return net_value(op.inputs[0]) ^ net_value(op.inputs[1])
        if kind is OperatorKind.DIODE:
            return net_value(op.inputs[0]) if op.direction == "forward" else 0
        if kind is OperatorKind.MULTIPLEXER:
            sel = 2 * net_value(op.inputs[4]) + net_value(op.inputs[5])
            return net_value(op.inputs[sel])
        if kind is OperatorKind.DEMULTIPLEXER:
            sel = 2 * net_value(op.inputs[1]) + net_value(op.inputs[2])
            return net_value(op.inputs[0]) if port == sel else 0
        raise ValueError(f"not a combinational operator: {kind}")

    return {net: net_value(net) for net in netlist.nets}


def random_gate_netlist(
    rng: random.Random, max_inputs: int = 8, max_gates: int = 15
) -> Netlist:
    """Random acyclic circuit over the six boolean gates."""
    n_inputs = rng.randint(1, max_inputs)
    n_gates = rng.randint(1, max_gates)
    available = [f"in{i}" for i in range(n_inputs)]
    parts = []
    for g in range(n_gates):
        kind = rng.choice(GATES)
        out = f"g{g}"
        if kind is OperatorKind.NOT:
            a = rng.choice(available)
            parts.append(f"NOT({a}; {out})")
        else:
            a, b = rng.choice(available), rng.choice(available)
            parts.append(f"{kind.value}({a}, {b}; {out})")
        available.append(out)
    return parse_circuit(" ".join(parts))


def exhaustive_layout_optimum(netlist, grid=10, weights=(1000.0, 1.0, 2.0)):
    """Brute-force optimal placement cost over a bounded grid.

    Enumerates rotations and positions (the first operator is pinned for
    three-operator instances; the objective is translation invariant).
    Only zero-overlap placements count.  Cost arithmetic is written out
    here independently of fluidc.layout.layout_cost.

    Returns (best_total, wire_at_best, area_at_best).
    """
    from itertools import product as iproduct

    from fluidc.layout import TEMPLATES, rotated_port

    ops = netlist.operators
    n = len(ops)
    assert n in (2, 3), "oracle is sized for 2-3 operators"
    w_o, w_w, w_a = weights

    toks = [TEMPLATES[op.kind] for op in ops]
    dims = []  # per op: dict rot -> (w, h)
    for tpl in toks:
        dims.append({r: (tpl.width, tpl.height) if r % 2 == 0 else (tpl.height, tpl.width) for r in range(4)})

    # connection list: (driver op, driver tpl port, consumer op, consumer tpl port)
    drivers = {}
    for op in ops:
        for port_index, net in enumerate(op.outputs):
            outs = [p for p in toks[op.id].ports if p.role.startswith("out")]
            drivers.setdefault(net, []).append((op.id, outs[port_index]))
    conns = []
    for op in ops:
        ins = [p for p in toks[op.id].ports if p.role.startswith("in")]
        for port_index, net in enumerate(op.inputs):
            for drv_id, drv_port in drivers.get(net, ()):
                conns.append((drv_id, drv_port, op.id, ins[port_index]))

    def placements_for(i):
        for rot in range(4):
            w, h = dims[i][rot]
            for x in range(grid - w + 1):
                for y in range(grid - h + 1):
                    yield (x, y, rot)

    if n == 2:
        spaces = [list(placements_for(0)), list(placements_for(1))]
    else:
        mid = grid // 2 - 1
        spaces = [
            [(mid, mid, rot) for rot in range(4)],
            list(placements_for(1)),
            list(placements_for(2)),
        ]

    best = None
    for combo in iproduct(*spaces):
        overlap = 0
        for i in range(n):
            xi, yi, ri = combo[i]
            wi, hi = dims[i][ri]
            for j in range(i + 1, n):
                xj, yj, rj = combo[j]
                wj, hj = dims[j][rj]
                ow = min(xi + wi, xj + wj) - max(xi, xj)
                oh = min(yi + hi, yj + hj) - max(yi, yj)
                if ow > 0 and oh > 0:
                    overlap += ow * oh
        if overlap:
            continue
        xs0 = [combo[i][0] for i in range(n)]
        ys0 = [combo[i][1] for i in range(n)]
        xs1 = [combo[i][0] + dims[i][combo[i][2]][0] for i in range(n)]
        ys1 = [combo[i][1] + dims[i][combo[i][2]][1] for i in range(n)]
        area = (max(xs1) - min(xs0)) * (max(ys1) - min(ys0))
        wire = 0
        for drv_id, drv_port, cons_id, cons_port in conns:
            dx, dy, dr = combo[drv_id]
            cxp, cyp, cr = combo[cons_id]
            tpl_d, tpl_c = toks[drv_id], toks[cons_id]
            rdx, rdy = rotated_port(tpl_d, drv_port, dr * 90)
            rcx, rcy = rotated_port(tpl_c, cons_port, cr * 90)
            ax, ay = dx + rdx, dy + rdy
            bx, by = cxp + rcx, cyp + rcy
            wire += abs(ax - bx) + abs(ay - by)
        total = w_o * 0 + w_w * wire + w_a * area
        key = (total, wire, area)
        if best is None or key < best:
            best = key
    return best
