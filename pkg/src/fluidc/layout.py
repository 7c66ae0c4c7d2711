"""Physical placement of operator footprints via simulated annealing.

Operators occupy rectangular grid footprints with ports on the boundary;
the annealer minimizes a weighted sum of pairwise overlap cells, total
port-to-port Manhattan wire length, and bounding-box area.  Runs are
seeded and deterministic; the hot loop lives in the kernel backend.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from . import _kernels
from .fchdl import Netlist, OperatorKind

_MASK64 = (1 << 64) - 1


class PlacementError(Exception):
    pass


@dataclass(frozen=True)
class PortSpec:
    role: str  # "in0", "in1", ... or "out0", ...
    dx: int
    dy: int
    edge: str  # N | E | S | W


@dataclass(frozen=True)
class OperatorTemplate:
    kind: OperatorKind
    width: int
    height: int
    ports: tuple[PortSpec, ...]


def _spread(count: int, extent: int) -> list[int]:
    """Distribute ``count`` port cells along an edge of ``extent`` cells."""
    if count == 1:
        return [extent // 2]
    if count <= extent:
        return list(range(count))
    return [min(i, extent - 1) for i in range(count)]


def _template(kind: OperatorKind, width: int, height: int, n_in: int, n_out: int) -> OperatorTemplate:
    ports = []
    for port, dy in zip(range(n_in), _spread(n_in, height)):
        ports.append(PortSpec(role=f"in{port}", dx=0, dy=dy, edge="W"))
    for port, dy in zip(range(n_out), _spread(n_out, height)):
        ports.append(PortSpec(role=f"out{port}", dx=width - 1, dy=dy, edge="E"))
    return OperatorTemplate(kind=kind, width=width, height=height, ports=tuple(ports))


# footprints: gates 2x2, timed/register 2x3, mux/demux 3x4, diode 1x2
TEMPLATES: dict[OperatorKind, OperatorTemplate] = {
    OperatorKind.NOT: _template(OperatorKind.NOT, 2, 2, 1, 1),
    OperatorKind.OR: _template(OperatorKind.OR, 2, 2, 2, 1),
    OperatorKind.AND: _template(OperatorKind.AND, 2, 2, 2, 1),
    OperatorKind.NOR: _template(OperatorKind.NOR, 2, 2, 2, 1),
    OperatorKind.NAND: _template(OperatorKind.NAND, 2, 2, 2, 1),
    OperatorKind.XOR: _template(OperatorKind.XOR, 2, 2, 2, 1),
    OperatorKind.FILTER: _template(OperatorKind.FILTER, 2, 3, 1, 1),
    OperatorKind.TIMER: _template(OperatorKind.TIMER, 2, 3, 1, 1),
    OperatorKind.EDGE_DETECTOR: _template(OperatorKind.EDGE_DETECTOR, 2, 3, 1, 1),
    OperatorKind.REGISTER: _template(OperatorKind.REGISTER, 2, 3, 2, 2),
    OperatorKind.MULTIPLEXER: _template(OperatorKind.MULTIPLEXER, 3, 4, 6, 1),
    OperatorKind.DEMULTIPLEXER: _template(OperatorKind.DEMULTIPLEXER, 3, 4, 3, 4),
    OperatorKind.DIODE: _template(OperatorKind.DIODE, 1, 2, 1, 1),
}


@dataclass(frozen=True)
class SAConfig:
    seed: int = 1
    w_overlap: float = 1000.0
    w_wire: float = 1.0
    w_area: float = 2.0
    moves_per_epoch: Optional[int] = None  # defaults to 100 * operator count
    cooling_alpha: float = 0.95
    initial_acceptance: float = 0.8
    min_temp_ratio: float = 1e-4
    stall_epochs: int = 20
    grid: Optional[int] = None  # working grid edge, cells

    def __post_init__(self):
        if min(self.w_overlap, self.w_wire, self.w_area) < 0:
            raise ValueError("weights must be non-negative")
        if self.w_overlap == self.w_wire == self.w_area == 0:
            raise ValueError("at least one weight must be positive")
        if not 0 < self.cooling_alpha < 1:
            raise ValueError("cooling_alpha must lie in (0, 1)")
        if not 0 < self.initial_acceptance < 1:
            raise ValueError("initial_acceptance must lie in (0, 1)")


@dataclass(frozen=True)
class Placement:
    """Per-operator origin cell and quarter-turn rotation (degrees)."""

    origins: tuple[tuple[int, int], ...]
    rotations: tuple[int, ...]  # 0 | 90 | 180 | 270


@dataclass(frozen=True)
class CostBreakdown:
    overlap_cells: int
    wire_manhattan: int
    bbox_area: int
    total: float


@dataclass(frozen=True)
class Wire:
    net: str
    from_op: int
    from_port: tuple[int, int]
    to_op: int
    to_port: tuple[int, int]


@dataclass(frozen=True)
class LayoutResult:
    placement: Placement
    cost: CostBreakdown
    wires: tuple[Wire, ...]
    bbox: tuple[int, int, int, int]  # x0, y0, x1, y1 (exclusive)
    seed_used: int
    feasible: bool
    epochs: int
    initial_cost: float = 0.0

    def to_json(self) -> dict:
        return {
            "placements": [
                {"id": i, "x": x, "y": y, "rot": rot}
                for i, ((x, y), rot) in enumerate(
                    zip(self.placement.origins, self.placement.rotations)
                )
            ],
            "cost": {
                "overlap": self.cost.overlap_cells,
                "wire": self.cost.wire_manhattan,
                "area": self.cost.bbox_area,
                "total": self.cost.total,
            },
            "seed": self.seed_used,
            "feasible": self.feasible,
        }


def placed_dims(kind: OperatorKind, rotation: int) -> tuple[int, int]:
    tpl = TEMPLATES[kind]
    if rotation % 180 == 0:
        return tpl.width, tpl.height
    return tpl.height, tpl.width


def rotated_port(tpl: OperatorTemplate, port: PortSpec, rotation: int) -> tuple[int, int]:
    """Port cell offset after quarter-turn rotation of the footprint."""
    w, h, dx, dy = tpl.width, tpl.height, port.dx, port.dy
    if rotation == 0:
        return dx, dy
    if rotation == 90:
        return h - 1 - dy, dx
    if rotation == 180:
        return w - 1 - dx, h - 1 - dy
    if rotation == 270:
        return dy, w - 1 - dx
    raise ValueError(f"rotation must be a quarter turn, got {rotation}")


def _port_lookup(netlist: Netlist):
    """Per operator: input/output port specs in port order."""
    specs = []
    for op in netlist.operators:
        tpl = TEMPLATES[op.kind]
        ins = [p for p in tpl.ports if p.role.startswith("in")]
        outs = [p for p in tpl.ports if p.role.startswith("out")]
        specs.append((tpl, ins, outs))
    return specs


def _connections(netlist: Netlist):
    """(net, driver op, driver port spec, consumer op, consumer port spec)."""
    specs = _port_lookup(netlist)
    drivers = netlist.drivers()
    out = []
    for op in netlist.operators:
        for port_index, net in enumerate(op.inputs):
            for drv_id, drv_port in drivers.get(net, ()):
                out.append(
                    (
                        net,
                        drv_id,
                        specs[drv_id][2][drv_port],
                        op.id,
                        specs[op.id][1][port_index],
                    )
                )
    return out


def port_position(
    netlist: Netlist, placement: Placement, op_id: int, port: PortSpec
) -> tuple[int, int]:
    tpl = TEMPLATES[netlist.operators[op_id].kind]
    rx, ry = rotated_port(tpl, port, placement.rotations[op_id])
    ox, oy = placement.origins[op_id]
    return ox + rx, oy + ry


def layout_cost(
    placement: Placement,
    netlist: Netlist,
    weights: tuple[float, float, float] = (1000.0, 1.0, 2.0),
) -> CostBreakdown:
    """Pure recomputation of the annealer's objective (the certification path)."""
    n = len(netlist.operators)
    if len(placement.origins) != n:
        raise PlacementError("placement does not cover every operator")
    dims = [
        placed_dims(op.kind, placement.rotations[i])
        for i, op in enumerate(netlist.operators)
    ]
    overlap = 0
    for i in range(n):
        xi, yi = placement.origins[i]
        wi, hi = dims[i]
        for j in range(i + 1, n):
            xj, yj = placement.origins[j]
            wj, hj = dims[j]
            ow = min(xi + wi, xj + wj) - max(xi, xj)
            oh = min(yi + hi, yj + hj) - max(yi, yj)
            if ow > 0 and oh > 0:
                overlap += ow * oh

    wire = 0
    for _, drv_id, drv_port, cons_id, cons_port in _connections(netlist):
        ax, ay = port_position(netlist, placement, drv_id, drv_port)
        bx, by = port_position(netlist, placement, cons_id, cons_port)
        wire += abs(ax - bx) + abs(ay - by)

    if n:
        x0 = min(placement.origins[i][0] for i in range(n))
        y0 = min(placement.origins[i][1] for i in range(n))
        x1 = max(placement.origins[i][0] + dims[i][0] for i in range(n))
        y1 = max(placement.origins[i][1] + dims[i][1] for i in range(n))
        area = (x1 - x0) * (y1 - y0)
    else:
        area = 0
    w_o, w_w, w_a = weights
    return CostBreakdown(
        overlap_cells=overlap,
        wire_manhattan=wire,
        bbox_area=area,
        total=w_o * overlap + w_w * wire + w_a * area,
    )


def default_grid(netlist: Netlist) -> int:
    total = sum(
        TEMPLATES[op.kind].width * TEMPLATES[op.kind].height for op in netlist.operators
    )
    largest = max(
        (max(TEMPLATES[op.kind].width, TEMPLATES[op.kind].height) for op in netlist.operators),
        default=2,
    )
    return max(8, int(math.ceil(math.sqrt(total * 4))) + largest)


def _encode(netlist: Netlist, grid: int, backend=None):
    backend = backend or _kernels
    fw, fh = [], []
    port_op, port_dx, port_dy = [], [], []
    port_index: dict[tuple[int, str], int] = {}
    specs = _port_lookup(netlist)
    for op in netlist.operators:
        tpl = specs[op.id][0]
        fw.append(tpl.width)
        fh.append(tpl.height)
        for port in tpl.ports:
            port_index[(op.id, port.role)] = len(port_op)
            port_op.append(op.id)
            port_dx.append(port.dx)
            port_dy.append(port.dy)
    conn_a, conn_b = [], []
    for _, drv_id, drv_port, cons_id, cons_port in _connections(netlist):
        conn_a.append(port_index[(drv_id, drv_port.role)])
        conn_b.append(port_index[(cons_id, cons_port.role)])
    return backend.AnnealProgram(fw, fh, port_op, port_dx, port_dy, conn_a, conn_b, grid)


def place(
    netlist: Netlist, config: Optional[SAConfig] = None, backend=None
) -> LayoutResult:
    """Seeded annealing; returns the best placement visited.

    The result's cost breakdown is recomputed independently of the kernel,
    so a reported overlap of zero is certified.
    """
    if not netlist.operators:
        raise PlacementError("cannot place an empty netlist")
    config = config or SAConfig()
    grid = config.grid or default_grid(netlist)
    moves = config.moves_per_epoch or 100 * len(netlist.operators)
    program = _encode(netlist, grid, backend)
    x, y, rot, best_cost, init_cost, epochs = program.anneal(
        config.seed & _MASK64,
        config.w_overlap,
        config.w_wire,
        config.w_area,
        moves,
        config.cooling_alpha,
        config.initial_acceptance,
        config.min_temp_ratio,
        config.stall_epochs,
    )
    placement = Placement(
        origins=tuple((int(a), int(b)) for a, b in zip(x, y)),
        rotations=tuple(int(r) * 90 for r in rot),
    )
    cost = layout_cost(placement, netlist, (config.w_overlap, config.w_wire, config.w_area))
    if not math.isclose(cost.total, best_cost, rel_tol=1e-9, abs_tol=1e-6):
        raise PlacementError(
            f"kernel cost {best_cost} disagrees with recomputation {cost.total}"
        )
    wires = []
    for net, drv_id, drv_port, cons_id, cons_port in _connections(netlist):
        wires.append(
            Wire(
                net=net,
                from_op=drv_id,
                from_port=port_position(netlist, placement, drv_id, drv_port),
                to_op=cons_id,
                to_port=port_position(netlist, placement, cons_id, cons_port),
            )
        )
    dims = [
        placed_dims(op.kind, placement.rotations[i])
        for i, op in enumerate(netlist.operators)
    ]
    bbox = (
        min(o[0] for o in placement.origins),
        min(o[1] for o in placement.origins),
        max(o[0] + d[0] for o, d in zip(placement.origins, dims)),
        max(o[1] + d[1] for o, d in zip(placement.origins, dims)),
    )
    return LayoutResult(
        placement=placement,
        cost=cost,
        wires=tuple(wires),
        bbox=bbox,
        seed_used=config.seed,
        feasible=cost.overlap_cells == 0,
        epochs=epochs,
        initial_cost=init_cost,
    )


def place_best_of(netlist: Netlist, config: SAConfig, restarts: int) -> LayoutResult:
    """Run k seeded instances (seed, seed+1, ...) and keep the cheapest."""
    best: Optional[LayoutResult] = None
    for k in range(max(1, restarts)):
        cfg = SAConfig(
            seed=config.seed + k,
            w_overlap=config.w_overlap,
            w_wire=config.w_wire,
            w_area=config.w_area,
            moves_per_epoch=config.moves_per_epoch,
            cooling_alpha=config.cooling_alpha,
            initial_acceptance=config.initial_acceptance,
            min_temp_ratio=config.min_temp_ratio,
            stall_epochs=config.stall_epochs,
            grid=config.grid,
        )
        result = place(netlist, cfg)
        if best is None or result.cost.total < best.cost.total:
            best = result
    return best


_CELL_MM = 10.0


def export_layout_svg(result: LayoutResult, netlist: Netlist) -> str:
    """Schematic SVG: one labeled rect per operator, port ticks, L-routed wires.

    Each net becomes one polyline from its driver port through every
    consumer port; primary-input nets get a short entry stub into their
    first consumer.  10 mm per grid cell.
    """
    pad = 2
    x0, y0, x1, y1 = result.bbox
    width = (x1 - x0 + 2 * pad) * _CELL_MM
    height = (y1 - y0 + 2 * pad) * _CELL_MM

    def cx(gx: float) -> float:
        return (gx - x0 + pad) * _CELL_MM + _CELL_MM / 2.0

    def cy(gy: float) -> float:
        return (gy - y0 + pad) * _CELL_MM + _CELL_MM / 2.0

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}mm" '
        f'height="{height:.0f}mm" viewBox="0 0 {width:.0f} {height:.0f}">',
        '<g font-family="sans-serif" font-size="6">',
    ]
    specs = _port_lookup(netlist)
    for i, op in enumerate(netlist.operators):
        (ox, oy) = result.placement.origins[i]
        w, h = placed_dims(op.kind, result.placement.rotations[i])
        rx = (ox - x0 + pad) * _CELL_MM
        ry = (oy - y0 + pad) * _CELL_MM
        lines.append(
            f'<rect class="operator" x="{rx:.0f}" y="{ry:.0f}" '
            f'width="{w * _CELL_MM:.0f}" height="{h * _CELL_MM:.0f}" '
            'fill="white" stroke="black"/>'
        )
        lines.append(
            f'<text x="{rx + 2:.0f}" y="{ry + 7:.0f}">{op.kind.value} #{i}</text>'
        )
        tpl = specs[i][0]
        for port in tpl.ports:
            px, py = port_position(netlist, result.placement, i, port)
            lines.append(
                f'<circle class="port" cx="{cx(px):.0f}" cy="{cy(py):.0f}" r="1.5" '
                'fill="black"/>'
            )

    # one polyline per connected net, plus entry stubs for primary inputs
    by_net: dict[str, list[Wire]] = {}
    for wire in result.wires:
        by_net.setdefault(wire.net, []).append(wire)
    consumers = netlist.consumers()
    for net, wires in sorted(by_net.items()):
        points = [wires[0].from_port] + [w.to_port for w in wires]
        path = []
        for (ax, ay), (bx, by) in zip(points, points[1:]):
            path.append((ax, ay))
            path.append((bx, ay))  # L-shaped Manhattan elbow
        path.append(points[-1])
        attr = " ".join(f"{cx(px):.0f},{cy(py):.0f}" for px, py in path)
        lines.append(
            f'<polyline class="wire" data-net="{net}" points="{attr}" '
            'fill="none" stroke="steelblue"/>'
        )
    for net in sorted(netlist.primary_inputs):
        if net not in consumers:
            continue
        op_id, port_idx = consumers[net][0]
        port = specs[op_id][1][port_idx]
        px, py = port_position(netlist, result.placement, op_id, port)
        lines.append(
            f'<polyline class="wire input-stub" data-net="{net}" '
            f'points="{cx(px) - _CELL_MM:.0f},{cy(py):.0f} {cx(px):.0f},{cy(py):.0f}" '
            'fill="none" stroke="seagreen"/>'
        )
        lines.append(
            f'<text x="{cx(px) - _CELL_MM:.0f}" y="{cy(py) - 2:.0f}">{net}</text>'
        )
    lines.append("</g>")
    lines.append("</svg>")
    return "\n".join(lines)
