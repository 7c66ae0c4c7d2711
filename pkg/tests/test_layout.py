import random
import xml.etree.ElementTree as ET

import pytest

from fluidc import _kernels
from fluidc.fchdl import parse_circuit
from fluidc.layout import (
    Placement,
    SAConfig,
    export_layout_svg,
    layout_cost,
    place,
    place_best_of,
)

from conftest import INSOLE_CIRCUIT
from oracles import exhaustive_layout_optimum, random_gate_netlist

FAST = SAConfig(seed=3, moves_per_epoch=60, stall_epochs=8)


class TestCost:
    def test_fully_stacked_blocks_overlap(self):
        netlist = parse_circuit("NOT(A; C) NOT(C; Q)")
        placement = Placement(origins=((0, 0), (0, 0)), rotations=(0, 0))
        cost = layout_cost(placement, netlist)
        assert cost.overlap_cells == 4

    def test_manhattan_wire_metric(self):
        netlist = parse_circuit("NOT(A; C) NOT(C; Q)")
        # driver port lands at (1, 1), consumer input port at (4, 5)
        placement = Placement(origins=((0, 0), (4, 4)), rotations=(0, 0))
        cost = layout_cost(placement, netlist)
        assert cost.wire_manhattan == abs(1 - 4) + abs(1 - 5)

    def test_total_is_weighted_dot_product(self):
        netlist = parse_circuit("NOT(A; C) AND(C, B; Q) NOT(Q; R)")
        rng = random.Random(5)
        for _ in range(20):
            placement = Placement(
                origins=tuple((rng.randint(0, 8), rng.randint(0, 8)) for _ in range(3)),
                rotations=tuple(rng.choice((0, 90, 180, 270)) for _ in range(3)),
            )
            weights = (rng.uniform(1, 10), rng.uniform(1, 10), rng.uniform(1, 10))
            cost = layout_cost(placement, netlist, weights)
            expected = (
                weights[0] * cost.overlap_cells
                + weights[1] * cost.wire_manhattan
                + weights[2] * cost.bbox_area
            )
            assert cost.total == pytest.approx(expected)


class TestPlace:
    def test_single_gate(self):
        result = place(parse_circuit("NOT(A; Q)"), SAConfig(seed=9))
        assert result.cost.overlap_cells == 0
        assert result.cost.wire_manhattan == 0
        assert result.cost.total == 2.0 * 4  # w_area x footprint area

    def test_seed_determinism(self):
        netlist = parse_circuit(INSOLE_CIRCUIT)
        a = place(netlist, FAST)
        b = place(netlist, FAST)
        assert a.to_json() == b.to_json()
        assert a.cost == b.cost

    def test_final_not_worse_than_initial(self):
        rng = random.Random(11)
        for _ in range(10):
            netlist = random_gate_netlist(rng, max_inputs=4, max_gates=8)
            result = place(netlist, FAST)
            assert result.cost.total <= result.initial_cost + 1e-9

    def test_insole_zero_overlap(self):
        result = place(parse_circuit(INSOLE_CIRCUIT), SAConfig(seed=1))
        assert result.feasible
        assert result.cost.overlap_cells == 0

    def test_two_op_matches_exhaustive_optimum(self):
        netlist = parse_circuit("NOT(A; C) AND(C, B; Q)")
        best_total, best_wire, _ = exhaustive_layout_optimum(netlist, grid=10)
        result = place(netlist, SAConfig(seed=5, grid=10))
        assert result.cost.total == pytest.approx(best_total)
        assert result.cost.wire_manhattan == best_wire

    def test_infeasible_reported_best_effort(self):
        netlist = parse_circuit("NOT(A; C) NOT(C; D) NOT(D; Q)")
        result = place(netlist, SAConfig(seed=2, grid=3, moves_per_epoch=40, stall_epochs=5))
        assert not result.feasible
        assert result.cost.overlap_cells > 0

    def test_restarts_keep_best(self):
        netlist = parse_circuit(INSOLE_CIRCUIT)
        single = place(netlist, FAST)
        best = place_best_of(netlist, FAST, restarts=3)
        assert best.cost.total <= single.cost.total + 1e-9

    @pytest.mark.skipif(
        "compiled" not in _kernels.available_backends(),
        reason="compiled kernel not built",
    )
    def test_backend_parity(self):
        netlist = parse_circuit(INSOLE_CIRCUIT)
        compiled = place(netlist, FAST, backend=_kernels.get_backend("compiled"))
        pure = place(netlist, FAST, backend=_kernels.get_backend("pure"))
        assert compiled.to_json() == pure.to_json()


class TestSvg:
    def test_insole_rendering(self):
        netlist = parse_circuit(INSOLE_CIRCUIT)
        result = place(netlist, FAST)
        svg = export_layout_svg(result, netlist)
        root = ET.fromstring(svg)
        assert root.tag.endswith("svg")
        assert svg.count('class="operator"') == 5
        # one polyline per connected net (C, D, Q, TimerOutput) plus the
        # A and B input stubs
        assert svg.count("<polyline") == 6

    def test_single_gate_single_rect(self):
        netlist = parse_circuit("NOT(A; Q)")
        result = place(netlist, SAConfig(seed=4))
        svg = export_layout_svg(result, netlist)
        assert svg.count('class="operator"') == 1
