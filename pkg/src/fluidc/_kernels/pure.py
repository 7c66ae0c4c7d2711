"""Pure-Python kernels: combinational settle and annealing inner loop.

This is the fallback backend; ``fluidc._kernels._core`` is the compiled
twin with identical semantics (including the RNG stream, so results are
bit-identical across backends).  Keep the two implementations in lockstep.
"""

from __future__ import annotations

import math

from .codes import (
    K_AND,
    K_DEMUX,
    K_DIODE_B,
    K_DIODE_F,
    K_MUX,
    K_NAND,
    K_NOR,
    K_NOT,
    K_OR,
    K_REGISTER,
    K_XOR,
)

BACKEND_NAME = "pure"

_MASK64 = (1 << 64) - 1
_INV53 = 1.0 / 9007199254740992.0  # 2**-53


class SettleProgram:
    """Jacobi settle over an opcode-encoded netlist."""

    def __init__(self, op_kind, op_in, op_out, driven):
        self.kinds = [int(k) for k in op_kind]
        self.ins = [tuple(int(x) for x in row) for row in op_in]
        self.outs = [tuple(int(x) for x in row) for row in op_out]
        self.driven = [bool(d) for d in driven]
        self.n_ops = len(self.kinds)
        self.n_nets = len(self.driven)

    def settle(self, values, timed_out, reg_stored, max_iters):
        """Iterate to fixpoint; ``values`` is written in place.

        Returns the number of sweeps performed on convergence, -1 if the
        iteration budget was exhausted (``values`` then holds the last
        sweep's result).
        """
        vals = [int(v) for v in values]
        timed = [int(v) for v in timed_out]
        stored = [int(v) for v in reg_stored]
        kinds, ins, outs, driven = self.kinds, self.ins, self.outs, self.driven
        n_nets = self.n_nets
        for sweep in range(1, max_iters + 1):
            new = [0 if driven[k] else vals[k] for k in range(n_nets)]
            for i in range(self.n_ops):
                k = kinds[i]
                a = ins[i]
                o = outs[i]
                if k == K_NOT:
                    new[o[0]] |= 1 - vals[a[0]]
                elif k == K_OR:
                    new[o[0]] |= vals[a[0]] | vals[a[1]]
                elif k == K_AND:
                    new[o[0]] |= vals[a[0]] & vals[a[1]]
                elif k == K_NOR:
                    new[o[0]] |= 1 - (vals[a[0]] | vals[a[1]])
                elif k == K_NAND:
                    new[o[0]] |= 1 - (vals[a[0]] & vals[a[1]])
                elif k == K_XOR:
                    new[o[0]] |= vals[a[0]] ^ vals[a[1]]
                elif k == K_REGISTER:
                    q = vals[a[0]] if vals[a[1]] == 0 else stored[i]
                    new[o[0]] |= q
                    new[o[1]] |= 1 - q
                elif k == K_MUX:
                    sel = 2 * vals[a[4]] + vals[a[5]]
                    new[o[0]] |= vals[a[sel]]
                elif k == K_DEMUX:
                    sel = 2 * vals[a[1]] + vals[a[2]]
                    new[o[sel]] |= vals[a[0]]
                elif k == K_DIODE_F:
                    new[o[0]] |= vals[a[0]]
                elif k == K_DIODE_B:
                    pass  # blocks; drives 0
                else:  # K_FILTER, K_TIMER, K_EDGE: state decided before settle
                    new[o[0]] |= timed[i]
            if new == vals:
                values[:] = new
                return sweep
            vals = new
        values[:] = vals
        return -1


def _rng_next(state):
    state ^= state >> 12
    state = (state ^ (state << 25)) & _MASK64
    state ^= state >> 27
    return state, (state * 2685821657736338717) & _MASK64


class _Rng:
    """xorshift64* stream; mirrored bit-for-bit in the compiled backend."""

    def __init__(self, seed):
        self.state = (seed or 0x9E3779B97F4A7C15) & _MASK64

    def u64(self):
        self.state, out = _rng_next(self.state)
        return out

    def u01(self):
        return (self.u64() >> 11) * _INV53

    def below(self, n):
        return self.u64() % n


def _rot_port(dx, dy, w, h, rot):
    if rot == 0:
        return dx, dy
    if rot == 1:
        return h - 1 - dy, dx
    if rot == 2:
        return w - 1 - dx, h - 1 - dy
    return dy, w - 1 - dx


class AnnealProgram:
    """Simulated-annealing placement over rectangular footprints."""

    def __init__(self, fw, fh, port_op, port_dx, port_dy, conn_a, conn_b, grid):
        self.fw = [int(v) for v in fw]
        self.fh = [int(v) for v in fh]
        self.port_op = [int(v) for v in port_op]
        self.port_dx = [int(v) for v in port_dx]
        self.port_dy = [int(v) for v in port_dy]
        self.conn_a = [int(v) for v in conn_a]
        self.conn_b = [int(v) for v in conn_b]
        self.grid = int(grid)
        self.n_ops = len(self.fw)

    def _placed_dims(self, i, rot):
        if rot % 2 == 0:
            return self.fw[i], self.fh[i]
        return self.fh[i], self.fw[i]

    def _cost(self, x, y, rot):
        n = self.n_ops
        overlap = 0
        for i in range(n):
            wi, hi = self._placed_dims(i, rot[i])
            for j in range(i + 1, n):
                wj, hj = self._placed_dims(j, rot[j])
                ow = min(x[i] + wi, x[j] + wj) - max(x[i], x[j])
                if ow <= 0:
                    continue
                oh = min(y[i] + hi, y[j] + hj) - max(y[i], y[j])
                if oh > 0:
                    overlap += ow * oh
        minx = miny = 1 << 30
        maxx = maxy = -(1 << 30)
        for i in range(n):
            wi, hi = self._placed_dims(i, rot[i])
            minx = min(minx, x[i])
            miny = min(miny, y[i])
            maxx = max(maxx, x[i] + wi)
            maxy = max(maxy, y[i] + hi)
        area = (maxx - minx) * (maxy - miny) if n else 0
        wire = 0
        px = [0] * len(self.port_op)
        py = [0] * len(self.port_op)
        for p in range(len(self.port_op)):
            i = self.port_op[p]
            rx, ry = _rot_port(
                self.port_dx[p], self.port_dy[p], self.fw[i], self.fh[i], rot[i]
            )
            px[p] = x[i] + rx
            py[p] = y[i] + ry
        for c in range(len(self.conn_a)):
            a, b = self.conn_a[c], self.conn_b[c]
            wire += abs(px[a] - px[b]) + abs(py[a] - py[b])
        return overlap, wire, area

    def _total(self, x, y, rot, w_overlap, w_wire, w_area):
        o, w, a = self._cost(x, y, rot)
        return w_overlap * o + w_wire * w + w_area * a

    def anneal(
        self,
        seed,
        w_overlap,
        w_wire,
        w_area,
        moves_per_epoch,
        alpha,
        initial_acceptance,
        min_t_ratio,
        stall_epochs,
    ):
        """Returns (x, y, rot, best_cost, init_cost, epochs)."""
        rng = _Rng(seed)
        n = self.n_ops
        grid = self.grid
        x = [0] * n
        y = [0] * n
        rot = [0] * n
        for i in range(n):
            rot[i] = rng.below(4)
            w, h = self._placed_dims(i, rot[i])
            x[i] = rng.below(max(1, grid - w + 1))
            y[i] = rng.below(max(1, grid - h + 1))

        cur = self._total(x, y, rot, w_overlap, w_wire, w_area)
        init_cost = cur
        best = cur
        bx, by, brot = list(x), list(y), list(rot)

        def propose():
            i = rng.below(n)
            if rng.u01() < 0.5:
                minx = miny = 1 << 30
                maxx = maxy = -(1 << 30)
                for j in range(n):
                    wj, hj = self._placed_dims(j, rot[j])
                    minx = min(minx, x[j])
                    miny = min(miny, y[j])
                    maxx = max(maxx, x[j] + wj)
                    maxy = max(maxy, y[j] + hj)
                nx = minx - 2 + rng.below(maxx - minx + 5)
                ny = miny - 2 + rng.below(maxy - miny + 5)
                w, h = self._placed_dims(i, rot[i])
                nx = min(max(nx, 0), grid - w)
                ny = min(max(ny, 0), grid - h)
                return i, nx, ny, rot[i]
            nrot = (rot[i] + 1 + rng.below(3)) % 4
            w, h = self._placed_dims(i, nrot)
            nx = min(max(x[i], 0), grid - w)
            ny = min(max(y[i], 0), grid - h)
            return i, nx, ny, nrot

        # temperature calibration: sample uphill deltas from the start state
        uphill_sum = 0.0
        uphill_n = 0
        for _ in range(moves_per_epoch):
            i, nx, ny, nrot = propose()
            ox, oy, orot = x[i], y[i], rot[i]
            x[i], y[i], rot[i] = nx, ny, nrot
            dc = self._total(x, y, rot, w_overlap, w_wire, w_area) - cur
            x[i], y[i], rot[i] = ox, oy, orot
            if dc > 0:
                uphill_sum += dc
                uphill_n += 1
        if uphill_n > 0:
            t0 = (uphill_sum / uphill_n) / (-math.log(initial_acceptance))
        else:
            t0 = 1.0
        temp = t0

        epochs = 0
        stall = 0
        while True:
            improved = False
            for _ in range(moves_per_epoch):
                i, nx, ny, nrot = propose()
                ox, oy, orot = x[i], y[i], rot[i]
                x[i], y[i], rot[i] = nx, ny, nrot
                new_cost = self._total(x, y, rot, w_overlap, w_wire, w_area)
                dc = new_cost - cur
                if dc <= 0 or rng.u01() < math.exp(-dc / temp):
                    cur = new_cost
                    if cur < best:
                        best = cur
                        bx, by, brot = list(x), list(y), list(rot)
                        improved = True
                else:
                    x[i], y[i], rot[i] = ox, oy, orot
            epochs += 1
            temp *= alpha
            stall = 0 if improved else stall + 1
            if temp <= t0 * min_t_ratio or stall >= stall_epochs:
                break
        return bx, by, brot, best, init_cost, epochs
