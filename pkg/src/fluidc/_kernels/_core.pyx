# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: combinational settle and annealing inner loop.

Semantics (including the RNG stream) mirror ``fluidc._kernels.pure``
bit for bit; keep the two in lockstep.  Opcode literals match
``fluidc._kernels.codes``.
"""

from libc.math cimport exp, log
from libc.stdlib cimport free, malloc
from libc.string cimport memcpy

import numpy as np

BACKEND_NAME = "compiled"

cdef enum:
    K_NOT = 0
    K_OR = 1
    K_AND = 2
    K_NOR = 3
    K_NAND = 4
    K_XOR = 5
    K_FILTER = 6
    K_TIMER = 7
    K_REGISTER = 8
    K_EDGE = 9
    K_MUX = 10
    K_DEMUX = 11
    K_DIODE_F = 12
    K_DIODE_B = 13


cdef inline unsigned long long _rng_step(unsigned long long *state) nogil:
    cdef unsigned long long s = state[0]
    s ^= s >> 12
    s ^= s << 25
    s ^= s >> 27
    state[0] = s
    return s * 2685821657736338717ULL


cdef inline double _rng_u01(unsigned long long *state) nogil:
    return <double>(_rng_step(state) >> 11) * (1.0 / 9007199254740992.0)


cdef inline long _rng_below(unsigned long long *state, long n) nogil:
    return <long>(_rng_step(state) % <unsigned long long>n)


class SettleProgram:
    """Jacobi settle over an opcode-encoded netlist."""

    def __init__(self, op_kind, op_in, op_out, driven):
        self.kinds = np.ascontiguousarray(op_kind, dtype=np.int32)
        self.ins = np.ascontiguousarray(op_in, dtype=np.int32).reshape(len(self.kinds), -1)
        self.outs = np.ascontiguousarray(op_out, dtype=np.int32).reshape(len(self.kinds), -1)
        self.driven = np.ascontiguousarray(driven, dtype=np.int8)
        self.n_ops = len(self.kinds)
        self.n_nets = len(self.driven)

    def settle(self, values, timed_out, reg_stored, max_iters):
        cdef signed char[::1] vals = np.ascontiguousarray(values, dtype=np.int8)
        cdef signed char[::1] timed = np.ascontiguousarray(timed_out, dtype=np.int8)
        cdef signed char[::1] stored = np.ascontiguousarray(reg_stored, dtype=np.int8)
        cdef int[::1] kinds = self.kinds
        cdef int[:, ::1] ins = self.ins
        cdef int[:, ::1] outs = self.outs
        cdef signed char[::1] driven = self.driven
        cdef int n_nets = self.n_nets
        cdef int n_ops = self.n_ops
        cdef int result = _settle_loop(
            &kinds[0], &ins[0, 0], &outs[0, 0], &driven[0], &vals[0],
            &timed[0], &stored[0], n_ops, n_nets, ins.shape[1], outs.shape[1],
            max_iters,
        )
        values[:] = np.asarray(vals)
        return result


cdef int _settle_loop(
    int *kinds, int *ins, int *outs, signed char *driven, signed char *vals,
    signed char *timed, signed char *stored, int n_ops, int n_nets,
    int in_stride, int out_stride, int max_iters,
) nogil:
    cdef signed char *cur = <signed char *> malloc(n_nets)
    cdef signed char *new = <signed char *> malloc(n_nets)
    if cur == NULL or new == NULL:
        if cur != NULL:
            free(cur)
        if new != NULL:
            free(new)
        return -2
    memcpy(cur, vals, n_nets)
    cdef int sweep, i, k, q, sel, j
    cdef int *a
    cdef int *o
    cdef bint same
    cdef int rc = -1
    for sweep in range(1, max_iters + 1):
        for j in range(n_nets):
            new[j] = 0 if driven[j] else cur[j]
        for i in range(n_ops):
            k = kinds[i]
            a = ins + i * in_stride
            o = outs + i * out_stride
            if k == K_NOT:
                new[o[0]] |= 1 - cur[a[0]]
            elif k == K_OR:
                new[o[0]] |= cur[a[0]] | cur[a[1]]
            elif k == K_AND:
                new[o[0]] |= cur[a[0]] & cur[a[1]]
            elif k == K_NOR:
                new[o[0]] |= 1 - (cur[a[0]] | cur[a[1]])
            elif k == K_NAND:
                new[o[0]] |= 1 - (cur[a[0]] & cur[a[1]])
            elif k == K_XOR:
                new[o[0]] |= cur[a[0]] ^ cur[a[1]]
            elif k == K_REGISTER:
                q = cur[a[0]] if cur[a[1]] == 0 else stored[i]
                new[o[0]] |= q
                new[o[1]] |= 1 - q
            elif k == K_MUX:
                sel = 2 * cur[a[4]] + cur[a[5]]
                new[o[0]] |= cur[a[sel]]
            elif k == K_DEMUX:
                sel = 2 * cur[a[1]] + cur[a[2]]
                new[o[sel]] |= cur[a[0]]
            elif k == K_DIODE_F:
                new[o[0]] |= cur[a[0]]
            elif k == K_DIODE_B:
                pass
            else:
                new[o[0]] |= timed[i]
        same = True
        for j in range(n_nets):
            if new[j] != cur[j]:
                same = False
                break
        if same:
            rc = sweep
            break
        memcpy(cur, new, n_nets)
    if rc > 0:
        memcpy(vals, new, n_nets)
    else:
        memcpy(vals, cur, n_nets)
    free(cur)
    free(new)
    return rc


cdef inline void _placed_dims(int fw, int fh, int rot, int *w, int *h) nogil:
    if rot % 2 == 0:
        w[0] = fw
        h[0] = fh
    else:
        w[0] = fh
        h[0] = fw


cdef inline void _rot_port(int dx, int dy, int w, int h, int rot, int *rx, int *ry) nogil:
    if rot == 0:
        rx[0] = dx
        ry[0] = dy
    elif rot == 1:
        rx[0] = h - 1 - dy
        ry[0] = dx
    elif rot == 2:
        rx[0] = w - 1 - dx
        ry[0] = h - 1 - dy
    else:
        rx[0] = dy
        ry[0] = w - 1 - dx


class AnnealProgram:
    """Simulated-annealing placement over rectangular footprints."""

    def __init__(self, fw, fh, port_op, port_dx, port_dy, conn_a, conn_b, grid):
        self.fw = np.ascontiguousarray(fw, dtype=np.int32)
        self.fh = np.ascontiguousarray(fh, dtype=np.int32)
        self.port_op = np.ascontiguousarray(port_op, dtype=np.int32)
        self.port_dx = np.ascontiguousarray(port_dx, dtype=np.int32)
        self.port_dy = np.ascontiguousarray(port_dy, dtype=np.int32)
        self.conn_a = np.ascontiguousarray(conn_a, dtype=np.int32)
        self.conn_b = np.ascontiguousarray(conn_b, dtype=np.int32)
        self.grid = int(grid)
        self.n_ops = len(self.fw)

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
        cdef int[::1] fw = self.fw
        cdef int[::1] fh = self.fh
        cdef int[::1] port_op = self.port_op
        cdef int[::1] port_dx = self.port_dx
        cdef int[::1] port_dy = self.port_dy
        cdef int[::1] conn_a = self.conn_a
        cdef int[::1] conn_b = self.conn_b
        cdef int n = self.n_ops
        cdef int n_ports = self.port_op.shape[0]
        cdef int n_conns = self.conn_a.shape[0]
        cdef int grid = self.grid
        cdef unsigned long long state = <unsigned long long> (seed if seed else 0x9E3779B97F4A7C15)

        x_arr = np.zeros(n, dtype=np.int32)
        y_arr = np.zeros(n, dtype=np.int32)
        rot_arr = np.zeros(n, dtype=np.int32)
        bx_arr = np.zeros(n, dtype=np.int32)
        by_arr = np.zeros(n, dtype=np.int32)
        brot_arr = np.zeros(n, dtype=np.int32)
        cdef int[::1] x = x_arr
        cdef int[::1] y = y_arr
        cdef int[::1] rot = rot_arr
        cdef int[::1] bx = bx_arr
        cdef int[::1] by = by_arr
        cdef int[::1] brot = brot_arr

        cdef int i, w, h
        for i in range(n):
            rot[i] = <int> _rng_below(&state, 4)
            _placed_dims(fw[i], fh[i], rot[i], &w, &h)
            x[i] = <int> _rng_below(&state, max(1, grid - w + 1))
            y[i] = <int> _rng_below(&state, max(1, grid - h + 1))

        cdef double cur = _total_cost(
            &fw[0], &fh[0], &x[0], &y[0], &rot[0], n,
            &port_op[0] if n_ports else NULL, &port_dx[0] if n_ports else NULL,
            &port_dy[0] if n_ports else NULL, n_ports,
            &conn_a[0] if n_conns else NULL, &conn_b[0] if n_conns else NULL, n_conns,
            w_overlap, w_wire, w_area,
        )
        cdef double init_cost = cur
        cdef double best = cur
        for i in range(n):
            bx[i] = x[i]
            by[i] = y[i]
            brot[i] = rot[i]

        cdef double uphill_sum = 0.0
        cdef long uphill_n = 0
        cdef int mi, ox, oy, orot, nx, ny, nrot
        cdef double dc, new_cost, t0, temp
        cdef long m
        for m in range(moves_per_epoch):
            mi = _propose(&state, &fw[0], &fh[0], &x[0], &y[0], &rot[0], n, grid,
                          &nx, &ny, &nrot)
            ox = x[mi]
            oy = y[mi]
            orot = rot[mi]
            x[mi] = nx
            y[mi] = ny
            rot[mi] = nrot
            new_cost = _total_cost(
                &fw[0], &fh[0], &x[0], &y[0], &rot[0], n,
                &port_op[0] if n_ports else NULL, &port_dx[0] if n_ports else NULL,
                &port_dy[0] if n_ports else NULL, n_ports,
                &conn_a[0] if n_conns else NULL, &conn_b[0] if n_conns else NULL, n_conns,
                w_overlap, w_wire, w_area,
            )
            dc = new_cost - cur
            x[mi] = ox
            y[mi] = oy
            rot[mi] = orot
            if dc > 0:
                uphill_sum += dc
                uphill_n += 1
        if uphill_n > 0:
            t0 = (uphill_sum / uphill_n) / (-log(initial_acceptance))
        else:
            t0 = 1.0
        temp = t0

        cdef long epochs = 0
        cdef int stall = 0
        cdef bint improved
        while True:
            improved = False
            for m in range(moves_per_epoch):
                mi = _propose(&state, &fw[0], &fh[0], &x[0], &y[0], &rot[0], n, grid,
                              &nx, &ny, &nrot)
                ox = x[mi]
                oy = y[mi]
                orot = rot[mi]
                x[mi] = nx
                y[mi] = ny
                rot[mi] = nrot
                new_cost = _total_cost(
                    &fw[0], &fh[0], &x[0], &y[0], &rot[0], n,
                    &port_op[0] if n_ports else NULL, &port_dx[0] if n_ports else NULL,
                    &port_dy[0] if n_ports else NULL, n_ports,
                    &conn_a[0] if n_conns else NULL, &conn_b[0] if n_conns else NULL, n_conns,
                    w_overlap, w_wire, w_area,
                )
                dc = new_cost - cur
                if dc <= 0 or _rng_u01(&state) < exp(-dc / temp):
                    cur = new_cost
                    if cur < best:
                        best = cur
                        for i in range(n):
                            bx[i] = x[i]
                            by[i] = y[i]
                            brot[i] = rot[i]
                        improved = True
                else:
                    x[mi] = ox
                    y[mi] = oy
                    rot[mi] = orot
            epochs += 1
            temp *= alpha
            stall = 0 if improved else stall + 1
            if temp <= t0 * min_t_ratio or stall >= stall_epochs:
                break
        return (
            [int(v) for v in bx_arr],
            [int(v) for v in by_arr],
            [int(v) for v in brot_arr],
            best,
            init_cost,
            int(epochs),
        )


cdef int _propose(
    unsigned long long *state, int *fw, int *fh, int *x, int *y, int *rot,
    int n, int grid, int *nx, int *ny, int *nrot,
) nogil:
    cdef int i = <int> _rng_below(state, n)
    cdef int j, w, h, minx, miny, maxx, maxy, tx, ty
    if _rng_u01(state) < 0.5:
        minx = 1 << 30
        miny = 1 << 30
        maxx = -(1 << 30)
        maxy = -(1 << 30)
        for j in range(n):
            _placed_dims(fw[j], fh[j], rot[j], &w, &h)
            if x[j] < minx:
                minx = x[j]
            if y[j] < miny:
                miny = y[j]
            if x[j] + w > maxx:
                maxx = x[j] + w
            if y[j] + h > maxy:
                maxy = y[j] + h
        tx = minx - 2 + <int> _rng_below(state, maxx - minx + 5)
        ty = miny - 2 + <int> _rng_below(state, maxy - miny + 5)
        _placed_dims(fw[i], fh[i], rot[i], &w, &h)
        if tx < 0:
            tx = 0
        if tx > grid - w:
            tx = grid - w
        if ty < 0:
            ty = 0
        if ty > grid - h:
            ty = grid - h
        nx[0] = tx
        ny[0] = ty
        nrot[0] = rot[i]
    else:
        nrot[0] = (rot[i] + 1 + <int> _rng_below(state, 3)) % 4
        _placed_dims(fw[i], fh[i], nrot[0], &w, &h)
        tx = x[i]
        ty = y[i]
        if tx < 0:
            tx = 0
        if tx > grid - w:
            tx = grid - w
        if ty < 0:
            ty = 0
        if ty > grid - h:
            ty = grid - h
        nx[0] = tx
        ny[0] = ty
    return i


cdef double _total_cost(
    int *fw, int *fh, int *x, int *y, int *rot, int n,
    int *port_op, int *port_dx, int *port_dy, int n_ports,
    int *conn_a, int *conn_b, int n_conns,
    double w_overlap, double w_wire, double w_area,
) nogil:
    cdef long overlap = 0
    cdef int i, j, wi, hi, wj, hj, ow, oh
    for i in range(n):
        _placed_dims(fw[i], fh[i], rot[i], &wi, &hi)
        for j in range(i + 1, n):
            _placed_dims(fw[j], fh[j], rot[j], &wj, &hj)
            ow = (x[i] + wi if x[i] + wi < x[j] + wj else x[j] + wj) - (x[i] if x[i] > x[j] else x[j])
            if ow <= 0:
                continue
            oh = (y[i] + hi if y[i] + hi < y[j] + hj else y[j] + hj) - (y[i] if y[i] > y[j] else y[j])
            if oh > 0:
                overlap += ow * oh
    cdef long minx = 1 << 30
    cdef long miny = 1 << 30
    cdef long maxx = -(1 << 30)
    cdef long maxy = -(1 << 30)
    for i in range(n):
        _placed_dims(fw[i], fh[i], rot[i], &wi, &hi)
        if x[i] < minx:
            minx = x[i]
        if y[i] < miny:
            miny = y[i]
        if x[i] + wi > maxx:
            maxx = x[i] + wi
        if y[i] + hi > maxy:
            maxy = y[i] + hi
    cdef long area = (maxx - minx) * (maxy - miny) if n > 0 else 0
    cdef long wire = 0
    cdef int p, a, b, rx, ry, rx2, ry2, pi, pj
    for p in range(n_conns):
        a = conn_a[p]
        b = conn_b[p]
        pi = port_op[a]
        pj = port_op[b]
        _rot_port(port_dx[a], port_dy[a], fw[pi], fh[pi], rot[pi], &rx, &ry)
        _rot_port(port_dx[b], port_dy[b], fw[pj], fh[pj], rot[pj], &rx2, &ry2)
        rx += x[pi]
        ry += y[pi]
        rx2 += x[pj]
        ry2 += y[pj]
        wire += (rx - rx2 if rx > rx2 else rx2 - rx) + (ry - ry2 if ry > ry2 else ry2 - ry)
    return w_overlap * overlap + w_wire * wire + w_area * area
