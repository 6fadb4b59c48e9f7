# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: Dinic max-flow and Hough circle voting."""

import numpy as np

cimport numpy as cnp

cnp.import_array()

cdef extern from "math.h":
    double floor(double x)


def dinic(int n, int s, int t,
          cnp.int32_t[::1] to, cnp.float64_t[::1] cap,
          cnp.int32_t[::1] adj_start, cnp.int32_t[::1] adj_arc):
    """Max flow on a paired-arc graph (reverse of arc a is a ^ 1).

    Mutates cap into residual capacities. Returns (flow, reachable) where
    reachable[v] = 1 iff v is reachable from s in the residual graph.
    """
    cdef cnp.ndarray[cnp.int32_t, ndim=1] level_arr = np.empty(n, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] it_arr = np.empty(n, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] queue_arr = np.empty(n, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] stack_arr = np.empty(n + 1, dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1] sarc_arr = np.empty(n + 1, dtype=np.int32)
    cdef cnp.int32_t[::1] level = level_arr
    cdef cnp.int32_t[::1] it = it_arr
    cdef cnp.int32_t[::1] queue = queue_arr
    cdef cnp.int32_t[::1] stack = stack_arr
    cdef cnp.int32_t[::1] sarc = sarc_arr

    cdef double flow = 0.0, pushed, bottleneck
    cdef int i, u, v, a, qh, qt, depth, k
    cdef int found

    while True:
        # BFS level graph on residual capacities.
        for i in range(n):
            level[i] = -1
        level[s] = 0
        queue[0] = s
        qh = 0
        qt = 1
        while qh < qt:
            u = queue[qh]
            qh += 1
            for i in range(adj_start[u], adj_start[u + 1]):
                a = adj_arc[i]
                v = to[a]
                if cap[a] > 0.0 and level[v] < 0:
                    level[v] = level[u] + 1
                    queue[qt] = v
                    qt += 1
        if level[t] < 0:
            break
        for i in range(n):
            it[i] = adj_start[i]
        # Blocking flow: iterative DFS along level-increasing residual arcs.
        while True:
            depth = 0
            stack[0] = s
            found = 0
            while depth >= 0:
                u = stack[depth]
                if u == t:
                    found = 1
                    break
                while it[u] < adj_start[u + 1]:
                    a = adj_arc[it[u]]
                    v = to[a]
                    if cap[a] > 0.0 and level[v] == level[u] + 1:
                        break
                    it[u] += 1
                if it[u] == adj_start[u + 1]:
                    level[u] = -1  # dead end
                    depth -= 1
                else:
                    sarc[depth] = adj_arc[it[u]]
                    depth += 1
                    stack[depth] = to[adj_arc[it[u]]]
            if not found:
                break
            bottleneck = -1.0
            for k in range(depth):
                a = sarc[k]
                if bottleneck < 0.0 or cap[a] < bottleneck:
                    bottleneck = cap[a]
            for k in range(depth):
                a = sarc[k]
                cap[a] -= bottleneck
                cap[a ^ 1] += bottleneck
            flow += bottleneck

    # Residual reachability from s.
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] reach_arr = np.zeros(n, dtype=np.uint8)
    cdef cnp.uint8_t[::1] reach = reach_arr
    reach[s] = 1
    queue[0] = s
    qh = 0
    qt = 1
    while qh < qt:
        u = queue[qh]
        qh += 1
        for i in range(adj_start[u], adj_start[u + 1]):
            a = adj_arc[i]
            v = to[a]
            if cap[a] > 0.0 and not reach[v]:
                reach[v] = 1
                queue[qt] = v
                qt += 1
    return flow, reach_arr


def hough_vote(cnp.int64_t[::1] px, cnp.int64_t[::1] py,
               cnp.float64_t[::1] ux, cnp.float64_t[::1] uy,
               int r_min, int r_max,
               cnp.int64_t[:, :, ::1] acc):
    """Accumulate gradient-direction circle-center votes (both polarities)."""
    cdef int H = acc.shape[1], W = acc.shape[2]
    cdef Py_ssize_t i, n = px.shape[0]
    cdef int r, cx, cy, sgn
    cdef double fr
    for i in range(n):
        for r in range(r_min, r_max + 1):
            fr = <double> r
            for sgn in range(-1, 2, 2):
                # floor(x + 0.5) keeps rounding identical to the fallback
                cx = <int> floor(px[i] + sgn * fr * ux[i] + 0.5)
                cy = <int> floor(py[i] + sgn * fr * uy[i] + 0.5)
                if 0 <= cx < W and 0 <= cy < H:
                    acc[r - r_min, cy, cx] += 1
