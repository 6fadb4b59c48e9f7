"""Pure-Python/numpy fallbacks for the compiled kernels in _core_cy."""

import numpy as np


def dinic(n, s, t, to, cap, adj_start, adj_arc):
    """Dinic max flow; same contract as the compiled version.

    Mutates cap into residual capacities. Returns (flow, reachable).
    """
    flow = 0.0
    level = np.empty(n, dtype=np.int32)
    while True:
        level.fill(-1)
        level[s] = 0
        queue = [s]
        qh = 0
        while qh < len(queue):
            u = queue[qh]
            qh += 1
            for i in range(adj_start[u], adj_start[u + 1]):
                a = adj_arc[i]
                v = to[a]
                if cap[a] > 0.0 and level[v] < 0:
                    level[v] = level[u] + 1
                    queue.append(v)
        if level[t] < 0:
            break
        it = adj_start[:n].copy()
        while True:
            # Iterative DFS for one augmenting path in the level graph.
            stack = [s]
            path_arcs = []
            found = False
            while stack:
                u = stack[-1]
                if u == t:
                    found = True
                    break
                advanced = False
                while it[u] < adj_start[u + 1]:
                    a = adj_arc[it[u]]
                    v = to[a]
                    if cap[a] > 0.0 and level[v] == level[u] + 1:
                        path_arcs.append(a)
                        stack.append(v)
                        advanced = True
                        break
                    it[u] += 1
                if not advanced:
                    level[u] = -1
                    stack.pop()
                    if path_arcs:
                        path_arcs.pop()
            if not found:
                break
            bottleneck = min(cap[a] for a in path_arcs)
            for a in path_arcs:
                cap[a] -= bottleneck
                cap[a ^ 1] += bottleneck
            flow += bottleneck

    reach = np.zeros(n, dtype=np.uint8)
    reach[s] = 1
    queue = [s]
    qh = 0
    while qh < len(queue):
        u = queue[qh]
        qh += 1
        for i in range(adj_start[u], adj_start[u + 1]):
            a = adj_arc[i]
            v = to[a]
            if cap[a] > 0.0 and not reach[v]:
                reach[v] = 1
                queue.append(v)
    return flow, reach


def hough_vote(px, py, ux, uy, r_min, r_max, acc):
    """Vectorized circle-center voting, both gradient polarities."""
    H, W = acc.shape[1], acc.shape[2]
    for r in range(r_min, r_max + 1):
        plane = acc[r - r_min]
        for sgn in (-1.0, 1.0):
            # floor(x + 0.5) keeps rounding identical to the compiled kernel
            cx = np.floor(px + sgn * r * ux + 0.5).astype(np.int64)
            cy = np.floor(py + sgn * r * uy + 0.5).astype(np.int64)
            ok = (cx >= 0) & (cx < W) & (cy >= 0) & (cy < H)
            np.add.at(plane, (cy[ok], cx[ok]), 1)
