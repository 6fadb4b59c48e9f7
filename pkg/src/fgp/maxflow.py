"""Flow network container and exact s-t max-flow / min-cut."""

import numpy as np

from . import backend
from .errors import ArgumentError


class FlowNetwork:
    """Directed graph with nonnegative real arc capacities.

    Arcs are stored in reverse-arc pairs (arc a and a ^ 1), so adding an
    edge always creates both directions; grid smoothness edges pass equal
    capacities both ways.
    """

    def __init__(self, n_nodes, source, sink):
        if n_nodes < 2 or not (0 <= source < n_nodes) or not (0 <= sink < n_nodes):
            raise ArgumentError("bad network shape")
        if source == sink:
            raise ArgumentError("source and sink must differ")
        self.n = n_nodes
        self.source = source
        self.sink = sink
        self._to = []
        self._cap = []

    def add_edge(self, u, v, cap, rcap=0.0):
        if cap < 0 or rcap < 0:
            raise ArgumentError(f"negative capacity on arc {u}->{v}")
        if not (0 <= u < self.n and 0 <= v < self.n):
            raise ArgumentError(f"arc endpoint out of range: {u}->{v}")
        self._to.append(v)
        self._cap.append(float(cap))
        self._to.append(u)
        self._cap.append(float(rcap))

    def add_edges(self, us, vs, caps, rcaps):
        """Bulk arc insertion (arrays), interleaving forward/reverse pairs."""
        us = np.asarray(us, dtype=np.int64)
        vs = np.asarray(vs, dtype=np.int64)
        caps = np.asarray(caps, dtype=np.float64)
        rcaps = np.asarray(rcaps, dtype=np.float64)
        if np.any(caps < 0) or np.any(rcaps < 0):
            raise ArgumentError("negative capacity in bulk insert")
        to = np.empty(2 * len(us), dtype=np.int64)
        cap = np.empty(2 * len(us), dtype=np.float64)
        to[0::2] = vs
        to[1::2] = us
        cap[0::2] = caps
        cap[1::2] = rcaps
        self._to.extend(to.tolist())
        self._cap.extend(cap.tolist())

    def _arrays(self):
        to = np.asarray(self._to, dtype=np.int32)
        cap = np.asarray(self._cap, dtype=np.float64)
        m = len(to)
        frm = np.empty(m, dtype=np.int64)
        frm[0::2] = to[1::2]
        frm[1::2] = to[0::2]
        order = np.argsort(frm, kind="stable").astype(np.int32)
        adj_start = np.zeros(self.n + 1, dtype=np.int32)
        np.add.at(adj_start, frm + 1, 1)
        adj_start = np.cumsum(adj_start, dtype=np.int64).astype(np.int32)
        return to, cap, adj_start, order


def max_flow(net):
    """Exact max flow. Returns (flow_value, source_side node set)."""
    to, cap, adj_start, adj_arc = net._arrays()
    flow, reach = backend.dinic(net.n, net.source, net.sink, to, cap, adj_start, adj_arc)
    return flow, set(np.flatnonzero(reach).tolist())
