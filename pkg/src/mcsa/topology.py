"""AP / edge-server graph, hop counts, and handover events.

Access points form a connected weighted undirected graph; a subset of APs
host edge servers.  Users attach to one AP and reach their serving server
over a minimum-weight multi-hop path; the hop count scales the relay term of
the transmission-delay model.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import networkx as nx

__all__ = ["ApGraph", "HandoverEvent", "UserAttachment", "load_graph", "load_trace"]


@dataclass
class ApGraph:
    """AP topology with server placement and shared backhaul bandwidth."""

    graph: nx.Graph
    server_assignment: dict  # ap id -> server id, for server-hosting APs only
    backhaul_bandwidth: float

    def __post_init__(self):
        if self.backhaul_bandwidth <= 0:
            raise ValueError("backhaul_bandwidth must be positive")
        if not self.server_assignment:
            raise ValueError("at least one AP must host a server")
        for ap in self.server_assignment:
            if ap not in self.graph:
                raise ValueError(f"server-hosting AP {ap!r} not in graph")
        if len(set(self.server_assignment.values())) != len(self.server_assignment):
            raise ValueError("each server must be hosted by exactly one AP")
        if self.graph.number_of_nodes() and not nx.is_connected(self.graph):
            raise ValueError("AP graph must be connected")
        # host AP by server id, for shortest-path queries
        self._host_ap = {srv: ap for ap, srv in self.server_assignment.items()}

    @property
    def ap_ids(self):
        return set(self.graph.nodes)

    @property
    def server_ids(self):
        return set(self._host_ap)

    def host_ap(self, server_id):
        try:
            return self._host_ap[server_id]
        except KeyError:
            raise ValueError(f"unknown server {server_id!r}") from None

    def hop_count(self, ap, server_id) -> int:
        """Hops on a minimum-weight path from ``ap`` to the server's AP.

        Zero when the AP hosts the server itself.
        """
        if ap not in self.graph:
            raise ValueError(f"unknown AP {ap!r}")
        target = self.host_ap(server_id)
        if ap == target:
            return 0
        try:
            path = nx.dijkstra_path(self.graph, ap, target, weight="weight")
        except nx.NetworkXNoPath:
            raise ValueError(f"server {server_id!r} unreachable from AP {ap!r}") from None
        return len(path) - 1

    def serving_server(self, ap):
        """Nearest server to ``ap`` by hop count; ties broken by server id."""
        return min(self.server_ids, key=lambda srv: (self.hop_count(ap, srv), str(srv)))


@dataclass(frozen=True)
class HandoverEvent:
    """User moving from the coverage of one AP to another."""

    user_id: str
    from_ap: str
    to_ap: str
    time_index: int

    def __post_init__(self):
        if self.from_ap == self.to_ap:
            raise ValueError("handover must change the AP")
        if self.time_index < 0:
            raise ValueError("time_index must be nonnegative")


@dataclass
class UserAttachment:
    """Mutable per-user attachment state updated by trace replay.

    ``original_server`` is the server currently holding the user's offloaded
    layers; ``back_hops`` is the hop count from the current AP back to it.
    """

    user_id: str
    ap: str
    serving_server: object = None
    original_server: object = None
    back_hops: int = 0
    history: list = field(default_factory=list)


def apply_handover(graph: ApGraph, state: UserAttachment, event: HandoverEvent) -> UserAttachment:
    """Replay one handover event against a user's attachment state.

    Records the server that held the offloaded layers before the move and the
    hop count from the new AP back to it; the serving server is recomputed at
    the new AP.
    """
    if event.user_id != state.user_id:
        raise ValueError(f"event for {event.user_id!r} applied to {state.user_id!r}")
    if state.ap != event.from_ap:
        raise ValueError(
            f"stale event: user {state.user_id!r} is at {state.ap!r}, not {event.from_ap!r}")
    if event.to_ap not in graph.ap_ids:
        raise ValueError(f"unknown AP {event.to_ap!r}")
    state.original_server = state.serving_server
    state.ap = event.to_ap
    state.serving_server = graph.serving_server(event.to_ap)
    if state.original_server is not None:
        state.back_hops = graph.hop_count(event.to_ap, state.original_server)
    state.history.append(event)
    return state


def load_graph(path) -> ApGraph:
    """Load an AP graph from a JSON file.

    Schema::

        {"aps": ["b1", "b2", "b3"],
         "edges": [["b1", "b2", 1.0], ["b2", "b3", 1.0]],
         "servers": {"b3": "S1"},
         "backhaul_bandwidth": 40.0}
    """
    with open(path) as fh:
        doc = json.load(fh)
    return graph_from_dict(doc)


def graph_from_dict(doc: dict) -> ApGraph:
    """Build an ApGraph from the JSON graph schema (see load_graph)."""
    g = nx.Graph()
    g.add_nodes_from(doc["aps"])
    for edge in doc["edges"]:
        a, b = edge[0], edge[1]
        w = float(edge[2]) if len(edge) > 2 else 1.0
        g.add_edge(a, b, weight=w)
    return ApGraph(
        graph=g,
        server_assignment=dict(doc["servers"]),
        backhaul_bandwidth=float(doc["backhaul_bandwidth"]),
    )


def load_trace(path) -> list[HandoverEvent]:
    """Load a mobility trace: JSON list of handover event records."""
    with open(path) as fh:
        doc = json.load(fh)
    events = [
        HandoverEvent(
            user_id=rec["user"],
            from_ap=rec["from_ap"],
            to_ap=rec["to_ap"],
            time_index=int(rec["time"]),
        )
        for rec in doc
    ]
    return sorted(events, key=lambda e: e.time_index)
