"""Workload transition networks.

A vehicle's workload is a pair (i, j): i passengers onboard, j callers
assigned for pickup.  The network over all workloads with i + j <= c has
three link families:

    assignment  (i, j) -> (i, j+1)   exists iff i + j < c
    pickup      (i, j) -> (i+1, j-1) exists iff j >= 1
    delivery    (i, j) -> (i-1, j)   exists iff i >= 1

A dispatch policy enables a subset of the links; masking is explicit so the
same structure serves the analytic solver and the simulator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from .core import ConfigurationError, check_policy_capacity

Node = Tuple[int, int]

LINK_KINDS = ("assignment", "pickup", "delivery")


@dataclass(frozen=True)
class Link:
    kind: str
    frm: Node
    to: Node


def _lattice_nodes(c: int) -> List[Node]:
    # Lexicographic by (i, j) for deterministic matrix layouts.
    return [(i, j) for i in range(c + 1) for j in range(c + 1 - i)]


def _family_links(c: int, kind: str) -> List[Link]:
    links = []
    for (i, j) in _lattice_nodes(c):
        if kind == "assignment" and i + j < c:
            links.append(Link(kind, (i, j), (i, j + 1)))
        elif kind == "pickup" and j >= 1:
            links.append(Link(kind, (i, j), (i + 1, j - 1)))
        elif kind == "delivery" and i >= 1:
            links.append(Link(kind, (i, j), (i - 1, j)))
    return links


def _policy_mask(policy: str, c: int, links: List[Link]) -> np.ndarray:
    """Per-link enabled flags for one family."""
    enabled = np.ones(len(links), dtype=bool)
    if policy == "taxi":
        return enabled
    if policy in ("shared_a", "shared_b"):
        for idx, ln in enumerate(links):
            i, j = ln.frm
            if ln.kind == "delivery":
                # Pickups take priority: deliveries only without outstanding pickups.
                enabled[idx] = j == 0
            elif ln.kind == "assignment":
                # Availability set: any room (type a) vs empty vehicles only (type b).
                enabled[idx] = (i + j < c) if policy == "shared_a" else (i == 0)
        return enabled
    if policy == "dar":
        # Full-occupancy circulation touches only three workloads.
        wanted = {
            "assignment": ((c - 1, 0), (c - 1, 1)),
            "pickup": ((c - 1, 1), (c, 0)),
            "delivery": ((c, 0), (c - 1, 0)),
        }
        for idx, ln in enumerate(links):
            enabled[idx] = (ln.frm, ln.to) == wanted[ln.kind]
        return enabled
    raise ConfigurationError(f"unknown policy {policy!r}")


@dataclass
class TransitionNetwork:
    """Immutable-by-convention network structure for one (c, policy) pair."""

    c: int
    policy: str
    nodes: List[Node]
    node_index: Dict[Node, int]
    links: Dict[str, List[Link]]           # per family, deterministic order
    incidence: Dict[str, np.ndarray]       # per family, links x nodes, entries -1/0/+1
    mask: Dict[str, np.ndarray]            # per family, enabled flags

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def enabled_links(self, kind: str = None) -> List[Link]:
        kinds = LINK_KINDS if kind is None else (kind,)
        out = []
        for kk in kinds:
            out.extend(ln for ln, on in zip(self.links[kk], self.mask[kk]) if on)
        return out

    def enabled_nodes(self) -> List[Node]:
        """Nodes touched by at least one enabled link, in node order."""
        touched = set()
        for ln in self.enabled_links():
            touched.add(ln.frm)
            touched.add(ln.to)
        return [nd for nd in self.nodes if nd in touched]

    def edge_list(self) -> str:
        """Plain-text debug dump: one link per line (type, from, to, enabled)."""
        lines = []
        for kind in LINK_KINDS:
            for ln, on in zip(self.links[kind], self.mask[kind]):
                lines.append(
                    f"{kind} ({ln.frm[0]},{ln.frm[1]}) -> ({ln.to[0]},{ln.to[1]}) "
                    f"{'enabled' if on else 'masked'}"
                )
        return "\n".join(lines)


@dataclass
class StateVector:
    """Nonnegative vehicle count per workload node."""

    values: Dict[Node, float]

    def __getitem__(self, node: Node) -> float:
        return self.values[node]

    def get(self, node: Node, default: float = 0.0) -> float:
        return self.values.get(node, default)

    def total(self) -> float:
        return float(sum(self.values.values()))

    def as_array(self, nodes: List[Node]) -> np.ndarray:
        return np.array([self.values.get(nd, 0.0) for nd in nodes])


def build_network(c: int, policy: str) -> TransitionNetwork:
    """Construct the workload network for capacity ``c`` with the policy's mask."""
    check_policy_capacity(policy, c)
    nodes = _lattice_nodes(c)
    node_index = {nd: ix for ix, nd in enumerate(nodes)}
    links, incidence, mask = {}, {}, {}
    for kind in LINK_KINDS:
        fam = _family_links(c, kind)
        inc = np.zeros((len(fam), len(nodes)))
        for row, ln in enumerate(fam):
            inc[row, node_index[ln.frm]] = -1.0
            inc[row, node_index[ln.to]] = 1.0
        links[kind] = fam
        incidence[kind] = inc
        mask[kind] = _policy_mask(policy, c, fam)
    return TransitionNetwork(c=c, policy=policy, nodes=nodes, node_index=node_index,
                             links=links, incidence=incidence, mask=mask)


@dataclass
class ValidationReport:
    checks: List[Tuple[str, bool, str]] = field(default_factory=list)
    conservation_rank: int = -1
    enabled_node_count: int = 0

    @property
    def passed(self) -> bool:
        return all(ok for _, ok, _ in self.checks)

    def failures(self) -> List[str]:
        return [name for name, ok, _ in self.checks if not ok]


def _on_directed_cycle(adj: Dict[Node, List[Node]], start: Node) -> bool:
    # BFS over successors; the node is on a cycle iff it is reachable from itself.
    seen = set()
    frontier = list(adj.get(start, ()))
    while frontier:
        nd = frontier.pop()
        if nd == start:
            return True
        if nd in seen:
            continue
        seen.add(nd)
        frontier.extend(adj.get(nd, ()))
    return False


def validate_network(net: TransitionNetwork) -> ValidationReport:
    """Structural checks; returns a report instead of raising."""
    rep = ValidationReport()
    c = net.c
    expect_nodes = (c + 1) * (c + 2) // 2
    expect_links = c * (c + 1) // 2

    rep.checks.append(("node_count", net.n_nodes == expect_nodes,
                       f"{net.n_nodes} vs {expect_nodes}"))
    for kind in LINK_KINDS:
        n_links = len(net.links[kind])
        rep.checks.append((f"{kind}_link_count", n_links == expect_links,
                           f"{n_links} vs {expect_links}"))
        inc = net.incidence[kind]
        shape_ok = inc.shape == (n_links, net.n_nodes)
        rows_ok = shape_ok and bool(
            np.all(np.sum(inc == -1, axis=1) == 1)
            and np.all(np.sum(inc == 1, axis=1) == 1)
            and np.all(inc.sum(axis=1) == 0)
        )
        rep.checks.append((f"{kind}_incidence_rows", rows_ok, "one -1 and one +1 per row"))

    # Rank of the stacked conservation system on the enabled subgraph.
    enabled_nodes = net.enabled_nodes()
    rep.enabled_node_count = len(enabled_nodes)
    cols = [net.node_index[nd] for nd in enabled_nodes]
    blocks = []
    for kind in LINK_KINDS:
        m = net.mask[kind]
        if m.any():
            blocks.append(net.incidence[kind][m][:, cols])
    stacked = np.vstack(blocks) if blocks else np.zeros((0, len(cols)))
    rank = int(np.linalg.matrix_rank(stacked)) if stacked.size else 0
    rep.conservation_rank = rank
    rep.checks.append(("conservation_rank", rank == max(len(enabled_nodes) - 1, 0),
                       f"rank {rank} of {len(enabled_nodes)} enabled nodes"))

    # Steady state cannot strand flow: enabled subgraph connected, every
    # enabled node on a directed cycle.
    adj: Dict[Node, List[Node]] = {}
    undirected: Dict[Node, set] = {}
    for ln in net.enabled_links():
        adj.setdefault(ln.frm, []).append(ln.to)
        undirected.setdefault(ln.frm, set()).add(ln.to)
        undirected.setdefault(ln.to, set()).add(ln.frm)
    if enabled_nodes:
        seen = {enabled_nodes[0]}
        stack = [enabled_nodes[0]]
        while stack:
            for nb in undirected.get(stack.pop(), ()):
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        connected = len(seen) == len(enabled_nodes)
    else:
        connected = True
    rep.checks.append(("enabled_connected", connected, "enabled subgraph connectivity"))
    cycles_ok = all(_on_directed_cycle(adj, nd) for nd in enabled_nodes)
    rep.checks.append(("enabled_nodes_on_cycles", cycles_ok,
                       "every enabled node lies on a directed cycle"))
    return rep
