"""Edge-vertex incidence structure for eight-vertex instances.

A graph is a list of nodes, each owning an ordered list of ports, and a
list of links joining two ports.  Every port belongs to exactly one link
or is dangling (4-ary constructions expose exactly four dangling ports
labelled ``e1..e4``).  Ports are 0-based in code and 1-based in files.

Node kinds:

* ``deg4`` – a vertex of the underlying 4-regular graph carrying Params.
* ``neq2`` – degree-2 vertex enforcing one arrow in, one out.
* ``eq2``  – degree-2 vertex enforcing two in or two out.

An assignment gives one bit per (node, port) slot; a link is satisfied
when its two slots carry different bits (the arrow leaves one end and
enters the other).
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .errors import GraphError
from .model import Params, weight_table

DANGLING_LABELS = ("e1", "e2", "e3", "e4")


class NodeKind(str, enum.Enum):
    DEG4 = "deg4"
    NEQ2 = "neq2"
    EQ2 = "eq2"

    @property
    def degree(self) -> int:
        return 4 if self is NodeKind.DEG4 else 2


@dataclass(frozen=True)
class Node:
    id: str
    kind: NodeKind
    params: Optional[Params] = None

    @property
    def degree(self) -> int:
        return self.kind.degree


Port = tuple[int, int]  # (node index, 0-based port)


@dataclass(frozen=True)
class Graph:
    nodes: tuple[Node, ...]
    links: tuple[tuple[Port, Port], ...]
    dangling: tuple[tuple[str, Port], ...] = ()
    planar: bool = False
    # number of crossing splits applied to an originally plane graph
    crossings: int = 0

    # -- convenience ------------------------------------------------------
    @property
    def closed(self) -> bool:
        return not self.dangling

    @property
    def deg4_nodes(self) -> list[int]:
        return [i for i, n in enumerate(self.nodes) if n.kind is NodeKind.DEG4]

    @property
    def n_deg4(self) -> int:
        return sum(n.kind is NodeKind.DEG4 for n in self.nodes)

    def node_index(self, node_id: str) -> int:
        for i, n in enumerate(self.nodes):
            if n.id == node_id:
                return i
        raise KeyError(node_id)

    def dangling_port(self, label: str) -> Port:
        for lab, port in self.dangling:
            if lab == label:
                return port
        raise KeyError(label)

    def with_params(self, p: Params) -> "Graph":
        """Copy with every degree-4 node set to ``p``."""
        nodes = tuple(
            Node(n.id, n.kind, p if n.kind is NodeKind.DEG4 else None) for n in self.nodes
        )
        return Graph(nodes, self.links, self.dangling, self.planar, self.crossings)

    def canonical(self) -> "Graph":
        """Copy with links and dangling ports in a canonical order."""
        links = tuple(sorted(tuple(sorted(l)) for l in self.links))
        dangling = tuple(sorted(self.dangling))
        return Graph(self.nodes, links, dangling, self.planar, self.crossings)


# ---------------------------------------------------------------------------
# builders


def make_graph(
    nodes: Iterable[tuple],
    links: Iterable[tuple],
    dangling: Iterable[tuple] = (),
    planar: bool = False,
) -> Graph:
    """Build a graph from id-based descriptions.

    ``nodes`` holds ``(id, kind)`` or ``(id, "deg4", params)``; links and
    dangling entries reference ports as ``(id, port)`` with 1-based ports.
    """
    node_list = []
    for item in nodes:
        nid, kind = str(item[0]), NodeKind(item[1])
        params = item[2] if len(item) > 2 else None
        if params is not None and not isinstance(params, Params):
            params = Params(*params)
        node_list.append(Node(nid, kind, params))
    index = {n.id: i for i, n in enumerate(node_list)}
    if len(index) != len(node_list):
        raise GraphError("duplicate node id")

    def port(ref):
        nid, p = ref
        if str(nid) not in index:
            raise GraphError(f"unknown node {nid!r}")
        return (index[str(nid)], int(p) - 1)

    link_list = tuple((port(a), port(b)) for a, b in links)
    dang = tuple((str(lab), port(ref)) for ref, lab in dangling)
    return Graph(tuple(node_list), link_list, dang, planar)


def k24(params: Params | tuple = (1, 1, 1, 1)) -> Graph:
    """Two degree-4 nodes joined by four parallel links, port i to port i."""
    return make_graph(
        [("u", "deg4", params), ("v", "deg4", params)],
        [(("u", i), ("v", i)) for i in range(1, 5)],
    )


def cycles(lengths: Iterable[int], eq_counts: Iterable[int] | None = None) -> Graph:
    """Disjoint cycles of degree-2 nodes; the first ``eq_counts[i]`` nodes of
    cycle ``i`` enforce 2-in/2-out, the rest 1-in-1-out."""
    lengths = list(lengths)
    eq_counts = list(eq_counts) if eq_counts is not None else [0] * len(lengths)
    nodes, links = [], []
    for ci, (m, neq) in enumerate(zip(lengths, eq_counts)):
        if m < 1 or not 0 <= neq <= m:
            raise ValueError("each cycle needs length >= 1 and 0 <= eq count <= length")
        ids = [f"c{ci}_{j}" for j in range(m)]
        for j, nid in enumerate(ids):
            nodes.append((nid, "eq2" if j < neq else "neq2"))
        for j in range(m):
            links.append(((ids[j], 2), (ids[(j + 1) % m], 1)))
    return make_graph(nodes, links)


def single_node_gadget(params: Params | tuple) -> Graph:
    """A lone degree-4 node whose ports are dangling e1..e4 (identity gadget)."""
    return make_graph(
        [("x", "deg4", params)], [], [(("x", i), f"e{i}") for i in range(1, 5)], planar=True
    )


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Issue:
    code: str
    message: str


@dataclass
class Diagnostics:
    issues: list[Issue] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.issues

    @property
    def codes(self) -> list[str]:
        return [i.code for i in self.issues]

    def add(self, code: str, message: str):
        self.issues.append(Issue(code, message))

    def __str__(self):
        return "OK" if self.ok else "; ".join(f"{i.code}: {i.message}" for i in self.issues)


def validate_graph(g: Graph) -> Diagnostics:
    """Structural checks; never raises."""
    diag = Diagnostics()
    seen: dict[Port, str] = {}

    def claim(port: Port, what: str):
        ni, pi = port
        if not 0 <= ni < len(g.nodes):
            diag.add("UnknownNode", f"{what} references node index {ni}")
            return
        node = g.nodes[ni]
        if not 0 <= pi < node.degree:
            diag.add("PortDegree", f"{what} uses port {pi + 1} of {node.kind.value} node {node.id}")
            return
        if port in seen:
            diag.add("DuplicatePort", f"port {node.id}.{pi + 1} used by {seen[port]} and {what}")
            return
        seen[port] = what

    ids = [n.id for n in g.nodes]
    if len(set(ids)) != len(ids):
        diag.add("DuplicateNode", "node ids are not unique")
    for n in g.nodes:
        if n.kind is NodeKind.DEG4 and n.params is None:
            diag.add("MissingParams", f"deg4 node {n.id} has no parameters")
        if n.kind is not NodeKind.DEG4 and n.params is not None:
            diag.add("PortDegree", f"degree-2 node {n.id} carries parameters")
    for k, (a, b) in enumerate(g.links):
        claim(a, f"link {k}")
        claim(b, f"link {k}")
    labels = [lab for lab, _ in g.dangling]
    for lab, port in g.dangling:
        claim(port, f"dangling {lab}")
    if g.dangling and sorted(labels) != list(DANGLING_LABELS):
        diag.add("BadDanglingSet", f"dangling labels {labels} must be exactly e1..e4")
    for i, n in enumerate(g.nodes):
        for p in range(n.degree):
            if (i, p) not in seen:
                diag.add("UnmatchedPort", f"port {n.id}.{p + 1} is neither linked nor dangling")
    if g.planar and diag.ok and g.crossings == 0 and not is_plane_rotation(g):
        diag.add("PlanarOrder", "declared port orders do not form a plane embedding")
    return diag


def check_graph(g: Graph) -> Graph:
    diag = validate_graph(g)
    if not diag.ok:
        raise GraphError(str(diag), diagnostics=diag)
    return g


def is_plane_rotation(g: Graph) -> bool:
    """Whether the port orders, read counterclockwise, embed ``g`` in the plane.

    Dangling ports are joined to an extra outer node so that ``e1..e4`` must
    appear counterclockwise around the outer face.  The check counts faces of
    the rotation system and applies Euler's formula per component.
    """
    degs = [n.degree for n in g.nodes]
    partner: dict[Port, Port] = {}
    for a, b in g.links:
        partner[a] = b
        partner[b] = a
    if g.dangling:
        outer = len(degs)
        degs = degs + [4]
        by_label = dict(g.dangling)
        # seen from outside, the ccw order of e1..e4 is reversed
        for slot, lab in enumerate(reversed(DANGLING_LABELS)):
            partner[by_label[lab]] = (outer, slot)
            partner[(outer, slot)] = by_label[lab]
    n_vertices = len(degs)
    n_edges = len(partner) // 2
    # faces: leave along dart (v, p); arriving at (w, q) continue with (w, q-1)
    visited = set()
    faces = 0
    for v, dv in enumerate(degs):
        for p in range(dv):
            if (v, p) in visited:
                continue
            faces += 1
            cur = (v, p)
            while cur not in visited:
                visited.add(cur)
                w, q = partner[cur]
                cur = (w, (q - 1) % degs[w])
    parent = list(range(n_vertices))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for (a, _), (b, _) in ((k, v) for k, v in partner.items()):
        parent[find(a)] = find(b)
    components = len({find(v) for v in range(n_vertices)})
    return n_vertices - n_edges + faces == 2 * components


# ---------------------------------------------------------------------------
# compiled arrays used by the engines


@dataclass(frozen=True, eq=False)
class CompiledGraph:
    graph: Graph
    n_slots: int
    slot_offset: np.ndarray      # [n_nodes] first slot of each node
    slot_node: np.ndarray        # [n_slots]
    slot_link: np.ndarray        # [n_slots] link index or -1 when dangling
    slot_partner: np.ndarray     # [n_slots] other end of the link or -1
    link_ends: np.ndarray        # [n_links, 2]
    deg4: np.ndarray             # [n4] node indices
    deg4_slots: np.ndarray       # [n4, 4]
    deg4_wtab: np.ndarray        # [n4, 16]
    deg2: np.ndarray             # [n2] node indices
    deg2_slots: np.ndarray       # [n2, 2]
    deg2_eq: np.ndarray          # [n2] bool
    node_row: np.ndarray         # [n_nodes] row into deg4_* or deg2_* arrays
    dangling_slots: np.ndarray   # [4] slots of e1..e4 (empty if closed)

    @property
    def n_links(self) -> int:
        return len(self.link_ends)


@functools.lru_cache(maxsize=256)
def compile_graph(g: Graph) -> CompiledGraph:
    check_graph(g)
    degs = np.array([n.degree for n in g.nodes], dtype=np.int64)
    offset = np.concatenate([[0], np.cumsum(degs)[:-1]]).astype(np.int64) if len(degs) else np.zeros(0, np.int64)
    n_slots = int(degs.sum())
    slot_node = np.repeat(np.arange(len(g.nodes)), degs).astype(np.int64)
    slot_link = np.full(n_slots, -1, dtype=np.int64)
    slot_partner = np.full(n_slots, -1, dtype=np.int64)
    link_ends = np.zeros((len(g.links), 2), dtype=np.int64)
    for k, ((na, pa), (nb, pb)) in enumerate(g.links):
        sa, sb = offset[na] + pa, offset[nb] + pb
        link_ends[k] = (sa, sb)
        slot_link[sa] = slot_link[sb] = k
        slot_partner[sa], slot_partner[sb] = sb, sa
    deg4 = np.array([i for i, n in enumerate(g.nodes) if n.kind is NodeKind.DEG4], dtype=np.int64)
    deg2 = np.array([i for i, n in enumerate(g.nodes) if n.kind is not NodeKind.DEG4], dtype=np.int64)
    node_row = np.full(len(g.nodes), -1, dtype=np.int64)
    node_row[deg4] = np.arange(len(deg4))
    node_row[deg2] = np.arange(len(deg2))
    deg4_slots = (offset[deg4][:, None] + np.arange(4)[None, :]).astype(np.int64) if len(deg4) else np.zeros((0, 4), np.int64)
    deg2_slots = (offset[deg2][:, None] + np.arange(2)[None, :]).astype(np.int64) if len(deg2) else np.zeros((0, 2), np.int64)
    wtab = np.array([weight_table(g.nodes[i].params) for i in deg4]).reshape(len(deg4), 16)
    deg2_eq = np.array([g.nodes[i].kind is NodeKind.EQ2 for i in deg2], dtype=bool)
    if g.dangling:
        dang = np.array([offset[g.dangling_port(lab)[0]] + g.dangling_port(lab)[1] for lab in DANGLING_LABELS], dtype=np.int64)
    else:
        dang = np.zeros(0, dtype=np.int64)
    return CompiledGraph(
        graph=g, n_slots=n_slots, slot_offset=offset, slot_node=slot_node, slot_link=slot_link,
        slot_partner=slot_partner, link_ends=link_ends, deg4=deg4, deg4_slots=deg4_slots,
        deg4_wtab=wtab, deg2=deg2, deg2_slots=deg2_slots, deg2_eq=deg2_eq, node_row=node_row,
        dangling_slots=dang,
    )


def local_patterns(cg: CompiledGraph, bits: np.ndarray) -> np.ndarray:
    """Pattern integers of every deg4 node; ``bits`` is ``[..., n_slots]``."""
    b = bits[..., cg.deg4_slots]
    return (b[..., 0].astype(np.int64) << 3) | (b[..., 1] << 2) | (b[..., 2] << 1) | b[..., 3]


def state_weights(cg: CompiledGraph, bits: np.ndarray) -> np.ndarray:
    """Product of deg4 local weights for each row of ``bits``."""
    pats = local_patterns(cg, np.atleast_2d(bits))
    if pats.shape[-1] == 0:
        return np.ones(pats.shape[0])
    vals = cg.deg4_wtab[np.arange(len(cg.deg4))[None, :], pats]
    return np.prod(vals, axis=-1)


def violations(cg: CompiledGraph, bits: np.ndarray) -> np.ndarray:
    """Number of links whose two ends carry equal bits."""
    b = np.atleast_2d(bits)
    if cg.n_links == 0:
        return np.zeros(b.shape[0], dtype=np.int64)
    return np.sum(b[:, cg.link_ends[:, 0]] == b[:, cg.link_ends[:, 1]], axis=1)


def node_constraints_ok(cg: CompiledGraph, bits: np.ndarray) -> np.ndarray:
    """Even deg4 patterns and satisfied degree-2 rules, per row."""
    b = np.atleast_2d(bits).astype(np.int64)
    ok = np.ones(b.shape[0], dtype=bool)
    if len(cg.deg4):
        ok &= np.all(b[:, cg.deg4_slots].sum(axis=2) % 2 == 0, axis=1)
    if len(cg.deg2):
        same = b[:, cg.deg2_slots[:, 0]] == b[:, cg.deg2_slots[:, 1]]
        ok &= np.all(same == cg.deg2_eq[None, :], axis=1)
    return ok
