"""Random instances for tests, fuzzing and benchmarks.

Closed graphs and general gadgets come from a configuration model on the
ports (rejected until connected).  Plane gadgets are grown from a single
node by two attachment operations that keep the rotation system plane and
the dangling ports ``e1..e4`` in counterclockwise order on the outer face.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .graph import DANGLING_LABELS, Graph, Node, NodeKind, Port
from .model import Params, region_classify

ParamSource = Callable[[np.random.Generator], Params]

# region name -> predicate on RegionFlags
REGIONS: dict[str, Callable] = {
    "positive": lambda f: True,
    "general": lambda f: f.A_le and f.B_le and f.C_le,
    "not_F_gt": lambda f: not f.F_gt,
    "planar": lambda f: f.A_le and f.B_le and f.C_ge and not f.F_gt,
    "fpras_general": lambda f: f.general,
    "fpras_planar": lambda f: f.planar,
    "F_gt": lambda f: f.F_gt,
}


def sample_params(region: str, rng: np.random.Generator, max_tries: int = 100_000) -> Params:
    """Uniform draw from ``(0, 1]^4`` conditioned on ``region`` (by rejection)."""
    accept = REGIONS[region]
    for _ in range(max_tries):
        p = Params(*(1.0 - rng.random(4)))
        if accept(region_classify(p)):
            return p
    raise RuntimeError(f"could not sample parameters in region {region!r}")


def param_source(source) -> ParamSource:
    """A callable drawing Params: fixed tuple/Params, or a region name."""
    if isinstance(source, str):
        return lambda rng: sample_params(source, rng)
    if callable(source):
        return source
    p = source if isinstance(source, Params) else Params(*source)
    return lambda rng: p


def _connected(n: int, edges) -> bool:
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in edges:
        parent[find(a)] = find(b)
    return len({find(i) for i in range(n)}) <= 1


def _match_ports(ports: list[Port], rng, loops: bool, max_tries: int):
    for _ in range(max_tries):
        perm = rng.permutation(len(ports))
        links = [(ports[perm[2 * i]], ports[perm[2 * i + 1]]) for i in range(len(ports) // 2)]
        if not loops and any(a[0] == b[0] for a, b in links):
            continue
        yield links


def random_closed_graph(
    n4: int,
    rng: np.random.Generator,
    params="positive",
    loops: bool = False,
    max_tries: int = 10_000,
) -> Graph:
    """Connected 4-regular multigraph on ``n4`` nodes (configuration model)."""
    if n4 < 1:
        raise ValueError("need at least one node")
    src = param_source(params)
    ports = [(i, p) for i in range(n4) for p in range(4)]
    if n4 == 1:
        loops = True
    for links in _match_ports(ports, rng, loops, max_tries):
        if _connected(n4, [(a[0], b[0]) for a, b in links]):
            nodes = tuple(Node(f"v{i}", NodeKind.DEG4, src(rng)) for i in range(n4))
            return Graph(nodes, tuple(links))
    raise RuntimeError("no connected graph found")


def random_gadget(
    n4: int,
    rng: np.random.Generator,
    params="positive",
    loops: bool = True,
    max_tries: int = 10_000,
) -> Graph:
    """Connected 4-ary construction on ``n4`` nodes with random wiring."""
    src = param_source(params)
    ports = [(i, p) for i in range(n4) for p in range(4)]
    for _ in range(max_tries):
        pick = rng.choice(len(ports), size=4, replace=False)
        dang = [ports[i] for i in pick]
        rest = [p for i, p in enumerate(ports) if i not in set(pick.tolist())]
        links = next(_match_ports(rest, rng, loops, 1), None)
        if links is None:
            continue
        if _connected(n4, [(a[0], b[0]) for a, b in links]):
            nodes = tuple(Node(f"v{i}", NodeKind.DEG4, src(rng)) for i in range(n4))
            dangling = tuple((lab, port) for lab, port in zip(DANGLING_LABELS, dang))
            return Graph(nodes, tuple(links), dangling)
    raise RuntimeError("no connected gadget found")


def planar_gadget(n4: int, rng: np.random.Generator, params="planar") -> Graph:
    """Plane 4-ary construction grown by boundary attachments.

    The boundary is the counterclockwise list of dangling ports.  Each step
    either (A) attaches a node to two consecutive boundary ports, or (B)
    attaches a node to one boundary port and then joins two consecutive
    boundary ports by a link through the outer face.
    """
    if n4 < 1:
        raise ValueError("need at least one node")
    src = param_source(params)
    nodes = [Node("v0", NodeKind.DEG4, src(rng))]
    links: list[tuple[Port, Port]] = []
    boundary: list[Port] = [(0, 0), (0, 1), (0, 2), (0, 3)]

    def new_node(rotation: list[str]) -> tuple[int, dict[str, int]]:
        idx = len(nodes)
        nodes.append(Node(f"v{idx}", NodeKind.DEG4, src(rng)))
        shift = int(rng.integers(4))
        return idx, {name: (k + shift) % 4 for k, name in enumerate(rotation)}

    while len(nodes) < n4:
        m = len(boundary)
        i = int(rng.integers(m))
        if rng.random() < 0.5:
            # A: the new node's ccw rotation is [b_{i+1}, b_i, out1, out2]
            bi, bj = boundary[i], boundary[(i + 1) % m]
            y, port = new_node(["in2", "in1", "out1", "out2"])
            links.append((bi, (y, port["in1"])))
            links.append((bj, (y, port["in2"])))
            repl = [(y, port["out1"]), (y, port["out2"])]
            if i + 1 < m:
                boundary[i:i + 2] = repl
            else:
                boundary[i:i + 1] = [repl[0]]
                boundary[0:1] = [repl[1]]
                boundary = boundary[1:] + boundary[:1]
        else:
            # B: ccw rotation [b_i, o1, o2, o3], then close a consecutive pair
            bi = boundary[i]
            y, port = new_node(["in", "o1", "o2", "o3"])
            links.append((bi, (y, port["in"])))
            boundary[i:i + 1] = [(y, port["o1"]), (y, port["o2"]), (y, port["o3"])]
            m = len(boundary)
            j = int(rng.integers(m))
            a, b = boundary[j], boundary[(j + 1) % m]
            links.append((a, b))
            if j + 1 < m:
                del boundary[j:j + 2]
            else:
                boundary = boundary[1:j]
    shift = int(rng.integers(4))
    boundary = boundary[shift:] + boundary[:shift]
    dangling = tuple(zip(DANGLING_LABELS, boundary))
    return Graph(tuple(nodes), tuple(links), dangling, planar=True)


def close_gadget(g: Graph) -> Graph:
    """Closed graph from a gadget by linking e1-e2 and e3-e4 (keeps planarity)."""
    d = dict(g.dangling)
    links = g.links + ((d["e1"], d["e2"]), (d["e3"], d["e4"]))
    return Graph(g.nodes, links, (), g.planar, g.crossings)


def random_planar_graph(n4: int, rng: np.random.Generator, params="planar") -> Graph:
    """Closed plane graph: a plane gadget with its dangling ports joined."""
    if n4 < 1:
        raise ValueError("need at least one node")
    return close_gadget(planar_gadget(n4, rng, params))
