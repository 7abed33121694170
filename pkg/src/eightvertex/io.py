"""Line-based graph files.

::

    8vx 1
    # comment
    node u deg4 1 2 3 4
    node m neq2
    node q eq2
    link u.1 m.1
    dangling u.2 e1
    planar
    crossings 1

Ports are 1-based.  Under ``planar`` the declaration order of a node's
ports is its counterclockwise order.  ``crossings`` is written only for
graphs produced by crossing splits of a plane graph.
"""

from __future__ import annotations

from pathlib import Path
from typing import Union

from .errors import GraphError
from .graph import Graph, Node, NodeKind, check_graph
from .model import Params

HEADER = "8vx 1"


def _err(lineno: int, message: str) -> GraphError:
    return GraphError(f"line {lineno}: {message}", line=lineno)


def _port_ref(tok: str, lineno: int) -> tuple[str, int]:
    nid, dot, port = tok.rpartition(".")
    if not dot or not nid:
        raise _err(lineno, f"expected <node>.<port>, got {tok!r}")
    try:
        p = int(port)
    except ValueError:
        raise _err(lineno, f"port {port!r} is not an integer") from None
    return nid, p


def parse_graph(text: str) -> Graph:
    """Parse and validate a graph file; errors carry the offending line."""
    lines = text.splitlines()
    nodes: list[Node] = []
    index: dict[str, int] = {}
    raw_links, raw_dangling = [], []
    planar = False
    crossings = 0
    seen_header = False
    for lineno, line in enumerate(lines, start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        toks = body.split()
        if not seen_header:
            if body != HEADER:
                raise _err(lineno, f"expected header {HEADER!r}")
            seen_header = True
            continue
        kw = toks[0]
        if kw == "node":
            if len(toks) < 3:
                raise _err(lineno, "node needs an id and a kind")
            nid, kind = toks[1], toks[2]
            if "." in nid:
                raise _err(lineno, f"node id {nid!r} may not contain '.'")
            if nid in index:
                raise _err(lineno, f"duplicate node id {nid!r}")
            try:
                nk = NodeKind(kind)
            except ValueError:
                raise _err(lineno, f"unknown node kind {kind!r}") from None
            params = None
            if nk is NodeKind.DEG4:
                if len(toks) != 7:
                    raise _err(lineno, "deg4 node needs four parameters a b c d")
                try:
                    params = Params(*(float(t) for t in toks[3:7]))
                except ValueError as exc:
                    raise _err(lineno, str(exc)) from None
            elif len(toks) != 3:
                raise _err(lineno, f"{kind} node takes no parameters")
            index[nid] = len(nodes)
            nodes.append(Node(nid, nk, params))
        elif kw == "link":
            if len(toks) != 3:
                raise _err(lineno, "link needs two port references")
            raw_links.append((lineno, _port_ref(toks[1], lineno), _port_ref(toks[2], lineno)))
        elif kw == "dangling":
            if len(toks) != 3:
                raise _err(lineno, "dangling needs a port reference and a label")
            raw_dangling.append((lineno, _port_ref(toks[1], lineno), toks[2]))
        elif kw == "planar":
            if len(toks) != 1:
                raise _err(lineno, "planar takes no arguments")
            planar = True
        elif kw == "crossings":
            if len(toks) != 2 or not toks[1].isdigit():
                raise _err(lineno, "crossings needs a nonnegative integer")
            crossings = int(toks[1])
        else:
            raise _err(lineno, f"unknown directive {kw!r}")
    if not seen_header:
        raise GraphError(f"line 1: missing header {HEADER!r}", line=1)

    def resolve(ref, lineno):
        nid, p = ref
        if nid not in index:
            raise _err(lineno, f"unknown node {nid!r}")
        return (index[nid], p - 1)

    links = tuple((resolve(a, ln), resolve(b, ln)) for ln, a, b in raw_links)
    dangling = tuple((lab, resolve(ref, ln)) for ln, ref, lab in raw_dangling)
    g = Graph(tuple(nodes), links, dangling, planar, crossings)
    return check_graph(g)


def _fmt(x: float) -> str:
    return repr(float(x))


def serialize_graph(g: Graph) -> str:
    out = [HEADER]
    for n in g.nodes:
        if n.kind is NodeKind.DEG4:
            out.append(f"node {n.id} deg4 " + " ".join(_fmt(x) for x in n.params.as_tuple()))
        else:
            out.append(f"node {n.id} {n.kind.value}")
    ref = lambda port: f"{g.nodes[port[0]].id}.{port[1] + 1}"  # noqa: E731
    for a, b in g.links:
        out.append(f"link {ref(a)} {ref(b)}")
    for lab, port in g.dangling:
        out.append(f"dangling {ref(port)} {lab}")
    if g.planar:
        out.append("planar")
    if g.crossings:
        out.append(f"crossings {g.crossings}")
    return "\n".join(out) + "\n"


def read_graph(path: Union[str, Path]) -> Graph:
    return parse_graph(Path(path).read_text(encoding="utf-8"))


def write_graph(g: Graph, path: Union[str, Path]) -> None:
    Path(path).write_text(serialize_graph(g), encoding="utf-8")
