"""Exact evaluation by enumeration: strata, partition functions, gadgets
and the signed-pairing decomposition.

All enumeration runs over link-bit vectors restricted to the affine
subspace cut out by the node parity rules (see :mod:`eightvertex.gf2`), so
only valid assignments are ever generated.
"""

from __future__ import annotations

import enum
import functools
import itertools
import math
from dataclasses import dataclass
from typing import Iterator, Mapping, Optional, Sequence

import numpy as np

from .errors import InternalError, RegionError, TooLarge
from .gf2 import AffineSystem
from .graph import (
    CompiledGraph,
    Graph,
    NodeKind,
    compile_graph,
    local_patterns,
    state_weights,
)
from .model import (
    CLASS_REPRESENTATIVE,
    REL_TOL,
    SIGN_TABLE,
    Pairing,
    Params,
    SignedPairing,
    WeightFunction,
    region_classify,
    solve_weight_function,
)

DEFAULT_CAP = 1 << 30


@dataclass(frozen=True)
class StratumMass:
    z0: float
    z2: float
    z4: float

    @property
    def ratio(self) -> float:
        return self.z2 / self.z0 if self.z0 > 0 else math.inf


# ---------------------------------------------------------------------------
# the affine description of assignments


@dataclass(frozen=True, eq=False)
class _System:
    affine: AffineSystem
    rhs0: np.ndarray        # right-hand side with every link satisfied
    flip_row: np.ndarray    # [n_links] equation toggled when the link is violated
    slot_var: np.ndarray    # [n_slots]
    slot_const: np.ndarray  # [n_slots] constant when every link is satisfied
    end_b: np.ndarray       # [n_links] slot whose constant drops when violated
    n_links: int


@functools.lru_cache(maxsize=256)
def _system(cg: CompiledGraph) -> _System:
    g = cg.graph
    n_links = cg.n_links
    n_vars = n_links + len(cg.dangling_slots)
    slot_var = cg.slot_link.copy()
    for j, s in enumerate(cg.dangling_slots):
        slot_var[s] = n_links + j
    slot_const = np.zeros(cg.n_slots, dtype=np.uint8)
    slot_const[cg.link_ends[:, 1]] = 1
    A = np.zeros((len(g.nodes), n_vars), dtype=np.uint8)
    rhs = np.zeros(len(g.nodes), dtype=np.uint8)
    for i, node in enumerate(g.nodes):
        start = cg.slot_offset[i]
        const = 0
        for s in range(start, start + node.degree):
            A[i, slot_var[s]] ^= 1
            const ^= int(slot_const[s])
        target = 1 if node.kind is NodeKind.NEQ2 else 0
        rhs[i] = target ^ const
    flip_row = cg.slot_node[cg.link_ends[:, 1]] if n_links else np.zeros(0, np.int64)
    return _System(AffineSystem(A), rhs, flip_row, slot_var, slot_const, cg.link_ends[:, 1].copy(), n_links)


def _bits_from_vars(sysm: _System, X: np.ndarray, violated: Sequence[int]) -> np.ndarray:
    const = sysm.slot_const.copy()
    if len(violated):
        # a violated link carries the same bit at both ends
        const[sysm.end_b[list(violated)]] = 0
    return X[:, sysm.slot_var] ^ const[None, :]


def _blocks(cg: CompiledGraph, k: int, cap: int, block: int = 1 << 15) -> Iterator[np.ndarray]:
    sysm = _system(cg)
    n_links = sysm.n_links
    total = math.comb(n_links, k) * (1 << sysm.affine.nullity)
    if total > cap:
        raise TooLarge(f"stratum {k} needs {total} candidate vectors (cap {cap})")
    for subset in itertools.combinations(range(n_links), k):
        b = sysm.rhs0.copy()
        for l in subset:
            b[sysm.flip_row[l]] ^= 1
        x0 = sysm.affine.particular(b)
        if x0 is None:
            continue
        for X in sysm.affine.iter_solutions(x0, block):
            yield _bits_from_vars(sysm, X, subset)


def _require_closed(g: Graph):
    if not g.closed:
        raise ValueError("operation requires a closed graph (no dangling ports)")


def enumerate_stratum(g: Graph, k: int, cap: int = DEFAULT_CAP) -> Iterator[np.ndarray]:
    """Yield every valid assignment with exactly ``k`` violated links."""
    _require_closed(g)
    cg = compile_graph(g)
    for blk in _blocks(cg, k, cap):
        yield from blk


def stratum_states(g: Graph, k: int, cap: int = DEFAULT_CAP) -> np.ndarray:
    """All assignments of stratum ``k`` as a ``[N, n_slots]`` uint8 array."""
    _require_closed(g)
    cg = compile_graph(g)
    blocks = list(_blocks(cg, k, cap))
    if not blocks:
        return np.zeros((0, cg.n_slots), dtype=np.uint8)
    return np.concatenate(blocks)


def stratum_mass(g: Graph, k: int, cap: int = DEFAULT_CAP) -> float:
    """Weighted sum of the assignments with ``k`` violated links."""
    _require_closed(g)
    if any(g.nodes[i].params.degenerate for i in g.deg4_nodes):
        return 0.0
    cg = compile_graph(g)
    return float(sum(state_weights(cg, blk).sum() for blk in _blocks(cg, k, cap)))


def exact_partition(g: Graph, cap: int = DEFAULT_CAP) -> float:
    return stratum_mass(g, 0, cap)


def stratum_masses(g: Graph, cap: int = DEFAULT_CAP) -> StratumMass:
    return StratumMass(*(stratum_mass(g, k, cap) for k in (0, 2, 4)))


def has_even_orientation(g: Graph) -> bool:
    _require_closed(g)
    sysm = _system(compile_graph(g))
    return sysm.affine.particular(sysm.rhs0) is not None


def find_even_orientation(g: Graph) -> Optional[np.ndarray]:
    """One assignment in the zero-violation stratum, or None."""
    _require_closed(g)
    cg = compile_graph(g)
    sysm = _system(cg)
    x0 = sysm.affine.particular(sysm.rhs0)
    if x0 is None:
        return None
    return _bits_from_vars(sysm, x0[None, :], ())[0]


# ---------------------------------------------------------------------------
# 4-ary constructions


def composed_signature(g: Graph, cap: int = DEFAULT_CAP) -> np.ndarray:
    """Weight of every external pattern on ``e1..e4`` (length-16 array)."""
    if len(g.dangling) != 4:
        raise ValueError("a 4-ary construction needs exactly four dangling ports")
    cg = compile_graph(g)
    sig = np.zeros(16)
    dang = cg.dangling_slots
    for blk in _blocks(cg, 0, cap):
        ext = (blk[:, dang[0]].astype(np.int64) << 3) | (blk[:, dang[1]] << 2) | (blk[:, dang[2]] << 1) | blk[:, dang[3]]
        sig += np.bincount(ext, weights=state_weights(cg, blk), minlength=16)
    return sig


def compose_construction(g: Graph, rel_tol: float = REL_TOL) -> Params:
    """Parameters of the virtual node realized by a 4-ary construction."""
    sig = composed_signature(g)
    scale = max(1.0, float(np.max(np.abs(sig))))
    for idx in range(16):
        parity = bin(idx).count("1") % 2
        if parity and abs(sig[idx]) > rel_tol * scale:
            raise InternalError(f"odd external pattern {idx:04b} has weight {sig[idx]}")
        if abs(sig[idx] - sig[15 - idx]) > rel_tol * scale:
            raise InternalError(f"arrow reversal broken on pattern {idx:04b}")
    return Params(*(max(float(sig[i]), 0.0) for i in CLASS_REPRESENTATIVE))


def cut_open(g: Graph, e: int, f: int) -> Graph:
    """Cut links ``e`` and ``f``; their halves become ``e1,e2`` and ``e3,e4``.

    With this labelling, patterns of class a and d on the cut ports are the
    assignments where both links are defective, b and c where neither is.
    """
    _require_closed(g)
    if e == f:
        raise ValueError("need two distinct links")
    (p, q), (r, s) = g.links[e], g.links[f]
    links = tuple(l for i, l in enumerate(g.links) if i not in (e, f))
    dangling = (("e1", p), ("e2", q), ("e3", r), ("e4", s))
    return Graph(g.nodes, links, dangling, planar=False)


# ---------------------------------------------------------------------------
# quantum decomposition


@dataclass(frozen=True)
class DacpTerm:
    pairings: tuple[SignedPairing, ...]
    weight: float
    circuits: int
    even_minus: bool


def node_weight_functions(
    g: Graph, weights: Optional[Mapping[int, WeightFunction]] = None
) -> list[WeightFunction]:
    """Weight functions of the deg4 nodes in node order (canonical by default)."""
    out = []
    for i in g.deg4_nodes:
        if weights is not None and i in weights:
            out.append(weights[i])
        else:
            out.append(solve_weight_function(g.nodes[i].params))
    return out


@functools.lru_cache(maxsize=64)
def _family_structure(cg: CompiledGraph):
    """Circuit data for every family of (unsigned) pairings at the deg4 nodes.

    Returns the family list, number of circuits per family, the circuit of
    each pair ``[F, n4, 2]`` and the circuit of each eq2 node ``[F, n_eq]``.
    """
    n4 = len(cg.deg4)
    families = list(itertools.product(range(3), repeat=n4))
    eq_rows = np.nonzero(cg.deg2_eq)[0]
    counts = np.zeros(len(families), dtype=np.int64)
    pair_circ = np.zeros((len(families), n4, 2), dtype=np.int64)
    eq_circ = np.zeros((len(families), len(eq_rows)), dtype=np.int64)
    pairs_of = [Pairing(i + 1).pairs for i in range(3)]
    for fi, fam in enumerate(families):
        parent = list(range(cg.n_slots))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        def union(x, y):
            parent[find(x)] = find(y)

        for sa, sb in cg.link_ends:
            union(int(sa), int(sb))
        for row, choice in enumerate(fam):
            for (i, j) in pairs_of[choice]:
                union(int(cg.deg4_slots[row, i]), int(cg.deg4_slots[row, j]))
        for row in range(len(cg.deg2)):
            union(int(cg.deg2_slots[row, 0]), int(cg.deg2_slots[row, 1]))
        roots = {find(s) for s in range(cg.n_slots)}
        counts[fi] = len(roots)
        for row, choice in enumerate(fam):
            for k, (i, _) in enumerate(pairs_of[choice]):
                pair_circ[fi, row, k] = find(int(cg.deg4_slots[row, i]))
        for k, row in enumerate(eq_rows):
            eq_circ[fi, k] = find(int(cg.deg2_slots[row, 0]))
    return families, counts, pair_circ, eq_circ


def dacp_expand(
    g: Graph,
    sigma0: np.ndarray,
    weights: Optional[Mapping[int, WeightFunction]] = None,
    cap: int = 3**10,
) -> list[DacpTerm]:
    """Expand one even orientation into its signed-pairing families.

    One term per choice of pairing at every deg4 node; signs come from the
    local patterns of ``sigma0``.  Term weights sum to the configuration
    weight.
    """
    _require_closed(g)
    cg = compile_graph(g)
    n4 = len(cg.deg4)
    if 3**n4 > cap:
        raise TooLarge(f"{3**n4} decomposition terms exceed cap {cap}")
    sigma0 = np.asarray(sigma0, dtype=np.uint8)
    pats = local_patterns(cg, sigma0[None, :])[0]
    wfs = node_weight_functions(g, weights)
    families, counts, pair_circ, eq_circ = _family_structure(cg)
    signs = SIGN_TABLE[pats]  # [n4, 3]
    if n4 and np.any(signs == 0):
        raise ValueError("sigma0 has an odd local pattern")
    terms = []
    for fi, fam in enumerate(families):
        sps = tuple(SignedPairing(Pairing(ch + 1), int(signs[row, ch])) for row, ch in enumerate(fam))
        weight = math.prod(wfs[row][sp] for row, sp in enumerate(sps))
        minus = np.zeros(cg.n_slots, dtype=np.int64)
        for row, sp in enumerate(sps):
            if sp.sign < 0:
                minus[pair_circ[fi, row, 0]] += 1
                minus[pair_circ[fi, row, 1]] += 1
        for c in eq_circ[fi]:
            minus[c] += 1
        terms.append(DacpTerm(sps, float(weight), int(counts[fi]), bool(np.all(minus % 2 == 0))))
    return terms


def signed_pairing_mass(
    g: Graph,
    v: int,
    weights: Optional[Mapping[int, WeightFunction]] = None,
    cap: int = DEFAULT_CAP,
) -> np.ndarray:
    """Total decomposition weight carrying each signed pairing at node ``v``.

    Returned in the order s1+, s1-, s2+, s2-, s3+, s3-.  The sum over the
    other nodes' pairings factorizes into their local weights, so only the
    pairing at ``v`` is enumerated explicitly.
    """
    _require_closed(g)
    cg = compile_graph(g)
    if g.nodes[v].kind is not NodeKind.DEG4:
        raise ValueError(f"node {v} is not a degree-4 node")
    row = int(cg.node_row[v])
    wf = node_weight_functions(g, weights)[row]
    out = np.zeros(6)
    for blk in _blocks(cg, 0, cap):
        pats = local_patterns(cg, blk)
        vals = cg.deg4_wtab[np.arange(len(cg.deg4))[None, :], pats]
        others = np.prod(np.delete(vals, row, axis=1), axis=1)
        sign = SIGN_TABLE[pats[:, row]]
        for pr in range(3):
            out[2 * pr] += others[sign[:, pr] > 0].sum()
            out[2 * pr + 1] += others[sign[:, pr] < 0].sum()
    return out * wf.as_array()


# ---------------------------------------------------------------------------
# closure checks


class Region(str, enum.Enum):
    GENERAL = "A_le&B_le&C_le"
    NOT_F_GT = "not_F_gt"
    PLANAR = "planar:A_le&B_le&C_ge&not_F_gt"

    def contains(self, p: Params, tol: float = REL_TOL) -> bool:
        f = region_classify(p, tol)
        if self is Region.GENERAL:
            return f.A_le and f.B_le and f.C_le
        if self is Region.NOT_F_GT:
            return not f.F_gt
        return f.A_le and f.B_le and f.C_ge and not f.F_gt


@dataclass(frozen=True)
class ClosureReport:
    region: Region
    composed: Params
    passed: bool


def check_closure_sample(region: Region | str, g: Graph, tol: float = REL_TOL) -> ClosureReport:
    """Compose ``g`` and test that the result stays inside ``region``."""
    region = Region(region)
    if region is Region.PLANAR and not g.planar:
        raise RegionError("planar closure check needs a graph with the planar flag")
    for i in g.deg4_nodes:
        if not region.contains(g.nodes[i].params, tol):
            raise RegionError(f"node {g.nodes[i].id} parameters lie outside {region.value}")
    composed = compose_construction(g)
    return ClosureReport(region, composed, region.contains(composed, tol))
