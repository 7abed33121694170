"""Approximate counting by self-reduction over signed pairings.

At each step one degree-4 node ``v`` is chosen and the probability
``Pr_v(rho) = w(rho) Z(G_{v,rho}) / Z(G)`` of every signed pairing is
estimated: even orientations are sampled with the chain and each sample
draws one of the three pairings compatible with its local pattern at
``v``.  The node is then split along the pairing with the largest
estimate into two degree-2 nodes (1-in-1-out for ``+``, 2-in/2-out for
``-``), and

    Z(G) = w(rho) Z(G_{v,rho}) / Pr_v(rho).

Once only degree-2 nodes remain the graph is a union of ``C`` cycles and
``Z = 2^C``.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidPairing, MarginError, OddEqParity, RegionError, ZeroWeightState
from .exact import exact_partition, has_even_orientation, signed_pairing_mass
from .graph import Graph, Node, NodeKind, compile_graph, local_patterns
from .mcmc import initial_state, sample_even_many
from .model import (
    SIGN_TABLE,
    SIGNED_PAIRINGS,
    Pairing,
    SignedPairing,
    WeightFunction,
    region_classify,
    solve_weight_function,
)

S1P, S1M, S2P, S2M, S3P, S3M = SIGNED_PAIRINGS
ALLOWED = {
    "general": (S1P, S2P, S3P),
    "planar": (S1P, S2P, S3M),
    "any": SIGNED_PAIRINGS,
}
DEFAULT_C0 = 64.0
DEFAULT_MARGIN = 0.05


def worker_count() -> int:
    """Threads used for chain replicas (``EIGHTVERTEX_WORKERS`` or all cores)."""
    env = os.environ.get("EIGHTVERTEX_WORKERS", "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def _node_index(g: Graph, v) -> int:
    if isinstance(v, (int, np.integer)):
        return int(v)
    return g.node_index(str(v))


# ---------------------------------------------------------------------------
# pairing draws


def draw_table(w: WeightFunction) -> np.ndarray:
    """``[16, 6]`` conditional probabilities of each signed pairing given the
    local pattern; rows of odd or zero-weight patterns are all zero."""
    vals = w.as_array()
    table = np.zeros((16, 6))
    for pat in range(16):
        if not SIGN_TABLE[pat].any():
            continue
        for pr in range(3):
            idx = 2 * pr + (0 if SIGN_TABLE[pat, pr] > 0 else 1)
            table[pat, idx] = vals[idx]
        tot = table[pat].sum()
        if tot > 0:
            table[pat] /= tot
    return table


def draw_pairings(patterns: np.ndarray, table: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One signed-pairing index per pattern, by inversion of the row CDF."""
    probs = table[np.asarray(patterns, dtype=np.int64)]
    cdf = np.cumsum(probs, axis=1)
    if np.any(cdf[:, -1] <= 0):
        raise ZeroWeightState("a sampled configuration has zero local weight")
    u = rng.random(len(probs)) * cdf[:, -1]
    return np.argmax(u[:, None] < cdf, axis=1)


def conditional_pairing_draw(
    g: Graph, sigma0: np.ndarray, v, w: Optional[WeightFunction], rng: np.random.Generator
) -> SignedPairing:
    """Draw a signed pairing at ``v`` with probability ``w(rho) / f_v(sigma0)``."""
    vi = _node_index(g, v)
    cg = compile_graph(g)
    if g.nodes[vi].kind is not NodeKind.DEG4:
        raise ValueError(f"node {g.nodes[vi].id} is not a degree-4 node")
    w = solve_weight_function(g.nodes[vi].params) if w is None else w
    pat = local_patterns(cg, np.asarray(sigma0, dtype=np.uint8)[None, :])[0, cg.node_row[vi]]
    return SIGNED_PAIRINGS[int(draw_pairings([pat], draw_table(w), rng)[0])]


def estimate_pairing_probs(
    g: Graph,
    v,
    nsamples: int,
    rng: np.random.Generator,
    w: Optional[WeightFunction] = None,
    burnin: Optional[int] = None,
    stride: int = 1,
    replicas: int = 1,
    workers: Optional[int] = None,
) -> np.ndarray:
    """Empirical frequencies of the six signed pairings at ``v``.

    ``nsamples`` even orientations are split across ``replicas``
    independent chains (run on up to ``workers`` threads).  Child seeds
    are drawn from ``rng`` up front, so the result does not depend on the
    number of threads.
    """
    if nsamples < 1:
        raise ValueError("nsamples must be >= 1")
    vi = _node_index(g, v)
    cg = compile_graph(g)
    if g.nodes[vi].kind is not NodeKind.DEG4:
        raise ValueError(f"node {g.nodes[vi].id} is not a degree-4 node")
    w = solve_weight_function(g.nodes[vi].params) if w is None else w
    rec = cg.deg4_slots[cg.node_row[vi]]
    replicas = max(1, min(replicas, nsamples))
    sizes = [nsamples // replicas + (i < nsamples % replicas) for i in range(replicas)]
    seeds = rng.integers(0, 2**63 - 1, size=replicas)
    init = initial_state(g)

    def run(i):
        return sample_even_many(
            g, np.random.default_rng(int(seeds[i])), sizes[i],
            burnin=burnin, batch=stride, rec_slots=rec, init=init,
        )

    workers = worker_count() if workers is None else workers
    if workers > 1 and replicas > 1:
        with ThreadPoolExecutor(max_workers=min(workers, replicas)) as ex:
            parts = list(ex.map(run, range(replicas)))
    else:
        parts = [run(i) for i in range(replicas)]
    b = np.concatenate(parts).astype(np.int64)
    pats = (b[:, 0] << 3) | (b[:, 1] << 2) | (b[:, 2] << 1) | b[:, 3]
    draws = draw_pairings(pats, draw_table(w), rng)
    return np.bincount(draws, minlength=6) / len(draws)


def true_pairing_probs(g: Graph, v) -> np.ndarray:
    """Exact ``Pr_v(rho)`` for the six signed pairings, by enumeration."""
    vi = _node_index(g, v)
    mass = signed_pairing_mass(g, vi)
    return mass / mass.sum()


# ---------------------------------------------------------------------------
# graph surgery


def split_node(g: Graph, v, rho: SignedPairing, mode: str = "general") -> Graph:
    """Replace degree-4 node ``v`` by two degree-2 nodes following ``rho``.

    The node ``v`` becomes ``v~1`` (ports of the first pair) and ``v~2``
    (second pair).  ``+`` gives 1-in-1-out nodes, ``-`` gives 2-in/2-out
    nodes.  ``mode`` restricts the allowed pairings: ``general`` accepts
    s1+, s2+, s3+; ``planar`` accepts s1+, s2+, s3- on planar graphs;
    ``any`` accepts all six (used for identity checks).  A crossing split
    of a planar graph increments ``crossings``.
    """
    if mode not in ALLOWED:
        raise ValueError(f"unknown mode {mode!r}")
    rho = SignedPairing(Pairing(rho[0]), int(rho[1]))
    if rho not in ALLOWED[mode]:
        raise InvalidPairing(f"{rho} is not allowed in {mode} mode")
    if mode == "planar" and not g.planar:
        raise InvalidPairing("planar splits need a planar graph")
    vi = _node_index(g, v)
    node = g.nodes[vi]
    if node.kind is not NodeKind.DEG4:
        raise ValueError(f"node {node.id} is not a degree-4 node")
    kind = NodeKind.NEQ2 if rho.sign > 0 else NodeKind.EQ2
    first, second = rho.pairing.pairs
    new_nodes = list(g.nodes[:vi]) + [Node(f"{node.id}~1", kind), Node(f"{node.id}~2", kind)] + list(g.nodes[vi + 1:])
    remap = {}
    for k, pair in enumerate((first, second)):
        for j, port in enumerate(pair):
            remap[port] = (vi + k, j)

    def move(port):
        n, p = port
        if n == vi:
            return remap[p]
        return (n + 1 if n > vi else n, p)

    links = tuple((move(a), move(b)) for a, b in g.links)
    dangling = tuple((lab, move(p)) for lab, p in g.dangling)
    crossings = g.crossings + (1 if g.planar and rho.pairing is Pairing.S3 else 0)
    return Graph(tuple(new_nodes), links, dangling, g.planar, crossings)


def cycle_structure(g: Graph) -> tuple[int, int]:
    """``(number of cycles, cycles with an odd count of 2-in/2-out nodes)``
    for a closed graph of degree-2 nodes only."""
    if not g.closed:
        raise ValueError("base case needs a closed graph")
    if any(n.kind is NodeKind.DEG4 for n in g.nodes):
        raise ValueError("base case needs a graph without degree-4 nodes")
    n = len(g.nodes)
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for (a, _), (b, _) in g.links:
        parent[find(a)] = find(b)
    eq = {}
    for i, node in enumerate(g.nodes):
        r = find(i)
        eq[r] = eq.get(r, 0) + (node.kind is NodeKind.EQ2)
    return len(eq), sum(c % 2 for c in eq.values())


def base_case_value(g: Graph) -> float:
    """``2^C`` for ``C`` disjoint cycles; 0 with an ``OddEqParity`` warning when
    some cycle carries an odd number of 2-in/2-out nodes."""
    c, odd = cycle_structure(g)
    if odd:
        warnings.warn(f"{odd} cycle(s) with an odd number of eq2 nodes", OddEqParity, stacklevel=2)
        return 0.0
    return float(2**c)


# ---------------------------------------------------------------------------
# the estimator


@dataclass(frozen=True)
class ReductionStep:
    node: str
    pairing: SignedPairing
    p_hat: float
    w: float
    mode: str
    probs: tuple[float, ...] = ()

    def as_dict(self) -> dict:
        return {"node": self.node, "pairing": str(self.pairing), "p_hat": self.p_hat, "w": self.w}


@dataclass
class Estimate:
    z_hat: float
    steps: list[ReductionStep]
    cycles: int
    samples_per_step: int
    mode: str
    eps: float
    seed: Optional[int] = None
    base_value: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def log_z_hat(self) -> float:
        return math.log(self.z_hat) if self.z_hat > 0 else -math.inf

    def to_dict(self) -> dict:
        return {
            "Z_hat": self.z_hat,
            "steps": [s.as_dict() for s in self.steps],
            "C": self.cycles,
            "seeds": [] if self.seed is None else [self.seed],
            "samples_per_step": self.samples_per_step,
            "mode": self.mode,
            "eps": self.eps,
        }


def samples_per_step(n: int, eps: float, c0: float = DEFAULT_C0) -> int:
    """``ceil(c0 n^2 / eps^2)``."""
    return max(1, math.ceil(c0 * n * n / (eps * eps)))


def check_region(g: Graph, mode: str) -> None:
    """Raise ``RegionError`` unless every node fits the estimator's region."""
    if mode not in ("general", "planar"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "planar" and not g.planar:
        raise RegionError("planar mode needs a graph with the planar flag")
    for i in g.deg4_nodes:
        node = g.nodes[i]
        f = region_classify(node.params)
        ok = f.general if mode == "general" else f.planar
        if not ok:
            want = "F_le2&A_le&B_le&C_le" if mode == "general" else "F_le2&A_le&B_le&C_ge"
            raise RegionError(f"node {node.id} parameters {node.params} lie outside {want}")


def approximate_Z(
    g: Graph,
    eps: float,
    rng: np.random.Generator,
    mode: str = "general",
    c0: float = DEFAULT_C0,
    samples: Optional[int] = None,
    burnin: Optional[int] = None,
    stride: int = 1,
    replicas: int = 1,
    workers: Optional[int] = None,
    margin: float = DEFAULT_MARGIN,
    seed: Optional[int] = None,
) -> Estimate:
    """Self-reduction estimate of the partition function.

    Nodes are eliminated in declaration order.  At each step the allowed
    pairing with the largest estimated probability is chosen; if even that
    falls below ``1/6 - margin`` a ``MarginError`` is raised.  The sample
    count per step is ``ceil(c0 n^2 / eps^2)`` with ``n`` the number of
    degree-4 nodes of the input, unless ``samples`` overrides it.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if not g.closed:
        raise ValueError("the estimator needs a closed graph")
    compile_graph(g)
    check_region(g, mode)
    n = g.n_deg4
    nsamp = samples if samples is not None else samples_per_step(n, eps, c0)
    if not has_even_orientation(g):
        return Estimate(0.0, [], 0, nsamp, mode, eps, seed)
    allowed = ALLOWED[mode]
    steps: list[ReductionStep] = []
    log_ratio = 0.0
    cur = g
    while cur.n_deg4:
        vi = cur.deg4_nodes[0]
        wf = solve_weight_function(cur.nodes[vi].params)
        probs = estimate_pairing_probs(
            cur, vi, nsamp, rng, w=wf, burnin=burnin, stride=stride, replicas=replicas, workers=workers
        )
        best = max(allowed, key=lambda sp: (probs[sp.index], -allowed.index(sp)))
        p_hat = float(probs[best.index])
        if p_hat <= 0 or p_hat < 1 / 6 - margin:
            raise MarginError(
                f"largest allowed estimate {p_hat:.4f} at node {cur.nodes[vi].id} is below 1/6 - {margin}"
            )
        w = float(wf[best])
        steps.append(ReductionStep(cur.nodes[vi].id, best, p_hat, w, mode, tuple(float(x) for x in probs)))
        log_ratio += math.log(w) - math.log(p_hat)
        cur = split_node(cur, vi, best, mode)
    cyc, _ = cycle_structure(cur)
    base = base_case_value(cur)
    z = math.exp(log_ratio) * base
    return Estimate(z, steps, cyc, nsamp, mode, eps, seed, base)


def telescope(g: Graph, steps: Sequence[ReductionStep], mode: str = "any") -> tuple[float, float]:
    """Replay ``steps`` with exact probabilities.

    Returns ``(prod w / Pr * base, Z(G))``; the two agree whenever the
    splits are valid, so the estimator's only error is in the estimates.
    """
    z = exact_partition(g)
    cur = g
    acc = 1.0
    for st in steps:
        vi = cur.node_index(st.node)
        p = true_pairing_probs(cur, vi)[st.pairing.index]
        wf = solve_weight_function(cur.nodes[vi].params)
        acc *= wf[st.pairing] / p
        cur = split_node(cur, vi, st.pairing, mode)
    return acc * base_case_value(cur), z
