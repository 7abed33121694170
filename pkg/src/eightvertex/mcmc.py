"""The directed-loop Metropolis chain on even and near-even orientations.

States are assignments with zero or two violated links.  A move flips the
two slots of one port pair at a single node, which keeps every node rule
intact and toggles the status of the two links involved:

* create – both links become violated (even -> near-even),
* merge  – both violated links are repaired (near-even -> even),
* shift  – one defect moves to a neighbouring link.

Proposals pick one of ``M`` slots uniformly, where ``M = 12 n4 + 2 n2``:
each deg4 node owns 12 slots of which the first 6 are its port pairs in
lexicographic order, each degree-2 node owns 2 slots of which the first is
its only pair.  Unused slots hold, so every state holds with probability
at least 1/2.  With no degree-2 nodes ``M = 12 n``.
"""

from __future__ import annotations

import functools
import hashlib
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.csgraph as csgraph
import scipy.sparse.linalg as spla

from . import _kernels
from .errors import BudgetExhausted, Infeasible, TooLarge, ZeroWeightState
from .exact import enumerate_stratum, find_even_orientation, stratum_states
from .graph import CompiledGraph, Graph, compile_graph, state_weights, violations

CHUNK = 1 << 16
PORT_PAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


@dataclass
class ChainState:
    bits: np.ndarray
    k: int
    weight: float

    def defects(self, g: Graph) -> tuple[int, ...]:
        cg = compile_graph(g)
        ends = cg.link_ends
        return tuple(int(l) for l in np.nonzero(self.bits[ends[:, 0]] == self.bits[ends[:, 1]])[0])

    def key(self) -> bytes:
        return self.bits.tobytes()

    def copy(self) -> "ChainState":
        return ChainState(self.bits.copy(), self.k, self.weight)


@dataclass(frozen=True)
class Move:
    kind: str  # create | merge | shift | flip
    node: int
    ports: tuple[int, int]


@dataclass(frozen=True, eq=False)
class Proposals:
    n_slots: int                # M
    prop_pair: np.ndarray       # [M] pair id or -1 (hold)
    pair_slots: np.ndarray      # [P, 2]
    pair_row: np.ndarray        # [P] deg4 row or -1
    pair_mask: np.ndarray       # [P] xor mask on the local pattern
    pair_node: np.ndarray       # [P]
    pair_ports: np.ndarray      # [P, 2]


@functools.lru_cache(maxsize=256)
def proposals(cg: CompiledGraph) -> Proposals:
    prop, slots, rows, masks, nodes, ports = [], [], [], [], [], []
    for i, node in enumerate(cg.graph.nodes):
        base = cg.slot_offset[i]
        if node.degree == 4:
            pairs, n_slot = PORT_PAIRS, 12
            row = int(cg.node_row[i])
        else:
            pairs, n_slot = ((0, 1),), 2
            row = -1
        for j in range(n_slot):
            if j < len(pairs):
                a, b = pairs[j]
                prop.append(len(slots))
                slots.append((base + a, base + b))
                rows.append(row)
                masks.append((1 << (3 - a)) | (1 << (3 - b)) if row >= 0 else 0)
                nodes.append(i)
                ports.append((a, b))
            else:
                prop.append(-1)
    return Proposals(
        n_slots=len(prop),
        prop_pair=np.array(prop, dtype=np.int64),
        pair_slots=np.array(slots, dtype=np.int64).reshape(-1, 2),
        pair_row=np.array(rows, dtype=np.int64),
        pair_mask=np.array(masks, dtype=np.int64),
        pair_node=np.array(nodes, dtype=np.int64),
        pair_ports=np.array(ports, dtype=np.int64).reshape(-1, 2),
    )


def _compiled_closed(g: Graph) -> CompiledGraph:
    if not g.closed:
        raise ValueError("the chain runs on closed graphs only")
    return compile_graph(g)


def make_state(g: Graph, bits: np.ndarray) -> ChainState:
    cg = _compiled_closed(g)
    bits = np.array(bits, dtype=np.uint8)
    k = int(violations(cg, bits)[0])
    if k not in (0, 2):
        raise ValueError(f"state has {k} violated links; the chain lives on 0 or 2")
    return ChainState(bits, k, float(state_weights(cg, bits)[0]))


def initial_state(g: Graph) -> ChainState:
    """Canonical even orientation (from the parity system) as a chain state."""
    bits = find_even_orientation(g)
    if bits is None:
        raise Infeasible("the instance has no even orientation")
    s = make_state(g, bits)
    if s.weight > 0:
        return s
    # the parity solution can hit a zero weight when some parameter is 0
    cg = compile_graph(g)
    try:
        for blk in enumerate_stratum(g, 0, cap=1 << 22):
            w = state_weights(cg, blk)
            hit = np.nonzero(w > 0)[0]
            if len(hit):
                return ChainState(blk[hit[0]].copy(), 0, float(w[hit[0]]))
    except TooLarge:
        pass
    raise ZeroWeightState("no positive-weight even orientation found for the start state")


def default_burnin(g: Graph) -> int:
    """``M * |links|^2`` steps (``12 n |links|^2`` without degree-2 nodes)."""
    cg = compile_graph(g)
    return proposals(cg).n_slots * max(cg.n_links, 1) ** 2


def default_batch(g: Graph) -> int:
    return proposals(compile_graph(g)).n_slots


# ---------------------------------------------------------------------------
# explicit neighbourhoods (used by the exact kernel construction and tests)


def _apply(cg: CompiledGraph, props: Proposals, s: ChainState, p: int):
    """Target of pair ``p`` from ``s``: (bits, k, weight ratio) or None."""
    sa, sb = props.pair_slots[p]
    bits = s.bits
    dk = 0
    if cg.slot_link[sa] != cg.slot_link[sb]:
        for x in (sa, sb):
            dk += -1 if bits[x] == bits[cg.slot_partner[x]] else 1
    nk = s.k + dk
    if nk > 2:
        return None
    new = bits.copy()
    new[sa] ^= 1
    new[sb] ^= 1
    r = props.pair_row[p]
    ratio = 1.0
    if r >= 0:
        sl = cg.deg4_slots[r]
        old = int(bits[sl[0]]) << 3 | int(bits[sl[1]]) << 2 | int(bits[sl[2]]) << 1 | int(bits[sl[3]])
        ratio = cg.deg4_wtab[r, old ^ props.pair_mask[p]] / cg.deg4_wtab[r, old]
    return new, nk, ratio


def _move_kind(k_from: int, k_to: int) -> str:
    if k_from == 0 and k_to == 2:
        return "create"
    if k_from == 2 and k_to == 0:
        return "merge"
    if k_from == 2:
        return "shift"
    return "flip"  # reversing a self-loop keeps the stratum


def neighbors(g: Graph, s: ChainState) -> list[tuple[ChainState, Move]]:
    """All states one move away, in proposal order."""
    cg = _compiled_closed(g)
    props = proposals(cg)
    out = []
    for p in range(len(props.pair_slots)):
        res = _apply(cg, props, s, p)
        if res is None:
            continue
        new, nk, ratio = res
        move = Move(_move_kind(s.k, nk), int(props.pair_node[p]), tuple(int(x) for x in props.pair_ports[p]))
        out.append((ChainState(new, nk, s.weight * ratio), move))
    return out


# ---------------------------------------------------------------------------
# running the chain


@dataclass
class Trace:
    steps: np.ndarray
    k: np.ndarray
    weight: np.ndarray
    states: Optional[np.ndarray] = None

    def hashes(self) -> list[str]:
        if self.states is None:
            return []
        return [hashlib.blake2b(row.tobytes(), digest_size=8).hexdigest() for row in self.states]

    def to_csv(self, path) -> None:
        hashes = self.hashes()
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("step,stratum,weight" + (",state_hash" if hashes else "") + "\n")
            for i in range(len(self.steps)):
                row = f"{int(self.steps[i])},{int(self.k[i])},{float(self.weight[i])!r}"
                if hashes:
                    row += f",{hashes[i]}"
                fh.write(row + "\n")


@dataclass
class ChainRun:
    state: ChainState
    accepted: int
    trace: Optional[Trace] = None
    records: Optional[np.ndarray] = None
    steps: int = 0


class _Runner:
    """Drives the kernel in chunks; owns the random stream consumption."""

    def __init__(self, g: Graph, state: ChainState, rng: np.random.Generator, backend: Optional[str] = None):
        self.g = g
        self.cg = _compiled_closed(g)
        self.props = proposals(self.cg)
        if state.weight <= 0:
            raise ZeroWeightState("cannot run the chain from a zero-weight state")
        self.bits = state.bits.copy()
        self.ctr = np.zeros(5, dtype=np.int64)
        self.ctr[_kernels.K] = state.k
        self.wt = np.array([state.weight], dtype=np.float64)
        self.rng = rng
        self.step = 0
        backend = backend or _kernels.BACKEND
        self.kernel = _kernels.chain_steps if backend == "numba" else _kernels.chain_steps_py
        self._empty_out = np.zeros((0, 0), dtype=np.uint8)
        self._empty_slots = np.zeros(0, dtype=np.int64)

    def state(self) -> ChainState:
        return ChainState(self.bits.copy(), int(self.ctr[_kernels.K]), float(self.wt[0]))

    def _refresh_weight(self):
        self.wt[0] = state_weights(self.cg, self.bits)[0]

    def advance(self, steps: int, stride: int = 0, rec_slots=None, out=None,
                trace_every: int = 0, trace_k=None, trace_w=None, trace_bits=None,
                stop_when_full: bool = False):
        rec_slots = self._empty_slots if rec_slots is None else rec_slots
        out = self._empty_out if out is None else out
        if trace_k is None:
            trace_k = np.zeros(0, dtype=np.int64)
            trace_w = np.zeros(0, dtype=np.float64)
        if trace_bits is None:
            trace_bits = self._empty_out
        done = 0
        while done < steps:
            n = min(CHUNK, steps - done)
            us = self.rng.random(n)
            self.kernel(
                self.bits, self.ctr, self.wt, us,
                self.props.prop_pair, self.props.pair_slots, self.props.pair_row, self.props.pair_mask,
                self.cg.deg4_slots, self.cg.deg4_wtab, self.cg.slot_link, self.cg.slot_partner,
                stride, rec_slots, out, trace_every, trace_k, trace_w, trace_bits, self.step,
            )
            done += n
            self.step += n
            self._refresh_weight()
            if stop_when_full and self.ctr[_kernels.N_OUT] >= out.shape[0]:
                break
        return done


def run_chain(
    g: Graph,
    steps: int,
    rng: np.random.Generator,
    init: Optional[ChainState] = None,
    trace_every: int = 0,
    trace_states: bool = False,
    backend: Optional[str] = None,
) -> ChainRun:
    """Apply ``steps`` Metropolis steps; deterministic given the generator state."""
    if steps < 0:
        raise ValueError("steps must be >= 0")
    init = initial_state(g) if init is None else init
    runner = _Runner(g, init, rng, backend)
    trace = None
    if trace_every > 0:
        n_tr = steps // trace_every
        tk = np.zeros(n_tr, dtype=np.int64)
        tw = np.zeros(n_tr, dtype=np.float64)
        tb = np.zeros((n_tr, runner.cg.n_slots), dtype=np.uint8) if trace_states else None
        runner.advance(steps, trace_every=trace_every, trace_k=tk, trace_w=tw, trace_bits=tb)
        trace = Trace(np.arange(1, n_tr + 1) * trace_every, tk, tw, tb)
    else:
        runner.advance(steps)
    return ChainRun(runner.state(), int(runner.ctr[_kernels.ACCEPTED]), trace, steps=steps)


def metropolis_step(g: Graph, s: ChainState, rng: np.random.Generator) -> ChainState:
    return run_chain(g, 1, rng, s).state


def sample_even_many(
    g: Graph,
    rng: np.random.Generator,
    n: int,
    burnin: Optional[int] = None,
    batch: Optional[int] = None,
    rec_slots: Optional[np.ndarray] = None,
    init: Optional[ChainState] = None,
    max_steps: Optional[int] = None,
    backend: Optional[str] = None,
) -> np.ndarray:
    """Record ``n`` even orientations visited by one long chain.

    After ``burnin`` steps the state is inspected every ``batch`` steps and
    recorded whenever it is an even orientation, so the records are the
    even visits on a fixed time lattice.  Returns ``bits[rec_slots]`` per
    record (all slots by default).
    """
    init = initial_state(g) if init is None else init
    burnin = default_burnin(g) if burnin is None else burnin
    batch = default_batch(g) if batch is None else batch
    if batch < 1:
        raise ValueError("batch must be >= 1")
    runner = _Runner(g, init, rng, backend)
    runner.advance(burnin)
    rec = np.arange(runner.cg.n_slots, dtype=np.int64) if rec_slots is None else np.asarray(rec_slots, dtype=np.int64)
    out = np.zeros((n, len(rec)), dtype=np.uint8)
    if max_steps is None:
        max_steps = 10_000 * batch * max(n, 1)
    used = 0
    while runner.ctr[_kernels.N_OUT] < n:
        if used >= max_steps:
            raise BudgetExhausted(f"only {runner.ctr[_kernels.N_OUT]} of {n} even samples after {used} steps")
        want = n - int(runner.ctr[_kernels.N_OUT])
        chunk = min(max_steps - used, max(want * batch * 2, CHUNK))
        used += runner.advance(chunk, stride=batch, rec_slots=rec, out=out, stop_when_full=True)
    return out


def sample_even(
    g: Graph,
    rng: np.random.Generator,
    burnin: Optional[int] = None,
    batch: Optional[int] = None,
    max_batches: int = 10_000,
) -> np.ndarray:
    """One even orientation: burn in from the canonical start, then advance in
    ``batch``-step strides until the state has no violated link."""
    init = initial_state(g)
    burnin = default_burnin(g) if burnin is None else burnin
    batch = default_batch(g) if batch is None else batch
    runner = _Runner(g, init, rng)
    runner.advance(burnin)
    for _ in range(max_batches + 1):
        if runner.ctr[_kernels.K] == 0:
            return runner.bits.copy()
        runner.advance(batch)
    raise BudgetExhausted(f"no even orientation within {max_batches} strides")


# ---------------------------------------------------------------------------
# exact kernel on tiny instances


@dataclass
class MixingReport:
    states: np.ndarray          # [N, n_slots]
    strata: np.ndarray          # [N]
    pi: np.ndarray              # stationary distribution ∝ weight
    P: sp.csr_matrix
    row_sum_error: float
    stationarity_error: float
    balance_error: float
    min_holding: float
    connected: bool
    spectral_gap: float
    meta: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "n_states": int(len(self.pi)),
            "n_even": int(np.sum(self.strata == 0)),
            "row_sum_error": self.row_sum_error,
            "stationarity_error": self.stationarity_error,
            "balance_error": self.balance_error,
            "min_holding": self.min_holding,
            "connected": self.connected,
            "spectral_gap": self.spectral_gap,
        }


def chain_state_space(g: Graph, max_states: int = 10_000) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Positive-weight states of strata 0 and 2 with their strata and weights."""
    cg = _compiled_closed(g)
    blocks, strata = [], []
    total = 0
    for k in (0, 2):
        st = stratum_states(g, k)
        w = state_weights(cg, st) if len(st) else np.zeros(0)
        st = st[w > 0]
        total += len(st)
        if total > max_states:
            raise TooLarge(f"state space exceeds {max_states} states")
        blocks.append(st)
        strata.append(np.full(len(st), k))
    states = np.concatenate(blocks)
    weights = state_weights(cg, states) if len(states) else np.zeros(0)
    return states, np.concatenate(strata), weights


def transition_matrix(g: Graph, max_states: int = 10_000, dense_limit: int = 3000) -> MixingReport:
    """Full Metropolis kernel on the positive-weight part of the state space.

    Reports row-sum and stationarity errors, the worst detailed-balance
    violation over neighbour pairs, irreducibility, and ``1 - |lambda_2|``.
    """
    cg = _compiled_closed(g)
    props = proposals(cg)
    states, strata, weights = chain_state_space(g, max_states)
    N = len(states)
    if N == 0:
        raise Infeasible("no positive-weight states")
    index = {row.tobytes(): i for i, row in enumerate(states)}
    M = props.n_slots
    rows, cols, vals = [], [], []
    hold = np.ones(N)
    for i in range(N):
        s = ChainState(states[i], int(strata[i]), float(weights[i]))
        for p in range(len(props.pair_slots)):
            res = _apply(cg, props, s, p)
            if res is None:
                continue
            new, _, ratio = res
            if ratio <= 0:
                continue
            j = index[new.tobytes()]
            prob = min(1.0, ratio) / M
            rows.append(i)
            cols.append(j)
            vals.append(prob)
            hold[i] -= prob
    rows.extend(range(N))
    cols.extend(range(N))
    vals.extend(hold)
    P = sp.csr_matrix((vals, (rows, cols)), shape=(N, N))
    pi = weights / weights.sum()
    row_err = float(np.max(np.abs(np.asarray(P.sum(axis=1)).ravel() - 1.0)))
    stat_err = float(np.max(np.abs(P.T @ pi - pi)))
    flow = sp.diags(weights) @ P
    bal = abs(flow - flow.T)
    scale = weights.max()
    balance_err = float(bal.max() / scale) if bal.nnz else 0.0
    offdiag = P - sp.diags(P.diagonal())
    n_comp, _ = csgraph.connected_components(offdiag, directed=True, connection="strong")
    # reversible: D^1/2 P D^-1/2 is symmetric with the same spectrum
    d = np.sqrt(pi)
    S = sp.diags(d) @ P @ sp.diags(1.0 / d)
    S = (S + S.T) / 2
    if N <= dense_limit:
        ev = np.linalg.eigvalsh(S.toarray())
        ev = np.sort(np.abs(ev))[::-1]
        lam2 = ev[1] if N > 1 else 0.0
    else:
        ev = spla.eigsh(S, k=3, which="LM", return_eigenvectors=False)
        lam2 = np.sort(np.abs(ev))[::-1][1]
    return MixingReport(
        states=states, strata=strata, pi=pi, P=P,
        row_sum_error=row_err, stationarity_error=stat_err, balance_error=balance_err,
        min_holding=float(hold.min()), connected=n_comp == 1, spectral_gap=float(1.0 - lam2),
    )


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def empirical_distribution(samples: np.ndarray, states: np.ndarray) -> np.ndarray:
    """Frequencies of ``states`` rows among ``samples`` rows."""
    index = {row.tobytes(): i for i, row in enumerate(states)}
    counts = np.zeros(len(states))
    for row in samples:
        counts[index[row.tobytes()]] += 1
    return counts / max(len(samples), 1)
