"""Shared fixtures and independent brute-force oracles."""

from __future__ import annotations

import itertools

import numpy as np
import pytest

from eightvertex.graph import Graph, NodeKind, compile_graph
from eightvertex.model import local_weight

# criterion number -> (passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def all_bit_vectors(n: int) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.int64)
    return ((idx[:, None] >> np.arange(n)[None, :]) & 1).astype(np.uint8)


def brute_force(g: Graph) -> dict[int, list[tuple[np.ndarray, float]]]:
    """Every slot assignment checked literally, grouped by violation count.

    Independent of the parity-system enumerator: loops over all ``2^slots``
    vectors and applies the node rules and pattern weights one by one.
    """
    cg = compile_graph(g)
    out: dict[int, list] = {}
    for bits in all_bit_vectors(cg.n_slots):
        ok = True
        weight = 1.0
        for i, node in enumerate(g.nodes):
            s = cg.slot_offset[i]
            if node.kind is NodeKind.DEG4:
                pat = tuple(int(b) for b in bits[s:s + 4])
                if sum(pat) % 2:
                    ok = False
                    break
                weight *= local_weight(node.params, pat)
            else:
                same = bits[s] == bits[s + 1]
                if same != (node.kind is NodeKind.EQ2):
                    ok = False
                    break
        if not ok:
            continue
        k = sum(int(bits[a] == bits[b]) for a, b in cg.link_ends)
        out.setdefault(k, []).append((bits.copy(), weight))
    return out


def brute_masses(g: Graph) -> dict[int, float]:
    return {k: sum(w for _, w in v) for k, v in brute_force(g).items()}


def brute_compose(g: Graph) -> np.ndarray:
    """16 external-pattern sums of a gadget by literal enumeration."""
    cg = compile_graph(g)
    sig = np.zeros(16)
    ext = cg.dangling_slots
    for bits in all_bit_vectors(cg.n_slots):
        w = 1.0
        for i, node in enumerate(g.nodes):
            s = cg.slot_offset[i]
            if node.kind is NodeKind.DEG4:
                w *= local_weight(node.params, tuple(int(b) for b in bits[s:s + 4]))
            elif (bits[s] == bits[s + 1]) != (node.kind is NodeKind.EQ2):
                w = 0.0
            if w == 0.0:
                break
        if w == 0.0 or any(bits[a] == bits[b] for a, b in cg.link_ends):
            continue
        pat = int(bits[ext[0]]) << 3 | int(bits[ext[1]]) << 2 | int(bits[ext[2]]) << 1 | int(bits[ext[3]])
        sig[pat] += w
    return sig


def pairs_of(n: int):
    return itertools.combinations(range(n), 2)
