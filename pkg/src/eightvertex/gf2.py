"""Affine systems over GF(2) with a fixed coefficient matrix.

Orientation constraints are parity conditions, so the valid assignments of
an instance (for a fixed set of violated links) form an affine subspace of
the link-bit vectors.  The matrix depends only on the graph; the
right-hand side depends on which links are designated as violated, so the
elimination is done once and replayed for every right-hand side.
"""

from __future__ import annotations

import numpy as np


class AffineSystem:
    def __init__(self, A: np.ndarray):
        A = np.asarray(A, dtype=np.uint8) & 1
        m, n = A.shape
        self.n_rows, self.n_vars = m, n
        R = A.copy()
        T = np.eye(m, dtype=np.uint8)
        pivots = []
        row = 0
        for col in range(n):
            if row == m:
                break
            hits = np.nonzero(R[row:, col])[0]
            if len(hits) == 0:
                continue
            r = row + hits[0]
            if r != row:
                R[[row, r]] = R[[r, row]]
                T[[row, r]] = T[[r, row]]
            others = np.nonzero(R[:, col])[0]
            others = others[others != row]
            R[others] ^= R[row]
            T[others] ^= T[row]
            pivots.append(col)
            row += 1
        self.rank = row
        self._R = R
        self._T = T
        self.pivots = np.array(pivots, dtype=np.int64)
        free = np.setdiff1d(np.arange(n), self.pivots)
        self.free = free
        basis = np.zeros((len(free), n), dtype=np.uint8)
        for i, f in enumerate(free):
            basis[i, f] = 1
            if self.rank:
                basis[i, self.pivots] = R[: self.rank, f]
        self.basis = basis

    @property
    def nullity(self) -> int:
        return len(self.free)

    def particular(self, b: np.ndarray) -> np.ndarray | None:
        """One solution of ``A x = b`` or None when inconsistent."""
        tb = (self._T.astype(np.int64) @ (np.asarray(b, dtype=np.int64) & 1)) & 1
        if np.any(tb[self.rank:]):
            return None
        x = np.zeros(self.n_vars, dtype=np.uint8)
        x[self.pivots] = tb[: self.rank]
        return x

    def iter_solutions(self, x0: np.ndarray, block: int = 1 << 15):
        """Yield all solutions ``x0 + span(basis)`` in blocks of rows."""
        r = self.nullity
        total = 1 << r
        basis = self.basis.astype(np.int64)
        for start in range(0, total, block):
            idx = np.arange(start, min(total, start + block), dtype=np.int64)
            coeff = (idx[:, None] >> np.arange(r, dtype=np.int64)[None, :]) & 1
            yield ((coeff @ basis) & 1).astype(np.uint8) ^ x0[None, :]
