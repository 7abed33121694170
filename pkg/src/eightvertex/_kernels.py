"""Inner loop of the directed-loop chain.

The kernel is written once as plain Python over numpy arrays.  When numba
is importable and ``EIGHTVERTEX_NO_NUMBA`` is unset (or ``0``), it is
compiled with ``@njit``; otherwise the interpreted version runs.  Random
numbers are drawn by the caller, so both paths consume identical streams
and produce identical trajectories.  One uniform ``u`` drives each step:
the proposal slot is ``floor(u M)`` and the acceptance variate is the
fractional part of ``u M``, which is uniform and independent of the slot.
"""

from __future__ import annotations

import os


def _numba_requested() -> bool:
    return os.environ.get("EIGHTVERTEX_NO_NUMBA", "").strip().lower() in ("", "0", "false", "no")


try:
    if not _numba_requested():
        raise ImportError
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised via the env flag
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]):
            return args[0]
        return lambda f: f


BACKEND = "numba" if HAS_NUMBA else "numpy"

# ctr layout
K, SINCE, N_OUT, ACCEPTED, N_TRACE = range(5)


def _chain_steps(
    bits, ctr, wt, us,
    prop_pair, pair_slots, pair_row, pair_mask,
    deg4_slots, wtab, slot_link, slot_partner,
    stride, rec_slots, out,
    trace_every, trace_k, trace_w, trace_bits, step0,
):
    """Advance the chain by ``len(us)`` steps.

    ``stride > 0`` records ``bits[rec_slots]`` into ``out`` at every
    ``stride``-th step at which the state is an even orientation.
    ``trace_every > 0`` records stratum, weight and (if ``trace_bits`` has
    rows) the full state every ``trace_every`` steps.
    """
    k = ctr[K]
    since = ctr[SINCE]
    n_out = ctr[N_OUT]
    accepted = ctr[ACCEPTED]
    n_tr = ctr[N_TRACE]
    w = wt[0]
    n_rec = rec_slots.shape[0]
    n_slots = bits.shape[0]
    n_prop = prop_pair.shape[0]
    for i in range(us.shape[0]):
        x = us[i] * n_prop
        slot = int(x)
        if slot >= n_prop:
            slot = n_prop - 1
        p = prop_pair[slot]
        if p >= 0:
            sa = pair_slots[p, 0]
            sb = pair_slots[p, 1]
            dk = 0
            if slot_link[sa] != slot_link[sb]:
                dk += -1 if bits[sa] == bits[slot_partner[sa]] else 1
                dk += -1 if bits[sb] == bits[slot_partner[sb]] else 1
            nk = k + dk
            if nk <= 2:
                r = pair_row[p]
                ratio = 1.0
                if r >= 0:
                    old = (bits[deg4_slots[r, 0]] << 3) | (bits[deg4_slots[r, 1]] << 2) \
                        | (bits[deg4_slots[r, 2]] << 1) | bits[deg4_slots[r, 3]]
                    ratio = wtab[r, old ^ pair_mask[p]] / wtab[r, old]
                if x - slot < ratio:
                    bits[sa] ^= 1
                    bits[sb] ^= 1
                    k = nk
                    w *= ratio
                    accepted += 1
        if stride > 0:
            since += 1
            if since >= stride:
                since = 0
                if k == 0 and n_out < out.shape[0]:
                    for j in range(n_rec):
                        out[n_out, j] = bits[rec_slots[j]]
                    n_out += 1
        if trace_every > 0 and (step0 + i + 1) % trace_every == 0 and n_tr < trace_k.shape[0]:
            trace_k[n_tr] = k
            trace_w[n_tr] = w
            if trace_bits.shape[0] > 0:
                for j in range(n_slots):
                    trace_bits[n_tr, j] = bits[j]
            n_tr += 1
    ctr[K] = k
    ctr[SINCE] = since
    ctr[N_OUT] = n_out
    ctr[ACCEPTED] = accepted
    ctr[N_TRACE] = n_tr
    wt[0] = w


chain_steps = njit(cache=True, nogil=True)(_chain_steps)
chain_steps_py = _chain_steps
