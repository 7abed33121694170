"""Acceptance suite: one test per criterion, each recorded as PASS/FAIL.

Run alone with ``pytest tests/test_acceptance.py -v``; the terminal summary
lists every criterion with a short detail line.
"""

import math
import time
import warnings

import numpy as np
import pytest
import scipy.sparse as sp

from conftest import ACCEPTANCE
from eightvertex.amplifier import contraction_probe, growth_report, lambda_raw, lambda_step
from eightvertex.errors import NoNonnegativeSolution, OddEqParity
from eightvertex.exact import (
    Region,
    check_closure_sample,
    dacp_expand,
    exact_partition,
    signed_pairing_mass,
    stratum_masses,
    stratum_states,
)
from eightvertex.fpras import approximate_Z, base_case_value
from eightvertex.graph import Graph, compile_graph, cycles, k24, state_weights, validate_graph
from eightvertex.instances import planar_gadget, random_closed_graph, random_gadget, random_planar_graph
from eightvertex.mcmc import chain_state_space, empirical_distribution, sample_even_many, total_variation, transition_matrix
from eightvertex.model import Params, region_classify, solve_congestion_weights, solve_weight_function


def record(k, ok, detail):
    ACCEPTANCE[k] = (bool(ok), detail)
    assert ok, detail


def test_criterion_01_k24_formula():
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        a, b, c, d = rng.random(4) * 10
        z = exact_partition(k24((a, b, c, d)))
        want = 2 * (a * a + b * b + c * c + d * d)
        worst = max(worst, abs(z - want) / want)
    dt = time.perf_counter() - t0
    record(1, worst <= 1e-9 and dt < 1.0, f"100 tuples, max rel err {worst:.1e}, {dt:.2f}s")


def test_criterion_02_base_case():
    rng = np.random.default_rng(2)
    bad = []
    for C in range(1, 11):
        lengths = [int(x) for x in rng.integers(1, 6, size=C)]
        eq = [2 * int(rng.integers(0, m // 2 + 1)) for m in lengths]
        g = cycles(lengths, eq)
        gp = Graph(g.nodes, g.links, g.dangling, planar=True)
        for h in (g, gp):
            if not validate_graph(h).ok or base_case_value(h) != 2**C:
                bad.append(("even", C))
        odd = list(eq)
        i = int(rng.integers(C))
        odd[i] = odd[i] + 1 if odd[i] < lengths[i] else odd[i] - 1
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", OddEqParity)
            if base_case_value(cycles(lengths, odd)) != 0:
                bad.append(("odd", C))
    record(2, not bad, "C = 1..10, plain and planar, even gives 2^C, odd gives 0" + (f"; failures {bad}" if bad else ""))


def test_criterion_03_decomposition_identity():
    rng = np.random.default_rng(3)
    worst, bad_count, n_states = 0.0, 0, 0
    for _ in range(50):
        n = int(rng.integers(1, 6))
        g = random_closed_graph(n, rng, "not_F_gt", loops=bool(rng.integers(2)))
        cg = compile_graph(g)
        for s in stratum_states(g, 0):
            terms = dacp_expand(g, s)
            n_states += 1
            bad_count += len(terms) != 3**n
            w = state_weights(cg, s)[0]
            tot = sum(t.weight for t in terms)
            worst = max(worst, abs(tot - w) / max(abs(w), 1e-300))
    record(3, worst <= 1e-9 and bad_count == 0,
           f"50 graphs, {n_states} even states, max rel err {worst:.1e}, term-count mismatches {bad_count}")


def test_criterion_04_weight_solvers():
    rng = np.random.default_rng(4)
    mism, worst = 0, 0.0
    for row in rng.random((100_000, 4)):
        p = Params(*(1.0 - row))  # values in (0, 1]
        f = region_classify(p)
        try:
            w = solve_weight_function(p)
            ok = True
            worst = max(worst, float(np.max(np.abs(w.residuals(p)))))
            if min(w.values) < 0:
                mism += 1
        except NoNonnegativeSolution:
            ok = False
        mism += ok == f.F_gt
        try:
            w = solve_congestion_weights(p)
            ok = True
            worst = max(worst, float(np.max(np.abs(w.residuals(p.squared())))))
        except NoNonnegativeSolution:
            ok = False
        mism += ok != f.F_le2
    record(4, mism == 0 and worst <= 1e-9, f"1e5 tuples, {mism} iff mismatches, max residual {worst:.1e}")


def test_criterion_05_detailed_balance():
    rng = np.random.default_rng(5)
    rows = []
    ok = True
    for n in (2, 3, 4, 5):
        g = random_closed_graph(n, rng, "positive", loops=True)
        rep = transition_matrix(g)
        _, _, w = chain_state_space(g)
        flow = sp.diags(w) @ rep.P
        bal = float(abs(flow - flow.T).max())
        row = float(np.max(np.abs(np.asarray(rep.P.sum(axis=1)).ravel() - 1)))
        stat = float(np.max(np.abs(rep.P.T @ rep.pi - rep.pi)))
        ok &= len(w) <= 10_000 and bal <= 1e-12 and row <= 1e-12 and stat <= 1e-9
        rows.append(f"|Omega|={len(w)}")
    record(5, ok, f"{', '.join(rows)}; balance, row sums <= 1e-12, stationarity <= 1e-9")


def test_criterion_06_sampler_accuracy():
    t0 = time.perf_counter()
    tvs = []
    for n, seed in ((2, 0), (3, 1), (4, 2)):
        g = random_closed_graph(n, np.random.default_rng(seed), "positive", loops=True)
        states, strata, w = chain_state_space(g)
        assert len(states) <= 1000
        even = states[strata == 0]
        pi = w[strata == 0] / w[strata == 0].sum()
        samples = sample_even_many(g, np.random.default_rng(100 + seed), 100_000)
        tvs.append(total_variation(empirical_distribution(samples, even), pi))
    dt = time.perf_counter() - t0
    record(6, max(tvs) <= 0.05 and dt < 60, f"TV {', '.join(f'{t:.4f}' for t in tvs)} at 1e5 samples, {dt:.1f}s")


def test_criterion_07_ratio_and_log_concavity():
    rng = np.random.default_rng(7)
    bad = 0
    for _ in range(50):
        g = random_closed_graph(int(rng.integers(1, 6)), rng, "general", loops=bool(rng.integers(2)))
        m = stratum_masses(g)
        bad += not (m.z0 > 0)
        bad += m.z2 > math.comb(len(g.links), 2) * m.z0 * (1 + 1e-12)
        bad += m.z4 * m.z0 > m.z2**2 * (1 + 1e-12)
    record(7, bad == 0, f"50 graphs in A_le&B_le&C_le, {bad} violations")


def test_criterion_08_closure_fuzzing():
    rng = np.random.default_rng(8)
    fails = {}
    for region, src, count in ((Region.GENERAL, "general", 1000), (Region.NOT_F_GT, "not_F_gt", 1000)):
        fails[region.value] = sum(
            not check_closure_sample(region, random_gadget(int(rng.integers(2, 6)), rng, src)).passed
            for _ in range(count)
        )
    fails[Region.PLANAR.value] = sum(
        not check_closure_sample(Region.PLANAR, planar_gadget(int(rng.integers(1, 6)), rng, "planar")).passed
        for _ in range(200)
    )
    record(8, not any(fails.values()), f"1000 + 1000 + 200 constructions, failures {fails}")


def test_criterion_09_pairing_marginals():
    rng = np.random.default_rng(9)
    bad_sum = bad_mono = 0
    n_checks = 0
    for _ in range(60):
        g = random_closed_graph(int(rng.integers(1, 5)), rng, "general", loops=bool(rng.integers(2)))
        if any(region_classify(g.nodes[i].params).F_gt for i in g.deg4_nodes):
            continue
        z = exact_partition(g)
        for v in g.deg4_nodes:
            m = signed_pairing_mass(g, v)
            n_checks += 1
            bad_sum += not math.isclose(m.sum(), z, rel_tol=1e-9)
            bad_mono += not (m[0] >= m[1] - 1e-12 * z and m[2] >= m[3] - 1e-12 * z and m[4] >= m[5] - 1e-12 * z)
    for _ in range(60):
        g = random_planar_graph(int(rng.integers(1, 5)), rng, "planar")
        z = exact_partition(g)
        for v in g.deg4_nodes:
            m = signed_pairing_mass(g, v)
            n_checks += 1
            bad_sum += not math.isclose(m.sum(), z, rel_tol=1e-9)
            bad_mono += not (m[0] >= m[1] - 1e-12 * z and m[2] >= m[3] - 1e-12 * z and m[4] <= m[5] + 1e-12 * z)
    record(9, bad_sum == 0 and bad_mono == 0,
           f"{n_checks} node checks, sum failures {bad_sum}, monotonicity failures {bad_mono}")


FPRAS_GENERAL = [2, 3, 4, 5, 6, 6, 5, 4, 6, 3]
FPRAS_PLANAR = [2, 3, 4, 5, 6, 2, 3, 4, 5, 6]


@pytest.mark.slow
def test_criterion_10_end_to_end_fpras():
    rng = np.random.default_rng(2024)
    inst = []
    for i, n in enumerate(FPRAS_GENERAL):
        params = (1, 1, 1, 0.5) if i % 2 == 0 else "fpras_general"
        inst.append(("general", random_closed_graph(n, rng, params, loops=i % 3 == 0)))
    for i, n in enumerate(FPRAS_PLANAR):
        params = (1, 1, 1.5, 1) if i % 2 == 0 else "fpras_planar"
        inst.append(("planar", random_planar_graph(n, rng, params)))
    t0 = time.perf_counter()
    hits = []
    for mode, g in inst:
        z = exact_partition(g)
        ok = 0
        for seed in range(20):
            est = approximate_Z(g, 0.1, np.random.default_rng(seed), mode=mode)
            ok += abs(est.z_hat - z) <= 0.1 * z
        hits.append(ok)
    dt = time.perf_counter() - t0
    record(10, min(hits) >= 15 and dt < 600,
           f"20 instances, within-10% counts min {min(hits)}/20 (all {hits}), {dt:.0f}s")


def test_criterion_11_amplifier():
    checks = {}
    checks["fixed point"] = lambda_raw((1, 0, 0, 0)) == (1.0, 0.0, 0.0, 0.0)
    checks["all ones"] = lambda_raw((1, 1, 1, 1)) == (64.0, 64.0, 64.0, 64.0)
    rng = np.random.default_rng(11)
    bad = 0
    for _ in range(10_000):
        b, c, d = rng.random(3)
        d = max(d, 1e-6)
        a = (b + c + d) * (1 + rng.random() * 3) + 1e-9
        r0 = a / (b + c + d)
        bad += not lambda_step((a, b, c, d)).log_ratio > math.log(r0)
    checks["r1 > r0 on 1e4 tuples"] = bad == 0
    rep = growth_report((2, 1, 0.5, 0.4))
    checks["growth doubling"] = rep.verified and rep.doubling_steps == 5
    n, path = contraction_probe((2, 1, 0.5, 0.4), 1e-6)
    checks["contraction"] = all(y < x for x, y in zip(path, path[1:])) and path[-1] < 1e-6
    failed = [k for k, v in checks.items() if not v]
    record(11, not failed, f"j*={rep.j_star}, contraction N={n}" + (f"; failed {failed}" if failed else ""))
