import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import brute_compose, brute_force, brute_masses
from eightvertex.errors import RegionError, TooLarge
from eightvertex.exact import (
    Region,
    check_closure_sample,
    compose_construction,
    composed_signature,
    cut_open,
    dacp_expand,
    enumerate_stratum,
    exact_partition,
    find_even_orientation,
    has_even_orientation,
    signed_pairing_mass,
    stratum_mass,
    stratum_masses,
    stratum_states,
)
from eightvertex.graph import compile_graph, cycles, k24, make_graph, single_node_gadget, state_weights
from eightvertex.instances import planar_gadget, random_closed_graph, random_gadget, sample_params
from eightvertex.model import Params, region_classify, solve_weight_function


def rel_close(x, y, tol=1e-9):
    return abs(x - y) <= tol * max(1.0, abs(x), abs(y))


# -- oracle agreement -----------------------------------------------------


@given(st.integers(1, 4), st.integers(0, 2**32 - 1), st.booleans())
@settings(max_examples=40, deadline=None)
def test_strata_match_brute_force(n, seed, loops):
    rng = np.random.default_rng(seed)
    g = random_closed_graph(n, rng, loops=loops)
    oracle = brute_force(g)
    for k in (0, 2, 4):
        got = stratum_states(g, k)
        want = oracle.get(k, [])
        assert len(got) == len(want)
        assert {r.tobytes() for r in got} == {b.tobytes() for b, _ in want}
        assert rel_close(stratum_mass(g, k), sum(w for _, w in want))


def test_strata_with_degree_two_nodes_match_brute_force():
    g = make_graph(
        [("u", "deg4", (1, 2, 3, 4)), ("m", "neq2"), ("q", "eq2"), ("r", "eq2")],
        [(("u", 1), ("m", 1)), (("m", 2), ("u", 2)), (("u", 3), ("q", 1)),
         (("q", 2), ("r", 1)), (("r", 2), ("u", 4))],
    )
    oracle = brute_masses(g)
    for k in (0, 2, 4):
        assert rel_close(stratum_mass(g, k), oracle.get(k, 0.0))


def test_states_are_unique_and_valid(rng):
    g = random_closed_graph(4, rng)
    cg = compile_graph(g)
    for k in (0, 2):
        rows = stratum_states(g, k)
        assert len({r.tobytes() for r in rows}) == len(rows)
        viol = np.sum(rows[:, cg.link_ends[:, 0]] == rows[:, cg.link_ends[:, 1]], axis=1)
        assert np.all(viol == k)


# -- examples -----------------------------------------------------------------


def test_k24_has_eight_even_orientations():
    assert len(list(enumerate_stratum(k24(), 0))) == 8


@pytest.mark.parametrize("m", [1, 2, 5])
def test_cycle_has_two_orientations(m):
    assert len(stratum_states(cycles([m]), 0)) == 2


@pytest.mark.parametrize("p", [(1, 1, 1, 1), (2, 3, 5, 7), (0.3, 0, 1.2, 0.01)])
def test_k24_formula(p):
    a, b, c, d = p
    assert rel_close(exact_partition(k24(p)), 2 * (a * a + b * b + c * c + d * d))


def test_three_cycles():
    assert exact_partition(cycles([3, 4, 1])) == 8


def test_k24_stratum_two_by_brute_force():
    g = k24((2, 3, 5, 7))
    assert rel_close(stratum_mass(g, 2), brute_masses(g)[2])


def test_degenerate_params_short_circuit():
    assert exact_partition(k24((0, 0, 0, 0))) == 0.0


def test_cap_raises_too_large():
    with pytest.raises(TooLarge):
        exact_partition(k24(), cap=4)


def test_infeasible_parity():
    g = cycles([3], [1])
    assert not has_even_orientation(g)
    assert find_even_orientation(g) is None
    assert exact_partition(g) == 0.0


def test_ratio_property():
    m = stratum_masses(k24())
    assert m.ratio == m.z2 / m.z0


# -- 4-ary constructions ------------------------------------------------------


def test_identity_gadget():
    assert compose_construction(single_node_gadget((1, 2, 3, 4))) == Params(1, 2, 3, 4)


def test_two_node_gadget_matches_brute_force():
    g = make_graph(
        [("u", "deg4", (1, 2, 3, 4)), ("v", "deg4", (0.5, 1.5, 0.7, 2))],
        [(("u", 3), ("v", 1)), (("u", 4), ("v", 2))],
        [(("u", 1), "e1"), (("u", 2), "e2"), (("v", 3), "e3"), (("v", 4), "e4")],
    )
    assert np.allclose(composed_signature(g), brute_compose(g))


@given(st.integers(2, 4), st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_random_gadgets_match_brute_force(n, seed):
    g = random_gadget(n, np.random.default_rng(seed))
    sig = composed_signature(g)
    assert np.allclose(sig, brute_compose(g))
    odd = [i for i in range(16) if bin(i).count("1") % 2]
    assert np.all(sig[odd] == 0)
    assert np.allclose(sig, sig[::-1])


@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_cut_open_identities(n, seed):
    rng = np.random.default_rng(seed)
    g = random_closed_graph(n, rng, loops=True)
    e, f = rng.choice(len(g.links), size=2, replace=False)
    a, b, c, d = compose_construction(cut_open(g, int(e), int(f))).as_tuple()
    both = [bits for bits, _ in brute_force(g).get(2, []) if bits[g_links_end(g, e)[0]] == bits[g_links_end(g, e)[1]]
            and bits[g_links_end(g, f)[0]] == bits[g_links_end(g, f)[1]]]
    cg = compile_graph(g)
    z_ef = float(state_weights(cg, np.array(both)).sum()) if both else 0.0
    assert rel_close(z_ef, 2 * (a + d))
    assert rel_close(exact_partition(g), 2 * (b + c))


def g_links_end(g, k):
    return compile_graph(g).link_ends[int(k)]


# -- decomposition ------------------------------------------------------------


def test_dacp_k24():
    g = k24((2, 3, 5, 7))
    cg = compile_graph(g)
    for s in stratum_states(g, 0):
        terms = dacp_expand(g, s)
        assert len(terms) == 9
        assert rel_close(sum(t.weight for t in terms), state_weights(cg, s)[0])


def test_dacp_cycle_only():
    terms = dacp_expand(cycles([4]), stratum_states(cycles([4]), 0)[0])
    assert len(terms) == 1 and terms[0].weight == 1.0


def test_dacp_signs_even_on_circuits(rng):
    g = random_closed_graph(3, rng, "not_F_gt")
    for s in stratum_states(g, 0):
        terms = dacp_expand(g, s)
        assert len(terms) == 27
        assert all(t.even_minus for t in terms)


def test_dacp_cap():
    g = random_closed_graph(3, np.random.default_rng(0), "not_F_gt")
    with pytest.raises(TooLarge):
        dacp_expand(g, stratum_states(g, 0)[0], cap=10)


def test_pairing_mass_sums_to_z(rng):
    for _ in range(10):
        g = random_closed_graph(int(rng.integers(1, 5)), rng, "not_F_gt", loops=True)
        for v in g.deg4_nodes:
            assert rel_close(signed_pairing_mass(g, v).sum(), exact_partition(g))


def test_pairing_mass_k24_uniform():
    assert np.allclose(signed_pairing_mass(k24(), 0), 4 / 3)


def test_pairing_mass_matches_dacp_sum():
    g = random_closed_graph(3, np.random.default_rng(4), "not_F_gt")
    want = np.zeros(6)
    for s in stratum_states(g, 0):
        for t in dacp_expand(g, s):
            want[t.pairings[0].index] += t.weight
    assert np.allclose(signed_pairing_mass(g, 0), want)


def test_pairing_mass_monotone_general(rng):
    for _ in range(10):
        g = random_closed_graph(int(rng.integers(1, 5)), rng, "general", loops=True)
        z = signed_pairing_mass(g, 0)
        assert z[0] >= z[1] - 1e-12 and z[2] >= z[3] - 1e-12 and z[4] >= z[5] - 1e-12


# -- closure and bounds -------------------------------------------------------


@pytest.mark.parametrize("region, source", [(Region.GENERAL, "general"), (Region.NOT_F_GT, "not_F_gt")])
def test_closure_fuzz_small(rng, region, source):
    for _ in range(100):
        g = random_gadget(int(rng.integers(3, 6)), rng, source)
        assert check_closure_sample(region, g).passed


def test_planar_closure_fuzz_small(rng):
    for _ in range(50):
        g = planar_gadget(int(rng.integers(1, 6)), rng, "planar")
        assert check_closure_sample(Region.PLANAR, g).passed


def test_closure_rejects_bad_inputs():
    with pytest.raises(RegionError):
        check_closure_sample(Region.GENERAL, single_node_gadget((4, 1, 1, 1)))
    g = single_node_gadget((1, 1, 1, 1))
    g = type(g)(g.nodes, g.links, g.dangling, planar=False)
    with pytest.raises(RegionError):
        check_closure_sample(Region.PLANAR, g)


def test_ratio_and_log_concavity(rng):
    for _ in range(15):
        g = random_closed_graph(int(rng.integers(1, 5)), rng, "general", loops=True)
        m = stratum_masses(g)
        assert m.z0 > 0
        assert m.ratio <= math.comb(len(g.links), 2) * (1 + 1e-12)
        assert m.z4 * m.z0 <= m.z2**2 * (1 + 1e-12)


def test_region_sampler(rng):
    for name in ("general", "not_F_gt", "planar", "fpras_general", "fpras_planar"):
        p = sample_params(name, rng)
        f = region_classify(p)
        if name == "fpras_planar":
            assert f.planar
        if name == "general":
            assert f.A_le and f.B_le and f.C_le
    solve_weight_function(sample_params("planar", rng))
