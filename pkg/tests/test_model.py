import itertools
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from eightvertex.errors import InvalidPattern, NoNonnegativeSolution
from eightvertex.model import (
    EVEN_PATTERNS,
    SIGN_TABLE,
    SIGNED_PAIRINGS,
    Pairing,
    Params,
    SignedPairing,
    compatible_pairings,
    local_weight,
    pair_differences,
    pairing_sign,
    region_classify,
    solve_congestion_weights,
    solve_weight_function,
)

weights = st.floats(min_value=0.0, max_value=10.0, allow_nan=False, allow_infinity=False)
positive = st.floats(min_value=1e-3, max_value=10.0, allow_nan=False, allow_infinity=False)


def two_positive(t):
    return sum(x > 0 for x in t) >= 2


tuples = st.tuples(weights, weights, weights, weights).filter(two_positive)


def off_boundary(t, tol=1e-9):
    """Keep away from ``x == sum(others)``, where rounding decides membership."""
    total = sum(t)
    return all(abs(2 * x - total) > tol * max(total, 1.0) for x in t)


# -- Params ---------------------------------------------------------------


def test_params_rejects_negative_and_nan():
    with pytest.raises(ValueError):
        Params(1, -1, 0, 0)
    with pytest.raises(ValueError):
        Params(1, math.nan, 0, 0)


def test_params_parse_and_degenerate():
    assert Params.parse("1,2, 3 4").as_tuple() == (1.0, 2.0, 3.0, 4.0)
    assert Params(0, 0, 0, 0).degenerate
    assert not Params(0, 0, 0, 1).degenerate
    with pytest.raises(ValueError):
        Params.parse("1,2,3")


# -- region_classify ------------------------------------------------------


def test_classify_all_ones():
    f = region_classify(Params(1, 1, 1, 1))
    assert f.F_le2 and f.A_le and f.B_le and f.C_le and f.C_ge and f.C_eq
    assert not f.F_gt


def test_classify_dominant():
    assert region_classify(Params(4, 1, 1, 1)).F_gt


def test_classify_2110():
    f = region_classify(Params(2, 1, 1, 0))
    assert f.A_le and f.B_le and f.C_le
    assert not f.F_le2 and not f.F_gt


def test_f_gt_needs_two_positive_entries():
    assert not region_classify(Params(1, 0, 0, 0)).F_gt
    assert region_classify(Params(3, 1, 0, 0)).F_gt


@given(tuples)
def test_region_flag_invariants(t):
    f = region_classify(Params(*t))
    assert f.C_eq == (f.C_le and f.C_ge)
    if f.F_le2:
        assert not f.F_gt


# -- patterns and pairings ------------------------------------------------


@pytest.mark.parametrize(
    "pat, cls",
    [("0011", "a"), ("1100", "a"), ("0110", "b"), ("1001", "b"),
     ("0101", "c"), ("1010", "c"), ("0000", "d"), ("1111", "d")],
)
def test_local_weight_map(pat, cls):
    p = Params(2, 3, 5, 7)
    assert local_weight(p, pat) == dict(zip("abcd", p.as_tuple()))[cls]


@pytest.mark.parametrize("pat", [f"{i:04b}" for i in range(16) if bin(i).count("1") % 2])
def test_odd_patterns_weigh_zero(pat):
    assert local_weight(Params(1, 2, 3, 4), pat) == 0.0


@pytest.mark.parametrize(
    "pat, rho, sign",
    [("0011", Pairing.S1, -1), ("0101", Pairing.S3, -1), ("1111", Pairing.S2, -1)],
)
def test_pairing_sign_examples(pat, rho, sign):
    assert pairing_sign(pat, rho) == sign


def test_sign_table_rows():
    # a: - + +, b: + - +, c: + + -, d: - - -
    expect = {"a": (-1, 1, 1), "b": (1, -1, 1), "c": (1, 1, -1), "d": (-1, -1, -1)}
    reps = {"a": 0b0011, "b": 0b0110, "c": 0b0101, "d": 0b0000}
    for cls, pat in reps.items():
        assert tuple(SIGN_TABLE[pat]) == expect[cls]
        assert tuple(SIGN_TABLE[15 - pat]) == expect[cls]


def test_pairing_sign_exhaustive():
    for pat, rho in itertools.product(EVEN_PATTERNS, Pairing):
        bits = [(pat >> (3 - i)) & 1 for i in range(4)]
        (i, j), (k, l) = rho.pairs
        assert (bits[i] != bits[j]) == (bits[k] != bits[l])
        assert pairing_sign(pat, rho) == (1 if bits[i] != bits[j] else -1)


def test_pairing_sign_rejects_odd():
    with pytest.raises(InvalidPattern):
        pairing_sign("0001", Pairing.S1)


def test_pairings_partition_ports():
    parts = {frozenset(map(frozenset, pr.pairs)) for pr in Pairing}
    assert len(parts) == 3
    assert Pairing.S3.pairs == ((0, 2), (1, 3))


def test_signed_pairing_roundtrip():
    for i, sp in enumerate(SIGNED_PAIRINGS):
        assert sp.index == i
        assert SignedPairing.from_index(i) == sp
        assert SignedPairing.parse(str(sp)) == sp
    assert SIGNED_PAIRINGS.index(SignedPairing(Pairing.S2, -1)) == 3
    with pytest.raises(ValueError):
        SignedPairing.parse("s4+")


def test_compatible_pairings_of_a():
    assert [str(s) for s in compatible_pairings("0011")] == ["s1-", "s2+", "s3+"]


# -- weight solver ------------------------------------------------------------


def test_solver_all_ones():
    w = solve_weight_function(Params(1, 1, 1, 1))
    assert np.allclose(w.values, 1 / 3)


def test_solver_1234():
    w = solve_weight_function(Params(1, 2, 3, 4))
    assert np.allclose(w.values, (1 / 3, 1 / 3, 1 / 3, 4 / 3, 1 / 3, 7 / 3))
    assert w.satisfies(Params(1, 2, 3, 4))


def test_solver_rejects_dominant():
    with pytest.raises(NoNonnegativeSolution):
        solve_weight_function(Params(4, 1, 1, 1))


def test_solver_single_positive_has_no_solution():
    # outside F_gt by definition, yet a lone positive weight cannot be split
    with pytest.raises(NoNonnegativeSolution):
        solve_weight_function(Params(1, 0, 0, 0))


def test_congestion_examples():
    assert np.allclose(solve_congestion_weights(Params(1, 1, 1, 1)).values, 1 / 3)
    with pytest.raises(NoNonnegativeSolution):
        solve_congestion_weights(Params(2, 1, 1, 0))
    solve_congestion_weights(Params(1, 1, 1, 0))


@given(tuples)
@settings(max_examples=500)
def test_solver_succeeds_iff_not_f_gt(t):
    assume(off_boundary(t))
    p = Params(*t)
    f = region_classify(p)
    try:
        w = solve_weight_function(p)
    except NoNonnegativeSolution:
        assert f.F_gt
        return
    assert not f.F_gt
    assert min(w.values) >= 0
    assert w.satisfies(p)


@given(tuples)
@settings(max_examples=300)
def test_congestion_succeeds_iff_f_le2(t):
    assume(off_boundary(tuple(x * x for x in t)))
    p = Params(*t)
    try:
        w = solve_congestion_weights(p)
        ok = True
        assert w.satisfies(p.squared())
    except NoNonnegativeSolution:
        ok = False
    assert ok == region_classify(p).F_le2


@given(tuples)
def test_sign_relations(t):
    p = Params(*t)
    f = region_classify(p)
    try:
        w = solve_weight_function(p)
    except NoNonnegativeSolution:
        return
    m1, m2, m3 = w.monotone
    # differences are forced, so compare with a tolerance at the boundary
    d1, d2, d3 = pair_differences(p)
    tol = 1e-12 * max(1.0, sum(t))
    if abs(d1) > tol:
        assert m1 == f.A_le
    if abs(d2) > tol:
        assert m2 == f.B_le
    if abs(d3) > tol:
        assert m3 == f.C_le


@given(st.tuples(positive, positive, positive, positive))
def test_pair_differences_fixed_by_params(t):
    p = Params(*t)
    try:
        w = solve_weight_function(p)
    except NoNonnegativeSolution:
        return
    v = w.values
    assert np.allclose([v[1] - v[0], v[3] - v[2], v[5] - v[4]], pair_differences(p))
