import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from itebounds.core import DeltaEvent, DiscretePMF, verify_coupling
from itebounds.oracle import (OracleSizeError, TransportInstance, enumerate_vertices,
                              extremize_by_enumeration, extremize_mass,
                              worst_case_event_probability)

from conftest import pmfs, random_pmf

# min P(Y1 - Y0 <= 0) for two uniform{0,1,2} margins, taken from the 3x3 vertex
# enumeration (attained by the cyclic shift Y1 = Y0 + 1 mod 3)
UNIFORM3_MIN_AT_MOST_ZERO = 1 / 3


def diagonal(p, q):
    return TransportInstance(p, q, np.eye(len(p), len(q), dtype=bool))


def test_diagonal_max_and_min(uniform3):
    hi = extremize_mass(diagonal(uniform3, uniform3), "max")
    lo = extremize_mass(diagonal(uniform3, uniform3), "min")
    assert abs(hi.value - 1.0) <= 1e-9
    assert abs(lo.value - 0.0) <= 1e-9
    assert extremize_by_enumeration(diagonal(uniform3, uniform3), "min") == pytest.approx(0, abs=1e-12)
    for res in (hi, lo):
        assert verify_coupling(res.coupling, uniform3, uniform3)
        assert res.duality_gap <= 1e-9


def test_at_most_zero_minimum(uniform3):
    b = worst_case_event_probability(uniform3, uniform3, DeltaEvent.at_most(0))
    assert abs(b.lower - UNIFORM3_MIN_AT_MOST_ZERO) <= 1e-9
    assert abs(b.upper - 1.0) <= 1e-9


def test_binary_cell_reproduces_frechet_upper():
    p1 = DiscretePMF([0, 1], [0.35, 0.65])
    p0 = DiscretePMF([0, 1], [0.2, 0.8])
    inst = TransportInstance.from_pairs(p1, p0, [(1, 0)])
    assert extremize_mass(inst, "max").value == pytest.approx(min(0.65, 0.2), abs=1e-9)
    assert extremize_mass(inst, "min").value == pytest.approx(max(0.65 + 0.2 - 1, 0), abs=1e-9)


def test_full_event_is_certain(rng):
    p, q = random_pmf(rng, 4), random_pmf(rng, 3)
    b = worst_case_event_probability(p, q, DeltaEvent())
    assert b.as_tuple() == pytest.approx((1.0, 1.0), abs=1e-12)


def test_size_guard(rng):
    p = DiscretePMF.uniform(range(21))
    with pytest.raises(OracleSizeError):
        extremize_mass(diagonal(p, p), "max")
    with pytest.raises(OracleSizeError):
        enumerate_vertices(random_pmf(rng, 5), random_pmf(rng, 2))


def test_bad_direction(uniform3):
    with pytest.raises(ValueError):
        extremize_mass(diagonal(uniform3, uniform3), "sideways")


def test_agrees_with_vertex_enumeration(rng):
    """Simplex optimum equals the best vertex on 200 random instances up to 4x4."""
    for _ in range(200):
        m, n = rng.integers(1, 5, size=2)
        p = random_pmf(rng, int(m), pool=6)
        q = random_pmf(rng, int(n), pool=6)
        mask = rng.random((len(p), len(q))) < 0.4
        inst = TransportInstance(p, q, mask)
        for direction in ("min", "max"):
            res = extremize_mass(inst, direction)
            assert abs(res.value - extremize_by_enumeration(inst, direction)) <= 1e-9
            assert abs(float(res.coupling.mass[mask].sum()) - res.value) <= 1e-9


def test_degenerate_margins_need_bland(rng):
    """Equal partial sums make many pivots degenerate; the solve must still finish."""
    p = DiscretePMF.uniform(range(8))
    q = DiscretePMF.uniform(range(8))
    for _ in range(20):
        mask = rng.random((8, 8)) < 0.5
        for direction in ("min", "max"):
            res = extremize_mass(TransportInstance(p, q, mask), direction)
            assert res.duality_gap <= 1e-9


@settings(max_examples=60, deadline=None)
@given(pmfs(max_size=4), pmfs(max_size=4), st.randoms(use_true_random=False))
def test_permutation_invariance(p, q, rnd):
    mask = np.array([[rnd.random() < 0.5 for _ in range(len(q))] for _ in range(len(p))])
    base = extremize_mass(TransportInstance(p, q, mask), "max").value
    rows = list(range(len(p)))
    cols = list(range(len(q)))
    rnd.shuffle(rows)
    rnd.shuffle(cols)
    # relabel supports by position; the problem is the same up to the permutation
    p2 = DiscretePMF(np.arange(len(p)), p.probs[rows])
    q2 = DiscretePMF(np.arange(len(q)), q.probs[cols])
    permuted = extremize_mass(TransportInstance(p2, q2, mask[np.ix_(rows, cols)]), "max").value
    assert abs(base - permuted) <= 1e-9


@settings(max_examples=60, deadline=None)
@given(pmfs(), pmfs(), st.integers(-6, 6), st.integers(0, 4))
def test_complement_identity(p, q, lo, width):
    event = DeltaEvent.interval(lo, lo + width)
    inst = TransportInstance.from_event(p, q, event)
    hi = extremize_mass(inst, "max").value
    comp = extremize_mass(inst.complement(), "min").value
    assert abs(hi - (1 - comp)) <= 1e-9
    b = worst_case_event_probability(p, q, event)
    assert max(b.certificate_errors().values()) <= 1e-9
