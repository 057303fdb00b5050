"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line that is repeated in the pytest terminal
summary under "acceptance criteria".
"""

import itertools
import time
from fractions import Fraction

import numpy as np
import pytest

from itebounds.binary import (SET_ORDER, BinaryMarginals, BinarySet, binary_pmf_bounds,
                              classify_best)
from itebounds.core import DeltaEvent, DiscretePMF, verify_coupling
from itebounds.frechet import ite_pmf_bounds
from itebounds.intervals import (conservative_interval, minimal_valid_interval,
                                 must_include_points)
from itebounds.makarov import cdf_bounds, cdf_to_pmf_bounds, makarov_lower, makarov_upper
from itebounds.oracle import TransportInstance, extremize_mass, worst_case_event_probability
from itebounds.regionmap import boundary_tolerance, region_map
from itebounds.trial import (TypeScenario, ate_ite_report, estimate_marginals,
                             load_covariate_example, simulate_trial, strata_weights,
                             stratified_report, total_probability_check)

from conftest import delta_support, random_pair, record_criterion

pytestmark = pytest.mark.acceptance
B = BinarySet
TOL = 1e-9


def expected_region(p0: float, p1: float, alpha: float) -> list:
    """Region of the unit square from the explicit inequalities alone."""
    if p0 + p1 <= alpha or p0 + p1 >= 2 - alpha:
        return [B.ZERO]
    if p1 - p0 >= 1 - alpha:
        return [B.ONE]
    if p0 - p1 >= 1 - alpha:
        return [B.NEG_ONE]
    up = p0 <= alpha or p1 >= 1 - alpha
    down = p1 <= alpha or p0 >= 1 - alpha
    if up and down and p0 == p1:
        return [B.ZERO_TO_ONE, B.NEG_TO_ZERO]
    if up and (not down or p0 < p1):
        return [B.ZERO_TO_ONE]
    if down:
        return [B.NEG_TO_ZERO]
    return [B.FULL]


def oracle_coverage(m: BinaryMarginals, s: BinarySet) -> float:
    if s is B.FULL:
        return 1.0
    p1, p0 = m.pmfs()
    return extremize_mass(TransportInstance.from_event(p1, p0, s.event()), "min").value


def seeded_instances(count=1000, seed=20261016):
    rng = np.random.default_rng(seed)
    return [random_pair(rng) for _ in range(count)]


def test_criterion_1_region_map():
    alpha, R = 0.05, 199
    start = time.perf_counter()
    region_miss, oracle_miss, full_miss = [], [], []
    counts = dict.fromkeys([s.name for s in SET_ORDER] + ["TIE"], 0)
    for i, j in itertools.product(range(R), repeat=2):
        p0, p1 = (i + 0.5) / R, (j + 0.5) / R
        m = BinaryMarginals(p0, p1)
        best = classify_best(m, alpha)
        counts["TIE" if len(best) > 1 else best[0].name] += 1
        if best != expected_region(p0, p1, alpha):
            region_miss.append((p0, p1))
        if alpha < p0 < 1 - alpha and alpha < p1 < 1 - alpha and best != [B.FULL]:
            full_miss.append((p0, p1))
        # oracle: the chosen sets are valid, every strictly shorter set is not
        for s in best:
            if oracle_coverage(m, s) < 1 - alpha - TOL:
                oracle_miss.append((p0, p1, s.name))
        for s in SET_ORDER:
            if s.length < best[0].length and oracle_coverage(m, s) >= 1 - alpha - TOL:
                oracle_miss.append((p0, p1, s.name))
    elapsed = time.perf_counter() - start
    ok = not region_miss and not oracle_miss and not full_miss and elapsed < 60
    record_criterion(1, ok, f"{R}x{R} cells, region mismatches {len(region_miss)}, "
                            f"oracle mismatches {len(oracle_miss)}, counts {counts}, "
                            f"{elapsed:.1f}s")
    assert not region_miss, region_miss[:5]
    assert not full_miss, full_miss[:5]
    assert not oracle_miss, oracle_miss[:5]
    assert elapsed < 60


def test_criterion_2_pmf_sharpness():
    start = time.perf_counter()
    cases, bad = 0, []
    for n, (p1, p0) in enumerate(seeded_instances()):
        for d in delta_support(p1, p0):
            cases += 1
            b = ite_pmf_bounds(p1, p0, d)
            o = worst_case_event_probability(p1, p0, DeltaEvent.singleton(d))
            checks = [abs(b.lower - o.lower) <= TOL, abs(b.upper - o.upper) <= TOL]
            for cert, target in ((b.lower_certificate, b.lower), (b.upper_certificate, b.upper)):
                mass = float(cert.mass[np.abs(
                    cert.row_support[:, None] - cert.col_support[None, :] - d) <= TOL].sum())
                checks += [bool(verify_coupling(cert, p1, p0)), abs(mass - target) <= TOL]
            if not all(checks):
                bad.append((n, d, checks))
    elapsed = time.perf_counter() - start
    ok = not bad and elapsed < 120
    record_criterion(2, ok, f"1000 instances, {cases} (pair, delta) cases, {len(bad)} failures, "
                            f"{elapsed:.1f}s")
    assert not bad, bad[:5]
    assert elapsed < 120


def test_criterion_3_cdf_sharpness():
    start = time.perf_counter()
    cases, bad = 0, []
    for n, (p1, p0) in enumerate(seeded_instances()):
        for d in delta_support(p1, p0):
            cases += 1
            o = worst_case_event_probability(p1, p0, DeltaEvent.at_most(d))
            lo, hi = makarov_lower(p1, p0, d), makarov_upper(p1, p0, d)
            if abs(lo - o.lower) > TOL or abs(hi - o.upper) > TOL:
                bad.append((n, d, lo, hi, o.as_tuple()))
    elapsed = time.perf_counter() - start
    ok = not bad and elapsed < 120
    record_criterion(3, ok, f"1000 instances, {cases} (pair, delta) cases, {len(bad)} failures, "
                            f"{elapsed:.1f}s")
    assert not bad, bad[:5]
    assert elapsed < 120


def test_criterion_4_binary_consistency():
    rng = np.random.default_rng(4)
    draws = [tuple(x) for x in rng.random((10_000 - 9, 2))]
    draws += list(itertools.product([0.0, 0.5, 1.0], repeat=2))
    worst = 0.0
    for p0, p1 in draws:
        m = BinaryMarginals(p0, p1)
        pmf1, pmf0 = m.pmfs()
        direct = binary_pmf_bounds(m)
        for k in (-1, 0, 1):
            general = ite_pmf_bounds(pmf1, pmf0, k, certificates=False)
            via_cdf = cdf_to_pmf_bounds(cdf_bounds(pmf1, pmf0, k), cdf_bounds(pmf1, pmf0, k - 1))
            for other in (general, via_cdf):
                worst = max(worst, abs(other.lower - direct[k].lower),
                            abs(other.upper - direct[k].upper))
    ok = worst <= 1e-12
    record_criterion(4, ok, f"{len(draws)} margin pairs, max deviation {worst:.2e}")
    assert ok


def test_criterion_5_trial_reproduction():
    start = time.perf_counter()
    bad = []
    for seed in range(20):
        r = simulate_trial(TypeScenario(0.96, 0.03, 0.01, 0.0, 50000, 0.5, seed))
        rep = ate_ite_report(r, 0.05)
        dev_point = rep.ate_point - 0.0198
        dev_ci = max(abs(rep.ate_ci.lo - 0.0174), abs(rep.ate_ci.hi - 0.0223))
        checks = {"point": abs(dev_point) <= 0.004, "ci": dev_ci <= 0.003,
                  "excludes_0": rep.neyman_rejected, "set": rep.ite_sets == (B.ZERO,)}
        if not all(checks.values()):
            failed = [k for k, v in checks.items() if not v]
            bad.append(f"seed {seed}: {failed} (point {rep.ate_point:.5f}, "
                       f"ci [{rep.ate_ci.lo:.5f}, {rep.ate_ci.hi:.5f}])")
    elapsed = time.perf_counter() - start
    ok = not bad and elapsed < 5
    record_criterion(5, ok, f"seeds 0-19, {len(bad)} failing {bad}, {elapsed:.2f}s")
    assert not bad, bad
    assert elapsed < 5


def test_criterion_6_covariate_strata():
    trial = load_covariate_example()
    rep = stratified_report(trial, 0.1, [{"x1": 1}, {"x1": 1, "x2": 1}])
    x1 = rep.strata["x1=1"]
    cell = rep.strata["x1=1,x2=1"]
    sub = trial.select(x1=1)
    exact = Fraction(sub.y1_treat, sub.n_treat) - Fraction(sub.y1_ctrl, sub.n_ctrl)
    checks = {
        "x1=1 is {1}": x1.ite_sets == (B.ONE,),
        "x1=1 coverage >= 0.9": x1.worst_case_coverage >= 0.9 and exact >= Fraction(9, 10),
        "x1=1,x2=1 is FULL": cell.ite_sets == (B.FULL,),
        "pooled is FULL": rep.pooled.ite_sets == (B.FULL,),
    }
    ms, ws = strata_weights(trial)
    residual = total_probability_check(ms, ws, estimate_marginals(trial)).residual
    ok = all(checks.values())
    record_criterion(6, ok, f"{checks}, x1=1 coverage {x1.worst_case_coverage} "
                            f"(exact {exact}), decomposition residual {residual}")
    assert ok, checks


def ordinal_instance(rng, levels=4):
    out = []
    for _ in range(2):
        probs = rng.dirichlet(np.full(levels, rng.choice([0.3, 1.0, 3.0])))
        probs = np.maximum(probs, 1e-6)
        out.append(DiscretePMF(np.arange(levels), probs / probs.sum()))
    return out


def test_criterion_7_property_suite():
    start = time.perf_counter()
    rng = np.random.default_rng(7)
    failures = {"must_include": 0, "atom_inclusion": 0, "set_intersection": 0,
                "conservative_coverage": 0, "point_identification": 0}
    for _ in range(200):
        p1, p0 = ordinal_instance(rng, int(rng.integers(2, 6)))
        alpha = float(rng.choice([0.05, 0.1, 0.2]))
        results = [minimal_valid_interval(p1, p0, alpha, mode)
                   for mode in ("sharp", "conservative")]
        points = must_include_points(p1, p0, alpha)
        grid = delta_support(p1, p0)
        heavy = [d for d in grid if worst_case_event_probability(
            p1, p0, DeltaEvent.singleton(d)).lower > alpha + TOL]
        # a two-atom set of the grid with worst-case mass above alpha
        pairs = [(a, b) for a, b in itertools.combinations(grid, 2)
                 if worst_case_event_probability(p1, p0, DeltaEvent.of_atoms([a, b]))
                 .lower > alpha + TOL]
        for res in results:
            for iv in res.co_optimal:
                failures["must_include"] += not all(iv.contains(p) for p in points)
                failures["atom_inclusion"] += not all(iv.contains(d) for d in heavy)
                failures["set_intersection"] += not all(iv.contains(a) or iv.contains(b)
                                                        for a, b in pairs)
    for _ in range(200):
        p1, p0 = random_pair(rng, 2, 6)
        alpha = float(rng.choice([0.05, 0.1, 0.2]))
        iv = conservative_interval(p1, p0, alpha)
        cover = worst_case_event_probability(p1, p0, iv.event(), check_complement=False).lower
        failures["conservative_coverage"] += cover < 1 - alpha - TOL
    for _ in range(200):
        p1, _ = random_pair(rng)
        c = float(rng.integers(0, 8))
        p0 = DiscretePMF.point_mass(c)
        for d in delta_support(p1, p0):
            b = ite_pmf_bounds(p1, p0, d)
            failures["point_identification"] += not (b.lower == b.upper == p1.prob_at(c + d))
    elapsed = time.perf_counter() - start
    ok = not any(failures.values()) and elapsed < 60
    record_criterion(7, ok, f"failures {failures}, {elapsed:.1f}s")
    assert not any(failures.values()), failures
    assert elapsed < 60


def test_criterion_8_tie_area():
    R = 199
    rows, ok = [], True
    for alpha in (0.05, 0.1):
        rmap = region_map(alpha, R, "shortest")
        area = rmap.area("ZERO_TO_ONE|NEG_TO_ZERO")
        target = 2 * alpha ** 2 / 2
        slack = boundary_tolerance(alpha, R)
        ok &= abs(area - target) <= slack
        rows.append(f"alpha={alpha}: {rmap.count('ZERO_TO_ONE|NEG_TO_ZERO')} cells, area "
                    f"{area:.6f} vs {target:.6f} (|diff| {abs(area - target):.6f} <= {slack:.6f})")
    record_criterion(8, ok, "; ".join(rows))
    assert ok
