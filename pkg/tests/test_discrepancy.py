"""Exact scan, randomized estimator, and discrete two-set discrepancy."""

import itertools

import numpy as np
import pytest

from nuqmc.discrepancy import (
    BudgetExceededError,
    discrete_discrepancy,
    estimate_star_discrepancy,
    exact_star_discrepancy,
    local_star_discrepancy,
)
from nuqmc.measures import (
    AnchoredBox,
    DiscreteMeasure,
    PointSet,
    PowerCdf,
    ProductMeasure,
    OmegaRegion,
    RestrictionMeasure,
    uniform_measure,
)


def naive_star_discrepancy(ps, mu):
    """Independent oracle: pure-python enumeration of the critical grid
    (point coordinates, measure atoms, and 1.0) in both variants with direct
    point counting and scalar mass calls."""
    jumps = mu.jump_coordinates()
    axes = []
    for s in range(ps.dim):
        vals = set(ps.points[:, s].tolist()) | {1.0}
        if jumps is not None:
            vals |= set(np.asarray(jumps[s]).tolist())
        axes.append(sorted(vals))
    best = 0.0
    for corner in itertools.product(*axes):
        c = np.array(corner)
        for closed in (True, False):
            if closed:
                cnt = sum(1 for p in ps.points if np.all(p <= c))
            else:
                cnt = sum(1 for p in ps.points if np.all(p < c))
            m = mu.mass(AnchoredBox(c, closed=closed))
            best = max(best, abs(cnt / ps.n - m))
    return best


def test_single_midpoint():
    rep = exact_star_discrepancy(PointSet([[0.5]]), uniform_measure(1))
    assert rep.value == pytest.approx(0.5, abs=1e-15)
    assert rep.mode == "exact"


def test_quarter_points():
    rep = exact_star_discrepancy(PointSet([[0.25], [0.75]]), uniform_measure(1))
    assert rep.value == pytest.approx(0.25, abs=1e-15)


def test_open_variant_at_upper_corner():
    # single point at (1,1): open limit pairs count 0 with mass 1
    rep = exact_star_discrepancy(PointSet([[1.0, 1.0]]), uniform_measure(2))
    assert rep.value == pytest.approx(1.0, abs=1e-15)
    assert not rep.witness.closed


def test_centered_lattice_optimum():
    n = 4
    ps = PointSet(((2 * np.arange(1, n + 1) - 1) / (2 * n)).reshape(-1, 1))
    rep = exact_star_discrepancy(ps, uniform_measure(1))
    assert rep.value == pytest.approx(1 / (2 * n), abs=1e-15)


def test_all_points_at_origin():
    rep = exact_star_discrepancy(PointSet([[0.0, 0.0]] * 3), uniform_measure(2))
    assert rep.value == pytest.approx(1.0, abs=1e-15)


def test_witness_reproduces_value():
    rng = np.random.default_rng(3)
    mu = ProductMeasure([PowerCdf(2.0), PowerCdf(0.7)])
    ps = PointSet(rng.random((20, 2)))
    rep = exact_star_discrepancy(ps, mu)
    assert local_star_discrepancy(ps, mu, rep.witness) == rep.value


def test_matches_naive_oracle_small():
    rng = np.random.default_rng(11)
    for trial in range(12):
        d = int(rng.integers(1, 3))
        n = int(rng.integers(1, 17))
        ps = PointSet(rng.random((n, d)))
        mu = [
            uniform_measure(d),
            ProductMeasure([PowerCdf(float(rng.uniform(0.3, 3.0))) for _ in range(d)]),
            DiscreteMeasure(PointSet(rng.random((int(rng.integers(1, 12)), d)))),
        ][trial % 3]
        fast = exact_star_discrepancy(ps, mu).value
        slow = naive_star_discrepancy(ps, mu)
        assert fast == pytest.approx(slow, abs=1e-12)


def test_discrete_measure_with_atoms_on_points():
    # point set == atoms: discrepancy must vanish (open limit pairs strict
    # count with strict mass)
    pts = PointSet([[0.2, 0.4], [0.6, 0.8], [0.2, 0.4]])
    mu = DiscreteMeasure(pts)
    assert exact_star_discrepancy(pts, mu).value == 0.0


def test_discrete_measure_atoms_off_point_grid():
    # the sup can sit at corners mixing point and atom coordinates; the grid
    # must include the measure's atoms (closed box at (0, 1) here)
    sub = PointSet([[0.5, 0.5], [0.5, 1.0], [1.0, 0.5]])
    full = PointSet(
        [[1, 1], [0.5, 0.5], [0.5, 0.5], [1, 0], [0, 0.5], [0, 1], [0, 1],
         [0, 1], [0.5, 0.5], [1, 0.5], [1, 0], [0.5, 1]]
    )
    mu = DiscreteMeasure(full)
    rep = exact_star_discrepancy(sub, mu)
    assert rep.value == pytest.approx(1.0 / 3.0, abs=1e-15)  # |0 - 4/12| at (0,1)
    assert discrete_discrepancy(sub, full) == pytest.approx(1.0, abs=1e-15)


def test_budget_refusal():
    rng = np.random.default_rng(0)
    ps = PointSet(rng.random((200, 2)))
    with pytest.raises(BudgetExceededError):
        exact_star_discrepancy(ps, uniform_measure(2), budget=100)


def test_permutation_invariance():
    rng = np.random.default_rng(5)
    pts = rng.random((30, 2))
    mu = uniform_measure(2)
    a = exact_star_discrepancy(PointSet(pts), mu).value
    b = exact_star_discrepancy(PointSet(pts[rng.permutation(30)]), mu).value
    assert a == b


# --- estimator ------------------------------------------------------------


def test_estimator_exhausts_small_grid():
    ps = PointSet([[0.25], [0.75]])
    mu = uniform_measure(1)
    rep = estimate_star_discrepancy(ps, mu, trials=10**4, seed=0)
    assert rep.mode == "estimate"
    assert rep.value == exact_star_discrepancy(ps, mu).value


def test_estimator_reaches_most_of_exact():
    rng = np.random.default_rng(8)
    ps = PointSet(rng.random((40, 2)))
    mu = uniform_measure(2)
    exact = exact_star_discrepancy(ps, mu).value
    est = estimate_star_discrepancy(ps, mu, trials=10**4, seed=1)
    assert est.value <= exact + 1e-12
    assert est.value >= 0.8 * exact


def test_estimator_single_trial_below_exact():
    rng = np.random.default_rng(2)
    ps = PointSet(rng.random((25, 2)))
    mu = uniform_measure(2)
    exact = exact_star_discrepancy(ps, mu).value
    est = estimate_star_discrepancy(ps, mu, trials=1, seed=3)
    assert est.value <= exact + 1e-12


def test_estimator_witness_reproduces_value():
    rng = np.random.default_rng(14)
    ps = PointSet(rng.random((30, 2)))
    mu = uniform_measure(2)
    rep = estimate_star_discrepancy(ps, mu, trials=200, seed=5)
    assert local_star_discrepancy(ps, mu, rep.witness) == rep.value


def test_estimator_monotone_in_nested_trials():
    rng = np.random.default_rng(4)
    ps = PointSet(rng.random((50, 2)))
    mu = uniform_measure(2)
    vals = [
        estimate_star_discrepancy(ps, mu, trials=t, seed=7).value
        for t in (10, 100, 1000)
    ]
    assert vals[0] <= vals[1] <= vals[2]
    assert vals[2] <= exact_star_discrepancy(ps, mu).value + 1e-12


# --- discrete two-set discrepancy ------------------------------------------


def naive_discrete_discrepancy(subset, full):
    # union grid: both counting functions are piecewise constant on it
    axes = []
    for s in range(subset.dim):
        vals = sorted(
            set(subset.points[:, s].tolist())
            | set(full.points[:, s].tolist())
            | {1.0}
        )
        axes.append(vals)
    ratio = subset.n / full.n
    best = 0.0
    for corner in itertools.product(*axes):
        c = np.array(corner)
        for closed in (True, False):
            if closed:
                cx = sum(1 for p in subset.points if np.all(p <= c))
                cz = sum(1 for p in full.points if np.all(p <= c))
            else:
                cx = sum(1 for p in subset.points if np.all(p < c))
                cz = sum(1 for p in full.points if np.all(p < c))
            best = max(best, abs(cx - ratio * cz))
    return best


def test_discrete_discrepancy_identity():
    rng = np.random.default_rng(6)
    z = PointSet(rng.random((16, 2)))
    assert discrete_discrepancy(z, z) == 0.0


def test_discrete_discrepancy_example():
    full = PointSet([[0.2], [0.4], [0.6], [0.8]])
    sub = PointSet([[0.2], [0.6]])
    assert discrete_discrepancy(sub, full) == pytest.approx(0.5, abs=1e-15)
    assert naive_discrete_discrepancy(sub, full) == pytest.approx(0.5, abs=1e-15)


def test_discrete_discrepancy_matches_naive():
    rng = np.random.default_rng(9)
    for _ in range(8):
        d = int(rng.integers(1, 3))
        k = int(rng.integers(4, 20))
        z = PointSet(rng.random((k, d)))
        n = int(rng.integers(1, k + 1))
        sub = PointSet(z.points[rng.choice(k, size=n, replace=False)])
        assert discrete_discrepancy(sub, z) == pytest.approx(
            naive_discrete_discrepancy(sub, z), abs=1e-12
        )


def test_discrete_discrepancy_containment_enforced():
    z = PointSet([[0.2], [0.4]])
    outsider = PointSet([[0.3]])
    with pytest.raises(ValueError):
        discrete_discrepancy(outsider, z)


def test_restriction_measure_scan():
    # scan accepts the normalized restriction measure like any other
    mu = RestrictionMeasure(OmegaRegion([([0.0], [0.5])]))
    rep = exact_star_discrepancy(PointSet([[0.25]]), mu)
    assert rep.value == pytest.approx(naive_star_discrepancy(PointSet([[0.25]]), mu), abs=1e-12)
