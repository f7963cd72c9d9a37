"""Rounding engines: hard Beck-Fiala guarantee, zero preservation,
determinism, and the heuristic partial-coloring walk."""

import itertools

import numpy as np
import pytest

from nuqmc.balancing import (
    Hypergraph,
    PartialColoringConfig,
    beck_fiala_round,
    edge_error,
    partial_coloring_round,
)


def random_hypergraph(rng, n_max=200, m_max=400, delta_max=10, min_n=4):
    n = int(rng.integers(min_n, n_max + 1))
    cap = int(rng.integers(1, delta_max + 1))
    deg = np.zeros(n, dtype=int)
    edges = []
    for _ in range(int(rng.integers(1, m_max + 1))):
        pool = np.flatnonzero(deg < cap)
        if pool.size == 0:
            break
        k = int(rng.integers(1, min(pool.size, 3 * cap + 2) + 1))
        e = rng.choice(pool, size=k, replace=False)
        deg[e] += 1
        edges.append(e)
    return Hypergraph(n, tuple(edges))


# --- hypergraph type ---------------------------------------------------------


def test_hypergraph_degree_cached_and_checked():
    h = Hypergraph(3, ([0, 1], [1, 2], [1]))
    assert h.max_degree == 3
    with pytest.raises(ValueError):
        Hypergraph(3, ([0, 1],), max_degree=5)
    with pytest.raises(ValueError):
        Hypergraph(2, ([0, 3],))
    with pytest.raises(ValueError):
        Hypergraph(2, ([0, 0],))


def test_hypergraph_json_roundtrip():
    h = Hypergraph(4, ([0, 2], [1, 2, 3]))
    h2 = Hypergraph.from_dict(h.to_dict())
    assert h2.n == h.n and all(np.array_equal(a, b) for a, b in zip(h.edges, h2.edges))


# --- edge_error --------------------------------------------------------------


def test_edge_error_examples():
    assert edge_error(Hypergraph(2, ()), [0.5, 0.5], [1, 1]) == 0.0
    assert edge_error(Hypergraph(2, ([0, 1],)), [0.5, 0.5], [1, 1]) == pytest.approx(1.0)
    h = Hypergraph(3, ([0, 1, 2],))
    assert edge_error(h, [0.3, 0.3, 0.3], [1, 0, 0]) == pytest.approx(0.1)


# --- beck_fiala --------------------------------------------------------------


def test_single_edge_half_weights():
    h = Hypergraph(4, ([0, 1, 2, 3],))
    res = beck_fiala_round(h, [0.5] * 4)
    # brute force: error 0 achievable; engine must stay within 2*Delta-1 = 1
    assert res.achieved_error <= 1.0
    assert res.guaranteed_bound == 1.0


def test_zero_preservation():
    h = Hypergraph(3, ([0, 1], [1, 2]))
    res = beck_fiala_round(h, [0.0, 0.0, 0.0])
    assert np.array_equal(res.b, [0, 0, 0])
    assert res.achieved_error == 0.0


def test_integral_fixpoint():
    h = Hypergraph(3, ([0, 1], [1, 2]))
    res = beck_fiala_round(h, [1.0, 0.0, 1.0])
    assert np.array_equal(res.b, [1, 0, 1])
    assert res.achieved_error == 0.0


def test_beta_outside_unit_interval_rejected():
    h = Hypergraph(2, ([0, 1],))
    with pytest.raises(ValueError):
        beck_fiala_round(h, [1.2, 0.5])
    with pytest.raises(ValueError):
        beck_fiala_round(h, [-0.1, 0.5])


def test_hard_guarantee_random_instances():
    rng = np.random.default_rng(2024)
    for _ in range(60):
        h = random_hypergraph(rng, n_max=80, m_max=120)
        beta = rng.random(h.n)
        beta[rng.random(h.n) < 0.25] = 0.0
        res = beck_fiala_round(h, beta)
        assert res.achieved_error <= max(2 * h.max_degree - 1, 0)
        assert np.all(res.b[np.asarray(beta) == 0.0] == 0)
        assert res.achieved_error == edge_error(h, beta, res.b)


def brute_force_optimum(h, beta):
    beta = np.asarray(beta, dtype=float)
    free = np.flatnonzero(beta > 0)
    best = np.inf
    for bits in itertools.product((0, 1), repeat=len(free)):
        b = np.zeros(h.n)
        b[free] = bits
        best = min(best, edge_error(h, beta, b))
    return best


def test_never_better_than_brute_force_optimum():
    rng = np.random.default_rng(77)
    for _ in range(10):
        h = random_hypergraph(rng, n_max=10, m_max=12, delta_max=4, min_n=3)
        beta = rng.random(h.n)
        beta[rng.random(h.n) < 0.3] = 0.0
        res = beck_fiala_round(h, beta)
        assert res.achieved_error >= brute_force_optimum(h, beta) - 1e-12


def test_beck_fiala_bit_deterministic():
    rng = np.random.default_rng(13)
    h = random_hypergraph(rng, n_max=60, m_max=90)
    beta = rng.random(h.n)
    a = beck_fiala_round(h, beta)
    b = beck_fiala_round(h, beta)
    assert np.array_equal(a.b, b.b)
    assert a.achieved_error == b.achieved_error


def test_edgeless_bound_clamped():
    h = Hypergraph(1, ())
    res = beck_fiala_round(h, [0.7])
    assert res.b[0] in (0.0, 1.0)
    assert res.achieved_error == 0.0
    assert res.guaranteed_bound == 0.0


def test_null_step_preserves_active_sums():
    # white-box check of the progress-guard path: one explicit null move
    from nuqmc.balancing import _EngineState, _null_step

    h = Hypergraph(5, ([0, 1, 2, 3, 4], [0, 1, 2], [2, 3, 4]))
    beta = np.array([0.5, 0.4, 0.6, 0.3, 0.7])
    st = _EngineState(h, beta)
    active = st.active_mask()
    assert active.tolist() == [True, False, False]  # only the 5-edge exceeds Delta=3
    before = st.x[h.edges[0]].sum()
    n_floating = int(st.floating.sum())
    _null_step(st, active)
    assert st.x[h.edges[0]].sum() == pytest.approx(before, abs=1e-9)
    assert int(st.floating.sum()) < n_floating


def test_empty_edges_degenerate():
    h = Hypergraph(3, ([], [0, 1, 2]))
    for res in (beck_fiala_round(h, [0.4, 0.5, 0.6]),
                partial_coloring_round(h, [0.4, 0.5, 0.6], seed=1)):
        assert set(np.unique(res.b)) <= {0.0, 1.0}
    h_all_empty = Hypergraph(2, ([], []))
    res = partial_coloring_round(h_all_empty, [0.3, 0.8], seed=2)
    assert res.achieved_error == 0.0


# --- partial coloring ---------------------------------------------------------


def test_partial_integral_fixpoint():
    h = Hypergraph(3, ([0, 1], [1, 2]))
    res = partial_coloring_round(h, [1.0, 0.0, 1.0], seed=5)
    assert np.array_equal(res.b, [1, 0, 1])
    assert res.achieved_error == 0.0


def test_partial_no_edges_vertex():
    res = partial_coloring_round(Hypergraph(1, ()), [0.7], seed=0)
    assert res.b[0] in (0.0, 1.0)
    assert res.achieved_error == 0.0


def test_partial_deterministic_given_seed():
    rng = np.random.default_rng(3)
    h = random_hypergraph(rng, n_max=40, m_max=60)
    beta = rng.random(h.n)
    a = partial_coloring_round(h, beta, seed=11)
    b = partial_coloring_round(h, beta, seed=11)
    assert np.array_equal(a.b, b.b)
    c = partial_coloring_round(h, beta, seed=12)
    assert a.achieved_error == b.achieved_error
    assert c.achieved_error >= 0  # different seed may differ; result still valid


def test_partial_zero_preservation_and_hard_ceiling():
    rng = np.random.default_rng(21)
    for seed in range(6):
        h = random_hypergraph(rng, n_max=50, m_max=80)
        beta = rng.random(h.n)
        beta[rng.random(h.n) < 0.3] = 0.0
        res = partial_coloring_round(h, beta, seed=seed)
        assert np.all(res.b[np.asarray(beta) == 0.0] == 0)
        assert res.achieved_error <= res.details["hard_ceiling"] + 1e-6
        assert res.details["bound_exceeded"] == (res.achieved_error > res.guaranteed_bound)


def regular_degree_hypergraph(rng, n, m, degree):
    """Each vertex in `degree` edges: random assignment of slots."""
    slots = np.concatenate([rng.permutation(n) for _ in range(degree)])
    edges = np.array_split(slots, m)
    return Hypergraph(n, tuple(e for e in edges if len(e)))


def test_partial_median_error_study():
    # empirical study against the sqrt-scale target; recorded, not asserted
    rng = np.random.default_rng(2)
    h = regular_degree_hypergraph(rng, 256, 256, 3)
    target = 5.0 * np.sqrt(2.0 * h.max_degree * np.log(2.0 * h.m))
    cfg = PartialColoringConfig(gamma=0.05)
    errors = []
    for seed in range(50):
        beta = np.random.default_rng((9, seed)).random(h.n)
        res = partial_coloring_round(h, beta, seed=seed, config=cfg)
        errors.append(res.achieved_error)
        # hard ceiling always holds
        assert res.achieved_error <= res.details["hard_ceiling"] + 1e-6
    median = float(np.median(errors))
    print(f"\npartial-coloring median error {median:.3f} vs target {target:.3f}")
    assert median >= 0.0  # study is recorded; the ceiling above is the assertion
