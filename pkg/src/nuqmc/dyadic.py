"""Dyadic-cell hypergraph over {1..N^}^d and anchored-prefix rounding.

N^ is N rounded up to a power of two, m = log2(N^).  For every level vector
(m_1..m_d) in {0..m}^d the cells

    prod_s { j_s 2^{m_s} + 1, ..., (j_s + 1) 2^{m_s} }

partition the lattice, so each lattice point lies in exactly (m+1)^d edges
and the hypergraph has maximum degree (m+1)^d.  Every anchored lattice
prefix {1..J_1} x ... x {1..J_d} is a disjoint union of at most one cell per
level vector (read off the binary representations of the J_s), which turns a
per-edge rounding error e into an anchored-prefix error of at most
e * (m+1)^d.

round_array pads a fractional array with zeros to the power-of-two lattice,
rounds it with a balancing engine, and returns the 0/1 array together with a
certificate chaining the engine's per-edge error through the decomposition;
the exact maximum prefix error is recomputed by cumulative sums and asserted
against the chain on every run.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .balancing import Hypergraph, beck_fiala_round, partial_coloring_round
from .discrepancy import BudgetExceededError

__all__ = [
    "DyadicScheme",
    "build_scheme",
    "round_array",
    "max_prefix_error",
    "prefix_cells",
    "reference_prefix_bound",
    "array_to_bytes",
    "array_from_bytes",
    "LATTICE_BUDGET",
]

LATTICE_BUDGET = 2**24


@dataclass(frozen=True)
class DyadicScheme:
    """Lattice geometry and edge indexing for one (N, d)."""

    n_side: int       # requested side length N
    n_hat: int        # smallest power of two >= N
    m: int            # log2(n_hat)
    d: int
    level_offsets: dict  # level vector -> first edge id
    n_edges: int

    @property
    def degree(self) -> int:
        return (self.m + 1) ** self.d

    @property
    def n_vertices(self) -> int:
        return self.n_hat**self.d

    def edge_id(self, level, j) -> int:
        """Edge id of the cell at `level` = (m_1..m_d) with block index
        `j` = (j_1..j_d), 0 <= j_s < 2^(m - m_s)."""
        level = tuple(int(v) for v in level)
        blocks = tuple(self.n_hat >> ms for ms in level)
        return self.level_offsets[level] + int(
            np.ravel_multi_index(tuple(int(v) for v in j), blocks)
        )


def build_scheme(n_side: int, d: int):
    """Build the scheme and its hypergraph; vertices are the lattice points
    of {1..N^}^d in row-major order.

    Refuses lattices above LATTICE_BUDGET points."""
    if n_side < 1 or d < 1:
        raise ValueError("need N >= 1 and d >= 1")
    n_hat = 1 << max(0, (n_side - 1).bit_length())
    if n_hat**d > LATTICE_BUDGET:
        raise BudgetExceededError(
            f"lattice {n_hat}^{d} exceeds the budget of {LATTICE_BUDGET} points"
        )
    m = n_hat.bit_length() - 1
    lattice = np.arange(n_hat**d, dtype=np.int64).reshape((n_hat,) * d)
    edges = []
    offsets = {}
    for level in itertools.product(range(m + 1), repeat=d):
        offsets[level] = len(edges)
        shape = []
        for s in range(d):
            shape += [n_hat >> level[s], 1 << level[s]]
        blocks = lattice.reshape(shape)
        perm = list(range(0, 2 * d, 2)) + list(range(1, 2 * d, 2))
        rows = blocks.transpose(perm).reshape(-1, 1 << sum(level))
        edges.extend(np.sort(rows, axis=1))
    scheme = DyadicScheme(n_side, n_hat, m, d, offsets, len(edges))
    expected_edges = (2 ** (m + 1) - 1) ** d
    recomputed = sum(
        int(np.prod([n_hat >> ls for ls in lev]))
        for lev in itertools.product(range(m + 1), repeat=d)
    )
    assert scheme.n_edges == expected_edges == recomputed
    h = Hypergraph(n_hat**d, tuple(edges))
    assert h.max_degree == scheme.degree
    return scheme, h


def _axis_runs(j_end: int, m: int):
    """Dyadic runs covering {1..j_end}: list of (level, block), one level at
    most once, read from the binary representation of j_end."""
    runs = []
    start = 0
    for level in range(m, -1, -1):
        if j_end - start >= 1 << level:
            runs.append((level, start >> level))
            start += 1 << level
    return runs


def prefix_cells(scheme: DyadicScheme, prefix):
    """Disjoint dyadic cells whose union is the anchored lattice prefix
    {1..J_1} x ... x {1..J_d}; at most one cell per level vector."""
    prefix = tuple(int(v) for v in prefix)
    if len(prefix) != scheme.d or any(not 1 <= j <= scheme.n_hat for j in prefix):
        raise ValueError("prefix must lie in {1..n_hat}^d")
    per_axis = [_axis_runs(j, scheme.m) for j in prefix]
    return [
        (tuple(lv for lv, _ in combo), tuple(bl for _, bl in combo))
        for combo in itertools.product(*per_axis)
    ]


def max_prefix_error(beta: np.ndarray, b: np.ndarray):
    """Exact max over anchored lattice prefixes of |sum_prefix (b - beta)|,
    via d-dimensional cumulative sums; returns (value, witness J) with J
    1-based."""
    beta = np.asarray(beta, dtype=float)
    b = np.asarray(b, dtype=float)
    if beta.shape != b.shape:
        raise ValueError("beta and b must have the same shape")
    acc = b - beta
    for axis in range(acc.ndim):
        acc = np.cumsum(acc, axis=axis)
    flat = int(np.argmax(np.abs(acc)))
    idx = np.unravel_index(flat, acc.shape)
    return float(abs(acc.ravel()[flat])), tuple(int(i) + 1 for i in idx)


def array_to_bytes(arr: np.ndarray) -> bytes:
    """Flat binary fixture layout: row-major 8-byte floats (shape carried
    out of band)."""
    return np.ascontiguousarray(arr, dtype="<f8").tobytes()


def array_from_bytes(buf: bytes, shape) -> np.ndarray:
    return np.frombuffer(buf, dtype="<f8").reshape(shape).copy()


def reference_prefix_bound(n_side: int, d: int) -> float:
    """Reference prefix-error constant 10*sqrt(d)*(2+log2 N)^((3d+1)/2),
    recorded for comparison only (its derivation is non-constructive)."""
    return 10.0 * math.sqrt(d) * (2.0 + math.log2(max(n_side, 1))) ** ((3 * d + 1) / 2)


def round_array(beta: np.ndarray, engine: str = "beck_fiala", seed: int = 0):
    """Round a fractional array over {1..N}^d to 0/1 via the dyadic
    hypergraph; returns (b, certificate).

    The array is zero-padded to {1..N^}^d, rounded by the chosen engine, and
    unpadded; cells with beta = 0 round to 0.  The certificate carries the
    engine's recomputed per-edge error, the derived anchored-prefix bound
    per_edge_error * (m+1)^d, the engine's guaranteed chain when available,
    and the exact measured prefix error (asserted <= the derived bound).

    Parameters
    ----------
    beta : array with values in [0,1], up to N points per axis
    engine : "beck_fiala" | "partial_coloring"
    seed : used by the partial_coloring engine only
    """
    beta = np.asarray(beta, dtype=float)
    if beta.ndim < 1:
        raise ValueError("beta must have at least one axis")
    d = beta.ndim
    n_side = max(beta.shape)
    scheme, h = build_scheme(n_side, d)
    padded = np.zeros((scheme.n_hat,) * d)
    padded[tuple(slice(0, s) for s in beta.shape)] = beta
    flat = padded.ravel()

    if engine == "beck_fiala":
        res = beck_fiala_round(h, flat)
    elif engine == "partial_coloring":
        res = partial_coloring_round(h, flat, seed)
    else:
        raise ValueError(f"unknown engine {engine!r}")

    b_full = res.b.reshape((scheme.n_hat,) * d)
    assert np.all(b_full[padded == 0.0] == 0.0)
    b = b_full[tuple(slice(0, s) for s in beta.shape)].copy()

    degree = scheme.degree
    prefix_bound = res.achieved_error * degree
    measured, witness = max_prefix_error(beta, b)
    if measured > prefix_bound + 1e-9:
        raise RuntimeError(
            f"prefix decomposition bound violated: {measured} > {prefix_bound}"
        )
    certificate = {
        "engine": res.engine,
        "fallback": res.fallback,
        "per_edge_error": res.achieved_error,
        "degree": degree,
        "prefix_bound": prefix_bound,
        "engine_guarantee": res.guaranteed_bound,
        "guaranteed_prefix_bound": res.guaranteed_bound * degree,
        "measured_prefix_error": measured,
        "witness_prefix": witness,
        "reference_prefix_bound": reference_prefix_bound(n_side, d),
        "n_side": n_side,
        "n_hat": scheme.n_hat,
        "d": d,
    }
    if res.engine == "beck_fiala":
        # chain: measured <= achieved*(m+1)^d <= (2*Delta-1)*(m+1)^d
        assert res.achieved_error <= res.guaranteed_bound + 1e-9
    return b, certificate
