"""Timing of the structured construction against the dense contour oracle.

The dense route solves ``(T - z) X = I`` at every node of the same accepted
quadrature rule, so both routes integrate to the same tolerance.  At large
``N`` a full dense run takes minutes; ``dense_nodes`` limits it to an evenly
spaced subset of nodes and the total is extrapolated linearly in the node count
(the per-node cost does not depend on the node).  Rows say which was done.
"""
from __future__ import annotations

import time
from typing import Optional

import numpy as np

from .generators import random_instance
from .idempotent import half_plane_idempotent

__all__ = ["BENCH_COLUMNS", "bench_one", "dense_rule_projector"]

BENCH_COLUMNS = ["N", "R", "seed", "xi", "nodes", "structured_s", "dense_nodes_timed",
                 "dense_per_node_s", "dense_s", "dense_extrapolated", "ratio", "max_abs_diff"]


def dense_rule_projector(T, nodes, weights) -> np.ndarray:
    """``-(1/2 pi i) sum_i w_i (T - z_i)^{-1}`` by dense LU at each node."""
    M = T.dense()
    N = M.shape[0]
    I = np.eye(N, dtype=complex)
    acc = np.zeros((N, N), dtype=complex)
    for z, w in zip(nodes, weights):
        acc += w * np.linalg.solve(M - z * I, I)
    return -acc / (2j * np.pi)


def bench_one(N: int, R: int, seed: int = 0, tol: float = 1e-11, dense_nodes: Optional[int] = 4,
              T=None, xi: Optional[float] = None) -> dict:
    """One benchmark row; ``dense_nodes=None`` times the dense route on every node."""
    if T is None:
        T, xi = random_instance(N, R, seed)
    t0 = time.perf_counter()
    S = half_plane_idempotent(T, xi, "plus", tol, check=False, constants=False)
    t_struct = time.perf_counter() - t0
    rule = S.rule
    if rule is None:
        nodes = np.zeros(0, complex)
        weights = np.zeros(0, complex)
    else:
        nodes, weights = rule.nodes, rule.weights
    total = nodes.size
    if dense_nodes is None or dense_nodes >= total:
        sel = np.arange(total)
    else:
        sel = np.unique(np.linspace(0, total - 1, max(dense_nodes, 1)).round().astype(int))
    t0 = time.perf_counter()
    part = dense_rule_projector(T, nodes[sel], weights[sel])
    t_dense_part = time.perf_counter() - t0
    per_node = t_dense_part / sel.size if sel.size else 0.0
    full = sel.size == total
    diff = float("nan")
    if full and total:
        # the dense route integrates the whole resolvent, so the diagonal part is already in it
        diff = float(np.max(np.abs(part - S.J), initial=0.0))
    t_dense = t_dense_part if full else per_node * total
    return {"N": N, "R": T.R, "seed": seed, "xi": float(xi), "nodes": int(total),
            "structured_s": t_struct, "dense_nodes_timed": int(sel.size), "dense_per_node_s": per_node,
            "dense_s": t_dense, "dense_extrapolated": not full,
            "ratio": t_dense / t_struct if t_struct > 0 else float("inf"), "max_abs_diff": diff}
