"""Exact balanced optimal transport via the transportation (network) simplex.

The basis is kept as a spanning tree over ``m`` supply nodes and ``n`` demand
nodes (``m + n - 1`` cells, degenerate zero-flow cells included).  Node
potentials come from a traversal of that tree, the entering cell is the most
negative reduced cost, and the leaving cell is found on the unique cycle the
entering cell closes.  Runs of degenerate pivots switch to Bland's rule.
"""

from __future__ import annotations

from collections import deque

import numpy as np

__all__ = ["transport", "TransportError"]


class TransportError(RuntimeError):
    pass


def _initial_basis(a, b, cost):
    """Matrix-minimum rule.  Each step saturates one row or column and
    retires exactly one line, so the chosen cells form a spanning tree."""
    m, n = cost.shape
    supply = a.astype(float).copy()
    demand = b.astype(float).copy()
    row_on = np.ones(m, bool)
    col_on = np.ones(n, bool)
    rows_left, cols_left = m, n
    work = cost.astype(float).copy()
    cells, flows = [], []
    while rows_left + cols_left > 2:
        masked = np.where(row_on[:, None] & col_on[None, :], work, np.inf)
        i, j = np.unravel_index(int(np.argmin(masked)), masked.shape)
        x = min(supply[i], demand[j])
        supply[i] -= x
        demand[j] -= x
        cells.append((int(i), int(j)))
        flows.append(x)
        row_done = supply[i] <= demand[j]
        if rows_left == 1:
            row_done = False
        elif cols_left == 1:
            row_done = True
        if row_done:
            row_on[i] = False
            rows_left -= 1
            demand[j] += supply[i]  # carry rounding residue
            supply[i] = 0.0
        else:
            col_on[j] = False
            cols_left -= 1
            supply[i] += demand[j]
            demand[j] = 0.0
    i = int(np.flatnonzero(row_on)[0])
    j = int(np.flatnonzero(col_on)[0])
    cells.append((i, j))
    flows.append(max(0.0, 0.5 * (supply[i] + demand[j])))
    return cells, flows


def _adjacency(cells, m, n):
    adj = [[] for _ in range(m + n)]
    for k, (i, j) in enumerate(cells):
        adj[i].append((m + j, k))
        adj[m + j].append((i, k))
    return adj


def _potentials(cells, cost, adj, m, n):
    u = np.zeros(m)
    v = np.zeros(n)
    seen = [False] * (m + n)
    seen[0] = True
    queue = deque([0])
    while queue:
        node = queue.popleft()
        for other, k in adj[node]:
            if seen[other]:
                continue
            seen[other] = True
            i, j = cells[k]
            if other >= m:
                v[j] = cost[i, j] - u[i]
            else:
                u[i] = cost[i, j] - v[j]
            queue.append(other)
    if not all(seen):
        raise TransportError("basis is not a spanning tree")
    return u, v


def _tree_path(adj, start, goal):
    """Cell indices along the tree path from ``start`` to ``goal``."""
    parent = {start: None}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        if node == goal:
            break
        for other, k in adj[node]:
            if other not in parent:
                parent[other] = (node, k)
                queue.append(other)
    path = []
    node = goal
    while parent[node] is not None:
        node, k = parent[node]
        path.append(k)
    path.reverse()
    return path


def transport(a, b, cost, max_iter: int | None = None):
    """Solve ``min <F, cost>`` s.t. ``F 1 = a``, ``F^T 1 = b``, ``F >= 0``.

    ``a`` and ``b`` must be non-negative with equal sums.  Returns
    ``(total_cost, flow_matrix)``.
    """
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    cost = np.asarray(cost, float)
    m, n = cost.shape
    if a.shape != (m,) or b.shape != (n,):
        raise ValueError("marginals do not match the cost matrix")
    if (a < 0).any() or (b < 0).any():
        raise ValueError("marginals must be non-negative")
    if not np.isclose(a.sum(), b.sum(), rtol=1e-9, atol=1e-12):
        raise ValueError("unbalanced problem: marginals have different mass")

    cells, flows = _initial_basis(a, b, cost)
    scale = float(np.abs(cost).max()) if cost.size else 0.0
    tol = 1e-12 * (1.0 + scale)
    max_iter = max_iter or 50 * (m + n) * max(m, n) + 1000
    degenerate_run = 0
    for _ in range(max_iter):
        adj = _adjacency(cells, m, n)
        u, v = _potentials(cells, cost, adj, m, n)
        reduced = cost - u[:, None] - v[None, :]
        for i, j in cells:
            reduced[i, j] = 0.0
        if degenerate_run > m + n:
            # Bland: lowest-index improving cell
            cand = np.flatnonzero(reduced.ravel() < -tol)
            if cand.size == 0:
                break
            flat = int(cand[0])
        else:
            flat = int(np.argmin(reduced))
            if reduced.flat[flat] >= -tol:
                break
        ei, ej = divmod(flat, n)
        path = _tree_path(adj, m + ej, ei)
        minus = path[0::2]
        plus = path[1::2]
        theta = min(flows[k] for k in minus)
        leave = min((k for k in minus if flows[k] == theta),
                    key=lambda k: cells[k][0] * n + cells[k][1])
        for k in minus:
            flows[k] -= theta
        for k in plus:
            flows[k] += theta
        degenerate_run = degenerate_run + 1 if theta == 0 else 0
        cells[leave] = (ei, ej)
        flows[leave] = theta
    else:
        raise TransportError("simplex did not converge")

    flow = np.zeros((m, n))
    for (i, j), f in zip(cells, flows):
        flow[i, j] = max(f, 0.0)
    total = float(np.sum(flow * cost))
    return total, flow
