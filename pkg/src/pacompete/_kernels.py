"""Compiled inner loops shared by the graph and urn simulators.

Every graph step consumes exactly ``m + 1`` uniforms: ``m`` for the
neighbour draws and one for the new vertex colour.  The urn chain needs only
two per step.  Colours are coded 1 (red) and
2 (blue) so that ``shift``/``mult`` arrays can be indexed by type directly.
"""

import numpy as np
from numba import njit

REBUILD_EVERY = 1 << 16


@njit(cache=True)
def fw_add(tree, i, delta):
    i += 1
    n = tree.shape[0]
    while i < n:
        tree[i] += delta
        i += i & -i


@njit(cache=True)
def fw_find(tree, target):
    """Largest index ``pos`` with prefix(pos) <= target, i.e. the sampled slot."""
    cap = tree.shape[0] - 1
    pos = 0
    step = cap
    while step > 0:
        nxt = pos + step
        if nxt <= cap and tree[nxt] <= target:
            pos = nxt
            target -= tree[nxt]
        step >>= 1
    return pos


@njit(cache=True)
def fw_build(weights, tree):
    tree[:] = 0.0
    cap = tree.shape[0] - 1
    for i in range(weights.shape[0]):
        tree[i + 1] += weights[i]
    for i in range(1, cap + 1):
        j = i + (i & -i)
        if j <= cap:
            tree[j] += tree[i]


@njit(cache=True)
def vertex_weights(deg, typ, nv, shift, mult):
    w = np.zeros(nv)
    for v in range(nv):
        t = typ[v]
        w[v] = (deg[v] + shift[t]) * mult[t]
    return w


@njit(cache=True, nogil=True)
def advance_graph(deg, typ, tree, agg, nv, m, pk, shift, mult, uniforms, since_rebuild):
    """Run ``uniforms.shape[0]`` attachment steps in place.

    ``agg`` holds ``(X, Y, A, B)``.  Returns ``(nv, since_rebuild)``.
    """
    cap = tree.shape[0] - 1
    chosen = np.empty(m, np.int64)
    for s in range(uniforms.shape[0]):
        total = tree[cap]
        k = 0
        # all m picks use the frozen weights of the current graph
        for j in range(m):
            v = fw_find(tree, uniforms[s, j] * total)
            if v >= nv:
                v = nv - 1
            chosen[j] = v
            if typ[v] == 1:
                k += 1
        red = uniforms[s, m] < pk[k]
        for j in range(m):
            v = chosen[j]
            deg[v] += 1
            fw_add(tree, v, mult[typ[v]])
        agg[0] += k
        agg[1] += m - k
        t = 1 if red else 2
        deg[nv] = m
        typ[nv] = t
        fw_add(tree, nv, (m + shift[t]) * mult[t])
        if red:
            agg[0] += m
            agg[2] += 1
        else:
            agg[1] += m
            agg[3] += 1
        nv += 1
        since_rebuild += 1
        if since_rebuild >= REBUILD_EVERY:
            fw_build(vertex_weights(deg, typ, nv, shift, mult), tree)
            since_rebuild = 0
    return nv, since_rebuild


@njit(cache=True)
def binomial_inverse(u, m, r):
    """Smallest ``k`` with ``P(Bin(m, r) <= k) > u``."""
    if r >= 1.0:
        return m
    if r <= 0.0:
        return 0
    prob = (1.0 - r) ** m
    cdf = prob
    k = 0
    ratio = r / (1.0 - r)
    while u >= cdf and k < m:
        prob *= (m - k) / (k + 1) * ratio
        k += 1
        cdf += prob
    return k


@njit(cache=True, nogil=True)
def advance_urn(agg, m, pk, phi, uniforms):
    """Aggregate chain ``(X, Y, A, B)`` of the multiplicative model with alpha = 0.

    Two uniforms per step: one drawn through the binomial inverse CDF for the
    red-pick count, one for the colour of the new vertex.
    """
    X, Y, A, B = agg[0], agg[1], agg[2], agg[3]
    for s in range(uniforms.shape[0]):
        k = binomial_inverse(uniforms[s, 0], m, X / (X + phi * Y))
        X += k
        Y += m - k
        if uniforms[s, 1] < pk[k]:
            X += m
            A += 1
        else:
            Y += m
            B += 1
    agg[0], agg[1], agg[2], agg[3] = X, Y, A, B
