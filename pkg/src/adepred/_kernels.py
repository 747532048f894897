"""Compiled tree-growing and prediction kernels.

One grower serves both tree families: criterion 0 splits on weighted gini
(binary labels, leaf = positive-class fraction), criterion 1 on weighted
squared error (real targets, leaf = mean). Trees are encoded as flat parallel
arrays; a leaf has feature -1.

Determinism contract: the kernel seeds numpy's generator itself, so growing
tree t with seed s always yields the same arrays, regardless of caller state
or of which process runs it. Split scanning uses the sum-of-squares proxy with
a strict > comparison over features in ascending index order and thresholds in
ascending value order, which realizes the tie-break rule: lowest column first,
then lowest threshold.
"""

from __future__ import annotations

import numpy as np
from numba import njit

GINI = 0
MSE = 1


@njit(cache=True)
def _node_stats(y, w, order, start, end, criterion):
    """Total weight, leaf value, and impurity of order[start:end]."""
    w_sum = 0.0
    s1 = 0.0
    for k in range(start, end):
        i = order[k]
        w_sum += w[i]
        s1 += w[i] * y[i]
    mean = s1 / w_sum
    if criterion == GINI:
        impurity = 2.0 * mean * (1.0 - mean)
    else:
        sq = 0.0
        for k in range(start, end):
            i = order[k]
            d = y[i] - mean
            sq += w[i] * d * d
        impurity = sq / w_sum
    if impurity < 0.0:
        impurity = 0.0
    return w_sum, mean, impurity


@njit(cache=True)
def _proxy(s1, w_sum, criterion):
    """Per-side score whose sum is maximized by the best split."""
    if criterion == GINI:
        s0 = w_sum - s1
        return (s1 * s1 + s0 * s0) / w_sum
    return s1 * s1 / w_sum


@njit(cache=True)
def grow_tree(
    X,
    y,
    w,
    criterion,
    max_depth,
    min_samples_leaf,
    m_try,
    bootstrap,
    tree_seed,
    feature,
    threshold,
    left,
    right,
    value,
    importance,
):
    """Grow one tree; returns the number of nodes written.

    Output arrays must be preallocated to capacity 2n+1. `importance`
    (length p) accumulates (node weight / root weight) * impurity decrease
    per split feature; the caller zeroes it beforehand. max_depth < 0 means
    unlimited. m_try = p disables feature sampling.
    """
    n, p = X.shape
    np.random.seed(tree_seed)

    if bootstrap:
        order = np.random.randint(0, n, n)
    else:
        order = np.arange(n)

    feat_pool = np.arange(p)
    buf = np.empty(n, dtype=np.int64)
    vals = np.empty(n, dtype=np.float64)
    val_order = np.empty(n, dtype=np.int64)

    cap = feature.shape[0]
    stack_node = np.empty(cap, dtype=np.int64)
    stack_start = np.empty(cap, dtype=np.int64)
    stack_end = np.empty(cap, dtype=np.int64)
    stack_depth = np.empty(cap, dtype=np.int64)

    n_nodes = 1
    top = 0
    stack_node[0] = 0
    stack_start[0] = 0
    stack_end[0] = n
    stack_depth[0] = 0

    w_root, _, _ = _node_stats(y, w, order, 0, n, criterion)

    while top >= 0:
        node = stack_node[top]
        start = stack_start[top]
        end = stack_end[top]
        depth = stack_depth[top]
        top -= 1

        n_node = end - start
        w_node, mean, impurity = _node_stats(y, w, order, start, end, criterion)
        value[node] = mean
        feature[node] = -1
        threshold[node] = 0.0
        left[node] = -1
        right[node] = -1

        if impurity <= 1e-12:
            continue
        if n_node < 2 * min_samples_leaf:
            continue
        if max_depth >= 0 and depth >= max_depth:
            continue

        # Candidate features for this node, ascending so the proxy scan's
        # strict > keeps the lowest winning column on ties.
        if m_try < p:
            for i in range(m_try):
                j = i + np.random.randint(0, p - i)
                tmp = feat_pool[i]
                feat_pool[i] = feat_pool[j]
                feat_pool[j] = tmp
            cand = np.sort(feat_pool[:m_try])
        else:
            cand = feat_pool

        best_proxy = -np.inf
        best_feat = -1
        best_thr = 0.0
        w_total = w_node
        s1_total = mean * w_node

        for ci in range(cand.shape[0]):
            f = cand[ci]
            for k in range(start, end):
                vals[k - start] = X[order[k], f]
            vo = np.argsort(vals[:n_node])

            w_left = 0.0
            s1_left = 0.0
            for k in range(n_node - 1):
                i = order[start + vo[k]]
                w_left += w[i]
                s1_left += w[i] * y[i]
                v_lo = vals[vo[k]]
                v_hi = vals[vo[k + 1]]
                if v_hi <= v_lo:
                    continue
                n_left = k + 1
                n_right = n_node - n_left
                if n_left < min_samples_leaf or n_right < min_samples_leaf:
                    continue
                proxy = _proxy(s1_left, w_left, criterion) + _proxy(
                    s1_total - s1_left, w_total - w_left, criterion
                )
                if proxy > best_proxy:
                    thr = 0.5 * (v_lo + v_hi)
                    if thr >= v_hi:
                        thr = v_lo
                    best_proxy = proxy
                    best_feat = f
                    best_thr = thr

        if best_feat < 0:
            continue

        # Stable partition: left block keeps x <= threshold.
        n_left = 0
        for k in range(start, end):
            if X[order[k], best_feat] <= best_thr:
                buf[n_left] = order[k]
                n_left += 1
        n_right = 0
        for k in range(start, end):
            if X[order[k], best_feat] > best_thr:
                buf[n_left + n_right] = order[k]
                n_right += 1
        for k in range(n_node):
            order[start + k] = buf[k]

        w_l, _, imp_l = _node_stats(y, w, order, start, start + n_left, criterion)
        w_r, _, imp_r = _node_stats(y, w, order, start + n_left, end, criterion)
        gain = impurity - (w_l * imp_l + w_r * imp_r) / w_node
        if gain < 0.0:
            gain = 0.0
        importance[best_feat] += (w_node / w_root) * gain

        left_id = n_nodes
        right_id = n_nodes + 1
        n_nodes += 2
        feature[node] = best_feat
        threshold[node] = best_thr
        left[node] = left_id
        right[node] = right_id

        top += 1
        stack_node[top] = right_id
        stack_start[top] = start + n_left
        stack_end[top] = end
        stack_depth[top] = depth + 1
        top += 1
        stack_node[top] = left_id
        stack_start[top] = start
        stack_end[top] = start + n_left
        stack_depth[top] = depth + 1

    return n_nodes


@njit(cache=True)
def predict_tree(X, feature, threshold, left, right, value, out):
    """Write each row's leaf value into out."""
    n = X.shape[0]
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = value[node]
