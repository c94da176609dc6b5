"""Numba kernels for tree growing and prediction.

The tree grower is a level-wise exact greedy search: every feature is kept
globally presorted once per model (NaN rows last), and each level makes one
pass over each feature's sorted order, accumulating per-node gradient and
hessian prefix sums. Missing values are routed to whichever child maximizes
the split gain (learned default direction). All loops are serial and all
accumulation orders fixed, so results are bit-reproducible.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def build_tree(
    X,
    g,
    h,
    node_of,
    sorted_idx,
    nan_counts,
    feats,
    eta,
    reg_lambda,
    gamma,
    min_child_weight,
    max_depth,
):
    """Grow one regression tree on the rows with ``node_of == 0``.

    node_of : int32[n], 0 for sampled rows, -1 otherwise (mutated in place).
    sorted_idx : int32[p, n] global per-feature row order, NaN rows last.
    feats : int64[:] feature columns available to this tree.

    Returns (n_nodes, feature, threshold, missing_left, left, right,
    is_leaf, leaf_value). A tree that cannot place a single split is the
    single leaf 0.0 and contributes nothing to the ensemble.
    """
    n = X.shape[0]
    cap = 2 * n + 3
    full = 2 ** (max_depth + 1) - 1 if max_depth < 30 else cap
    max_nodes = min(cap, full)
    if max_nodes < 3:
        max_nodes = 3

    feature = np.full(max_nodes, -1, dtype=np.int32)
    threshold = np.full(max_nodes, np.nan, dtype=np.float64)
    missing_left = np.zeros(max_nodes, dtype=np.bool_)
    left = np.full(max_nodes, -1, dtype=np.int32)
    right = np.full(max_nodes, -1, dtype=np.int32)
    is_leaf = np.zeros(max_nodes, dtype=np.bool_)
    leaf_value = np.zeros(max_nodes, dtype=np.float64)

    node_g = np.zeros(max_nodes, dtype=np.float64)
    node_h = np.zeros(max_nodes, dtype=np.float64)
    best_gain = np.zeros(max_nodes, dtype=np.float64)
    best_feat = np.full(max_nodes, -1, dtype=np.int32)
    best_thr = np.zeros(max_nodes, dtype=np.float64)
    best_miss_left = np.zeros(max_nodes, dtype=np.bool_)
    miss_g = np.zeros(max_nodes, dtype=np.float64)
    miss_h = np.zeros(max_nodes, dtype=np.float64)
    run_g = np.zeros(max_nodes, dtype=np.float64)
    run_h = np.zeros(max_nodes, dtype=np.float64)
    prev_val = np.zeros(max_nodes, dtype=np.float64)
    has_prev = np.zeros(max_nodes, dtype=np.bool_)

    n_sampled = 0
    for r in range(n):
        if node_of[r] == 0:
            node_g[0] += g[r]
            node_h[0] += h[r]
            n_sampled += 1
    if n_sampled == 0:
        is_leaf[0] = True
        leaf_value[0] = 0.0
        return (
            1,
            feature[:1],
            threshold[:1],
            missing_left[:1],
            left[:1],
            right[:1],
            is_leaf[:1],
            leaf_value[:1],
        )

    n_nodes = 1
    level_start = 0
    level_end = 1
    depth = 0
    while level_start < level_end:
        can_split = depth < max_depth and n_nodes + 2 <= max_nodes
        if can_split:
            for nd in range(level_start, level_end):
                best_gain[nd] = 0.0
                best_feat[nd] = -1
            for fi in range(feats.shape[0]):
                f = feats[fi]
                n_valid = n - nan_counts[f]
                for nd in range(level_start, level_end):
                    miss_g[nd] = 0.0
                    miss_h[nd] = 0.0
                    run_g[nd] = 0.0
                    run_h[nd] = 0.0
                    has_prev[nd] = False
                for i in range(n_valid, n):
                    r = sorted_idx[f, i]
                    nd = node_of[r]
                    if level_start <= nd < level_end:
                        miss_g[nd] += g[r]
                        miss_h[nd] += h[r]
                for i in range(n_valid):
                    r = sorted_idx[f, i]
                    nd = node_of[r]
                    if nd < level_start or nd >= level_end:
                        continue
                    v = X[r, f]
                    if has_prev[nd] and v > prev_val[nd]:
                        gl = run_g[nd]
                        hl = run_h[nd]
                        gt = node_g[nd]
                        ht = node_h[nd]
                        parent = gt * gt / (ht + reg_lambda)
                        # missing routed left
                        gl1 = gl + miss_g[nd]
                        hl1 = hl + miss_h[nd]
                        gr1 = gt - gl1
                        hr1 = ht - hl1
                        gain_l = -1.0
                        if hl1 >= min_child_weight and hr1 >= min_child_weight:
                            gain_l = (
                                0.5
                                * (
                                    gl1 * gl1 / (hl1 + reg_lambda)
                                    + gr1 * gr1 / (hr1 + reg_lambda)
                                    - parent
                                )
                                - gamma
                            )
                        # missing routed right
                        gr2 = gt - gl
                        hr2 = ht - hl
                        gain_r = -1.0
                        if hl >= min_child_weight and hr2 >= min_child_weight:
                            gain_r = (
                                0.5
                                * (
                                    gl * gl / (hl + reg_lambda)
                                    + gr2 * gr2 / (hr2 + reg_lambda)
                                    - parent
                                )
                                - gamma
                            )
                        if gain_l >= gain_r:
                            gain = gain_l
                            to_left = True
                        else:
                            gain = gain_r
                            to_left = False
                        if gain > best_gain[nd]:
                            best_gain[nd] = gain
                            best_feat[nd] = f
                            best_thr[nd] = 0.5 * (prev_val[nd] + v)
                            best_miss_left[nd] = to_left
                    run_g[nd] += g[r]
                    run_h[nd] += h[r]
                    prev_val[nd] = v
                    has_prev[nd] = True

        # finalize this level: create children or leaves
        for nd in range(level_start, level_end):
            if can_split and best_feat[nd] >= 0 and n_nodes + 2 <= max_nodes:
                feature[nd] = best_feat[nd]
                threshold[nd] = best_thr[nd]
                missing_left[nd] = best_miss_left[nd]
                left[nd] = n_nodes
                right[nd] = n_nodes + 1
                n_nodes += 2
            else:
                is_leaf[nd] = True
                if nd == 0:
                    leaf_value[nd] = 0.0  # no usable split anywhere: inert tree
                else:
                    leaf_value[nd] = -eta * node_g[nd] / (node_h[nd] + reg_lambda)

        # route rows of split nodes to their children
        for r in range(n):
            nd = node_of[r]
            if nd < level_start or nd >= level_end:
                continue
            if is_leaf[nd]:
                node_of[r] = -1
                continue
            v = X[r, feature[nd]]
            if np.isnan(v):
                child = left[nd] if missing_left[nd] else right[nd]
            elif v < threshold[nd]:
                child = left[nd]
            else:
                child = right[nd]
            node_of[r] = child
            node_g[child] += g[r]
            node_h[child] += h[r]

        level_start = level_end
        level_end = n_nodes
        depth += 1

    return (
        n_nodes,
        feature[:n_nodes],
        threshold[:n_nodes],
        missing_left[:n_nodes],
        left[:n_nodes],
        right[:n_nodes],
        is_leaf[:n_nodes],
        leaf_value[:n_nodes],
    )


@njit(cache=True)
def add_tree_predictions(
    X, feature, threshold, missing_left, left, right, is_leaf, leaf_value, root, out
):
    """Add one tree's leaf values (global node ids, tree rooted at ``root``)."""
    for r in range(X.shape[0]):
        nd = root
        while not is_leaf[nd]:
            v = X[r, feature[nd]]
            if np.isnan(v):
                nd = left[nd] if missing_left[nd] else right[nd]
            elif v < threshold[nd]:
                nd = left[nd]
            else:
                nd = right[nd]
        out[r] += leaf_value[nd]


@njit(cache=True)
def margins_upto(
    X,
    feature,
    threshold,
    missing_left,
    left,
    right,
    is_leaf,
    leaf_value,
    offsets,
    base_score,
    n_rounds,
    out,
):
    """Margin after the first ``n_rounds`` trees, accumulated tree by tree."""
    for r in range(X.shape[0]):
        out[r] = base_score
    for t in range(n_rounds):
        add_tree_predictions(
            X, feature, threshold, missing_left, left, right, is_leaf, leaf_value, offsets[t], out
        )


@njit(cache=True)
def staged_margins_kernel(
    X,
    feature,
    threshold,
    missing_left,
    left,
    right,
    is_leaf,
    leaf_value,
    offsets,
    base_score,
    out,
):
    """Cumulative margins for every round: out[t] = out[t-1] + tree t."""
    n_rounds = out.shape[0]
    n = X.shape[0]
    for r in range(n):
        out[0, r] = base_score
    for t in range(n_rounds):
        if t > 0:
            for r in range(n):
                out[t, r] = out[t - 1, r]
        add_tree_predictions(
            X,
            feature,
            threshold,
            missing_left,
            left,
            right,
            is_leaf,
            leaf_value,
            offsets[t],
            out[t],
        )
