"""Hot numeric kernels, each with a numba and a pure-numpy implementation.

The public functions at the bottom of this module dispatch on
:func:`evoweights._accel.use_numba`. Both paths take the same arguments
and are expected to agree: exactly for the rank and tree kernels, and to
floating point round-off for logistic gradient descent (the summation
order differs). AUROC has only the numpy path; it is sort bound and
numpy sorts faster.
"""
from __future__ import annotations

import numpy as np

from ._accel import njit, use_numba

# ---------------------------------------------------------------------------
# nondominated sorting (all objectives minimized)


@njit
def _nondominated_ranks_nb(obj):
    n, m = obj.shape
    dominates = np.zeros((n, n), dtype=np.bool_)
    dom_count = np.zeros(n, dtype=np.int64)
    for p in range(n):
        for q in range(p + 1, n):
            p_better = False
            q_better = False
            for k in range(m):
                a = obj[p, k]
                b = obj[q, k]
                if a < b:
                    p_better = True
                elif b < a:
                    q_better = True
            if p_better and not q_better:
                dominates[p, q] = True
                dom_count[q] += 1
            elif q_better and not p_better:
                dominates[q, p] = True
                dom_count[p] += 1

    ranks = np.full(n, -1, dtype=np.int64)
    current = np.empty(n, dtype=np.int64)
    nxt = np.empty(n, dtype=np.int64)
    n_cur = 0
    for p in range(n):
        if dom_count[p] == 0:
            current[n_cur] = p
            n_cur += 1
    rank = 0
    while n_cur > 0:
        n_nxt = 0
        for i in range(n_cur):
            p = current[i]
            ranks[p] = rank
            for q in range(n):
                if dominates[p, q]:
                    dom_count[q] -= 1
                    if dom_count[q] == 0:
                        nxt[n_nxt] = q
                        n_nxt += 1
        for i in range(n_nxt):
            current[i] = nxt[i]
        n_cur = n_nxt
        rank += 1
    return ranks


def _nondominated_ranks_np(obj):
    n = obj.shape[0]
    le = np.all(obj[:, None, :] <= obj[None, :, :], axis=2)
    lt = np.any(obj[:, None, :] < obj[None, :, :], axis=2)
    dom = le & lt  # dom[p, q]: p dominates q
    ranks = np.full(n, -1, dtype=np.int64)
    remaining = np.ones(n, dtype=bool)
    rank = 0
    while remaining.any():
        dominated = dom[remaining][:, remaining].any(axis=0)
        idx = np.flatnonzero(remaining)[~dominated]
        ranks[idx] = rank
        remaining[idx] = False
        rank += 1
    return ranks


# ---------------------------------------------------------------------------
# AUROC as a rank statistic


def _auc_np(y, scores):
    _, inverse, counts = np.unique(scores, return_inverse=True, return_counts=True)
    upper = np.cumsum(counts).astype(np.float64)
    mid_rank = upper - (counts - 1) / 2.0
    pos = y == 1
    n_pos = int(pos.sum())
    n_neg = y.shape[0] - n_pos
    u = mid_rank[inverse[pos]].sum() - n_pos * (n_pos + 1) / 2.0
    return u / (float(n_pos) * float(n_neg))


# ---------------------------------------------------------------------------
# weighted logistic regression, full-batch gradient descent


@njit
def _sigmoid_scalar(z):
    if z >= 0.0:
        return 1.0 / (1.0 + np.exp(-z))
    e = np.exp(z)
    return e / (1.0 + e)


@njit
def _logistic_gd_nb(X, y, w, learning_rate, iterations, l2, coef0, intercept0):
    n, d = X.shape
    coef = coef0.copy()
    intercept = intercept0
    grad = np.zeros(d)
    wsum = 0.0
    for i in range(n):
        wsum += w[i]
    for _ in range(iterations):
        grad[:] = 0.0
        g0 = 0.0
        for i in range(n):
            if w[i] == 0.0:
                continue
            z = intercept
            for k in range(d):
                z += X[i, k] * coef[k]
            r = w[i] * (_sigmoid_scalar(z) - y[i])
            g0 += r
            for k in range(d):
                grad[k] += r * X[i, k]
        for k in range(d):
            coef[k] -= learning_rate * (grad[k] / wsum + l2 * coef[k])
        intercept -= learning_rate * g0 / wsum
    return coef, intercept


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    e = np.exp(z[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _logistic_gd_np(X, y, w, learning_rate, iterations, l2, coef0, intercept0):
    coef = coef0.copy()
    intercept = intercept0
    wsum = w.sum()
    for _ in range(iterations):
        r = w * (_sigmoid(X @ coef + intercept) - y)
        coef = coef - learning_rate * ((X.T @ r) / wsum + l2 * coef)
        intercept -= learning_rate * r.sum() / wsum
    return coef, intercept


@njit
def _sigmoid_nb(z):
    out = np.empty_like(z)
    for i in range(z.shape[0]):
        out[i] = _sigmoid_scalar(z[i])
    return out


# ---------------------------------------------------------------------------
# weighted CART tree (Gini), grown breadth-agnostic from an explicit stack
#
# Node ids are handed out in pop order, and keys[node] decides which features
# that node may split on, so both backends build the same tree.


@njit
def _grow_tree_nb(X, y, w, max_depth, min_weight, n_try, keys, root_value):
    n, d = X.shape
    max_nodes = keys.shape[0]
    feature = np.full(max_nodes, -1, dtype=np.int64)
    threshold = np.zeros(max_nodes)
    left = np.full(max_nodes, -1, dtype=np.int64)
    right = np.full(max_nodes, -1, dtype=np.int64)
    value = np.zeros(max_nodes)

    idx = np.arange(n)
    buf = np.empty(n, dtype=np.int64)
    st_node = np.empty(max_nodes, dtype=np.int64)
    st_start = np.empty(max_nodes, dtype=np.int64)
    st_end = np.empty(max_nodes, dtype=np.int64)
    st_depth = np.empty(max_nodes, dtype=np.int64)
    st_parent = np.empty(max_nodes)
    sp = 0
    st_node[0] = 0
    st_start[0] = 0
    st_end[0] = n
    st_depth[0] = 0
    st_parent[0] = root_value
    sp = 1
    n_nodes = 1

    while sp > 0:
        sp -= 1
        node = st_node[sp]
        s = st_start[sp]
        e = st_end[sp]
        depth = st_depth[sp]
        parent_value = st_parent[sp]

        W = 0.0
        W1 = 0.0
        for t in range(s, e):
            r = idx[t]
            W += w[r]
            W1 += w[r] * y[r]
        if W > 0.0:
            value[node] = W1 / W
        else:
            value[node] = parent_value
        if (depth >= max_depth or W <= 0.0 or W1 <= 0.0 or W1 >= W
                or W < 2.0 * min_weight or n_nodes + 2 > max_nodes):
            continue

        W0 = W - W1
        parent_term = (W1 * W1 + W0 * W0) / W
        best_gain = 1e-12 * W
        best_f = -1
        best_thr = 0.0
        feats = np.argsort(keys[node], kind="mergesort")[:n_try]
        m = e - s
        xs = np.empty(m)
        for f in feats:
            for t in range(m):
                xs[t] = X[idx[s + t], f]
            order = np.argsort(xs, kind="mergesort")
            wl = 0.0
            w1l = 0.0
            for t in range(m - 1):
                r = idx[s + order[t]]
                wl += w[r]
                w1l += w[r] * y[r]
                x_here = xs[order[t]]
                x_next = xs[order[t + 1]]
                if x_here == x_next:
                    continue
                wr = W - wl
                if wl < min_weight or wr < min_weight or wl <= 0.0 or wr <= 0.0:
                    continue
                w0l = wl - w1l
                w1r = W1 - w1l
                w0r = wr - w1r
                gain = (w1l * w1l + w0l * w0l) / wl + (w1r * w1r + w0r * w0r) / wr - parent_term
                if gain > best_gain:
                    best_gain = gain
                    best_f = f
                    best_thr = 0.5 * (x_here + x_next)
        if best_f < 0:
            continue

        # stable partition of idx[s:e]
        nl = 0
        for t in range(s, e):
            if X[idx[t], best_f] <= best_thr:
                buf[nl] = idx[t]
                nl += 1
        k = nl
        for t in range(s, e):
            if X[idx[t], best_f] > best_thr:
                buf[k] = idx[t]
                k += 1
        for t in range(m):
            idx[s + t] = buf[t]

        feature[node] = best_f
        threshold[node] = best_thr
        lid = n_nodes
        rid = n_nodes + 1
        n_nodes += 2
        left[node] = lid
        right[node] = rid
        # right pushed first so the left child pops first
        st_node[sp] = rid
        st_start[sp] = s + nl
        st_end[sp] = e
        st_depth[sp] = depth + 1
        st_parent[sp] = value[node]
        sp += 1
        st_node[sp] = lid
        st_start[sp] = s
        st_end[sp] = s + nl
        st_depth[sp] = depth + 1
        st_parent[sp] = value[node]
        sp += 1

    return (feature[:n_nodes], threshold[:n_nodes], left[:n_nodes],
            right[:n_nodes], value[:n_nodes])


def _grow_tree_np(X, y, w, max_depth, min_weight, n_try, keys, root_value):
    max_nodes = keys.shape[0]
    feature = np.full(max_nodes, -1, dtype=np.int64)
    threshold = np.zeros(max_nodes)
    left = np.full(max_nodes, -1, dtype=np.int64)
    right = np.full(max_nodes, -1, dtype=np.int64)
    value = np.zeros(max_nodes)

    stack = [(0, np.arange(X.shape[0]), 0, root_value)]
    n_nodes = 1
    while stack:
        node, rows, depth, parent_value = stack.pop()
        wn = w[rows]
        wy = wn * y[rows]
        # cumsum keeps the summation sequential, matching the compiled path
        W = float(np.cumsum(wn)[-1]) if rows.size else 0.0
        W1 = float(np.cumsum(wy)[-1]) if rows.size else 0.0
        value[node] = W1 / W if W > 0.0 else parent_value
        if (depth >= max_depth or W <= 0.0 or W1 <= 0.0 or W1 >= W
                or W < 2.0 * min_weight or n_nodes + 2 > max_nodes):
            continue

        W0 = W - W1
        parent_term = (W1 * W1 + W0 * W0) / W
        best_gain = 1e-12 * W
        best_f = -1
        best_thr = 0.0
        for f in np.argsort(keys[node], kind="mergesort")[:n_try]:
            xs = X[rows, f]
            order = np.argsort(xs, kind="mergesort")
            xo = xs[order]
            wl = np.cumsum(wn[order])[:-1]
            w1l = np.cumsum(wy[order])[:-1]
            wr = W - wl
            ok = (xo[:-1] != xo[1:]) & (wl >= min_weight) & (wr >= min_weight) & (wl > 0) & (wr > 0)
            if not ok.any():
                continue
            cand = np.flatnonzero(ok)
            wl_c, w1l_c, wr_c = wl[cand], w1l[cand], wr[cand]
            w0l = wl_c - w1l_c
            w1r = W1 - w1l_c
            w0r = wr_c - w1r
            gain = (w1l_c * w1l_c + w0l * w0l) / wl_c + (w1r * w1r + w0r * w0r) / wr_c - parent_term
            j = int(np.argmax(gain))
            if gain[j] > best_gain:
                best_gain = gain[j]
                best_f = int(f)
                t = cand[j]
                best_thr = 0.5 * (xo[t] + xo[t + 1])
        if best_f < 0:
            continue

        go_left = X[rows, best_f] <= best_thr
        feature[node] = best_f
        threshold[node] = best_thr
        lid, rid = n_nodes, n_nodes + 1
        n_nodes += 2
        left[node] = lid
        right[node] = rid
        stack.append((rid, rows[~go_left], depth + 1, value[node]))
        stack.append((lid, rows[go_left], depth + 1, value[node]))

    return (feature[:n_nodes], threshold[:n_nodes], left[:n_nodes],
            right[:n_nodes], value[:n_nodes])


@njit
def _tree_predict_nb(X, feature, threshold, left, right, value):
    n = X.shape[0]
    out = np.empty(n)
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = value[node]
    return out


def _tree_predict_np(X, feature, threshold, left, right, value):
    rows = np.arange(X.shape[0])
    node = np.zeros(X.shape[0], dtype=np.int64)
    f = feature[node]
    internal = f >= 0
    while internal.any():
        go_left = X[rows, np.where(internal, f, 0)] <= threshold[node]
        node = np.where(internal, np.where(go_left, left[node], right[node]), node)
        f = feature[node]
        internal = f >= 0
    return value[node]


# ---------------------------------------------------------------------------
# dispatch


def nondominated_ranks(obj: np.ndarray) -> np.ndarray:
    """Pareto rank of every row of ``obj`` (all columns minimized), 0 = best."""
    obj = np.ascontiguousarray(obj, dtype=np.float64)
    if obj.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    if use_numba():
        return _nondominated_ranks_nb(obj)
    return _nondominated_ranks_np(obj)


def auc_rank_statistic(y: np.ndarray, scores: np.ndarray) -> float:
    # numpy's sort beats numba's here, so both backends share this path
    y = np.ascontiguousarray(y, dtype=np.int64)
    scores = np.ascontiguousarray(scores, dtype=np.float64)
    return float(_auc_np(y, scores))


def logistic_gd(X, y, w, learning_rate: float, iterations: int, l2: float,
                coef0=None, intercept0: float = 0.0):
    """Gradient descent on ``sum(w * logloss) / sum(w) + l2 / 2 * |coef|^2`` (intercept unpenalized)."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    coef0 = np.zeros(X.shape[1]) if coef0 is None else np.array(coef0, dtype=np.float64)
    args = (X, y, w, float(learning_rate), int(iterations), float(l2), coef0, float(intercept0))
    if use_numba():
        coef, intercept = _logistic_gd_nb(*args)
    else:
        coef, intercept = _logistic_gd_np(*args)
    return np.asarray(coef), float(intercept)


def sigmoid(z: np.ndarray) -> np.ndarray:
    z = np.ascontiguousarray(z, dtype=np.float64)
    if use_numba():
        return _sigmoid_nb(z)
    return _sigmoid(z)


def grow_tree(X, y, w, max_depth: int, min_weight: float, n_try: int, keys, root_value: float):
    args = (
        np.ascontiguousarray(X, dtype=np.float64),
        np.ascontiguousarray(y, dtype=np.float64),
        np.ascontiguousarray(w, dtype=np.float64),
        int(max_depth), float(min_weight), int(n_try),
        np.ascontiguousarray(keys, dtype=np.float64), float(root_value),
    )
    if use_numba():
        return _grow_tree_nb(*args)
    return _grow_tree_np(*args)


def tree_predict(X, tree) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=np.float64)
    if use_numba():
        return _tree_predict_nb(X, *tree)
    return _tree_predict_np(X, *tree)
