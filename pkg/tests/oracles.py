"""Independent brute-force reference implementations used only by the tests."""

import itertools

import numpy as np


def auroc_pairs(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    total = 0.0
    for p, n in itertools.product(pos, neg):
        total += 1.0 if p > n else 0.5 if p == n else 0.0
    return total / (len(pos) * len(neg))


def _sweep(scores, labels):
    """(tp, fp) at every distinct threshold t, predicting score >= t, descending t."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels)
    out = []
    for t in sorted(set(scores.tolist()), reverse=True):
        pred = scores >= t
        out.append((int(np.sum(pred & (labels == 1))), int(np.sum(pred & (labels == 0)))))
    return out


def ap_sweep(scores, labels):
    n_pos = int(np.sum(np.asarray(labels) == 1))
    ap, prev_r = 0.0, 0.0
    for tp, fp in _sweep(scores, labels):
        r = tp / n_pos
        ap += (r - prev_r) * (tp / (tp + fp))
        prev_r = r
    return ap


def maxf1_sweep(scores, labels):
    n_pos = int(np.sum(np.asarray(labels) == 1))
    best = 0.0
    for tp, fp in _sweep(scores, labels):
        if tp == 0:
            continue
        p, r = tp / (tp + fp), tp / n_pos
        best = max(best, 2 * p * r / (p + r))
    return best


def bilinear_lookup(grid_map, row, col, H, W):
    """Bilinear value of a (g, g, d) map at pixel (row, col), corners on pixel centers."""
    g = grid_map.shape[0]
    y = row * (g - 1) / (H - 1) if H > 1 else 0.0
    x = col * (g - 1) / (W - 1) if W > 1 else 0.0
    y0, x0 = int(np.floor(y)), int(np.floor(x))
    y1, x1 = min(y0 + 1, g - 1), min(x0 + 1, g - 1)
    wy, wx = y - y0, x - x0
    return ((1 - wy) * (1 - wx) * grid_map[y0, x0] + (1 - wy) * wx * grid_map[y0, x1]
            + wy * (1 - wx) * grid_map[y1, x0] + wy * wx * grid_map[y1, x1])


def aggregate_loop(maps, correspondences, n):
    """Triple loop over views, key layers and pixels.

    ``maps`` is a (views, m, g, g, d) numpy array. Per view and layer a
    point's feature is the mean over its winning pixels; the point feature is
    the mean over contributing (view, layer) pairs, then L2-normalised.
    """
    V, m = maps.shape[:2]
    d = maps.shape[-1]
    acc = np.zeros((n, d))
    cnt = np.zeros(n)
    for v in range(V):
        table = correspondences[v].pixel_to_point
        H, W = table.shape
        for layer in range(m):
            per_point = {}
            for r in range(H):
                for c in range(W):
                    i = table[r, c]
                    if i < 0:
                        continue
                    per_point.setdefault(int(i), []).append(
                        bilinear_lookup(maps[v, layer], r, c, H, W))
            for i, feats in per_point.items():
                acc[i] += np.mean(feats, axis=0)
                cnt[i] += 1
    out = np.zeros((n, d))
    seen = cnt > 0
    out[seen] = acc[seen] / cnt[seen, None]
    out[seen] /= np.linalg.norm(out[seen], axis=1, keepdims=True)
    return out, cnt


def central_differences(f, params, h=1e-4):
    """Central finite-difference gradient of scalar ``f()`` w.r.t. every entry of ``params``.

    ``params`` is a list of torch tensors modified in place and restored.
    """
    import torch

    grads = []
    with torch.no_grad():
        for p in params:
            g = np.zeros(tuple(p.shape))
            flat = p.view(-1)
            for k in range(flat.numel()):
                orig = flat[k].item()
                flat[k] = orig + h
                fp = f()
                flat[k] = orig - h
                fm = f()
                flat[k] = orig
                g.reshape(-1)[k] = (fp - fm) / (2 * h)
            grads.append(g)
    return grads
