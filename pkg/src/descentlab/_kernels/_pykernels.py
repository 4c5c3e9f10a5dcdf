"""Pure-numpy reference kernels; the compiled module mirrors these signatures."""

import numpy as np


def sgd_epoch(W1, b1, W2, b2, X, Z, order, batch_size, lr):
    """One pass of mini-batch SGD on mean squared error, updating in place.

    Rows are visited in ``order`` in chunks of ``batch_size`` (the last chunk
    may be short).  Each batch minimizes ``sum((f(x) - z)**2) / (b * K)``.
    Returns the sum of squared errors measured before each batch's update.
    """
    n = order.shape[0]
    K = Z.shape[1]
    total = 0.0
    for start in range(0, n, batch_size):
        idx = order[start:start + batch_size]
        xb = X[idx]
        zb = Z[idx]
        pre = xb @ W1.T
        pre += b1
        act = np.maximum(pre, 0.0)
        out = act @ W2.T
        out += b2
        diff = out - zb
        total += float(np.sum(diff * diff))
        g_out = diff * (2.0 / (idx.shape[0] * K))
        g_W2 = g_out.T @ act
        g_b2 = g_out.sum(axis=0)
        g_pre = g_out @ W2
        g_pre *= pre > 0.0
        g_W1 = g_pre.T @ xb
        g_b1 = g_pre.sum(axis=0)
        W1 -= lr * g_W1
        b1 -= lr * g_b1
        W2 -= lr * g_W2
        b2 -= lr * g_b2
    return total
