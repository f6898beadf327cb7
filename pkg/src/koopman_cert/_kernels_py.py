"""Pure-numpy implementations of the hot kernels.

Used when the compiled extension is unavailable (or forced via the
KOOPMAN_CERT_PURE_PY environment variable).  Both backends consume the same
pre-drawn uniforms and use the same comparison convention, so their outputs
are bit-for-bit identical.
"""

import numpy as np


def chain_paths(cdf, x0, u):
    """Step a batch of finite-chain trajectories.

    Parameters
    ----------
    cdf : (n, n) float64
        Row-wise cumulative transition probabilities; cdf[i, -1] >= 1.
    x0 : (B,) int64
        Initial states.
    u : (B, m) float64
        Uniform draws in [0, 1), one per step per trajectory.

    Returns
    -------
    (B, m+1) int64 array of states; column 0 equals x0.
    """
    cdf = np.ascontiguousarray(cdf, dtype=np.float64)
    x0 = np.asarray(x0, dtype=np.int64)
    u = np.asarray(u, dtype=np.float64)
    B, m = u.shape
    paths = np.empty((B, m + 1), dtype=np.int64)
    paths[:, 0] = x0
    cur = x0
    for k in range(m):
        # first column j with u < cdf[cur, j]  (== searchsorted side='right')
        cur = np.argmax(u[:, k, None] < cdf[cur], axis=1)
        paths[:, k + 1] = cur
    return paths


def pair_counts(paths, n_states):
    """Per-trajectory transition counts.

    Parameters
    ----------
    paths : (B, m+1) integer states
    n_states : int

    Returns
    -------
    (B, n, n) int64; entry [b, i, j] counts steps x_k = i -> x_{k+1} = j.
    """
    paths = np.asarray(paths, dtype=np.int64)
    B, mp1 = paths.shape
    m = mp1 - 1
    n = int(n_states)
    counts = np.empty((B, n, n), dtype=np.int64)
    # chunk over trials to bound the size of the flattened index array
    rows = max(1, int(2**22) // max(m, 1))
    for lo in range(0, B, rows):
        hi = min(lo + rows, B)
        block = paths[lo:hi]
        flat = block[:, :-1] * n + block[:, 1:]
        flat += np.arange(hi - lo, dtype=np.int64)[:, None] * (n * n)
        counts[lo:hi] = np.bincount(
            flat.ravel(), minlength=(hi - lo) * n * n
        ).reshape(hi - lo, n, n)
    return counts
