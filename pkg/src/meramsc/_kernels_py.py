"""Pure numpy implementations of the inner-loop kernels.

Used when the compiled ``_ckernels`` extension is unavailable, and as the
reference the extension is tested against.
"""
import numpy as np


def kmeans_assign(x, centers):
    """Nearest center per row (lowest index on ties) and the squared distance."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    centers = np.ascontiguousarray(centers, dtype=np.float64)
    d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(d2, axis=1)
    return labels.astype(np.int64), d2[np.arange(x.shape[0]), labels]


def kmeans_update(x, labels, k):
    """Per-cluster coordinate sums and member counts."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    sums = np.zeros((k, x.shape[1]))
    np.add.at(sums, labels, x)
    counts = np.bincount(labels, minlength=k).astype(np.int64)
    return sums, counts


def l21_shrink(d, tau):
    """Column-wise proximal operator of ``tau * ||.||_{2,1}``."""
    d = np.asarray(d, dtype=np.float64)
    norms = np.sqrt((d * d).sum(axis=0))
    keep = norms > tau
    scale = np.zeros_like(norms)
    scale[keep] = (norms[keep] - tau) / norms[keep]
    return d * scale


def contingency(a, b, na, nb):
    """Count matrix of two integer-coded labelings."""
    out = np.zeros((na, nb), dtype=np.int64)
    np.add.at(out, (np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64)), 1)
    return out
