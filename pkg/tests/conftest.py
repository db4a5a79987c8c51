import numpy as np

from freegeo.metric import PointedMetricSpace


def random_euclidean_space(rng, n, dim=3, scale=1.0):
    """Random point cloud; Euclidean distances are always a metric."""
    while True:
        pts = rng.normal(size=(n, dim)) * scale
        d = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1))
        d = (d + d.T) / 2.0
        np.fill_diagonal(d, 0.0)
        off = d[~np.eye(n, dtype=bool)]
        if off.min() > 1e-3 * scale:
            return PointedMetricSpace(d)


def random_zero_sum(rng, n, nonzero=True):
    m = rng.normal(size=n)
    m -= m.mean()
    if nonzero and np.abs(m).max() < 1e-6:
        m[0] += 1.0
        m[1] -= 1.0
    return m
