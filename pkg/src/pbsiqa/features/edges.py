"""Edge features: multi-scale edge stability (ESMSE) and Pratt's figure of merit."""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .._validation import check_pair, warn_degenerate

DEFAULT_SIGMAS = (0.5, 1.0, 2.0, 4.0, 8.0)
_FLAT = 1e-9


def gaussian_kernels(sigma):
    """Sampled Gaussian and its first derivative, truncated at 4 sigma."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    radius = int(4.0 * sigma + 0.5)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    g = np.exp(-0.5 * (x / sigma) ** 2)
    g /= g.sum()
    return g, -x / sigma ** 2 * g


def gradient_of_gaussian(image, sigma):
    """Return ``(gy, gx)`` derivative-of-Gaussian responses.

    Borders use half-sample symmetric extension.
    """
    g, dg = gaussian_kernels(sigma)
    img = np.asarray(image, dtype=np.float64)
    gx = ndimage.correlate1d(ndimage.correlate1d(img, g, axis=0, mode="reflect"), dg, axis=1, mode="reflect")
    gy = ndimage.correlate1d(ndimage.correlate1d(img, dg, axis=0, mode="reflect"), g, axis=1, mode="reflect")
    return gy, gx


def gradient_magnitude(image, sigma):
    gy, gx = gradient_of_gaussian(image, sigma)
    return np.hypot(gx, gy)


def edge_map(image, sigma, threshold="corrected"):
    """Threshold the gradient norm at one scale.

    ``threshold="corrected"`` fires where the norm exceeds
    ``Cmin + 0.1 (Cmax - Cmin)``.  ``threshold="literal"`` uses
    ``Cmax + 0.1 (Cmax - Cmin)``, which never fires and is kept only for
    comparison.
    """
    c = gradient_magnitude(image, sigma)
    cmax, cmin = c.max(), c.min()
    if cmax - cmin <= _FLAT:
        return np.zeros(c.shape, dtype=bool)
    if threshold == "corrected":
        t = 0.1 * (cmax - cmin) + cmin
    elif threshold == "literal":
        t = 0.1 * (cmax - cmin) + cmax
    else:
        raise ValueError(f"unknown threshold mode {threshold!r}")
    return c > t


def edge_stability(image, sigmas=DEFAULT_SIGMAS, threshold="corrected"):
    """Per-pixel length of the longest run of consecutive scales that fire."""
    sigmas = tuple(float(s) for s in sigmas)
    if any(b <= a for a, b in zip(sigmas, sigmas[1:])):
        raise ValueError("sigmas must be strictly increasing")
    run = best = None
    for s in sigmas:
        e = edge_map(image, s, threshold)
        if run is None:
            run = e.astype(np.int64)
            best = run.copy()
        else:
            run = np.where(e, run + 1, 0)
            np.maximum(best, run, out=best)
    return best


def esmse(ref, dist, sigmas=DEFAULT_SIGMAS, threshold="corrected"):
    """Edge-stability mean squared error over the reference's edge pixels.

    A reference without edges yields 0 and a degenerate-input warning.
    """
    a, b = check_pair(ref, dist, (3, 3))
    q = edge_stability(a, sigmas, threshold)
    qh = edge_stability(b, sigmas, threshold)
    mask = q > 0
    if not mask.any():
        warn_degenerate("esmse: reference has no edge pixels")
        return 0.0
    d = (q - qh)[mask].astype(np.float64)
    return float(np.mean(d ** 2))


def _non_max_suppression(mag, gy, gx):
    ang = np.rad2deg(np.arctan2(gy, gx)) % 180.0
    p = np.pad(mag, 1, mode="constant")
    h, w = mag.shape
    c = p[1:-1, 1:-1]
    # neighbour offsets for directions 0, 45, 90, 135 degrees
    e, we = p[1:-1, 2:], p[1:-1, :-2]
    n, s = p[:-2, 1:-1], p[2:, 1:-1]
    ne, sw = p[:-2, 2:], p[2:, :-2]
    nw, se = p[:-2, :-2], p[2:, 2:]
    keep = np.zeros((h, w), dtype=bool)
    d0 = (ang < 22.5) | (ang >= 157.5)
    d45 = (ang >= 22.5) & (ang < 67.5)
    d90 = (ang >= 67.5) & (ang < 112.5)
    d135 = (ang >= 112.5) & (ang < 157.5)
    keep |= d0 & (c >= e) & (c >= we)
    # rows grow downward, so a positive gy points south
    keep |= d45 & (c >= se) & (c >= nw)
    keep |= d90 & (c >= n) & (c >= s)
    keep |= d135 & (c >= sw) & (c >= ne)
    return keep & (mag > 0)


def canny(image, sigma=2.0, not_edge_fraction=0.7, low_ratio=0.4):
    """Single-scale Canny edge map.

    The high threshold is the ``not_edge_fraction`` quantile of the
    normalized gradient magnitude and the low threshold is ``low_ratio``
    times the high one; weak edges survive when 8-connected to a strong one.
    """
    img = np.asarray(image, dtype=np.float64)
    gy, gx = gradient_of_gaussian(img, sigma)
    mag = np.hypot(gx, gy)
    peak = mag.max()
    if peak - mag.min() <= _FLAT:
        return np.zeros(mag.shape, dtype=bool)
    mag = mag / peak
    high = np.quantile(mag, not_edge_fraction)
    low = low_ratio * high
    thin = _non_max_suppression(mag, gy, gx)
    weak = thin & (mag > low)
    strong = thin & (mag > high)
    labels, count = ndimage.label(weak, structure=np.ones((3, 3), dtype=bool))
    if count == 0:
        return np.zeros(mag.shape, dtype=bool)
    hit = np.zeros(count + 1, dtype=bool)
    hit[labels[strong]] = True
    hit[0] = False
    return hit[labels]


def pratt_from_edge_maps(truth, detected, a=0.8):
    """Pratt's figure of merit for boolean ground-truth and detected maps."""
    truth = np.asarray(truth, dtype=bool)
    detected = np.asarray(detected, dtype=bool)
    if truth.shape != detected.shape:
        raise ValueError(f"edge map size mismatch: {truth.shape} vs {detected.shape}")
    nt, nd = int(truth.sum()), int(detected.sum())
    if nt == 0 and nd == 0:
        warn_degenerate("pratt: neither image has edges")
        return 1.0
    if nt == 0 or nd == 0:
        return 0.0
    dist = ndimage.distance_transform_edt(~truth)
    d2 = dist[detected] ** 2
    return float(np.sum(1.0 / (1.0 + a * d2)) / max(nd, nt))


def pratt(ref, dist, a=0.8, sigma=None, sigmas=DEFAULT_SIGMAS):
    """Pratt's figure of merit of the distorted image's edges against the reference's.

    Edges come from :func:`canny` at ``sigma``, by default the median of
    the ESMSE scale set.
    """
    x, y = check_pair(ref, dist, (3, 3))
    if sigma is None:
        sigma = float(np.median(sigmas))
    return pratt_from_edge_maps(canny(x, sigma), canny(y, sigma), a)
