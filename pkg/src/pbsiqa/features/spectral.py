"""Blocking-sensitive features: CSF-filtered DCT error and zero-crossing rate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.fft import dctn, idctn

from .._validation import check_pair, as_luma


def mannos_sakrison(rho):
    """Mannos-Sakrison contrast sensitivity at ``rho`` cycles/degree."""
    rho = np.asarray(rho, dtype=np.float64)
    return 2.6 * (0.0192 + 0.114 * rho) * np.exp(-((0.114 * rho) ** 1.1))


@dataclass(frozen=True)
class DctBandpassFilter:
    """Radial frequency response applied to a full-image DCT spectrum.

    DCT index ``u`` of an ``N``-point transform sits at ``u / (2N)``
    cycles/pixel; ``pixels_per_degree`` converts that to cycles/degree.
    Pass ``table`` (same shape as the image) to inject any nonnegative
    response directly.

    Parameters
    ----------
    response : callable, optional
        Maps radial frequency in cycles/degree to gain.  Defaults to
        :func:`mannos_sakrison`.
    pixels_per_degree : float
    table : ndarray, optional
    """

    response: object = None
    pixels_per_degree: float = 32.0
    table: np.ndarray | None = None

    def __post_init__(self):
        if self.pixels_per_degree <= 0:
            raise ValueError("pixels_per_degree must be positive")

    @classmethod
    def allpass(cls):
        return cls(response=lambda rho: np.ones_like(rho))

    def radial_frequency(self, shape):
        rows, cols = shape
        fu = np.arange(rows) / (2.0 * rows) * self.pixels_per_degree
        fv = np.arange(cols) / (2.0 * cols) * self.pixels_per_degree
        return np.sqrt(fu[:, None] ** 2 + fv[None, :] ** 2)

    def gains(self, shape):
        if self.table is not None:
            h = np.asarray(self.table, dtype=np.float64)
            if h.shape != tuple(shape):
                raise ValueError(f"filter table shape {h.shape} does not match image {shape}")
        else:
            fn = self.response if self.response is not None else mannos_sakrison
            h = np.asarray(fn(self.radial_frequency(shape)), dtype=np.float64)
            h = np.broadcast_to(h, shape)
        if not np.all(np.isfinite(h)) or np.any(h < 0):
            raise ValueError("filter response must be finite and nonnegative")
        return h


DEFAULT_HVS_FILTER = DctBandpassFilter()


def hvs_mse(ref, dist, filt: DctBandpassFilter = DEFAULT_HVS_FILTER):
    """Root-mean-square difference of the CSF-filtered images.

    Each image is transformed with an orthonormal 2-D DCT-II, weighted by
    the filter gains and transformed back.
    """
    a, b = check_pair(ref, dist)
    h = filt.gains(a.shape)
    ua = idctn(h * dctn(a, norm="ortho"), norm="ortho")
    ub = idctn(h * dctn(b, norm="ortho"), norm="ortho")
    return float(np.sqrt(np.mean((ua - ub) ** 2)))


def zcr(dist):
    """Zero-crossing rate of horizontal and vertical first differences.

    Reads only the distorted image.  A crossing at position ``c`` of a
    difference signal ``d`` means ``d[c] * d[c + 1] < 0``; each direction's
    count is normalized by the number of tested positions and the two rates
    are averaged.
    """
    x = as_luma(dist)
    if x.shape[0] < 3 or x.shape[1] < 3:
        raise ValueError("zcr needs an image of at least 3x3")
    dh = np.diff(x, axis=1)
    dv = np.diff(x, axis=0)
    zh = np.mean(dh[:, :-1] * dh[:, 1:] < 0)
    zv = np.mean(dv[:-1, :] * dv[1:, :] < 0)
    return float((zh + zv) / 2)
