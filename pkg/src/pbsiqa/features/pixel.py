"""Pixel-difference features: PSNR, MD, MAE and the modified infinity norm."""

import math

import numpy as np

from .._validation import check_pair, warn_degenerate

PSNR_CAP = 100.0


def psnr(ref, dist, cap=PSNR_CAP):
    """Peak signal-to-noise ratio in dB for 8-bit data.

    Identical inputs have zero MSE; they get ``cap`` and a
    :class:`DegenerateInputWarning` so downstream scaling stays finite.
    """
    a, b = check_pair(ref, dist)
    mse = np.mean((a - b) ** 2)
    if mse == 0:
        warn_degenerate("psnr: exact match, returning cap")
        return float(cap)
    return min(float(10.0 * math.log10(255.0 ** 2 / mse)), float(cap))


def md(ref, dist):
    """Maximum absolute difference."""
    a, b = check_pair(ref, dist)
    return float(np.max(np.abs(a - b)))


def mae(ref, dist):
    """Mean absolute error."""
    a, b = check_pair(ref, dist)
    return float(np.mean(np.abs(a - b)))


def min_norm(ref, dist, fraction=0.25):
    """Modified infinity norm: RMS of the largest ``fraction`` of deviations.

    The number of deviations kept is ``ceil(fraction * pixel_count)``.
    """
    if not 0 < fraction <= 1:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    a, b = check_pair(ref, dist)
    dev = np.abs(a - b).ravel()
    r = math.ceil(fraction * dev.size)
    top = np.partition(dev, dev.size - r)[dev.size - r:]
    return float(np.sqrt(np.mean(top ** 2)))
