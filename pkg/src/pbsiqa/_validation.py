"""Input checking shared by the feature and learning modules."""

import warnings

import numpy as np

from .data import ColorImage, DepthMap, Image


class DegenerateInputWarning(UserWarning):
    """A feature fell back to its defined value for a degenerate input."""


def warn_degenerate(msg):
    warnings.warn(msg, DegenerateInputWarning, stacklevel=3)


def as_luma(x):
    """Return a float64 2-D luma array from an Image, ColorImage or array."""
    if isinstance(x, (Image, ColorImage)):
        return x.luma
    if isinstance(x, DepthMap):
        return x.depth.astype(np.float64)
    a = np.asarray(x, dtype=np.float64)
    if a.ndim == 3 and a.shape[2] == 3:
        from .data import rgb_to_luma
        return rgb_to_luma(a)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-D image, got shape {a.shape}")
    return a


def as_rgb(x):
    """Return a float64 ``(H, W, 3)`` array; gray inputs become 3 equal planes."""
    if isinstance(x, ColorImage):
        return x.rgb
    if isinstance(x, Image):
        a = x.luma
    else:
        a = np.asarray(x, dtype=np.float64)
    if a.ndim == 2:
        return np.repeat(a[:, :, None], 3, axis=2)
    if a.ndim != 3 or a.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) color image, got shape {a.shape}")
    return a


def check_pair(ref, dist, min_shape=(1, 1), convert=as_luma):
    """Convert both images and verify they agree in size.

    Raises
    ------
    ValueError
        On a size mismatch or when either side is below ``min_shape``.
    """
    a, b = convert(ref), convert(dist)
    if a.shape != b.shape:
        raise ValueError(f"image size mismatch: {a.shape} vs {b.shape}")
    if a.shape[0] < min_shape[0] or a.shape[1] < min_shape[1]:
        raise ValueError(
            f"image of size {a.shape[1]}x{a.shape[0]} is smaller than the required "
            f"{min_shape[1]}x{min_shape[0]}")
    return a, b


def check_matrix(X, name="X"):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains non-finite values")
    return X


def check_targets(y, n):
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.shape[0] != n:
        raise ValueError(f"got {y.shape[0]} targets for {n} rows")
    if not np.all(np.isfinite(y)):
        raise ValueError("targets must be finite")
    return y
