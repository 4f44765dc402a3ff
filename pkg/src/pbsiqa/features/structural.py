"""Windowed structural features (SSIM terms, UQI), color angle similarity and block SVD."""

from __future__ import annotations

import numpy as np

from .._validation import as_rgb, check_pair, warn_degenerate

SSIM_C1 = (0.01 * 255) ** 2
SSIM_C2 = (0.03 * 255) ** 2


def _slide(x, w, op):
    """Reduce every valid ``w x w`` window of ``x`` with a binary ufunc."""
    rows = x.shape[0] - w + 1
    cols = x.shape[1] - w + 1
    acc = x[:rows, :].copy()
    for k in range(1, w):
        op(acc, x[k:k + rows, :], out=acc)
    out = acc[:, :cols].copy()
    for k in range(1, w):
        op(out, acc[:, k:k + cols], out=out)
    return out


def window_stats(x, y, w):
    """Means, variances and covariance over every valid ``w x w`` window.

    Uses unit weights and population (divide-by-``w*w``) moments.
    """
    n = float(w * w)
    mx = _slide(x, w, np.add) / n
    my = _slide(y, w, np.add) / n
    vx = np.maximum(_slide(x * x, w, np.add) / n - mx * mx, 0.0)
    vy = np.maximum(_slide(y * y, w, np.add) / n - my * my, 0.0)
    cxy = _slide(x * y, w, np.add) / n - mx * my
    return mx, my, vx, vy, cxy


def _window_is_flat(x, w):
    return _slide(x, w, np.maximum) == _slide(x, w, np.minimum)


def _ssim_maps(ref, dist, window, c1, c2, c3):
    a, b = check_pair(ref, dist, (window, window))
    mx, my, vx, vy, cxy = window_stats(a, b, window)
    sx, sy = np.sqrt(vx), np.sqrt(vy)
    lum = (2 * mx * my + c1) / (mx * mx + my * my + c1)
    con = (2 * sx * sy + c2) / (vx + vy + c2)
    st = (cxy + c3) / (sx * sy + c3)
    return lum, con, st


def ssim_components(ref, dist, window=8, c1=SSIM_C1, c2=SSIM_C2, c3=None):
    """Mean-pooled luminance, contrast and structure terms of SSIM.

    Returns
    -------
    (float, float, float)
    """
    if c3 is None:
        c3 = c2 / 2
    lum, con, st = _ssim_maps(ref, dist, window, c1, c2, c3)
    return float(lum.mean()), float(con.mean()), float(st.mean())


def ssim_index(ref, dist, window=8, c1=SSIM_C1, c2=SSIM_C2, c3=None):
    """Mean over windows of the product of the three SSIM terms."""
    if c3 is None:
        c3 = c2 / 2
    lum, con, st = _ssim_maps(ref, dist, window, c1, c2, c3)
    return float(np.mean(lum * con * st))


def uqi(ref, dist, window=8):
    """Universal quality index without stabilizing constants.

    Windows where either image is flat, or both means are zero, leave a
    denominator at zero; they are skipped.  If every window is skipped the
    result is 0 with a degenerate-input warning.
    """
    a, b = check_pair(ref, dist, (window, window))
    mx, my, vx, vy, cxy = window_stats(a, b, window)
    ok = ~(_window_is_flat(a, window) | _window_is_flat(b, window))
    ok &= (mx * mx + my * my) > 0
    ok &= np.sqrt(vx) * np.sqrt(vy) > 0  # variance can underflow in a non-flat window
    if not ok.any():
        warn_degenerate("uqi: every window is degenerate")
        return 0.0
    mx, my, vx, vy, cxy = (m[ok] for m in (mx, my, vx, vy, cxy))
    sx, sy = np.sqrt(vx), np.sqrt(vy)
    q = (cxy / (sx * sy)) * (2 * mx * my / (mx * mx + my * my)) * (2 * sx * sy / (vx + vy))
    return float(q.mean())


def mas(ref, dist, normalization="count"):
    """Mean angle similarity between color pixel vectors.

    Pixels whose vector has zero norm in either image are excluded.  With
    ``normalization="count"`` the angle terms are averaged over the ``N``
    remaining pixels; ``"squared"`` divides their sum by ``N**2`` instead.
    Gray inputs are promoted to three identical planes.
    """
    a, b = check_pair(ref, dist, convert=as_rgb)
    na = np.linalg.norm(a, axis=2)
    nb = np.linalg.norm(b, axis=2)
    ok = (na > 0) & (nb > 0)
    n = int(ok.sum())
    if n == 0:
        warn_degenerate("mas: no pixel has a nonzero color vector in both images")
        return 0.0
    u, v = a[ok], b[ok]
    # atan2 keeps the angle exact for parallel vectors, where arccos loses precision
    ang = np.arctan2(np.linalg.norm(np.cross(u, v), axis=1), np.sum(u * v, axis=1))
    total = np.sum(2.0 / np.pi * ang)
    if normalization == "count":
        return float(1.0 - total / n)
    if normalization == "squared":
        return float(1.0 - total / n ** 2)
    raise ValueError(f"unknown normalization {normalization!r}")


def _tiles(x, block):
    r, c = x.shape[0] // block, x.shape[1] // block
    x = x[:r * block, :c * block]
    return x.reshape(r, block, c, block).swapaxes(1, 2).reshape(r * c, block, block)


def svd_features(ref, dist, block=8, eps=1e-12):
    """Block-wise singular value and singular vector distances.

    Both images are cut into non-overlapping ``block x block`` tiles
    (partial tiles at the right and bottom are dropped).  For each tile pair

    * value distance: ``sum_k |s_k - s'_k| / max(sum_k s_k, eps)``
    * vector distance: ``mean_k (1 - |u_k . u'_k| |v_k . v'_k|)``

    and both are averaged over tiles.

    Returns
    -------
    (float, float)
    """
    a, b = check_pair(ref, dist, (block, block))
    ta, tb = _tiles(a, block), _tiles(b, block)
    ua, sa, vta = np.linalg.svd(ta)
    ub, sb, vtb = np.linalg.svd(tb)
    sv = np.sum(np.abs(sa - sb), axis=1) / np.maximum(sa.sum(axis=1), eps)
    du = np.abs(np.einsum("tik,tik->tk", ua, ub))
    dv = np.abs(np.einsum("tki,tki->tk", vta, vtb))
    svec = np.mean(1.0 - du * dv, axis=1)
    return float(sv.mean()), float(svec.mean())
