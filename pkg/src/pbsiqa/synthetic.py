"""Synthetic distortion ladders for exercising the full pipeline.

Each source content is a procedural color texture seen from 2 or 3
horizontally shifted viewpoints, optionally with a depth map per view.
Each distortion kind is applied at increasing strength, and the MOS falls
linearly with the strength level.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy import ndimage

from .data import ColorImage, DepthMap, Sample, ViewSet, write_manifest, write_pnm

KINDS = ("blur", "noise", "blocking")
VIEW_SHIFT = 3


def _texture(rng, size, views):
    """Smooth color field with hard-edged shapes, wide enough for every view."""
    h, w = size, size + VIEW_SHIFT * (views - 1)
    base = np.stack([ndimage.gaussian_filter(rng.normal(size=(h, w)), s) for s in (1.5, 3.0, 6.0)], -1)
    base = (base - base.min()) / np.ptp(base)
    img = 40 + 150 * base
    yy, xx = np.mgrid[:h, :w]
    for _ in range(4):
        cy, cx, r = rng.uniform(0, h), rng.uniform(0, w), rng.uniform(size / 10, size / 4)
        mask = (yy - cy) ** 2 + (xx - cx) ** 2 < r * r
        img[mask] = rng.uniform(20, 235, size=3)
    y0, x0 = rng.integers(0, h // 2, size=2)
    img[y0:y0 + h // 3, x0:x0 + w // 4] = rng.uniform(20, 235, size=3)
    return img


def _depth(rng, size, views):
    h, w = size, size + VIEW_SHIFT * (views - 1)
    yy, xx = np.mgrid[:h, :w] / size
    d = 60 + 120 * yy + 30 * np.sin(2 * np.pi * xx * rng.uniform(0.5, 2))
    cy, cx = rng.uniform(0.2, 0.8, size=2)
    d[(yy - cy) ** 2 + (xx - cx) ** 2 < 0.04] = rng.uniform(180, 250)
    return d


def _blocking(img, strength, block=8):
    """Blend each block toward its mean, keeping a residual of the detail."""
    h, w = img.shape[:2]
    out = img.copy()
    for y in range(0, h, block):
        for x in range(0, w, block):
            tile = img[y:y + block, x:x + block]
            out[y:y + block, x:x + block] = (1 - strength) * tile + strength * tile.mean(axis=(0, 1))
    return out


def distort(img, kind, level, levels, rng):
    """Apply ``kind`` at ``level`` in 1..levels to a float raster."""
    frac = level / levels
    if kind == "blur":
        sigma = 0.4 + 2.6 * frac
        if img.ndim == 3:
            out = ndimage.gaussian_filter(img, (sigma, sigma, 0))
        else:
            out = ndimage.gaussian_filter(img, sigma)
    elif kind == "noise":
        out = img + rng.normal(0.0, 4.0 + 36.0 * frac, size=img.shape)
    elif kind == "blocking":
        out = _blocking(img, 0.15 + 0.85 * frac)
    else:
        raise ValueError(f"unknown distortion kind {kind!r}; expected one of {KINDS}")
    return np.clip(np.rint(out), 0, 255)


def _views(full, size, views):
    return [full[:, VIEW_SHIFT * v:VIEW_SHIFT * v + size] for v in range(views)]


def generate(n_sources=6, levels=5, kinds=KINDS, views=2, depth=False, size=64, seed=0):
    """Yield ``(record, ref_views, dist_views, ref_depths, dist_depths)`` per sample.

    Rasters are already quantized to 8 bits so in-memory and on-disk
    datasets are identical.  MOS runs from 5 (level 0) down to 1 (top
    level) with a small jitter.
    """
    rng = np.random.default_rng(seed)
    for s in range(n_sources):
        tex = np.rint(_texture(rng, size, views))
        dep = np.clip(np.rint(_depth(rng, size, views)), 0, 255) if depth else None
        ref_v = _views(tex, size, views)
        ref_d = _views(dep, size, views) if depth else None
        for kind in kinds:
            for level in range(1, levels + 1):
                dist_tex = distort(tex, kind, level, levels, rng)
                dist_v = _views(dist_tex, size, views)
                dist_d = None
                if depth:
                    dist_d = _views(distort(dep, kind, level, levels, rng), size, views)
                mos = 5.0 - 4.0 * level / levels + rng.normal(0, 0.05)
                rec = {"id": f"s{s}_{kind}_{level}", "source_tag": f"src{s}",
                       "distortion_tag": kind, "mos": float(mos)}
                yield rec, ref_v, dist_v, ref_d, dist_d


def make_samples(**kwargs):
    """In-memory samples; see :func:`generate` for the parameters."""
    out = []
    for rec, rv, dv, rd, dd in generate(**kwargs):
        pairs = [(ColorImage(a), ColorImage(b)) for a, b in zip(rv, dv)]
        depths = None if rd is None else [(DepthMap(a), DepthMap(b)) for a, b in zip(rd, dd)]
        out.append(Sample(rec["id"], rec["mos"], rec["distortion_tag"], rec["source_tag"],
                          views=ViewSet(pairs, depths)))
    return out


def write_dataset(directory, **kwargs):
    """Write PPM textures, PGM depth maps and ``manifest.csv``; return the manifest path."""
    root = Path(directory)
    (root / "img").mkdir(parents=True, exist_ok=True)
    rows = []
    views = kwargs.get("views", 2)
    depth = kwargs.get("depth", False)
    written = set()
    for rec, rv, dv, rd, dd in generate(**kwargs):
        row = dict(rec)
        src = rec["source_tag"]
        row["ref_tex"] = tuple(f"img/{src}_v{v + 1}.ppm" for v in range(views))
        row["dist_tex"] = tuple(f"img/{rec['id']}_v{v + 1}.ppm" for v in range(views))
        rasters = list(zip(row["ref_tex"], rv)) + list(zip(row["dist_tex"], dv))
        if depth:
            row["ref_depth"] = tuple(f"img/{src}_d{v + 1}.pgm" for v in range(views))
            row["dist_depth"] = tuple(f"img/{rec['id']}_d{v + 1}.pgm" for v in range(views))
            rasters += list(zip(row["ref_depth"], rd)) + list(zip(row["dist_depth"], dd))
        for name, raster in rasters:
            if name not in written:
                write_pnm(root / name, raster)
                written.add(name)
        rows.append(row)
    path = root / "manifest.csv"
    write_manifest(path, rows, views, depth)
    return path
