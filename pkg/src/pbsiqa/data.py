"""Raster containers, PGM/PPM ingestion and dataset manifests."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = [
    "Image",
    "ColorImage",
    "DepthMap",
    "ViewSet",
    "Sample",
    "LoadError",
    "ManifestError",
    "MIN_SIZE",
    "rgb_to_luma",
    "load_image",
    "load_depth",
    "write_pnm",
    "load_manifest",
    "write_manifest",
]

MIN_SIZE = 8
REC601 = np.array([0.299, 0.587, 0.114])


class LoadError(ValueError):
    """Raised when a raster file cannot be decoded."""


class ManifestError(ValueError):
    """Raised for a malformed manifest; carries the offending row number."""

    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"manifest row {row}: {message}"
        super().__init__(message)


def _frozen(a):
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


def _check_range(a, what):
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{what} contains non-finite samples")
    if a.size and (a.min() < 0 or a.max() > 255):
        raise ValueError(f"{what} samples must lie in [0, 255]")


def rgb_to_luma(rgb):
    """Rec.601 luma of an ``(H, W, 3)`` array."""
    rgb = np.asarray(rgb, dtype=np.float64)
    return rgb @ REC601


@dataclass(frozen=True, eq=False)
class Image:
    """Gray-level raster with samples in [0, 255].

    Parameters
    ----------
    luma : array_like, shape (height, width)
    """

    luma: np.ndarray

    def __post_init__(self):
        a = _frozen(self.luma)
        if a.ndim != 2:
            raise ValueError(f"Image expects a 2-D array, got shape {a.shape}")
        if a.shape[0] < MIN_SIZE or a.shape[1] < MIN_SIZE:
            raise ValueError(f"Image must be at least {MIN_SIZE}x{MIN_SIZE}, got {a.shape[1]}x{a.shape[0]}")
        _check_range(a, "Image")
        object.__setattr__(self, "luma", a)

    @property
    def height(self) -> int:
        return self.luma.shape[0]

    @property
    def width(self) -> int:
        return self.luma.shape[1]

    @property
    def shape(self):
        return self.luma.shape

    def to_color(self) -> "ColorImage":
        return ColorImage(np.repeat(self.luma[:, :, None], 3, axis=2))


@dataclass(frozen=True, eq=False)
class ColorImage:
    """Three-plane raster of shape ``(height, width, 3)``, samples in [0, 255]."""

    rgb: np.ndarray

    def __post_init__(self):
        a = _frozen(self.rgb)
        if a.ndim != 3 or a.shape[2] != 3:
            raise ValueError(f"ColorImage expects shape (H, W, 3), got {a.shape}")
        if a.shape[0] < MIN_SIZE or a.shape[1] < MIN_SIZE:
            raise ValueError(f"ColorImage must be at least {MIN_SIZE}x{MIN_SIZE}")
        _check_range(a, "ColorImage")
        object.__setattr__(self, "rgb", a)

    @property
    def height(self) -> int:
        return self.rgb.shape[0]

    @property
    def width(self) -> int:
        return self.rgb.shape[1]

    @property
    def shape(self):
        return self.rgb.shape[:2]

    @cached_property
    def luma(self) -> np.ndarray:
        y = rgb_to_luma(self.rgb)
        y.setflags(write=False)
        return y

    def to_gray(self) -> Image:
        return Image(self.luma)

    def to_color(self) -> "ColorImage":
        return self


@dataclass(frozen=True, eq=False)
class DepthMap:
    """Quantized 8-bit depth raster."""

    depth: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.depth)
        if a.ndim != 2:
            raise ValueError(f"DepthMap expects a 2-D array, got shape {a.shape}")
        if not np.all(np.isfinite(a)) or np.any(a != np.round(a)):
            raise ValueError("DepthMap samples must be integers")
        if a.size and (a.min() < 0 or a.max() > 255):
            raise ValueError("DepthMap samples must lie in [0, 255]")
        a = a.astype(np.int64)
        a.setflags(write=False)
        object.__setattr__(self, "depth", a)

    @property
    def height(self) -> int:
        return self.depth.shape[0]

    @property
    def width(self) -> int:
        return self.depth.shape[1]

    @property
    def shape(self):
        return self.depth.shape


@dataclass(frozen=True, eq=False)
class ViewSet:
    """Ordered (reference, distorted) view pairs with optional depth pairs."""

    views: tuple
    depths: tuple | None = None

    def __post_init__(self):
        views = tuple(tuple(p) for p in self.views)
        if len(views) not in (2, 3):
            raise ValueError(f"ViewSet needs 2 or 3 views, got {len(views)}")
        shape = views[0][0].shape
        for ref, dist in views:
            for im in (ref, dist):
                if not isinstance(im, (Image, ColorImage)):
                    raise TypeError("views must hold Image or ColorImage instances")
                if im.shape != shape:
                    raise ValueError("all views must share dimensions")
        depths = self.depths
        if depths is not None:
            depths = tuple(tuple(p) for p in depths)
            if len(depths) != len(views):
                raise ValueError("depth pairs must match the view count")
            for pair in depths:
                for d in pair:
                    if not isinstance(d, DepthMap):
                        raise TypeError("depths must hold DepthMap instances")
                    if d.shape != shape:
                        raise ValueError("depth maps must match view dimensions")
        object.__setattr__(self, "views", views)
        object.__setattr__(self, "depths", depths)

    @property
    def view_count(self) -> int:
        return len(self.views)

    @property
    def has_depth(self) -> bool:
        return self.depths is not None


@dataclass(frozen=True, eq=False)
class Sample:
    """One rated stimulus.

    ``paths`` keeps the on-disk sources (keys ``ref_tex``, ``dist_tex``,
    ``ref_depth``, ``dist_depth``) when the sample came from a manifest; the
    external scorer needs them.  Rasters are decoded lazily on first access
    of :attr:`view_set` when only paths are given.
    """

    id: str
    mos: float
    distortion_tag: str = ""
    source_tag: str = ""
    views: ViewSet | None = None
    paths: dict | None = field(default=None, repr=False)

    def __post_init__(self):
        mos = float(self.mos)
        if not math.isfinite(mos):
            raise ValueError(f"sample {self.id!r}: MOS must be finite")
        object.__setattr__(self, "mos", mos)
        if self.views is None and self.paths is None:
            raise ValueError(f"sample {self.id!r} has neither rasters nor paths")

    @cached_property
    def view_set(self) -> ViewSet:
        if self.views is not None:
            return self.views
        p = self.paths
        views = [(load_image(r, "color"), load_image(d, "color"))
                 for r, d in zip(p["ref_tex"], p["dist_tex"])]
        depths = None
        if p.get("ref_depth"):
            depths = [(load_depth(r), load_depth(d)) for r, d in zip(p["ref_depth"], p["dist_depth"])]
        return ViewSet(views, depths)

    @property
    def view_count(self) -> int:
        if self.views is not None:
            return self.views.view_count
        return len(self.paths["ref_tex"])

    @property
    def has_depth(self) -> bool:
        if self.views is not None:
            return self.views.has_depth
        return bool(self.paths.get("ref_depth"))


# --------------------------------------------------------------------------
# PGM / PPM

def _read_token(buf, pos):
    n = len(buf)
    while pos < n:
        c = buf[pos:pos + 1]
        if c == b"#":
            while pos < n and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not buf[pos:pos + 1].isspace() and buf[pos:pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise LoadError("truncated header")
    return buf[start:pos], pos


def _read_pnm(path):
    path = Path(path)
    try:
        buf = path.read_bytes()
    except OSError as exc:
        raise LoadError(f"{path}: {exc}") from exc
    magic = buf[:2]
    if magic not in (b"P5", b"P6"):
        raise LoadError(f"{path}: unsupported format {magic!r}; expected binary PGM (P5) or PPM (P6)")
    pos = 2
    fields = []
    try:
        for _ in range(3):
            tok, pos = _read_token(buf, pos)
            fields.append(int(tok))
    except LoadError as exc:
        raise LoadError(f"{path}: {exc}") from None
    except ValueError as exc:
        raise LoadError(f"{path}: malformed header") from exc
    width, height, maxval = fields
    if width <= 0 or height <= 0:
        raise LoadError(f"{path}: invalid dimensions {width}x{height}")
    if maxval != 255:
        raise LoadError(f"{path}: unsupported maxval {maxval}; only 8-bit (255) rasters are accepted")
    if pos >= len(buf) or not buf[pos:pos + 1].isspace():
        raise LoadError(f"{path}: malformed header")
    pos += 1
    channels = 3 if magic == b"P6" else 1
    need = width * height * channels
    payload = buf[pos:pos + need]
    if len(payload) < need:
        raise LoadError(f"{path}: truncated payload ({len(payload)} of {need} bytes)")
    a = np.frombuffer(payload, dtype=np.uint8)
    if channels == 3:
        return a.reshape(height, width, 3)
    return a.reshape(height, width)


def load_image(path, mode="gray"):
    """Decode a binary PGM/PPM file.

    Parameters
    ----------
    path : path-like
    mode : {"gray", "color"}
        ``"gray"`` returns an :class:`Image`, converting PPM input with the
        Rec.601 weights; ``"color"`` returns an :class:`Image` for PGM input
        and a :class:`ColorImage` for PPM input.
    """
    if mode not in ("gray", "color"):
        raise ValueError(f"mode must be 'gray' or 'color', got {mode!r}")
    a = _read_pnm(path)
    try:
        if a.ndim == 2:
            return Image(a)
        if mode == "gray":
            return Image(rgb_to_luma(a))
        return ColorImage(a)
    except ValueError as exc:
        raise LoadError(f"{path}: {exc}") from exc


def load_depth(path):
    a = _read_pnm(path)
    if a.ndim == 3:
        raise LoadError(f"{path}: depth maps must be single-channel PGM")
    return DepthMap(a)


def write_pnm(path, raster):
    """Write an Image/DepthMap as P5 or a ColorImage as P6.

    Samples are rounded to the nearest integer; integral inputs round-trip
    exactly through :func:`load_image`.
    """
    if isinstance(raster, Image):
        a = raster.luma
    elif isinstance(raster, ColorImage):
        a = raster.rgb
    elif isinstance(raster, DepthMap):
        a = raster.depth
    else:
        a = np.asarray(raster)
    a = np.clip(np.rint(a), 0, 255).astype(np.uint8)
    magic = b"P6" if a.ndim == 3 else b"P5"
    header = b"%s\n%d %d\n255\n" % (magic, a.shape[1], a.shape[0])
    Path(path).write_bytes(header + a.tobytes())


# --------------------------------------------------------------------------
# manifests

_FIXED = ["id", "source_tag", "distortion_tag", "mos"]


def _layout(header):
    if header[:4] != _FIXED:
        raise ManifestError(f"header must start with {','.join(_FIXED)}", row=1)
    rest = header[4:]
    groups = {}
    for name in rest:
        stem, _, idx = name.rpartition("_")
        if stem not in ("ref_tex", "dist_tex", "ref_depth", "dist_depth") or not idx.isdigit():
            raise ManifestError(f"unexpected column {name!r}", row=1)
        groups.setdefault(stem, []).append(int(idx))
    k = len(groups.get("ref_tex", []))
    if k not in (2, 3):
        raise ManifestError(f"expected 2 or 3 ref_tex columns, found {k}", row=1)
    expect = list(range(1, k + 1))
    for stem, idx in groups.items():
        if idx != expect:
            raise ManifestError(f"{stem} columns must be numbered 1..{k}", row=1)
    if "dist_tex" not in groups:
        raise ManifestError("missing dist_tex columns", row=1)
    if ("ref_depth" in groups) != ("dist_depth" in groups):
        raise ManifestError("depth columns must come as a ref_depth/dist_depth block", row=1)
    return k, "ref_depth" in groups


def _data_lines(text):
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        yield lineno, line


def load_manifest(path, check_files=True) -> list[Sample]:
    """Parse a dataset manifest CSV into samples, preserving row order.

    Relative raster paths resolve against the manifest's directory.  Error
    messages carry the 1-based line number of the offending row.
    """
    path = Path(path)
    base = path.parent
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ManifestError(f"{path}: {exc}") from exc
    lines = list(_data_lines(text))
    if not lines:
        raise ManifestError("empty manifest", row=1)
    hdr_line, hdr = lines[0]
    header = [h.strip() for h in next(csv.reader([hdr]))]
    k, with_depth = _layout(header)
    samples, seen = [], set()
    for lineno, line in lines[1:]:
        row = [c.strip() for c in next(csv.reader([line]))]
        if len(row) != len(header):
            raise ManifestError(f"expected {len(header)} fields, got {len(row)}", row=lineno)
        rec = dict(zip(header, row))
        try:
            mos = float(rec["mos"])
        except ValueError:
            raise ManifestError(f"non-numeric mos {rec['mos']!r}", row=lineno) from None
        if not math.isfinite(mos):
            raise ManifestError(f"non-finite mos {rec['mos']!r}", row=lineno)
        if rec["id"] in seen:
            raise ManifestError(f"duplicate id {rec['id']!r}", row=lineno)
        seen.add(rec["id"])
        stems = ["ref_tex", "dist_tex"] + (["ref_depth", "dist_depth"] if with_depth else [])
        paths = {}
        for stem in stems:
            files = []
            for i in range(1, k + 1):
                p = base / rec[f"{stem}_{i}"]
                if check_files and not p.is_file():
                    raise ManifestError(f"missing file {p}", row=lineno)
                files.append(p)
            paths[stem] = tuple(files)
        samples.append(Sample(rec["id"], mos, rec["distortion_tag"], rec["source_tag"], paths=paths))
    return samples


def write_manifest(path, rows: Sequence[dict], view_count: int, with_depth: bool):
    """Write manifest rows (dicts with the fixed fields and path tuples)."""
    header = list(_FIXED)
    stems = ["ref_tex", "dist_tex"] + (["ref_depth", "dist_depth"] if with_depth else [])
    for stem in stems:
        header += [f"{stem}_{i}" for i in range(1, view_count + 1)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            out = [r["id"], r["source_tag"], r["distortion_tag"], repr(float(r["mos"]))]
            for stem in stems:
                out += [str(p) for p in r[stem]]
            w.writerow(out)
