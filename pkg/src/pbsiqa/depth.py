"""Depth-map geometric error (NDSE over a D-NOSE profile) and the external scorer hook.

A depth level ``v`` in [0, 255] renders at disparity

    DP(v) = f B ((v / 255) (1 / z_near - 1 / z_far) + 1 / z_far)

which the view synthesizer quantizes to ``ceil((DP(v) - lam) K) / K``.
Every depth value that lands on the same quantized disparity renders
identically, so deviations inside that interval are invisible.
"""

from __future__ import annotations

import math
import shlex
import subprocess
from dataclasses import dataclass

import numpy as np

from ._validation import check_pair

LEVELS = 256


class ConfigurationError(ValueError):
    """Invalid camera configuration."""


class ScorerUnavailableError(RuntimeError):
    """The external scorer failed, timed out or printed garbage."""


@dataclass(frozen=True)
class CameraConfig:
    """Rendering geometry for the disparity model.

    Parameters
    ----------
    focal_length : float
        In pixels.
    baseline : float
        In world units, same as the clipping planes.
    z_near, z_far : float
    precision : int
        Sub-pixel denominator ``K``: disparities are quantized to ``1/K``.
    offset : float
        Rounding offset ``lam`` in [0, 1).
    """

    focal_length: float = 1000.0
    baseline: float = 0.05
    z_near: float = 0.5
    z_far: float = 10.0
    precision: int = 4
    offset: float = 0.5

    def __post_init__(self):
        if not (self.focal_length > 0 and self.baseline > 0):
            raise ConfigurationError("focal_length and baseline must be positive")
        if not 0 < self.z_near < self.z_far:
            raise ConfigurationError(
                f"need 0 < z_near < z_far, got z_near={self.z_near}, z_far={self.z_far}; "
                "the disparity function would not be strictly monotone")
        if int(self.precision) != self.precision or self.precision < 1:
            raise ConfigurationError("precision must be an integer >= 1")
        if not 0 <= self.offset < 1:
            raise ConfigurationError("offset must lie in [0, 1)")

    @property
    def _slope(self):
        return self.focal_length * self.baseline * (1 / self.z_near - 1 / self.z_far) / 255.0

    @property
    def _intercept(self):
        return self.focal_length * self.baseline / self.z_far

    def disparity(self, v):
        return self._slope * np.asarray(v, dtype=np.float64) + self._intercept

    def inverse_disparity(self, d):
        return (np.asarray(d, dtype=np.float64) - self._intercept) / self._slope

    def quantized_index(self, v):
        """Integer ``ceil((DP(v) - lam) K)``; equal indices render identically."""
        return np.ceil((self.disparity(v) - self.offset) * self.precision).astype(np.int64)


@dataclass(frozen=True)
class DnoseProfile:
    """Per-level synthesis-free interval ``[lower[v], upper[v]]``."""

    lower: np.ndarray
    upper: np.ndarray

    @property
    def delta_minus(self):
        return self.lower - np.arange(LEVELS)

    @property
    def delta_plus(self):
        return self.upper - np.arange(LEVELS)

    def contains(self, v, w):
        """Whether depth ``w`` lies in the interval of level ``v`` (elementwise)."""
        v = np.asarray(v, dtype=np.int64)
        return (self.lower[v] <= w) & (w <= self.upper[v])


def build_dnose_profile(cam: CameraConfig) -> DnoseProfile:
    """Interval of integer depth levels sharing each level's quantized disparity.

    The bounds follow the ceiling/floor construction through the inverse
    disparity function, then are snapped so membership agrees exactly with
    the quantized-disparity test (floating round-off at interval edges).
    """
    v = np.arange(LEVELS)
    k, lam = cam.precision, cam.offset
    n = cam.quantized_index(v)
    # DP values with the same index n fill ((n-1)/K + lam, n/K + lam]
    lo = np.ceil(cam.inverse_disparity((n - 1) / k + lam))
    hi = np.floor(cam.inverse_disparity(n / k + lam))
    lo = np.clip(lo, 0, LEVELS - 1).astype(np.int64)
    hi = np.clip(hi, 0, LEVELS - 1).astype(np.int64)
    q = cam.quantized_index(np.arange(LEVELS))
    for i in range(LEVELS):
        a, b = min(lo[i], i), max(hi[i], i)
        while a < i and q[a] != n[i]:
            a += 1
        while a > 0 and q[a - 1] == n[i]:
            a -= 1
        while b > i and q[b] != n[i]:
            b -= 1
        while b < LEVELS - 1 and q[b + 1] == n[i]:
            b += 1
        lo[i], hi[i] = a, b
    lo.setflags(write=False)
    hi.setflags(write=False)
    return DnoseProfile(lo, hi)


def _depth_array(d):
    from .data import DepthMap
    if isinstance(d, DepthMap):
        return d.depth
    a = np.asarray(d)
    if np.any(a != np.round(a)) or a.min() < 0 or a.max() > 255:
        raise ValueError("depth maps must hold integer levels in [0, 255]")
    return a.astype(np.int64)


def ndse(ref, dist, profile: DnoseProfile):
    """Noticeable depth synthesis error, normalized per pixel.

    Sums ``|D - D'|`` over pixels whose distorted level falls outside the
    reference level's D-NOSE interval, divided by the pixel count.
    """
    a, b = check_pair(ref, dist, convert=_depth_array)
    outside = ~profile.contains(a, b)
    return float(np.sum(np.abs(a - b)[outside]) / a.size)


def external_score(command, sample, timeout=60.0):
    """Run an external scorer and parse the single number it prints.

    The command receives the sample's reference textures, distorted
    textures, then (if present) reference and distorted depth maps as
    positional arguments, and must print one decimal number on stdout.

    Raises
    ------
    ScorerUnavailableError
        On a nonzero exit, a timeout, missing paths or unparseable output.
    """
    argv = shlex.split(command) if isinstance(command, str) else list(command)
    paths = getattr(sample, "paths", None)
    if not paths:
        raise ScorerUnavailableError(f"sample {sample.id!r} has no file paths for the external scorer")
    for key in ("ref_tex", "dist_tex", "ref_depth", "dist_depth"):
        argv += [str(p) for p in paths.get(key, ())]
    try:
        proc = subprocess.run(argv, capture_output=True, text=True, timeout=timeout)
    except subprocess.TimeoutExpired:
        raise ScorerUnavailableError(f"external scorer timed out after {timeout} s") from None
    except OSError as exc:
        raise ScorerUnavailableError(f"external scorer could not start: {exc}") from exc
    if proc.returncode != 0:
        raise ScorerUnavailableError(
            f"external scorer exited with status {proc.returncode}: {proc.stderr.strip()[:200]}")
    out = proc.stdout.strip()
    try:
        value = float(out)
    except ValueError:
        raise ScorerUnavailableError(f"external scorer printed {out[:80]!r}, expected a number") from None
    if not math.isfinite(value):
        raise ScorerUnavailableError(f"external scorer printed non-finite value {out!r}")
    return value
