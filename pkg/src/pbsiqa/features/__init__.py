"""Full-reference features and the name registry used by the scorers."""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, field, fields

from ..depth import CameraConfig, build_dnose_profile, ndse
from .edges import DEFAULT_SIGMAS, canny, edge_stability, esmse, pratt, pratt_from_edge_maps
from .phase import gradient_magnitude_feature, phase_congruency, phase_congruency_feature
from .pixel import PSNR_CAP, mae, md, min_norm, psnr
from .spectral import DctBandpassFilter, hvs_mse, mannos_sakrison, zcr
from .structural import mas, ssim_components, ssim_index, svd_features, uqi

__all__ = [
    "FeatureConfig", "FEATURE_NAMES", "compute_features", "write_feature_dump",
    "esmse", "pratt", "pratt_from_edge_maps", "canny", "edge_stability",
    "hvs_mse", "zcr", "DctBandpassFilter", "mannos_sakrison",
    "psnr", "md", "mae", "min_norm",
    "ssim_components", "ssim_index", "uqi", "mas", "svd_features",
    "phase_congruency", "phase_congruency_feature", "gradient_magnitude_feature",
]


@dataclass(frozen=True)
class FeatureConfig:
    """Tunable constants for every feature; JSON-serializable via :meth:`to_dict`."""

    esmse_sigmas: tuple = DEFAULT_SIGMAS
    esmse_threshold: str = "corrected"
    pratt_a: float = 0.8
    hvs_pixels_per_degree: float = 32.0
    psnr_cap: float = PSNR_CAP
    min_fraction: float = 0.25
    ssim_window: int = 8
    uqi_window: int = 8
    svd_block: int = 8
    mas_normalization: str = "count"
    camera: CameraConfig = field(default_factory=CameraConfig)

    def to_dict(self):
        d = asdict(self)
        d["esmse_sigmas"] = list(self.esmse_sigmas)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown feature config keys: {sorted(unknown)}")
        if "camera" in d and isinstance(d["camera"], dict):
            d["camera"] = CameraConfig(**d["camera"])
        if "esmse_sigmas" in d:
            d["esmse_sigmas"] = tuple(float(s) for s in d["esmse_sigmas"])
        return cls(**d)


def _group_esmse(ref, dist, rd, dd, cfg):
    return {"esmse": esmse(ref, dist, cfg.esmse_sigmas, cfg.esmse_threshold)}


def _group_pratt(ref, dist, rd, dd, cfg):
    return {"pratt": pratt(ref, dist, cfg.pratt_a, sigmas=cfg.esmse_sigmas)}


def _group_hvs(ref, dist, rd, dd, cfg):
    return {"hvs_mse": hvs_mse(ref, dist, DctBandpassFilter(pixels_per_degree=cfg.hvs_pixels_per_degree))}


def _group_zcr(ref, dist, rd, dd, cfg):
    return {"zcr": zcr(dist)}


def _group_psnr(ref, dist, rd, dd, cfg):
    return {"psnr": psnr(ref, dist, cfg.psnr_cap)}


def _group_md(ref, dist, rd, dd, cfg):
    return {"md": md(ref, dist)}


def _group_mae(ref, dist, rd, dd, cfg):
    return {"mae": mae(ref, dist)}


def _group_min(ref, dist, rd, dd, cfg):
    return {"min": min_norm(ref, dist, cfg.min_fraction)}


def _group_ssim(ref, dist, rd, dd, cfg):
    lum, con, st = ssim_components(ref, dist, cfg.ssim_window)
    return {"ssim_l": lum, "ssim_c": con, "ssim_s": st}


def _group_ssim_index(ref, dist, rd, dd, cfg):
    return {"ssim": ssim_index(ref, dist, cfg.ssim_window)}


def _group_pc(ref, dist, rd, dd, cfg):
    return {"pc": phase_congruency_feature(ref, dist)}


def _group_gm(ref, dist, rd, dd, cfg):
    return {"gm": gradient_magnitude_feature(ref, dist)}


def _group_svd(ref, dist, rd, dd, cfg):
    sv, svec = svd_features(ref, dist, cfg.svd_block)
    return {"sv": sv, "svec": svec}


def _group_uqi(ref, dist, rd, dd, cfg):
    return {"uqi": uqi(ref, dist, cfg.uqi_window)}


def _group_mas(ref, dist, rd, dd, cfg):
    return {"mas": mas(ref, dist, cfg.mas_normalization)}


def _group_ndse(ref, dist, rd, dd, cfg):
    if rd is None or dd is None:
        raise ValueError("ndse needs reference and distorted depth maps")
    return {"ndse": ndse(rd, dd, build_dnose_profile(cfg.camera))}


_GROUPS = [
    (("esmse",), _group_esmse),
    (("pratt",), _group_pratt),
    (("hvs_mse",), _group_hvs),
    (("zcr",), _group_zcr),
    (("psnr",), _group_psnr),
    (("md",), _group_md),
    (("mae",), _group_mae),
    (("min",), _group_min),
    (("ssim_l", "ssim_c", "ssim_s"), _group_ssim),
    (("ssim",), _group_ssim_index),
    (("pc",), _group_pc),
    (("gm",), _group_gm),
    (("sv", "svec"), _group_svd),
    (("uqi",), _group_uqi),
    (("mas",), _group_mas),
    (("ndse",), _group_ndse),
]
_PROVIDER = {name: fn for names, fn in _GROUPS for name in names}
FEATURE_NAMES = tuple(_PROVIDER)
DEPTH_FEATURES = frozenset({"ndse"})


def check_feature_names(names):
    bad = [n for n in names if n not in _PROVIDER]
    if bad:
        raise KeyError(f"unknown feature(s) {bad}; valid names: {', '.join(FEATURE_NAMES)}")


def compute_features(names, ref, dist, ref_depth=None, dist_depth=None, config=None):
    """Evaluate the named features for one view.

    ``ref``/``dist`` may be gray or color; MAS sees the color planes and
    every other texture feature sees Rec.601 luma.

    Returns
    -------
    dict
        Feature name to value, in the order requested.
    """
    from .._validation import as_luma

    check_feature_names(names)
    cfg = config or FeatureConfig()
    done = {}
    gray = None
    for name in names:
        if name in done:
            continue
        fn = _PROVIDER[name]
        if fn is _group_mas:
            done.update(fn(ref, dist, None, None, cfg))
            continue
        if gray is None and name not in DEPTH_FEATURES:
            gray = (as_luma(ref), as_luma(dist))
        g = gray if gray is not None else (None, None)
        done.update(fn(g[0], g[1], ref_depth, dist_depth, cfg))
    return {n: done[n] for n in names}


DUMP_HEADER = ("sample_id", "view_index", "feature_name", "value")


def write_feature_dump(path_or_file, rows):
    """Write ``(sample_id, view_index, feature_name, value)`` rows as CSV."""
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="", encoding="utf-8") if own else path_or_file
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DUMP_HEADER)
        for sid, view, name, value in rows:
            w.writerow([sid, int(view), name, repr(float(value))])
    finally:
        if own:
            fh.close()
