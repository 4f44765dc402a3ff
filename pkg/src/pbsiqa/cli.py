"""Command-line entry point: ``pbsiqa {train,predict,crossval,features}``.

Settings come from built-in defaults, then an optional JSON ``--config``
file, then command-line flags; later sources win.  Every file a command
writes goes under ``--out`` (or the ``--model`` directory for ``train``),
and each command's log starts with the fully resolved configuration.

Exit status is 0 on success, 2 for invalid configuration or usage, and 1
for data, model or runtime errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .data import ManifestError, load_manifest
from .depth import ConfigurationError
from .features import FeatureConfig, check_feature_names, compute_features, write_feature_dump
from .paraboost import (DEFAULT_SCORERS, FeatureExtractionError, ParaBoostModel, ProfileMismatchError,
                        cross_validate, dataset_profile, extract_dataset, format_progressive,
                        progressive_csv, progressive_fusion_report, resolve_scorers)
from .svr import GridSearchSpec

log = logging.getLogger("pbsiqa")

DEFAULTS = {
    "manifest": None,
    "model": None,
    "out": ".",
    "folds": 10,
    "fold_policy": "random",
    "seed": 0,
    "scorers": None,
    "external_scorer": None,
    "jobs": 1,
    "nu": 0.5,
    "grid": None,
    "fuser_grid": None,
    "features": None,
    "feature_config": {},
    "progressive": None,
}


class ConfigError(ValueError):
    """Invalid run configuration."""


def _int_list(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _name_list(text):
    return [t.strip() for t in text.split(",") if t.strip()]


def build_parser():
    p = argparse.ArgumentParser(prog="pbsiqa", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration; flags override it")
    common.add_argument("--manifest", help="dataset manifest CSV")
    common.add_argument("--out", help="output directory (default: current directory)")
    common.add_argument("--scorers", type=_int_list, help="active scorer ids, e.g. 1,2,3")
    common.add_argument("--external-scorer", dest="external_scorer",
                        help="command for scorer 9; receives the sample's image paths")
    common.add_argument("--jobs", type=int, help="worker cap for parallel sections")
    common.add_argument("-v", "--verbose", action="store_true")

    tr = sub.add_parser("train", parents=[common], help="train a model bundle")
    tr.add_argument("--model", help="bundle directory (default: OUT/model)")
    tr.add_argument("--seed", type=int)

    pr = sub.add_parser("predict", parents=[common], help="predict MOS with a trained bundle")
    pr.add_argument("--model", help="bundle directory")

    cv = sub.add_parser("crossval", parents=[common], help="k-fold cross-validation report")
    cv.add_argument("--folds", type=int)
    cv.add_argument("--fold-policy", dest="fold_policy", choices=["random", "content-disjoint"])
    cv.add_argument("--seed", type=int)
    cv.add_argument("--progressive", type=_int_list,
                    help="scorer order for the cumulative fusion table, e.g. 1,2,3")

    fe = sub.add_parser("features", parents=[common], help="dump per-view feature values")
    fe.add_argument("--features", type=_name_list, help="feature names (default: the scorers' features)")
    return p


def resolve_config(args):
    """Merge defaults, the JSON config file and explicit flags."""
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    for key in DEFAULTS:
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    cfg["command"] = args.command
    _validate(cfg)
    return cfg


def _validate(cfg):
    if not cfg["manifest"]:
        raise ConfigError("--manifest is required")
    if not Path(cfg["manifest"]).is_file():
        raise ConfigError(f"manifest {cfg['manifest']} does not exist")
    if cfg["command"] == "predict" and not cfg["model"]:
        raise ConfigError("--model is required for predict")
    if cfg["scorers"] is not None:
        bad = [s for s in cfg["scorers"] if s not in DEFAULT_SCORERS]
        if bad or not cfg["scorers"]:
            raise ConfigError(f"scorer ids must be a non-empty subset of 1..9, got {cfg['scorers']}")
        if 9 in cfg["scorers"] and not cfg["external_scorer"]:
            raise ConfigError("scorer 9 needs --external-scorer")
    if int(cfg["folds"]) < 2:
        raise ConfigError("--folds must be at least 2")
    if cfg["fold_policy"] not in ("random", "content-disjoint"):
        raise ConfigError(f"unknown fold policy {cfg['fold_policy']!r}")
    if cfg["jobs"] is not None and int(cfg["jobs"]) < 1:
        raise ConfigError("--jobs must be at least 1")


def _grid(d):
    if d is None:
        return None
    base = GridSearchSpec()
    return GridSearchSpec(tuple(float(c) for c in d.get("C", base.C_grid)),
                          tuple(float(g) for g in d.get("gamma", base.gamma_grid)),
                          int(d.get("folds", base.folds)))


def _feature_config(cfg):
    try:
        return FeatureConfig.from_dict(cfg["feature_config"] or {})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad feature_config: {exc}") from exc


def _setup_logging(out, command, verbose):
    out.mkdir(parents=True, exist_ok=True)
    root = logging.getLogger("pbsiqa")
    root.handlers.clear()
    root.setLevel(logging.DEBUG if verbose else logging.INFO)
    fmt = logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s")
    fh = logging.FileHandler(out / f"{command}.log", mode="w", encoding="utf-8")
    fh.setFormatter(fmt)
    sh = logging.StreamHandler(sys.stderr)
    sh.setFormatter(fmt)
    sh.setLevel(logging.DEBUG if verbose else logging.WARNING)
    root.addHandler(fh)
    root.addHandler(sh)
    logging.captureWarnings(True)
    wlog = logging.getLogger("py.warnings")
    wlog.handlers[:] = [fh]
    return fh


def _model_params(cfg):
    return {"nu": float(cfg["nu"]), "grid": _grid(cfg["grid"]), "fuser_grid": _grid(cfg["fuser_grid"]),
            "random_state": int(cfg["seed"])}


def _check_depth(cfg, samples):
    prof = dataset_profile(samples)
    if cfg["scorers"] and 8 in cfg["scorers"] and samples and not prof["has_depth"]:
        raise ConfigError("scorer 8 needs depth maps but the manifest has no depth columns")
    return prof


def cmd_train(cfg, out):
    samples = load_manifest(cfg["manifest"])
    _check_depth(cfg, samples)
    model, data = ParaBoostModel.train(samples, cfg["scorers"], _feature_config(cfg),
                                       cfg["external_scorer"], int(cfg["jobs"]), **_model_params(cfg))
    bundle = Path(cfg["model"]) if cfg["model"] else out / "model"
    model.save(bundle)
    reg = model.regressor
    for key, s in reg.searches_.items():
        log.info("grid search %s: best C=%g gamma=%g cv_mse=%.6g", key, s["best"]["C"],
                 s["best"]["gamma"], s["cv_mse"])
        for C, g, mse in s["table"]:
            log.debug("  %s C=%g gamma=%g mse=%.6g", key, C, g, mse)
    fitted = reg.predict(data.X)
    _write_predictions(out / "train_predictions.csv", data.ids, fitted)
    _write_skipped(out, data.skipped)
    log.info("trained %d scorers + fuser on %d samples (%d skipped); bundle at %s",
             len(reg.scorers_), len(data), len(data.skipped), bundle)
    return 0


def cmd_predict(cfg, out):
    model = ParaBoostModel.load(cfg["model"])
    if cfg["external_scorer"]:
        model.external_command = cfg["external_scorer"]
    samples = load_manifest(cfg["manifest"])
    if not samples:
        log.warning("manifest has no samples; writing an empty prediction file")
    ids, pred, skipped = model.predict_samples(samples, int(cfg["jobs"]))
    _write_predictions(out / "predictions.csv", ids, pred)
    _write_skipped(out, skipped)
    log.info("predicted %d samples, skipped %d", len(ids), len(skipped))
    return 0


def cmd_crossval(cfg, out):
    samples = load_manifest(cfg["manifest"])
    prof = _check_depth(cfg, samples)
    specs = resolve_scorers(cfg["scorers"], prof["has_depth"], bool(cfg["external_scorer"]))
    data = extract_dataset(samples, specs, _feature_config(cfg), cfg["external_scorer"], int(cfg["jobs"]))
    params = _model_params(cfg)
    seed = params.pop("random_state")
    res = cross_validate(data, int(cfg["folds"]), cfg["fold_policy"], seed,
                         n_jobs=int(cfg["jobs"]), **params)
    res.report.to_csv(out / "report.csv")
    lines = [res.report.table("ParaBoost")]
    rows = [("scorer", "pcc", "srocc", "rmse")]
    for sid in res.scorer_ids:
        r = res.scorer_report(sid)
        rows.append((sid, repr(r.pcc), repr(r.srocc), repr(r.rmse)))
        lines.append(f"{'  #' + str(sid) + ' ' + DEFAULT_SCORERS[sid].name:<16}"
                     f"{r.pcc:>10.4f}{r.srocc:>10.4f}{r.rmse:>10.4f}")
    (out / "report.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    with open(out / "scorers.csv", "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)
    res.predictions_csv(out / "predictions.csv")
    _write_skipped(out, data.skipped)
    if cfg["progressive"]:
        prog = progressive_fusion_report(data, cfg["progressive"], int(cfg["folds"]), cfg["fold_policy"],
                                         seed, n_jobs=int(cfg["jobs"]), **params)
        progressive_csv(prog, out / "progressive.csv")
        names = {k: v.name for k, v in DEFAULT_SCORERS.items()}
        (out / "progressive.txt").write_text(format_progressive(prog, names) + "\n", encoding="utf-8")
    log.info("cross-validation done: pcc=%.4f srocc=%.4f rmse=%.4f", res.report.pcc,
             res.report.srocc, res.report.rmse)
    print(res.report.table("ParaBoost"))
    return 0


def cmd_features(cfg, out):
    samples = load_manifest(cfg["manifest"])
    fcfg = _feature_config(cfg)
    if cfg["features"]:
        try:
            check_feature_names(cfg["features"])
        except KeyError as exc:
            raise ConfigError(exc.args[0]) from None
        names = list(cfg["features"])
    else:
        prof = _check_depth(cfg, samples)
        ids = cfg["scorers"] or [spec.id for spec in resolve_scorers(None, prof["has_depth"])]
        names = [f for sid in ids for f in DEFAULT_SCORERS[sid].features]
    rows = []
    for s in samples:
        vs = s.view_set
        for v, (ref, dist) in enumerate(vs.views):
            rd, dd = vs.depths[v] if vs.has_depth else (None, None)
            vals = compute_features(names, ref, dist, rd, dd, fcfg)
            rows += [(s.id, v + 1, n, vals[n]) for n in names]
    write_feature_dump(out / "features.csv", rows)
    log.info("wrote %d feature rows", len(rows))
    return 0


def _write_predictions(path, ids, pred):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("sample_id", "predicted_mos"))
        for i, p in zip(ids, np.asarray(pred).tolist()):
            w.writerow((i, repr(float(p))))


def _write_skipped(out, skipped):
    if not skipped:
        return
    with open(out / "skipped.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("sample_id", "reason"))
        w.writerows(skipped)
    log.warning("%d sample(s) skipped; see skipped.csv", len(skipped))


COMMANDS = {"train": cmd_train, "predict": cmd_predict, "crossval": cmd_crossval,
            "features": cmd_features}


def _fail(code, kind, msg):
    print(f"pbsiqa: error: {kind}: {msg}", file=sys.stderr)
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        return _fail(2, "config", exc)
    out = Path(cfg["out"])
    handler = _setup_logging(out, args.command, args.verbose)
    log.info("resolved configuration: %s", json.dumps(cfg, sort_keys=True, default=str))
    try:
        return COMMANDS[args.command](cfg, out)
    except (ConfigError, ConfigurationError) as exc:
        return _fail(2, "config", exc)
    except ManifestError as exc:
        return _fail(1, "manifest", exc)
    except ProfileMismatchError as exc:
        return _fail(1, "profile", exc)
    except FeatureExtractionError as exc:
        return _fail(1, "features", exc)
    except (ValueError, OSError, RuntimeError) as exc:
        log.exception("command failed")
        return _fail(1, type(exc).__name__, exc)
    finally:
        handler.close()
        logging.captureWarnings(False)
        root = logging.getLogger("pbsiqa")
        for h in list(root.handlers):
            root.removeHandler(h)


if __name__ == "__main__":
    sys.exit(main())
