"""Two-stage score fusion: per-distortion scorers feeding a fusing regressor.

Stage I runs one nu-SVR per scorer over that scorer's features, taken from
every view and concatenated view-major.  Stage II fits a nu-SVR on the
vector of Stage-I scores.  Targets are MOS rescaled to [0, 1] with the
training range, and predictions are mapped back to the MOS scale.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin, clone
from sklearn.exceptions import NotFittedError

from ._validation import check_matrix, check_targets
from .depth import ScorerUnavailableError, external_score
from .evaluation import EvalReport, evaluate, performance_gain
from .features import DEPTH_FEATURES, FeatureConfig, check_feature_names, compute_features
from .svr import GridSearchSpec, NuSVR, NuSVRCV, UnitScaler

log = logging.getLogger(__name__)

BUNDLE_FORMAT = "pbsiqa-paraboost-bundle"
BUNDLE_VERSION = 1
MIN_TRAIN_SAMPLES = 10
EXTERNAL_ID = 9


class ProfileMismatchError(ValueError):
    """A model bundle does not fit the layout of the data it is applied to."""


class FeatureExtractionError(ValueError):
    """A feature failed for a specific scorer, sample and view."""


@dataclass(frozen=True)
class ScorerSpec:
    """One Stage-I scorer: an id, its features and where its inputs come from."""

    id: int
    name: str
    features: tuple = ()
    source: str = "texture"

    def __post_init__(self):
        if self.source not in ("texture", "depth", "external"):
            raise ValueError(f"scorer {self.id}: unknown source {self.source!r}")
        if self.source == "external":
            if self.features:
                raise ValueError(f"scorer {self.id}: an external scorer takes no features")
        else:
            if not self.features:
                raise ValueError(f"scorer {self.id}: feature set is empty")
            check_feature_names(self.features)
            depth = [f in DEPTH_FEATURES for f in self.features]
            if any(depth) != (self.source == "depth") or (any(depth) and not all(depth)):
                raise ValueError(f"scorer {self.id}: features do not match source {self.source!r}")

    def to_dict(self):
        return {"id": self.id, "name": self.name, "features": list(self.features), "source": self.source}

    @classmethod
    def from_dict(cls, d):
        return cls(int(d["id"]), d["name"], tuple(d["features"]), d["source"])


DEFAULT_SCORERS = {
    1: ScorerSpec(1, "edge", ("esmse", "pratt")),
    2: ScorerSpec(2, "spectral", ("hvs_mse", "zcr")),
    3: ScorerSpec(3, "pixel", ("psnr", "md", "min")),
    4: ScorerSpec(4, "ssim", ("ssim_l", "ssim_c", "ssim_s")),
    5: ScorerSpec(5, "phase", ("pc", "gm")),
    6: ScorerSpec(6, "svd", ("sv", "svec")),
    7: ScorerSpec(7, "uqi-mas", ("uqi", "mas")),
    8: ScorerSpec(8, "depth", ("ndse",), "depth"),
    9: ScorerSpec(9, "external", (), "external"),
}


def resolve_scorers(ids=None, has_depth=True, external=False):
    """Scorer specs for ``ids``, or the profile default when ``ids`` is None.

    The default is scorers 1-7, plus 8 with depth maps and 9 with an
    external command.
    """
    if ids is None:
        ids = list(range(1, 8)) + ([8] if has_depth else []) + ([EXTERNAL_ID] if external else [])
    ids = sorted(set(int(i) for i in ids))
    bad = [i for i in ids if i not in DEFAULT_SCORERS]
    if bad:
        raise ValueError(f"scorer ids must lie in 1..9, got {bad}")
    if not ids:
        raise ValueError("at least one scorer is required")
    return tuple(DEFAULT_SCORERS[i] for i in ids)


# --------------------------------------------------------------------------
# feature extraction

def _view_features(spec, sample, config):
    vs = sample.view_set
    rows = []
    if spec.source == "depth":
        if not vs.has_depth:
            raise FeatureExtractionError(
                f"scorer {spec.id} ({spec.name}) needs depth maps, sample {sample.id!r} has none")
        for v, (rd, dd) in enumerate(vs.depths):
            try:
                rows.append(compute_features(spec.features, None, None, rd, dd, config))
            except ValueError as exc:
                raise FeatureExtractionError(
                    f"scorer {spec.id}, sample {sample.id!r}, view {v + 1}: {exc}") from exc
        return rows
    for v, (ref, dist) in enumerate(vs.views):
        try:
            rows.append(compute_features(spec.features, ref, dist, config=config))
        except ValueError as exc:
            raise FeatureExtractionError(
                f"scorer {spec.id}, sample {sample.id!r}, view {v + 1}: {exc}") from exc
    return rows


def extract_scorer_features(spec, sample, config=None, external_command=None, timeout=60.0):
    """Feature vector of one sample for one scorer.

    Texture and depth scorers give ``views x features`` values in
    view-major order (all features of view 1, then view 2, ...).  The
    external scorer gives its single raw output.

    Raises
    ------
    FeatureExtractionError
        Missing depth maps for a depth scorer, or a feature error, with the
        scorer and sample named.
    ScorerUnavailableError
        The external scorer is not configured or failed.
    """
    if spec.source == "external":
        if not external_command:
            raise ScorerUnavailableError(f"scorer {spec.id} is external but no command is configured")
        return np.array([external_score(external_command, sample, timeout)])
    rows = _view_features(spec, sample, config or FeatureConfig())
    return np.array([r[f] for r in rows for f in spec.features], dtype=np.float64)


def _sample_row(specs, sample, config, external_command):
    """Concatenate all scorer blocks for one sample, or return the failure."""
    try:
        return np.concatenate([extract_scorer_features(s, sample, config, external_command)
                               for s in specs]), None
    except ScorerUnavailableError as exc:
        return None, str(exc)


@dataclass
class ScorerInputs:
    """Stage-I inputs for a dataset: one row per usable sample.

    ``layout`` lists ``(scorer_id, width)`` blocks in column order;
    ``skipped`` holds ``(sample_id, reason)`` for samples a configured
    scorer could not handle.
    """

    ids: list
    X: np.ndarray
    mos: np.ndarray
    source_tags: list
    distortion_tags: list
    layout: tuple
    profile: dict
    skipped: list = field(default_factory=list)

    def __len__(self):
        return len(self.ids)

    def block(self, scorer_id):
        start = 0
        for sid, width in self.layout:
            if sid == scorer_id:
                return slice(start, start + width)
            start += width
        raise KeyError(f"scorer {scorer_id} is not in this layout")

    def subset(self, scorer_ids):
        """Keep only the given scorers' blocks, in the given order."""
        cols = [np.arange(self.X.shape[1])[self.block(s)] for s in scorer_ids]
        layout = tuple((s, dict(self.layout)[s]) for s in scorer_ids)
        return ScorerInputs(self.ids, self.X[:, np.concatenate(cols)], self.mos, self.source_tags,
                            self.distortion_tags, layout, self.profile, list(self.skipped))

    def take(self, rows):
        rows = np.asarray(rows)
        return ScorerInputs([self.ids[i] for i in rows], self.X[rows], self.mos[rows],
                            [self.source_tags[i] for i in rows],
                            [self.distortion_tags[i] for i in rows], self.layout, self.profile, [])


def dataset_profile(samples):
    """Shared view count and depth availability; mixed datasets are rejected."""
    counts = {s.view_count for s in samples}
    depth = {s.has_depth for s in samples}
    if len(counts) > 1 or len(depth) > 1:
        raise ProfileMismatchError("all samples must share view count and depth availability")
    if not samples:
        return {"view_count": 0, "has_depth": False}
    return {"view_count": counts.pop(), "has_depth": depth.pop()}


def extract_dataset(samples, scorers, config=None, external_command=None, n_jobs=None):
    """Compute every configured scorer block for every sample.

    Samples whose external scorer fails are skipped and reported, never
    imputed.  Feature errors (including missing depth maps) propagate.
    """
    specs = tuple(scorers)
    config = config or FeatureConfig()
    profile = dataset_profile(samples)
    if any(s.source == "depth" for s in specs) and samples and not profile["has_depth"]:
        bad = next(s for s in specs if s.source == "depth")
        raise FeatureExtractionError(f"scorer {bad.id} ({bad.name}) needs depth maps; "
                                     "the dataset has none")
    results = Parallel(n_jobs=n_jobs)(
        delayed(_sample_row)(specs, s, config, external_command) for s in samples)
    keep, rows, skipped = [], [], []
    for s, (row, why) in zip(samples, results):
        if row is None:
            log.warning("skipping sample %s: %s", s.id, why)
            skipped.append((s.id, why))
        else:
            keep.append(s)
            rows.append(row)
    widths = []
    for spec in specs:
        widths.append((spec.id, 1 if spec.source == "external"
                       else len(spec.features) * profile["view_count"]))
    X = np.array(rows, dtype=np.float64).reshape(len(rows), sum(w for _, w in widths))
    return ScorerInputs([s.id for s in keep], X, np.array([s.mos for s in keep]),
                        [s.source_tag for s in keep], [s.distortion_tag for s in keep],
                        tuple(widths), profile, skipped)


# --------------------------------------------------------------------------
# the two-stage regressor

class ExternalCalibration(TransformerMixin, BaseEstimator):
    """Maps a raw external score onto [0, 1] using the training range."""

    def fit(self, X, y=None):
        self.scaler_ = UnitScaler().fit(check_matrix(X))
        return self

    def predict(self, X):
        return self.scaler_.transform(check_matrix(X))[:, 0]

    def to_dict(self):
        return {"format": "pbsiqa-external-calibration", "scaling": self.scaler_.to_dict()}

    @classmethod
    def from_dict(cls, d):
        m = cls()
        m.scaler_ = UnitScaler.from_dict(d["scaling"])
        return m


class ParaBoostRegressor(RegressorMixin, BaseEstimator):
    """Stage-I scorers plus a Stage-II fuser over column blocks of ``X``.

    Parameters
    ----------
    layout : sequence of (scorer_id, width)
        Column blocks of ``X``; each block trains one scorer.  Scorer 9 is
        treated as an external score and only calibrated to [0, 1].
    nu : float
    grid : GridSearchSpec, optional
        ``(C, gamma)`` search for the scorers.
    fuser_grid : GridSearchSpec, optional
        Search for the fuser; defaults to ``grid``.
    random_state : int
        Seeds every fold assignment of the grid searches.
    n_jobs : int, optional
        Workers for grid-search cells.

    Attributes
    ----------
    scorers_ : list
        Fitted Stage-I predictors in layout order.
    fuser_ : NuSVR
    searches_ : dict
        Grid-search tables keyed by scorer id, ``"fuser"`` for the fuser.
    mos_range_ : tuple of float
        ``(min, max)`` of the training MOS.
    """

    def __init__(self, layout=None, nu=0.5, grid=None, fuser_grid=None, random_state=0,
                 tol=1e-3, n_jobs=None):
        self.layout = layout
        self.nu = nu
        self.grid = grid
        self.fuser_grid = fuser_grid
        self.random_state = random_state
        self.tol = tol
        self.n_jobs = n_jobs

    def _layout(self, n_cols):
        layout = tuple((int(s), int(w)) for s, w in (self.layout or [(1, n_cols)]))
        if sum(w for _, w in layout) != n_cols:
            raise ValueError(f"layout covers {sum(w for _, w in layout)} columns, X has {n_cols}")
        return layout

    def _blocks(self, X):
        start = 0
        for sid, width in self.layout_:
            yield sid, X[:, start:start + width]
            start += width

    def fit(self, X, y):
        return self.fit_scorers(X, y).fit_fuser(X, y)

    def fit_scorers(self, X, y):
        """Fit Stage I only: MOS normalization and one model per block."""
        X = check_matrix(X)
        y = check_targets(y, X.shape[0])
        if X.shape[0] < MIN_TRAIN_SAMPLES:
            raise ValueError(f"need at least {MIN_TRAIN_SAMPLES} training samples, got {X.shape[0]}")
        lo, hi = float(y.min()), float(y.max())
        if hi == lo:
            raise ValueError("all training MOS values are equal; the target range is degenerate")
        self.layout_ = self._layout(X.shape[1])
        self.mos_range_ = (lo, hi)
        t = self._normalize(y)
        self.scorers_, self.searches_ = [], {}
        for sid, block in self._blocks(X):
            if sid == EXTERNAL_ID:
                self.scorers_.append(ExternalCalibration().fit(block))
                continue
            cv = NuSVRCV(self.nu, self.grid, self.random_state, self.tol, self.n_jobs).fit(block, t)
            self.scorers_.append(cv.best_estimator_)
            self.searches_[sid] = _search_summary(cv)
        self.n_features_in_ = X.shape[1]
        return self

    def fit_fuser(self, X, y):
        """Fit Stage II on the in-sample Stage-I scores of ``X``."""
        t = self._normalize(check_targets(y, np.shape(X)[0]))
        cv = NuSVRCV(self.nu, self.fuser_grid or self.grid, self.random_state, self.tol,
                     self.n_jobs).fit(self.transform(X), t)
        self.fuser_ = cv.best_estimator_
        self.searches_["fuser"] = _search_summary(cv)
        return self

    def restrict(self, scorer_ids):
        """Unfused copy keeping only ``scorer_ids`` (in that order) of the fitted Stage I.

        Call :meth:`fit_fuser` on the matching column subset afterwards.
        """
        index = {sid: k for k, (sid, _) in enumerate(self.layout_)}
        sub = clone(self).set_params(layout=tuple(self.layout_[index[s]] for s in scorer_ids))
        sub.layout_ = sub.layout
        sub.scorers_ = [self.scorers_[index[s]] for s in scorer_ids]
        sub.searches_ = {s: self.searches_[s] for s in scorer_ids if s in self.searches_}
        sub.mos_range_ = self.mos_range_
        sub.n_features_in_ = sum(w for _, w in sub.layout_)
        return sub

    def _normalize(self, y):
        lo, hi = self.mos_range_
        return (y - lo) / (hi - lo)

    def transform(self, X):
        """Stage-I score vectors, one column per scorer, clamped to [0, 1]."""
        if not hasattr(self, "scorers_"):
            raise NotFittedError("ParaBoostRegressor is not fitted")
        X = check_matrix(X)
        if X.shape[1] != sum(w for _, w in self.layout_):
            raise ValueError(f"expected {sum(w for _, w in self.layout_)} columns, got {X.shape[1]}")
        cols = [np.clip(m.predict(b), 0.0, 1.0) for m, (_, b) in zip(self.scorers_, self._blocks(X))]
        return np.column_stack(cols)

    def predict_normalized(self, X):
        return np.clip(self.fuser_.predict(self.transform(X)), 0.0, 1.0)

    def predict(self, X):
        lo, hi = self.mos_range_
        return lo + self.predict_normalized(X) * (hi - lo)

    def models_to_dict(self):
        out = {}
        for (sid, _), m in zip(self.layout_, self.scorers_):
            out[sid] = m.to_dict()
        out["fuser"] = self.fuser_.to_dict()
        return out


def _search_summary(cv):
    return {"best": cv.best_params_, "cv_mse": cv.best_score_, "table": cv.cv_results_}


# --------------------------------------------------------------------------
# bundle

@dataclass
class ParaBoostModel:
    """A trained regressor together with what is needed to apply it to samples."""

    regressor: ParaBoostRegressor
    scorers: tuple
    profile: dict
    feature_config: FeatureConfig = field(default_factory=FeatureConfig)
    external_command: str | None = None

    @classmethod
    def train(cls, samples, scorers=None, feature_config=None, external_command=None,
              n_jobs=None, **params):
        profile = dataset_profile(samples)
        specs = resolve_scorers(scorers, profile["has_depth"], bool(external_command))
        data = extract_dataset(samples, specs, feature_config, external_command, n_jobs)
        reg = ParaBoostRegressor(layout=data.layout, n_jobs=n_jobs, **params).fit(data.X, data.mos)
        model = cls(reg, specs, profile, feature_config or FeatureConfig(), external_command)
        return model, data

    def check_profile(self, profile):
        if profile["view_count"] == 0:
            return
        if profile != self.profile:
            raise ProfileMismatchError(
                f"model expects {self.profile['view_count']} views "
                f"{'with' if self.profile['has_depth'] else 'without'} depth, data has "
                f"{profile['view_count']} views {'with' if profile['has_depth'] else 'without'} depth")

    def predict_samples(self, samples, n_jobs=None):
        """Predicted MOS for every scorable sample.

        Returns
        -------
        ids : list of str
        predictions : ndarray
        skipped : list of (sample_id, reason)
        """
        self.check_profile(dataset_profile(samples))
        if not samples:
            return [], np.zeros(0), []
        data = extract_dataset(samples, self.scorers, self.feature_config, self.external_command, n_jobs)
        if len(data) == 0:
            return [], np.zeros(0), data.skipped
        return data.ids, self.regressor.predict(data.X), data.skipped

    def save(self, directory):
        """Write ``manifest.json``, ``scorer_<id>.json`` per scorer and ``fuser.json``."""
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        reg = self.regressor
        models = reg.models_to_dict()
        files = {}
        for sid, _ in reg.layout_:
            files[str(sid)] = f"scorer_{sid}.json"
            _dump(d / files[str(sid)], models[sid])
        _dump(d / "fuser.json", models["fuser"])
        manifest = {
            "format": BUNDLE_FORMAT,
            "version": BUNDLE_VERSION,
            "profile": self.profile,
            "scorers": [s.to_dict() for s in self.scorers],
            "layout": [list(b) for b in reg.layout_],
            "scorer_files": files,
            "fuser_file": "fuser.json",
            "mos_range": list(reg.mos_range_),
            "feature_config": self.feature_config.to_dict(),
            "external_command": self.external_command,
            "params": {"nu": reg.nu, "random_state": reg.random_state, "tol": reg.tol},
        }
        _dump(d / "manifest.json", manifest)
        return d

    @classmethod
    def load(cls, directory):
        d = Path(directory)
        try:
            with open(d / "manifest.json", encoding="utf-8") as fh:
                man = json.load(fh)
        except OSError as exc:
            raise ValueError(f"cannot read model bundle {d}: {exc}") from exc
        if man.get("format") != BUNDLE_FORMAT or man.get("version") != BUNDLE_VERSION:
            raise ValueError(f"{d} is not a supported model bundle")
        reg = ParaBoostRegressor(layout=[tuple(b) for b in man["layout"]], **man["params"])
        reg.layout_ = tuple((int(s), int(w)) for s, w in man["layout"])
        reg.scorers_ = []
        for sid, _ in reg.layout_:
            with open(d / man["scorer_files"][str(sid)], encoding="utf-8") as fh:
                doc = json.load(fh)
            reg.scorers_.append(ExternalCalibration.from_dict(doc) if sid == EXTERNAL_ID
                                else NuSVR.from_dict(doc))
        with open(d / man["fuser_file"], encoding="utf-8") as fh:
            reg.fuser_ = NuSVR.from_dict(json.load(fh))
        reg.mos_range_ = tuple(float(v) for v in man["mos_range"])
        reg.n_features_in_ = sum(w for _, w in reg.layout_)
        reg.searches_ = {}
        return cls(reg, tuple(ScorerSpec.from_dict(s) for s in man["scorers"]), man["profile"],
                   FeatureConfig.from_dict(man["feature_config"]), man["external_command"])


def _dump(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=1)
        fh.write("\n")


# --------------------------------------------------------------------------
# cross-validation

@dataclass(frozen=True)
class FoldPlan:
    """Partition of sample ids into folds."""

    folds: tuple
    policy: str
    seed: int

    def test_train(self):
        for k, test in enumerate(self.folds):
            train = [i for j, f in enumerate(self.folds) if j != k for i in f]
            yield list(train), list(test)


def make_fold_plan(ids, source_tags, k=10, policy="random", seed=0):
    """Split ``ids`` into ``k`` folds.

    ``"random"`` shuffles samples; ``"content-disjoint"`` shuffles whole
    ``source_tag`` groups and deals them largest first to the currently
    smallest fold, so no source content straddles two folds.

    Raises
    ------
    ValueError
        ``k < 2``, fewer samples than folds, or fewer distinct source tags
        than folds under the content-disjoint policy.
    """
    ids = list(ids)
    if k < 2:
        raise ValueError("need at least 2 folds")
    if len(ids) < k:
        raise ValueError(f"{len(ids)} samples cannot fill {k} folds")
    rng = np.random.default_rng(seed)
    if policy == "random":
        order = rng.permutation(len(ids))
        folds = tuple(tuple(ids[i] for i in part) for part in np.array_split(order, k))
        return FoldPlan(folds, policy, seed)
    if policy != "content-disjoint":
        raise ValueError(f"unknown fold policy {policy!r}")
    groups = {}
    for i, tag in zip(ids, source_tags):
        groups.setdefault(tag, []).append(i)
    if len(groups) < k:
        counts = ", ".join(f"{t}: {len(v)}" for t, v in sorted(groups.items()))
        raise ValueError(f"content-disjoint {k}-fold split needs at least {k} distinct source tags, "
                         f"found {len(groups)} ({counts})")
    tags = sorted(groups)
    tags = [tags[i] for i in rng.permutation(len(tags))]
    tags.sort(key=lambda t: -len(groups[t]))  # stable, so equal sizes keep the shuffled order
    bins = [[] for _ in range(k)]
    for t in tags:
        smallest = min(range(k), key=lambda j: (len(bins[j]), j))
        bins[smallest].extend(groups[t])
    return FoldPlan(tuple(tuple(b) for b in bins), policy, seed)


@dataclass
class CVResult:
    """Pooled out-of-fold predictions and their evaluation."""

    ids: list
    predictions: np.ndarray
    mos: np.ndarray
    scores: np.ndarray
    scorer_ids: tuple
    report: EvalReport
    plan: FoldPlan

    def scorer_report(self, scorer_id):
        """Evaluation of one Stage-I scorer's pooled out-of-fold scores."""
        j = self.scorer_ids.index(scorer_id)
        return evaluate(self.scores[:, j], self.mos, self.report.skipped)

    def predictions_csv(self, path=None):
        lines = ["sample_id,predicted_mos,mos"]
        lines += [f"{i},{p!r},{m!r}" for i, p, m in
                  zip(self.ids, self.predictions.tolist(), self.mos.tolist())]
        text = "\n".join(lines) + "\n"
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text


def _pooled_runs(data, plan, fusion_sets, seed, on_fold, n_jobs, params):
    """Out-of-fold predictions for several fused scorer subsets at once.

    Stage I is fit once per fold; each subset only refits the fuser, which
    equals training that subset from scratch since every scorer sees only
    its own block.
    """
    pos = {sid: i for i, sid in enumerate(data.ids)}
    n = len(data)
    preds = [np.full(n, np.nan) for _ in fusion_sets]
    scores = np.full((n, len(data.layout)), np.nan)
    for fold, (train, test) in enumerate(plan.test_train()):
        tr = np.array([pos[i] for i in train])
        te = np.array([pos[i] for i in test])
        base = ParaBoostRegressor(layout=data.layout, random_state=seed, n_jobs=n_jobs, **params)
        base.fit_scorers(data.X[tr], data.mos[tr])
        scores[te] = base.transform(data.X[te])
        full = tuple(s for s, _ in data.layout)
        for k, ids in enumerate(fusion_sets):
            sub = data.subset(ids)
            model = base if tuple(ids) == full else base.restrict(ids)
            model.fit_fuser(sub.X[tr], data.mos[tr])
            preds[k][te] = model.predict(sub.X[te])
            if on_fold is not None and tuple(ids) == full:
                on_fold(fold, train, test, model)
        log.info("fold %d/%d: %d train, %d test", fold + 1, len(plan.folds), len(tr), len(te))
    return preds, scores


def cross_validate(data, k=10, policy="random", seed=0, on_fold=None, n_jobs=None, **params):
    """k-fold train/test of the full two-stage model on precomputed inputs.

    For each fold the scorers, their scaling and grid searches, and the
    fuser are fit on the training chunk only; test-chunk predictions are
    pooled and evaluated once.  ``on_fold(fold, train_ids, test_ids,
    model)`` is called after each fold is fit.

    Parameters
    ----------
    data : ScorerInputs
    **params
        Passed to :class:`ParaBoostRegressor` (``nu``, ``grid``, ...).
    """
    plan = make_fold_plan(data.ids, data.source_tags, k, policy, seed)
    full = tuple(s for s, _ in data.layout)
    (pred,), scores = _pooled_runs(data, plan, [full], seed, on_fold, n_jobs, params)
    return _result(data, pred, scores, plan)


def _result(data, pred, scores, plan):
    report = evaluate(pred, data.mos, skipped=len(data.skipped))
    return CVResult(list(data.ids), pred, data.mos.copy(), scores,
                    tuple(s for s, _ in data.layout), report, plan)


@dataclass(frozen=True)
class ProgressiveRow:
    scorer_id: int
    pcc: float
    gain: float | None


def progressive_fusion_report(data, order, k=10, policy="random", seed=0, n_jobs=None,
                              with_result=False, **params):
    """Cross-validated PCC as scorers are added one at a time.

    Row ``j`` fuses scorers ``order[:j + 1]``; its gain is the percentage
    change over the previous row's PCC (NaN when that PCC is zero).  The
    first row has no gain, so a single scorer gives just the base row.

    With ``with_result=True`` the :class:`CVResult` of the complete
    ordering (all scorers fused, plus per-scorer pooled scores) is
    returned too; it comes from the same folds at no extra cost.
    """
    order = [int(s) for s in order]
    if not order:
        raise ValueError("progressive fusion needs at least one scorer")
    data = data.subset(order)
    plan = make_fold_plan(data.ids, data.source_tags, k, policy, seed)
    sets = [tuple(order[:j + 1]) for j in range(len(order))]
    preds, scores = _pooled_runs(data, plan, sets, seed, None, n_jobs, params)
    rows, prev = [], None
    for sid, pred in zip(order, preds):
        cur = evaluate(pred, data.mos, skipped=len(data.skipped)).pcc
        rows.append(ProgressiveRow(sid, cur, None if prev is None else performance_gain(cur, prev)))
        prev = cur
    if with_result:
        return rows, _result(data, preds[-1], scores, plan)
    return rows


def format_progressive(rows, names=None):
    """Text table of a progressive fusion report."""
    names = names or {}
    out = [f"{'Scorer added':<22}{'PCC':>10}{'Gain %':>10}"]
    for r in rows:
        label = f"#{r.scorer_id} {names.get(r.scorer_id, '')}".rstrip()
        if r.gain is None:
            gain = ""
        elif math.isnan(r.gain):
            gain = "undef"
        else:
            gain = f"{r.gain:+.2f}"
        out.append(f"{label:<22}{r.pcc:>10.4f}{gain:>10}")
    return "\n".join(out)


def progressive_csv(rows, path=None):
    lines = ["scorer_id,pcc,gain_percent"]
    for r in rows:
        g = "" if r.gain is None else ("nan" if math.isnan(r.gain) else repr(r.gain))
        lines.append(f"{r.scorer_id},{r.pcc!r},{g}")
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
