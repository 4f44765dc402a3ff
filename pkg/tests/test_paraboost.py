import json
import math
import sys

import numpy as np
import pytest

from pbsiqa import load_manifest, srocc
from pbsiqa.paraboost import (DEFAULT_SCORERS, FeatureExtractionError, ParaBoostModel,
                              ParaBoostRegressor, ScorerInputs, ScorerSpec, cross_validate,
                              extract_dataset, extract_scorer_features, format_progressive,
                              make_fold_plan, progressive_csv, progressive_fusion_report,
                              resolve_scorers)
from pbsiqa.synthetic import make_samples


@pytest.fixture(scope="module")
def pixel_data(stereo_samples):
    return extract_dataset(stereo_samples, resolve_scorers([1, 3]))


def toy_inputs(n=40, seed=0):
    """Two scorers, each informative on only half of the samples."""
    rng = np.random.default_rng(seed)
    mos = rng.uniform(1, 5, n)
    kind = np.arange(n) % 2
    a = np.where(kind == 0, mos, rng.uniform(1, 5, n)) + rng.normal(0, 0.05, n)
    b = np.where(kind == 1, mos, rng.uniform(1, 5, n)) + rng.normal(0, 0.05, n)
    X = np.column_stack([a, kind, b, kind])
    ids = [f"t{i}" for i in range(n)]
    return ScorerInputs(ids, X, mos, [f"src{i % 8}" for i in range(n)], ["x"] * n,
                        ((1, 2), (2, 2)), {"view_count": 2, "has_depth": False})


# --------------------------------------------------------------------------
# scorers and layout


def test_default_scorers():
    assert [s.id for s in resolve_scorers()] == list(range(1, 9))
    assert [s.id for s in resolve_scorers(has_depth=False)] == list(range(1, 8))
    assert resolve_scorers(external=True)[-1].id == 9
    assert DEFAULT_SCORERS[3].features == ("psnr", "md", "min")
    with pytest.raises(ValueError, match="1..9"):
        resolve_scorers([10])


def test_scorer_spec_checks():
    with pytest.raises(ValueError, match="empty"):
        ScorerSpec(1, "x", ())
    with pytest.raises(ValueError, match="source"):
        ScorerSpec(1, "x", ("ndse",))
    with pytest.raises(KeyError):
        ScorerSpec(1, "x", ("nope",))
    spec = DEFAULT_SCORERS[8]
    assert ScorerSpec.from_dict(json.loads(json.dumps(spec.to_dict()))) == spec


def test_feature_layout_is_view_major():
    s = make_samples(n_sources=1, levels=1, kinds=("blur",), views=3, depth=True, size=32)[0]
    v = extract_scorer_features(DEFAULT_SCORERS[3], s)
    assert v.shape == (9,)
    from pbsiqa import compute_features
    for view, (ref, dist) in enumerate(s.view_set.views):
        feats = compute_features(("psnr", "md", "min"), ref, dist)
        np.testing.assert_array_equal(v[3 * view:3 * view + 3], [feats["psnr"], feats["md"], feats["min"]])
    assert extract_scorer_features(DEFAULT_SCORERS[8], s).shape == (3,)


def test_layout_widths(pixel_data):
    assert pixel_data.layout == ((1, 4), (3, 6))
    assert pixel_data.X.shape == (36, 10)
    assert pixel_data.block(3) == slice(4, 10)


def test_missing_depth_names_scorer(stereo_samples):
    with pytest.raises(FeatureExtractionError, match="scorer 8"):
        extract_dataset(stereo_samples, resolve_scorers([3, 8]))
    with pytest.raises(FeatureExtractionError, match="scorer 8"):
        extract_scorer_features(DEFAULT_SCORERS[8], stereo_samples[0])


# --------------------------------------------------------------------------
# regressor


def test_training_preconditions(small_grid):
    X = np.random.default_rng(0).normal(size=(9, 2))
    with pytest.raises(ValueError, match="10 training"):
        ParaBoostRegressor(grid=small_grid).fit(X, np.arange(9.0))
    X = np.vstack([X, X])
    with pytest.raises(ValueError, match="degenerate"):
        ParaBoostRegressor(grid=small_grid).fit(X, np.full(18, 3.0))
    with pytest.raises(ValueError, match="layout"):
        ParaBoostRegressor(layout=((1, 3),), grid=small_grid).fit(X, np.arange(18.0))


def test_predictions_stay_in_mos_range(small_grid):
    data = toy_inputs()
    reg = ParaBoostRegressor(layout=data.layout, grid=small_grid).fit(data.X, data.mos)
    far = np.random.default_rng(1).normal(0, 100, size=(50, 4))
    p = reg.predict(far)
    lo, hi = data.mos.min(), data.mos.max()
    assert np.all((p >= lo) & (p <= hi))
    s = reg.transform(far)
    assert s.shape == (50, 2) and s.min() >= 0 and s.max() <= 1


def test_external_block_is_calibrated(small_grid):
    rng = np.random.default_rng(2)
    mos = rng.uniform(1, 5, 30)
    X = np.column_stack([mos + rng.normal(0, 0.1, 30), 100 * mos])
    reg = ParaBoostRegressor(layout=((3, 1), (9, 1)), grid=small_grid).fit(X, mos)
    s = reg.transform(X)
    assert s[:, 1].min() == 0 and s[:, 1].max() == 1
    np.testing.assert_allclose(s[:, 1], (mos - mos.min()) / np.ptp(mos), atol=1e-12)


def test_restrict_matches_fresh_fit(small_grid):
    data = toy_inputs()
    full = ParaBoostRegressor(layout=data.layout, grid=small_grid).fit(data.X, data.mos)
    sub = data.subset([2])
    part = full.restrict([2]).fit_fuser(sub.X, data.mos)
    fresh = ParaBoostRegressor(layout=sub.layout, grid=small_grid).fit(sub.X, data.mos)
    np.testing.assert_array_equal(part.predict(sub.X), fresh.predict(sub.X))


# --------------------------------------------------------------------------
# folds


@pytest.mark.parametrize("policy", ["random", "content-disjoint"])
def test_fold_partition(policy):
    ids = [f"x{i}" for i in range(37)]
    tags = [f"src{i % 12}" for i in range(37)]
    plan = make_fold_plan(ids, tags, 10, policy, seed=4)
    flat = [i for f in plan.folds for i in f]
    assert sorted(flat) == sorted(ids) and len(flat) == len(set(flat))
    assert len(plan.folds) == 10 and all(plan.folds)
    if policy == "random":
        assert max(map(len, plan.folds)) - min(map(len, plan.folds)) <= 1
    else:
        tag = dict(zip(ids, tags))
        owner = {}
        for k, f in enumerate(plan.folds):
            for i in f:
                assert owner.setdefault(tag[i], k) == k
    assert plan == make_fold_plan(ids, tags, 10, policy, seed=4)


def test_fold_errors():
    ids = [f"x{i}" for i in range(20)]
    with pytest.raises(ValueError, match="a: 12, b: 8"):
        make_fold_plan(ids, ["a"] * 12 + ["b"] * 8, 10, "content-disjoint")
    with pytest.raises(ValueError, match="cannot fill"):
        make_fold_plan(ids[:5], ["a"] * 5, 10)
    with pytest.raises(ValueError, match="policy"):
        make_fold_plan(ids, ids, 10, "stratified")


# --------------------------------------------------------------------------
# cross-validation


def test_cv_coverage_and_no_leakage(small_grid):
    data = toy_inputs()
    pos = {i: k for k, i in enumerate(data.ids)}
    seen = []

    def hook(fold, train, test, model):
        tr = [pos[i] for i in train]
        assert not set(train) & set(test)
        # every scaler saw the training rows only
        for (sid, _), scorer in zip(model.layout_, model.scorers_):
            block = data.X[tr][:, data.block(sid)]
            np.testing.assert_array_equal(scorer.scaler_.data_min_, block.min(0))
            np.testing.assert_array_equal(scorer.scaler_.data_max_, block.max(0))
        assert model.mos_range_ == (data.mos[tr].min(), data.mos[tr].max())
        seen.extend(test)

    res = cross_validate(data, k=5, seed=1, on_fold=hook, grid=small_grid)
    assert sorted(seen) == sorted(data.ids) and len(seen) == len(data.ids)
    assert np.all(np.isfinite(res.predictions))
    assert res.report.n == len(data.ids)


def test_cv_deterministic(small_grid):
    data = toy_inputs()
    a = cross_validate(data, k=5, seed=3, grid=small_grid)
    b = cross_validate(data, k=5, seed=3, grid=small_grid)
    assert a.report == b.report
    assert a.predictions_csv() == b.predictions_csv()


def test_fusion_of_complementary_scorers(small_grid):
    data = toy_inputs(60)
    res = cross_validate(data, k=5, grid=small_grid)
    singles = [res.scorer_report(s).pcc for s in (1, 2)]
    assert res.report.pcc >= max(singles) - 0.01
    assert res.report.pcc > 0.9


def test_single_scorer_fusion_keeps_ranking(pixel_data, small_grid):
    # one fuser on held-out content; pooled CV would mix a different map per fold
    train = pixel_data.subset([3])
    test = extract_dataset(make_samples(n_sources=4, levels=3, views=2, size=40, seed=13),
                           resolve_scorers([3]))
    model = ParaBoostRegressor(layout=train.layout, grid=small_grid).fit(train.X, train.mos)
    fused = srocc(model.predict(test.X), test.mos)
    single = srocc(model.transform(test.X)[:, 0], test.mos)
    assert abs(fused - single) <= 0.02


def test_progressive_report(small_grid):
    data = toy_inputs(60)
    rows, res = progressive_fusion_report(data, [1, 2], k=5, grid=small_grid, with_result=True)
    assert [r.scorer_id for r in rows] == [1, 2]
    assert rows[0].gain is None
    assert rows[1].gain == pytest.approx((rows[1].pcc - rows[0].pcc) / rows[0].pcc * 100)
    assert rows[1].gain > 0
    assert rows[1].pcc == res.report.pcc
    full = cross_validate(data, k=5, grid=small_grid)
    np.testing.assert_array_equal(res.predictions, full.predictions)
    one = progressive_fusion_report(data, [2], k=5, grid=small_grid)
    assert len(one) == 1 and one[0].gain is None
    text = format_progressive(rows, {1: "edge"}).splitlines()
    assert text[0].split() == ["Scorer", "added", "PCC", "Gain", "%"]
    assert text[1].startswith("#1 edge") and text[2].rstrip().endswith(f"{rows[1].gain:+.2f}")
    csv = progressive_csv(rows).splitlines()
    assert csv[0] == "scorer_id,pcc,gain_percent" and csv[1].endswith(",")


def test_progressive_undefined_gain():
    from pbsiqa.paraboost import ProgressiveRow
    rows = [ProgressiveRow(1, 0.0, None), ProgressiveRow(2, 0.5, float("nan"))]
    assert format_progressive(rows).splitlines()[2].endswith("undef")
    assert progressive_csv(rows).splitlines()[2].endswith(",nan")


# --------------------------------------------------------------------------
# bundles and the external scorer


def test_bundle_round_trip(tmp_path, stereo_samples, small_grid):
    model, data = ParaBoostModel.train(stereo_samples, scorers=[1, 3], grid=small_grid)
    model.save(tmp_path / "m")
    assert sorted(p.name for p in (tmp_path / "m").iterdir()) == [
        "fuser.json", "manifest.json", "scorer_1.json", "scorer_3.json"]
    back = ParaBoostModel.load(tmp_path / "m")
    ids, pred, skipped = back.predict_samples(stereo_samples)
    assert ids == data.ids and not skipped
    np.testing.assert_allclose(pred, model.regressor.predict(data.X), rtol=0, atol=1e-15)
    with pytest.raises(ValueError, match="bundle"):
        ParaBoostModel.load(tmp_path / "missing")


def stub(tmp_path, body):
    script = tmp_path / "ext.py"
    script.write_text("import sys\n" + body + "\n")
    return f"{sys.executable} {script}"


def test_external_scorer_constant(tmp_path, stereo_dataset):
    samples = load_manifest(stereo_dataset)[:12]
    data = extract_dataset(samples, resolve_scorers([3, 9]), external_command=stub(tmp_path, "print(0.5)"))
    assert len(data) == 12 and not data.skipped
    np.testing.assert_array_equal(data.X[:, data.block(9)], 0.5)


def test_failing_external_skips_samples(tmp_path, stereo_dataset, small_grid):
    samples = load_manifest(stereo_dataset)
    cmd = stub(tmp_path, "sys.exit(3) if 'noise_1' in sys.argv[3] else print(len(sys.argv[3]))")
    data = extract_dataset(samples, resolve_scorers([3, 9]), external_command=cmd)
    gone = {i for i, _ in data.skipped}
    assert gone == {s.id for s in samples if "noise_1" in s.id}
    assert all("status 3" in why for _, why in data.skipped)
    assert len(data) == len(samples) - len(gone) and not gone & set(data.ids)
    res = cross_validate(data, k=4, grid=small_grid)
    assert res.report.skipped == len(gone) and res.report.n == len(data)
    assert math.isfinite(res.report.pcc)
