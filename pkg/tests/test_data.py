import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pbsiqa import (ColorImage, DepthMap, Image, LoadError, ManifestError, Sample, ViewSet,
                    load_depth, load_image, load_manifest, write_manifest, write_pnm)


def _pnm(path, magic, w, h, payload, maxval=255):
    path.write_bytes(b"%s\n%d %d\n%d\n" % (magic, w, h, maxval) + bytes(payload))
    return path


def test_constant_p5(tmp_path):
    img = load_image(_pnm(tmp_path / "a.pgm", b"P5", 8, 8, [128] * 64))
    assert isinstance(img, Image)
    assert img.shape == (8, 8)
    assert np.all(img.luma == 128)


def test_tiny_p5_decodes(tmp_path):
    # the raster layer reads any size; the 8x8 floor applies to Image
    with pytest.raises(LoadError, match="8"):
        load_image(_pnm(tmp_path / "a.pgm", b"P5", 4, 4, [128] * 16))


def test_red_ppm_gray_mode(tmp_path):
    img = load_image(_pnm(tmp_path / "r.ppm", b"P6", 8, 8, [255, 0, 0] * 64), "gray")
    np.testing.assert_allclose(img.luma, 76.245, atol=1e-12)


def test_red_ppm_color_mode(tmp_path):
    img = load_image(_pnm(tmp_path / "r.ppm", b"P6", 8, 8, [255, 0, 0] * 64), "color")
    assert isinstance(img, ColorImage)
    assert np.all(img.rgb[..., 0] == 255) and not img.rgb[..., 1:].any()


@pytest.mark.parametrize("content, match", [
    (b"P4\n8 8\n" + bytes(8), "unsupported format"),
    (b"P5\n8 x\n255\n" + bytes(64), "malformed"),
    (b"P5\n8 8\n255\n" + bytes(10), "truncated"),
    (b"P5\n8 8\n65535\n" + bytes(128), "maxval"),
    (b"P5\n8", "truncated"),
])
def test_bad_headers(tmp_path, content, match):
    p = tmp_path / "bad.pgm"
    p.write_bytes(content)
    with pytest.raises(LoadError, match=match):
        load_image(p)


def test_header_comments(tmp_path):
    p = tmp_path / "c.pgm"
    p.write_bytes(b"P5\n# made by hand\n8 8\n255\n" + bytes(range(64)))
    assert load_image(p).luma[7, 7] == 63


@given(arrays(np.uint8, st.tuples(st.integers(8, 20), st.integers(8, 20))))
def test_p5_round_trip(tmp_path_factory, a):
    p = tmp_path_factory.mktemp("rt") / "x.pgm"
    write_pnm(p, Image(a))
    back = load_image(p)
    assert np.array_equal(back.luma, a)


def test_depth_round_trip(tmp_path, rng):
    d = DepthMap(rng.integers(0, 256, (9, 11)))
    write_pnm(tmp_path / "d.pgm", d)
    assert np.array_equal(load_depth(tmp_path / "d.pgm").depth, d.depth)


def test_invariants():
    with pytest.raises(ValueError):
        Image(np.full((7, 9), 3.0))
    with pytest.raises(ValueError):
        Image(np.full((9, 9), 256.0))
    with pytest.raises(ValueError):
        DepthMap(np.full((9, 9), 1.5))
    a = Image(np.zeros((8, 8)))
    with pytest.raises(ValueError):
        ViewSet([(a, a)])
    with pytest.raises(ValueError):
        ViewSet([(a, a), (a, Image(np.zeros((9, 8))))])
    with pytest.raises(ValueError):
        Sample("x", float("nan"), views=ViewSet([(a, a), (a, a)]))


def _write_rows(tmp_path, views, depth, n=2):
    img = Image(np.full((8, 8), 10.0))
    dep = DepthMap(np.full((8, 8), 7))
    write_pnm(tmp_path / "t.pgm", img)
    write_pnm(tmp_path / "d.pgm", dep)
    rows = []
    for i in range(n):
        r = {"id": f"s{i}", "source_tag": "a", "distortion_tag": "blur", "mos": 1.5 + i,
             "ref_tex": ["t.pgm"] * views, "dist_tex": ["t.pgm"] * views}
        if depth:
            r["ref_depth"] = r["dist_depth"] = ["d.pgm"] * views
        rows.append(r)
    path = tmp_path / "m.csv"
    write_manifest(path, rows, views, depth)
    return path


def test_manifest_mvd(tmp_path):
    samples = load_manifest(_write_rows(tmp_path, 3, True))
    assert [s.id for s in samples] == ["s0", "s1"]
    assert all(s.view_count == 3 and s.has_depth for s in samples)
    assert samples[1].view_set.depths[2][0].depth[0, 0] == 7


def test_manifest_stereo(tmp_path):
    (s, _) = load_manifest(_write_rows(tmp_path, 2, False))
    assert s.view_count == 2 and not s.has_depth
    assert s.view_set.depths is None


def test_manifest_bad_mos_names_row(tmp_path):
    path = _write_rows(tmp_path, 2, False)
    lines = path.read_text().splitlines()
    lines[1] = lines[1].replace("1.5", "n/a")
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ManifestError, match="row 2"):
        load_manifest(path)


def test_manifest_errors(tmp_path):
    path = _write_rows(tmp_path, 2, False)
    text = path.read_text()
    path.write_text(text.replace("t.pgm", "missing.pgm", 1))
    with pytest.raises(ManifestError, match="missing file"):
        load_manifest(path)
    path.write_text(text + "s9,a,b,1.0\n")
    with pytest.raises(ManifestError, match="row 4"):
        load_manifest(path)
    path.write_text(text.replace("s1", "s0"))
    with pytest.raises(ManifestError, match="duplicate"):
        load_manifest(path)


def test_manifest_comments_and_order(tmp_path):
    path = _write_rows(tmp_path, 2, False, n=5)
    lines = path.read_text().splitlines()
    lines.insert(2, "# skipped line")
    path.write_text("\n".join(lines) + "\n")
    a = [(s.id, s.mos) for s in load_manifest(path)]
    b = [(s.id, s.mos) for s in load_manifest(path)]
    assert a == b == [(f"s{i}", 1.5 + i) for i in range(5)]


def test_header_only_manifest(tmp_path):
    path = _write_rows(tmp_path, 2, False, n=0)
    assert load_manifest(path) == []
