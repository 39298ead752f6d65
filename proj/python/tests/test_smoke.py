import json
import math

import numpy as np
import pytest

import artdream

HEADER = ("participant_id,pair_id,speed,presentation_index,likability,"
          "aesthetic_pleasantness,artistic_value,timestamp_iso8601")
ROWS = [
    "P01,abstract,slow,1,6,6,5,2019-03-11T10:00:00Z",
    "P01,abstract,fast,2,4,5,4,2019-03-11T10:01:00Z",
    "P01,portrait,fast,3,4,4,5,2019-03-11T10:02:00Z",
    "P01,portrait,slow,4,5,6,6,2019-03-11T10:03:00Z",
]


def test_t_tail():
    assert artdream.t_two_sided_p(0.0, 37) == 1.0
    assert abs(artdream.t_two_sided_p(1.18, 37) - 0.24) <= 0.01
    assert artdream.t_two_sided_p(1.0, 1) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(artdream.ValidationError):
        artdream.t_two_sided_p(1.0, 0.5)


def test_paired_t():
    r = artdream.paired_t([2, 1, 2, 1], [1, 2, 1, 2])
    assert r["t"] == 0.0 and r["p"] == 1.0 and r["df"] == 3
    with pytest.raises(artdream.ValidationError):
        artdream.paired_t([1, 2, 3], [1, 2, 3])


def test_ratings_pipeline():
    text = "\n".join([HEADER, *ROWS, "P02,abstract,slow,1,8,5,5,2019-03-11T10:00:00Z"]) + "\n"
    res = artdream.ingest_ratings(text)
    assert len(res["records"]) == 4
    assert res["rejected"][0][0] == 6
    cells = artdream.summarize(text)
    assert len(cells) == 18 and all(c["sd"] is None for c in cells)
    assert artdream.preference_partition(text)["always_slow"] == 1
    assert "flagged" in artdream.analysis_report(text)
    with pytest.raises(artdream.FormatError):
        artdream.ingest_ratings("nope\n")


def test_retime_arithmetic():
    assert artdream.retimed_count(90, "3.5", "10") == 315
    assert artdream.retimed_count(7, "7/2", "10") == 25
    idx = [artdream.source_index(j, "3.5", "10") for j in range(315)]
    assert idx == sorted(idx) and idx[-1] == 89


def test_plan():
    plan = artdream.make_plan(7, "P12")
    assert plan == artdream.make_plan(7, "P12")
    assert sorted((t["pair_id"], t["speed"]) for t in plan) == [
        ("abstract", "fast"), ("abstract", "slow"), ("portrait", "fast"), ("portrait", "slow")]
    with pytest.raises(artdream.ValidationError):
        artdream.make_plan(7, "bad id")


def test_paint_and_image_io(tmp_path):
    y, x = np.mgrid[0:48, 0:48] / 47.0
    img = np.stack([x, y, 0.5 * (x + y)], axis=-1).astype(np.float32)
    out, coverage, strokes = artdream.paint(img, seed=3)
    assert out.shape == img.shape
    assert coverage >= 0.95 and strokes > 0
    again, _, _ = artdream.paint(img, seed=3)
    assert np.array_equal(out, again)
    assert np.abs(out - img).mean() < np.abs(0.5 - img).mean()

    path = tmp_path / "a.png"
    artdream.save_image(out, path)
    back = artdream.load_image(path)
    assert np.abs(back - out).max() <= 0.5 / 255 + 1e-6
    with pytest.raises(artdream.IoError):
        artdream.load_image(tmp_path / "missing.png")


def test_recipe_hash_stable():
    recipe = {"model": "m.artn", "mode": "free", "layer": "L2", "iterations": 3, "octaves": 1, "seed": 1}
    h = artdream.recipe_hash(json.dumps(recipe))
    assert h == artdream.recipe_hash(json.dumps(dict(reversed(list(recipe.items())))))
    recipe["seed"] = 2
    assert artdream.recipe_hash(json.dumps(recipe)) != h
    with pytest.raises(artdream.ValidationError):
        artdream.recipe_hash(json.dumps({**recipe, "colour": 1}))


def test_frame_seed():
    seeds = {artdream.frame_seed(5, i) for i in range(100)}
    assert len(seeds) == 100
    assert not math.isnan(float(artdream.frame_seed(0, 0)))
