import json
import math
import random

import pytest

import outbreak_engine as oe


def grid_neighbors(cols, rows):
    out = []
    for r in range(rows):
        for c in range(cols):
            nb = []
            for dr in (-1, 0, 1):
                for dc in (-1, 0, 1):
                    rr, cc = r + dr, c + dc
                    if (dr or dc) and 0 <= rr < rows and 0 <= cc < cols:
                        nb.append(rr * cols + cc)
            out.append(nb)
    return out


def test_two_by_two_diagonal():
    x = [1.0, 0.0, 0.0, 1.0]
    r = oe.morans_i(x, grid_neighbors(2, 2), n_perm=99)
    assert abs(r["I"] + 1 / 3) <= 1e-12
    assert oe.moran_statistic([3.0, 7.0], [[1], [0]]) == -1.0


def test_lisa_mean_matches_global():
    rng = random.Random(3)
    nb = grid_neighbors(6, 5)
    x = [rng.gauss(0, 1) for _ in nb]
    local = oe.lisa(x, nb, n_perm=99, seed=1)
    assert abs(sum(local["local_I"]) / len(x) - oe.morans_i(x, nb, n_perm=9)["I"]) <= 1e-10
    assert all(p >= 0.01 for p in local["p_value"])


def test_constant_field_raises():
    with pytest.raises(oe.ConstantField):
        oe.morans_i([1.0] * 4, grid_neighbors(2, 2))


def test_scalers():
    assert oe.minmax_scale([0, 5, 10]) == [0.0, 0.5, 1.0]
    got = oe.robust_scale([1, 2, 3, 4, 100])
    assert all(abs(a - b) <= 1e-12 for a, b in zip(got, [-1, -0.5, 0, 0.5, 48.5]))


def test_forest_and_metrics():
    rng = random.Random(1)
    x = [[rng.random(), rng.random()] for _ in range(400)]
    y = [int(a > 0.5) for a, _ in x]
    forest = oe.Forest.train(x, y, ["a", "b"], n_trees=15, seed=4)
    pred = forest.predict(x)
    report = oe.evaluate(y, pred, forest.predict_proba(x))
    assert report["f1"] > 0.95
    again = oe.Forest.from_json(forest.to_json())
    assert again.predict_proba(x) == forest.predict_proba(x)
    ranked = forest.permutation_importance(x, y, n_repeats=3, seed=2)
    assert ranked[0][0] == "a"

    m = oe.evaluate([1, 1, 1, 0, 0, 0, 0, 0, 0, 0], [1, 1, 0, 1, 0, 0, 0, 0, 0, 0], [0.0] * 10)
    assert abs(m["f1"] - 2 / 3) <= 1e-12
    assert abs(m["mcc"] - 11 / 21) <= 1e-12


def test_pipeline_end_to_end(tmp_path):
    config = oe.write_mini_region(tmp_path, cols=6, rows=5, n_weeks=12)
    first = oe.run_pipeline(config)
    assert [o["stage"] for o in first] == ["ingest", "weights", "esda", "features", "train", "importance"]
    assert not any(o["skipped"] for o in first)
    assert all(o["skipped"] for o in oe.run_pipeline(config))

    out = tmp_path / "out"
    moran = json.loads((out / "moran.json").read_text())
    assert math.isfinite(moran["I"])
    districts = oe.parse_districts(tmp_path / "districts.geojson")
    assert len(districts) == 30
    w = oe.contiguity_weights(tmp_path / "districts.geojson")
    assert len(w["neighbors"]) == 30
    zonal = oe.zonal_mean(tmp_path / "rasters" / "elevation.asc", tmp_path / "districts.geojson")
    assert len(zonal) == 30
