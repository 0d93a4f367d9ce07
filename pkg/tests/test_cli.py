import csv
import io
import json

import pytest

from lrfs import SimParams
from lrfs.cli import main


@pytest.fixture(autouse=True)
def pinned_threads(monkeypatch):
    monkeypatch.delenv("LRFS_THREADS", raising=False)


def small_params(**kw):
    base = dict(
        region_lo=(0.0, 0.0),
        region_hi=(200.0, 200.0),
        n_scans=8,
        scheduled_births=((0, 2),),
        birth_probability=0.0,
        clutter_rate=2.0,
        detection_probability=0.9,
        filter_birth_slots=2,
        filter_birth_probability=0.05,
    )
    base.update(kw)
    return SimParams(**base)


def write_params(tmp_path, **kw):
    path = tmp_path / "params.json"
    path.write_text(json.dumps(small_params(**kw).to_dict()))
    return path


def write_config(tmp_path, **kw):
    base = dict(
        max_hypotheses=100,
        gibbs_iterations=30,
        requested_k_best=30,
        seed=1,
    )
    base.update(kw)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(base))
    return path


def simulate(tmp_path, seed=3, **kw):
    params = write_params(tmp_path, **kw)
    out = tmp_path / "scenario.json"
    rc = main(["simulate", "--params", str(params), "--seed", str(seed), "--out", str(out)])
    assert rc == 0
    return out


def lmb_file(tmp_path, name, tracks):
    body = {
        "tracks": [
            {
                "label": list(label),
                "r": r,
                "density": {
                    "weights": [1.0],
                    "means": [[mu]],
                    "covariances": [[[var]]],
                },
            }
            for label, r, mu, var in tracks
        ]
    }
    path = tmp_path / name
    path.write_text(json.dumps(body))
    return path


def test_simulate_writes_loadable_scenario(tmp_path):
    out = simulate(tmp_path)
    body = json.loads(out.read_text())
    assert set(body) == {"region", "model", "scans", "truth"}
    assert len(body["scans"]) == 8
    assert body["model"]["detection_probability"] == 0.9


def test_filter_produces_tracks_and_report(tmp_path):
    scen = simulate(tmp_path)
    cfg = write_config(tmp_path)
    tracks = tmp_path / "tracks.json"
    report = tmp_path / "report.json"
    rc = main([
        "filter", "--scenario", str(scen), "--config", str(cfg),
        "--out", str(tracks), "--report", str(report), "--threads", "1",
    ])
    assert rc == 0
    body = json.loads(tracks.read_text())
    assert "tracks" in body
    for rec in body["tracks"]:
        for s in rec["states"]:
            assert set(s) == {"k", "x", "r", "w"}
            assert 0.0 <= s["r"] <= 1.0
    rep = json.loads(report.read_text())
    assert rep["total_elapsed"] > 0.0
    assert len(rep["scans"]) == 8
    for sc in rep["scans"]:
        assert sc["n_hypotheses"] >= 1
        # truncation discards a sub-probability chunk of normalized mass
        assert 0.0 <= sc["discarded_l1"] <= 1.0 + 1e-12


def test_filter_runs_are_byte_identical(tmp_path):
    scen = simulate(tmp_path)
    cfg = write_config(tmp_path)
    outs = []
    for name in ("a.json", "b.json"):
        out = tmp_path / name
        rc = main([
            "filter", "--scenario", str(scen), "--config", str(cfg),
            "--out", str(out), "--threads", "1",
        ])
        assert rc == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_filter_estimator_choices(tmp_path):
    scen = simulate(tmp_path, n_scans=4)
    cfg = write_config(tmp_path)
    for est in ("label_mam", "phd_jom"):
        out = tmp_path / f"{est}.json"
        rc = main([
            "filter", "--scenario", str(scen), "--config", str(cfg),
            "--estimator", est, "--out", str(out), "--threads", "1",
        ])
        assert rc == 0
        assert "tracks" in json.loads(out.read_text())


def test_smooth_produces_tracks_and_stats(tmp_path):
    scen = simulate(tmp_path, n_scans=5, scheduled_births=((0, 1),), clutter_rate=1.0)
    cfg = write_config(tmp_path, gibbs_iterations=20)
    tracks = tmp_path / "smoothed.json"
    stats = tmp_path / "stats.json"
    rc = main([
        "smooth", "--scenario", str(scen), "--config", str(cfg), "--window", "3",
        "--out", str(tracks), "--stats", str(stats), "--threads", "1",
    ])
    assert rc == 0
    assert "tracks" in json.loads(tracks.read_text())
    body = json.loads(stats.read_text())
    card = body["traj_cardinality"]
    assert abs(sum(card) - 1.0) < 1e-9
    assert all(v >= 0.0 for v in card)


def test_divergence_zero_on_identical_files(tmp_path, capsys):
    a = lmb_file(tmp_path, "a.json", [((0, 1), 0.5, 0.0, 1.0)])
    for kind in ("kl", "chi2", "cs", "bhatt"):
        rc = main(["divergence", "--kind", kind, "--a", str(a), "--b", str(a)])
        assert rc == 0
        assert abs(float(capsys.readouterr().out)) < 1e-10


def test_divergence_renyi_needs_alpha(tmp_path, capsys):
    a = lmb_file(tmp_path, "a.json", [((0, 1), 0.5, 0.0, 1.0)])
    rc = main(["divergence", "--kind", "renyi", "--a", str(a), "--b", str(a)])
    assert rc == 2
    assert "--alpha" in capsys.readouterr().err
    rc = main(["divergence", "--kind", "renyi", "--alpha", "0.5", "--a", str(a), "--b", str(a)])
    assert rc == 0


def test_divergence_unit_u_changes_cs(tmp_path, capsys):
    a = lmb_file(tmp_path, "a.json", [((0, 1), 0.5, 0.0, 1.0)])
    b = lmb_file(tmp_path, "b.json", [((0, 1), 0.5, 1.0, 1.0)])
    vals = []
    for u in ("1.0", "2.0"):
        rc = main(["divergence", "--kind", "cs", "--a", str(a), "--b", str(b), "--unit-u", u])
        assert rc == 0
        vals.append(float(capsys.readouterr().out))
    assert abs(vals[0] - vals[1]) > 1e-6


def test_eval_zero_for_truth_against_itself(tmp_path, capsys):
    scen = simulate(tmp_path, n_scans=6)
    rc = main([
        "eval", "--truth", str(scen), "--tracks", str(scen),
        "--ospa-c", "100.0", "--window", "3",
    ])
    assert rc == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows[0] == ["k", "ospa", "ospa2"]
    assert len(rows) == 7
    for _, o1, o2 in rows[1:]:
        assert float(o1) == 0.0
        assert float(o2) == 0.0


def test_malformed_lmb_file_names_field(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"tracks": [{"label": [0, 1], "r": 0.5}]}))
    rc = main(["divergence", "--kind", "kl", "--a", str(bad), "--b", str(bad)])
    assert rc == 2
    assert "density" in capsys.readouterr().err


def test_malformed_scenario_names_field(tmp_path, capsys):
    scen = simulate(tmp_path, n_scans=3)
    body = json.loads(scen.read_text())
    del body["scans"]
    bad = tmp_path / "broken.json"
    bad.write_text(json.dumps(body))
    cfg = write_config(tmp_path)
    rc = main([
        "filter", "--scenario", str(bad), "--config", str(cfg),
        "--out", str(tmp_path / "t.json"), "--threads", "1",
    ])
    assert rc == 2
    assert "scans" in capsys.readouterr().err


def test_unknown_config_field_rejected(tmp_path, capsys):
    scen = simulate(tmp_path, n_scans=3)
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps({"max_hypotheses": 10, "gibs_iterations": 5}))
    rc = main([
        "filter", "--scenario", str(scen), "--config", str(cfg),
        "--out", str(tmp_path / "t.json"), "--threads", "1",
    ])
    assert rc == 2
    assert "gibs_iterations" in capsys.readouterr().err


def test_threads_env_override(tmp_path, monkeypatch):
    # LRFS_THREADS pins the worker count even past an explicit flag
    scen = simulate(tmp_path, n_scans=3)
    cfg = write_config(tmp_path)
    monkeypatch.setenv("LRFS_THREADS", "1")
    out1 = tmp_path / "env1.json"
    rc = main([
        "filter", "--scenario", str(scen), "--config", str(cfg),
        "--out", str(out1), "--threads", "4",
    ])
    assert rc == 0
