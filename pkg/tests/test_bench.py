import csv
import json
import math

import numpy as np
import pytest

from drsc import unionmodel as um
from drsc.bench import cli, dataio, experiments
from drsc.bench.config import make_config, read_config_file
from drsc.errors import ConfigurationError, ParseError, UsageError

SMALL = dict(m=60, L=2, d=4, n=12, mode="independent", r=None, p_grid=[8, 30], trials=2,
             q_grid=[2, 4], lambda_grid=[0.02, 0.1], smax_grid=[2, 4])


def small_cfg(kind="ce_vs_p", **over):
    values = dict(SMALL)
    values.update(over)
    return make_config(kind, values)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


# ------------------------------------------------------------------ data files

@pytest.mark.parametrize("suffix", [".bin", ".csv"])
def test_dataset_round_trip(tmp_path, suffix):
    arr = um.make_arrangement(7, [2, 3], seed=1)
    ds = um.sample_points(arr, [4, 5], seed=2)
    path = tmp_path / f"pts{suffix}"
    dataio.save_points(path, ds.points)
    assert np.array_equal(dataio.load_points(path), ds.points)


def test_binary_layout(tmp_path):
    P = np.arange(6, dtype=float).reshape(2, 3)  # m=2, N=3
    path = tmp_path / "x.drsc"
    dataio.save_binary(path, P)
    raw = path.read_bytes()
    assert raw[:4] == b"DRSC"
    assert int.from_bytes(raw[4:8], "little") == 1
    assert int.from_bytes(raw[8:16], "little") == 3
    assert int.from_bytes(raw[16:24], "little") == 2
    # point-major: first point is column 0 = (0, 3)
    assert np.frombuffer(raw[24:40], "<f8").tolist() == [0.0, 3.0]


def test_binary_errors(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"DRS")
    with pytest.raises(ParseError):
        dataio.load_binary(path)
    path.write_bytes(b"XXXX" + bytes(20))
    with pytest.raises(ParseError) as exc:
        dataio.load_binary(path)
    assert exc.value.offset == 0
    dataio.save_binary(path, np.ones((2, 2)))
    path.write_bytes(path.read_bytes()[:-1])
    with pytest.raises(ParseError):
        dataio.load_binary(path)


def test_csv_errors_carry_line(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("1,2,3\n4,5\n")
    with pytest.raises(ParseError) as exc:
        dataio.load_csv(path)
    assert exc.value.line == 2
    path.write_text("1,2\nx,3\n")
    with pytest.raises(ParseError) as exc:
        dataio.load_csv(path)
    assert exc.value.line == 2
    path.write_text("\n")
    with pytest.raises(ParseError):
        dataio.load_csv(path)


def test_labels(tmp_path):
    path = tmp_path / "labels.txt"
    dataio.save_labels(path, [0, 2, 1])
    assert dataio.load_labels(path, expected=3).tolist() == [0, 2, 1]
    with pytest.raises(ParseError):
        dataio.load_labels(path, expected=4)
    path.write_text("0\nfoo\n")
    with pytest.raises(ParseError) as exc:
        dataio.load_labels(path)
    assert exc.value.line == 2


def test_results_csv_is_rfc4180():
    text = dataio.csv_text(["a", "b"], [["x,y", 'q"'], [1, 2]])
    assert text == 'a,b\r\n"x,y","q"""\r\n1,2\r\n'


# ------------------------------------------------------------------ config

def test_config_defaults_and_overrides(tmp_path):
    cfg = make_config("ce_vs_p")
    assert (cfg.m, cfg.L, cfg.d, cfg.r, cfg.n) == (4096, 3, 20, 4, 80)
    assert cfg.lambda_grid == [0.001, 0.002, 0.004, 0.008, 0.01, 0.02, 0.04, 0.08, 0.1, 0.2]
    assert cfg.q_grid == list(range(2, 19, 2))
    assert make_config("phase_diagram").curve == [0.8, 0.1, 0.8]
    path = tmp_path / "c.yaml"
    path.write_text("trials: 3\nseed: 9\n")
    assert read_config_file(path) == {"trials": 3, "seed": 9}
    jpath = tmp_path / "c.json"
    jpath.write_text(json.dumps({"p_grid": [4]}))
    assert make_config("ce_vs_p", read_config_file(jpath)).p_grid == [4]


@pytest.mark.parametrize("over", [
    dict(trials=0), dict(p_grid=[5000]), dict(p_grid=[]), dict(algorithms=["kmeans"]),
    dict(projections=["sparse"]), dict(bogus=1), dict(sigma=-1.0), dict(mode="nope"),
    dict(ssc_mode="ridge"),
])
def test_config_errors(over):
    with pytest.raises(ConfigurationError):
        make_config("ce_vs_p", over)
    with pytest.raises(ConfigurationError):
        make_config("unknown")


# ------------------------------------------------------------------ experiments

def test_derive_seed_stable():
    assert experiments.derive_seed(0, "ce_vs_p", 0) == experiments.derive_seed(0, "ce_vs_p", 0)
    assert experiments.derive_seed(0, "ce_vs_p", 0) != experiments.derive_seed(0, "ce_vs_p", 1)
    assert 0 <= experiments.derive_seed("x") < 2 ** 64


def test_select_params_examples():
    arr = um.make_arrangement(30, [3, 3], "orthogonal", seed=0)
    ds = um.sample_points(arr, [10, 10], seed=1)
    assert experiments.select_params(ds, "tsc", [5]) == 5
    q = experiments.select_params(ds, "tsc", [2, 4, 6, 18])
    assert q == 2
    _, info = experiments.cluster_once(ds.points, ds.labels, "tsc", q, 2, 0)
    assert info["ce"] == 0.0
    s = experiments.select_params(ds, "sscomp", [3, 1])
    assert experiments.cluster_once(ds.points, ds.labels, "sscomp", s, 2, 0)[1]["ce"] == 0.0
    with pytest.raises(ConfigurationError):
        experiments.select_params(ds, "tsc", [])
    with pytest.raises(UsageError):
        experiments.select_params(um.Dataset(ds.points), "tsc", [2])


def test_select_params_reproducible():
    cfg = small_cfg(mode="independent")
    assert experiments.choose_parameters(cfg) == experiments.choose_parameters(cfg)


def test_identity_orthogonal_gives_zero_ce():
    cfg = small_cfg(mode="orthogonal", projections=["identity"], p_grid=[60], trials=3)
    rows = experiments.run_ce_vs_p(cfg)
    assert len(rows) == 9
    assert all(r.ce == 0.0 for r in rows)
    for r in rows:
        assert r.t_projection + r.t_adjacency + r.t_spectral <= 1.05 * r.t_total + 1e-6
        assert min(r.t_projection, r.t_adjacency, r.t_spectral) >= 0


def test_ce_vs_p_deterministic_and_thread_independent(tmp_path):
    texts = []
    for threads in (1, 1, 3):
        cfg = small_cfg(threads=threads)
        rows = experiments.run_ce_vs_p(cfg)
        texts.append(dataio.csv_text(*experiments.result_table(rows, timings=False)))
    assert texts[0] == texts[1] == texts[2]


def test_write_results_and_summary(tmp_path):
    cfg = small_cfg(trials=2)
    rows = experiments.run_ce_vs_p(cfg)
    out = tmp_path / "res.csv"
    experiments.write_results(out, rows)
    table = read_csv(out)
    assert table[0] == experiments.RESULT_FIELDS
    assert len(table) == 1 + len(rows) == 1 + 2 * 2 * 2 * 3
    summary = read_csv(tmp_path / "res.summary.csv")
    assert len(summary) == 1 + 2 * 2 * 3
    i = summary[0].index("mean_ce")
    for line in summary[1:]:
        assert 0.0 <= float(line[i]) <= 1.0


def test_phase_diagram_small():
    params = {"tsc": 4, "ssc": 0.05, "sscomp": 4}
    cfg = small_cfg("phase_diagram", mode="orthogonal", sigma_grid=[0.0, 0.5], trials=1,
                    params=params, p_grid=[30], experiment_id="shared")
    rows, curve = experiments.run_phase_diagram(cfg)
    assert {r.sigma for r in rows} == {0.0, 0.5}
    assert all(r.param in (4.0, 0.05) for r in rows)
    assert dict(curve)[1.0] == 0.0
    base = experiments.run_ce_vs_p(small_cfg(mode="orthogonal", trials=1, p_grid=[30],
                                             projections=["gaussian"], params=params,
                                             experiment_id="shared"))
    # the noiseless column is the CE-vs-p run under the same seeds
    zero = [(r.algorithm, r.ce) for r in rows if r.sigma == 0.0]
    assert zero == [(r.algorithm, r.ce) for r in base]


def test_ambient_requires_full_span():
    with pytest.raises(ConfigurationError):
        experiments.run_ambient(make_config("ambient_span", dict(m=50, L=2, d=20)))


def test_theory_table():
    cfg = make_config("theory_table", dict(max_aff=1.0))
    rows = experiments.run_theory_table(cfg)
    assert len(rows) == 5 * len(cfg.p_grid)
    assert not any(r["satisfied"] for r in rows)
    cfg = make_config("theory_table")
    rows = experiments.run_theory_table(cfg)
    assert rows[0]["max_aff"] >= math.sqrt(4 / 20)
    for name in ("tsc", "ssc", "sscomp"):
        margins = [r["margin"] for r in rows if r["condition"] == name]
        assert all(b > a for a, b in zip(margins, margins[1:]))
    tsc = [r for r in rows if r["condition"] == "tsc"]
    noisy = [r for r in rows if r["condition"] == "tsc_noisy"]
    for a, b in zip(tsc, noisy):
        assert (a["lhs"], a["rhs"], a["margin"]) == (b["lhs"], b["rhs"], b["margin"])
    header, body = experiments.theory_table_csv(rows)
    assert header[0] == "condition" and len(body) == len(rows)


def test_cluster_file_matches_ce_vs_p(tmp_path):
    params = {"tsc": 4, "ssc": 0.05, "sscomp": 4}
    cfg = small_cfg(mode="independent", projections=["identity"], p_grid=[60], trials=1, params=params)
    rows = experiments.run_ce_vs_p(cfg)
    tseed = experiments.derive_seed(cfg.seed, cfg.exp_id, 0)
    _, ds = experiments._generate(cfg, tseed)
    data, labels = tmp_path / "pts.bin", tmp_path / "labels.txt"
    dataio.save_points(data, ds.points)
    dataio.save_labels(labels, ds.labels)
    for r in rows:
        ccfg = make_config("cluster_file", dict(data_path=str(data), labels_path=str(labels),
                                                algorithm=r.algorithm, projection="identity",
                                                seed=tseed, params=params))
        out, pred = experiments.run_cluster_file(ccfg)
        assert out[0].ce == r.ce
        assert pred.shape == (ds.N,)


def test_cluster_file_short_labels(tmp_path):
    data, labels = tmp_path / "pts.csv", tmp_path / "labels.txt"
    dataio.save_points(data, np.random.default_rng(0).standard_normal((4, 6)))
    dataio.save_labels(labels, [0, 0, 1, 1, 1])
    cfg = make_config("cluster_file", dict(data_path=str(data), labels_path=str(labels)))
    with pytest.raises(ParseError):
        experiments.run_cluster_file(cfg)


def test_cluster_file_without_labels_estimates(tmp_path):
    arr = um.make_arrangement(20, [2, 2, 2], "orthogonal", seed=3)
    ds = um.sample_points(arr, [8, 8, 8], seed=4)
    data = tmp_path / "pts.bin"
    dataio.save_points(data, ds.points)
    cfg = make_config("cluster_file", dict(data_path=str(data), estimate_L=True, params={"tsc": 5}))
    rows, pred = experiments.run_cluster_file(cfg)
    assert rows[0].L_hat == 3
    assert math.isnan(rows[0].ce)


# ------------------------------------------------------------------ CLI

def test_cli_cluster_and_theory(tmp_path, capsys):
    arr = um.make_arrangement(20, [2, 2], "orthogonal", seed=3)
    ds = um.sample_points(arr, [8, 8], seed=4)
    data, labels, out = tmp_path / "pts.csv", tmp_path / "labels.txt", tmp_path / "r.csv"
    dataio.save_points(data, ds.points)
    dataio.save_labels(labels, ds.labels)
    rc = cli.main(["cluster", "--data", str(data), "--labels", str(labels), "--algorithm", "sscomp",
                   "--projection", "gaussian", "--p", "10", "--out", str(out)])
    assert rc == 0
    table = read_csv(out)
    assert float(table[1][table[0].index("ce")]) == 0.0
    pred = dataio.load_labels(tmp_path / "r.labels.txt", expected=16)
    assert pred.size == 16
    assert cli.main(["theory", "--max-aff", "0.5", "--no-timings"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].startswith("condition,p,lhs")
    assert len(lines) == 1 + 5 * 10


def test_cli_errors(tmp_path, capsys):
    assert cli.main(["cluster", "--data", str(tmp_path / "missing.bin")]) == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3\n")
    assert cli.main(["cluster", "--data", str(bad)]) == 2
    assert "line 2" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        cli.main(["nonsense"])


def test_cli_config_file_and_ce_vs_p(tmp_path):
    conf = tmp_path / "c.yaml"
    conf.write_text("\n".join(f"{k}: {json.dumps(v)}" for k, v in SMALL.items()
                              if v is not None) + "\ntrials: 1\n")
    out = tmp_path / "res.csv"
    assert cli.main(["ce-vs-p", "--config", str(conf), "--seed", "3", "--out", str(out),
                     "--no-timings"]) == 0
    first = out.read_bytes()
    assert cli.main(["ce-vs-p", "--config", str(conf), "--seed", "3", "--out", str(out),
                     "--no-timings", "--threads", "2"]) == 0
    assert out.read_bytes() == first
    assert "t_total" not in read_csv(out)[0]
    assert (tmp_path / "res.summary.csv").exists()


def test_cli_phase_writes_curve(tmp_path):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps(dict(m=40, d=4, n=8, p_grid=[16], sigma_grid=[0.0], trials=1)))
    out = tmp_path / "ph.csv"
    assert cli.main(["phase", "--config", str(conf), "--out", str(out)]) == 0
    curve = read_csv(tmp_path / "ph.curve.csv")
    assert curve[0] == ["x", "sigma_star"]
    assert ["1.0", "0.0"] in curve
