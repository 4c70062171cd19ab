import csv

import numpy as np
import pytest

from hctsp import bench, cli
from hctsp import tsp_model as tm
from hctsp.landscape import auc


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_solve_writes_valid_tours(tmp_path):
    out = tmp_path / "solve"
    code = cli.main(["solve", "--instance", "eil51", "--algo", "ils,lsils", "--runs", "2",
                     "--budget-evals", "5000", "--trace", "--out", str(out)])
    assert code == 0
    inst = tm.load_bundled("eil51")
    rows = _rows(out / "results.csv")
    assert len(rows) == 4
    for row in rows:
        stem = f"eil51_{row['algorithm']}_s{row['seed']}".replace("(", "-").replace(")", "")
        text = (out / f"{stem}.tour").read_text()
        name, cost = text.splitlines()[0].split()
        tour = tm.read_tour(out / f"{stem}.tour", inst)
        assert name == "eil51"
        assert tour.cost == float(cost) == float(row["best_cost"])
        assert (out / f"{stem}_trace.csv").is_file()
    assert {r["algorithm"] for r in rows} == {"ils", "lsils(setting5)"}


def test_solve_is_byte_identical_on_rerun(tmp_path):
    args = ["solve", "--instance", "st70", "--algo", "lsils:setting5,gh", "--runs", "2",
            "--seed", "5", "--budget-evals", "3000", "--trace"]
    assert cli.main(args + ["--out", str(tmp_path / "a")]) == 0
    assert cli.main(args + ["--out", str(tmp_path / "b")]) == 0
    for f in sorted((tmp_path / "a").iterdir()):
        if f.name == "timing.csv":
            continue
        other = (tmp_path / "b" / f.name).read_bytes()
        if f.name.endswith("_trace.csv"):
            # the last column holds wall-clock seconds
            strip = lambda b: [ln.rsplit(b",", 1)[0] for ln in b.splitlines()]  # noqa: E731
            assert strip(f.read_bytes()) == strip(other)
        else:
            assert f.read_bytes() == other, f.name


def test_compare_curves_and_auc_self_consistent(tmp_path):
    out = tmp_path / "cmp"
    code = cli.main(["compare", "--instance", "eil51", "--algo", "ils,lsils", "--runs", "3",
                     "--budget-evals", "4000", "--curve-points", "40", "--out", str(out)])
    assert code == 0
    curves = _rows(out / "curves.csv")
    table = _rows(out / "auc.csv")
    assert {r["opt_source"] for r in table} == {"known"}
    for row in table:
        pts = [c for c in curves if c["algorithm"] == row["algorithm"]]
        assert len(pts) == 40
        x = np.array([float(p["abscissa"]) for p in pts])
        y = np.array([float(p["mean_excess"]) for p in pts])
        assert np.all(np.diff(x) > 0)
        assert auc(x, y) == float(row["auc"])


def test_compare_identical_algorithms_agree(tmp_path):
    cfg = bench.make_config({"instances": "eil51", "algorithms": "ils,lsils:constant:0",
                             "runs": "3", "budget_evals": "3000", "out": str(tmp_path)})
    summary = bench.cmd_compare(cfg)
    aucs = sorted(s["auc"] for s in summary.values())
    assert aucs[0] == aucs[1]


def test_compare_reference_fallback(tmp_path):
    base = {"instances": "rand:60:1", "algorithms": "ils", "runs": "2", "budget_evals": "2000",
            "out": str(tmp_path)}
    bench.cmd_compare(bench.make_config(base))
    table = _rows(tmp_path / "auc.csv")
    best = min(float(r["best_cost"]) for r in _rows(tmp_path / "runs.csv"))
    assert table[0]["opt_source"] == "best_found_x0.99"
    assert float(table[0]["opt_cost"]) == pytest.approx(0.99 * best)
    with pytest.raises(bench.ConfigError):
        bench.cmd_compare(bench.make_config(base, {"fallback_reference": "false"}))


def test_analyze_global_and_multi_anchor(tmp_path):
    out = tmp_path / "an"
    code = cli.main(["analyze", "--instance", "berlin52", "--anchor", "optimum,local:2",
                     "--lambda-grid", "0,0.1", "--runs", "2", "--budget-evals", "20000",
                     "--out", str(out)])
    assert code == 0
    rows = _rows(out / "landscape.csv")
    assert len(rows) == 6
    assert rows[0]["anchor_kind"] == "global" and rows[0]["anchor_cost"] == "7542"
    # one lambda curve (two rows) per anchor, in anchor order
    assert [r["lambda"] for r in rows] == ["0", "0.1"] * 3
    assert all(float(r["anchor_cost"]) >= 7542 for r in rows)
    assert len(_rows(out / "landscape_summary.csv")) == 2


def test_default_lambda_grid():
    cfg = bench.make_config({})
    assert cfg.lambda_grid == tuple(i / 100 for i in range(11))


def test_anchor_file(tmp_path):
    inst = tm.load_bundled("berlin52")
    opt = tm.bundled_optimal_tour("berlin52", inst)
    path = tmp_path / "anchor.tour"
    path.write_text(tm.format_tour("berlin52", opt))
    cfg = bench.make_config({"instances": "berlin52", "anchor": str(path)})
    ((tour, kind),) = bench.resolve_anchors(cfg, inst)
    assert kind == "global" and tour.cost == 7542
    bad = tmp_path / "bad.tour"
    bad.write_text("x 0\n0\n1\n2\n")
    with pytest.raises(bench.ConfigError):
        bench.resolve_anchors(bench.make_config({"anchor": str(bad)}), inst)


def test_gen_round_trip(tmp_path):
    path = bench.cmd_gen(50, 7, 1000.0, str(tmp_path / "r50.tsp"))
    inst = tm.read_instance(path)
    ref = tm.gen_random_euclidean(50, 7, 1000.0)
    np.testing.assert_array_equal(inst.coords, ref.coords)
    assert cli.main(["gen", "--n", "20", "--seed", "1", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "rand20.tsp").is_file()


def test_config_file_and_flag_override(tmp_path):
    conf = tmp_path / "exp.conf"
    conf.write_text("# experiment\ninstances = eil51\nruns = 3\nbudget_evals = 100\n"
                    "schedule = setting2\n")
    args = cli.build_parser().parse_args(["solve", "--config", str(conf), "--runs", "1"])
    cfg = cli.config_from_args(args)
    assert cfg.runs == 1 and cfg.budget_evals == 100 and cfg.schedule == "setting2"


@pytest.mark.parametrize("argv", [
    ["solve", "--instance", "eil51", "--runs", "0"],
    ["solve", "--instance", "nowhere.tsp"],
    ["solve", "--instance", "eil51", "--algo", "sa"],
    ["solve", "--instance", "eil51", "--schedule", "setting9"],
    ["analyze", "--instance", "eil51", "--lambda-grid", "0,2"],
])
def test_config_errors_exit_2(argv, tmp_path, capsys):
    assert cli.main(argv + ["--out", str(tmp_path)]) == 2
    assert "config error" in capsys.readouterr().err


def test_io_error_exit_3(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    code = cli.main(["solve", "--instance", "eil51", "--budget-evals", "10",
                     "--out", str(blocker / "sub")])
    assert code == 3


def test_parallel_jobs_match_serial(tmp_path):
    base = {"instances": "eil51", "algorithms": "ils", "runs": "2", "budget_evals": "2000"}
    a = bench.cmd_solve(bench.make_config(base, {"out": str(tmp_path / "a")}))
    b = bench.cmd_solve(bench.make_config(base, {"out": str(tmp_path / "b"), "jobs": "2"}))
    assert [r.best_cost for r in a] == [r.best_cost for r in b]
    assert (tmp_path / "a" / "results.csv").read_bytes() == \
        (tmp_path / "b" / "results.csv").read_bytes()
