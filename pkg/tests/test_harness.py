import csv
import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bsml import coalescent as co
from bsml.harness import (
    EXPERIMENTS,
    ConfigError,
    ExperimentResult,
    Row,
    dump_config,
    load_config,
    make_config,
    run_experiment,
    to_csv,
    to_json,
    write_results,
)
from bsml.harness.cli import main
from bsml.harness.config import DEFAULTS, parse_config
from bsml.harness.experiments import richardson
from bsml.harness.results import HEADER
from bsml.mc import run_blocks, stream, stream_key


def _rows(res, statistic):
    return [r for r in res.rows if r.statistic == statistic]


# ---------------------------------------------------------------- config

def test_config_file_round_trip(tmp_path):
    cfg = make_config("fdd", seed=42, n_list=[100, 1000], t_list=[0.25, 1.5], m_list=[2, 1], jobs=3)
    path = tmp_path / "fdd.cfg"
    path.write_text(dump_config(cfg))
    assert load_config(path) == cfg


@pytest.mark.parametrize("experiment", EXPERIMENTS)
def test_defaults_round_trip(experiment):
    cfg = make_config(experiment, seed=2**64 - 1)
    assert parse_config(dump_config(cfg)) == cfg


@pytest.mark.parametrize("missing", ["experiment", "seed"])
def test_missing_required_key_is_named(missing):
    lines = {"experiment": "experiment = ck-check", "seed": "seed = 1"}
    text = "\n".join(v for k, v in lines.items() if k != missing)
    with pytest.raises(ConfigError, match=missing):
        parse_config(text)


def test_config_comments_and_lists():
    cfg = parse_config(
        "# comment\nexperiment = converge-moments  # trailing\nseed = 9\nn_list = 1e2, 1e3\nt_list = 0.5\n"
    )
    assert cfg.n_list == [100, 1000] and cfg.t_list == [0.5] and cfg.m_list == DEFAULTS["converge-moments"]["m_list"]


@pytest.mark.parametrize(
    "text, match",
    [
        ("experiment = nope\nseed = 1", "unknown experiment"),
        ("experiment = fdd\nseed = 1\nbogus = 3", "unknown key"),
        ("experiment = fdd\nseed = 1\nreplicates = many", "replicates"),
        ("experiment = fdd\nseed = -4", "seed"),
        ("experiment = fdd\nseed = 1\nt_list = -1, 2", "t_list"),
        ("experiment = fdd\nseed = 1\nt_list = 1,2,3\nm_list = 1,1", "exponents"),
        ("experiment = fdd\nseed = 1\nt_list = 1,2\nm_list = 4,3", "sum"),
        ("experiment = converge-dist\nseed = 1\nreplicates = 100", "10000"),
        ("experiment = ck-check\nseed = 1\nn_list = ", "n_list"),
        ("experiment = generator-check\nseed = 1\nt_list = 0.01, 0.002, 0.001", "geometric"),
        ("experiment = fdd\nseed = 1\nformat = xml", "format"),
        ("experiment fdd", "key = value"),
    ],
)
def test_config_validation_errors(text, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(text)


# ---------------------------------------------------------------- rows and serialisation

def test_row_pass_rules():
    assert Row("e", "gap", {}, 1.0, 1.01, 0.01, 0.02).passed
    assert not Row("e", "gap", {}, 1.0, 1.03, 0.03, 0.02).passed
    assert Row("e", "gap", {}, 0.0, 0.0, 0.0, 0.0).passed  # exact agreement
    assert Row("e", "ks_pvalue", {}, None, 0.2, None, 0.01).passed
    assert not Row("e", "ks_pvalue", {}, None, 0.001, None, 0.01).passed
    assert Row("e", "info", {}, None, 5.0).passed


def test_csv_layout():
    res = ExperimentResult("demo", [
        Row("demo", "gap", dict(n=1000, t=(0.5, 1.5), m=(1, 1)), 1 / 3, 0.1, 0.2, math.inf),
        Row("demo", "gap", dict(n=10, t=(0.5, 1.5), m=(1, 1)), 1 / 3, 0.1, 0.2, 0.3),
    ])
    text = to_csv(res)
    assert "\r" not in text
    lines = text.splitlines()
    assert lines[0] == ",".join(HEADER)
    rec = list(csv.DictReader(io.StringIO(text)))
    assert [r["n"] for r in rec] == ["10", "1000"]  # sorted by parameters
    assert rec[0]["t"] == "0.5;1.5" and rec[0]["exact"] == "0.33333333333333331"
    assert rec[1]["tolerance"] == "inf" and rec[0]["seconds"] == ""
    assert float(rec[0]["exact"]) == 1 / 3  # 17 significant digits round-trip


def test_json_mirrors_csv():
    res = run_experiment(make_config("generator-check", seed=0, k_list=[1, 2], x_list=[1.0]))
    records = json.loads(to_json(res))
    rows = list(csv.DictReader(io.StringIO(to_csv(res))))
    assert len(records) == len(rows)
    for rec, row in zip(records, rows):
        assert list(rec) == list(HEADER)
        assert rec["estimate"] == float(row["estimate"])
        assert rec["pass"] == (row["pass"] == "true")


def test_write_results_to_file(tmp_path):
    cfg = make_config("generator-check", seed=0, k_list=[2], x_list=[1.0], output_path=str(tmp_path / "o" / "r.csv"))
    res = run_experiment(cfg)
    text = write_results(res, cfg)
    assert (tmp_path / "o" / "r.csv").read_text() == text


# ---------------------------------------------------------------- experiments, trivial cases

def test_converge_moments_trivial_cases():
    res = run_experiment(make_config("converge-moments", seed=0, t_list=[0.0, 0.7], m_list=[0, 1]))
    for r in res.rows:
        if r.params["m"] == 0 or r.params["t"] == 0.0:
            assert r.error <= 1e-12 and r.passed


def test_converge_moments_t1_m1():
    res = run_experiment(make_config("converge-moments", seed=0, t_list=[1.0], m_list=[1]))
    errs = [r.error for r in res.rows]
    assert all(b < a for a, b in zip(errs, errs[1:])) and errs[-1] < 0.02
    assert res.passed


def test_fdd_zero_exponents():
    res = run_experiment(make_config("fdd", seed=0, t_list=[0.5, 1.5], m_list=[0, 0], replicates=500, n_list=[10, 100]))
    for r in _rows(res, "joint_moment_gap"):
        assert r.exact == 1.0 and r.estimate == pytest.approx(1.0, abs=1e-12)


def test_fdd_single_time_is_bit_identical_to_converge_moments():
    fdd = run_experiment(make_config("fdd", seed=0, t_list=[1.0], m_list=[2], replicates=500, mc_n_max=0))
    cm = run_experiment(make_config("converge-moments", seed=0, t_list=[1.0], m_list=[2], n_list=fdd_n()))
    a = [(r.exact, r.estimate, r.error) for r in _rows(fdd, "joint_moment_gap")]
    b = [(r.exact, r.estimate, r.error) for r in cm.rows]
    assert a == b


def fdd_n():
    return DEFAULTS["fdd"]["n_list"]


def test_fdd_example_passes():
    res = run_experiment(make_config("fdd", seed=0, replicates=4000))
    gaps = _rows(res, "joint_moment_gap")
    assert [r.params["n"] for r in gaps] == [100, 1000, 10000]
    assert all(r.passed for r in gaps) and gaps[-1].error < 0.03


def test_semigroup_trivial_cases():
    res = run_experiment(make_config("semigroup-compare", seed=0, n_list=[100, 1000], t_list=[0.0, 0.5], m_list=[0, 2]))
    for r in _rows(res, "sup_norm"):
        if r.params["m"] == 0 or r.params["t"] == 0.0:
            assert r.error <= 1e-10


def test_semigroup_sup_matches_pointwise_ops():
    from bsml.mlprocess import semigroup_apply_poly

    n, s, t, m, L = 1000, 0.5, 0.5, 2, 3.0
    res = run_experiment(make_config("semigroup-compare", seed=0, n_list=[n]))
    scale = n ** math.exp(-s)
    xs = [j / scale for j in co.grid_states(n, s, L)]
    coeffs = [0] * m + [1]
    sup = max(abs(co.inhomogeneous_semigroup_monomial(n, s, t, m, x) - semigroup_apply_poly(t, coeffs, x)) for x in xs)
    assert _rows(res, "sup_norm")[0].error == pytest.approx(sup, rel=1e-9)


def test_converge_dist_degenerate_time():
    res = run_experiment(make_config("converge-dist", seed=0, t_list=[0.0], n_list=[10, 100]))
    for r in _rows(res, "ks_statistic"):
        assert r.estimate == 0.0
    assert not _rows(res, "lattice_atom_max")


def test_ck_check_default_passes():
    res = run_experiment(make_config("ck-check", seed=0))
    assert res.passed and max(r.error for r in res.rows) < 1e-10


def test_generator_check_default_passes():
    res = run_experiment(make_config("generator-check", seed=0))
    assert res.passed and len(res.rows) == 15


def test_richardson_removes_polynomial_error():
    f = lambda h: 2.0 + 3 * h - 5 * h * h
    assert richardson([f(1e-1), f(1e-2), f(1e-3)]) == pytest.approx(2.0, abs=1e-12)
    assert richardson([f(0.2), f(0.1)], ratio=2) == pytest.approx(2.0, abs=0.3)


# ---------------------------------------------------------------- determinism

def test_stream_is_reproducible():
    a = stream(42, stream_key("x", 1), 3).random(5)
    b = stream(42, stream_key("x", 1), 3).random(5)
    c = stream(42, stream_key("x", 1), 4).random(5)
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def _uniform_task(rng, size):
    return rng.random(size)


@given(st.integers(1, 20_000), st.integers(0, 2**64 - 1))
def test_run_blocks_layout_is_fixed(reps, seed):
    parts = run_blocks(_uniform_task, seed, 7, reps, block_size=4096)
    assert sum(p.size for p in parts) == reps
    head = min(3, reps)
    assert np.array_equal(parts[0][:head], stream(seed, 7, 0).random(head))


def test_run_blocks_independent_of_workers():
    one = np.concatenate(run_blocks(_uniform_task, 5, 11, 10_000, jobs=1, block_size=1000))
    four = np.concatenate(run_blocks(_uniform_task, 5, 11, 10_000, jobs=4, block_size=1000))
    assert np.array_equal(one, four)


def test_seed_42_twice_byte_identical(tmp_path):
    outs = []
    for i in range(2):
        out = tmp_path / f"r{i}.csv"
        assert main(["fdd", "--seed", "42", "--replicates", "3000", "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_worker_count_does_not_change_output(tmp_path):
    texts = []
    for jobs in (1, 4):
        out = tmp_path / f"j{jobs}.csv"
        main(["fdd", "--seed", "3", "--replicates", "9000", "--jobs", str(jobs), "--out", str(out)])
        texts.append(out.read_bytes())
    assert texts[0] == texts[1]


# ---------------------------------------------------------------- CLI

def test_cli_exit_codes(tmp_path, capsys):
    assert main(["generator-check", "--seed", "1"]) == 0
    captured = capsys.readouterr()
    assert captured.out.startswith(",".join(HEADER)) and "PASS" in captured.err

    # a final tolerance nobody can meet
    bad = tmp_path / "bad.cfg"
    bad.write_text("experiment = converge-moments\nseed = 1\ntolerance = 1e-9\n")
    assert main(["converge-moments", "--config", str(bad)]) == 1
    assert "FAIL" in capsys.readouterr().err

    broken = tmp_path / "broken.cfg"
    broken.write_text("seed = 1\n")
    assert main(["converge-moments", "--config", str(broken)]) == 2
    assert main(["fdd", "--config", str(bad)]) == 2  # config is for another experiment
    assert main(["fdd", "--config", str(tmp_path / "missing.cfg")]) == 2
    assert main(["fdd", "--seed", "1", "--replicates", "0"]) == 2


def test_cli_json_and_flags(tmp_path):
    out = tmp_path / "g.json"
    assert main(["generator-check", "--seed", "5", "--format", "json", "--out", str(out), "--precision-bits", "128"]) == 0
    records = json.loads(out.read_text())
    assert records and all(r["experiment"] == "generator-check" for r in records)


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "bsml", "ck-check", "--seed", "0"], capture_output=True, text=True, timeout=300
    )
    assert proc.returncode == 0 and proc.stdout.startswith("experiment,")


def test_semigroup_example_up_to_ten_thousand():
    # documented example: n in {1e2, 1e3, 1e4}, sup decreasing with final < 0.05
    res = run_experiment(make_config("semigroup-compare", seed=0, n_list=[100, 1000, 10_000]))
    sups = [r.error for r in _rows(res, "sup_norm")]
    assert all(b < a for a, b in zip(sups, sups[1:]))
    assert sups[-1] < 0.05, f"final sup {sups[-1]:.4f}"


def test_converge_dist_statistic_shrinks_from_smallest_n():
    res = run_experiment(make_config("converge-dist", seed=0, n_list=[10, 10_000]))
    small, large = (r.estimate for r in _rows(res, "ks_statistic"))
    assert small > large
