import filecmp
import json
import os

import numpy as np
import pytest

from fluctlat import cli
from fluctlat.config import (
    ExperimentConfig,
    parse_config_text,
    parse_profile,
    read_manifest,
    serialize_config,
    write_manifest,
)
from fluctlat.errors import ConfigError
from fluctlat.grids import GridSpec, TrajectoryGrid
from fluctlat.rates import build_cylinder_rate
from fluctlat.simulator import SimParams, run


def test_parse_config_text():
    cfg = parse_config_text("a = 1\n# comment\nb=x,y # trailing\n\n")
    assert cfg == {"a": "1", "b": "x,y"}


def test_parse_config_rejects_garbage():
    with pytest.raises(ConfigError):
        parse_config_text("just words\n")


def test_serialize_round_trip():
    cfg = {"z": "1", "a": "poly:0.5,0,0.25"}
    assert parse_config_text(serialize_config(cfg)) == cfg


def test_parse_profile_kinds():
    x = np.array([-1.0, 0.0, 1.0])
    assert np.all(parse_profile("zero")(x) == 0.0)
    assert np.all(parse_profile("const:0.4")(x) == 0.4)
    p = parse_profile("poly:0.5,0,0.25")
    assert np.allclose(p(x), 0.5 + 0.25 * x**2)
    with pytest.raises(ConfigError):
        parse_profile("spline:1,2")
    with pytest.raises(ConfigError):
        parse_profile("bare")


def test_experiment_config_getters():
    cfg = ExperimentConfig(
        mode="simulate",
        raw={"sim.n": "32", "sim.t": "0.5", "sim.rate": "2.0,0.5", "sim.sample_times": "0.25,0.5"},
    )
    assert cfg.get_int("sim.n") == 32
    assert cfg.get_float("sim.t") == 0.5
    assert cfg.get_floats("sim.sample_times") == (0.25, 0.5)
    rate = cfg.get_rate()
    assert rate.range == 0
    assert np.all(rate.table == [2.0, 0.5])
    with pytest.raises(ConfigError):
        cfg.get_int("sim.missing", required=True)


def test_experiment_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(mode="fly")
    with pytest.raises(ConfigError):
        ExperimentConfig(mode="simulate", replicas=0)
    with pytest.raises(ConfigError):
        ExperimentConfig(mode="simulate", raw={"sim.rate": "fast"}).get_rate()


def test_manifest_round_trip(tmp_path):
    cfg = ExperimentConfig(
        mode="hydro", raw={"grid.nx": "32", "sim.gamma": "const:0.5"}, seed=7, replicas=3
    )
    path = tmp_path / "manifest.json"
    write_manifest(cfg, str(path))
    back = read_manifest(str(path))
    assert back.mode == cfg.mode
    assert back.seed == 7
    assert back.replicas == 3
    assert back.raw == cfg.raw


def test_write_csv_empty(tmp_path):
    path = tmp_path / "empty.csv"
    cli.write_csv(str(path), ["a", "b"], [])
    assert path.read_bytes() == b"a,b\n"


def test_write_csv_full_precision(tmp_path):
    path = tmp_path / "v.csv"
    cli.write_csv(str(path), ["v"], [(1 / 3,)])
    text = path.read_text()
    assert float(text.splitlines()[1]) == 1 / 3


def test_compare_micro_macro_empty_system():
    # empty lattice, zero reservoirs, zero reaction rate: every gap is exactly 0
    rate = build_cylinder_rate("zero")
    params = SimParams(
        N=8, T=0.1, beta_plus=0.0, beta_minus=0.0, rate=rate,
        gamma=lambda x: 0.0 * np.asarray(x), seed=0, sample_times=(0.05, 0.1),
    )
    results = [run(params)]
    grid = GridSpec(nx=16, nt=16, T=0.1)
    z = np.zeros((17, 17))
    traj = TrajectoryGrid(grid, z, z, z, 0.0, 0.0)
    gaps = cli.compare_micro_macro(results, traj, [lambda x: np.cos(np.pi * x / 2)])
    assert gaps[0] == {"density_gap": 0.0, "current_gap": 0.0, "reaction_gap": 0.0}


def _write(tmp_path, text):
    p = tmp_path / "exp.cfg"
    p.write_text(text)
    return str(p)


def test_main_hydro_stationary(tmp_path):
    cfgfile = _write(
        tmp_path,
        "sim.gamma = const:0.5\nsim.t = 0.1\ngrid.nx = 16\nsim.rate = constant\n",
    )
    rc = cli.main(["hydro", "--config", cfgfile, "--out", str(tmp_path)])
    assert rc == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["max_abs_deviation_from_initial"] < 1e-12
    assert (tmp_path / "fields.csv").exists()
    assert (tmp_path / "manifest.json").exists()


def test_main_simulate_deterministic(tmp_path):
    cfg = "sim.n = 8\nsim.t = 0.05\nsim.gamma = const:0.5\nsim.sample_times = 0.05\n"
    d1, d2 = tmp_path / "a", tmp_path / "b"
    d1.mkdir(), d2.mkdir()
    cfgfile = _write(tmp_path, cfg)
    for d in (d1, d2):
        rc = cli.main(["simulate", "--config", cfgfile, "--out", str(d),
                       "--seed", "3", "--replicas", "2"])
        assert rc == 0
    for name in ("rho.csv", "q.csv", "k.csv", "summary.json"):
        assert filecmp.cmp(d1 / name, d2 / name, shallow=False), name


def test_main_simulate_csv_schema(tmp_path):
    cfgfile = _write(
        tmp_path, "sim.n = 4\nsim.t = 0.05\nsim.gamma = const:1.0\nsim.rate = zero\n"
    )
    rc = cli.main(["simulate", "--config", cfgfile, "--out", str(tmp_path)])
    assert rc == 0
    lines = (tmp_path / "rho.csv").read_text().splitlines()
    assert lines[0] == "run_count,t,x,value"
    assert len(lines) == 1 + 9  # one sampled time, 2N+1 sites
    # bulk exclusion moves no mass in a full interior; all values stay in [0,1]
    assert all(0.0 <= float(line.split(",")[3]) <= 1.0 for line in lines[1:])
    xs = [float(line.split(",")[1]) for line in lines[1:]]
    assert all(t == 0.05 for t in xs)


def test_main_oracle_moment(tmp_path):
    cfgfile = _write(
        tmp_path,
        "sim.n = 2\nsim.t = 0.1\nsim.gamma = const:0.5\nsim.tilt_h = poly:0,0.5\n",
    )
    rc = cli.main(["oracle", "--config", cfgfile, "--out", str(tmp_path)])
    assert rc == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["moment"] == pytest.approx(1.0, abs=1e-10)


def test_main_exit_codes(tmp_path):
    assert cli.main(["warp", "--out", str(tmp_path)]) == 2
    assert cli.main(["simulate", "--config", str(tmp_path / "no.cfg"),
                     "--out", str(tmp_path)]) == 2
    # missing required key
    cfgfile = _write(tmp_path, "sim.t = 0.1\n")
    assert cli.main(["simulate", "--config", cfgfile, "--out", str(tmp_path)]) == 2
    # numerical failure: boundary data incompatible with reservoirs
    cfgfile = _write(tmp_path, "sim.gamma = const:0.9\nsim.t = 0.1\ngrid.nx = 8\n")
    assert cli.main(["hydro", "--config", cfgfile, "--out", str(tmp_path)]) == 1
