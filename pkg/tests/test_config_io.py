import json

import numpy as np
import pytest

from vvlab.config import ExperimentConfig, load_config, parse_config_text
from vvlab.errors import ConfigError
from vvlab.io import config_hash, read_csv, read_manifest, read_snapshot, write_csv, write_manifest, write_snapshot

FULL = """
[system]
name = shared_frame2

[initial]
ic = riemann(0.05,0;0,0.02)
seed = 3
tv_guard = 0.4

[grid]
xmin = -5
xmax = 5
M = 64
boundary = extrapolate

[run]
eps = 1.0, 0.5
t_end = 0.5
snapshot_count = 4
conservative = false

[decomposition]
mode = travelling1
delta1 = 0.1
N = 3

[output]
dir = out/run1
"""

CUSTOM = """
[system]
name = custom
frame = 1, 0; 0, 1
lambda = 0, 1; 2, 0.5
mu = 1; 1.5
box = -0.1, 0.1; -0.1, 0.1
c0 = 1.5
c1 = 1.0
"""


def test_parse_full_config():
    cfg = parse_config_text(FULL)
    assert cfg.system == "shared_frame2"
    assert cfg.ic == "riemann(0.05,0;0,0.02)"
    assert cfg.seed == 3 and cfg.tv_guard == 0.4
    assert (cfg.xmin, cfg.xmax, cfg.M) == (-5.0, 5.0, 64)
    assert cfg.eps == (1.0, 0.5)
    assert cfg.snapshot_times == (0.0, 0.125, 0.25, 0.375, 0.5)
    assert cfg.mode == "travelling1"
    assert cfg.cutoffs.delta1 == 0.1 and cfg.cutoffs.N == 3
    assert cfg.out == "out/run1"
    assert cfg.model().name == "shared_frame2"


def test_load_config_from_file(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text(FULL)
    assert load_config(path) == parse_config_text(FULL)


@pytest.mark.parametrize("text", [
    "[grid]\nM = 64\nresolution = 3\n",
    "[solver]\nM = 64\n",
    "[run]\neps = 0.5, 1.0\n",
    "[run]\neps = 0\n",
    "[run]\nt_end = 1\nsnapshots = 0, 2\n",
    "[grid]\nM = 4\n",
    "[decomposition]\nmode = spectral\n",
    "[grid]\nboundary = reflect\n",
    "[run]\nconservative = maybe\n",
    "[grid]\nM = many\n",
    "[system]\nname = custom\nframe = 1,0;0,1\n",
    "not an ini file",
])
def test_invalid_configs_rejected(text):
    with pytest.raises(ConfigError):
        parse_config_text(text)


def test_custom_system():
    cfg = parse_config_text(CUSTOM)
    model = cfg.model()
    assert model.n == 2
    np.testing.assert_allclose(model.A(np.array([0.05, 0.0])), np.diag([0.05, 2.0]))
    np.testing.assert_allclose(model.B(np.array([0.0, 0.0])), np.diag([1.0, 1.5]))


@pytest.mark.parametrize("text", [FULL, CUSTOM])
def test_dict_round_trip(text):
    cfg = parse_config_text(text)
    again = ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg
    assert config_hash(again.to_dict()) == config_hash(cfg.to_dict())


def test_config_hash_sensitive_to_values():
    base = ExperimentConfig()
    assert config_hash(base.to_dict()) != config_hash(base.updated(seed=1).to_dict())
    assert len(config_hash(base.to_dict())) == 64


def test_updated_ignores_none():
    cfg = ExperimentConfig().updated(M=None, seed=4)
    assert cfg.M == 512 and cfg.seed == 4


def test_csv_round_trip_is_exact(tmp_path, rng):
    cols = [rng.normal(size=7) * 10.0 ** rng.integers(-300, 300, size=7) for _ in range(3)]
    path = write_csv(tmp_path / "sub" / "a.csv", ["a", "b", "c"], cols)
    header, data = read_csv(path)
    assert header == ["a", "b", "c"]
    np.testing.assert_array_equal(data, np.column_stack(cols))


def test_snapshot_round_trip(tmp_path, rng):
    x = np.linspace(0, 1, 9)
    values = rng.normal(size=(9, 2))
    write_snapshot(tmp_path / "s.csv", x, values)
    assert (tmp_path / "s.csv").read_text().splitlines()[0] == "x,u1,u2"
    x2, v2 = read_snapshot(tmp_path / "s.csv")
    np.testing.assert_array_equal(x2, x)
    np.testing.assert_array_equal(v2, values)


def test_manifest_round_trip(tmp_path):
    data = {"b": [1, 2.5], "a": {"x": "y"}}
    write_manifest(tmp_path / "m.json", data)
    assert read_manifest(tmp_path / "m.json") == data
