import csv
import json

import numpy as np
import pytest

from tomoflow.cli import EXIT_OK, EXIT_USAGE, load_experiment_config, main, ConfigError
from tomoflow.io import read_igrd, read_isin

CONFIG = """
[phantom]
template_kind = single-star-template
target_kind = single-star-target
size = 32

[geometry]
n_angles = 6
n_detectors = 48

[noise]
snr_db = 6.0
seed = 11

[registration]
gamma = 1e-7
sigma = 4.0
alpha = 0.02
n_steps = 5
max_iters = 3

[output]
dir = out
"""


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text(CONFIG)
    return path


def test_config_parses(config_path):
    cfg = load_experiment_config(config_path)
    assert cfg["size"] == 32
    assert cfg["registration"].n_steps == 5
    assert cfg["noise"].seed == 11


def test_config_rejects_unknown_key(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text(CONFIG.replace("sigma = 4.0", "sigma = 4.0\nwhatever = 1"))
    with pytest.raises(ConfigError, match="whatever"):
        load_experiment_config(path)


def test_config_rejects_bad_sigma(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text(CONFIG.replace("sigma = 4.0", "sigma = 0"))
    with pytest.raises(ConfigError, match="sigma"):
        load_experiment_config(path)


def test_register_command_outputs(tmp_path, config_path):
    out = tmp_path / "results"
    rc = main(["--out", str(out), "register", "--config", str(config_path)])
    assert rc == EXIT_OK
    trajectories = sorted(out.glob("trajectory_*.igrd"))
    assert len(trajectories) == 6  # n_steps + 1
    assert (out / "objective.csv").exists()
    assert (out / "metrics.csv").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 11
    assert "numpy" in manifest["versions"]
    with open(out / "objective.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4  # max_iters + 1 evaluations
    assert float(rows[-1]["total"]) < float(rows[0]["total"])


def test_register_rerun_is_bit_identical(tmp_path, config_path):
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    assert main(["--out", str(out1), "register", "--config", str(config_path)]) == EXIT_OK
    assert main(["--out", str(out2), "register", "--config", str(config_path)]) == EXIT_OK
    for name in ("trajectory_005.igrd", "data.isin"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_register_bad_config_exit_code(tmp_path):
    path = tmp_path / "bad.ini"
    path.write_text(CONFIG.replace("sigma = 4.0", "sigma = 0"))
    rc = main(["register", "--config", str(path)])
    assert rc == EXIT_USAGE


def test_phantom_project_noise_fbp_tv_evaluate_pipeline(tmp_path):
    phantom_path = tmp_path / "target.igrd"
    sino_path = tmp_path / "clean.isin"
    noisy_path = tmp_path / "noisy.isin"
    fbp_path = tmp_path / "fbp.igrd"
    tv_path = tmp_path / "tv.igrd"
    eval_path = tmp_path / "scores.csv"

    assert main(["phantom", "--kind", "shepp-logan", "--size", "32", "--out", str(phantom_path)]) == EXIT_OK
    assert main(["project", "--image", str(phantom_path), "--angles", "12", "--detectors", "48",
                 "--out", str(sino_path)]) == EXIT_OK
    assert main(["noise", "--sinogram", str(sino_path), "--snr-db", "10", "--seed", "3",
                 "--out", str(noisy_path)]) == EXIT_OK
    assert main(["fbp", "--sinogram", str(noisy_path), "--size", "32", "--freq-scaling", "0.6",
                 "--out", str(fbp_path)]) == EXIT_OK
    assert main(["tv", "--sinogram", str(noisy_path), "--size", "32", "--mu", "1.0",
                 "--iters", "50", "--out", str(tv_path)]) == EXIT_OK
    assert main(["evaluate", "--image", str(fbp_path), "--reference", str(phantom_path),
                 "--out", str(eval_path)]) == EXIT_OK

    img = read_igrd(fbp_path)
    assert img.grid.nx == 32
    sino = read_isin(noisy_path)
    assert sino.geometry.n_angles == 12
    with open(eval_path) as fh:
        row = next(csv.DictReader(fh))
    assert 0.0 < float(row["ssim"]) <= 1.0


def test_unknown_phantom_kind_exit(tmp_path):
    rc = main(["phantom", "--kind", "nonsense", "--size", "16", "--out", str(tmp_path / "x.igrd")])
    assert rc == EXIT_USAGE


def test_invalid_suite_id():
    assert main(["suite", "--id", "9"]) == EXIT_USAGE
