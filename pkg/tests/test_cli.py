import csv
import json
import os
from pathlib import Path
import subprocess
import sys

import pytest

from prodres.cli import load_config, main
from prodres.errors import ConfigError

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def write(tmp_path, text, name="run.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


KERNEL = """
experiment = "kernel"
name = "k"
mode = "closed_form"
tol = 1e-10
[params]
lam = 0.0
deltas = [0.5, 1.0, 2.0]
[thresholds]
max_rel_error = {thr}
"""


def test_kernel_example_writes_csv(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["kernel", "--config", str(CONFIGS / "kernel_closed_form.toml"), "--out", str(out)]) == 0
    rows = list(csv.DictReader(open(out / "kernel.csv")))
    assert len(rows) == 6
    assert all(float(r["rel_error"]) < 1e-12 for r in rows)
    man = json.loads((out / "manifest.json").read_text())
    assert man["passed"] is True
    assert sorted(man["artifacts"]) == sorted(os.listdir(out))
    assert "PASS kernel_closed_form:max_rel_error" in capsys.readouterr().out


def test_regions_example_marks_saddle(tmp_path):
    out = tmp_path / "regions"
    assert main(["regions", "--config", str(CONFIGS / "regions_label_map.toml"), "--out", str(out)]) == 0
    rows = list(csv.DictReader(open(out / "label_map.csv")))
    assert len(rows) == 200 * 200
    labels = {r["label"] for r in rows}
    assert "boundary" in labels
    near = min(rows, key=lambda r: abs(float(r["mu1_re"]) + 0.5) + abs(float(r["mu1_im"])))
    assert near["label"] == "boundary"


def test_breach_exits_one(tmp_path, capsys):
    cfg = write(tmp_path, KERNEL.format(thr="1e-300"))
    out = tmp_path / "out"
    assert main(["kernel", "--config", str(cfg), "--out", str(out)]) == 1
    err = json.loads(capsys.readouterr().err)
    assert err["status"] == "breach"
    assert err["failed"][0]["name"] == "max_rel_error"
    assert json.loads((out / "manifest.json").read_text())["passed"] is False


@pytest.mark.parametrize(
    "text, field",
    [
        (KERNEL.format(thr="1e-12") + "\nbogus = 1\n", "bogus"),
        (KERNEL.format(thr="-1.0"), "thresholds.max_rel_error"),
        (KERNEL.format(thr="1e-12").replace("closed_form", "nope"), "mode"),
        (KERNEL.format(thr="1e-12").replace("[params]", "[params]\nwhatever = 2"), "params.whatever"),
        (KERNEL.format(thr="1e-12").replace("tol = 1e-10", "tol = -1"), "tol"),
        ("experiment = [", "invalid TOML"),
        (KERNEL.format(thr="1e-12").replace("lam = 0.0", "lam = \"abc\""), "params"),
    ],
)
def test_malformed_config_exits_two_without_artifacts(tmp_path, capsys, text, field):
    cfg = write(tmp_path, text)
    out = tmp_path / "out"
    assert main(["kernel", "--config", str(cfg), "--out", str(out)]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["status"] == "config_error"
    assert any(field in e for e in err["errors"])
    assert not out.exists()
    assert [p.name for p in tmp_path.iterdir()] == ["run.toml"]


def test_missing_config_file(tmp_path):
    assert main(["kernel", "--config", str(tmp_path / "absent.toml"), "--out", str(tmp_path / "o")]) == 2


def test_subcommand_must_match(tmp_path, capsys):
    cfg = write(tmp_path, KERNEL.format(thr="1e-12"))
    assert main(["martin", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "subcommand" in capsys.readouterr().err


def test_overrides_are_recorded(tmp_path):
    cfg = write(tmp_path, KERNEL.format(thr="1e-12"))
    out = tmp_path / "out"
    assert main(["kernel", "--config", str(cfg), "--out", str(out), "--tol", "1e-9", "--seed", "5"]) == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["effective"] == {"seed": 5, "tol": 1e-9}
    assert main(["kernel", "--config", str(cfg), "--out", str(out), "--tol", "-1"]) == 2


def test_deterministic_across_threads(tmp_path):
    cfg = CONFIGS / "c01_kernel_heat_laplace.toml"
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["kernel", "--config", str(cfg), "--out", str(a), "--threads", "1"]) == 0
    assert main(["kernel", "--config", str(cfg), "--out", str(b), "--threads", "4"]) == 0
    for name in os.listdir(a):
        if name != "timings.json":
            assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_load_config_collects_all_errors(tmp_path):
    cfg = write(tmp_path, 'experiment = "nope"\nname = "bad name"\nseed = -1\n')
    with pytest.raises(ConfigError) as exc:
        load_config(cfg)
    msg = str(exc.value)
    for f in ("experiment", "name", "seed", "mode"):
        assert f in msg


def test_module_entry_point(tmp_path):
    cfg = write(tmp_path, KERNEL.format(thr="1e-12"))
    r = subprocess.run([sys.executable, "-m", "prodres", "kernel", "--config", str(cfg), "--out", str(tmp_path / "o")],
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
