"""Acceptance criteria, one configuration each; prints a PASS/FAIL line per criterion."""

from pathlib import Path
import time

import pytest

from prodres.cli import load_config, run

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

# (criterion, config stem, runtime budget in seconds)
CRITERIA = [
    ("c01", "c01_kernel_heat_laplace", 5),
    ("c02", "c02_kernel_radial_ode", 1),
    ("c03", "c03_product_oracle", 60),
    ("c04", "c04_asymptotics_saddle_algebra", 1),
    ("c05", "c05_asymptotics_front_fit", 300),
    ("c06", "c06_asymptotics_side_fit", 300),
    ("c07", "c07_asymptotics_corner", 60),
    ("c08", "c08_regions_decisions", 120),
    ("c09", "c09_transition_profile", 60),
    ("c10", "c10_continuation_regge", 120),
    ("c11", "c11_product_boundary_values", 120),
    ("c12", "c12_martin_limits", 600),
]


@pytest.mark.parametrize("crit, stem, budget", CRITERIA, ids=[c[0] for c in CRITERIA])
def test_criterion(crit, stem, budget, tmp_path, capsys):
    cfg = load_config(CONFIGS / f"{stem}.toml")
    t0 = time.perf_counter()
    outcome, manifest = run(cfg, tmp_path / stem)
    elapsed = time.perf_counter() - t0
    in_time = elapsed < budget
    ok = outcome.passed and in_time
    with capsys.disabled():
        print(f"\n{'PASS' if ok else 'FAIL'} {crit} {stem} ({elapsed:.2f}s of {budget}s)")
        for c in manifest["checks"]:
            print(f"    {'ok  ' if c['passed'] else 'FAIL'} {c['name']} = {c['value']:.6g} {c['op']} {c['threshold']:.6g}")
    failed = [c["name"] for c in manifest["checks"] if not c["passed"]]
    assert not failed, f"{crit}: failed checks {failed}"
    assert in_time, f"{crit}: {elapsed:.2f}s exceeds the {budget}s budget"
