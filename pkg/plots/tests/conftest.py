"""Fixture CSVs produced by the simulator CLI (the only interface used)."""

import shutil
import subprocess
import sys

import pytest

ZIPF_SPEC = ("devices=50,aps=200,duration=4000,rate=0.01,direct=0.2,"
             "alpha=1.2,max-path=3,seed=20240810")

SIM_ARGS = ["--lambda-inf", "0.05", "--lambda-dir", "0.01",
            "--trials", "50", "--seed", "42", "--threads", "1"]


def run_simulator(*args):
    exe = shutil.which("patchsim")
    cmd = [exe] if exe else [sys.executable, "-m", "patchsim.cli"]
    proc = subprocess.run(cmd + [str(a) for a in args],
                          capture_output=True, text=True)
    if proc.returncode != 0:
        raise RuntimeError(f"patchsim failed: {proc.stderr}")


@pytest.fixture(scope="session")
def result_csvs(tmp_path_factory):
    """grid/series/optimal/diff CSVs swept on the heavy-tailed fixture."""
    root = tmp_path_factory.mktemp("csvs")
    paths = {name: root / f"{name}.csv"
             for name in ("grid", "series", "optimal", "diff", "cell")}
    run_simulator("sweep", "--synthetic", ZIPF_SPEC, "--policy", "traffic",
                  "--patch-times", "0,400,800", "--fractions", "10,50,90",
                  *SIM_ARGS, "-o", paths["grid"],
                  "--series-out", paths["series"],
                  "--optimal-out", paths["optimal"])
    run_simulator("compare", "--synthetic", ZIPF_SPEC,
                  "--policy-a", "random", "--policy-b", "traffic",
                  "--patch-times", "0,400,800", "--fractions", "10,50,90",
                  *SIM_ARGS, "-o", paths["diff"])
    run_simulator("simulate", "--synthetic", ZIPF_SPEC, "--policy", "none",
                  *SIM_ARGS, "-o", paths["cell"])
    return paths
