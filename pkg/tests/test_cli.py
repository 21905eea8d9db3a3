import subprocess
import sys

import numpy as np
import pytest

from noiseblind import from_array, sample_matrix, gaussian, save_matrix
from noiseblind.cli import main


def write_instance(tmp_path, m=20, N=60, s=3, seed=0, noise=0.0):
    A = sample_matrix(gaussian(), m, N, True, seed)
    rng = np.random.default_rng(seed + 1)
    x0 = np.zeros(N)
    support = rng.choice(N, size=s, replace=False)
    x0[support] = rng.standard_normal(s)
    y = A.entries @ x0
    if noise > 0.0:
        w = rng.standard_normal(m)
        y = y + noise * w / np.linalg.norm(w)
    mat_path = tmp_path / "A.mat"
    y_path = tmp_path / "y.txt"
    save_matrix(A, mat_path)
    y_path.write_text("".join(f"{float(v)!r}\n" for v in y))
    return mat_path, y_path, x0


def test_decode_recovers_sparse_vector(tmp_path, capsys):
    mat, yf, x0 = write_instance(tmp_path)
    code = main(["decode", "--matrix", str(mat), "--y", str(yf), "--eta", "0"])
    out, err = capsys.readouterr()
    assert code == 0
    z = np.array([float(line) for line in out.splitlines()])
    assert z.shape == x0.shape
    assert np.linalg.norm(z - x0) <= 1e-6
    assert "objective=" in err and "converged=true" in err


def test_decode_respects_eta_budget(tmp_path, capsys):
    mat, yf, _ = write_instance(tmp_path, noise=0.05)
    code = main(["decode", "--matrix", str(mat), "--y", str(yf),
                 "--eta", "0.05"])
    out, err = capsys.readouterr()
    assert code == 0
    resid = float(err.split("residual=")[1].split()[0])
    assert resid <= 0.05 + 1e-6


def test_decode_failure_exits_nonzero(tmp_path, capsys):
    # an all-zero matrix has no preimage for a nonzero right-hand side
    bad = from_array(np.zeros((2, 4)))
    mat_path = tmp_path / "zero.mat"
    save_matrix(bad, mat_path)
    y_path = tmp_path / "y.txt"
    y_path.write_text("1.0\n1.0\n")
    code = main(["decode", "--matrix", str(mat_path), "--y", str(y_path)])
    out, err = capsys.readouterr()
    assert code == 1
    assert "noiseblind:" in err


def test_qp_estimate_output_shape(capsys):
    code = main(["qp-estimate", "--dist", "gaussian", "--m", "10",
                 "--N", "50", "--directions", "5", "--seed", "3"])
    out, err = capsys.readouterr()
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "direction,ratio"
    assert len(lines) > 1
    for line in lines[1:]:
        label, ratio = line.split(",")
        assert float(ratio) > 0.0
    assert "d_hat=" in err and "certificate_lower=" in err
    assert "reference_D=" in err and "not asserted" in err


def test_qp_estimate_deterministic(capsys):
    args = ["qp-estimate", "--dist", "rademacher", "--m", "8", "--N", "40",
            "--directions", "4", "--norm", "clipped", "--alpha", "2.0",
            "--seed", "1"]
    assert main(args) == 0
    first = capsys.readouterr()
    assert main(args) == 0
    second = capsys.readouterr()
    assert first.out == second.out
    assert "norm=clipped(2)" in first.err


CONFIG = """\
N = 60
s = 2
m_list = 12
distributions = gaussian, rademacher
noise = spherical(0.01)
decoders = bp, bpdn(1.0)
trials = 2
master_seed = 6
"""


def test_experiment_writes_outputs(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(CONFIG)
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    assert main(["experiment", "--config", str(cfg), "--out", str(out_a)]) == 0
    assert main(["experiment", "--config", str(cfg), "--out", str(out_b)]) == 0
    capsys.readouterr()
    for name in ("trials.csv", "summary.csv", "plot.gnuplot"):
        assert (out_a / name).is_file()
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


def test_experiment_requires_exactly_one_source(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(CONFIG)
    out = tmp_path / "out"
    assert main(["experiment", "--out", str(out)]) == 2
    assert main(["experiment", "--config", str(cfg), "--preset", "desk",
                 "--out", str(out)]) == 2
    capsys.readouterr()


def test_experiment_bad_inputs_exit_one(tmp_path, capsys):
    out = tmp_path / "out"
    missing = tmp_path / "missing.cfg"
    assert main(["experiment", "--config", str(missing), "--out", str(out)]) == 1
    bad = tmp_path / "bad.cfg"
    bad.write_text(CONFIG.replace("m_list = 12", "m_list = 1"))
    assert main(["experiment", "--config", str(bad), "--out", str(out)]) == 1
    capsys.readouterr()


def test_console_script_round_trip(tmp_path):
    mat, yf, x0 = write_instance(tmp_path, seed=4)
    proc = subprocess.run(
        ["noiseblind", "decode", "--matrix", str(mat), "--y", str(yf)],
        capture_output=True, text=True, timeout=120,
    )
    assert proc.returncode == 0, proc.stderr
    z = np.array([float(line) for line in proc.stdout.splitlines()])
    assert np.linalg.norm(z - x0) <= 1e-6
