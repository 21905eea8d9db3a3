"""End-to-end acceptance gate.

Each test prints one labelled PASS/FAIL line with its headline numbers
(visible in captured output) and asserts the same verdict.  Oracles are
recomputed here from scratch so the gate does not lean on the package's
own closed forms.  The two desk-scale ordering sweeps are cached and
shared between their sub-checks.
"""

import itertools
import math
import subprocess
import time

import numpy as np
from scipy import optimize

from noiseblind import (
    BP,
    BPDN,
    DecodeProblem,
    ExperimentConfig,
    Psi,
    Spherical,
    clipped_norm,
    dagger_norm_exact,
    decode,
    derive_seed,
    dual_clipped_norm,
    empirical_Q,
    empirical_R,
    gaussian,
    inradius_estimate,
    montgomery_smith_check,
    run_experiment,
    sample_array,
    sample_matrix,
    sample_sparse_vector,
    solve_bp,
    stream,
    summarize,
)
from noiseblind.rng import TAG_PROBE

DISTS = ("gaussian", "rademacher", "student_t(7)")


def report(label, ok, detail):
    print(f"[{label}] {'PASS' if ok else 'FAIL'} {detail}")
    return ok


def dual_oracle(y, alpha):
    """Maximize <y,z> over {||z||_2 <= 1, alpha*||z||_inf <= 1} by
    water-filling with a root solve on the active l2 constraint."""
    y = np.asarray(y, dtype=float)
    if not np.any(y):
        return 0.0
    box = np.sign(y) / alpha
    if np.linalg.norm(box) <= 1.0:
        return float(y @ box)

    def radius(t):
        return float(np.linalg.norm(np.clip(t * y, -1 / alpha, 1 / alpha))) - 1.0

    hi = 1.0
    while radius(hi) < 0.0:
        hi *= 2.0
    t = optimize.brentq(radius, 0.0, hi, xtol=1e-14, rtol=1e-15)
    z = np.clip(t * y, -1 / alpha, 1 / alpha)
    return float(y @ z)


def literal_dagger(y, k):
    best = 0.0
    n = len(y)
    for assign in itertools.product(range(k), repeat=n):
        tot = 0.0
        for b in range(k):
            sq = sum(y[i] ** 2 for i in range(n) if assign[i] == b)
            tot += math.sqrt(sq)
        best = max(best, tot)
    return best


def bp_basic_solution_oracle(A, y):
    A = np.asarray(A, dtype=float)
    m, N = A.shape
    best = math.inf
    for cols in itertools.combinations(range(N), m):
        sub = A[:, cols]
        if abs(np.linalg.det(sub)) < 1e-12:
            continue
        z = np.zeros(N)
        z[list(cols)] = np.linalg.solve(sub, y)
        if np.linalg.norm(A @ z - y) < 1e-9:
            best = min(best, float(np.abs(z).sum()))
    return best


def test_acceptance_01_dual_norm_matches_maximization_oracle():
    started = time.perf_counter()
    rng = np.random.default_rng(101)
    worst_dual = 0.0
    worst_bidual = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 11))
        y = rng.standard_normal(n) * float(rng.choice([0.1, 1.0, 10.0]))
        for alpha in (1.0, 2.0, 5.0):
            got = dual_clipped_norm(y, alpha)
            worst_dual = max(worst_dual, abs(got - dual_oracle(y, alpha)))
            # bi-duality: the dual unit ball's support recovers the norm
            target = clipped_norm(y, alpha)
            spike = np.zeros(n)
            j = int(np.argmax(np.abs(y)))
            spike[j] = alpha * math.copysign(1.0, y[j])
            cands = [y / np.linalg.norm(y), spike]
            cands.extend(rng.standard_normal(n) for _ in range(5))
            best = 0.0
            for z in cands:
                dz = dual_clipped_norm(z, alpha)
                if dz > 0.0:
                    best = max(best, float(y @ z) / dz)
            assert best <= target + 1e-9
            worst_bidual = max(worst_bidual, abs(best - target))
    elapsed = time.perf_counter() - started
    ok = worst_dual <= 1e-6 and worst_bidual <= 1e-6 and elapsed < 60.0
    assert report(
        "01 dual-norm oracle", ok,
        f"worst dual dev {worst_dual:.2e}, worst bi-dual dev "
        f"{worst_bidual:.2e}, {elapsed:.1f}s",
    )


def test_acceptance_02_block_partition_sandwich():
    started = time.perf_counter()
    rng = np.random.default_rng(202)
    violations = 0
    checked = 0
    for _ in range(500):
        n = int(rng.integers(1, 13))
        y = rng.standard_normal(n) * float(rng.choice([0.5, 1.0, 4.0]))
        for k in (1, 2, 3, 4):
            dag = dagger_norm_exact(y, k)
            dual = dual_clipped_norm(y, math.sqrt(k))
            lo = dag / math.sqrt(k)
            hi = math.sqrt(2.0) * dag / math.sqrt(k)
            checked += 1
            if not (lo - 1e-9 <= dual <= hi + 1e-9):
                violations += 1
    # spot-audit the exact block value against literal enumeration
    rng2 = np.random.default_rng(203)
    worst_enum = 0.0
    for _ in range(25):
        n = int(rng2.integers(1, 8))
        y = rng2.standard_normal(n)
        for k in (1, 2, 3):
            worst_enum = max(worst_enum,
                             abs(dagger_norm_exact(y, k) - literal_dagger(y, k)))
    elapsed = time.perf_counter() - started
    ok = violations == 0 and worst_enum <= 1e-9 and elapsed < 300.0
    assert report(
        "02 block-partition sandwich", ok,
        f"{checked} checks, {violations} violations, enum dev "
        f"{worst_enum:.2e}, {elapsed:.1f}s",
    )


def test_acceptance_03_certified_gaps_and_enumerated_instance():
    res = solve_bp(DecodeProblem(np.array([[1.0, 2.0]]), np.array([2.0])))
    oracle = bp_basic_solution_oracle(np.array([[1.0, 2.0]]), np.array([2.0]))
    inst_ok = res.converged and abs(res.objective - oracle) <= 1e-8

    rng = np.random.default_rng(303)
    checked = 0
    gap_ok = True
    for trial in range(40):
        m = int(rng.integers(3, 12))
        N = m + int(rng.integers(2, 15))
        A = rng.standard_normal((m, N))
        x0 = np.zeros(N)
        sup = rng.choice(N, size=max(1, m // 3), replace=False)
        x0[sup] = rng.standard_normal(sup.size)
        w = rng.standard_normal(m)
        w *= 0.01 / np.linalg.norm(w)
        eta = 0.0 if trial % 2 == 0 else 0.02
        y = A @ x0 + (w if eta > 0.0 else 0.0)
        result = decode(DecodeProblem(A, y, eta=eta))
        if result.converged:
            checked += 1
            bar = 1e-8 + 1e-8 * result.objective
            gap_ok = gap_ok and result.certificate_gap <= bar
    ok = inst_ok and gap_ok and checked >= 35
    assert report(
        "03 certified optimality", ok,
        f"instance objective {res.objective!r} vs oracle {oracle!r}; "
        f"{checked} converged solves all within gap bound: {gap_ok}",
    )


def test_acceptance_04_noiseless_exact_recovery():
    started = time.perf_counter()
    hits = 0
    for seed in range(50):
        A = sample_matrix(gaussian(), 80, 200, True, seed)
        sv = sample_sparse_vector(200, 5, seed)
        y = A.entries @ sv.x0
        res = solve_bp(DecodeProblem(A.entries, y))
        if res.converged and float(np.linalg.norm(res.z - sv.x0)) <= 1e-6:
            hits += 1
    elapsed = time.perf_counter() - started
    ok = hits >= 48 and elapsed < 120.0
    assert report(
        "04 noiseless recovery", ok,
        f"{hits}/50 exact recoveries, {elapsed:.1f}s",
    )


_SWEEPS = {}


def spherical_sweep():
    if "spherical" not in _SWEEPS:
        cfg = ExperimentConfig(
            N=500, s=5, m_list=(150, 250, 350), distributions=DISTS,
            noise=Spherical(1e-2), decoders=(BP(), BPDN(2.0)),
            trials=100, master_seed=0,
        )
        started = time.perf_counter()
        summary = summarize(run_experiment(cfg, threads=4))
        _SWEEPS["spherical"] = (summary, time.perf_counter() - started)
    return _SWEEPS["spherical"]


def test_acceptance_05a_ball_decoder_penalty_under_spherical_noise():
    summary, elapsed = spherical_sweep()
    cells = []
    ok = elapsed < 1800.0
    for dist in DISTS:
        for m in (150, 250, 350):
            bp = summary[(dist, m, "bp", 0.0)].mean
            ball = summary[(dist, m, "bpdn", 2.0)].mean
            ratio = ball / bp
            cells.append(f"{dist},m={m}: {ratio:.3f}")
            ok = ok and ratio >= 1.2
    assert report(
        "05a ball-decoder penalty >= 1.2x", ok,
        f"({elapsed:.0f}s) " + "; ".join(cells),
    )


def test_acceptance_05b_ensemble_agreement_under_spherical_noise():
    summary, elapsed = spherical_sweep()
    cells = []
    ok = True
    for m in (150, 250, 350):
        means = [summary[(dist, m, "bp", 0.0)].mean for dist in DISTS]
        spread = max(means) / min(means) - 1.0
        cells.append(f"m={m}: {spread:.3f}")
        ok = ok and spread <= 0.30
    assert report(
        "05b ensemble agreement <= 30%", ok,
        f"({elapsed:.0f}s shared run) " + "; ".join(cells),
    )


def test_acceptance_06_sign_matrix_penalty_under_heavy_noise():
    cfg = ExperimentConfig(
        N=500, s=5, m_list=(150, 250),
        distributions=("gaussian", "rademacher"),
        noise=Psi(0.2, 1e-2), decoders=(BP(),), trials=100, master_seed=0,
    )
    started = time.perf_counter()
    summary = summarize(run_experiment(cfg, threads=4))
    elapsed = time.perf_counter() - started
    cells = []
    ok = elapsed < 1800.0
    for m in (150, 250):
        ratio = (summary[("rademacher", m, "bp", 0.0)].mean
                 / summary[("gaussian", m, "bp", 0.0)].mean)
        cells.append(f"m={m}: {ratio:.3f}")
        ok = ok and ratio >= 1.15
    assert report(
        "06 sign-matrix penalty >= 1.15x", ok,
        f"({elapsed:.0f}s) " + "; ".join(cells),
    )


def test_acceptance_07_sign_sum_tail_bound():
    rng = np.random.default_rng(707)
    failures = 0
    for i in range(50):
        n = int(rng.integers(1, 17))
        y = rng.standard_normal(n)
        for alpha in (0.5, 1.0, 2.0):
            chk = montgomery_smith_check(y, alpha, 100_000, 1000 + i)
            se = math.sqrt(chk.bound * (1.0 - chk.bound) / 100_000.0)
            if chk.empirical > chk.bound + 3.0 * se:
                failures += 1
    flat = montgomery_smith_check(np.ones(10) / math.sqrt(10.0), 1.0,
                                  100_000, 7)
    exact = 176.0 / 1024.0
    se_flat = math.sqrt(exact * (1.0 - exact) / 100_000.0)
    exact_ok = (abs(flat.empirical - exact) <= 5.0 * se_flat
                and abs(flat.bound - 0.6065) <= 1e-4
                and exact <= flat.bound)
    ok = failures == 0 and exact_ok
    assert report(
        "07 sign-sum tail bound", ok,
        f"150 sweeps, {failures} tail violations; flat case "
        f"{flat.empirical:.5f} vs 176/1024 = {exact:.5f}, bound "
        f"{flat.bound:.4f}",
    )


def test_acceptance_08_complexity_and_tail_consistency():
    dist = gaussian()
    m, N, trials, seed = 20, 200, 2000, 0
    r_hat = empirical_R(dist, m, N, 1.0, trials, seed)
    # replay the same trial stream to attach a standard error
    rng = stream(derive_seed(seed, "complexity"), TAG_PROBE)
    vals = np.empty(trials)
    for t in range(trials):
        cols = sample_array(dist, rng, (m, N))
        eps = rng.integers(0, 2, size=N) * 2.0 - 1.0
        vals[t] = np.linalg.norm(cols @ eps / math.sqrt(N)) / math.sqrt(N)
    assert abs(float(vals.mean()) - r_hat) <= 1e-12
    se_r = float(vals.std(ddof=1)) / math.sqrt(trials)
    r_ok = r_hat <= math.sqrt(m / N) + 3.0 * se_r

    q_hat = empirical_Q(gaussian(), 20, 1.0, 10, 20_000, 0)
    p = 0.31731050786291415
    se_q = math.sqrt(p * (1.0 - p) / 20_000.0)
    q_ok = abs(q_hat - p) <= 5.0 * se_q
    ok = r_ok and q_ok
    assert report(
        "08 small-ball consistency", ok,
        f"R {r_hat:.5f} vs sqrt(m/N) {math.sqrt(m / N):.5f} (+3se "
        f"{3 * se_r:.5f}); Q {q_hat:.5f} vs {p:.5f} (+-5se {5 * se_q:.5f})",
    )


def test_acceptance_09_inradius_oracles():
    worst_eye = 0.0
    for m in (1, 2, 3, 4, 5):
        est = inradius_estimate(np.eye(m), seed=m)
        worst_eye = max(worst_eye, abs(est.upper - 1.0 / math.sqrt(m)))
    theta = np.linspace(0.0, 2.0 * math.pi, 100_000)
    grid = float(np.maximum(2.0 * np.abs(np.cos(theta)),
                            np.abs(np.sin(theta))).min())
    diag = inradius_estimate(np.diag([2.0, 1.0]), seed=0)
    diag_dev = abs(diag.upper - grid)
    ok = worst_eye <= 1e-6 and diag_dev <= 1e-4
    assert report(
        "09 inradius oracles", ok,
        f"identity dev {worst_eye:.2e}; diag(2,1) {diag.upper:.6f} vs grid "
        f"{grid:.6f} (dev {diag_dev:.2e})",
    )


CLI_CONFIG = """\
N = 80
s = 2
m_list = 16, 24
distributions = gaussian, student_t(7)
noise = spherical(0.01)
decoders = bp, bpdn(1.0)
trials = 2
master_seed = 12
"""


def test_acceptance_10_cli_byte_identical_reruns(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(CLI_CONFIG)
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        proc = subprocess.run(
            ["noiseblind", "experiment", "--config", str(cfg),
             "--out", str(out)],
            capture_output=True, text=True, timeout=600,
        )
        assert proc.returncode == 0, proc.stderr
        outs.append(out)
    same_files = all(
        (outs[0] / f).read_bytes() == (outs[1] / f).read_bytes()
        for f in ("trials.csv", "summary.csv", "plot.gnuplot")
    )
    probes = [
        subprocess.run(
            ["noiseblind", "qp-estimate", "--dist", "gaussian", "--m", "10",
             "--N", "40", "--directions", "5", "--seed", "2"],
            capture_output=True, text=True, timeout=600,
        )
        for _ in range(2)
    ]
    same_probe = (probes[0].returncode == 0
                  and probes[0].stdout == probes[1].stdout)
    ok = same_files and same_probe
    assert report(
        "10 deterministic CLI output", ok,
        f"experiment files identical: {same_files}; probe stdout "
        f"identical: {same_probe}",
    )
