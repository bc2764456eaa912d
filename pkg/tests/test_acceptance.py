"""Acceptance gate: one pass/fail line per criterion, tolerances pinned here.

The lines are echoed in the pytest terminal summary under
"acceptance criteria". The statistical criteria share one seeded sweep
(200 paired trials, seed 42) built once per session.
"""

import subprocess
import sys
import time

import numpy as np
import pytest
from scipy.stats import binomtest

from ristwoway import verify
from ristwoway.config import profile
from ristwoway.harness import monte_carlo

from .conftest import ACCEPTANCE_LINES

TRIALS = 200
SEED = 42
ALPHA = 0.01
OTHERS = ["uniPowPSG", "initialPSs", "randInitialPSG", "randPSs", "noRIS"]


def record(number, name, ok, detail, seconds=None):
    tail = f" ({seconds:.1f}s)" if seconds is not None else ""
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {name}: {detail}{tail}")
    assert ok, detail


def timed(fn, **kwargs):
    t0 = time.perf_counter()
    ok, detail = fn(**kwargs)
    return ok, detail, time.perf_counter() - t0


def sign_test(better, worse):
    """One-sided paired sign test that ``better`` exceeds ``worse``; ties dropped."""
    diff = np.asarray(better) - np.asarray(worse)
    wins, n = int(np.sum(diff > 0)), int(np.sum(diff != 0))
    p = binomtest(wins, n, 0.5, alternative="greater").pvalue if n else 1.0
    return wins, n, p


@pytest.fixture(scope="module")
def sweep():
    """Per-(scheme, R, B) arrays over the paired trials, plus the runtime of the R sweep."""
    cfg, _, _ = profile("paper")
    t0 = time.perf_counter()
    rows_a = monte_carlo(cfg, ["optPSG"], [(15, None), (30, None), (45, None)], TRIALS, seed=SEED)
    runtime_a = time.perf_counter() - t0
    rows_b = monte_carlo(cfg, ["optPSG"], [(45, 1), (45, 5)], TRIALS, seed=SEED)
    rows_c = monte_carlo(cfg, OTHERS, [(45, None)], TRIALS, seed=SEED)
    out = {}
    for r in sorted(rows_a + rows_b + rows_c, key=lambda r: r.trial):
        out.setdefault((r.scheme, r.R, r.B), []).append(r.min_weighted_sumrate)
    return {k: np.array(v) for k, v in out.items()}, runtime_a


def test_c01_mmse_rate_identity():
    ok, detail, s = timed(verify.mmse_rate_identity, instances=100)
    record(1, "MMSE/rate identity", ok and s < 10, detail + "; runtime < 10 s", s)


def test_c02_gradient_check():
    ok, detail, s = timed(verify.gradient_check, instances=20, directions=5)
    record(2, "gradient check", ok and s < 30, detail + "; runtime < 30 s", s)


def test_c03_dft_equivalence():
    ok, detail, s = timed(verify.dft_equivalence, realizations=100)
    record(3, "DFT/time-domain equivalence", ok, detail, s)


def test_c04_waterfilling():
    ok, detail, s = timed(verify.waterfilling_check, instances=50)
    record(4, "waterfilling", ok, detail, s)


def test_c05_oracle_soundness():
    ok, detail, s = timed(verify.oracle_soundness, trials=200, ratio=0.95)
    record(5, "oracle soundness", ok, detail, s)


def test_c06_gain_grows_with_R(sweep):
    data, runtime = sweep
    means = [data[("optPSG", R, None)].mean() for R in (15, 30, 45)]
    tests = [sign_test(data[("optPSG", hi, None)], data[("optPSG", lo, None)]) for lo, hi in ((15, 30), (30, 45))]
    ok = means[0] < means[1] < means[2] and all(p < ALPHA for _, _, p in tests) and runtime < 600
    detail = (
        f"mean optPSG at R=15/30/45 = {means[0]:.4f}/{means[1]:.4f}/{means[2]:.4f}; "
        + "; ".join(f"{w}/{n} up, p={p:.1e}" for w, n, p in tests)
        + f" (p < {ALPHA}); sweep {runtime:.0f}s (< 600 s)"
    )
    record(6, "trend in R", ok, detail)


def test_c07_codebook_resolution(sweep):
    data, _ = sweep
    cont = data[("optPSG", 45, None)].mean()
    b5 = data[("optPSG", 45, 5)].mean()
    gap = abs(cont - b5) / cont
    b1 = data[("optPSG", 45, 1)]
    nris = data[("noRIS", 45, None)]
    w, n, p = sign_test(b1, nris)
    ok = gap < 0.03 and b1.mean() > nris.mean() and p < ALPHA
    detail = (
        f"(i) B=5 vs continuous gap {100 * gap:.2f}% (< 3%); "
        f"(ii) B=1 mean {b1.mean():.4f} > noRIS {nris.mean():.4f}, {w}/{n} wins, p={p:.1e} (< {ALPHA})"
    )
    record(7, "codebook resolution", ok, detail)


def test_c08_scheme_ordering(sweep):
    data, _ = sweep
    opt = data[("optPSG", 45, None)].mean()
    means = {s: data[(s, 45, None)].mean() for s in OTHERS}
    ok = all(opt >= m for m in means.values())
    detail = f"optPSG {opt:.4f} >= " + ", ".join(f"{s} {m:.4f}" for s, m in means.items())
    record(8, "scheme ordering", ok, detail)


def test_c09_greedy_replay():
    ok, detail, s = timed(verify.greedy_replay_check, instances=100)
    record(9, "greedy allocation replay", ok, detail, s)


def test_c10_cli_determinism(tmp_path):
    args = ["simulate", "--profile", "paper-fig2a", "--R", "15,30", "--B", "inf,2", "--trials", "2", "--seed", "7"]
    outs = []
    for j in range(2):
        path = tmp_path / f"run{j}.csv"
        subprocess.run([sys.executable, "-m", "ristwoway", *args, "--out", str(path)], check=True)
        outs.append(path.read_bytes())
    ok = outs[0] == outs[1] and outs[0].count(b"\n") > 1
    record(10, "determinism", ok, f"two identical CLI runs, {len(outs[0])} bytes each, byte-identical={outs[0] == outs[1]}")
