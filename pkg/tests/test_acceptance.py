"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v``; the criterion lines are shown
in the terminal summary (and printed directly when run with ``-s``).
"""
import csv
import filecmp
import math
import os
import time

import numpy as np
import pytest

from ccl import nnet, theory
from ccl.cli import main
from ccl.datasets import gen_blobs, split
from ccl.schedule import constant_sizes, cyclical_sizes
from ccl.selection import inclusion_frequencies, inclusion_probabilities_bruteforce
from ccl.theory import DistSpec, WeightingSpec
from ccl.trainer import METHODS, TrainConfig, train_ccl, train_vanilla

RESULTS = []


def record(number, title, ok, detail):
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def rel(a, b):
    return abs(a - b) / abs(b)


def test_01_schedule_fidelity():
    got = cyclical_sizes(0.25, 1.0, 0.5, 7)
    want = [0.25, 0.5, 1.0, 0.5, 0.25, 0.5, 1.0]
    record(1, "schedule fidelity", got == want, f"{got}")


def test_02_vanilla_degeneracy():
    t0 = time.time()
    ds = split(gen_blobs(500, 3, noise=1.0, seed=0), 0.1, 0.2, seed=0)
    cfg = TrainConfig(hidden=(64, 64), batch_size=32, lr=1e-3)
    N = ds.train[0].shape[0]
    a = train_ccl(ds, cfg, np.full(N, 1.0 / N), constant_sizes(1.0, 6), 11, record_batches=True)
    b = train_vanilla(ds, cfg, 11, 6, record_batches=True)
    same_batches = len(a.batches) == len(b.batches) and all(
        np.array_equal(x, y) for x, y in zip(a.batches, b.batches)
    )
    same_params = a.model.equals(b.model)
    dt = time.time() - t0
    record(2, "vanilla degeneracy", same_batches and same_params and dt < 30,
           f"{len(a.batches)} batches identical={same_batches}, params bit-identical={same_params}, {dt:.1f}s")


def test_03_theorem1():
    d = DistSpec("normal", 1.0, 0.5)
    uni = theory.mc_error(d, WeightingSpec("uniform"), n=10**6, seed=0, n_boot=0).value
    esg = theory.mc_error(d, WeightingSpec("exponential", 1.0), n=10**6, seed=0, n_boot=0).value
    target_esg = 1.0**2 * 0.5**4 + 0.5**2
    ok = rel(uni, 0.25) < 0.02 and rel(esg, target_esg) < 0.02
    record(3, "normal-loss errors", ok,
           f"uniform {uni:.5f} vs 0.25 ({rel(uni, 0.25):.2%}), exponential {esg:.5f} vs "
           f"{target_esg} ({rel(esg, target_esg):.2%})")


def test_04_theorem2():
    d = DistSpec("half_normal", 0.0, 1.0)
    w = WeightingSpec("exponential", 1.0)
    uni = theory.mc_error(d, WeightingSpec("uniform"), n=10**6, seed=0, n_boot=0).value
    esg = theory.mc_error(d, w, n=10**6, seed=0, n_boot=0).value
    closed = theory.analytic_error(d, w)
    worst_quad = 0.0
    for s in np.linspace(0.1, 5.0, 25):
        for sigma in (0.5, 1.0, 2.0):
            dd, ww = DistSpec("half_normal", 0.0, sigma), WeightingSpec("exponential", s / sigma)
            worst_quad = max(worst_quad, abs(theory.analytic_error(dd, ww) - theory.quadrature_error(dd, ww)))
    rows = theory.region_grid((0.1, 4.0), (0.1, 4.0), 32)
    inside = rows[rows[:, 0] * rows[:, 1] <= 3.0]
    grid_ok = bool(np.all(inside[:, 2] < 0))
    target = 1 - 2 / math.pi
    ok = rel(uni, target) < 0.02 and rel(esg, closed) < 0.02 and worst_quad < 1e-6 and grid_ok
    record(4, "half-normal-loss errors", ok,
           f"uniform {uni:.5f} vs {target:.5f} ({rel(uni, target):.2%}), exponential {esg:.5f} vs "
           f"closed form {closed:.5f} ({rel(esg, closed):.2%}), closed form vs quadrature max "
           f"|diff| {worst_quad:.1e}, {len(inside)} grid points with sigma*lambda <= 3 all negative={grid_ok}")


def test_05_theorem4():
    rep = theory.theorem4_bound_check(sigma_values=(0.5, 1.0, 2.0, 4.0), n=10**6, seeds=range(5), mu=1.0)
    arg_ok = abs(rep.argmax - math.e) < 1e-6 and abs(rep.max_value - 1 / math.e) < 1e-9
    held = sum(r["holds"] for r in rep.rows)
    record(5, "inverse-loss weighting bound", arg_ok and rep.all_hold,
           f"argmax {rep.argmax:.8f}, max {rep.max_value:.8f}, threshold pi*e={rep.threshold:.6f}, "
           f"inverse < uniform in {held}/{len(rep.rows)} (sigma, seed) pairs at location 1")


def test_06_sampler():
    rng = np.random.default_rng(2024)
    worst, fixtures = 0.0, 0
    for N in range(2, 9):
        for k in range(1, min(4, N) + 1):
            scores = rng.uniform(0.05, 1.0, N)
            scores /= scores.sum()
            freq = inclusion_frequencies(scores, k, 200_000, rng)
            exact = inclusion_probabilities_bruteforce(scores, k)
            worst = max(worst, float(np.abs(freq - exact).max()))
            fixtures += 1
    record(6, "sampler inclusion probabilities", worst < 0.01,
           f"{fixtures} fixtures (N <= 8, k <= 4), 200000 trials each, max |freq - exact| = {worst:.4f}")


def test_07_gradients():
    worst, checked = 0.0, 0
    for seed in range(3):
        r = np.random.default_rng(seed)
        dims = [int(r.integers(6, 10)), int(r.integers(12, 21)), int(r.integers(3, 6))]
        model = nnet.init_model(nnet.layer_chain(dims), seed)
        X = r.normal(size=(16, dims[0]))
        y = r.integers(0, dims[-1], 16)
        grads = np.concatenate([g.ravel() for g in nnet.gradients(model, X, y)])
        sizes = np.cumsum([p.size for p in model.params])
        for c in r.choice(grads.size, size=100, replace=False):
            which = int(np.searchsorted(sizes, c, side="right"))
            off = c - (sizes[which - 1] if which else 0)
            vals = []
            for h in (1e-4, -1e-4):
                m = model.copy()
                m.params[which].reshape(-1)[off] += h
                vals.append(nnet.mean_loss(m, X, y))
            fd = (vals[0] - vals[1]) / 2e-4
            err = abs(grads[c] - fd) / max(abs(grads[c]), abs(fd), 1e-6)
            worst = max(worst, err)
            checked += 1
    record(7, "gradient check", worst < 1e-3,
           f"{checked} coordinates (100 per model) over 3 random one-hidden-layer models, max relative error {worst:.2e}")


SPIRALS = """
[dataset]
kind = spirals
n = 2000
noise = 0.2
seed = 0
val_fraction = 0.1
test_fraction = 0.2
split_seed = 0

[training]
hidden = 64,64
batch_size = 16
lr = 0.01
monitor = val_loss
eval_interval = 10

[schedule]
sp = 0.25
ep = 1.0
alpha = 0.5

[experiment]
methods = {methods}
seeds = 0,1,2,3,4
output_dir = {out}
"""


@pytest.fixture(scope="module")
def spirals_bundle(tmp_path_factory):
    root = tmp_path_factory.mktemp("spirals")
    cfg = root / "spirals.ini"
    cfg.write_text(SPIRALS.format(methods=",".join(METHODS), out=root / "run1"))
    t0 = time.time()
    code = main(["train", str(cfg), "--jobs", "5"])
    return root, cfg, code, time.time() - t0


def _read_comparison(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0][1:], {r[0]: r[1:] for r in rows[1:]}


def test_08_end_to_end(spirals_bundle):
    root, _, code, dt = spirals_bundle
    methods, table = _read_comparison(root / "run1" / "comparison.csv")
    mean = dict(zip(methods, map(float, table["mean"])))
    verdicts = dict(zip(methods, table["verdict"]))
    p = dict(zip(methods, table["p"]))
    valid = all(
        verdicts[m] in ("better", "worse", "indistinguishable") and 0.0 <= float(p[m]) <= 1.0
        for m in methods if m != "vanilla"
    )
    traces = len(os.listdir(root / "run1" / "runs"))
    gap = mean["ccl"] - mean["vanilla"]
    ok = code == 0 and tuple(methods) == METHODS and valid and gap >= -0.01 and dt < 600
    record(8, "two-spirals comparison", ok,
           f"CCL {mean['ccl']:.4f} vs vanilla {mean['vanilla']:.4f} (diff {gap:+.4f}, need >= -0.01); "
           f"verdicts {', '.join(f'{m}={verdicts[m]}' for m in methods if m != 'vanilla')}; "
           f"{traces} run files; {dt:.0f}s")


def test_09_theorem3():
    wins, totals = 0, []
    for seed in range(10):
        tr = theory.cyclical_error_simulation(n=10**5, steps=100, seed=seed)
        wins += tr.ccl_total < tr.uniform_total
        totals.append((tr.ccl_total, tr.uniform_total))
    mc = np.mean([t[0] for t in totals])
    mu = np.mean([t[1] for t in totals])
    record(9, "cyclical error simulation", wins >= 9,
           f"cyclical policy below uniform in {wins}/10 seeds (mean cumulative {mc:.3f} vs {mu:.3f})")


def test_10_reproducibility(spirals_bundle):
    root, cfg, code, _ = spirals_bundle
    rerun = root / "spirals_rerun.ini"
    rerun.write_text(cfg.read_text().replace(str(root / "run1"), str(root / "run2")))
    code2 = main(["train", str(rerun), "--jobs", "2"])
    csvs = ["comparison.csv"] + [f"runs/{f}" for f in sorted(os.listdir(root / "run1" / "runs"))]
    same = [filecmp.cmp(root / "run1" / f, root / "run2" / f, shallow=False) for f in csvs]
    record(10, "reproducibility", code == 0 and code2 == 0 and all(same),
           f"{sum(same)}/{len(csvs)} CSV files byte-identical across reruns")
