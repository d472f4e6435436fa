"""Acceptance criteria, one test each; every test prints a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v`` for the summary block at the end;
criterion 10 is marked ``slow`` (about a minute and 3 GB for the dense baseline).
Criterion 6 needs the published feature matrices and is skipped unless
``MERAMSC_YALE_DIR`` / ``MERAMSC_MSRC_DIR`` point at dataset directories.
"""
import gc
import os
import time
import tracemalloc

import numpy as np
import pytest
from threadpoolctl import threadpool_limits

from conftest import ACCEPTANCE_LINES
from meramsc import anchor, io, mera, metrics, msc, synth

LEGS_C1 = (4, 5, 5, 4, 3)


def _record(criterion, ok, detail):
    line = f"criterion {criterion:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def _orth(net):
    return max(net.orthogonality_errors())


def _rel(rec, y):
    return float(np.linalg.norm(rec - y) / np.linalg.norm(y))


def _replay(y, net, sweeps):
    """Block updates in the order ``approximate`` uses; worst orthogonality seen after any update."""
    worst, errors = _orth(net), []
    for _ in range(sweeps):
        for step in (mera.update_disentangler, lambda t, n: mera.update_isometry(t, n, 1),
                     lambda t, n: mera.update_isometry(t, n, 2), mera.update_top_core):
            net = step(y, net)
            worst = max(worst, _orth(net))
        errors.append(mera.fit_error(y, net))
    return worst, errors


def _c1_instances():
    for seed in range(20):
        rank = 2 if seed % 2 == 0 else 4
        net = mera.init_network(LEGS_C1, rank, seed=seed)
        yield seed, rank, net, mera.reconstruct(net)


def _c2_instances():
    rng = np.random.default_rng(2)
    for i in range(50):
        legs = tuple(int(d) for d in rng.integers(2, 5, size=5))
        rank = int(rng.integers(1, min(legs[0] * legs[1], legs[2] * legs[3] * legs[4]) + 1))
        yield i, legs, rank, rng.standard_normal(legs)


def _c4_data(noise=0.0, seed=0):
    return synth.synth_multiview(3, 20, 3, [30, 30, 30], noise, seed=seed)


C4_CFG = dict(rank=16, lam=0.01)


def test_criterion_01_mera_exactness():
    t0 = time.perf_counter()
    warm_worst, cold_hits, cold_errs = 0.0, 0, []
    for seed, rank, net, y in _c1_instances():
        _, rec, _ = mera.approximate(y, mera.MeraConfig(rank=rank, sweeps=10, init="warm", warm_start=net))
        warm_worst = max(warm_worst, _rel(rec, y))
        _, rec, _ = mera.approximate(y, mera.MeraConfig(rank=rank, sweeps=10, seed=1000 + seed))
        cold_errs.append(_rel(rec, y))
        cold_hits += cold_errs[-1] <= 1e-6
    elapsed = time.perf_counter() - t0
    ok = warm_worst <= 1e-10 and cold_hits >= 18 and elapsed < 5
    _record(1, ok, f"warm max rel err {warm_worst:.1e} (<= 1e-10); cold {cold_hits}/20 <= 1e-6 (need 18), "
                   f"median cold rel err {np.median(cold_errs):.1e}; {elapsed:.2f}s (< 5s)")


def test_criterion_02_als_monotone():
    t0 = time.perf_counter()
    worst_rise = -np.inf
    for i, legs, rank, y in _c2_instances():
        _, _, trace = mera.approximate(y, mera.MeraConfig(rank=rank, sweeps=10, seed=i))
        worst_rise = max(worst_rise, float(np.max(np.diff(trace.errors))))
    elapsed = time.perf_counter() - t0
    ok = worst_rise <= 1e-12 and elapsed < 10
    _record(2, ok, f"largest sweep-to-sweep increase {worst_rise:.1e} (<= 1e-12) over 50 tensors; {elapsed:.2f}s (< 10s)")


def test_criterion_03_orthogonality():
    worst, path_gap = 0.0, 0.0
    for seed, rank, net, y in _c1_instances():
        w, _ = _replay(y, net, 10)
        worst = max(worst, w)
        start = mera.init_network(LEGS_C1, rank, seed=1000 + seed)
        w, errs = _replay(y, start, 10)
        worst = max(worst, w)
        _, _, trace = mera.approximate(y, mera.MeraConfig(rank=rank, sweeps=10, seed=1000 + seed))
        path_gap = max(path_gap, float(np.max(np.abs(np.array(errs) - trace.errors))))
    for i, legs, rank, y in _c2_instances():
        w, errs = _replay(y, mera.init_network(legs, rank, seed=i), 10)
        worst = max(worst, w)
        _, _, trace = mera.approximate(y, mera.MeraConfig(rank=rank, sweeps=10, seed=i))
        path_gap = max(path_gap, float(np.max(np.abs(np.array(errs) - trace.errors))))
    # the replay must follow the same iterates as approximate
    ok = worst <= 1e-10 and path_gap <= 1e-8
    _record(3, ok, f"max ||U^T U - I||, ||W^T W - I|| after any update {worst:.1e} (<= 1e-10); "
                   f"replay vs approximate trace gap {path_gap:.1e}")


def test_criterion_04_admm_feasibility():
    t0 = time.perf_counter()
    out = msc.solve(_c4_data(), msc.MscConfig(**C4_CFG))
    elapsed = time.perf_counter() - t0
    re = [r for r, _ in out.residual_trace]
    me = [m for _, m in out.residual_trace]
    drop = np.log10(re[0] / re[min(9, len(re) - 1)])
    ok = out.converged and out.iterations <= 50 and re[-1] <= 1e-6 and me[-1] <= 1e-6 and drop >= 2 and elapsed < 30
    _record(4, ok, f"converged={out.converged} in {out.iterations} iters, RE {re[-1]:.1e}, ME {me[-1]:.1e}; "
                   f"RE drop over first 10 iters {drop:.1f} orders (>= 2); {elapsed:.1f}s (< 30s)")


def test_criterion_05_end_to_end():
    t0 = time.perf_counter()
    accs, nmis = [], []
    for seed in range(5):
        ds = _c4_data(0.01, seed)
        out = msc.solve(ds, msc.MscConfig(seed=seed, **C4_CFG))
        rep = metrics.evaluate(ds.labels, out.labels)
        accs.append(rep.acc)
        nmis.append(rep.nmi)
    elapsed = time.perf_counter() - t0
    ok = min(accs) >= 0.95 and min(nmis) >= 0.90 and elapsed < 120
    _record(5, ok, f"ACC {np.round(accs, 4).tolist()} (>= 0.95), NMI {np.round(nmis, 4).tolist()} (>= 0.90); "
                   f"{elapsed:.1f}s (< 120s)")


@pytest.mark.parametrize("name,env,rank,split", [
    ("Yale", "MERAMSC_YALE_DIR", 6, (11, 15)),
    ("MSRC-v5", "MERAMSC_MSRC_DIR", 2, (15, 14)),
])
def test_criterion_06_published_datasets(name, env, rank, split):
    path = os.environ.get(env)
    if not path:
        line = f"criterion  6: WAIVED  {name} features not available (set {env} to a dataset directory)"
        print(line)
        ACCEPTANCE_LINES.append(line)
        pytest.skip(f"{name} feature matrices not available")
    ds = io.load_dataset(path)
    t0 = time.perf_counter()
    out = msc.solve(ds, msc.MscConfig(rank=rank, lam=0.001, split_override=split))
    elapsed = time.perf_counter() - t0
    rep = metrics.evaluate(ds.labels, out.labels).as_dict()
    ok = all(abs(v - 1.0) <= 0.02 for v in rep.values()) and elapsed < 600
    _record(6, ok, f"{name}: {', '.join(f'{k} {v:.4f}' for k, v in rep.items())} (all 1 +- 0.02); {elapsed:.0f}s")


def test_criterion_07_parameter_sweep():
    ds = _c4_data(0.01, 0)
    grid = {}
    for rank in (4, 6, 8):
        for lam in (0.001, 0.01, 0.1):
            out = msc.solve(ds, msc.MscConfig(rank=rank, lam=lam))
            grid[rank, lam] = metrics.acc(ds.labels, out.labels)
    spread = max(grid.values()) - min(grid.values())
    _record(7, spread < 0.05, f"ACC range {min(grid.values()):.4f}..{max(grid.values()):.4f}, spread {spread:.4f} (< 0.05)")


def test_criterion_08_metric_oracles():
    # the oracles live in test_metrics; rerun them here on their own stream
    from test_metrics import acc_oracle, ari_oracle, nmi_oracle, pair_oracle

    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(2, 201))
        t = rng.integers(0, rng.integers(1, 7), size=n)
        p = rng.integers(0, rng.integers(1, 7), size=n)
        tl, pl = t.tolist(), p.tolist()
        diffs = np.abs(np.r_[metrics.pair_metrics(t, p), metrics.nmi(t, p), metrics.ari(t, p)]
                       - np.r_[pair_oracle(tl, pl), nmi_oracle(tl, pl), ari_oracle(tl, pl)])
        worst = max(worst, float(diffs.max()))
        worst = max(worst, abs(metrics.acc(t, p) - acc_oracle(tl, pl)))
    _record(8, worst <= 1e-12, f"max deviation from definition oracles {worst:.1e} (<= 1e-12) on 200 pairs, ACC by k! enumeration")


def test_criterion_09_complexity_scaling():
    per_iter = {}
    with threadpool_limits(1):
        for n in (200, 400):
            ds = synth.synth_multiview(4, n // 4, 3, [30, 30, 30], 0.01, seed=0)
            cfg = msc.MscConfig(rank=8, max_iters=6, kmeans_restarts=1, epsilon=1e-300)
            # median of the steady iterations (the first carries one-off setup),
            # best of three runs to shed scheduler noise
            per_iter[n] = min(float(np.median(msc.solve(ds, cfg).iter_times[1:])) for _ in range(3))
    ratio = per_iter[400] / per_iter[200]
    _record(9, 5 <= ratio <= 12, f"per-iteration {per_iter[200]:.3f}s -> {per_iter[400]:.3f}s, ratio {ratio:.2f} (in [5, 12])")


@pytest.mark.slow
def test_criterion_10_anchor_scalability():
    n = 4000
    ds = synth.synth_planted(4, n // 4, [30, 30, 30], seed=0)
    cfg = anchor.AnchorConfig(num_anchors=10, rank=2)
    t0 = time.perf_counter()
    out = anchor.solve_anchor(ds, cfg)
    t_anchor = time.perf_counter() - t0
    acc = metrics.acc(ds.labels, out.labels)

    tracemalloc.start()
    try:
        anchor.solve_anchor(ds, cfg)
        _, peak = tracemalloc.get_traced_memory()
    finally:
        tracemalloc.stop()

    # one ADMM iteration with one MERA sweep and one k-means restart costs
    # less than any full run of solve, so it bounds the dense time from below
    gc.collect()
    t0 = time.perf_counter()
    msc.solve(ds, msc.MscConfig(rank=2, max_iters=1, mera_sweeps=1, kmeans_restarts=1))
    t_dense = time.perf_counter() - t0
    speedup = t_dense / t_anchor
    ok = acc >= 0.90 and speedup >= 5 and peak < n * n * 8 and t_anchor + t_dense < 300
    _record(10, ok, f"ACC {acc:.4f} (>= 0.90); anchor {t_anchor:.1f}s vs dense lower bound {t_dense:.1f}s, "
                    f"speedup >= {speedup:.1f}x (>= 5); traced peak {peak / 1e6:.0f} MB vs N^2 doubles {n * n * 8 / 1e6:.0f} MB")


def test_criterion_11_determinism():
    ds = _c4_data(0.01, 0)
    a = msc.solve(ds, msc.MscConfig(seed=0, **C4_CFG))
    b = msc.solve(ds, msc.MscConfig(seed=0, **C4_CFG))
    same_msc = (np.array_equal(a.labels, b.labels) and a.residual_trace == b.residual_trace
                and metrics.evaluate(ds.labels, a.labels) == metrics.evaluate(ds.labels, b.labels))

    pds = synth.synth_planted(4, 250, [30, 30, 30], seed=0)
    cfg = anchor.AnchorConfig(num_anchors=10, rank=2, seed=0)
    a, b = anchor.solve_anchor(pds, cfg), anchor.solve_anchor(pds, cfg)
    same_anchor = np.array_equal(a.labels, b.labels) and a.residual_trace == b.residual_trace

    y = np.random.default_rng(11).standard_normal(LEGS_C1)
    r1 = mera.approximate(y, mera.MeraConfig(rank=3, seed=4))
    r2 = mera.approximate(y, mera.MeraConfig(rank=3, seed=4))
    same_mera = np.array_equal(r1[1], r2[1]) and r1[2].errors == r2[2].errors
    ok = same_msc and same_anchor and same_mera
    _record(11, ok, f"bit-identical reruns: solve {same_msc}, solve_anchor {same_anchor}, approximate {same_mera}")
