"""Acceptance suite: one PASS/FAIL line per criterion.

Run ``pytest tests/test_acceptance.py``; the lines are collected into the
"acceptance criteria" section of the terminal summary.
"""
import math
import time
from dataclasses import replace

import numpy as np
import pytest
from scipy.optimize import linprog

from mdgesture import classify, envelope, kernels, pipelines, sparse, subspace, synth
from mdgesture.signal import IQSignal, StftConfig, stft


def record(request, cid: int, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {cid}: {detail}"
    print(line)
    request.config._acceptance_lines.append(line)
    assert ok, line


# ------------------------------------------------------------------ 1

def test_c1_parseval(request):
    rng = np.random.default_rng(1)
    cfg = StftConfig(256, 512, 64)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(256, 4096))
        x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        spec = stft(IQSignal(x, 12800.0), cfg)
        frames = np.lib.stride_tricks.sliding_window_view(x, 256)[::64][: spec.n_frames]
        lhs = spec.power.sum(axis=1)
        rhs = cfg.dft_len * (np.abs(frames) ** 2).sum(axis=1)
        worst = max(worst, float(np.max(np.abs(lhs - rhs) / rhs)))
    dt = time.perf_counter() - t0
    record(request, 1, worst <= 1e-9 and dt < 5.0,
           f"STFT Parseval max rel err {worst:.2e} (tol 1e-9), runtime {dt:.2f} s (limit 5 s)")


# ------------------------------------------------------------------ 2

def test_c2_envelope_fidelity(request):
    # every template scatterer on its own, noiseless, jittered; 10 instances each
    cfg = StftConfig(256, 512, 32)
    scfg = synth.SynthConfig(snr_db=math.inf, jitter=0.3)
    hits, per_signal = [], []
    for tmpl in synth.TEMPLATES:
        for si, scat in enumerate(tmpl.scatterers):
            single = replace(tmpl, scatterers=(replace(scat, amplitude=1.0),))
            for i in range(10):
                sig, truth, _ = synth.synth_gesture(
                    single, scfg, synth.instance_seed(2, 10 * tmpl.class_id + si, i), return_truth=True)
                spec = stft(sig, cfg)
                env = envelope.envelopes(spec)
                f = truth[0][np.round(spec.frame_times_s * sig.sample_rate_hz).astype(int)]
                inner = slice(2, spec.n_frames - 2)
                bins = spec.bin_hz
                ok = np.concatenate([
                    (np.abs(env.env_upper - np.maximum(f, 0)) <= 2 * bins)[inner],
                    (np.abs(env.env_lower - np.minimum(f, 0)) <= 2 * bins)[inner]])
                hits.append(ok)
                per_signal.append(ok.mean())
    frac = float(np.concatenate(hits).mean())
    record(request, 2, frac >= 0.95,
           f"envelope within 2 bins on {frac:.4f} of interior frames (need >= 0.95; "
           f"{len(per_signal)} signals, worst single signal {min(per_signal):.3f}; L=256 K=512 hop=32)")


# ------------------------------------------------------------------ 3

def test_c3_scale_covariance(request):
    ds = synth.synth_dataset(synth.SynthConfig(n_per_class=4, seed=3))
    cfg = StftConfig(256, 512, 32)
    same = True
    for sig in ds.signals:
        spec = stft(sig, cfg)
        a = envelope.envelopes(spec)
        b = envelope.envelopes(spec.scaled(1e3))
        same &= np.array_equal(a.env_upper, b.env_upper) and np.array_equal(a.env_lower, b.env_lower)
    record(request, 3, bool(same),
           f"power x1e3 leaves envelopes bin-identical on {len(ds)} noisy segments")


# ------------------------------------------------------------------ 4

def _naive_l1(a, b):
    return sum(abs(x - y) for x, y in zip(a, b))


def _naive_l2(a, b):
    return math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))


def _naive_mhd(A, B):
    def directed(P, Q):
        return sum(min(math.hypot(p[0] - q[0], p[1] - q[1]) for q in Q) for p in P) / len(P)
    return max(directed(A, B), directed(B, A))


def _transport_emd(p, q):
    """Earth mover's distance by linear programming over the transport plan."""
    n = len(p)
    cost = np.abs(np.arange(n)[:, None] - np.arange(n)[None, :]).ravel().astype(float)
    A_eq, b_eq = [], []
    for i in range(n):
        row = np.zeros((n, n)); row[i, :] = 1
        A_eq.append(row.ravel()); b_eq.append(p[i])
    for j in range(n):
        col = np.zeros((n, n)); col[:, j] = 1
        A_eq.append(col.ravel()); b_eq.append(q[j])
    res = linprog(cost, A_eq=np.array(A_eq), b_eq=np.array(b_eq), bounds=(0, None), method="highs")
    return res.fun


@pytest.mark.parametrize("backend_name", [b.name for b in
                                          [kernels.numpy_kernels, kernels.numba_kernels] if b])
def test_c4_distance_oracles(backend_name, monkeypatch, request):
    monkeypatch.setattr(kernels, "BACKEND", getattr(kernels, f"{backend_name}_kernels"))
    rng = np.random.default_rng(4)
    A = rng.standard_normal((30, 64))
    B = rng.standard_normal((20, 64))
    D1, D2 = kernels.pairwise_l1(A, B), kernels.pairwise_l2(A, B)
    e1 = max(abs(D1[i, j] - _naive_l1(A[i], B[j])) for i in range(30) for j in range(20))
    e2 = max(abs(D2[i, j] - _naive_l2(A[i], B[j])) for i in range(30) for j in range(20))
    sets_a = [rng.random((int(rng.integers(1, 40)), 2)) for _ in range(15)]
    sets_b = [rng.random((int(rng.integers(1, 40)), 2)) for _ in range(15)]
    DM = kernels.pairwise_mhd(sets_a, sets_b)
    em = max(abs(DM[i, j] - _naive_mhd(sets_a[i], sets_b[j])) for i in range(15) for j in range(15))
    ee = 0.0
    for _ in range(200):
        p, q = rng.random(8), rng.random(8)
        p /= p.sum(); q /= q.sum()
        ee = max(ee, abs(classify.dist_emd(p, q, n_halves=1) - _transport_emd(p, q)))
    ok = max(e1, e2, em) <= 1e-12 and ee <= 1e-9
    record(request, 4, ok,
           f"[{backend_name}] L1 {e1:.1e}, L2 {e2:.1e}, MHD {em:.1e} vs loops (tol 1e-12); "
           f"EMD vs LP transport {ee:.1e} on 200 pairs (tol 1e-9)")


# ------------------------------------------------------------------ 5

def _oracle_dist(metric, q, t, fs_half):
    if metric == "L1":
        return _naive_l1(q, t)
    if metric == "L2":
        return _naive_l2(q, t)
    if metric == "EMD":
        h = len(q) // 2
        total = 0.0
        for half in (slice(0, h), slice(h, None)):
            a, b = np.abs(q[half]), np.abs(t[half])
            ca = np.cumsum(a / (a.sum() if a.sum() > 0 else 1.0))
            cb = np.cumsum(b / (b.sum() if b.sum() > 0 else 1.0))
            total += _naive_l1(ca, cb)
        return total
    n = len(q) // 2
    pts = lambda v: [(i / n, v[i] / fs_half) for i in range(n)] + [(i / n, v[n + i] / fs_half) for i in range(n)]
    return _naive_mhd(pts(q), pts(t))


def _oracle_knn(metric, q, X, y, k, fs_half):
    d = [_oracle_dist(metric, q, X[i], fs_half) for i in range(len(X))]
    tol = classify.TIE_RTOL * max(abs(v) for v in d)
    # rank = number of strictly smaller tie groups, found by chaining sorted gaps
    by_value = sorted(range(len(X)), key=lambda i: d[i])
    group, g = {}, 0
    for pos, i in enumerate(by_value):
        if pos and d[i] - d[by_value[pos - 1]] > tol:
            g += 1
        group[i] = g
    nearest = sorted(range(len(X)), key=lambda i: (group[i], i))[:k]
    votes = {}
    for i in nearest:
        c, s = votes.get(y[i], (0, 0.0))
        votes[y[i]] = (c + 1, s + d[i])
    top = max(c for c, _ in votes.values())
    contenders = [lab for lab, (c, _) in votes.items() if c == top]
    best = min(votes[lab][1] for lab in contenders)
    return min(lab for lab in contenders if votes[lab][1] <= best + k * tol)


@pytest.mark.parametrize("backend_name", [b.name for b in
                                          [kernels.numpy_kernels, kernels.numba_kernels] if b])
def test_c5_knn_equivalence(backend_name, monkeypatch, request):
    monkeypatch.setattr(kernels, "BACKEND", getattr(kernels, f"{backend_name}_kernels"))
    rng = np.random.default_rng(5)
    fs_half = 6400.0
    # small integer grid values make exact distance ties common; duplicated
    # rows with different labels force ties for every metric
    base = rng.integers(0, 4, (30, 6)).astype(float) * 800.0
    X = np.vstack([base, base[:10]])
    y = np.concatenate([rng.integers(0, 4, 30), rng.integers(0, 4, 10)])
    Q = rng.integers(0, 4, (100, 6)).astype(float) * 800.0
    mism, ties = 0, 0
    for metric in classify.METRICS:
        for qi, q in enumerate(Q):
            k = (1, 3, 4, 5)[qi % 4]
            cfg = classify.KnnConfig(k, metric, fs_half)
            got = classify.knn_classify(X, y, q, cfg)
            want = _oracle_knn(metric, q, X, y, k, fs_half)
            mism += int(got != want)
            d = classify.pairwise_distances(q[None], X, metric, freq_scale_hz=fs_half)[0]
            ties += int(np.unique(d).size < d.size)
    record(request, 5, mism == 0,
           f"[{backend_name}] kNN vs exhaustive scan: {mism} mismatches over 100 queries x 4 metrics "
           f"(k in 1,3,4,5; {ties} of 400 queries had tied distances)")


# ------------------------------------------------------------------ 6

def _orthonormal(rng, n, d):
    q, _ = np.linalg.qr(rng.standard_normal((n, d)))
    return q


def _model(basis):
    return subspace.SubspaceModel(basis, np.zeros(basis.shape[0]), np.ones(basis.shape[1]))


def test_c6_canonical_identities(request):
    rng = np.random.default_rng(6)
    e_same = e_orth = e_angle = 0.0
    for _ in range(50):
        n, d = int(rng.integers(20, 200)), int(rng.integers(1, 8))
        Q = _orthonormal(rng, n, 2 * d + 1)
        A = Q[:, :d]
        mix = _orthonormal(rng, d, d)
        e_same = max(e_same, np.max(np.abs(subspace.canonical_coeffs(_model(A), _model(A @ mix)).lambdas - 1)))
        e_orth = max(e_orth, np.max(np.abs(subspace.canonical_coeffs(_model(A), _model(Q[:, d:2 * d])).lambdas)))
        # planted principal angles, the smallest one is theta
        theta = rng.uniform(0.05, 1.2)
        angles = np.concatenate([[theta], theta + rng.uniform(0.05, 0.3, d - 1)])
        B = A * np.cos(angles) + Q[:, d:2 * d] * np.sin(angles)
        lam = subspace.canonical_coeffs(_model(A @ _orthonormal(rng, d, d)), _model(B @ mix)).lambdas
        e_angle = max(e_angle, abs(lam[0] - math.cos(theta)))
    ok = e_same <= 1e-9 and e_orth <= 1e-9 and e_angle <= 1e-9
    record(request, 6, ok,
           f"identical {e_same:.1e}, orthogonal {e_orth:.1e}, planted angle {e_angle:.1e} "
           f"over 50 constructions (tol 1e-9)")


# ------------------------------------------------------------------ 7

# published coefficient matrix, upper triangle row by row (gestures a..o)
TABLE_I = """
a 0.79 0.83 0.91 0.70 0.75 0.79 0.84 0.69 0.66 0.78 0.77 0.76 0.77 0.81
b 0.92 0.80 0.70 0.68 0.82 0.82 0.65 0.61 0.78 0.82 0.83 0.73 0.60
c 0.76 0.64 0.59 0.85 0.88 0.72 0.65 0.80 0.80 0.82 0.76 0.69
d 0.61 0.68 0.81 0.75 0.57 0.55 0.78 0.67 0.60 0.63 0.64
e 0.86 0.70 0.75 0.59 0.66 0.56 0.72 0.66 0.72 0.71
f 0.78 0.83 0.70 0.70 0.67 0.73 0.70 0.78 0.79
g 0.85 0.67 0.67 0.78 0.66 0.71 0.74 0.73
h 0.55 0.60 0.72 0.67 0.61 0.71 0.71
i 0.87 0.75 0.61 0.67 0.76 0.74
j 0.68 0.61 0.68 0.83 0.73
k 0.94 0.94 0.83 0.76
l 0.93 0.73 0.66
m 0.77 0.63
n 0.82
"""


def table_i_matrix():
    names = "abcdefghijklmno"
    S = np.eye(15)
    for line in TABLE_I.strip().splitlines():
        head, *vals = line.split()
        i = names.index(head)
        for off, v in enumerate(vals, 1):
            S[i, i + off] = S[i + off, i] = float(v)
    return S


def test_c7_table_grouping(request):
    names = "abcdefghijklmno"
    groups = subspace.group_classes(table_i_matrix(), 0.85)
    got = ["".join(names[i] for i in g) for g in groups]
    want = ["abcd", "efgh", "ij", "klm", "no"]
    record(request, 7, got == want,
           f"tau=0.85 grouping {got} vs expected {want}")


# ------------------------------------------------------------------ 8 and 10

BENCH_SEED = 42


def _benchmark(synth_seed, eval_seed):
    t0 = time.perf_counter()
    ds = synth.synth_dataset(synth.SynthConfig(seed=synth_seed))
    reports = pipelines.run_benchmark(ds.signals, ds.labels, n_trials=100, seed=eval_seed)
    return reports, time.perf_counter() - t0


@pytest.fixture(scope="module")
def bench42():
    return _benchmark(BENCH_SEED, BENCH_SEED)


@pytest.mark.slow
def test_c8_end_to_end(bench42, request):
    reports, dt = bench42
    acc = {m: r.mean_accuracy for m, r in reports.items()}
    order = acc["envelope"] > acc["pca"] > max(acc["empirical"], acc["sparse"])
    ok = acc["envelope"] >= 0.90 and order and dt < 600
    desc = ", ".join(f"{m} {a:.4f}" for m, a in acc.items())
    record(request, 8, ok,
           f"accuracy {desc}; envelope >= 0.90 and envelope > pca > empirical, sparse: "
           f"{acc['envelope'] >= 0.90 and order}; runtime {dt:.0f} s (limit 600 s)")


@pytest.mark.slow
def test_c10_determinism(bench42, request):
    first, _ = bench42
    again, _ = _benchmark(BENCH_SEED, BENCH_SEED)
    identical = all(first[m].same_as(again[m]) for m in first)
    # the Monte Carlo seed changes; the synthetic data stay those of seed 42
    other, _ = _benchmark(BENCH_SEED, BENCH_SEED + 1)
    shift = {m: abs(other[m].mean_accuracy - first[m].mean_accuracy) for m in first}
    # for information only: regenerating the data as well adds sampling noise
    regen, _ = _benchmark(BENCH_SEED + 1, BENCH_SEED + 1)
    regen_shift = {m: abs(regen[m].mean_accuracy - first[m].mean_accuracy) for m in first}
    ok = identical and max(shift.values()) <= 0.03
    fmt = lambda d: ", ".join(f"{m} {v:.4f}" for m, v in d.items())
    record(request, 10, ok,
           f"same seed bit-identical reports: {identical}; eval seed {BENCH_SEED}->{BENCH_SEED + 1} "
           f"accuracy shift {fmt(shift)} (tol 0.03 each); with regenerated data: {fmt(regen_shift)}")


# ------------------------------------------------------------------ 9

def test_c9_omp_recovery(request):
    rng = np.random.default_rng(9)
    fs, n = 12800.0, 12800
    dic = sparse.build_dictionary(n, fs)
    exact = monotone = 0
    for _ in range(100):
        idx = rng.choice(len(dic), 2, replace=False)
        coef = rng.uniform(0.5, 1.0, 2) * np.exp(2j * np.pi * rng.random(2))
        x = dic.atoms(idx) @ coef
        traj = sparse.omp(IQSignal(x, fs), dic, P=2)
        exact += int(set(traj.atom_indices) == set(idx.tolist()))
        monotone += int(np.all(np.diff(traj.residual_norms) <= 1e-12))
    record(request, 9, exact == 100 and monotone == 100,
           f"planted 2-atom support recovered {exact}/100, residual non-increasing {monotone}/100 "
           f"(|c| in [0.5, 1], random phases, {len(dic)}-atom grid)")

