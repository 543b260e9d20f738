"""Distance metrics, nearest-neighbour and linear SVM classifiers, k-means,
and the Monte Carlo train/test harness."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import numpy as np

from mdgesture import kernels
from mdgesture.envelope import feature_point_set
from mdgesture.errors import (
    ClassTooSmall,
    EmptySet,
    EmptyTraining,
    FormatError,
    LengthMismatch,
    SingleClass,
    TooFewPoints,
)
from mdgesture.fileio import write_keyvalue
from mdgesture.signal import DEFAULT_SAMPLE_RATE_HZ

METRICS = ("L1", "L2", "EMD", "MHD")
FEATURE_KINDS = ("envelope", "empirical", "image", "trajectory")
# relative slack under which two kNN distances count as tied
TIE_RTOL = 1e-12


# ---------------------------------------------------------------- distances

def _pair(a, b):
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.size != b.size:
        raise LengthMismatch(f"vector lengths differ: {a.size} vs {b.size}")
    return a, b


def dist_l1(a, b) -> float:
    a, b = _pair(a, b)
    return float(np.abs(a - b).sum())


def dist_l2(a, b) -> float:
    a, b = _pair(a, b)
    return float(np.sqrt(((a - b) ** 2).sum()))


def emd_cdf(vectors, n_halves: int = 2) -> np.ndarray:
    """Per-half cumulative distributions of unit-normalized magnitudes.

    An all-zero half keeps an all-zero CDF, so two empty halves are at
    distance 0 from each other.
    """
    V = np.abs(np.atleast_2d(np.asarray(vectors, dtype=np.float64)))
    n, p = V.shape
    if p % n_halves:
        raise LengthMismatch(f"length {p} does not split into {n_halves} halves")
    h = p // n_halves
    out = np.zeros_like(V)
    for j in range(n_halves):
        block = V[:, j * h:(j + 1) * h]
        mass = block.sum(axis=1, keepdims=True)
        safe = np.where(mass > 0, mass, 1.0)
        out[:, j * h:(j + 1) * h] = np.cumsum(block / safe, axis=1)
    return out


def dist_emd(a, b, n_halves: int = 2) -> float:
    a, b = _pair(a, b)
    return float(np.abs(emd_cdf(a, n_halves) - emd_cdf(b, n_halves)).sum())


def dist_mhd(A, B) -> float:
    A = np.asarray(A, dtype=np.float64).reshape(-1, 2)
    B = np.asarray(B, dtype=np.float64).reshape(-1, 2)
    if len(A) == 0 or len(B) == 0:
        raise EmptySet("modified Hausdorff distance needs non-empty point sets")
    return float(kernels.pairwise_mhd([A], [B])[0, 0])


@dataclass(frozen=True)
class KnnConfig:
    k: int = 1
    metric: str = "L1"
    # frequency scale for turning envelope vectors into (t, f) point sets
    mhd_freq_scale_hz: float = DEFAULT_SAMPLE_RATE_HZ / 2

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}; choose from {METRICS}")


def as_point_sets(vectors, freq_scale_hz: float, kind: str = "envelope") -> list[np.ndarray]:
    V = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    if kind == "trajectory":
        return [trajectory_points(v) for v in V]
    return [feature_point_set(v, 2 * freq_scale_hz) for v in V]


def trajectory_points(row) -> np.ndarray:
    """(t, f) pairs from an interleaved ``t1,f1,a1,...`` row (already normalized)."""
    r = np.asarray(row, dtype=np.float64).reshape(-1, 3)
    return r[:, :2].copy()


def pairwise_distances(Q, T, metric: str, *, freq_scale_hz: float = DEFAULT_SAMPLE_RATE_HZ / 2,
                       kind: str = "envelope") -> np.ndarray:
    Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
    T = np.atleast_2d(np.asarray(T, dtype=np.float64))
    if Q.shape[1] != T.shape[1]:
        raise LengthMismatch(f"feature lengths differ: {Q.shape[1]} vs {T.shape[1]}")
    if metric == "L1":
        return kernels.pairwise_l1(Q, T)
    if metric == "L2":
        return kernels.pairwise_l2(Q, T)
    if metric == "EMD":
        return kernels.pairwise_l1(emd_cdf(Q), emd_cdf(T))
    if metric == "MHD":
        return kernels.pairwise_mhd(as_point_sets(Q, freq_scale_hz, kind),
                                    as_point_sets(T, freq_scale_hz, kind))
    raise ValueError(f"unknown metric {metric!r}")


def knn_vote(dist_row: np.ndarray, labels: np.ndarray, k: int):
    """Majority label of the ``k`` nearest training samples.

    Distances closer than ``TIE_RTOL`` times the row's largest distance
    count as equal, so rounding noise cannot break a genuine tie. Equal
    distances keep training order; a vote tie goes to the label with the
    smaller summed neighbour distance, then to the smaller label.
    """
    dist_row = np.asarray(dist_row, dtype=np.float64)
    if dist_row.size == 0:
        raise EmptyTraining("no training samples")
    if k > dist_row.size:
        raise ValueError(f"k={k} exceeds training size {dist_row.size}")
    tol = TIE_RTOL * max(float(np.abs(dist_row).max()), np.finfo(float).tiny)
    order = np.argsort(dist_row, kind="stable")
    group = np.concatenate([[0], np.cumsum(np.diff(dist_row[order]) > tol)])
    nearest = order[np.lexsort((order, group))][:k]
    if k == 1:
        return labels[nearest[0]]
    tally: dict = {}
    for idx in nearest:
        cnt, tot = tally.get(labels[idx], (0, 0.0))
        tally[labels[idx]] = (cnt + 1, tot + dist_row[idx])
    top = max(c for c, _ in tally.values())
    best = min(t for c, t in tally.values() if c == top)
    return min(lab for lab, (c, t) in tally.items() if c == top and t <= best + k * tol)


def knn_classify(train_X, train_y, query, cfg: KnnConfig = KnnConfig(), kind: str = "envelope"):
    train_X = np.atleast_2d(np.asarray(train_X, dtype=np.float64))
    if train_X.shape[0] == 0 or train_X.size == 0:
        raise EmptyTraining("no training samples")
    d = pairwise_distances(np.asarray(query)[None, :], train_X, cfg.metric,
                           freq_scale_hz=cfg.mhd_freq_scale_hz, kind=kind)[0]
    return knn_vote(d, np.asarray(train_y), cfg.k)


def knn_predict(train_X, train_y, queries, cfg: KnnConfig = KnnConfig(), kind: str = "envelope"):
    D = pairwise_distances(queries, train_X, cfg.metric, freq_scale_hz=cfg.mhd_freq_scale_hz, kind=kind)
    y = np.asarray(train_y)
    return np.array([knn_vote(row, y, cfg.k) for row in D])


# ---------------------------------------------------------------- linear SVM

@dataclass(frozen=True)
class SvmModel:
    classes: np.ndarray
    weights: np.ndarray  # (n_classes, n_features + 1), last column is the bias
    mean: np.ndarray
    scale: np.ndarray
    degenerate: bool = False

    def scores(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        Z = (X - self.mean) / self.scale
        return np.hstack([Z, np.ones((Z.shape[0], 1))]) @ self.weights.T


def svm_train(X, y, epochs: int = 200, lam: float = 1e-3, seed: int = 0) -> SvmModel:
    """One-vs-rest linear SVM trained by Pegasos hinge-loss subgradient steps.

    Features are standardized with the training statistics, and a constant
    column plays the role of the bias. Every class sees the same seeded
    visiting order, so the model is a pure function of its inputs.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y)
    classes = np.unique(y)
    if classes.size < 2:
        raise SingleClass("SVM training needs at least two classes")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    degenerate = bool(np.all(std == 0))
    scale = np.where(std > 0, std, 1.0)
    Z = np.hstack([(X - mean) / scale, np.ones((X.shape[0], 1))])
    if degenerate:
        return SvmModel(classes, np.zeros((classes.size, Z.shape[1])), mean, scale, True)
    Y = np.where(y[None, :] == classes[:, None], 1.0, -1.0)
    rng = np.random.default_rng(seed)
    order = np.concatenate([rng.permutation(X.shape[0]) for _ in range(epochs)]).astype(np.int64)
    W = kernels.pegasos(Z, Y, order, float(lam))
    return SvmModel(classes, W, mean, scale, False)


def svm_predict(model: SvmModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if model.degenerate:
        return np.full(X.shape[0], model.classes[0])
    return model.classes[np.argmax(model.scores(X), axis=1)]


# ---------------------------------------------------------------- k-means

@dataclass(frozen=True)
class KMeansResult:
    centroids: np.ndarray
    labels: np.ndarray
    objective_trace: list = field(default_factory=list)
    n_iter: int = 0


def kmeans_pp_init(points: np.ndarray, K: int, rng) -> np.ndarray:
    n = len(points)
    chosen = [int(rng.integers(n))]
    d2 = ((points - points[chosen[0]]) ** 2).sum(axis=1)
    for _ in range(1, K):
        total = d2.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=d2 / total))
        else:
            # every remaining point duplicates a centre already picked
            nxt = next(i for i in range(n) if i not in chosen)
        chosen.append(nxt)
        d2 = np.minimum(d2, ((points - points[nxt]) ** 2).sum(axis=1))
    return points[chosen].copy()


def kmeans(points, K: int, seed: int = 0, max_iter: int = 100) -> KMeansResult:
    """k-means++ seeding followed by Lloyd iterations.

    Stops when assignments stop changing or after ``max_iter`` rounds. An
    empty cluster is moved onto the point farthest from its centroid.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if K < 1 or len(pts) < K:
        raise TooFewPoints(f"{len(pts)} points cannot form {K} clusters")
    rng = np.random.default_rng(seed)
    centroids = kmeans_pp_init(pts, K, rng)
    labels, d2 = kernels.assign(pts, centroids)
    trace = [float(d2.sum())]
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        for c in range(K):
            members = labels == c
            if members.any():
                centroids[c] = pts[members].mean(axis=0)
            else:
                far = int(np.argmax(d2))
                centroids[c] = pts[far]
                d2[far] = 0.0
        new_labels, d2 = kernels.assign(pts, centroids)
        trace.append(float(d2.sum()))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return KMeansResult(centroids, labels, trace, n_iter)


# ---------------------------------------------------------------- datasets

@dataclass(frozen=True)
class LabeledDataset:
    features: np.ndarray
    labels: np.ndarray
    source_ids: tuple = ()
    feature_kind: str = "envelope"
    columns: tuple = ()

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.features, dtype=np.float64))
        y = np.asarray(self.labels)
        if X.shape[0] != y.size:
            raise LengthMismatch("one label per feature row required")
        if self.feature_kind not in FEATURE_KINDS:
            raise ValueError(f"unknown feature kind {self.feature_kind!r}")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        ids = tuple(self.source_ids) or tuple(str(i) for i in range(y.size))
        object.__setattr__(self, "source_ids", ids)

    def __len__(self):
        return self.labels.size

    @property
    def classes(self) -> np.ndarray:
        return np.unique(self.labels)


def envelope_columns(n_out: int) -> list[str]:
    return [f"eu_{i}" for i in range(n_out)] + [f"el_{i}" for i in range(n_out)]


def image_columns(n_pixels: int) -> list[str]:
    return [f"px_{i}" for i in range(n_pixels)]


def trajectory_columns(P: int) -> list[str]:
    return [f"{c}{i}" for i in range(1, P + 1) for c in ("t", "f", "a")]


EMPIRICAL_COLUMNS = ["z_T", "z_R", "z_Bw", "T_s", "R", "Bw_hz", "ts_s", "te_s", "fp_hz", "fn_hz"]
EMPIRICAL_FEATURES = ["T_s", "R", "Bw_hz"]


def infer_kind(columns) -> str:
    cols = list(columns)
    if cols and cols[0] == "eu_0":
        return "envelope"
    if cols and cols[0] == "px_0":
        return "image"
    if cols[:3] == ["t1", "f1", "a1"]:
        return "trajectory"
    if set(EMPIRICAL_FEATURES) <= set(cols):
        return "empirical"
    raise FormatError(f"cannot tell the feature kind from columns {cols[:4]}...")


def _parse_label(text: str):
    try:
        return int(text)
    except ValueError:
        return text


def write_dataset(path, labels, source_ids, features, columns) -> None:
    features = np.atleast_2d(np.asarray(features, dtype=np.float64))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["label", "source_id", *columns])
        for lab, sid, row in zip(labels, source_ids, features):
            w.writerow([lab, sid, *(f"{v:.10g}" for v in row)])


def read_dataset(path) -> LabeledDataset:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:2] != ["label", "source_id"]:
            raise FormatError(f"{path}: header must start with 'label,source_id'")
        columns = header[2:]
        kind = infer_kind(columns)
        labels, ids, rows = [], [], []
        for lineno, row in enumerate(reader, 2):
            if not row:
                continue
            if len(row) != len(header):
                raise FormatError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            labels.append(_parse_label(row[0]))
            ids.append(row[1])
            try:
                rows.append([float(v) for v in row[2:]])
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from exc
    if not rows:
        raise FormatError(f"{path}: no samples")
    X = np.asarray(rows)
    if kind == "empirical":
        X = X[:, [columns.index(c) for c in EMPIRICAL_FEATURES]]
        columns = list(EMPIRICAL_FEATURES)
    return LabeledDataset(X, np.asarray(labels), tuple(ids), kind, tuple(columns))


# ---------------------------------------------------------------- evaluation

class Pipeline(Protocol):
    def prepare(self, data: LabeledDataset) -> None: ...

    def fit_predict(self, data: LabeledDataset, train_idx: np.ndarray,
                    test_idx: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class ConfusionMatrix:
    labels: np.ndarray
    counts: np.ndarray

    @property
    def row_normalized(self) -> np.ndarray:
        rows = self.counts.sum(axis=1, keepdims=True)
        return np.divide(self.counts, rows, out=np.zeros(self.counts.shape), where=rows > 0)

    @property
    def accuracy(self) -> float:
        return float(np.trace(self.counts) / self.counts.sum())


def confusion(labels, true, pred) -> ConfusionMatrix:
    index = {lab: i for i, lab in enumerate(labels.tolist())}
    counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for t, p in zip(np.asarray(true).tolist(), np.asarray(pred).tolist()):
        counts[index[t], index[p]] += 1
    return ConfusionMatrix(np.asarray(labels), counts)


@dataclass(frozen=True)
class EvalReport:
    labels: np.ndarray
    mean_confusion: np.ndarray
    mean_accuracy: float
    n_trials: int
    seed: int
    counts: np.ndarray
    trial_accuracy: np.ndarray

    def same_as(self, other: "EvalReport") -> bool:
        return (np.array_equal(self.labels, other.labels)
                and np.array_equal(self.mean_confusion, other.mean_confusion)
                and self.mean_accuracy == other.mean_accuracy
                and np.array_equal(self.counts, other.counts)
                and np.array_equal(self.trial_accuracy, other.trial_accuracy)
                and self.n_trials == other.n_trials and self.seed == other.seed)


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), int(trial)]))


def stratified_split(labels: np.ndarray, train_frac: float, rng) -> tuple[np.ndarray, np.ndarray]:
    train, test = [], []
    for lab in np.unique(labels):
        idx = np.nonzero(labels == lab)[0]
        idx = idx[rng.permutation(idx.size)]
        n_train = min(max(int(round(train_frac * idx.size)), 1), idx.size - 1)
        train.append(idx[:n_train])
        test.append(idx[n_train:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def evaluate(data: LabeledDataset, pipeline: Pipeline, train_frac: float = 0.7,
             n_trials: int = 100, seed: int = 42) -> EvalReport:
    """Average confusion and accuracy over stratified random train/test splits.

    Trial ``i`` draws its split from a generator seeded by ``(seed, i)``, so
    each trial's outcome does not depend on which trials ran before it.
    """
    if not 0 < train_frac < 1:
        raise ValueError(f"train_frac must lie in (0, 1), got {train_frac}")
    labels = data.classes
    if labels.size < 2:
        raise ClassTooSmall("evaluation needs at least two classes")
    for lab in labels:
        if np.sum(data.labels == lab) < 2:
            raise ClassTooSmall(f"class {lab!r} has fewer than two samples")
    pipeline.prepare(data)
    C = labels.size
    norm_sum = np.zeros((C, C))
    counts = np.zeros((C, C), dtype=np.int64)
    accs = np.empty(n_trials)
    for t in range(n_trials):
        tr, te = stratified_split(data.labels, train_frac, trial_rng(seed, t))
        pred = pipeline.fit_predict(data, tr, te)
        cm = confusion(labels, data.labels[te], pred)
        norm_sum += cm.row_normalized
        counts += cm.counts
        accs[t] = cm.accuracy
    return EvalReport(labels, norm_sum / n_trials, float(accs.mean()), n_trials, seed, counts, accs)


def write_report(out_dir, report: EvalReport, extra: dict | None = None) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "confusion.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["true\\pred", *[str(x) for x in report.labels]])
        for lab, row in zip(report.labels, report.mean_confusion):
            w.writerow([str(lab), *(f"{v:.6f}" for v in row)])
    summary = {
        "accuracy": f"{report.mean_accuracy:.4f}",
        "accuracy_std": f"{report.trial_accuracy.std():.4f}",
        "n_trials": report.n_trials,
        "seed": report.seed,
        "n_classes": report.labels.size,
    }
    summary.update(extra or {})
    write_keyvalue(out / "summary.txt", summary)
