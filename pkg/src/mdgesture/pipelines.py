"""Per-method feature extraction and the classifier adapters used by ``evaluate``."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from mdgesture import classify, envelope, sparse, subspace
from mdgesture.classify import KnnConfig, LabeledDataset
from mdgesture.empirical import empirical_features
from mdgesture.signal import IQSignal, StftConfig, center_spectrum, stft, to_gray_image

METHODS = ("envelope", "empirical", "pca", "sparse")


@dataclass(frozen=True)
class FeatureSettings:
    stft: StftConfig = StftConfig()
    n_out: int = envelope.DEFAULT_N_OUT
    P: int = sparse.DEFAULT_P
    time_step: int = 1024
    freq_step: float = 25.0
    scale: float = 512.0
    # divide envelopes by fs/2 so they lie in [-1, 1]
    normalize: bool = False


@lru_cache(maxsize=8)
def _dictionary(n: int, fs: float, time_step: int, freq_step: float, scale: float):
    return sparse.build_dictionary(n, fs, time_step, freq_step, scale)


def envelope_row(sig: IQSignal, cfg: FeatureSettings = FeatureSettings()) -> np.ndarray:
    env = envelope.envelopes(stft(sig, cfg.stft))
    values = envelope.feature_vector(env, cfg.n_out).values
    return values / (sig.sample_rate_hz / 2) if cfg.normalize else values


def empirical_of(sig: IQSignal, cfg: FeatureSettings = FeatureSettings()):
    spec = stft(sig, cfg.stft)
    return empirical_features(spec, envelope.envelopes(spec))


def image_row(sig: IQSignal, cfg: FeatureSettings = FeatureSettings()) -> np.ndarray:
    return to_gray_image(center_spectrum(stft(sig, cfg.stft))).vector


def trajectory_of(sig: IQSignal, cfg: FeatureSettings = FeatureSettings()) -> sparse.TFTrajectory:
    d = _dictionary(len(sig), sig.sample_rate_hz, cfg.time_step, cfg.freq_step, cfg.scale)
    return sparse.omp(sig, d, cfg.P)


def extract(signals, method: str, cfg: FeatureSettings = FeatureSettings()):
    """Feature matrix, column names and feature kind for ``method``."""
    if method == "envelope":
        X = np.array([envelope_row(s, cfg) for s in signals])
        return X, classify.envelope_columns(cfg.n_out), "envelope"
    if method == "empirical":
        feats = [empirical_of(s, cfg) for s in signals]
        raw = np.array([[f.event_len_s, f.pn_ratio, f.bandwidth_hz, f.t_start, f.t_end,
                         f.f_pos, f.f_neg] for f in feats])
        core = raw[:, :3]
        std = core.std(axis=0)
        z = (core - core.mean(axis=0)) / np.where(std > 0, std, 1.0)
        return np.hstack([z, raw]), list(classify.EMPIRICAL_COLUMNS), "empirical"
    if method == "pca":
        X = np.array([image_row(s, cfg) for s in signals])
        return X, classify.image_columns(X.shape[1]), "image"
    if method == "sparse":
        X = np.array([trajectory_of(s, cfg).row() for s in signals])
        return X, classify.trajectory_columns(cfg.P), "trajectory"
    raise ValueError(f"unknown method {method!r}; choose from {METHODS}")


def dataset_from_signals(signals, labels, method: str, cfg: FeatureSettings = FeatureSettings(),
                         source_ids=()) -> LabeledDataset:
    X, cols, kind = extract(signals, method, cfg)
    if kind == "empirical":
        X = X[:, 3:6]
        cols = classify.EMPIRICAL_FEATURES
    return LabeledDataset(X, np.asarray(labels), tuple(source_ids), kind, tuple(cols))


# ---------------------------------------------------------------- classifiers

def _standardize(train: np.ndarray, other: np.ndarray):
    mu = train.mean(axis=0)
    sd = train.std(axis=0)
    sd = np.where(sd > 0, sd, 1.0)
    return (train - mu) / sd, (other - mu) / sd


@dataclass
class KnnPipeline:
    """k-NN over a distance matrix computed once for the whole dataset.

    With ``standardize`` the features are z-scored with training statistics
    each trial, so distances are recomputed per split instead.
    """

    cfg: KnnConfig = KnnConfig()
    standardize: bool = False
    _D: np.ndarray | None = field(default=None, repr=False)

    def prepare(self, data: LabeledDataset) -> None:
        self._D = None
        if not self.standardize:
            self._D = classify.pairwise_distances(
                data.features, data.features, self.cfg.metric,
                freq_scale_hz=self.cfg.mhd_freq_scale_hz, kind=data.feature_kind)

    def fit_predict(self, data, train_idx, test_idx):
        y = data.labels[train_idx]
        if self._D is not None:
            D = self._D[np.ix_(test_idx, train_idx)]
        else:
            tr, te = _standardize(data.features[train_idx], data.features[test_idx])
            D = classify.pairwise_distances(te, tr, self.cfg.metric,
                                            freq_scale_hz=self.cfg.mhd_freq_scale_hz,
                                            kind=data.feature_kind)
        return np.array([classify.knn_vote(row, y, self.cfg.k) for row in D])


@dataclass
class SvmPipeline:
    epochs: int = 200
    lam: float = 1e-3
    seed: int = 0

    def prepare(self, data) -> None:
        pass

    def fit_predict(self, data, train_idx, test_idx):
        model = classify.svm_train(data.features[train_idx], data.labels[train_idx],
                                   self.epochs, self.lam, self.seed)
        return classify.svm_predict(model, data.features[test_idx])


@dataclass
class PcaPipeline:
    d: int = subspace.DEFAULT_PCA_DIM

    def prepare(self, data) -> None:
        pass

    def fit_predict(self, data, train_idx, test_idx):
        stack = subspace.ImageStack(data.features[train_idx].T, data.labels[train_idx])
        model = subspace.pca_train(stack, min(self.d, len(train_idx)))
        return subspace.pca_predict_many(model, data.features[test_idx])


@dataclass
class SparsePipeline:
    P: int = sparse.DEFAULT_P
    seed: int = 0

    def prepare(self, data) -> None:
        pass

    def fit_predict(self, data, train_idx, test_idx):
        classes = []
        for lab in np.unique(data.labels[train_idx]):
            rows = train_idx[data.labels[train_idx] == lab]
            sets = [classify.trajectory_points(data.features[i]) for i in rows]
            classes.append(sparse.central_trajectory(sets, lab, seed=self.seed, P=self.P))
        return np.array([sparse.sparse_classify(classify.trajectory_points(data.features[i]), classes)
                         for i in test_idx])


@dataclass
class ConstantPipeline:
    label: object

    def prepare(self, data) -> None:
        pass

    def fit_predict(self, data, train_idx, test_idx):
        return np.full(len(test_idx), self.label, dtype=data.labels.dtype)


def default_pipeline(method: str, seed: int = 0):
    """The classifier each method is paired with in the comparison."""
    if method == "envelope":
        return KnnPipeline(KnnConfig(1, "L1"))
    if method == "empirical":
        return KnnPipeline(KnnConfig(1, "L1"), standardize=True)
    if method == "pca":
        return PcaPipeline()
    if method == "sparse":
        return SparsePipeline(seed=seed)
    raise ValueError(f"unknown method {method!r}; choose from {METHODS}")


def run_benchmark(signals, labels, methods=METHODS, train_frac: float = 0.7,
                  n_trials: int = 100, seed: int = 42,
                  cfg: FeatureSettings = FeatureSettings()) -> dict:
    """EvalReport per method on one set of segments."""
    out = {}
    for method in methods:
        data = dataset_from_signals(signals, labels, method, cfg)
        out[method] = classify.evaluate(data, default_pipeline(method, seed), train_frac, n_trials, seed)
    return out
