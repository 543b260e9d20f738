"""Sparse time-frequency trajectories from a Gaussian-windowed Fourier dictionary.

Orthogonal matching pursuit picks ``P`` atoms per segment; their
(time, frequency, amplitude) triples form the trajectory. Class prototypes
are k-means centroids of the pooled training trajectories, and queries are
matched to prototypes with the modified Hausdorff distance.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from mdgesture import kernels
from mdgesture.classify import kmeans
from mdgesture.errors import BadConfig, BadSparsity, GridTooLarge, NoClasses
from mdgesture.signal import IQSignal

MAX_ATOMS = 1_000_000
DEFAULT_P = 10


@dataclass(frozen=True, eq=False)
class GaborDictionary:
    """Atoms ``exp(-(n-t0)^2 / (2 s^2)) exp(j 2 pi f0 n / fs)``, unit norm.

    Atoms are synthesized on demand; ``correlate`` evaluates the inner
    product with every atom without materializing the whole dictionary.
    """

    segment_len: int
    sample_rate_hz: float
    time_centers: np.ndarray  # samples
    freqs_hz: np.ndarray
    scale: float  # Gaussian standard deviation in samples
    _windows: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        n = np.arange(self.segment_len)
        w = np.exp(-((n[None, :] - np.asarray(self.time_centers, float)[:, None]) ** 2)
                   / (2.0 * self.scale ** 2))
        w /= np.linalg.norm(w, axis=1, keepdims=True)
        object.__setattr__(self, "_windows", w)

    @property
    def n_times(self) -> int:
        return len(self.time_centers)

    @property
    def n_freqs(self) -> int:
        return len(self.freqs_hz)

    def __len__(self):
        return self.n_times * self.n_freqs

    def grid(self, index: int) -> tuple[float, float]:
        """(t0 in seconds, f0 in Hz) of atom ``index``."""
        it, jf = divmod(int(index), self.n_freqs)
        return self.time_centers[it] / self.sample_rate_hz, float(self.freqs_hz[jf])

    def atom(self, index: int) -> np.ndarray:
        it, jf = divmod(int(index), self.n_freqs)
        n = np.arange(self.segment_len)
        return self._windows[it] * np.exp(2j * np.pi * self.freqs_hz[jf] * n / self.sample_rate_hz)

    def atoms(self, indices) -> np.ndarray:
        return np.column_stack([self.atom(i) for i in indices])

    def _fold_period(self) -> int | None:
        # correlation via one short FFT when every grid frequency is a multiple of fs/M
        if self.n_freqs < 2:
            return None
        step = self.freqs_hz[1] - self.freqs_hz[0]
        M = self.sample_rate_hz / step
        if abs(M - round(M)) > 1e-9 or round(M) < 1:
            return None
        M = int(round(M))
        k = self.freqs_hz / step
        if np.max(np.abs(k - np.round(k))) > 1e-9 or not np.allclose(np.diff(self.freqs_hz), step):
            return None
        return M

    def correlate(self, x: np.ndarray) -> np.ndarray:
        """``<x, atom_i>`` for every atom, flattened in atom-index order."""
        x = np.asarray(x, dtype=np.complex128)
        out = np.empty((self.n_times, self.n_freqs), dtype=np.complex128)
        M = self._fold_period()
        n = np.arange(self.segment_len)
        if M is not None:
            bins = np.round(self.freqs_hz * M / self.sample_rate_hz).astype(int) % M
            pad = (-self.segment_len) % M
            for it in range(self.n_times):
                y = np.concatenate([x * self._windows[it], np.zeros(pad)])
                folded = y.reshape(-1, M).sum(axis=0)
                out[it] = np.fft.fft(folded)[bins]
        else:
            phasor = np.exp(-2j * np.pi * np.outer(n, self.freqs_hz) / self.sample_rate_hz)
            for it in range(self.n_times):
                out[it] = (x * self._windows[it]) @ phasor
        return out.reshape(-1)


def build_dictionary(segment_len: int, fs: float, time_step: int = 1024,
                     freq_step: float = 25.0, scale: float = 512.0) -> GaborDictionary:
    if segment_len < 64:
        raise BadConfig(f"segment_len must be >= 64, got {segment_len}")
    if time_step < 1 or freq_step <= 0 or scale <= 0:
        raise BadConfig("dictionary grid steps and scale must be positive")
    times = np.arange(0, segment_len, time_step)
    n_f = int(np.ceil(fs / freq_step - 1e-9))
    freqs = -fs / 2 + freq_step * np.arange(n_f)
    freqs = freqs[freqs < fs / 2]
    if times.size * freqs.size > MAX_ATOMS:
        raise GridTooLarge(f"{times.size * freqs.size} atoms exceeds {MAX_ATOMS}")
    return GaborDictionary(segment_len, float(fs), times, freqs, float(scale))


@dataclass(frozen=True)
class TFTrajectory:
    times_s: np.ndarray
    freqs_hz: np.ndarray
    amplitudes: np.ndarray
    segment_duration_s: float
    sample_rate_hz: float
    atom_indices: tuple = ()
    residual_norms: tuple = ()
    degenerate: bool = False

    @property
    def P(self) -> int:
        return self.times_s.size

    def normalized_points(self) -> np.ndarray:
        """(t, f) with t scaled by the segment length and f by fs/2."""
        return np.column_stack([self.times_s / self.segment_duration_s,
                                self.freqs_hz / (self.sample_rate_hz / 2)])

    def row(self) -> np.ndarray:
        """Interleaved ``t1,f1,a1,...`` with normalized t and f."""
        pts = self.normalized_points()
        return np.column_stack([pts, self.amplitudes]).reshape(-1)


def omp(signal: IQSignal, dictionary: GaborDictionary, P: int = DEFAULT_P) -> TFTrajectory:
    x = signal.samples
    if P < 1:
        raise BadSparsity(f"sparsity level must be >= 1, got {P}")
    if x.size != dictionary.segment_len:
        raise BadConfig(f"signal length {x.size} != atom length {dictionary.segment_len}")
    if P > len(dictionary):
        raise BadSparsity(f"P={P} exceeds dictionary size {len(dictionary)}")
    residual = x.copy()
    selected: list[int] = []
    norms = [float(np.linalg.norm(residual))]
    coef = np.zeros(0, dtype=np.complex128)
    Phi = np.zeros((x.size, 0), dtype=np.complex128)
    for _ in range(P):
        corr = np.abs(dictionary.correlate(residual))
        corr[selected] = -np.inf
        best = int(np.argmax(corr))
        selected.append(best)
        Phi = np.column_stack([Phi, dictionary.atom(best)])
        coef, *_ = np.linalg.lstsq(Phi, x, rcond=None)
        residual = x - Phi @ coef
        norms.append(float(np.linalg.norm(residual)))
    grid = [dictionary.grid(i) for i in selected]
    t = np.array([g[0] for g in grid])
    f = np.array([g[1] for g in grid])
    a = np.abs(coef)
    order = np.lexsort((f, t))
    return TFTrajectory(t[order], f[order], a[order], x.size / signal.sample_rate_hz,
                        signal.sample_rate_hz, tuple(selected), tuple(norms),
                        degenerate=bool(norms[0] == 0.0))


def reconstruct(trajectory: TFTrajectory, dictionary: GaborDictionary, signal: IQSignal) -> np.ndarray:
    """Least-squares reconstruction of ``signal`` on the trajectory's atoms."""
    Phi = dictionary.atoms(trajectory.atom_indices)
    coef, *_ = np.linalg.lstsq(Phi, signal.samples, rcond=None)
    return Phi @ coef


@dataclass(frozen=True)
class ClassTrajectory:
    label: object
    centroids: np.ndarray


def central_trajectory(point_sets, label=None, seed: int = 0, P: int | None = None) -> ClassTrajectory:
    """k-means prototype of pooled, already normalized (t, f) point sets."""
    sets = [np.asarray(s.normalized_points() if isinstance(s, TFTrajectory) else s, dtype=np.float64)
            for s in point_sets]
    if not sets:
        raise NoClasses("no trajectories to summarize")
    K = P if P is not None else len(sets[0])
    pooled = np.concatenate(sets)
    res = kmeans(pooled, K, seed=seed)
    order = np.lexsort((res.centroids[:, 1], res.centroids[:, 0]))
    return ClassTrajectory(label, res.centroids[order])


def sparse_classify(query, classes: list[ClassTrajectory]):
    if not classes:
        raise NoClasses("no class trajectories")
    pts = query.normalized_points() if isinstance(query, TFTrajectory) else np.asarray(query, float)
    d = kernels.pairwise_mhd([pts], [c.centroids for c in classes])[0]
    best = min(range(len(classes)), key=lambda i: (d[i], classes[i].label))
    return classes[best].label
