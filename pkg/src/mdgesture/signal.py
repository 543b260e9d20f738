"""Complex baseband signals, rectangular-window STFT and gray-image conversion."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from mdgesture.errors import (
    AlreadyCentered,
    BadConfig,
    RecordingTooShort,
    SignalTooShort,
    WrongLayout,
)

DEFAULT_SAMPLE_RATE_HZ = 12800.0
IMAGE_SIZE = 100


def _frozen(a, dtype=None):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class IQSignal:
    samples: np.ndarray
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ

    def __post_init__(self):
        samples = _frozen(np.ravel(self.samples), np.complex128)
        if samples.size == 0:
            raise BadConfig("IQSignal needs at least one sample")
        if not self.sample_rate_hz > 0:
            raise BadConfig(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))

    def __len__(self):
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz


@dataclass(frozen=True)
class StftConfig:
    window_len: int = 2048
    dft_len: int = 4096
    hop: int = 64
    window_kind: str = "rectangular"

    def __post_init__(self):
        L, K, hop = self.window_len, self.dft_len, self.hop
        if L < 1 or K < 1:
            raise BadConfig("window_len and dft_len must be positive")
        if L > K:
            raise BadConfig(f"window_len {L} exceeds dft_len {K}")
        if K % 2:
            raise BadConfig(f"dft_len must be even, got {K}")
        if not 1 <= hop <= L:
            raise BadConfig(f"hop must lie in [1, window_len], got {hop}")
        if self.window_kind != "rectangular":
            raise BadConfig(f"unsupported window kind {self.window_kind!r}")

    def window(self) -> np.ndarray:
        return np.ones(self.window_len)


@dataclass(frozen=True)
class Spectrogram:
    """Power map with rows = time frames and columns = DFT bins.

    In ``natural`` layout bins ``0..K/2-1`` hold the nonnegative frequencies
    and ``K/2..K-1`` the negative ones; ``centered`` puts zero Doppler at
    column ``K/2`` with frequencies ascending from ``-fs/2``.
    """

    power: np.ndarray
    frame_times_s: np.ndarray
    freqs_hz: np.ndarray
    sample_rate_hz: float
    layout: str = "natural"

    def __post_init__(self):
        object.__setattr__(self, "power", _frozen(self.power, np.float64))
        object.__setattr__(self, "frame_times_s", _frozen(self.frame_times_s, np.float64))
        object.__setattr__(self, "freqs_hz", _frozen(self.freqs_hz, np.float64))
        if self.layout not in ("natural", "centered"):
            raise BadConfig(f"unknown layout {self.layout!r}")
        if self.power.ndim != 2 or self.power.shape != (self.frame_times_s.size, self.freqs_hz.size):
            raise BadConfig("power shape does not match frame/frequency axes")

    @property
    def n_frames(self) -> int:
        return self.power.shape[0]

    @property
    def n_bins(self) -> int:
        return self.power.shape[1]

    @property
    def bin_hz(self) -> float:
        return self.sample_rate_hz / self.n_bins

    def scaled(self, factor: float) -> "Spectrogram":
        return Spectrogram(self.power * factor, self.frame_times_s, self.freqs_hz,
                           self.sample_rate_hz, self.layout)


@dataclass(frozen=True)
class GrayImage:
    pixels: np.ndarray = field(repr=False)

    def __post_init__(self):
        px = _frozen(self.pixels, np.float64)
        if px.ndim != 2:
            raise BadConfig("GrayImage pixels must be a 2-D matrix")
        object.__setattr__(self, "pixels", px)

    @property
    def vector(self) -> np.ndarray:
        return self.pixels.reshape(-1)

    @classmethod
    def from_vector(cls, vec, size: int = IMAGE_SIZE) -> "GrayImage":
        return cls(np.asarray(vec, dtype=np.float64).reshape(size, size))


def frame_matrix(samples: np.ndarray, window_len: int, hop: int) -> np.ndarray:
    n_frames = (samples.size - window_len) // hop + 1
    view = np.lib.stride_tricks.sliding_window_view(samples, window_len)
    return view[::hop][:n_frames]


def stft(signal: IQSignal, cfg: StftConfig = StftConfig()) -> Spectrogram:
    """Magnitude-squared, zero-padded DFT of each rectangular-window frame."""
    L, K, hop = cfg.window_len, cfg.dft_len, cfg.hop
    if len(signal) < L:
        raise SignalTooShort(f"signal has {len(signal)} samples, window needs {L}")
    frames = frame_matrix(signal.samples, L, hop) * cfg.window()
    spectrum = np.fft.fft(frames, n=K, axis=1)
    power = spectrum.real ** 2 + spectrum.imag ** 2
    fs = signal.sample_rate_hz
    times = (np.arange(power.shape[0]) * hop + L / 2) / fs
    freqs = np.fft.fftfreq(K, d=1.0 / fs)
    return Spectrogram(power, times, freqs, fs, "natural")


def center_spectrum(spec: Spectrogram) -> Spectrogram:
    if spec.layout == "centered":
        raise AlreadyCentered("spectrogram is already centered")
    shift = spec.n_bins // 2
    return Spectrogram(np.roll(spec.power, shift, axis=1), spec.frame_times_s,
                       np.roll(spec.freqs_hz, shift), spec.sample_rate_hz, "centered")


def window_energies(samples: np.ndarray, win: int, stride: int) -> tuple[np.ndarray, np.ndarray]:
    """Energy of every length-``win`` window starting at multiples of ``stride``."""
    csum = np.concatenate([[0.0], np.cumsum(np.abs(samples) ** 2)])
    starts = np.arange(0, samples.size - win + 1, stride)
    return starts, csum[starts + win] - csum[starts]


def segment_gesture(recording: IQSignal, window_s: float = 1.0, *,
                    stride_s: float | None = None,
                    min_rel_energy: float = 0.1) -> list[IQSignal]:
    """Cut a recording into fixed-length gesture segments.

    Windows are picked greedily by descending energy among positions on a
    ``stride_s`` grid (default ``window_s / 10``), never overlapping an
    earlier pick. Picks whose energy drops below ``min_rel_energy`` times the
    strongest window are discarded, which keeps quiet stretches of a
    recording from being reported as gestures. Segments come back in time
    order.
    """
    fs = recording.sample_rate_hz
    win = int(round(window_s * fs))
    if win < 1 or win > len(recording):
        raise RecordingTooShort(f"window of {win} samples does not fit in {len(recording)}")
    stride = max(1, int(round((stride_s if stride_s is not None else window_s / 10) * fs)))
    max_segments = int(np.floor(recording.duration_s / window_s + 1e-9))

    starts, energy = window_energies(recording.samples, win, stride)
    order = np.argsort(-energy, kind="stable")
    best = energy[order[0]]
    chosen: list[int] = []
    for idx in order:
        if len(chosen) >= max_segments:
            break
        if best <= 0 or energy[idx] < min_rel_energy * best:
            break
        s = starts[idx]
        if all(abs(s - c) >= win for c in chosen):
            chosen.append(int(s))
    if not chosen:
        chosen = [int(starts[0])]
    return [IQSignal(recording.samples[s:s + win], fs) for s in sorted(chosen)]


def resize_bilinear(a: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Bilinear resampling with the corner samples aligned."""
    out = np.asarray(a, dtype=np.float64)
    for axis, n_out in enumerate(shape):
        n_in = out.shape[axis]
        if n_in == n_out:
            continue
        pos = np.linspace(0.0, n_in - 1, n_out) if n_in > 1 else np.zeros(n_out)
        lo = np.floor(pos).astype(int)
        hi = np.minimum(lo + 1, n_in - 1)
        w = pos - lo
        shape_w = [1] * out.ndim
        shape_w[axis] = n_out
        w = w.reshape(shape_w)
        out = np.take(out, lo, axis=axis) * (1 - w) + np.take(out, hi, axis=axis) * w
    return out


def db_normalized(power: np.ndarray, floor_db: float = 60.0) -> np.ndarray:
    """dB map floored ``floor_db`` below the peak; all-zero input gives zeros."""
    peak = power.max() if power.size else 0.0
    if peak <= 0:
        return np.zeros_like(power, dtype=np.float64)
    floor = peak * 10.0 ** (-floor_db / 10.0)
    return 10.0 * np.log10(np.maximum(power, floor))


def _minmax(a: np.ndarray) -> np.ndarray:
    lo, hi = a.min(), a.max()
    if hi - lo <= 0:
        return np.ones_like(a)
    return np.clip((a - lo) / (hi - lo), 0.0, 1.0)


def to_gray_image(spec: Spectrogram, size: int = IMAGE_SIZE, floor_db: float = 60.0) -> GrayImage:
    if spec.layout != "centered":
        raise WrongLayout("to_gray_image expects a centered spectrogram")
    if not np.any(spec.power > 0):
        return GrayImage(np.zeros((size, size)))
    db = db_normalized(spec.power, floor_db)
    # normalize after resampling so the image spans exactly [0, 1]
    return GrayImage(_minmax(resize_bilinear(db, (size, size))))
