"""Positive and negative frequency envelopes of a micro-Doppler spectrogram.

Each half of the natural-layout spectrogram is treated as a band. Per frame
the band energy is the sum of squared spectrogram values, and the threshold
is that energy times a per-band scale factor. The envelope is the outermost
frequency at which the energy accumulated from the band edge inward reaches
the threshold.

The scale factor is chosen once per spectrogram: the squared value of the
band's strongest pixel divided by the band energy of that pixel's frame.
Holding the ratio fixed over all frames makes the envelope trace the same
relative energy contour throughout the gesture.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from mdgesture import kernels
from mdgesture.errors import BadLength, WrongLayout
from mdgesture.signal import Spectrogram

SIGMA_EPS = 1e-6
ACTIVITY_GATE = 1e-3
DEFAULT_N_OUT = 128
# when nothing lies beyond the anchor pixel its frame meets the threshold with
# equality; this slack keeps such crossings on the same bin under rounding or
# rescaling
CROSSING_RTOL = 1e-9


@dataclass(frozen=True)
class BandEnergies:
    e_upper: np.ndarray
    e_lower: np.ndarray


@dataclass(frozen=True)
class ThresholdProfile:
    sigma_upper: float
    sigma_lower: float
    t_upper: np.ndarray
    t_lower: np.ndarray
    # (frame, natural bin) where each scale factor was measured; -1 if degenerate
    anchor_upper: tuple[int, int] = (-1, -1)
    anchor_lower: tuple[int, int] = (-1, -1)
    degenerate_upper: bool = False
    degenerate_lower: bool = False


@dataclass(frozen=True)
class EnvelopePair:
    env_upper: np.ndarray
    env_lower: np.ndarray
    frame_times_s: np.ndarray
    sample_rate_hz: float

    @property
    def n_frames(self) -> int:
        return self.env_upper.size


@dataclass(frozen=True)
class EnvelopeFeature:
    values: np.ndarray
    n_frames_resampled: int

    @property
    def upper(self) -> np.ndarray:
        return self.values[: self.n_frames_resampled]

    @property
    def lower(self) -> np.ndarray:
        return self.values[self.n_frames_resampled:]


def _require_natural(spec: Spectrogram) -> None:
    if spec.layout != "natural":
        raise WrongLayout("envelope extraction needs a natural-layout spectrogram")


def _bands_edge_first(spec: Spectrogram) -> tuple[np.ndarray, np.ndarray]:
    """Squared power of both bands, column 0 being the outermost frequency."""
    half = spec.n_bins // 2
    sq = spec.power ** 2
    upper = sq[:, half - 1::-1]
    lower = sq[:, half:]
    return upper, lower


def _upper_bin(i: int, half: int) -> int:
    return half - 1 - i


def _lower_bin(i: int, half: int) -> int:
    return half + i


def band_energies(spec: Spectrogram) -> BandEnergies:
    _require_natural(spec)
    half = spec.n_bins // 2
    sq = spec.power ** 2
    return BandEnergies(sq[:, :half].sum(axis=1), sq[:, half:].sum(axis=1))


def _scale_factor(band: np.ndarray, energy: np.ndarray):
    if not band.sum() > 0:
        return 0.5, (-1, -1), True
    frame, k = np.unravel_index(int(np.argmax(band)), band.shape)
    ratio = band[frame, k] / energy[frame]
    return float(np.clip(ratio, SIGMA_EPS, 1 - SIGMA_EPS)), (int(frame), int(k)), False


def select_scale_factors(spec: Spectrogram, energies: BandEnergies | None = None) -> ThresholdProfile:
    _require_natural(spec)
    if energies is None:
        energies = band_energies(spec)
    if energies.e_upper.size != spec.n_frames or energies.e_lower.size != spec.n_frames:
        raise BadLength("band energies do not match the spectrogram frame count")
    half = spec.n_bins // 2
    upper, lower = _bands_edge_first(spec)
    s_u, (fu, iu), deg_u = _scale_factor(upper, energies.e_upper)
    s_l, (fl, il), deg_l = _scale_factor(lower, energies.e_lower)
    return ThresholdProfile(
        sigma_upper=s_u,
        sigma_lower=s_l,
        t_upper=energies.e_upper * s_u,
        t_lower=energies.e_lower * s_l,
        anchor_upper=(fu, _upper_bin(iu, half)) if not deg_u else (-1, -1),
        anchor_lower=(fl, _lower_bin(il, half)) if not deg_l else (-1, -1),
        degenerate_upper=deg_u,
        degenerate_lower=deg_l,
    )


def extract_envelopes(spec: Spectrogram, prof: ThresholdProfile,
                      activity_gate: float = ACTIVITY_GATE) -> EnvelopePair:
    """Envelopes in Hz; frames with no crossing or a near-silent band give 0.

    A band counts as silent in a frame when its energy is below
    ``activity_gate`` times that band's strongest frame.
    """
    _require_natural(spec)
    if prof.t_upper.size != spec.n_frames or prof.t_lower.size != spec.n_frames:
        raise BadLength("threshold profile does not match the spectrogram frame count")
    half = spec.n_bins // 2
    upper, lower = _bands_edge_first(spec)
    out = []
    for band, thresholds, to_bin in ((upper, prof.t_upper, _upper_bin),
                                     (lower, prof.t_lower, _lower_bin)):
        energy = band.sum(axis=1)
        active = (energy > 0) & (energy >= activity_gate * energy.max())
        idx = kernels.edge_crossing(band, thresholds * (1 - CROSSING_RTOL), active)
        env = np.zeros(spec.n_frames)
        hit = idx >= 0
        env[hit] = spec.freqs_hz[to_bin(idx[hit], half)]
        out.append(env)
    return EnvelopePair(out[0], out[1], spec.frame_times_s, spec.sample_rate_hz)


def envelopes(spec: Spectrogram) -> EnvelopePair:
    """Band energies, scale factors and extraction in one call."""
    return extract_envelopes(spec, select_scale_factors(spec, band_energies(spec)))


def resample_linear(values: np.ndarray, n_out: int) -> np.ndarray:
    values = np.asarray(values, dtype=np.float64)
    if values.size == n_out:
        return values.copy()
    if values.size == 1:
        return np.full(n_out, values[0])
    pos = np.linspace(0.0, values.size - 1, n_out)
    return np.interp(pos, np.arange(values.size), values)


def feature_vector(env: EnvelopePair, n_out: int = DEFAULT_N_OUT) -> EnvelopeFeature:
    if n_out < 2:
        raise BadLength(f"n_out must be at least 2, got {n_out}")
    values = np.concatenate([resample_linear(env.env_upper, n_out),
                             resample_linear(env.env_lower, n_out)])
    return EnvelopeFeature(values, n_out)


def feature_point_set(values: np.ndarray, sample_rate_hz: float) -> np.ndarray:
    """(time, frequency) points of both envelope halves, axes scaled to [0, 1]."""
    values = np.asarray(values, dtype=np.float64)
    n = values.size // 2
    t = np.arange(n) / n
    f = values / (sample_rate_hz / 2)
    return np.column_stack([np.concatenate([t, t]), f])


def write_envelope_csv(path, env: EnvelopePair) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["frame_time_s", "e_upper_hz", "e_lower_hz"])
        for t, u, lo in zip(env.frame_times_s, env.env_upper, env.env_lower):
            w.writerow([f"{t:.10g}", f"{u:.10g}", f"{lo:.10g}"])
