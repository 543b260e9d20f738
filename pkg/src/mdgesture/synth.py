"""Synthetic micro-Doppler hand gestures from a few point scatterers.

Each class is a template of scatterers whose Doppler law runs over the
event. Outside the event a scatterer is silent, so the segment carries only
receiver noise there. Jitter perturbs event length, peak Doppler, amplitude
and the scatterers' start phases per instance; the event centre wanders by
a separate, absolute amount.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable

import numpy as np

from mdgesture.errors import AliasRisk, BadConfig, FormatError
from mdgesture.fileio import load_iq, write_iq_bin
from mdgesture.signal import DEFAULT_SAMPLE_RATE_HZ, IQSignal

CLASS_NAMES = ("SwipingHand", "HandRotation", "FlippingFingers", "Calling", "SnappingFingers")


def _half_sine_pos_neg(u, peak):
    return peak * np.sin(2 * np.pi * u)


def _neg_sine(u, peak):
    return -peak * np.sin(2 * np.pi * u)


def _chirp_down(u, peak):
    return peak * (1.0 - 2.0 * u)


def _calling(u, peak):
    # short approach at a quarter of the peak, then a stronger pull back
    split = 0.4
    out = np.where(u < split, 0.25 * peak * np.sin(np.pi * u / split),
                   -peak * np.sin(np.pi * (u - split) / (1 - split)))
    return out


def _snap(u, peak):
    # two 0.15 s bursts separated by 0.05 s inside a 0.35 s event
    a, gap = 0.15 / 0.35, 0.05 / 0.35
    b0 = a + gap
    first = np.where(u < a, peak * np.sin(np.pi * np.clip(u / a, 0, 1)), 0.0)
    second = np.where(u >= b0, -peak * np.sin(np.pi * np.clip((u - b0) / (1 - b0), 0, 1)), 0.0)
    return first + second


@dataclass(frozen=True)
class Scatterer:
    amplitude: float
    law: Callable[[np.ndarray, float], np.ndarray]
    freq_scale: float = 1.0


@dataclass(frozen=True)
class GestureTemplate:
    class_id: int
    name: str
    scatterers: tuple
    event_duration_s: float
    peak_hz: float

    def doppler(self, u: np.ndarray, peak_hz: float | None = None) -> list[np.ndarray]:
        peak = self.peak_hz if peak_hz is None else peak_hz
        return [s.law(u, peak * s.freq_scale) for s in self.scatterers]

    def max_doppler_hz(self, peak_hz: float | None = None) -> float:
        u = np.linspace(0, 1, 2001)
        return float(max(np.abs(f).max() for f in self.doppler(u, peak_hz)))


TEMPLATES = (
    GestureTemplate(0, "SwipingHand",
                    (Scatterer(1.0, _half_sine_pos_neg), Scatterer(0.5, _half_sine_pos_neg, 1.25)),
                    0.5, 600.0),
    GestureTemplate(1, "HandRotation",
                    (Scatterer(1.0, _half_sine_pos_neg), Scatterer(0.8, _neg_sine, 0.9)),
                    0.8, 300.0),
    GestureTemplate(2, "FlippingFingers",
                    (Scatterer(1.0, _chirp_down), Scatterer(0.6, _chirp_down, 0.7)),
                    0.2, 900.0),
    GestureTemplate(3, "Calling",
                    (Scatterer(1.0, _calling), Scatterer(0.5, _calling, 0.8)),
                    0.25, 400.0),
    GestureTemplate(4, "SnappingFingers",
                    (Scatterer(1.0, _snap), Scatterer(0.4, _snap, 1.2)),
                    0.35, 500.0),
)


@dataclass(frozen=True)
class SynthConfig:
    n_per_class: int = 50
    snr_db: float = 20.0
    jitter: float = 0.3
    seed: int = 42
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ
    duration_s: float = 1.0
    variants: int = 1
    # event centre wanders uniformly by up to this much; 0.05 s matches the
    # quantization of a 0.1 s segmentation stride
    onset_jitter_s: float = 0.05

    def __post_init__(self):
        if self.n_per_class < 1:
            raise BadConfig("n_per_class must be >= 1")
        if not 0 <= self.jitter < 1:
            raise BadConfig(f"jitter must lie in [0, 1), got {self.jitter}")
        if self.variants < 1:
            raise BadConfig("variants must be >= 1")
        if self.onset_jitter_s < 0:
            raise BadConfig("onset_jitter_s must be >= 0")


def variant_template(template: GestureTemplate, variant: int) -> GestureTemplate:
    """Fixed per-variant change of peak Doppler and duration (variant 0 unchanged)."""
    if variant == 0:
        return template
    return replace(template, peak_hz=template.peak_hz * (1 + 0.08 * variant),
                   event_duration_s=template.event_duration_s * (1 - 0.06 * variant))


def _taper(n: int) -> np.ndarray:
    ramp = max(1, n // 10)
    w = np.ones(n)
    r = 0.5 - 0.5 * np.cos(np.pi * np.arange(ramp) / ramp)
    w[:ramp] = r
    w[n - ramp:] = r[::-1]
    return w


def synth_gesture(template: GestureTemplate, cfg: SynthConfig, instance_seed: int,
                  return_truth: bool = False):
    """One noisy segment; with ``return_truth`` also the per-scatterer Doppler tracks."""
    rng = np.random.default_rng(instance_seed)
    fs = cfg.sample_rate_hz
    N = int(round(cfg.duration_s * fs))
    j = cfg.jitter
    dur = template.event_duration_s * (1 + j * rng.uniform(-1, 1))
    peak = template.peak_hz * (1 + j * rng.uniform(-1, 1))
    amp_scale = 1 + j * rng.uniform(-1, 1)
    if template.max_doppler_hz(peak) >= fs / 2:
        raise AliasRisk(f"peak Doppler {template.max_doppler_hz(peak):.1f} Hz reaches fs/2")
    n_event = min(N, max(2, int(round(dur * fs))))
    free = N - n_event
    start = int(round(free / 2 + cfg.onset_jitter_s * fs * rng.uniform(-1, 1)))
    start = min(max(start, 0), free)

    u = np.arange(n_event) / (n_event - 1)
    tracks = template.doppler(u, peak)
    taper = _taper(n_event)
    clean = np.zeros(N, dtype=np.complex128)
    truth = np.zeros((len(tracks), N))
    for scat, f in zip(template.scatterers, tracks):
        phase = 2 * np.pi * np.cumsum(f) / fs + j * np.pi * rng.uniform(-1, 1)
        clean[start:start + n_event] += scat.amplitude * amp_scale * taper * np.exp(1j * phase)
    for i, f in enumerate(tracks):
        truth[i, start:start + n_event] = f

    noisy = clean
    if np.isfinite(cfg.snr_db):
        p_sig = np.mean(np.abs(clean) ** 2)
        sigma = np.sqrt(p_sig / 10 ** (cfg.snr_db / 10) / 2)
        noisy = clean + sigma * (rng.standard_normal(N) + 1j * rng.standard_normal(N))
    sig = IQSignal(noisy, fs)
    if return_truth:
        return sig, truth, (start, n_event)
    return sig


def instance_seed(master: int, gesture_id: int, index: int) -> int:
    ss = np.random.SeedSequence([int(master) & (2**64 - 1), int(gesture_id), int(index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass
class SynthDataset:
    signals: list
    labels: np.ndarray
    seeds: list
    files: list

    def __len__(self):
        return len(self.signals)


def synth_dataset(cfg: SynthConfig = SynthConfig(), out_dir=None) -> SynthDataset:
    """``n_per_class`` instances of every template (times ``variants``).

    Labels are gesture ids ``class_id * variants + variant``; with one
    variant they equal the class id. With ``out_dir`` the segments are
    written as float32 I/Q files together with ``manifest.csv``.
    """
    signals, labels, seeds, files = [], [], [], []
    for template in TEMPLATES:
        for v in range(cfg.variants):
            tmpl = variant_template(template, v)
            gid = template.class_id * cfg.variants + v
            for i in range(cfg.n_per_class):
                s = instance_seed(cfg.seed, gid, i)
                signals.append(synth_gesture(tmpl, cfg, s))
                labels.append(gid)
                seeds.append(s)
                files.append(f"g{gid:02d}_{i:04d}.bin")
    ds = SynthDataset(signals, np.asarray(labels), seeds, files)
    if out_dir is not None:
        write_synth(ds, cfg, out_dir)
    return ds


def write_synth(ds: SynthDataset, cfg: SynthConfig, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for sig, name in zip(ds.signals, ds.files):
        write_iq_bin(out / name, sig.samples)
    with open(out / "manifest.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["file", "label", "seed", "snr_db"])
        for name, lab, seed in zip(ds.files, ds.labels, ds.seeds):
            w.writerow([name, int(lab), seed, f"{cfg.snr_db:g}"])
    return out / "manifest.csv"


def read_manifest(directory, sample_rate_hz: float | None = None,
                  default_rate: float = DEFAULT_SAMPLE_RATE_HZ):
    """Load every file listed in ``manifest.csv``; returns (signals, labels, names)."""
    directory = Path(directory)
    manifest = directory / "manifest.csv"
    if not manifest.exists():
        raise FormatError(f"{directory}: no manifest.csv")
    signals, labels, names = [], [], []
    with open(manifest, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"file", "label"} <= set(reader.fieldnames):
            raise FormatError(f"{manifest}: needs 'file' and 'label' columns")
        for row in reader:
            signals.append(load_iq(directory / row["file"], sample_rate_hz, default_rate))
            lab = row["label"]
            labels.append(int(lab) if lab.lstrip("-").isdigit() else lab)
            names.append(row["file"])
    if not signals:
        raise FormatError(f"{manifest}: empty manifest")
    return signals, np.asarray(labels), names
