"""Handcrafted kinematic features: event length, Doppler ratio, bandwidth."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from mdgesture.envelope import EnvelopePair, band_energies
from mdgesture.signal import Spectrogram

EVENT_THRESHOLD = 0.05
CSV_COLUMNS = ["label", "T_s", "R", "Bw_hz", "ts_s", "te_s", "fp_hz", "fn_hz"]


@dataclass(frozen=True)
class EmpiricalFeatures:
    event_len_s: float
    pn_ratio: float
    bandwidth_hz: float
    t_start: float
    t_end: float
    f_pos: float
    f_neg: float
    ratio_floored: bool = False

    def as_vector(self) -> np.ndarray:
        return np.array([self.event_len_s, self.pn_ratio, self.bandwidth_hz])


def event_bounds(spec: Spectrogram, threshold: float = EVENT_THRESHOLD) -> tuple[float, float]:
    """First and last frame time whose energy reaches ``threshold`` of the peak."""
    e = band_energies(spec)
    total = e.e_upper + e.e_lower
    peak = total.max() if total.size else 0.0
    if not peak > 0:
        return 0.0, 0.0
    above = np.nonzero(total >= threshold * peak)[0]
    return float(spec.frame_times_s[above[0]]), float(spec.frame_times_s[above[-1]])


def empirical_features(spec: Spectrogram, env: EnvelopePair) -> EmpiricalFeatures:
    ts, te = event_bounds(spec)
    f_pos = float(env.env_upper.max())
    f_neg = float(env.env_lower.min())
    floored = f_neg == 0.0
    # one-bin floor keeps the ratio finite for gestures without negative Doppler
    denom = spec.bin_hz if floored else abs(f_neg)
    return EmpiricalFeatures(
        event_len_s=te - ts,
        pn_ratio=abs(f_pos) / denom,
        bandwidth_hz=abs(f_pos) + abs(f_neg),
        t_start=ts,
        t_end=te,
        f_pos=f_pos,
        f_neg=f_neg,
        ratio_floored=floored,
    )


def write_empirical_csv(path, rows: list[tuple[object, EmpiricalFeatures]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for label, f in rows:
            w.writerow([label] + [f"{v:.10g}" for v in (f.event_len_s, f.pn_ratio, f.bandwidth_hz,
                                                       f.t_start, f.t_end, f.f_pos, f.f_neg)])
