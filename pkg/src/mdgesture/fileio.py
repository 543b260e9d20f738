"""Reading and writing I/Q recordings, spectrograms and key=value sidecars."""
from __future__ import annotations

import csv
import re
from pathlib import Path

import numpy as np

from mdgesture.errors import FormatError
from mdgesture.signal import DEFAULT_SAMPLE_RATE_HZ, IQSignal, Spectrogram, db_normalized


def read_keyvalue(path) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def write_keyvalue(path, items: dict) -> None:
    lines = [f"{k}={v}" for k, v in items.items()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def sidecar_path(path) -> Path:
    return Path(str(path) + ".meta")


def resolve_sample_rate(path, sample_rate_hz: float | None = None,
                        default: float = DEFAULT_SAMPLE_RATE_HZ) -> float:
    """Explicit value, then ``<file>.meta`` sidecar, then ``default``."""
    if sample_rate_hz is not None:
        return float(sample_rate_hz)
    side = sidecar_path(path)
    if side.exists():
        meta = read_keyvalue(side)
        if "sample_rate_hz" in meta:
            try:
                return float(meta["sample_rate_hz"])
            except ValueError as exc:
                raise FormatError(f"{side}: bad sample_rate_hz {meta['sample_rate_hz']!r}") from exc
    return float(default)


def read_iq_csv(path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != ["i", "q"]:
            raise FormatError(f"{path}: expected header 'i,q', got {header!r}")
        rows = []
        for lineno, row in enumerate(reader, 2):
            if not row:
                continue
            if len(row) != 2:
                raise FormatError(f"{path}:{lineno}: expected 2 columns")
            try:
                rows.append((float(row[0]), float(row[1])))
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from exc
    if not rows:
        raise FormatError(f"{path}: no samples")
    arr = np.asarray(rows)
    return arr[:, 0] + 1j * arr[:, 1]


def read_iq_bin(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) == 0 or len(raw) % 8:
        raise FormatError(f"{path}: {len(raw)} bytes is not a whole number of float32 I/Q pairs")
    pairs = np.frombuffer(raw, dtype="<f4").astype(np.float64).reshape(-1, 2)
    return pairs[:, 0] + 1j * pairs[:, 1]


def load_iq(path, sample_rate_hz: float | None = None,
            default_rate: float = DEFAULT_SAMPLE_RATE_HZ) -> IQSignal:
    path = Path(path)
    if not path.exists():
        raise FormatError(f"{path}: no such file")
    samples = read_iq_csv(path) if path.suffix.lower() == ".csv" else read_iq_bin(path)
    return IQSignal(samples, resolve_sample_rate(path, sample_rate_hz, default_rate))


def write_iq_bin(path, samples) -> None:
    s = np.asarray(samples, dtype=np.complex128)
    inter = np.empty(2 * s.size, dtype="<f4")
    inter[0::2] = s.real
    inter[1::2] = s.imag
    Path(path).write_bytes(inter.tobytes())


def write_iq_csv(path, samples) -> None:
    s = np.asarray(samples, dtype=np.complex128)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("i,q\n")
        for v in s:
            fh.write(f"{v.real:.9g},{v.imag:.9g}\n")


def _fmt_list(values) -> str:
    return ",".join(f"{v:.10g}" for v in values)


def write_spectrogram(prefix, spec: Spectrogram) -> tuple[Path, Path]:
    """Matrix CSV (rows = frames) plus a ``.meta`` sidecar with both axes."""
    prefix = Path(prefix)
    csv_path = prefix.with_suffix(".csv")
    np.savetxt(csv_path, spec.power, delimiter=",", fmt="%.10g")
    meta_path = sidecar_path(csv_path)
    write_keyvalue(meta_path, {
        "layout": spec.layout,
        "sample_rate_hz": f"{spec.sample_rate_hz:.10g}",
        "n_frames": spec.n_frames,
        "n_bins": spec.n_bins,
        "frame_times_s": _fmt_list(spec.frame_times_s),
        "freqs_hz": _fmt_list(spec.freqs_hz),
    })
    return csv_path, meta_path


def spectrogram_pgm_pixels(spec: Spectrogram, floor_db: float = 60.0) -> np.ndarray:
    """8-bit raster: row r is centered bin r, column c is frame c."""
    db = db_normalized(spec.power, floor_db)
    lo, hi = db.min(), db.max()
    norm = np.zeros_like(db) if hi - lo <= 0 else (db - lo) / (hi - lo)
    return np.round(norm.T * 255).astype(np.uint8)


def write_pgm(path, pixels: np.ndarray) -> None:
    px = np.asarray(pixels, dtype=np.uint8)
    h, w = px.shape
    Path(path).write_bytes(f"P5\n{w} {h}\n255\n".encode("ascii") + px.tobytes())


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    m = re.match(rb"P5\s+(\d+)\s+(\d+)\s+(\d+)\s", data)
    if m is None:
        raise FormatError(f"{path}: not a binary PGM")
    w, h, maxval = (int(g) for g in m.groups())
    if maxval != 255:
        raise FormatError(f"{path}: only 8-bit PGM supported")
    body = data[m.end():]
    if len(body) < w * h:
        raise FormatError(f"{path}: truncated raster")
    return np.frombuffer(body[: w * h], dtype=np.uint8).reshape(h, w)
