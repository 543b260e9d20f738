import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdgesture.errors import AlreadyCentered, BadConfig, FormatError, RecordingTooShort, SignalTooShort, WrongLayout
from mdgesture.fileio import (load_iq, read_iq_bin, read_pgm, resolve_sample_rate, spectrogram_pgm_pixels,
                              write_iq_bin, write_iq_csv, write_keyvalue, write_pgm, write_spectrogram)
from mdgesture.signal import (IQSignal, StftConfig, center_spectrum, resize_bilinear, segment_gesture, stft,
                              to_gray_image)

FS = 12800.0


def tone(freq, n=12800, fs=FS):
    return IQSignal(np.exp(2j * np.pi * freq * np.arange(n) / fs), fs)


def test_frame_count_and_times():
    spec = stft(tone(0.0, 5000), StftConfig(256, 512, 64))
    assert spec.n_frames == (5000 - 256) // 64 + 1
    assert spec.power.shape == (spec.n_frames, 512)
    np.testing.assert_allclose(spec.frame_times_s[:2], [128 / FS, (64 + 128) / FS])


def test_against_direct_dft():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(600) + 1j * rng.standard_normal(600)
    spec = stft(IQSignal(x, FS), StftConfig(100, 128, 50))
    n, k = np.arange(100), np.arange(128)
    W = np.exp(-2j * np.pi * np.outer(n, k) / 128)
    for f in range(spec.n_frames):
        np.testing.assert_allclose(spec.power[f], np.abs(x[50 * f:50 * f + 100] @ W) ** 2, rtol=1e-10, atol=1e-9)


def test_tone_ridge_natural_and_centered():
    cfg = StftConfig(256, 512, 64)
    spec = stft(tone(500.0), cfg)
    assert np.all(spec.freqs_hz[np.argmax(spec.power, axis=1)] == 500.0)
    cen = center_spectrum(stft(tone(-400.0), cfg))
    col = np.argmax(cen.power, axis=1)
    assert np.all(col == 256 - 400 * 512 / FS)
    assert np.all(np.diff(cen.freqs_hz) > 0) and cen.freqs_hz[0] == -FS / 2


def test_center_is_permutation_and_rejects_twice():
    spec = stft(tone(123.0, 3000), StftConfig(256, 512, 64))
    cen = center_spectrum(spec)
    for k in (0, 7, 300, 511):
        np.testing.assert_array_equal(cen.power[:, (k + 256) % 512], spec.power[:, k])
    assert cen.power.sum() == pytest.approx(spec.power.sum(), rel=1e-15)
    with pytest.raises(AlreadyCentered):
        center_spectrum(cen)


def test_stft_errors():
    with pytest.raises(SignalTooShort):
        stft(tone(0.0, 100), StftConfig(256, 512, 64))
    for args in [(512, 256, 64), (256, 511, 64), (256, 512, 0), (256, 512, 257)]:
        with pytest.raises(BadConfig):
            StftConfig(*args)


@settings(max_examples=40, deadline=None)
@given(st.integers(64, 1500), st.sampled_from([(32, 64, 8), (64, 64, 64), (50, 128, 7)]), st.integers(0, 2**32 - 1))
def test_parseval_property(n, cfg, seed):
    L, K, hop = cfg
    if n < L:
        return
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    spec = stft(IQSignal(x, FS), StftConfig(L, K, hop))
    frames = np.lib.stride_tricks.sliding_window_view(x, L)[::hop][: spec.n_frames]
    np.testing.assert_allclose(spec.power.sum(axis=1), K * (np.abs(frames) ** 2).sum(axis=1), rtol=1e-10)


def test_segment_finds_burst():
    rng = np.random.default_rng(1)
    x = 0.01 * (rng.standard_normal(8 * 12800) + 1j * rng.standard_normal(8 * 12800))
    c = 3 * 12800
    x[c - 3200:c + 3200] += np.exp(2j * np.pi * 300 * np.arange(6400) / FS)
    segs = segment_gesture(IQSignal(x, FS))
    assert len(segs) == 1
    # brute-force oracle: the max-energy 1 s window on the same 0.1 s grid
    starts = np.arange(0, x.size - 12800 + 1, 1280)
    best = starts[np.argmax([np.sum(np.abs(x[s:s + 12800]) ** 2) for s in starts])]
    np.testing.assert_array_equal(segs[0].samples, x[best:best + 12800])


def test_segment_too_short():
    with pytest.raises(RecordingTooShort):
        segment_gesture(tone(0.0, 1000), 1.0)


def test_gray_image_ranges():
    spec = center_spectrum(stft(tone(300.0, 4000), StftConfig(256, 512, 32)))
    img = to_gray_image(spec)
    assert img.pixels.shape == (100, 100)
    assert img.pixels.min() == 0.0 and img.pixels.max() == 1.0
    zero = center_spectrum(stft(IQSignal(np.zeros(4000), FS), StftConfig(256, 512, 32)))
    assert np.all(to_gray_image(zero).pixels == 0)
    with pytest.raises(WrongLayout):
        to_gray_image(stft(tone(0.0, 4000), StftConfig(256, 512, 32)))


def test_resize_bilinear_corners_and_linear_field():
    a = np.add.outer(np.arange(7.0), 2 * np.arange(5.0))
    out = resize_bilinear(a, (13, 9))
    np.testing.assert_allclose(out[[0, 0, -1, -1], [0, -1, 0, -1]], a[[0, 0, -1, -1], [0, -1, 0, -1]])
    # bilinear interpolation reproduces an affine field exactly
    r, c = np.linspace(0, 6, 13), np.linspace(0, 4, 9)
    np.testing.assert_allclose(out, np.add.outer(r, 2 * c), atol=1e-12)


# ---------------------------------------------------------------- file formats

def test_binary_roundtrip_and_truncation(tmp_path):
    x = (np.arange(10) + 1j * np.arange(10)[::-1]).astype(np.complex64)
    p = tmp_path / "x.bin"
    write_iq_bin(p, x)
    np.testing.assert_array_equal(read_iq_bin(p), x)
    p.write_bytes(p.read_bytes()[:-3])
    with pytest.raises(FormatError):
        read_iq_bin(p)
    p.write_bytes(b"")
    with pytest.raises(FormatError):
        read_iq_bin(p)


def test_csv_and_sample_rate_resolution(tmp_path):
    x = np.array([1 + 2j, -0.5 + 0j, 0.25 - 1j])
    p = tmp_path / "x.csv"
    write_iq_csv(p, x)
    sig = load_iq(p)
    np.testing.assert_allclose(sig.samples, x)
    assert sig.sample_rate_hz == FS
    write_keyvalue(str(p) + ".meta", {"sample_rate_hz": 1000})
    assert resolve_sample_rate(p) == 1000.0
    assert resolve_sample_rate(p, 2000.0) == 2000.0
    (tmp_path / "bad.csv").write_text("a,b\n1,2\n")
    with pytest.raises(FormatError):
        load_iq(tmp_path / "bad.csv")


def test_spectrogram_exports(tmp_path):
    spec = center_spectrum(stft(tone(-400.0, 4000), StftConfig(256, 512, 64)))
    csv_path, meta_path = write_spectrogram(tmp_path / "s", spec)
    np.testing.assert_allclose(np.loadtxt(csv_path, delimiter=","), spec.power, rtol=1e-9)
    assert "layout=centered" in meta_path.read_text()
    px = spectrogram_pgm_pixels(spec)
    write_pgm(tmp_path / "s.pgm", px)
    back = read_pgm(tmp_path / "s.pgm")
    np.testing.assert_array_equal(back, px)
    # the tone is one bright row at its centered bin
    bright = np.nonzero(back.max(axis=1) == 255)[0]
    assert list(bright) == [256 - 16]


def test_pgm_pixel_bytes_equal_to_whitespace(tmp_path):
    px = np.full((3, 4), 32, dtype=np.uint8)
    px[0, 0] = 10
    write_pgm(tmp_path / "w.pgm", px)
    np.testing.assert_array_equal(read_pgm(tmp_path / "w.pgm"), px)
