"""Hand-crafted audio features: CQT chromagrams, MFCCs, derivative stacking,
summary statistics, segment selection, and feature fusion.

All analysis runs at 22,050 Hz mono with a 512-sample hop.  The chromagram
folds a 7-octave, 12-bins-per-octave constant-Q magnitude spectrum (from C1)
into 12 pitch classes; MFCCs use a 128-band mel filterbank and an orthonormal
DCT-II.  Variable-length clips are reduced to a fixed-size vector by cropping
a seeded 25-second segment (zero-padding shorter clips) and then taking
per-band mean/std statistics of the feature values and their time
derivatives.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

from ._rng import splitmix64

#: Target sample rate for all analysis.
ANALYSIS_RATE = 22050

#: Hop between analysis frames, in samples.
HOP = 512

#: C1 in Hz with A4 = 440; the lowest constant-Q bin.
FMIN_C1 = 440.0 * 2.0 ** (-45.0 / 12.0)

PITCH_CLASSES = ("C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B")

FEATURE_KINDS = ("chroma_stat", "mfcc_stat", "embedding", "fused")


class AudioError(ValueError):
    """Unusable audio input (too short for analysis, unsupported encoding)."""


@dataclass(frozen=True)
class AudioClip:
    samples: np.ndarray  # float64, mono
    sample_rate: int

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if self.samples.ndim != 1 or self.samples.size == 0:
            raise ValueError("samples must be a non-empty 1-D array")

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate


@dataclass(frozen=True)
class FeatureGram:
    """Time-frequency feature matrix, one row per band."""

    values: np.ndarray  # (n_bands, n_frames)
    kind: str  # "chroma" | "mfcc" | "delta" (derivative-stacked)
    hop_s: float

    def __post_init__(self):
        if self.values.ndim != 2:
            raise ValueError("gram values must be 2-D (bands x frames)")
        if self.kind == "chroma":
            if self.values.shape[0] != 12:
                raise ValueError("chroma gram must have exactly 12 bands")
            if np.any(self.values < 0):
                raise ValueError("chroma values must be nonnegative")

    @property
    def n_bands(self) -> int:
        return self.values.shape[0]

    @property
    def n_frames(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray  # float64, 1-D
    kind: str

    def __post_init__(self):
        if self.kind not in FEATURE_KINDS:
            raise ValueError(f"unknown feature kind {self.kind!r}")
        if self.values.ndim != 1:
            raise ValueError("feature vector must be 1-D")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("feature vector contains non-finite entries")

    @property
    def dim(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class FeatureMatrix:
    """Fixed-size per-clip feature vectors, row-aligned with ``clip_ids``."""

    clip_ids: tuple
    values: np.ndarray  # (n_clips, dim)
    kind: str

    def __post_init__(self):
        if self.values.ndim != 2 or self.values.shape[0] != len(self.clip_ids):
            raise ValueError("feature matrix rows must align with clip_ids")

    @property
    def dim(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class ChromaParams:
    hop: int = HOP
    fmin: float = FMIN_C1
    n_octaves: int = 7
    bins_per_octave: int = 12


@dataclass(frozen=True)
class MfccParams:
    hop: int = HOP
    n_fft: int = 2048
    n_mfcc: int = 20
    n_mels: int = 128
    fmin: float = 0.0
    fmax: float | None = None  # defaults to Nyquist
    log_floor: float = 1e-10


def load_wav(path) -> AudioClip:
    """Read a PCM or float WAV into a mono float64 clip (no resampling)."""
    rate, data = wavfile.read(path)
    if data.dtype == np.int16:
        samples = data / 32768.0
    elif data.dtype == np.int32:
        samples = data / 2147483648.0
    elif data.dtype == np.uint8:
        samples = (data.astype(np.float64) - 128.0) / 128.0
    elif data.dtype in (np.float32, np.float64):
        samples = data.astype(np.float64)
    else:
        raise AudioError(f"unsupported WAV sample format {data.dtype}")
    if samples.ndim == 2:
        samples = samples.mean(axis=1)
    return AudioClip(samples=np.ascontiguousarray(samples, dtype=np.float64), sample_rate=int(rate))


def resample(clip: AudioClip, target_rate: int = ANALYSIS_RATE) -> AudioClip:
    """Polyphase resampling to ``target_rate`` (identity if already there)."""
    if clip.sample_rate == target_rate:
        return clip
    g = np.gcd(int(clip.sample_rate), int(target_rate))
    out = resample_poly(clip.samples, target_rate // g, clip.sample_rate // g)
    return AudioClip(samples=np.asarray(out, dtype=np.float64), sample_rate=target_rate)


def select_segment(clip: AudioClip, target_s: float = 25.0, seed: int = 0) -> AudioClip:
    """Crop a fixed-length segment (seeded-uniform start) or zero-pad the tail.

    The start offset is ``splitmix64(seed) % n_possible_starts`` so that any
    tool implementing the same rule reproduces identical crop boundaries.
    """
    if target_s <= 0:
        raise ValueError("target_s must be positive")
    target_n = int(round(target_s * clip.sample_rate))
    n = clip.samples.size
    if n >= target_n:
        start = splitmix64(seed) % (n - target_n + 1)
        samples = clip.samples[start : start + target_n]
    else:
        samples = np.concatenate([clip.samples, np.zeros(target_n - n)])
    return AudioClip(samples=np.ascontiguousarray(samples), sample_rate=clip.sample_rate)


def _hann(n: int) -> np.ndarray:
    # Periodic Hann window, the STFT convention.
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def cqt_frequencies(params: ChromaParams) -> np.ndarray:
    n_bins = params.n_octaves * params.bins_per_octave
    return params.fmin * 2.0 ** (np.arange(n_bins) / params.bins_per_octave)


def _cqt_window_lengths(params: ChromaParams, sr: int) -> np.ndarray:
    q = 1.0 / (2.0 ** (1.0 / params.bins_per_octave) - 1.0)
    return np.round(q * sr / cqt_frequencies(params)).astype(int)


@lru_cache(maxsize=8)
def _cqt_spectral_kernel(params: ChromaParams, sr: int) -> tuple[np.ndarray, int]:
    """Conjugated spectral kernel for the constant-Q transform.

    Each row is the FFT of a Hann-windowed complex exponential at one CQT
    center frequency, length-normalized, centered inside an FFT frame of
    ``n_fft`` samples; a frame's CQT is then ``fft(frame) @ conj(K).T / n_fft``.
    """
    freqs = cqt_frequencies(params)
    lengths = _cqt_window_lengths(params, sr)
    n_fft = 1 << int(np.ceil(np.log2(lengths.max())))
    kernel = np.zeros((freqs.size, n_fft), dtype=np.complex128)
    for k, (f, n_k) in enumerate(zip(freqs, lengths)):
        window = _hann(n_k)
        phase = np.exp(2j * np.pi * f * np.arange(n_k) / sr)
        start = (n_fft - n_k) // 2
        kernel[k, start : start + n_k] = window * phase / n_k
    spectral = np.conj(np.fft.fft(kernel, axis=1)) / n_fft
    return spectral, n_fft


def _frame_signal(samples: np.ndarray, n_fft: int, hop: int) -> np.ndarray:
    """Centered frames with zero padding at the edges: frame t spans
    [t*hop - n_fft/2, t*hop + n_fft/2) of the original signal."""
    padded = np.concatenate([np.zeros(n_fft // 2), samples, np.zeros(n_fft // 2)])
    n_frames = 1 + samples.size // hop
    idx = np.arange(n_fft)[None, :] + hop * np.arange(n_frames)[:, None]
    return padded[idx]


def compute_cqt_magnitudes(clip: AudioClip, params: ChromaParams | None = None) -> np.ndarray:
    """Constant-Q magnitude spectrogram, (n_bins x n_frames)."""
    params = params or ChromaParams()
    sr = clip.sample_rate
    lengths = _cqt_window_lengths(params, sr)
    if clip.samples.size < lengths.max():
        raise AudioError(
            f"clip of {clip.samples.size} samples is shorter than one analysis frame "
            f"({lengths.max()} samples at {sr} Hz)"
        )
    spectral, n_fft = _cqt_spectral_kernel(params, sr)
    frames = _frame_signal(clip.samples, n_fft, params.hop)
    out = np.empty((spectral.shape[0], frames.shape[0]))
    # Chunked so the complex FFT workspace stays modest for long clips.
    chunk = 256
    for lo in range(0, frames.shape[0], chunk):
        spec = np.fft.fft(frames[lo : lo + chunk], axis=1)
        out[:, lo : lo + chunk] = np.abs(spec @ spectral.T).T
    return out


def compute_chromagram(clip: AudioClip, params: ChromaParams | None = None) -> FeatureGram:
    """12-band chromagram: constant-Q magnitudes folded into pitch classes.

    Rows are ordered C, C#, ..., B.  Each frame is scaled by its maximum so
    values lie in [0, 1]; frames with zero energy are left all-zero.
    """
    params = params or ChromaParams()
    if params.bins_per_octave != 12:
        raise ValueError("chromagram requires 12 bins per octave")
    cqt = compute_cqt_magnitudes(clip, params)
    folded = cqt.reshape(params.n_octaves, params.bins_per_octave, -1).sum(axis=0)
    peak = folded.max(axis=0)
    voiced = peak > 0
    folded[:, voiced] /= peak[voiced]
    return FeatureGram(values=folded, kind="chroma", hop_s=params.hop / clip.sample_rate)


@lru_cache(maxsize=8)
def _mel_filterbank(sr: int, n_fft: int, n_mels: int, fmin: float, fmax: float) -> np.ndarray:
    """Unit-peak triangular mel filterbank evaluated at rFFT bin frequencies."""
    def hz_to_mel(f):
        return 2595.0 * np.log10(1.0 + np.asarray(f) / 700.0)

    def mel_to_hz(m):
        return 700.0 * (10.0 ** (np.asarray(m) / 2595.0) - 1.0)

    mel_edges = np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_mels + 2)
    hz_edges = mel_to_hz(mel_edges)
    bin_freqs = np.arange(n_fft // 2 + 1) * sr / n_fft
    fb = np.zeros((n_mels, bin_freqs.size))
    for m in range(n_mels):
        lo, center, hi = hz_edges[m], hz_edges[m + 1], hz_edges[m + 2]
        rising = (bin_freqs - lo) / (center - lo)
        falling = (hi - bin_freqs) / (hi - center)
        fb[m] = np.maximum(0.0, np.minimum(rising, falling))
    return fb


def _dct_matrix(n_out: int, n_in: int) -> np.ndarray:
    # Orthonormal DCT-II.
    j = np.arange(n_out)[:, None]
    m = np.arange(n_in)[None, :]
    mat = np.cos(np.pi * j * (2 * m + 1) / (2 * n_in))
    mat *= np.sqrt(2.0 / n_in)
    mat[0] *= np.sqrt(0.5)
    return mat


def compute_mfcc(clip: AudioClip, params: MfccParams | None = None) -> FeatureGram:
    """MFCCs: Hann STFT power spectrum -> mel filterbank -> log -> DCT-II."""
    params = params or MfccParams()
    if clip.samples.size < params.n_fft:
        raise AudioError(
            f"clip of {clip.samples.size} samples is shorter than one analysis frame "
            f"({params.n_fft} samples)"
        )
    fmax = params.fmax if params.fmax is not None else clip.sample_rate / 2.0
    frames = _frame_signal(clip.samples, params.n_fft, params.hop)
    spec = np.abs(np.fft.rfft(frames * _hann(params.n_fft), axis=1)) ** 2
    fb = _mel_filterbank(clip.sample_rate, params.n_fft, params.n_mels, params.fmin, fmax)
    mel_energy = spec @ fb.T
    log_mel = np.log(np.maximum(mel_energy, params.log_floor))
    mfcc = log_mel @ _dct_matrix(params.n_mfcc, params.n_mels).T
    return FeatureGram(values=mfcc.T, kind="mfcc", hop_s=params.hop / clip.sample_rate)


def stack_derivatives(gram: FeatureGram, max_order: int) -> FeatureGram:
    """Stack the gram with its temporal differences up to ``max_order``.

    Order-k rows are k-fold first differences, front-padded with k zeros so
    every block keeps the original frame count.  Band count multiplies by
    (max_order + 1); block order is original, then order 1, 2, ...
    """
    if max_order < 0:
        raise ValueError("max_order must be nonnegative")
    if gram.n_frames <= max_order:
        raise AudioError(f"need more than {max_order} frames, got {gram.n_frames}")
    blocks = [gram.values]
    diffs = gram.values
    for order in range(1, max_order + 1):
        diffs = np.diff(diffs, axis=1)
        blocks.append(np.concatenate([np.zeros((gram.n_bands, order)), diffs], axis=1))
    stacked = np.concatenate(blocks, axis=0)
    # Derivative rows may be negative, so a stacked chroma gram no longer
    # satisfies the chroma invariants; tag it as a derivative stack.
    kind = gram.kind if max_order == 0 else "delta"
    return FeatureGram(values=stacked, kind=kind, hop_s=gram.hop_s)


def summarize_stats(gram: FeatureGram, derivative_orders: int) -> FeatureVector:
    """Per-band mean and population std of the gram and its time derivatives.

    Output dimension is n_bands * (derivative_orders + 1) * 2, laid out
    derivative-order major: for each order, for each band, (mean, std).
    """
    if gram.n_frames < 2:
        raise AudioError("summary statistics need at least 2 frames")
    stacked = stack_derivatives(gram, derivative_orders)
    means = stacked.values.mean(axis=1)
    stds = stacked.values.std(axis=1)  # population convention (divide by n)
    values = np.empty(2 * means.size)
    values[0::2] = means
    values[1::2] = stds
    kind = "chroma_stat" if gram.kind == "chroma" else "mfcc_stat"
    return FeatureVector(values=values, kind=kind)


def concat_features(a: FeatureVector, b: FeatureVector) -> FeatureVector:
    """Concatenate two feature vectors (a first, then b) into a fused vector."""
    return FeatureVector(values=np.concatenate([a.values, b.values]), kind="fused")
