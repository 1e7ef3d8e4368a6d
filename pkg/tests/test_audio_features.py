import numpy as np
import pytest
import scipy.fftpack
import scipy.io.wavfile

from mergap._rng import splitmix64
from mergap.audio_features import (
    ANALYSIS_RATE,
    AudioClip,
    AudioError,
    ChromaParams,
    FeatureGram,
    FeatureVector,
    MfccParams,
    compute_cqt_magnitudes,
    compute_chromagram,
    compute_mfcc,
    concat_features,
    cqt_frequencies,
    load_wav,
    resample,
    select_segment,
    stack_derivatives,
    summarize_stats,
)


def tone(freq, seconds=2.0, sr=ANALYSIS_RATE, amp=0.8):
    t = np.arange(int(sr * seconds)) / sr
    return AudioClip(samples=amp * np.sin(2 * np.pi * freq * t), sample_rate=sr)


class TestWavLoading:
    def test_int16(self, tmp_path):
        sr = 8000
        data = (np.sin(2 * np.pi * 440 * np.arange(sr) / sr) * 20000).astype(np.int16)
        scipy.io.wavfile.write(tmp_path / "a.wav", sr, data)
        clip = load_wav(tmp_path / "a.wav")
        assert clip.sample_rate == sr
        assert np.abs(clip.samples).max() <= 1.0
        assert clip.samples.dtype == np.float64

    def test_stereo_is_averaged(self, tmp_path):
        sr = 8000
        left = np.full(100, 10000, dtype=np.int16)
        right = np.full(100, -10000, dtype=np.int16)
        scipy.io.wavfile.write(tmp_path / "s.wav", sr, np.stack([left, right], axis=1))
        clip = load_wav(tmp_path / "s.wav")
        assert clip.samples.shape == (100,)
        assert np.allclose(clip.samples, 0.0)

    def test_float32_passthrough(self, tmp_path):
        sr = 8000
        data = np.linspace(-0.5, 0.5, 64, dtype=np.float32)
        scipy.io.wavfile.write(tmp_path / "f.wav", sr, data)
        clip = load_wav(tmp_path / "f.wav")
        assert np.allclose(clip.samples, data, atol=1e-7)

    def test_resample_halves_length(self):
        clip = tone(440, seconds=1.0, sr=44100)
        out = resample(clip, 22050)
        assert out.sample_rate == 22050
        assert out.samples.shape[0] == 22050


class TestSegment:
    def test_exact_length_and_slice(self):
        clip = tone(220, seconds=3.0)
        seg = select_segment(clip, target_s=1.0, seed=9)
        n = round(1.0 * clip.sample_rate)
        assert seg.samples.shape[0] == n
        start = splitmix64(9) % (clip.samples.shape[0] - n + 1)
        assert np.array_equal(seg.samples, clip.samples[start : start + n])

    def test_deterministic(self):
        clip = tone(220, seconds=3.0)
        a = select_segment(clip, 1.0, seed=4)
        b = select_segment(clip, 1.0, seed=4)
        assert np.array_equal(a.samples, b.samples)

    def test_short_clip_zero_padded(self):
        clip = tone(220, seconds=0.5)
        seg = select_segment(clip, 1.0, seed=0)
        n = round(1.0 * clip.sample_rate)
        assert seg.samples.shape[0] == n
        assert np.array_equal(seg.samples[: clip.samples.shape[0]], clip.samples)
        assert np.all(seg.samples[clip.samples.shape[0] :] == 0.0)


class TestChroma:
    def test_semitone_sweep_maps_to_pitch_classes(self):
        c4 = 261.6255653005986
        for k in range(12):
            gram = compute_chromagram(tone(c4 * 2 ** (k / 12), seconds=1.0))
            assert int(np.argmax(gram.values.mean(axis=1))) == k

    def test_octave_folding(self):
        # A3, A4, A5 all land on pitch class 9
        for freq in (220.0, 440.0, 880.0):
            gram = compute_chromagram(tone(freq, seconds=1.0))
            assert int(np.argmax(gram.values.mean(axis=1))) == 9

    def test_shape_and_range(self):
        clip = tone(330, seconds=1.5)
        gram = compute_chromagram(clip)
        assert gram.values.shape == (12, 1 + clip.samples.shape[0] // 512)
        assert gram.kind == "chroma"
        assert gram.values.min() >= 0.0
        assert gram.values.max() <= 1.0 + 1e-12

    def test_silence_stays_zero(self):
        clip = AudioClip(samples=np.zeros(ANALYSIS_RATE), sample_rate=ANALYSIS_RATE)
        gram = compute_chromagram(clip)
        assert np.all(gram.values == 0.0)

    def test_too_short_input(self):
        clip = AudioClip(samples=np.zeros(100), sample_rate=ANALYSIS_RATE)
        with pytest.raises(AudioError, match="short"):
            compute_chromagram(clip)

    def test_cqt_against_time_domain_correlation(self):
        """Spectral-kernel CQT must equal direct windowed correlation."""
        params = ChromaParams()
        clip = tone(293.66, seconds=0.6)  # D4
        got = compute_cqt_magnitudes(clip, params)

        sr = clip.sample_rate
        freqs = cqt_frequencies(params)
        q = 1.0 / (2.0 ** (1.0 / params.bins_per_octave) - 1.0)
        lengths = np.round(q * sr / freqs).astype(int)
        n_fft = int(2 ** np.ceil(np.log2(lengths.max())))
        hop = params.hop
        padded = np.concatenate([np.zeros(n_fft // 2), clip.samples, np.zeros(n_fft // 2)])
        n_frames = 1 + clip.samples.shape[0] // hop
        expected = np.zeros((len(freqs), n_frames))
        for b, (f, n_k) in enumerate(zip(freqs, lengths)):
            t = np.arange(n_k)
            win = 0.5 - 0.5 * np.cos(2 * np.pi * t / n_k)
            kernel = win * np.exp(2j * np.pi * f * t / sr) / n_k
            offset = (n_fft - n_k) // 2
            for frame in range(n_frames):
                chunk = padded[frame * hop + offset : frame * hop + offset + n_k]
                expected[b, frame] = np.abs(np.sum(chunk * np.conj(kernel)))
        assert np.allclose(got, expected, atol=1e-9)


class TestMfcc:
    def test_shape(self):
        clip = tone(440, seconds=1.0)
        gram = compute_mfcc(clip)
        assert gram.values.shape == (20, 1 + clip.samples.shape[0] // 512)
        assert gram.kind == "mfcc"

    def test_against_independent_pipeline(self):
        """Re-derive MFCCs with scipy's DCT and a loop-built filterbank."""
        params = MfccParams()
        clip = tone(523.25, seconds=0.6)
        got = compute_mfcc(clip, params).values

        sr = clip.sample_rate
        n_fft, hop = params.n_fft, params.hop
        samples = np.concatenate([np.zeros(n_fft // 2), clip.samples, np.zeros(n_fft // 2)])
        n_frames = 1 + clip.samples.shape[0] // hop
        k = np.arange(n_fft)
        window = 0.5 - 0.5 * np.cos(2 * np.pi * k / n_fft)
        power = np.empty((n_frames, n_fft // 2 + 1))
        for i in range(n_frames):
            frame = samples[i * hop : i * hop + n_fft] * window
            power[i] = np.abs(np.fft.rfft(frame)) ** 2

        def mel(f):
            return 2595.0 * np.log10(1.0 + f / 700.0)

        def imel(m):
            return 700.0 * (10.0 ** (m / 2595.0) - 1.0)

        fmax = sr / 2.0
        pts = imel(np.linspace(mel(0.0), mel(fmax), params.n_mels + 2))
        bin_freqs = np.arange(n_fft // 2 + 1) * sr / n_fft
        fb = np.zeros((params.n_mels, n_fft // 2 + 1))
        for m in range(params.n_mels):
            lo, center, hi = pts[m], pts[m + 1], pts[m + 2]
            for b, f in enumerate(bin_freqs):
                if lo < f < hi:
                    fb[m, b] = (f - lo) / (center - lo) if f <= center else (hi - f) / (hi - center)
        logmel = np.log(np.maximum(power @ fb.T, params.log_floor))
        expected = scipy.fftpack.dct(logmel, type=2, norm="ortho", axis=1)[:, : params.n_mfcc].T
        assert np.allclose(got, expected, atol=1e-6)

    def test_too_short_input(self):
        clip = AudioClip(samples=np.zeros(512), sample_rate=ANALYSIS_RATE)
        with pytest.raises(AudioError):
            compute_mfcc(clip)


class TestDerivativesAndStats:
    def gram(self, values, kind="mfcc"):
        return FeatureGram(values=np.asarray(values, dtype=np.float64), kind=kind,
                           hop_s=512 / ANALYSIS_RATE)

    def test_stack_hand_case(self):
        g = self.gram([[1.0, 2.0, 4.0]])
        out = stack_derivatives(g, 2)
        assert out.kind == "delta"
        assert np.array_equal(out.values, [[1, 2, 4], [0, 1, 2], [0, 0, 1]])

    def test_stack_order_zero_is_identity(self):
        g = self.gram([[1.0, 2.0, 4.0], [0.0, 1.0, 0.0]])
        out = stack_derivatives(g, 0)
        assert out.kind == "mfcc"
        assert np.array_equal(out.values, g.values)

    def test_stack_rejects_too_few_frames(self):
        with pytest.raises(ValueError):
            stack_derivatives(self.gram([[1.0, 2.0]]), 2)

    def test_summarize_layout(self):
        g = self.gram([[1.0, 2.0, 3.0], [5.0, 5.0, 5.0]])
        vec = summarize_stats(g, 0)
        # order-major, then band, interleaved (mean, std); std is population
        assert vec.dim == 4
        assert vec.values[0] == pytest.approx(2.0)
        assert vec.values[1] == pytest.approx(np.sqrt(2.0 / 3.0))
        assert vec.values[2] == pytest.approx(5.0)
        assert vec.values[3] == 0.0
        assert vec.kind == "mfcc_stat"

    def test_summarize_dims(self):
        chroma = compute_chromagram(tone(440, seconds=1.0))
        assert summarize_stats(chroma, 2).dim == 72
        assert summarize_stats(chroma, 2).kind == "chroma_stat"
        mfcc = compute_mfcc(tone(440, seconds=1.0))
        assert summarize_stats(mfcc, 3).dim == 160

    def test_summarize_matches_stack(self):
        g = self.gram(np.random.Generator(np.random.PCG64(1)).standard_normal((3, 16)))
        stacked = stack_derivatives(g, 2)
        vec = summarize_stats(g, 2)
        assert np.allclose(vec.values[0::2], stacked.values.mean(axis=1))
        assert np.allclose(vec.values[1::2], stacked.values.std(axis=1))

    def test_concat(self):
        a = FeatureVector(values=np.zeros(3), kind="chroma_stat")
        b = FeatureVector(values=np.ones(2), kind="embedding")
        out = concat_features(a, b)
        assert out.dim == 5
        assert out.kind == "fused"


class TestValidation:
    def test_empty_clip_rejected(self):
        with pytest.raises(ValueError):
            AudioClip(samples=np.array([]), sample_rate=22050)

    def test_chroma_gram_must_have_12_bands(self):
        with pytest.raises(ValueError):
            FeatureGram(values=np.zeros((13, 4)), kind="chroma", hop_s=0.02)

    def test_feature_vector_rejects_non_finite(self):
        with pytest.raises(ValueError):
            FeatureVector(values=np.array([1.0, np.nan]), kind="embedding")
