"""Echo spectral analysis: STFT, tone detection, interval LCM, Bessel lines.

Detection feeds the interval samplers: each found frequency f gives a
per-period sample count N = round(f_samp / f), and the least common
multiple of the counts is the stationarity interval of the whole scene.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks


@dataclass(frozen=True)
class TFSpectrum:
    """Squared-magnitude short-time spectrum on the folded [0, f_samp/2] axis."""

    magnitudes: np.ndarray
    time_step: float
    freq_step: float
    window_len: int

    def __post_init__(self):
        if np.any(self.magnitudes < 0):
            raise ValueError("spectrogram magnitudes must be non-negative")

    @property
    def n_frames(self):
        return self.magnitudes.shape[0]

    @property
    def n_freqs(self):
        return self.magnitudes.shape[1]

    def frequencies(self):
        return np.arange(self.n_freqs) * self.freq_step

    def time_average(self):
        return self.magnitudes.mean(axis=0)


@dataclass(frozen=True)
class DetectedMode:
    f_mn: float
    N_mn: int
    confidence: float


@dataclass(frozen=True)
class DetectedModes:
    modes: tuple

    def __iter__(self):
        return iter(self.modes)

    def __len__(self):
        return len(self.modes)

    def frequencies(self):
        return [m.f_mn for m in self.modes]

    def counts(self):
        return [m.N_mn for m in self.modes]


def spectrogram(echo, window_len, hop=None):
    """Hann-window STFT power of the demodulated echo, negative bins folded.

    The record is first demodulated by exp(-j 2 pi f_IF t); the complex
    short-time spectra are then folded so the frequency axis runs over
    [0, f_samp/2] with |F(-f)|^2 added onto |F(+f)|^2.
    """
    if hop is None:
        hop = max(1, window_len // 2)
    if hop < 1:
        raise ValueError("hop must be at least one sample")
    timing = echo.timing
    if window_len > timing.N_s:
        raise ValueError(
            f"window of {window_len} samples exceeds record of {timing.N_s}"
        )
    t = timing.sample_times()
    sig = echo.samples * np.exp(-1j * 2.0 * np.pi * timing.f_IF * t)

    window = np.hanning(window_len)
    n_frames = 1 + (timing.N_s - window_len) // hop
    starts = np.arange(n_frames) * hop
    frames = sig[starts[:, None] + np.arange(window_len)] * window
    spec = np.fft.fft(frames, axis=1)
    power = spec.real**2 + spec.imag**2

    half = window_len // 2
    folded = np.empty((n_frames, half + 1))
    folded[:, 0] = power[:, 0]
    folded[:, half] = power[:, half] if window_len % 2 == 0 else (
        power[:, half] + power[:, half + 1]
    )
    upper = np.arange(1, half)
    folded[:, 1:half] = power[:, upper] + power[:, window_len - upper]

    return TFSpectrum(
        magnitudes=folded,
        time_step=hop * timing.T_p,
        freq_step=1.0 / (window_len * timing.T_p),
        window_len=window_len,
    )


def detect_frequencies(spec, f_samp, max_modes=8, threshold_ratio=5.0):
    """Pick vibration tones from the time-averaged spectrum.

    Peaks must rise threshold_ratio above the median floor (DC excluded);
    they are ranked by prominence, merged when within one bin, and each
    yields a per-period count N = round(f_samp / f). An empty result means
    no tone cleared the floor, which is a valid outcome, not an error.
    """
    if max_modes < 1:
        raise ValueError("max_modes must be at least 1")
    avg = spec.time_average()
    floor = np.median(avg[1:])
    if floor == 0.0:
        if np.all(avg == 0):
            return DetectedModes(())
        floor = avg[avg > 0].min()
    idx, props = find_peaks(avg, height=threshold_ratio * floor, prominence=0.0)
    if idx.size == 0:
        return DetectedModes(())

    order = np.argsort(props["prominences"])[::-1]
    kept = []
    for j in order:
        f = idx[j] * spec.freq_step
        if any(abs(f - k[0]) <= spec.freq_step for k in kept):
            continue  # within one bin of a stronger peak: merged
        conf = props["prominences"][j] / avg[idx[j]]
        kept.append((f, conf))
        if len(kept) == max_modes:
            break

    modes = []
    for f, conf in kept:
        ratio = f_samp / f
        n = int(round(ratio))
        if n < 2:
            n = 2
        if abs(ratio - n) > 1e-3 * ratio:
            warnings.warn(
                f"tone at {f:g} Hz is not an integer sample period: "
                f"f_samp/f = {ratio:.4f}, using N = {n}",
                stacklevel=2,
            )
        modes.append(DetectedMode(f_mn=f, N_mn=n, confidence=float(conf)))
    return DetectedModes(tuple(modes))


def interval_lcm(counts):
    """Least common multiple of the per-mode sample counts."""
    counts = list(counts)
    if not counts:
        raise ValueError("need at least one per-period count")
    if any(int(c) != c or c < 1 for c in counts):
        raise ValueError("per-period counts must be positive integers")
    return math.lcm(*(int(c) for c in counts))


def _bessel_j(m, B, n_nodes=4096):
    """J_m(B) by trapezoid quadrature of its integral definition.

    (1/2pi) * integral_0^2pi exp(j (B sin u - m u)) du; the integrand is
    periodic so the equispaced trapezoid rule converges spectrally.
    """
    u = np.arange(n_nodes) * (2.0 * np.pi / n_nodes)
    vals = np.exp(1j * (B * np.sin(u) - m * u))
    return float(np.real(vals.mean()))


def bessel_line_spectrum(Z_vib, lambda_c, f_v, f_IF, m_range):
    """Micro-Doppler line spectrum of a single sinusoidal vibrator.

    The round-trip phase 2k Z_vib cos(2 pi f_v t) expands into lines at
    f_IF + m f_v weighted by |J_m(B)| with B = 4 pi Z_vib / lambda.
    m_range may be an integer (symmetric |m| <= m_range) or an iterable.
    """
    if Z_vib < 0:
        raise ValueError("vibration amplitude must be non-negative")
    if isinstance(m_range, (int, np.integer)):
        orders = range(-int(m_range), int(m_range) + 1)
    else:
        orders = [int(m) for m in m_range]
    B = 4.0 * np.pi * Z_vib / lambda_c
    return [
        {"m": m, "frequency": f_IF + m * f_v, "amplitude": abs(_bessel_j(m, B))}
        for m in orders
    ]
