"""Forward chain: range model, coded illumination, echo synthesis, LO mixing.

The detector output is modeled per sample as

    i(t_k) = eta * p_o^2 * sum_x P(x, t_k) T(x)
             * exp{j [2 pi f_IF t_k + 2 k (Zd + v t_k + w(x, t_k) A(x))]}
             * H(x -> x_r)  +  n(t_k)

with P the Fresnel-propagated pattern of the sample's slot, H the
target-to-receiver quadratic phase at distance Z2, and the LO conjugate
product already applied analytically (only the f_IF tone survives).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .fieldgrid import ComplexGrid, fresnel_kernel, point_response
from .patterns import pattern_indices
from .targets import (
    DiscreteTargetSet,
    PlateTarget,
    angle_factor,
    fourier_series_eval,
)

CECH_MAGIC = b"CECH"
_CECH_HEADER = struct.Struct("<4sIddQ")

_CHUNK = 4096  # samples per synthesis block; bounds the (chunk x cells) buffers


@dataclass(frozen=True)
class TimingConfig:
    """Sample interval, record length and intermediate frequency."""

    T_p: float
    N_s: int
    f_IF: float = 0.0
    t_start: float = 0.0

    def __post_init__(self):
        if not self.T_p > 0:
            raise ValueError("sample interval T_p must be positive")
        if self.N_s < 1:
            raise ValueError("record needs at least one sample")
        if self.f_IF < 0:
            raise ValueError("intermediate frequency must be non-negative")

    @property
    def f_samp(self):
        return 1.0 / self.T_p

    def sample_times(self):
        return self.t_start + np.arange(self.N_s) * self.T_p

    def demodulation_is_exact(self):
        """True when f_IF * T_p * N_s is an integer (whole IF cycles)."""
        cycles = self.f_IF * self.T_p * self.N_s
        return abs(cycles - round(cycles)) < 1e-9


@dataclass(frozen=True)
class MotionConfig:
    """Rigid translation and additive complex noise level."""

    v: float = 0.0
    theta: float = 0.0
    gamma: float = 0.0
    noise_sigma: float = 0.0

    def __post_init__(self):
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")


@dataclass
class EchoRecord:
    """One-dimensional complex detector output plus its timing metadata."""

    samples: np.ndarray
    timing: TimingConfig
    schedule_ref: dict
    eta: float = 1.0
    seed: int = 0

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.complex128)
        if self.samples.size != self.timing.N_s:
            raise ValueError("sample count does not match timing.N_s")
        if not np.all(np.isfinite(self.samples.view(float))):
            raise ValueError("echo samples must be finite")


def instantaneous_range(geometry, eta_t, alphaQ=0.0, betaQ=0.0, mode="approx"):
    """Distance radar -> displaced scatterer, exact or first order.

    exact: |Zd_vec + eta_vec| from the two pointing angle pairs;
    approx: Zd + eta_t * A, keeping only the micro-vibration term.
    """
    eta_t = np.asarray(eta_t, dtype=float)
    a, b = geometry.alpha, geometry.beta
    if mode == "approx":
        return geometry.Zd + eta_t * angle_factor(a, b, alphaQ, betaQ)
    if mode == "exact":
        Zd = geometry.Zd
        px = Zd * np.cos(b) * np.cos(a) + eta_t * np.cos(betaQ) * np.cos(alphaQ)
        py = Zd * np.sin(b) + eta_t * np.sin(betaQ)
        pz = Zd * np.cos(b) * np.sin(a) + eta_t * np.cos(betaQ) * np.sin(alphaQ)
        return np.sqrt(px**2 + py**2 + pz**2)
    raise ValueError(f"unknown range mode {mode!r}")


def range_taylor_gap(geometry, eta_t, alphaQ=0.0, betaQ=0.0):
    """Exact minus first-order range, evaluated in cancellation-free form.

    Algebraically identical to
    instantaneous_range(..., "exact") - instantaneous_range(..., "approx"):
    the squared displaced range collapses to Zd^2 + 2 Zd eta A + eta^2, so

        exact - Zd   = (2 Zd eta A + eta^2) / (root + Zd)        =: delta
        exact - approx = eta (eta - A delta) / (root + Zd)

    The rearranged form keeps the O(eta^2 / Zd) remainder meaningful where
    direct subtraction of two floats near Zd would leave only rounding noise.
    """
    Zd = geometry.Zd
    A = angle_factor(geometry.alpha, geometry.beta, alphaQ, betaQ)
    eta_t = np.asarray(eta_t, dtype=float)
    root = np.sqrt(Zd**2 + 2.0 * Zd * eta_t * A + eta_t**2)
    delta = (2.0 * Zd * eta_t * A + eta_t**2) / (root + Zd)
    return eta_t * (eta_t - A * delta) / (root + Zd)


def propagated_patterns(schedule, geometry, to_grid):
    """Fresnel-propagated pattern stack on the target plane, cached.

    Returns the (cycle_length, n_cells) matrix of pattern fields after the
    quadratic-phase kernel and source quadrature weight; constant factors
    such as exp(jkZd) or exp(jkZ1) are left to the caller so illumination
    and reference paths can share one propagation.
    """
    key = (geometry, to_grid.rows, to_grid.cols, to_grid.pitch)
    cache = getattr(schedule, "_propagated_cache", None)
    if cache is None:
        cache = {}
        schedule._propagated_cache = cache
    if key not in cache:
        src = ComplexGrid.zeros(schedule.side, schedule.side, schedule.pitch)
        kern = fresnel_kernel(geometry, src, to_grid, geometry.Z1)
        cache[key] = kern.apply_stack(schedule.stack())
    return cache[key]


def illuminate(pattern, geometry, to_grid=None):
    """Coded illumination on the target plane: exp(jkZd) * Fresnel(pattern, Z1)."""
    if to_grid is None:
        to_grid = pattern
    kern = fresnel_kernel(geometry, pattern, to_grid, geometry.Z1)
    out = kern.apply(pattern)
    return out.with_data(out.data * geometry.phase_zd)


def lo_field(timing, t, f_c, A_LO=1.0):
    """Local-oscillator field A_LO exp[j 2 pi (f_c - f_IF) t].

    synthesize_echo applies the detector product E_xr * conj(E_LO)
    analytically, so only the exp(j 2 pi f_IF t) tone appears in records.
    """
    return A_LO * np.exp(1j * 2.0 * np.pi * (f_c - timing.f_IF) * np.asarray(t))


def _scene_phase_rows(target, geometry, times, cells):
    """exp(j 2 k w(x,t) A) for a block of times, restricted to `cells`.

    cells indexes the flattened target grid; only those columns are built
    (the caller skips cells whose static factor is zero).
    """
    k = geometry.k_lambda
    if isinstance(target, PlateTarget):
        A = angle_factor(geometry.alpha, geometry.beta, 0.0, 0.0)
        w = np.zeros((times.size, cells.size))
        for mode in target.modes:
            eta_m = fourier_series_eval(mode.components, times)
            w += np.outer(eta_m, mode.W.ravel()[cells])
        return np.exp(1j * 2.0 * k * A * w)
    col_of = {int(c): i for i, c in enumerate(cells)}
    rows = np.ones((times.size, cells.size), dtype=np.complex128)
    for s in target.scatterers:
        pos = col_of.get(s.row * target.cols + s.col)
        if pos is None:
            continue
        A = angle_factor(geometry.alpha, geometry.beta, s.alphaQ, s.betaQ)
        w_s = fourier_series_eval(s.components, times)
        rows[:, pos] = np.exp(1j * 2.0 * k * A * w_s)
    return rows


def synthesize_echo(target, schedule, geometry, timing, motion=None, eta=1.0, seed=0):
    """Simulate the coherent single-pixel record of a coded-illumination scene.

    Deterministic under (config, seed); the noise stream is counter-based
    (Philox) so the record does not depend on evaluation order or chunking.
    """
    if motion is None:
        motion = MotionConfig()
    if timing.N_s > schedule.total_samples:
        raise ValueError(
            f"schedule covers {schedule.total_samples} samples, timing wants {timing.N_s}"
        )
    view = target.reflectivity_grid()
    prop = propagated_patterns(schedule, geometry, view)

    # static per-cell factor: reflectivity, receiver path, target quadrature
    H_r = point_response(geometry, view, geometry.Z2, geometry.x_r, 0.0)
    static = (view.data * H_r).ravel() * view.pitch**2
    active = np.flatnonzero(static)

    k = geometry.k_lambda
    times = timing.sample_times()
    a_of_k = pattern_indices(schedule, np.arange(timing.N_s))

    samples = np.zeros(timing.N_s, dtype=np.complex128)
    for start in range(0, timing.N_s, _CHUNK):
        if active.size == 0:
            break
        stop = min(start + _CHUNK, timing.N_s)
        t_blk = times[start:stop]
        vib = _scene_phase_rows(target, geometry, t_blk, active)
        illum = prop[a_of_k[start:stop]][:, active] * geometry.phase_zd
        samples[start:stop] = (illum * vib) @ static[active]

    tone = np.exp(1j * 2.0 * np.pi * timing.f_IF * times)
    samples *= eta * geometry.phase_round_trip * tone
    if motion.v != 0.0:
        # rigid translation shifts every cell's round trip alike
        A_v = angle_factor(geometry.alpha, geometry.beta, motion.theta, motion.gamma)
        samples *= np.exp(1j * 2.0 * k * motion.v * A_v * times)

    if motion.noise_sigma > 0.0:
        rng = np.random.Generator(np.random.Philox(key=seed))
        pair = rng.normal(size=(2, timing.N_s)) * (motion.noise_sigma / np.sqrt(2.0))
        samples = samples + pair[0] + 1j * pair[1]

    schedule_ref = {
        "coding": schedule.coding,
        "cycle_length": schedule.cycle_length,
        "samples_per_pattern": schedule.samples_per_pattern,
        "side": schedule.side,
        "pitch": schedule.pitch,
    }
    return EchoRecord(samples, timing, schedule_ref, eta=eta, seed=seed)


def write_cech(path, record):
    """Write an EchoRecord to the 32-byte-header CECH binary format."""
    header = _CECH_HEADER.pack(
        CECH_MAGIC,
        record.timing.N_s,
        record.timing.T_p,
        record.timing.f_IF,
        record.seed,
    )
    payload = np.ascontiguousarray(record.samples, dtype="<c16").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def read_cech(path, schedule_ref=None, eta=1.0):
    """Read a CECH file; timing t_start is not stored and reads back as 0."""
    with open(path, "rb") as fh:
        raw = fh.read(_CECH_HEADER.size)
        if len(raw) != _CECH_HEADER.size:
            raise ValueError(f"{path}: truncated CECH header")
        magic, n_s, t_p, f_if, seed = _CECH_HEADER.unpack(raw)
        if magic != CECH_MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        payload = fh.read(n_s * 16)
    if len(payload) != n_s * 16:
        raise ValueError(f"{path}: truncated CECH payload")
    samples = np.frombuffer(payload, dtype="<c16").astype(np.complex128)
    timing = TimingConfig(T_p=t_p, N_s=n_s, f_IF=f_if)
    return EchoRecord(samples, timing, schedule_ref or {}, eta=eta, seed=seed)
