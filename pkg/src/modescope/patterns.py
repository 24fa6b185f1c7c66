"""Coded illumination pattern sets and the sample -> pattern correspondence.

Hadamard rows are used directly as +/-1 field amplitudes. The synthesis
identity sum_a p_a(x) p_a(x') = N_cells * delta_{x,x'} is what stands in
for a delta-correlated source in the correlation algebra, so no 0/1
remapping is ever applied.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import hadamard

from .fieldgrid import ComplexGrid, conjugate_pitch, read_cgrd, write_cgrd

DEFAULT_LAMBDA = 1550e-9
DEFAULT_Z = 10.0


@dataclass
class PatternSchedule:
    """Ordered source-plane patterns plus the sample -> pattern map."""

    patterns: list
    samples_per_pattern: int
    total_samples: int
    coding: str = "custom"
    seed: int | None = None

    def __post_init__(self):
        if not self.patterns:
            raise ValueError("schedule needs at least one pattern")
        if self.samples_per_pattern < 1:
            raise ValueError("samples_per_pattern must be at least 1")
        if self.total_samples < 1:
            raise ValueError("total_samples must be at least 1")
        first = self.patterns[0]
        for p in self.patterns[1:]:
            if not first.same_shape(p):
                raise ValueError("all patterns must share shape and pitch")
        self._stack = None

    @property
    def cycle_length(self):
        return len(self.patterns)

    @property
    def side(self):
        return self.patterns[0].rows

    @property
    def pitch(self):
        return self.patterns[0].pitch

    @property
    def n_cells(self):
        return self.patterns[0].n_cells

    @property
    def samples_per_cycle(self):
        return self.cycle_length * self.samples_per_pattern

    def stack(self):
        """(cycle_length, n_cells) matrix of flattened patterns (cached)."""
        if self._stack is None:
            self._stack = np.vstack([p.flat() for p in self.patterns])
        return self._stack


def pattern_for_sample(schedule, sample_index):
    """Pattern index illuminating the given sample; patterns cycle."""
    if not 0 <= sample_index < schedule.total_samples:
        raise ValueError(
            f"sample_index {sample_index} outside [0, {schedule.total_samples})"
        )
    return (sample_index // schedule.samples_per_pattern) % schedule.cycle_length


def pattern_indices(schedule, sample_indices):
    """Vectorized pattern_for_sample for an array of sample indices."""
    idx = np.asarray(sample_indices)
    if idx.size and (idx.min() < 0 or idx.max() >= schedule.total_samples):
        raise ValueError("sample indices outside schedule range")
    return (idx // schedule.samples_per_pattern) % schedule.cycle_length


def hadamard_patterns(side, pitch=None, samples_per_pattern=1, total_samples=None):
    """side^2 Sylvester-Hadamard patterns of shape side x side.

    Requires side^2 to be a power of two (Sylvester construction). The
    default pitch is the conjugate pitch of the desk geometry, under which
    the full pattern cycle inverts the Fresnel chain exactly.
    """
    n = side * side
    if n < 1 or (n & (n - 1)) != 0:
        raise ValueError(
            f"side^2 = {n} is not a power of two; Sylvester Hadamard unavailable"
        )
    if pitch is None:
        pitch = conjugate_pitch(DEFAULT_LAMBDA, DEFAULT_Z, side)
    H = hadamard(n).astype(np.complex128)
    pats = [ComplexGrid(side, side, pitch, H[a].reshape(side, side)) for a in range(n)]
    if total_samples is None:
        total_samples = n * samples_per_pattern
    return PatternSchedule(
        pats, samples_per_pattern, total_samples, coding="hadamard"
    )


def random_speckle_patterns(
    side, n, seed, pitch=None, samples_per_pattern=1, total_samples=None
):
    """n unit-magnitude random-phase patterns; deterministic under seed."""
    if n < 1:
        raise ValueError("need at least one pattern")
    if pitch is None:
        pitch = conjugate_pitch(DEFAULT_LAMBDA, DEFAULT_Z, side)
    rng = np.random.default_rng(seed)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=(n, side, side))
    pats = [ComplexGrid(side, side, pitch, np.exp(1j * phases[a])) for a in range(n)]
    if total_samples is None:
        total_samples = n * samples_per_pattern
    return PatternSchedule(
        pats, samples_per_pattern, total_samples, coding="speckle", seed=seed
    )


def flat_schedule(side, pitch=None, total_samples=1):
    """Single all-ones pattern: uncoded (sounding) illumination."""
    if pitch is None:
        pitch = conjugate_pitch(DEFAULT_LAMBDA, DEFAULT_Z, side)
    ones = ComplexGrid(side, side, pitch, np.ones((side, side), dtype=np.complex128))
    return PatternSchedule([ones], 1, total_samples, coding="flat")


def save_schedule(dirpath, schedule):
    """Write a schedule as numbered CGRD files plus a JSON manifest."""
    os.makedirs(dirpath, exist_ok=True)
    width = max(5, len(str(schedule.cycle_length - 1)))
    names = []
    for a, pat in enumerate(schedule.patterns):
        name = f"pattern_{a:0{width}d}.cgrd"
        write_cgrd(os.path.join(dirpath, name), pat)
        names.append(name)
    manifest = {
        "coding": schedule.coding,
        "side": schedule.side,
        "n_patterns": schedule.cycle_length,
        "samples_per_pattern": schedule.samples_per_pattern,
        "total_samples": schedule.total_samples,
        "pitch": schedule.pitch,
        "seed": schedule.seed,
        "files": names,
    }
    with open(os.path.join(dirpath, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2)


def load_schedule(dirpath):
    """Read back a schedule written by save_schedule."""
    with open(os.path.join(dirpath, "manifest.json")) as fh:
        manifest = json.load(fh)
    pats = [read_cgrd(os.path.join(dirpath, name)) for name in manifest["files"]]
    schedule = PatternSchedule(
        pats,
        manifest["samples_per_pattern"],
        manifest["total_samples"],
        coding=manifest["coding"],
        seed=manifest["seed"],
    )
    if schedule.cycle_length != manifest["n_patterns"]:
        raise ValueError("manifest n_patterns disagrees with pattern files")
    return schedule
