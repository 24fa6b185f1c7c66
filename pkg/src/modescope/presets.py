"""Canonical demo scenes: a 12-scatterer discrete set and a 3-mode plate.

Both scenes share the desk geometry (1550 nm carrier, 10 m arms) and use
the conjugate pitch of their pattern side so reconstruction is exact.
"""

from __future__ import annotations

import numpy as np

from .fieldgrid import conjugate_pitch, desk_geometry
from .forward import TimingConfig
from .patterns import flat_schedule, hadamard_patterns
from .targets import (
    DiscreteTargetSet,
    PlateMaterial,
    PlateTarget,
    Scatterer,
    VibrationComponent,
    forced_point_mode,
    free_mode,
)

# three vibration modes shared by both scenes: (amplitude m, phase rad)
MODE_AMPLITUDES = (100e-9, 500e-9, 1200e-9)
MODE_PHASES = (0.0, np.pi / 4, 5 * np.pi / 6)

DISCRETE_FREQS = (10.0, 5.0, 15.0)
PLATE_FREQS = (2.0, 4.0, 5.0)

# metadata material for the plate scene (mode motion is prescribed, so the
# material enters images and manifests, not the dynamics): 1 mm aluminum
_ALUMINUM = PlateMaterial(E=69e9, mu=0.33, rho=2700.0, h=0.5e-3)

# four scatterer cells per mode, spread over the 32 x 32 grid
_DISCRETE_CELLS = (
    ((4, 6), (9, 21), (17, 3), (26, 14)),
    ((6, 27), (14, 9), (22, 24), (29, 7)),
    ((3, 16), (12, 30), (20, 12), (28, 25)),
)


def discrete_mode_cells(mode_index):
    """Ground-truth support of one discrete vibration mode."""
    return _DISCRETE_CELLS[mode_index]


def table2_discrete_target(side=32, phases=MODE_PHASES):
    """Twelve unit scatterers in three four-cell frequency groups."""
    pitch = conjugate_pitch(1550e-9, 10.0, side)
    scatterers = []
    for cells, Z, f, phi in zip(
        _DISCRETE_CELLS, MODE_AMPLITUDES, DISCRETE_FREQS, phases
    ):
        comp = (VibrationComponent(Z, f, phi),)
        scatterers.extend(
            Scatterer(row=r, col=c, reflectivity=1.0, components=comp)
            for r, c in cells
        )
    return DiscreteTargetSet(rows=side, cols=side, pitch=pitch, scatterers=scatterers)


def table2_schedule(cycles=20, side=32):
    n = side * side
    return hadamard_patterns(side, samples_per_pattern=1, total_samples=cycles * n)


def table2_timing(cycles=20, side=32, f_samp=120.0, f_IF=30.0):
    return TimingConfig(T_p=1.0 / f_samp, N_s=cycles * side * side, f_IF=f_IF)


def table3_plate_target(side=16, phases=MODE_PHASES):
    """Three-mode plate: two forced point responses and one free mode.

    Forced Dirac at the plate center (2 Hz) and near the NE corner (4 Hz);
    free (1,1) mode over the whole face (5 Hz). Plate size equals the
    imaged patch, side x conjugate pitch.
    """
    pitch = conjugate_pitch(1550e-9, 10.0, side)
    shape = (side, side)
    modes = [
        forced_point_mode(
            (side // 2, side // 2), shape,
            [VibrationComponent(MODE_AMPLITUDES[0], PLATE_FREQS[0], phases[0])],
        ),
        forced_point_mode(
            (3, 12), shape,
            [VibrationComponent(MODE_AMPLITUDES[1], PLATE_FREQS[1], phases[1])],
        ),
        free_mode(
            1, 1, shape,
            [VibrationComponent(MODE_AMPLITUDES[2], PLATE_FREQS[2], phases[2])],
        ),
    ]
    a = side * pitch
    return PlateTarget(
        rows=side, cols=side, pitch=pitch, a=a, b=a, material=_ALUMINUM, modes=modes
    )


def table3_schedule(cycles=1, side=16, samples_per_pattern=80):
    n = side * side
    return hadamard_patterns(
        side,
        samples_per_pattern=samples_per_pattern,
        total_samples=cycles * n * samples_per_pattern,
    )


def table3_timing(n_samples, f_samp=400.0, f_IF=40.0):
    return TimingConfig(T_p=1.0 / f_samp, N_s=n_samples, f_IF=f_IF)


def sounding_schedule(side, total_samples):
    """Uncoded flat illumination used to expose vibration tones for detection."""
    pitch = conjugate_pitch(1550e-9, 10.0, side)
    return flat_schedule(side, pitch=pitch, total_samples=total_samples)


def desk_setup(side):
    """Geometry plus conjugate pitch for the standard bench."""
    return desk_geometry(side=side)
