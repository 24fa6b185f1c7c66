"""modescope: micro-vibration mode imaging by first-order field correlation.

Simulates coded-illumination echoes of vibrating targets (discrete point
scatterers or a Kirchhoff plate) and reconstructs per-mode spatial
distributions from the single-pixel detector record.
"""

__version__ = "0.1.0"
