"""Kirchhoff plate bench: eigenfrequencies, orthonormality, forced response.

Uses the unit bench material (rigidity equal to areal mass) on the unit
square, where omega_ij = pi^2 (i^2 + j^2) exactly. Checks the
mass-weighted Gram matrix of the first modes against the identity and
integrates one forced modal equation by the Duhamel convolution, compared
against the closed-form response to a pure sinusoid.
"""

import numpy as np

from modescope.targets import (
    PlateMaterial,
    canonical_forcing,
    canonical_solution,
    plate_eigenfrequency,
    plate_mode_shape,
)

# E h^3 / 12 = 1 and rho 2h = 1 with mu = 0: frequencies in units of pi^2
material = PlateMaterial(E=96.0, mu=0.0, rho=1.0, h=0.5)
a = b = 1.0

print("eigenfrequencies omega_ij / pi^2 (unit plate, unit stiffness):")
for i in range(1, 4):
    row = [plate_eigenfrequency(i, j, a, b, material) / np.pi**2
           for j in range(1, 4)]
    print("  " + "  ".join(f"{w:6.3f}" for w in row))
print(f"omega_11 = {plate_eigenfrequency(1, 1, a, b, material):.12f}"
      f"  (2 pi^2 = {2 * np.pi**2:.12f})")

# mass-weighted Gram matrix of the first 3 x 3 modes on a 128 x 128 mesh;
# trapezoid weights halve the boundary nodes
n = 128
modes = [plate_mode_shape(i, j, a, b, material, (n, n)).ravel()
         for i in range(1, 4) for j in range(1, 4)]
stack = np.array(modes)
w1d = np.full(n, 1.0 / (n - 1))
w1d[0] = w1d[-1] = 0.5 / (n - 1)
weights = np.outer(w1d, w1d).ravel()
gram = material.areal_mass * (stack * weights) @ stack.T
gap = np.abs(gram - np.eye(len(modes))).max()
print(f"\nGram matrix deviation from identity ({n} x {n} mesh): {gap:.2e}")

# uniform pressure drives only the odd-odd modes
W11 = plate_mode_shape(1, 1, a, b, material, (n, n))
W12 = plate_mode_shape(1, 2, a, b, material, (n, n))
p_uniform = np.ones((n, n))
q11 = canonical_forcing(p_uniform, W11, a, b)
q12 = canonical_forcing(p_uniform, W12, a, b)
print(f"\nuniform pressure projections: q_11 = {q11:.6f}, q_12 = {q12:.2e}")

# Duhamel response to q(t) = q0 sin(Omega t) from rest, against the closed
# form q0 / (w^2 - Omega^2) * (sin(Omega t) - (Omega / w) sin(w t))
omega = plate_eigenfrequency(1, 1, a, b, material)
Omega = 7.0
q0 = 0.4
dt = 5e-4
t = np.arange(0.0, 4.0, dt)
eta = canonical_solution(omega, 0.0, 0.0, q0 * np.sin(Omega * t), dt)
closed = q0 / (omega**2 - Omega**2) * (
    np.sin(Omega * t) - (Omega / omega) * np.sin(omega * t)
)
err = np.abs(eta - closed).max()
print(f"\nDuhamel vs closed form, Omega = {Omega:g} rad/s, dt = {dt:g}:")
print(f"  peak response {np.abs(eta).max():.3e} m, max deviation {err:.2e}")
