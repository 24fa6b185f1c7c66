"""Vibration target models and the ground-truth complex-plane snapshot.

Two scene kinds share one snapshot contract: a discrete set of point
scatterers (each occupying exactly one grid cell) and a continuous
simply-supported Kirchhoff plate whose transverse vibration is a
superposition of principal modes. The snapshot T(x, t) carries the
vibration purely in phase: T = reflectivity * exp(j 2 k w(x,t) A), with
w the out-of-plane displacement and A the line-of-sight angle factor.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .fieldgrid import ComplexGrid


def angle_factor(alpha, beta, alphaQ, betaQ):
    """Projection of the vibration direction on the radar line of sight.

    A = cos(beta) cos(betaQ) cos(alpha - alphaQ) + sin(beta) sin(betaQ);
    equals 1 when radar and vibration direction are both boresight.
    """
    return np.cos(beta) * np.cos(betaQ) * np.cos(alpha - alphaQ) + np.sin(
        beta
    ) * np.sin(betaQ)


@dataclass(frozen=True)
class VibrationComponent:
    """One Fourier term of a periodic vibration: Z cos(2 pi f t + phi)."""

    amplitude: float
    frequency: float
    phase: float = 0.0

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError("amplitude must be non-negative")
        if not self.frequency > 0:
            raise ValueError("frequency must be positive")


def fourier_series_eval(components, t):
    """Displacement sum_n Z_n cos(2 pi f_n t + phi_n); t scalar or array."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    for comp in components:
        out = out + comp.amplitude * np.cos(
            2.0 * np.pi * comp.frequency * t + comp.phase
        )
    return out if out.shape else float(out)


@dataclass(frozen=True)
class Scatterer:
    """A point target in one grid cell with its own vibration series."""

    row: int
    col: int
    reflectivity: complex
    components: tuple
    alphaQ: float = 0.0
    betaQ: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "reflectivity", complex(self.reflectivity))


@dataclass(frozen=True)
class DiscreteTargetSet:
    """A view grid holding point scatterers, at most one per cell."""

    rows: int
    cols: int
    pitch: float
    scatterers: tuple

    def __post_init__(self):
        object.__setattr__(self, "scatterers", tuple(self.scatterers))
        cells = [(s.row, s.col) for s in self.scatterers]
        if len(set(cells)) != len(cells):
            raise ValueError("scatterer cells must be distinct")
        for s in self.scatterers:
            if not (0 <= s.row < self.rows and 0 <= s.col < self.cols):
                raise ValueError(f"scatterer cell {(s.row, s.col)} outside grid")

    def reflectivity_grid(self):
        data = np.zeros((self.rows, self.cols), dtype=np.complex128)
        for s in self.scatterers:
            data[s.row, s.col] = s.reflectivity
        return ComplexGrid(self.rows, self.cols, self.pitch, data)


@dataclass(frozen=True)
class PlateMaterial:
    """Elastic constants of the sheet; h is the HALF-thickness.

    The flexural rigidity is D0 = E h^3 / (12 (1 - mu^2)) with h the
    half-thickness, while mass terms use the full physical thickness 2h.
    Keeping both spellings explicit removes a silent factor-2 hazard.
    """

    E: float
    mu: float
    rho: float
    h: float

    def __post_init__(self):
        if not self.E > 0:
            raise ValueError("Young modulus must be positive")
        if not 0 <= self.mu < 0.5:
            raise ValueError("Poisson ratio must be in [0, 0.5)")
        if not self.rho > 0:
            raise ValueError("density must be positive")
        if not self.h > 0:
            raise ValueError("half-thickness must be positive")

    @property
    def D0(self):
        # flexural rigidity D0 = E h^3 / (12 (1 - mu^2))
        return self.E * self.h**3 / (12.0 * (1.0 - self.mu**2))

    @property
    def thickness(self):
        return 2.0 * self.h

    @property
    def areal_mass(self):
        # rho * (2h), mass per unit plate area
        return self.rho * self.thickness


def plate_mesh(a, b, shape):
    """Node-sampled plate coordinates: x in [0, a], y in [0, b], inclusive."""
    rows, cols = shape
    x = np.linspace(0.0, a, cols)
    y = np.linspace(0.0, b, rows)
    return np.meshgrid(x, y, indexing="xy")


def plate_mode_shape(i, j, a, b, material, shape):
    """Mass-normalized principal mode of the four-sided-supported sheet.

    W_ij(x, y) = A_ij sin(i pi x / a) sin(j pi y / b) with
    A_ij = 2 / sqrt(rho (2h) a b), so the mass-weighted modes are
    orthonormal: integral of rho (2h) W_ij W_mn over the plate = delta.
    """
    if i < 1 or j < 1:
        raise ValueError("mode indices must be at least 1")
    X, Y = plate_mesh(a, b, shape)
    A_ij = 2.0 / np.sqrt(material.areal_mass * a * b)
    W = A_ij * np.sin(i * np.pi * X / a) * np.sin(j * np.pi * Y / b)
    # the supported boundary is an exact zero; clear the sin(i pi) float dust
    W[0, :] = W[-1, :] = 0.0
    W[:, 0] = W[:, -1] = 0.0
    return W


def plate_eigenfrequency(i, j, a, b, material):
    """Eigenfrequency omega_ij = pi^2 (i^2/a^2 + j^2/b^2) sqrt(D0/(rho 2h)).

    The sqrt factor follows from beta^4 = rho (2h) omega^2 / D0; it
    reduces to the bare pi^2 (i^2/a^2 + j^2/b^2) form when D0 equals
    rho * thickness.
    """
    if i < 1 or j < 1:
        raise ValueError("mode indices must be at least 1")
    return (
        np.pi**2
        * (i**2 / a**2 + j**2 / b**2)
        * np.sqrt(material.D0 / material.areal_mass)
    )


def canonical_forcing(p, W, a, b, t=None):
    """Project a stress field onto a mode: q(t) = integral of p * W over the plate.

    p may be a callable p(X, Y, t) or a sampled array matching W's shape;
    quadrature is trapezoidal on the node-sampled plate mesh.
    """
    W = np.asarray(W)
    if callable(p):
        X, Y = plate_mesh(a, b, W.shape)
        vals = np.asarray(p(X, Y, t))
    else:
        vals = np.asarray(p)
    if vals.shape != W.shape:
        raise ValueError("stress field samples do not match the mode grid")
    x = np.linspace(0.0, a, W.shape[1])
    y = np.linspace(0.0, b, W.shape[0])
    return float(np.trapezoid(np.trapezoid(vals * W, x, axis=1), y))


def canonical_solution(omega, eta0, etadot0, q, dt):
    """Forced modal response eta(t) of eta'' + omega^2 eta = q(t).

    eta(t) = eta0 cos(wt) + (etadot0/w) sin(wt)
             + (1/w) \\int_0^t q(tau) sin(w (t - tau)) dtau

    The Duhamel integral is evaluated by trapezoidal quadrature, split as
    sin(w(t-tau)) = sin(wt) cos(w tau) - cos(wt) sin(w tau) so two
    cumulative integrals cover every t in O(n).
    """
    if not omega > 0:
        raise ValueError("omega must be positive")
    q = np.asarray(q, dtype=float)
    t = np.arange(q.size) * dt
    c = np.cos(omega * t)
    s = np.sin(omega * t)
    int_qc = cumulative_trapezoid(q * c, dx=dt, initial=0.0)
    int_qs = cumulative_trapezoid(q * s, dx=dt, initial=0.0)
    return eta0 * c + (etadot0 / omega) * s + (s * int_qc - c * int_qs) / omega


@dataclass(frozen=True)
class PrincipalMode:
    """One spatial mode of the plate scene and its temporal series.

    W is the dimensionless spatial profile (peak magnitude 1 for the
    factory-built kinds) so that component amplitudes are physical peak
    displacements in meters.
    """

    kind: str
    W: np.ndarray
    components: tuple
    i: int | None = None
    j: int | None = None
    cell: tuple | None = None
    attenuation_radius: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "W", np.asarray(self.W, dtype=float))


def free_mode(i, j, shape, components):
    """Analytic simply-supported mode, peak-normalized to 1."""
    if i < 1 or j < 1:
        raise ValueError("mode indices must be at least 1")
    X, Y = plate_mesh(1.0, 1.0, shape)
    W = np.sin(i * np.pi * X) * np.sin(j * np.pi * Y)
    W[0, :] = W[-1, :] = 0.0
    W[:, 0] = W[:, -1] = 0.0
    peak = np.abs(W).max()
    if peak > 0:
        W = W / peak
    return PrincipalMode(kind="analytic", W=W, components=components, i=i, j=j)


def forced_point_mode(cell, shape, components, attenuation_radius=0.0):
    """Forced vibration concentrated at one cell.

    attenuation_radius > 0 adds an isotropic Gaussian skirt
    exp(-d^2 / radius^2) in cell units around the excitation point;
    the default is a pure single-cell profile.
    """
    rows, cols = shape
    r0, c0 = cell
    if not (0 <= r0 < rows and 0 <= c0 < cols):
        raise ValueError(f"cell {cell} outside grid")
    if attenuation_radius > 0:
        rr, cc = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
        d2 = (rr - r0) ** 2 + (cc - c0) ** 2
        W = np.exp(-d2 / attenuation_radius**2)
    else:
        W = np.zeros(shape)
        W[r0, c0] = 1.0
    return PrincipalMode(
        kind="forced_point",
        W=W,
        components=components,
        cell=(r0, c0),
        attenuation_radius=attenuation_radius,
    )


@dataclass(frozen=True)
class PlateTarget:
    """Continuous sheet scene: view grid, material, and principal modes."""

    rows: int
    cols: int
    pitch: float
    a: float
    b: float
    material: PlateMaterial
    modes: tuple
    reflectivity: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        if not (self.a > 0 and self.b > 0):
            raise ValueError("plate side lengths must be positive")
        for m in self.modes:
            if m.W.shape != (self.rows, self.cols):
                raise ValueError("mode shape does not match the view grid")
        if self.reflectivity is None:
            refl = np.ones((self.rows, self.cols), dtype=np.complex128)
        else:
            refl = np.asarray(self.reflectivity, dtype=np.complex128)
            if refl.shape != (self.rows, self.cols):
                raise ValueError("reflectivity image does not match the view grid")
        object.__setattr__(self, "reflectivity", refl)

    def reflectivity_grid(self):
        return ComplexGrid(self.rows, self.cols, self.pitch, self.reflectivity)


def plate_displacement(target, t):
    """Transverse displacement w(x, y, t) = sum_m W_m(x, y) eta_m(t), meters."""
    w = np.zeros((target.rows, target.cols))
    for mode in target.modes:
        w = w + mode.W * fourier_series_eval(mode.components, t)
    return w


def displacement_field(target, t):
    """Out-of-plane displacement of either target kind at time t (meters)."""
    if isinstance(target, PlateTarget):
        return plate_displacement(target, t)
    w = np.zeros((target.rows, target.cols))
    for s in target.scatterers:
        w[s.row, s.col] = fourier_series_eval(s.components, t)
    return w


def complex_target_snapshot(target, geometry, t):
    """Ground-truth complex plane T(x, t) = reflectivity * exp(j 2 k w A).

    The vibration enters phase only, so |T| is time-invariant. The angle
    factor A projects each vibration direction on the line of sight; it
    is 1 for the boresight defaults.
    """
    k = geometry.k_lambda
    if isinstance(target, PlateTarget):
        # the plate vibrates out of plane: alphaQ = betaQ = 0
        A = angle_factor(geometry.alpha, geometry.beta, 0.0, 0.0)
        w = plate_displacement(target, t)
        data = target.reflectivity * np.exp(1j * 2.0 * k * w * A)
        return ComplexGrid(target.rows, target.cols, target.pitch, data)
    data = np.zeros((target.rows, target.cols), dtype=np.complex128)
    for s in target.scatterers:
        A = angle_factor(geometry.alpha, geometry.beta, s.alphaQ, s.betaQ)
        w = fourier_series_eval(s.components, t)
        data[s.row, s.col] = s.reflectivity * np.exp(1j * 2.0 * k * w * A)
    return ComplexGrid(target.rows, target.cols, target.pitch, data)


def single_mode_snapshot(target, mode_index, geometry, t):
    """Snapshot keeping only mode m of a plate: reflectivity * exp(j2k W_m eta_m A)."""
    mode = target.modes[mode_index]
    k = geometry.k_lambda
    A = angle_factor(geometry.alpha, geometry.beta, 0.0, 0.0)
    w = mode.W * fourier_series_eval(mode.components, t)
    data = target.reflectivity * np.exp(1j * 2.0 * k * w * A)
    return ComplexGrid(target.rows, target.cols, target.pitch, data)


# --- JSON descriptions -----------------------------------------------------


def _components_to_json(components):
    return [
        {"Z": c.amplitude, "f": c.frequency, "phi": c.phase} for c in components
    ]


def _components_from_json(items):
    return tuple(
        VibrationComponent(item["Z"], item["f"], item.get("phi", 0.0))
        for item in items
    )


def target_to_json(target):
    """Serialize a target description to a JSON-compatible dict."""
    if isinstance(target, DiscreteTargetSet):
        return {
            "type": "discrete",
            "rows": target.rows,
            "cols": target.cols,
            "pitch": target.pitch,
            "scatterers": [
                {
                    "row": s.row,
                    "col": s.col,
                    "reflectivity_re": s.reflectivity.real,
                    "reflectivity_im": s.reflectivity.imag,
                    "components": _components_to_json(s.components),
                    "alphaQ": s.alphaQ,
                    "betaQ": s.betaQ,
                }
                for s in target.scatterers
            ],
        }
    if isinstance(target, PlateTarget):
        modes = []
        for m in target.modes:
            entry = {
                "kind": m.kind,
                "components": _components_to_json(m.components),
            }
            if m.kind == "analytic":
                entry["i"] = m.i
                entry["j"] = m.j
            elif m.kind == "forced_point":
                entry["cell"] = list(m.cell)
                entry["attenuation_radius"] = m.attenuation_radius
            else:
                raise ValueError("custom modes are not JSON-serializable")
            modes.append(entry)
        return {
            "type": "plate",
            "rows": target.rows,
            "cols": target.cols,
            "pitch": target.pitch,
            "a": target.a,
            "b": target.b,
            "material": {
                "E": target.material.E,
                "mu": target.material.mu,
                "rho": target.material.rho,
                "h": target.material.h,
            },
            "modes": modes,
        }
    raise TypeError(f"unknown target type {type(target)!r}")


def target_from_json(doc):
    """Rebuild a target from a dict produced by target_to_json."""
    if doc["type"] == "discrete":
        scatterers = [
            Scatterer(
                row=s["row"],
                col=s["col"],
                reflectivity=complex(s["reflectivity_re"], s["reflectivity_im"]),
                components=_components_from_json(s["components"]),
                alphaQ=s.get("alphaQ", 0.0),
                betaQ=s.get("betaQ", 0.0),
            )
            for s in doc["scatterers"]
        ]
        return DiscreteTargetSet(doc["rows"], doc["cols"], doc["pitch"], scatterers)
    if doc["type"] == "plate":
        mat = doc["material"]
        material = PlateMaterial(mat["E"], mat["mu"], mat["rho"], mat["h"])
        shape = (doc["rows"], doc["cols"])
        modes = []
        for m in doc["modes"]:
            comps = _components_from_json(m["components"])
            if m["kind"] == "analytic":
                modes.append(free_mode(m["i"], m["j"], shape, comps))
            elif m["kind"] == "forced_point":
                modes.append(
                    forced_point_mode(
                        tuple(m["cell"]),
                        shape,
                        comps,
                        attenuation_radius=m.get("attenuation_radius", 0.0),
                    )
                )
            else:
                raise ValueError(f"unknown mode kind {m['kind']!r}")
        return PlateTarget(
            rows=doc["rows"],
            cols=doc["cols"],
            pitch=doc["pitch"],
            a=doc["a"],
            b=doc["b"],
            material=material,
            modes=modes,
        )
    raise ValueError(f"unknown target type {doc.get('type')!r}")


def save_target(path, target):
    with open(path, "w") as fh:
        json.dump(target_to_json(target), fh, indent=2)


def load_target(path):
    with open(path) as fh:
        return target_from_json(json.load(fh))
