"""Physical-plane complex grids, Fresnel propagation kernels, and the system PSF.

All planes are square-cell grids centered on the optical axis. Cell (r, c)
sits at transverse position ((c - cols/2) * pitch, (r - rows/2) * pitch),
so flattened (row-major) vectors line up with the dense propagation
matrices built here.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

CGRD_MAGIC = b"CGRD"
# magic, rows, cols, reserved (pad to the documented 24-byte header), pitch
_CGRD_HEADER = struct.Struct("<4sIIId")


@dataclass(frozen=True)
class ComplexGrid:
    """A sampled 2D complex field on a plane with physical pitch (meters)."""

    rows: int
    cols: int
    pitch: float
    data: np.ndarray

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("grid must have at least one row and one column")
        if not self.pitch > 0:
            raise ValueError("pitch must be positive")
        arr = np.asarray(self.data, dtype=np.complex128)
        if arr.size != self.rows * self.cols:
            raise ValueError(
                f"data has {arr.size} cells, expected {self.rows * self.cols}"
            )
        object.__setattr__(self, "data", arr.reshape(self.rows, self.cols))

    @classmethod
    def zeros(cls, rows, cols, pitch):
        return cls(rows, cols, pitch, np.zeros((rows, cols), dtype=np.complex128))

    @property
    def n_cells(self):
        return self.rows * self.cols

    @property
    def x_coords(self):
        """Transverse x of each column (meters)."""
        return (np.arange(self.cols) - self.cols / 2) * self.pitch

    @property
    def y_coords(self):
        """Transverse y of each row (meters)."""
        return (np.arange(self.rows) - self.rows / 2) * self.pitch

    def cell_coordinates(self):
        """(X, Y) meshgrids, shape (rows, cols); X varies along columns."""
        return np.meshgrid(self.x_coords, self.y_coords, indexing="xy")

    def flat(self):
        """Row-major flattened view of the data."""
        return self.data.ravel()

    def same_shape(self, other):
        return (
            self.rows == other.rows
            and self.cols == other.cols
            and self.pitch == other.pitch
        )

    def with_data(self, data):
        return ComplexGrid(self.rows, self.cols, self.pitch, data)


@dataclass(frozen=True)
class SystemGeometry:
    """Carrier wavelength, path lengths and pointing of the sensing system.

    The constant propagation phases exp(jkZ) have arguments of order 1e7
    radians at desk scale; two float expressions of the "same" phase then
    disagree at the 1e-8 level, which is fatal to exact-recovery algebra.
    Every such factor is exposed here as a single property so the forward
    chain and the reconstruction consume identical doubles.
    """

    lambda_c: float
    Z1: float
    Z2: float
    Zd: float
    D: float = 0.01
    alpha: float = 0.0
    beta: float = 0.0
    x_r: float = 0.0

    def __post_init__(self):
        if not self.lambda_c > 0:
            raise ValueError("lambda_c must be positive")
        for name in ("Z1", "Z2", "Zd"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def k_lambda(self):
        # k = 2*pi/lambda
        return 2.0 * np.pi / self.lambda_c

    @property
    def phase_z1(self):
        """exp(j k Z1), the reference/illumination one-way factor."""
        return np.exp(1j * self.k_lambda * self.Z1)

    @property
    def phase_z2(self):
        """exp(j k Z2), the return-path factor."""
        return np.exp(1j * self.k_lambda * self.Z2)

    @property
    def phase_zd(self):
        """exp(j k Zd), the illumination offset factor."""
        return np.exp(1j * self.k_lambda * self.Zd)

    @property
    def phase_round_trip(self):
        """exp(j 2 k Zd), the echo round-trip carrier factor."""
        return np.exp(1j * 2.0 * self.k_lambda * self.Zd)


def conjugate_pitch(lambda_c, Z, side):
    """Pitch that makes the discrete Fresnel sum over `side` cells unitary.

    With k * p^2 / Z = 2*pi/side the quadratic-phase kernel reduces to a
    chirped DFT, so an orthogonal pattern basis inverts the propagation
    exactly (no aliasing inside the grid). Symmetric source/target planes
    share p = sqrt(lambda * Z / side).
    """
    if side < 1:
        raise ValueError("side must be at least 1")
    return float(np.sqrt(lambda_c * Z / side))


def desk_geometry(side=32, lambda_c=1550e-9, Z=10.0, D=0.01):
    """Default desk-scale geometry plus its conjugate grid pitch."""
    geometry = SystemGeometry(lambda_c=lambda_c, Z1=Z, Z2=Z, Zd=Z, D=D)
    return geometry, conjugate_pitch(lambda_c, Z, side)


class FresnelKernel:
    """Dense quadratic-phase propagation between two parallel planes.

    Applying the kernel computes the discretized Fresnel integral

        out(x_o) = pitch_from^2 * sum_s in(x_s)
                   * exp[ jk/(2Z) ((x_s - x_o)^2 + (y_s - y_o)^2) ]

    i.e. plain Riemann quadrature with the source-plane cell area as
    weight. Constant prefactors such as exp(jkZ) are NOT included; they
    are carried by the callers so compensation can cancel them bit-exactly.
    """

    def __init__(self, geometry, from_grid, to_grid, Z):
        if not Z > 0:
            raise ValueError("propagation distance Z must be positive")
        self.geometry = geometry
        self.from_shape = (from_grid.rows, from_grid.cols)
        self.to_shape = (to_grid.rows, to_grid.cols)
        self.from_pitch = from_grid.pitch
        self.to_pitch = to_grid.pitch
        self.Z = Z

        Xs, Ys = from_grid.cell_coordinates()
        Xo, Yo = to_grid.cell_coordinates()
        xs, ys = Xs.ravel(), Ys.ravel()
        xo, yo = Xo.ravel(), Yo.ravel()
        k = geometry.k_lambda
        # matrix[i, j] propagates source cell j to destination cell i
        self.matrix = np.exp(
            (1j * k / (2.0 * Z))
            * ((xs[None, :] - xo[:, None]) ** 2 + (ys[None, :] - yo[:, None]) ** 2)
        )
        self.weight = self.from_pitch**2

    def apply(self, field):
        """Propagate one ComplexGrid; returns a ComplexGrid on the far plane."""
        if (field.rows, field.cols) != self.from_shape:
            raise ValueError("field shape does not match kernel source plane")
        out = self.weight * (self.matrix @ field.flat())
        return ComplexGrid(self.to_shape[0], self.to_shape[1], self.to_pitch, out)

    def apply_stack(self, stack):
        """Propagate many flattened fields at once: (n, N_from) -> (n, N_to)."""
        stack = np.asarray(stack, dtype=np.complex128)
        if stack.ndim != 2 or stack.shape[1] != self.from_shape[0] * self.from_shape[1]:
            raise ValueError("stack must be (n, n_source_cells)")
        return self.weight * (stack @ self.matrix.T)


def fresnel_kernel(geometry, from_grid, to_grid, Z):
    """Build the dense Fresnel propagation operator between two planes."""
    return FresnelKernel(geometry, from_grid, to_grid, Z)


def point_response(geometry, grid, Z, x_point, y_point):
    """Quadratic-phase factor from every grid cell to a single point.

    This is the receiver-path propagation H(x_o -> x_r) evaluated at one
    transverse point; no quadrature weight is attached (the caller owns
    the target-plane cell area).
    """
    if not Z > 0:
        raise ValueError("propagation distance Z must be positive")
    X, Y = grid.cell_coordinates()
    k = geometry.k_lambda
    return np.exp(
        (1j * k / (2.0 * Z)) * ((x_point - X) ** 2 + (y_point - Y) ** 2)
    )


def sinc_psf(geometry, offsets):
    """Aperture-limited resolution profile sinc(D * x / (lambda * Z1)).

    numpy's normalized sinc puts the first zero at offset lambda*Z1/D,
    the classical single-aperture resolution limit.
    """
    if not geometry.D > 0:
        raise ValueError("aperture D must be positive")
    if not geometry.Z1 > 0:
        raise ValueError("Z1 must be positive")
    offsets = np.asarray(offsets, dtype=float)
    return np.sinc(geometry.D * offsets / (geometry.lambda_c * geometry.Z1))


def sinc_blur(field, geometry):
    """Optional finite-aperture blur: separable sinc convolution of a grid.

    The ideal-resolution reconstruction identifies target and reference
    planes and never applies this; it exists to study finite-D effects.
    Kernel rows integrate to 1 in the continuum limit (weight
    pitch * D / (lambda * Z1) per axis).
    """
    x = field.x_coords
    y = field.y_coords
    scale = geometry.D / (geometry.lambda_c * geometry.Z1)
    Bx = np.sinc(scale * (x[:, None] - x[None, :])) * (field.pitch * scale)
    By = np.sinc(scale * (y[:, None] - y[None, :])) * (field.pitch * scale)
    blurred = By @ field.data @ Bx.T
    return field.with_data(blurred)


def write_cgrd(path, grid):
    """Write a ComplexGrid to the 24-byte-header CGRD binary format."""
    header = _CGRD_HEADER.pack(CGRD_MAGIC, grid.rows, grid.cols, 0, grid.pitch)
    payload = np.ascontiguousarray(grid.data, dtype="<c16").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def read_cgrd(path):
    """Read a CGRD file back into a ComplexGrid."""
    with open(path, "rb") as fh:
        raw = fh.read(_CGRD_HEADER.size)
        if len(raw) != _CGRD_HEADER.size:
            raise ValueError(f"{path}: truncated CGRD header")
        magic, rows, cols, reserved, pitch = _CGRD_HEADER.unpack(raw)
        if magic != CGRD_MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        if reserved != 0:
            raise ValueError(f"{path}: nonzero reserved header field")
        payload = fh.read(rows * cols * 16)
    if len(payload) != rows * cols * 16:
        raise ValueError(f"{path}: truncated CGRD payload")
    data = np.frombuffer(payload, dtype="<c16").astype(np.complex128)
    return ComplexGrid(rows, cols, pitch, data)
