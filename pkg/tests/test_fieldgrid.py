import numpy as np
import pytest

from modescope.fieldgrid import (
    ComplexGrid,
    SystemGeometry,
    conjugate_pitch,
    desk_geometry,
    fresnel_kernel,
    point_response,
    read_cgrd,
    sinc_blur,
    sinc_psf,
    write_cgrd,
)


def fresnel_direct(geometry, field, to_grid, Z):
    """Brute-force O(N^4) quadrature of the Fresnel sum, one cell at a time."""
    Xs, Ys = field.cell_coordinates()
    k = geometry.k_lambda
    out = np.zeros((to_grid.rows, to_grid.cols), dtype=np.complex128)
    for r in range(to_grid.rows):
        for c in range(to_grid.cols):
            xo = (c - to_grid.cols / 2) * to_grid.pitch
            yo = (r - to_grid.rows / 2) * to_grid.pitch
            phase = np.exp(1j * k / (2 * Z) * ((Xs - xo) ** 2 + (Ys - yo) ** 2))
            out[r, c] = (field.data * phase).sum() * field.pitch**2
    return out


def test_grid_validation():
    with pytest.raises(ValueError):
        ComplexGrid(0, 4, 1e-3, np.zeros(0))
    with pytest.raises(ValueError):
        ComplexGrid(2, 2, -1.0, np.zeros(4))
    with pytest.raises(ValueError):
        ComplexGrid(2, 2, 1e-3, np.zeros(5))


def test_grid_coordinates_center_and_invertibility():
    g = ComplexGrid.zeros(4, 6, 0.5)
    # cell (r, c) sits at ((c - cols/2) pitch, (r - rows/2) pitch)
    assert g.x_coords[3] == 0.0
    assert g.y_coords[2] == 0.0
    X, Y = g.cell_coordinates()
    assert X[1, 4] == (4 - 3) * 0.5
    assert Y[3, 0] == (3 - 2) * 0.5
    # the map cell -> coordinate is invertible on the grid
    recovered_c = np.rint(X / g.pitch + g.cols / 2).astype(int)
    recovered_r = np.rint(Y / g.pitch + g.rows / 2).astype(int)
    rr, cc = np.meshgrid(np.arange(4), np.arange(6), indexing="ij")
    assert np.array_equal(recovered_c, cc)
    assert np.array_equal(recovered_r, rr)


def test_geometry_validation_and_wavenumber():
    with pytest.raises(ValueError):
        SystemGeometry(lambda_c=-1.0, Z1=1, Z2=1, Zd=1)
    with pytest.raises(ValueError):
        SystemGeometry(lambda_c=1e-6, Z1=0.0, Z2=1, Zd=1)
    geo = SystemGeometry(lambda_c=1550e-9, Z1=10, Z2=10, Zd=10)
    assert geo.k_lambda == 2 * np.pi / 1550e-9
    for ph in (geo.phase_z1, geo.phase_z2, geo.phase_zd, geo.phase_round_trip):
        assert abs(abs(ph) - 1.0) < 1e-15


def test_conjugate_pitch_makes_chirp_a_dft_step():
    lam, Z, side = 1550e-9, 10.0, 32
    p = conjugate_pitch(lam, Z, side)
    k = 2 * np.pi / lam
    # k p^2 / Z = 2 pi / side is the unitary-DFT condition
    assert abs(k * p * p / Z - 2 * np.pi / side) < 1e-9


def test_fresnel_zero_field_and_rejections():
    geo, pitch = desk_geometry(8)
    g = ComplexGrid.zeros(8, 8, pitch)
    kern = fresnel_kernel(geo, g, g, geo.Z1)
    out = kern.apply(g)
    assert np.all(out.data == 0)
    with pytest.raises(ValueError):
        fresnel_kernel(geo, g, g, 0.0)
    with pytest.raises(ValueError):
        kern.apply(ComplexGrid.zeros(4, 4, pitch))


def test_fresnel_impulse_phase_is_quadratic():
    geo, pitch = desk_geometry(8)
    g = ComplexGrid.zeros(8, 8, pitch)
    data = np.zeros((8, 8), dtype=np.complex128)
    data[4, 4] = 1.0  # cell at exactly (0, 0)
    kern = fresnel_kernel(geo, g, g, geo.Z1)
    out = kern.apply(g.with_data(data))
    k = geo.k_lambda
    x = g.x_coords
    y = g.y_coords
    for c in range(8):
        expected = (k * x[c] ** 2 / (2 * geo.Z1)) % (2 * np.pi)
        got = np.angle(out.data[4, c]) % (2 * np.pi)
        diff = (got - expected + np.pi) % (2 * np.pi) - np.pi
        assert abs(diff) < 1e-9
    # off-axis row picks up the y^2 term as well
    expected = (k * (x[1] ** 2 + y[6] ** 2) / (2 * geo.Z1)) % (2 * np.pi)
    got = np.angle(out.data[6, 1]) % (2 * np.pi)
    diff = (got - expected + np.pi) % (2 * np.pi) - np.pi
    assert abs(diff) < 1e-9


def test_fresnel_matches_direct_sum_16x16():
    rng = np.random.default_rng(7)
    geo, pitch = desk_geometry(16)
    g = ComplexGrid.zeros(16, 16, pitch)
    field = g.with_data(rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16)))
    kern = fresnel_kernel(geo, g, g, geo.Z1)
    fast = kern.apply(field).data
    slow = fresnel_direct(geo, field, g, geo.Z1)
    rel = np.abs(fast - slow).max() / np.abs(slow).max()
    assert rel <= 1e-10


def test_fresnel_linearity():
    rng = np.random.default_rng(11)
    geo, pitch = desk_geometry(8)
    g = ComplexGrid.zeros(8, 8, pitch)
    kern = fresnel_kernel(geo, g, g, geo.Z1)
    for _ in range(5):
        e1 = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
        e2 = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
        a, b = rng.normal() + 1j * rng.normal(), rng.normal() + 1j * rng.normal()
        combined = kern.apply(g.with_data(a * e1 + b * e2)).data
        separate = a * kern.apply(g.with_data(e1)).data + b * kern.apply(g.with_data(e2)).data
        rel = np.abs(combined - separate).max() / np.abs(separate).max()
        assert rel < 1e-12


def test_fresnel_reciprocity_transpose():
    geo, _ = desk_geometry(6)
    a = ComplexGrid.zeros(6, 6, 1.1e-3)
    b = ComplexGrid.zeros(6, 6, 0.7e-3)
    ab = fresnel_kernel(geo, a, b, geo.Z1)
    ba = fresnel_kernel(geo, b, a, geo.Z1)
    assert np.allclose(ab.matrix, ba.matrix.T, rtol=0, atol=1e-15)


def test_fresnel_apply_stack_matches_apply():
    rng = np.random.default_rng(3)
    geo, pitch = desk_geometry(8)
    g = ComplexGrid.zeros(8, 8, pitch)
    kern = fresnel_kernel(geo, g, g, geo.Z1)
    stack = rng.normal(size=(5, 64)) + 1j * rng.normal(size=(5, 64))
    batched = kern.apply_stack(stack)
    for i in range(5):
        single = kern.apply(g.with_data(stack[i])).flat()
        assert np.allclose(batched[i], single, rtol=1e-13, atol=0)


def test_point_response_matches_kernel_row():
    geo, pitch = desk_geometry(8)
    g = ComplexGrid.zeros(8, 8, pitch)
    resp = point_response(geo, g, geo.Z2, geo.x_r, 0.0)
    # the receiver sits at a grid point, so the response equals one kernel row
    kern = fresnel_kernel(geo, g, g, geo.Z2)
    row = 4 * 8 + 4  # destination cell at (0, 0)
    assert np.allclose(resp.ravel(), kern.matrix[row], rtol=0, atol=1e-15)


def test_sinc_psf_values_and_first_zero():
    geo = SystemGeometry(lambda_c=1550e-9, Z1=10.0, Z2=10.0, Zd=10.0, D=0.01)
    assert sinc_psf(geo, 0.0) == 1.0
    first_zero = geo.lambda_c * geo.Z1 / geo.D
    assert abs(first_zero - 1.55e-3) < 1e-12
    assert abs(sinc_psf(geo, first_zero)) <= 1e-12
    with pytest.raises(ValueError):
        sinc_psf(SystemGeometry(1550e-9, 10, 10, 10, D=-1.0), 0.0)


def test_sinc_blur_of_impulse_is_psf_profile():
    geo, pitch = desk_geometry(16)
    g = ComplexGrid.zeros(16, 16, pitch)
    data = np.zeros((16, 16), dtype=np.complex128)
    data[8, 8] = 1.0
    blurred = sinc_blur(g.with_data(data), geo)
    profile = blurred.data[8, :].real
    scale = geo.D / (geo.lambda_c * geo.Z1)
    expected = np.sinc(scale * g.x_coords) * (pitch * scale)
    expected *= np.sinc(0.0) * (pitch * scale)  # y-axis factor at row center
    assert np.allclose(profile, expected, rtol=1e-12, atol=1e-15)


def test_cgrd_round_trip_and_header(tmp_path):
    rng = np.random.default_rng(5)
    g = ComplexGrid(3, 5, 2.5e-4, rng.normal(size=15) + 1j * rng.normal(size=15))
    path = tmp_path / "field.cgrd"
    write_cgrd(path, g)
    size = path.stat().st_size
    assert size == 24 + 3 * 5 * 16
    back = read_cgrd(path)
    assert back.rows == 3 and back.cols == 5 and back.pitch == 2.5e-4
    assert np.array_equal(back.data, g.data)


def test_cgrd_rejects_corruption(tmp_path):
    g = ComplexGrid.zeros(2, 2, 1e-3)
    path = tmp_path / "field.cgrd"
    write_cgrd(path, g)
    blob = bytearray(path.read_bytes())
    blob[:4] = b"XXXX"
    bad = tmp_path / "bad.cgrd"
    bad.write_bytes(bytes(blob))
    with pytest.raises(ValueError):
        read_cgrd(bad)
    trunc = tmp_path / "trunc.cgrd"
    trunc.write_bytes(path.read_bytes()[:30])
    with pytest.raises(ValueError):
        read_cgrd(trunc)
