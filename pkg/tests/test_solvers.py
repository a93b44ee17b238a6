import numpy as np
import pytest

from compactwave.mesh import build_uniform_axis
from compactwave.operators import (
    GridFunction,
    TridiagonalFactor,
    step_factor,
    stiffness_sum,
    sum_average,
    tridiag_second_diff,
)
from compactwave.solvers import (
    SingularSystemError,
    SpectralHandle,
    SplittingHandle,
    assemble_dense_operator,
    dense_solve_oracle,
    dst1,
    dst_diagonal_solve,
    idst1,
    pair_spectra,
    sine_coefficients,
    sine_spectrum,
    splitting_solve,
    thomas_solve,
)


def identity_factor(n):
    return TridiagonalFactor(0, np.zeros(n), np.ones(n), np.zeros(n))


def neg_second_diff_factor(mesh):
    lo, di, hi = tridiag_second_diff(mesh)
    return TridiagonalFactor(0, -lo, -di, -hi)


# ---------------------------------------------------------------------------
# tridiagonal solves


def test_thomas_identity():
    rhs = np.array([1.0, -2.0, 3.0])
    assert np.allclose(thomas_solve(identity_factor(3), rhs), rhs)


def test_thomas_vs_dense_neg_laplacian():
    mesh = build_uniform_axis(4, 1.0)
    factor = neg_second_diff_factor(mesh)
    rhs = np.ones(3)
    got = thomas_solve(factor, rhs)
    expected = dense_solve_oracle(factor.dense(), rhs)
    assert np.max(np.abs(got - expected)) < 1e-13


def test_thomas_random_dominant_residual():
    rng = np.random.default_rng(0)
    n = 10
    lo = rng.uniform(-1, 1, n)
    hi = rng.uniform(-1, 1, n)
    di = 3.0 + rng.uniform(0, 1, n)
    factor = TridiagonalFactor(0, lo, di, hi)
    rhs = rng.standard_normal(n)
    x = thomas_solve(factor, rhs)
    full = np.zeros(n + 2)
    full[1:-1] = x
    residual = factor.apply(full) - rhs
    assert np.max(np.abs(residual)) <= 1e-12 * np.max(np.abs(rhs))


def test_thomas_multiple_columns():
    rng = np.random.default_rng(1)
    mesh = build_uniform_axis(9, 1.0)
    factor = neg_second_diff_factor(mesh)
    rhs = rng.standard_normal((8, 5))
    got = thomas_solve(factor, rhs)
    for j in range(5):
        assert np.allclose(got[:, j], thomas_solve(factor, rhs[:, j]), atol=1e-12)


def test_thomas_zero_pivot():
    factor = TridiagonalFactor(0, np.ones(3), np.zeros(3), np.ones(3))
    with pytest.raises(SingularSystemError):
        thomas_solve(factor, np.ones(3))


# ---------------------------------------------------------------------------
# sine spectra and transforms


def test_sine_spectrum_smallest_grid():
    mesh = build_uniform_axis(2, 1.0)
    lam = sine_spectrum(mesh, "neg_second_diff")
    assert lam.size == 1
    assert lam[0] == pytest.approx(2.0 / mesh.h**2)


def test_sine_spectrum_upper_bound():
    for n in (4, 17, 256):
        mesh = build_uniform_axis(n, 1.3)
        lam = sine_spectrum(mesh, "neg_second_diff")
        assert np.all(lam < 4.0 / mesh.h**2)
        avg = sine_spectrum(mesh, "axis_average")
        assert np.all(avg > 2.0 / 3.0)


def test_sine_spectrum_matches_dense_eigs():
    mesh = build_uniform_axis(7, 1.0)
    lam = np.sort(sine_spectrum(mesh, "neg_second_diff"))
    factor = neg_second_diff_factor(mesh)
    dense = np.sort(np.linalg.eigvalsh(factor.dense()))
    assert np.allclose(lam, dense, rtol=1e-12)


def test_dst_direct_and_fast_agree():
    rng = np.random.default_rng(2)
    for n_int in (5, 31, 300):
        values = rng.standard_normal(n_int)
        direct = dst1(values, 0, direct=True)
        fast = dst1(values, 0, direct=False)
        assert np.max(np.abs(direct - fast)) < 1e-12 * max(1.0, np.max(np.abs(direct)))
        back = idst1(dst1(values, 0), 0)
        assert np.max(np.abs(back - values)) < 1e-12


def test_spectral_solve_recovers_average_input():
    # solve (compact average) x = (compact average) b -> x = b
    rng = np.random.default_rng(3)
    mesh = build_uniform_axis(12, 1.0)
    b = rng.standard_normal(11)
    handle = SpectralHandle(sine_spectrum(mesh, "axis_average"))
    full = np.zeros(13)
    full[1:-1] = b
    rhs = sum_average(GridFunction((mesh,), full)).values[1:-1]
    x = dst_diagonal_solve(handle, rhs)
    assert np.max(np.abs(x - b)) < 1e-12


def test_spectral_solve_2d_vs_dense():
    rng = np.random.default_rng(4)
    meshes = [build_uniform_axis(8, 1.0), build_uniform_axis(6, 0.8)]
    speeds = (1.0, 1.4)
    h_t = 0.04
    mu_b, mu_a = pair_spectra(meshes, speeds, "sum_stiffsum")
    handle = SpectralHandle(mu_b + h_t**2 / 12.0 * mu_a)

    def apply(interior):
        full = np.zeros((9, 7))
        full[1:-1, 1:-1] = interior
        gf = GridFunction(tuple(meshes), full)
        out = sum_average(gf).values + h_t**2 / 12.0 * stiffness_sum(gf, speeds).values
        return out[1:-1, 1:-1]

    rhs = rng.standard_normal((7, 5))
    dense = assemble_dense_operator(apply, (7, 5))
    expected = dense_solve_oracle(dense, rhs.reshape(-1)).reshape(7, 5)
    got = handle.solve(rhs)
    assert np.max(np.abs(got - expected)) < 1e-11


def test_spectral_solve_preserves_symmetry():
    mesh = build_uniform_axis(10, 1.0)
    handle = SpectralHandle(sine_spectrum(mesh, "axis_average"))
    rng = np.random.default_rng(5)
    rhs = rng.standard_normal(9)
    rhs = rhs + rhs[::-1]
    x = handle.solve(rhs)
    assert np.max(np.abs(x - x[::-1])) < 1e-13


def test_spectral_zero_eigenvalue_rejected():
    with pytest.raises(SingularSystemError):
        SpectralHandle(np.array([1.0, 0.0, 2.0]))


def test_sine_coefficients_roundtrip():
    rng = np.random.default_rng(6)
    interior = rng.standard_normal((5, 4, 3))
    coeffs = sine_coefficients(interior)
    from compactwave.solvers import sine_synthesis

    assert np.max(np.abs(sine_synthesis(coeffs) - interior)) < 1e-12


# ---------------------------------------------------------------------------
# splitting solves


def test_splitting_1d_equals_thomas():
    mesh = build_uniform_axis(9, 1.0)
    factor = step_factor(mesh, 0.05, 1.0, 0)
    rng = np.random.default_rng(7)
    rhs = rng.standard_normal(8)
    assert np.allclose(splitting_solve([factor], rhs), thomas_solve(factor, rhs), atol=1e-13)


def test_splitting_2d_vs_dense():
    rng = np.random.default_rng(8)
    meshes = [build_uniform_axis(7, 1.0), build_uniform_axis(5, 1.1)]
    speeds = (0.9, 1.7)
    h_t = 0.05
    factors = [step_factor(m, h_t, speeds[i], i) for i, m in enumerate(meshes)]
    handle = SplittingHandle(factors)
    dense = assemble_dense_operator(
        lambda interior: handle.apply(_pad(interior)), (6, 4)
    )
    rhs = rng.standard_normal((6, 4))
    expected = dense_solve_oracle(dense, rhs.reshape(-1)).reshape(6, 4)
    got = handle.solve(rhs)
    assert np.max(np.abs(got - expected)) < 1e-11


def _pad(interior):
    full = np.zeros(tuple(s + 2 for s in interior.shape))
    full[tuple(slice(1, -1) for _ in interior.shape)] = interior
    return full


def test_splitting_axis_order_invariance():
    rng = np.random.default_rng(9)
    meshes = [build_uniform_axis(6, 1.0), build_uniform_axis(7, 0.7), build_uniform_axis(5, 1.3)]
    speeds = (1.0, 0.6, 1.2)
    h_t = 0.03
    factors = [step_factor(m, h_t, speeds[i], i) for i, m in enumerate(meshes)]
    rhs = rng.standard_normal((5, 6, 4))
    ordered = splitting_solve(factors, rhs)
    permuted = splitting_solve([factors[2], factors[0], factors[1]], rhs)
    assert np.max(np.abs(ordered - permuted)) < 1e-12 * max(1.0, np.max(np.abs(ordered)))


def test_splitting_boundary_folding():
    # nonzero Dirichlet data folded axis by axis matches the dense solve
    rng = np.random.default_rng(10)
    meshes = [build_uniform_axis(6, 1.0), build_uniform_axis(5, 0.9)]
    speeds = (1.1, 0.8)
    h_t = 0.04
    factors = [step_factor(m, h_t, speeds[i], i) for i, m in enumerate(meshes)]
    handle = SplittingHandle(factors)
    boundary = np.zeros((7, 6))
    boundary[0, :] = rng.standard_normal(6)
    boundary[-1, :] = rng.standard_normal(6)
    boundary[:, 0] = rng.standard_normal(7)
    boundary[:, -1] = rng.standard_normal(7)
    x_int = rng.standard_normal((5, 4))
    full = boundary.copy()
    full[1:-1, 1:-1] = x_int
    rhs = handle.apply(full)
    got = handle.solve(rhs, boundary=boundary)
    assert np.max(np.abs(got - x_int)) < 1e-11


# ---------------------------------------------------------------------------
# dense oracle


def test_dense_oracle_identity():
    rhs = np.arange(4.0)
    assert np.allclose(dense_solve_oracle(np.eye(4), rhs), rhs)


def test_dense_oracle_singular():
    with pytest.raises(SingularSystemError):
        dense_solve_oracle(np.zeros((3, 3)), np.ones(3))


def test_dense_oracle_size_cap():
    with pytest.raises(ValueError):
        dense_solve_oracle(np.eye(5000), np.ones(5000))


def test_oracle_equivalence_random_instances():
    # cross-check every kernel against the dense oracle on random instances
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(40):
        n = int(rng.integers(3, 40))
        mesh = build_uniform_axis(n, float(rng.uniform(0.5, 2.0)))
        h_t = float(rng.uniform(0.0, 0.9)) * mesh.h
        factor = step_factor(mesh, h_t, 1.0, 0)
        rhs = rng.standard_normal(n - 1)
        got = thomas_solve(factor, rhs)
        expected = dense_solve_oracle(factor.dense(), rhs)
        scale = max(1.0, float(np.max(np.abs(expected))))
        worst = max(worst, float(np.max(np.abs(got - expected))) / scale)
    assert worst < 1e-11


def test_step_factor_spectrum_matches_dense():
    mesh = build_uniform_axis(9, 1.3)
    h_t, a = 0.07, 1.4
    spec = np.sort(sine_spectrum(mesh, "step_factor", h_t=h_t, speed=a))
    dense = np.sort(np.linalg.eigvalsh(step_factor(mesh, h_t, a).dense()))
    assert np.allclose(spec, dense, rtol=1e-12)
    with pytest.raises(ValueError):
        sine_spectrum(mesh, "step_factor")
