import math

import numpy as np
import pytest

from compactwave.mesh import AxisMesh, MeshError, build_time_mesh, build_uniform_axis
from compactwave.operators import (
    GridFunction,
    axis_average,
    PPiece,
    PiecewiseData,
    QPiece,
    SeparableTerm,
    SpaceDirac,
    TimeDirac,
    build_rhs_table,
    hat_average_t,
    hat_average_t0,
    hat_average_x,
    initial_rhs,
    initial_velocity,
    inner_h,
    product_average,
    second_diff,
    splitting_residual,
    step_factor,
    stiffness_product,
    stiffness_sum,
    sum_average,
    tridiag_axis_average,
)
from compactwave.solvers import assemble_dense_operator


def grid1(nodes_or_axis, values):
    axis = nodes_or_axis if isinstance(nodes_or_axis, AxisMesh) else AxisMesh(np.asarray(nodes_or_axis, float))
    return GridFunction((axis,), np.asarray(values, float))


def random_grid(meshes, rng, zero_boundary=True):
    shape = tuple(m.nodes.size for m in meshes)
    values = rng.standard_normal(shape)
    if zero_boundary:
        for axis in range(len(meshes)):
            idx = [slice(None)] * len(meshes)
            idx[axis] = 0
            values[tuple(idx)] = 0.0
            idx[axis] = -1
            values[tuple(idx)] = 0.0
    return GridFunction(tuple(meshes), values)


# ---------------------------------------------------------------------------
# second difference


def test_second_diff_annihilates_affine():
    axis = build_uniform_axis(8, 2.0, -1.0)
    w = grid1(axis, 3.0 * axis.nodes + 1.0)
    out = second_diff(w, 0).values
    assert np.max(np.abs(out[1:-1])) < 1e-13


def test_second_diff_exact_on_quadratic():
    axis = build_uniform_axis(10, 1.0)
    w = grid1(axis, axis.nodes**2)
    out = second_diff(w, 0).values
    assert np.allclose(out[1:-1], 2.0, atol=1e-11)


def test_second_diff_nonuniform_hand_value():
    # steps 1 and 2 around the middle node; w = x^2 gives exactly 2
    w = grid1([0.0, 1.0, 3.0], [0.0, 1.0, 9.0])
    out = second_diff(w, 0).values
    assert out[1] == pytest.approx(2.0, rel=1e-14)


def test_second_diff_axis_range():
    axis = build_uniform_axis(4, 1.0)
    with pytest.raises(ValueError):
        second_diff(grid1(axis, axis.nodes), 1)


# ---------------------------------------------------------------------------
# compact averages


def test_sum_average_preserves_constants():
    meshes = [build_uniform_axis(6, 1.0), build_uniform_axis(5, 0.7)]
    w = GridFunction(tuple(meshes), np.ones((7, 6)))
    assert np.allclose(sum_average(w).values, 1.0, atol=1e-15)
    assert np.allclose(product_average(w).values, 1.0, atol=1e-15)


def test_sum_average_stencil_readout():
    axis = build_uniform_axis(8, 1.0)
    values = np.zeros(9)
    values[4] = 1.0
    out = sum_average(grid1(axis, values)).values
    assert out[4] == pytest.approx(10.0 / 12.0)
    assert out[3] == pytest.approx(1.0 / 12.0)
    assert out[5] == pytest.approx(1.0 / 12.0)


def test_sum_average_on_quadratic():
    axis = build_uniform_axis(16, 1.0)
    h = axis.h
    out = sum_average(grid1(axis, axis.nodes**2)).values
    assert np.allclose(out[1:-1], axis.nodes[1:-1] ** 2 + h * h / 6.0, atol=1e-13)


def test_axis_average_uniform_limit_and_row_sum():
    axis = build_uniform_axis(6, 1.0)
    lo, di, hi = tridiag_axis_average(axis)
    assert np.allclose(lo, 1.0 / 12.0)
    assert np.allclose(di, 10.0 / 12.0)
    # alpha + 10 gamma + beta = 12 for any steps
    graded = AxisMesh(np.array([0.0, 0.1, 0.35, 0.5, 1.0]))
    glo, gdi, ghi = tridiag_axis_average(graded)
    assert np.allclose(12.0 * (glo + gdi + ghi), 12.0, atol=1e-12)


def test_axis_average_golden_ratio_zero_weight():
    # the lower weight vanishes when the step ratio hits (sqrt(5)+1)/2
    ratio = (math.sqrt(5.0) + 1.0) / 2.0
    nodes = np.array([0.0, 1.0, 1.0 + ratio, 1.0 + ratio + ratio**2])
    lo, _, _ = tridiag_axis_average(AxisMesh(nodes))
    assert abs(lo[0]) < 1e-14


def test_product_equals_sum_in_1d():
    axis = build_uniform_axis(9, 1.0)
    rng = np.random.default_rng(0)
    w = random_grid([axis], rng)
    assert np.allclose(product_average(w).values[1:-1], sum_average(w).values[1:-1], atol=1e-14)


def test_product_minus_sum_identity_2d():
    # bar_s - s = (1/144) h1^2 h2^2 Lambda1 Lambda2 on interior nodes
    rng = np.random.default_rng(1)
    meshes = [build_uniform_axis(7, 1.0), build_uniform_axis(6, 0.9)]
    w = random_grid(meshes, rng, zero_boundary=False)
    delta = product_average(w).values - sum_average(w).values
    mixed = second_diff(second_diff(w, 0), 1).values
    expected = meshes[0].h ** 2 * meshes[1].h ** 2 / 144.0 * mixed
    assert np.max(np.abs((delta - expected)[1:-1, 1:-1])) < 1e-13


def test_product_average_eigenvector_scaling():
    meshes = [build_uniform_axis(8, 1.0), build_uniform_axis(6, 1.3)]
    p, q = 3, 2
    x, y = np.meshgrid(meshes[0].nodes, meshes[1].nodes, indexing="ij")
    mode = np.sin(np.pi * p * x / 1.0) * np.sin(np.pi * q * y / 1.3)
    w = GridFunction(tuple(meshes), mode)
    lam1 = 4.0 / meshes[0].h ** 2 * math.sin(math.pi * p / (2 * 8)) ** 2
    lam2 = 4.0 / meshes[1].h ** 2 * math.sin(math.pi * q / (2 * 6)) ** 2
    factor = (1.0 - meshes[0].h ** 2 * lam1 / 12.0) * (1.0 - meshes[1].h ** 2 * lam2 / 12.0)
    out = product_average(w).values
    assert np.max(np.abs((out - factor * mode)[1:-1, 1:-1])) < 1e-12


# ---------------------------------------------------------------------------
# stiffness operators


def test_stiffness_sum_1d_quadratic():
    axis = build_uniform_axis(10, 1.0)
    w = grid1(axis, axis.nodes * (1.0 - axis.nodes))
    out = stiffness_sum(w, (1.0,)).values
    assert np.allclose(out[1:-1], 2.0, atol=1e-11)


def test_stiffness_sum_eigenvalue_2d():
    meshes = [build_uniform_axis(7, 1.0), build_uniform_axis(5, 0.8)]
    speeds = (1.1, 0.7)
    p, q = 2, 3
    x, y = np.meshgrid(meshes[0].nodes, meshes[1].nodes, indexing="ij")
    mode = np.sin(np.pi * p * x / 1.0) * np.sin(np.pi * q * y / 0.8)
    lam1 = 4.0 / meshes[0].h ** 2 * math.sin(math.pi * p / (2 * 7)) ** 2
    lam2 = 4.0 / meshes[1].h ** 2 * math.sin(math.pi * q / (2 * 5)) ** 2
    mu = speeds[0] ** 2 * lam1 * (1 - meshes[1].h ** 2 * lam2 / 12.0) + speeds[1] ** 2 * lam2 * (
        1 - meshes[0].h ** 2 * lam1 / 12.0
    )
    out = stiffness_sum(GridFunction(tuple(meshes), mode), speeds).values
    assert np.max(np.abs((out - mu * mode)[1:-1, 1:-1])) < 1e-11


def test_stiffness_sum_equals_product_2d():
    rng = np.random.default_rng(2)
    meshes = [build_uniform_axis(6, 1.0), build_uniform_axis(7, 1.2)]
    w = random_grid(meshes, rng, zero_boundary=False)
    a = stiffness_sum(w, (1.0, 2.0)).values
    b = stiffness_product(w, (1.0, 2.0)).values
    assert np.max(np.abs(a - b)) < 1e-14 * np.max(np.abs(a))


def test_operator_symmetry():
    rng = np.random.default_rng(3)
    meshes = [build_uniform_axis(6, 1.0), build_uniform_axis(5, 0.8)]
    u = random_grid(meshes, rng)
    w = random_grid(meshes, rng)
    for op in (sum_average, product_average):
        assert inner_h(op(u), w) == pytest.approx(inner_h(u, op(w)), abs=1e-13)
    for op in (lambda g: stiffness_sum(g, (1.0, 1.5)), lambda g: stiffness_product(g, (1.0, 1.5))):
        assert inner_h(op(u), w) == pytest.approx(inner_h(u, op(w)), abs=1e-13)


def test_product_average_positive_definite_small_grids():
    # smallest eigenvalue of the tensor average exceeds (2/3)^n
    rng = np.random.default_rng(4)
    for meshes in (
        [build_uniform_axis(8, 1.0)],
        [build_uniform_axis(6, 1.0), build_uniform_axis(5, 0.7)],
        [build_uniform_axis(4, 1.0), build_uniform_axis(5, 0.7), build_uniform_axis(4, 1.3)],
    ):
        n = len(meshes)
        shape = tuple(m.nodes.size - 2 for m in meshes)

        def apply(interior):
            full = np.zeros(tuple(m.nodes.size for m in meshes))
            full[tuple(slice(1, -1) for _ in meshes)] = interior
            return product_average(GridFunction(tuple(meshes), full)).values[
                tuple(slice(1, -1) for _ in meshes)
            ]

        mat = assemble_dense_operator(apply, shape)
        eigs = np.linalg.eigvalsh(0.5 * (mat + mat.T))
        assert eigs.min() > (2.0 / 3.0) ** n
        assert eigs.max() < 1.0


# ---------------------------------------------------------------------------
# splitting factors and residual


def test_step_factor_examples():
    axis = build_uniform_axis(8, 8.0)  # h = 1
    ident = step_factor(axis, 1.0, 1.0)
    assert np.allclose(ident.lower, 0.0) and np.allclose(ident.diag, 1.0)
    avg = step_factor(axis, 0.0, 1.0)
    assert np.allclose(avg.lower, 1.0 / 12.0) and np.allclose(avg.diag, 10.0 / 12.0)
    half = step_factor(axis, 0.5, 1.0)
    assert np.allclose(half.lower, 1.0 / 16.0)
    assert np.allclose(half.diag, 7.0 / 8.0)


def test_splitting_residual_zero_in_1d():
    axis = build_uniform_axis(8, 1.0)
    rng = np.random.default_rng(5)
    w = random_grid([axis], rng)
    assert np.max(np.abs(splitting_residual(w, (1.0,), 0.3).values)) == 0.0


@pytest.mark.parametrize("dims", [2, 3])
def test_splitting_identity(dims):
    # product of step factors = tensor average + (h_t^2/12) stiffness + residual
    rng = np.random.default_rng(6)
    meshes = [build_uniform_axis(5 + i, 1.0 + 0.2 * i) for i in range(dims)]
    speeds = tuple(0.8 + 0.3 * i for i in range(dims))
    h_t = 0.07
    w = random_grid(meshes, rng, zero_boundary=False)
    lhs = w.values
    for axis, mesh in enumerate(meshes):
        factor = step_factor(mesh, h_t, speeds[axis], axis)
        moved = np.moveaxis(lhs, axis, 0)
        out = moved.copy()
        lo = factor.lower.reshape((-1,) + (1,) * (moved.ndim - 1))
        di = factor.diag.reshape((-1,) + (1,) * (moved.ndim - 1))
        hi = factor.upper.reshape((-1,) + (1,) * (moved.ndim - 1))
        out[1:-1] = lo * moved[:-2] + di * moved[1:-1] + hi * moved[2:]
        lhs = np.moveaxis(out, 0, axis)
    rhs = (
        product_average(w).values
        + h_t**2 / 12.0 * stiffness_product(w, speeds).values
        + splitting_residual(w, speeds, h_t).values
    )
    inner = tuple(slice(1, -1) for _ in meshes)
    assert np.max(np.abs((lhs - rhs)[inner])) < 1e-13


# ---------------------------------------------------------------------------
# hat averages


def test_hat_average_dirac():
    axis = build_uniform_axis(10, 1.0, -0.5)
    out = hat_average_x(SpaceDirac(0.0), axis)
    assert out[5] == pytest.approx(10.0)
    assert np.count_nonzero(out) == 1


def test_hat_average_dirac_off_node():
    axis = build_uniform_axis(9, 1.0, -0.5)  # odd: zero is between nodes
    with pytest.raises(ValueError):
        hat_average_x(SpaceDirac(0.0), axis)


def test_hat_average_heaviside_nodal():
    axis = build_uniform_axis(10, 1.0, -0.5)
    out = hat_average_x(PPiece(0), axis)
    assert out[5] == pytest.approx(0.5, abs=1e-14)
    assert out[3] == pytest.approx(0.0, abs=1e-14)
    assert out[7] == pytest.approx(1.0, abs=1e-14)


def test_hat_average_constant():
    axis = build_uniform_axis(12, 1.0, -0.5)
    out = hat_average_x(lambda x: np.full_like(x, 2.5), axis)
    assert np.allclose(out[1:-1], 2.5, atol=1e-13)


def test_hat_average_kink_profile():
    # brute-force quadrature oracle for the kink node value 1 - 2h/3
    axis = build_uniform_axis(10, 1.0, -0.5)
    h = axis.h
    out = hat_average_x(PPiece(1), axis)
    xs = np.linspace(-h, h, 20001)
    hat = 1.0 - np.abs(xs) / h
    oracle = np.trapezoid((1.0 - 2.0 * np.abs(xs)) * hat, xs) / h
    assert out[5] == pytest.approx(1.0 - 2.0 * h / 3.0, rel=1e-12)
    assert out[5] == pytest.approx(oracle, rel=1e-7)
    assert out[3] == pytest.approx(1.0 - 2.0 * abs(axis.nodes[3]), rel=1e-12)


def test_hat_average_t_values():
    tmesh = build_time_mesh(10, 1.0)
    h_t = tmesh.h_t
    t_star = 0.5
    # away from the hit level the three-point sample average is exact
    prof = QPiece(2, t_star)
    got = hat_average_t(prof, tmesh, 8)
    t = tmesh.nodes[8]
    expected = (prof.eval(t - h_t) + 10 * prof.eval(t) + prof.eval(t + h_t)) / 12.0
    assert got == pytest.approx(expected, rel=1e-14)
    # hit level closed form
    assert hat_average_t(QPiece(2, t_star), tmesh, 5) == pytest.approx(h_t**2 / 12.0)
    assert hat_average_t(QPiece(1, t_star), tmesh, 5) == pytest.approx(h_t / 6.0)
    # Heaviside profile: nodal values with the half convention
    assert hat_average_t(QPiece(0, t_star), tmesh, 5) == pytest.approx(0.5)
    assert hat_average_t(QPiece(0, t_star), tmesh, 6) == pytest.approx(1.0)
    # Dirac atom
    assert hat_average_t(TimeDirac(t_star), tmesh, 5) == pytest.approx(1.0 / h_t)
    assert hat_average_t(TimeDirac(t_star), tmesh, 4) == 0.0


def test_hat_average_t_exactness_oracle():
    # hat-weighted quadrature over the two adjacent cells for degrees 1..3
    tmesh = build_time_mesh(8, 1.0)
    h_t = tmesh.h_t
    t_star = 0.5
    for degree in (1, 2, 3):
        prof = QPiece(degree, t_star)
        for level in (3, 4, 5, 6):
            t_c = tmesh.nodes[level]
            ts = np.linspace(t_c - h_t, t_c + h_t, 40001)
            hat = 1.0 - np.abs(ts - t_c) / h_t
            oracle = np.trapezoid(prof.eval(ts) * hat, ts) / h_t
            assert hat_average_t(prof, tmesh, level) == pytest.approx(
                oracle, rel=1e-6, abs=1e-12
            ), (degree, level)


def test_hat_average_t_star_off_mesh():
    tmesh = build_time_mesh(7, 1.0)
    with pytest.raises(ValueError):
        hat_average_t(QPiece(1, 0.5), tmesh, 3)


def test_one_sided_average():
    # vanishes whenever the profile switches on after the first step
    assert hat_average_t0(QPiece(2, 0.5), 0.1) == 0.0
    assert hat_average_t0(TimeDirac(0.5), 0.1) == 0.0
    # switch-on inside the first cell: compare against brute quadrature
    prof = QPiece(1, 0.03)
    h_t = 0.1
    ts = np.linspace(0.0, h_t, 200001)
    oracle = 2.0 / h_t * np.trapezoid(prof.eval(ts) * (1.0 - ts / h_t), ts)
    assert hat_average_t0(prof, h_t) == pytest.approx(oracle, rel=1e-8)


# ---------------------------------------------------------------------------
# data constructions


def test_initial_velocity_zero():
    meshes = [build_uniform_axis(10, 1.0, -0.5)]
    out = initial_velocity(lambda x: np.zeros_like(x), meshes, 0.1, (1.0,), "compact")
    assert np.max(np.abs(out)) == 0.0


def test_initial_velocity_dirac():
    meshes = [build_uniform_axis(10, 1.0, -0.5)]
    data = PiecewiseData((SeparableTerm(0.4, SpaceDirac(0.0)),))
    out = initial_velocity(data, meshes, 0.1, (1.0,), "qx")
    assert out[5] == pytest.approx(0.4 * 10.0)


def test_initial_velocity_compact_quadratic():
    meshes = [build_uniform_axis(10, 1.0)]
    h = meshes[0].h
    h_t, a = 0.05, 2.0
    out = initial_velocity(lambda x: x**2, meshes, h_t, (a,), "compact")
    x = meshes[0].nodes[1:-1]
    assert np.allclose(out[1:-1], x**2 + (h * h + h_t * h_t * a * a) / 6.0, atol=1e-12)


def test_initial_velocity_compact_rejects_dirac():
    meshes = [build_uniform_axis(10, 1.0, -0.5)]
    data = PiecewiseData((SeparableTerm(1.0, SpaceDirac(0.0)),))
    with pytest.raises(ValueError):
        initial_velocity(data, meshes, 0.1, (1.0,), "compact")


def test_rhs_table_smooth_constant():
    meshes = [build_uniform_axis(8, 1.0)]
    tmesh = build_time_mesh(6, 1.0)
    table = build_rhs_table(lambda x, t: np.full_like(x, 3.0), meshes, tmesh, "smooth")
    assert np.allclose(table(2), 3.0, atol=1e-13)


def test_rhs_table_smooth_matches_direct_stencil():
    meshes = [build_uniform_axis(10, 1.0, -0.5)]
    tmesh = build_time_mesh(10, 1.0)
    f = lambda x, t: np.exp(x + 0.5 - t)
    table = build_rhs_table(f, meshes, tmesh, "smooth")
    h = meshes[0].h
    h_t = tmesh.h_t
    x = meshes[0].nodes
    m = 4
    t = tmesh.nodes[m]
    fm = f(x, t)
    direct = (
        fm
        + (f(x, t + h_t) - 2 * fm + f(x, t - h_t)) / 12.0
        + np.concatenate(([0.0], (fm[2:] - 2 * fm[1:-1] + fm[:-2]) / 12.0, [0.0]))
    )
    assert np.allclose(table(m), direct[1:-1], atol=1e-15)


def test_rhs_table_averaged_composition():
    # separable Heaviside-in-x, Dirac-in-time forcing: zero except at the hit
    # level where the spatial hat average is scaled by 1/h_t
    meshes = [build_uniform_axis(10, 1.0, -0.5)]
    tmesh = build_time_mesh(10, 1.0)
    c2 = 1.1
    data = PiecewiseData((SeparableTerm(c2, PPiece(0), TimeDirac(0.5)),))
    table = build_rhs_table(data, meshes, tmesh, "averaged")
    assert np.max(np.abs(table(3))) == 0.0
    x = meshes[0].nodes[1:-1]
    expected = c2 * PPiece(0).eval(x) / tmesh.h_t
    assert np.allclose(table(5), expected, atol=1e-12)


def test_rhs_table_smooth_rejects_data():
    meshes = [build_uniform_axis(8, 1.0, -0.5)]
    tmesh = build_time_mesh(4, 1.0)
    data = PiecewiseData((SeparableTerm(1.0, SpaceDirac(0.0), TimeDirac(0.5)),))
    with pytest.raises(TypeError):
        build_rhs_table(data, meshes, tmesh, "smooth")


def test_initial_rhs_modes_on_constant():
    meshes = [build_uniform_axis(8, 1.0)]
    f = lambda x, t: np.full_like(x, 4.0)
    for mode in ("three_level", "two_level_half", "centered", "graded"):
        out = initial_rhs(f, meshes, 0.1, mode)
        assert np.allclose(out, 4.0, atol=1e-13), mode


def test_initial_rhs_time_part_linear():
    # f = t: every third-order formula reduces to h_t/3
    meshes = [build_uniform_axis(8, 1.0)]
    h_t = 0.3
    f = lambda x, t: np.full_like(x, t)
    for mode in ("three_level", "two_level_half", "centered", "graded"):
        out = initial_rhs(f, meshes, h_t, mode)
        assert np.allclose(out, h_t / 3.0, atol=1e-14), mode


def test_sum_average_requires_uniform():
    graded = AxisMesh(np.array([0.0, 0.1, 0.4, 1.0]))
    w = GridFunction((graded,), np.zeros(4))
    with pytest.raises(MeshError):
        sum_average(w)


def test_axis_average_preserves_constants_on_graded_mesh():
    graded = AxisMesh(np.array([0.0, 0.07, 0.2, 0.55, 0.72, 1.0]))
    w = GridFunction((graded,), np.full(6, 3.7))
    assert np.allclose(axis_average(w, 0).values, 3.7, atol=1e-13)
    out = hat_average_x(lambda x: np.full_like(x, 3.7), graded)
    assert np.allclose(out[1:-1], 3.7, atol=1e-12)


def test_hat_average_t_constant_profile():
    # one-sided profile switching on at t=0 is constant 1 on the whole mesh
    tmesh = build_time_mesh(8, 1.0)
    prof = QPiece(0, 0.0)
    for level in range(1, 8):
        assert hat_average_t(prof, tmesh, level) == pytest.approx(1.0)
