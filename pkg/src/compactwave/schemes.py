"""Time-stepping schemes: compact 4th-order (1D, the three nD variants, the
factorized splitting form, graded meshes), a weighted 2nd-order reference,
and the explicit scheme on the characteristic mesh.

Every implicit scheme advances the symmetric three-level recursion

    (B + sigma h_t^2 A) (v^{m+1} - 2 v^m + v^{m-1}) / h_t^2 = f_N^m - A v^m

with Dirichlet values imposed on the boundary and folded into the interior
right-hand side, and starts from

    (B + sigma h_t^2 A) (v^1 - v^0) / h_t = u_1N + (h_t/2) (f_N^0 - A v^0).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .mesh import AxisMesh, MeshError, TimeMesh, build_uniform_axis
from .operators import (
    GridFunction,
    RhsTable,
    SpaceDirac,
    TimeDirac,
    TridiagonalFactor,
    build_rhs_table,
    initial_rhs,
    initial_velocity,
    step_factor,
    stiffness_product,
    stiffness_sum,
    product_average,
    sum_average,
    tridiag_axis_average,
    tridiag_second_diff,
)
from .solvers import SpectralHandle, SplittingHandle, TriSolver, pair_spectra

__all__ = [
    "SchemeKind",
    "SchemeConfig",
    "RunResult",
    "Scheme",
    "assemble",
    "run",
    "run_nonuniform",
    "run_explicit_characteristic",
    "operator_pair",
    "BLOWUP_ABORT",
]

BLOWUP_ABORT = 1e100
COMPACT_SIGMA = 1.0 / 12.0

_GL_X, _GL_W = np.polynomial.legendre.leggauss(6)


class SchemeKind(str, Enum):
    COMPACT_1D = "compact1d"
    COMPACT_2D_SUM = "compact2d"
    COMPACT_3D_PROD_MASS = "compact3d"
    COMPACT_ND = "compactnd"
    SPLITTING = "splitting"
    EXPLICIT_CHARACTERISTIC = "characteristic"
    SECOND_ORDER = "second-order"
    NONUNIFORM_COMPACT = "nonuniform-compact"


_KIND_DIMENSIONS = {
    SchemeKind.COMPACT_1D: (1,),
    SchemeKind.COMPACT_2D_SUM: (2,),
    SchemeKind.COMPACT_3D_PROD_MASS: (3,),
    SchemeKind.COMPACT_ND: (1, 2, 3),
    SchemeKind.SPLITTING: (2, 3),
    SchemeKind.EXPLICIT_CHARACTERISTIC: (1,),
    SchemeKind.SECOND_ORDER: (1,),
    SchemeKind.NONUNIFORM_COMPACT: (1,),
}


def operator_pair(kind: SchemeKind, ndim: int) -> str | None:
    """Mass/stiffness pair entering the stability condition, None when the
    scheme falls outside the conditional-stability theory."""
    if kind in (SchemeKind.COMPACT_1D, SchemeKind.COMPACT_ND):
        return "prod_stiffprod"
    if kind == SchemeKind.COMPACT_2D_SUM:
        return "sum_stiffsum"
    if kind == SchemeKind.COMPACT_3D_PROD_MASS:
        return "prod_stiffsum"
    if kind == SchemeKind.SPLITTING:
        return "prod_residual_stiffprod"
    return None


@dataclass(frozen=True)
class SchemeConfig:
    """Scheme selection plus the data-construction modes.

    'auto' resolves the right-hand-side mode from the problem data (exact
    averaging for piecewise data, the compact sampling formulas for smooth
    forcing) and the initial-velocity mode from the catalog default.
    """

    kind: SchemeKind
    sigma: float = 0.5
    rhs_mode: str = "auto"
    u1n_mode: str = "auto"
    fn0_mode: str = "auto"


@dataclass
class RunResult:
    """Final two levels of a run plus instability bookkeeping."""

    completed_levels: int
    v_prev: np.ndarray | None
    v_last: np.ndarray
    blew_up: bool
    trajectory: list[np.ndarray] | None = None

    @property
    def stable(self) -> bool:
        return not self.blew_up


def _resolve_modes(config: SchemeConfig, problem) -> tuple[str, str, str]:
    rhs_mode = config.rhs_mode
    if rhs_mode == "auto":
        rhs_mode = "averaged" if problem.f_data is not None else "smooth"
    u1n_mode = config.u1n_mode
    if u1n_mode == "auto":
        u1n_mode = problem.u1n_default
    fn0_mode = config.fn0_mode
    if fn0_mode == "auto":
        fn0_mode = "averaged" if problem.f_data is not None else "two_level_half"
    return rhs_mode, u1n_mode, fn0_mode


class _Tridiagonal1D:
    """Stencil-row backend shared by the 1D implicit kinds (uniform and
    graded meshes use identical code; uniform steps reproduce the compact
    1D scheme exactly)."""

    def __init__(self, mesh: AxisMesh, h_t: float, speed: float, kind: SchemeKind, sigma: float):
        l_lo, l_di, l_hi = tridiag_second_diff(mesh)
        s_lo, s_di, s_hi = tridiag_axis_average(mesh)
        a2 = speed**2
        self.a_rows = (-a2 * l_lo, -a2 * l_di, -a2 * l_hi)
        if kind == SchemeKind.SECOND_ORDER:
            c = sigma * a2 * h_t**2
            self.s_rows = (-c * l_lo, 1.0 - c * l_di, -c * l_hi)
            self.avg_rows = None
        else:
            c = h_t**2 * a2 / 12.0
            self.s_rows = (s_lo - c * l_lo, s_di - c * l_di, s_hi - c * l_hi)
            self.avg_rows = (s_lo, s_di, s_hi)
        self.lam_rows = (l_lo, l_di, l_hi)
        factor = TridiagonalFactor(0, *self.s_rows)
        self.solver = TriSolver(factor)

    @staticmethod
    def _apply(rows, values):
        lo, di, hi = rows
        return lo * values[:-2] + di * values[1:-1] + hi * values[2:]

    def apply_a(self, values):
        return self._apply(self.a_rows, values)

    def apply_s(self, values):
        return self._apply(self.s_rows, values)

    def apply_avg(self, values):
        return self._apply(self.avg_rows, values)

    def apply_lam(self, values):
        return self._apply(self.lam_rows, values)

    def solve(self, rhs, b_left, b_right):
        r = rhs.copy()
        r[0] -= self.s_rows[0][0] * b_left
        r[-1] -= self.s_rows[2][-1] * b_right
        return self.solver.solve(r)


class Scheme:
    """Assembled scheme: step operators, data constructions, and solvers."""

    def __init__(
        self,
        problem,
        config: SchemeConfig,
        meshes: Sequence[AxisMesh],
        tmesh: TimeMesh,
    ):
        kind = config.kind
        meshes = tuple(meshes)
        n = len(meshes)
        if n not in _KIND_DIMENSIONS[kind]:
            raise ValueError(f"{kind.value} does not support dimension {n}")
        if kind == SchemeKind.EXPLICIT_CHARACTERISTIC:
            raise ValueError("use run_explicit_characteristic for the explicit scheme")
        if kind != SchemeKind.NONUNIFORM_COMPACT and not all(m.uniform for m in meshes):
            raise MeshError(f"{kind.value} requires uniform spatial meshes")
        if not tmesh.uniform:
            raise MeshError("time stepping requires a uniform time mesh")
        self.problem = problem
        self.config = config
        self.kind = kind
        self.meshes = meshes
        self.tmesh = tmesh
        self.h_t = tmesh.h_t
        self.speeds = problem.speeds
        self.sigma = config.sigma if kind == SchemeKind.SECOND_ORDER else COMPACT_SIGMA
        self.pair = operator_pair(kind, n)
        rhs_mode, u1n_mode, fn0_mode = _resolve_modes(config, problem)
        self.rhs_mode = rhs_mode
        self.u1n_mode = u1n_mode
        self.fn0_mode = fn0_mode

        self._tri: _Tridiagonal1D | None = None
        self._spectral: SpectralHandle | None = None
        self._splitting: SplittingHandle | None = None
        if n == 1 and kind != SchemeKind.SPLITTING:
            self._tri = _Tridiagonal1D(meshes[0], self.h_t, self.speeds[0], kind, self.sigma)
        elif kind == SchemeKind.SPLITTING:
            factors = [
                step_factor(mesh, self.h_t, self.speeds[axis], axis)
                for axis, mesh in enumerate(meshes)
            ]
            self._splitting = SplittingHandle(factors)
        else:
            mu_b, mu_a = pair_spectra(meshes, self.speeds, self.pair, self.h_t)
            self._spectral = SpectralHandle(mu_b + self.sigma * self.h_t**2 * mu_a)
            self._use_sum_mass = kind == SchemeKind.COMPACT_2D_SUM
            self._use_sum_stiff = kind in (
                SchemeKind.COMPACT_2D_SUM,
                SchemeKind.COMPACT_3D_PROD_MASS,
            )

        self._grids = np.meshgrid(*(m.nodes for m in meshes), indexing="ij")
        self._faces = self._face_coordinates()
        self.u1n = self._build_u1n()
        self.fn_table = self._build_fn_table()
        self.fn0 = self._build_fn0()

    # -- operator applications (full array in, interior out) ---------------

    def apply_a_interior(self, values: np.ndarray) -> np.ndarray:
        if self._tri is not None:
            return self._tri.apply_a(values)
        gf = GridFunction(self.meshes, values)
        if self.kind == SchemeKind.SPLITTING:
            return stiffness_product(gf, self.speeds).interior
        stiff = stiffness_sum if self._use_sum_stiff else stiffness_product
        return stiff(gf, self.speeds).interior

    def apply_step_operator_interior(self, values: np.ndarray) -> np.ndarray:
        if self._tri is not None:
            return self._tri.apply_s(values)
        if self._splitting is not None:
            return self._splitting.apply(values)
        gf = GridFunction(self.meshes, values)
        mass = sum_average(gf) if self._use_sum_mass else product_average(gf)
        stiff = stiffness_sum(gf, self.speeds) if self._use_sum_stiff else stiffness_product(gf, self.speeds)
        return (mass.values + self.sigma * self.h_t**2 * stiff.values)[
            tuple(slice(1, -1) for _ in self.meshes)
        ]

    # -- boundary handling ---------------------------------------------------

    def _face_coordinates(self):
        faces = []
        n = len(self.meshes)
        for axis in range(n):
            for side in (0, -1):
                idx = [slice(None)] * n
                idx[axis] = side
                coords = [g[tuple(idx)] for g in self._grids]
                faces.append((axis, side, tuple(idx), coords))
        return faces

    def boundary_values(self, values: np.ndarray, t: float) -> None:
        """Impose the Dirichlet trace on every face of a full node array."""
        problem = self.problem
        if len(self.meshes) == 1 and problem.g is not None:
            g0, g1 = problem.g
            values[0] = float(np.asarray(g0(t)))
            values[-1] = float(np.asarray(g1(t)))
            return
        for _, _, idx, coords in self._faces:
            if problem.exact is not None:
                values[idx] = problem.exact(*coords, t)
            else:
                values[idx] = 0.0

    def solve_step(self, rhs_interior: np.ndarray, t_boundary: float) -> np.ndarray:
        """Solve (B + sigma h_t^2 A) v = rhs with the trace at t_boundary."""
        shape = tuple(m.nodes.size for m in self.meshes)
        out = np.zeros(shape)
        self.boundary_values(out, t_boundary)
        if self._tri is not None:
            out[1:-1] = self._tri.solve(rhs_interior, out[0], out[-1])
            return out
        if self._splitting is not None:
            out[tuple(slice(1, -1) for _ in self.meshes)] = self._splitting.solve(
                rhs_interior, boundary=out
            )
            return out
        hom = rhs_interior - self.apply_step_operator_interior(out)
        out[tuple(slice(1, -1) for _ in self.meshes)] = self._spectral.solve(hom)
        return out

    # -- data constructions ----------------------------------------------------

    def _build_u1n(self) -> np.ndarray:
        problem = self.problem
        interior = tuple(slice(1, -1) for _ in self.meshes)
        if problem.u1_data is None and problem.u1_fn is None:
            return np.zeros(tuple(m.nodes.size - 2 for m in self.meshes))
        if self._tri is not None and self.kind == SchemeKind.NONUNIFORM_COMPACT:
            if problem.u1_fn is None:
                raise ValueError("graded-mesh scheme needs a sampleable initial velocity")
            samples = problem.u1_fn(self.meshes[0].nodes)
            c = self.h_t**2 * self.speeds[0] ** 2 / 12.0
            return self._tri.apply_avg(samples) + c * self._tri.apply_lam(samples)
        if self.u1n_mode == "qx":
            data = problem.u1_data
            if data is None:
                raise ValueError("averaging mode needs piecewise initial velocity data")
            return initial_velocity(data, self.meshes, self.h_t, self.speeds, "qx")[interior]
        source = problem.u1_fn if problem.u1_fn is not None else problem.u1_data
        return initial_velocity(source, self.meshes, self.h_t, self.speeds, self.u1n_mode)[interior]

    def _build_fn_table(self) -> RhsTable:
        problem = self.problem
        if problem.f_data is None and problem.f_fn is None:
            return build_rhs_table(None, self.meshes, self.tmesh, "smooth")
        if self.rhs_mode == "averaged":
            return build_rhs_table(problem.f_data, self.meshes, self.tmesh, "averaged")
        if self._tri is not None:
            # single stencil path for uniform and graded axes alike
            nodes = self.meshes[0].nodes
            f_fn = problem.f_fn
            h_t = self.h_t
            tri = self._tri

            def getter(level: int) -> np.ndarray:
                t = self.tmesh.nodes[level]
                fm = f_fn(nodes, t)
                lam_t = (f_fn(nodes, t + h_t) - 2.0 * fm + f_fn(nodes, t - h_t))[1:-1]
                return tri.apply_avg(fm) + lam_t / 12.0

            return RhsTable(getter, self.tmesh.n_steps)
        return build_rhs_table(problem.f_fn, self.meshes, self.tmesh, "smooth")

    def _build_fn0(self) -> np.ndarray:
        problem = self.problem
        if problem.f_data is None and problem.f_fn is None:
            return np.zeros(tuple(m.nodes.size - 2 for m in self.meshes))
        if self.fn0_mode == "averaged":
            return initial_rhs(problem.f_data, self.meshes, self.h_t, "averaged")
        if self._tri is not None and self.fn0_mode == "two_level_half":
            nodes = self.meshes[0].nodes
            f0 = problem.f_fn(nodes, 0.0)
            fh = problem.f_fn(nodes, 0.5 * self.h_t)
            return self._tri.apply_avg(f0) + (2.0 / 3.0) * (fh - f0)[1:-1]
        return initial_rhs(problem.f_fn, self.meshes, self.h_t, self.fn0_mode)

    # -- stepping ----------------------------------------------------------------

    def initial_level(self) -> np.ndarray:
        values = self.problem.u0(*self._grids)
        return np.array(values, dtype=float)

    def first_step(self, v0: np.ndarray) -> np.ndarray:
        h_t = self.h_t
        rhs = self.apply_step_operator_interior(v0) + h_t * (
            self.u1n + 0.5 * h_t * self.fn0 - 0.5 * h_t * self.apply_a_interior(v0)
        )
        return self.solve_step(rhs, self.tmesh.nodes[1])

    def time_step(self, v_prev: np.ndarray, v_curr: np.ndarray, level: int) -> np.ndarray:
        h_t = self.h_t
        rhs = h_t**2 * (self.fn_table(level) - self.apply_a_interior(v_curr))
        rhs += self.apply_step_operator_interior(2.0 * v_curr - v_prev)
        return self.solve_step(rhs, self.tmesh.nodes[level + 1])

    def run(
        self,
        observer: Callable[[int, float, np.ndarray], None] | None = None,
        store_trajectory: bool = False,
    ) -> RunResult:
        """March the scheme over the whole time mesh.

        Any non-finite value or magnitude beyond 1e100 aborts the run with the
        blow-up flag set and a partial result returned.
        """
        tmesh = self.tmesh
        v0 = self.initial_level()
        trajectory = [v0.copy()] if store_trajectory else None
        if observer is not None:
            observer(0, 0.0, v0)
        v_prev, v_curr = None, v0
        level = 0
        for level in range(1, tmesh.n_steps + 1):
            if level == 1:
                v_next = self.first_step(v_curr)
            else:
                v_next = self.time_step(v_prev, v_curr, level - 1)
            v_prev, v_curr = v_curr, v_next
            if not np.all(np.isfinite(v_curr)) or np.max(np.abs(v_curr)) > BLOWUP_ABORT:
                return RunResult(level + 1, v_prev, v_curr, True, trajectory)
            if store_trajectory:
                trajectory.append(v_curr.copy())
            if observer is not None:
                observer(level, tmesh.nodes[level], v_curr)
        return RunResult(tmesh.n_steps + 1, v_prev, v_curr, False, trajectory)


def assemble(
    problem, config: SchemeConfig, meshes: Sequence[AxisMesh], tmesh: TimeMesh
) -> Scheme:
    """Bind a scheme to a problem and meshes; see Scheme for the pieces."""
    return Scheme(problem, config, meshes, tmesh)


def run(
    problem,
    config: SchemeConfig,
    meshes: Sequence[AxisMesh],
    tmesh: TimeMesh,
    observer: Callable[[int, float, np.ndarray], None] | None = None,
    store_trajectory: bool = False,
) -> RunResult:
    return assemble(problem, config, meshes, tmesh).run(observer, store_trajectory)


def run_nonuniform(
    problem,
    axis: AxisMesh,
    tmesh: TimeMesh,
    observer: Callable[[int, float, np.ndarray], None] | None = None,
    store_trajectory: bool = False,
) -> RunResult:
    """Graded-axis compact run (reduces to the uniform compact scheme when
    the axis is uniform)."""
    config = SchemeConfig(kind=SchemeKind.NONUNIFORM_COMPACT)
    return assemble(problem, config, [axis], tmesh).run(observer, store_trajectory)


# ---------------------------------------------------------------------------
# explicit scheme on the characteristic mesh


def _char_velocity_table(problem, nodes: np.ndarray, h: float) -> np.ndarray:
    """(1/(2h)) * integral of the initial velocity over (x_{k-1}, x_{k+1})."""
    out = np.zeros(nodes.size)
    if problem.u1_data is not None:
        for term in problem.u1_data:
            space = term.space
            if isinstance(space, SpaceDirac):
                inside = (nodes[:-2] < space.location) & (space.location < nodes[2:])
                out[1:-1] += term.coef * inside / (2.0 * h)
            else:
                anti = space.antideriv(nodes)
                out[1:-1] += term.coef * (anti[2:] - anti[:-2]) / (2.0 * h)
        return out
    if problem.u1_fn is not None:
        for k in range(1, nodes.size - 1):
            mid = nodes[k]
            val = 0.0
            for lo, hi in ((nodes[k - 1], mid), (mid, nodes[k + 1])):
                half = 0.5 * (hi - lo)
                pts = 0.5 * (hi + lo) + half * _GL_X
                val += half * float(np.sum(_GL_W * problem.u1_fn(pts)))
            out[k] = val / (2.0 * h)
    return out


def _slice_integral(space, x_k: float, halfwidth: float) -> float:
    """Integral of the spatial profile over (x_k - w, x_k + w)."""
    if halfwidth <= 0.0:
        return 0.0
    if isinstance(space, SpaceDirac):
        return 1.0 if abs(x_k - space.location) < halfwidth else 0.0
    return float(space.antideriv(x_k + halfwidth) - space.antideriv(x_k - halfwidth))


def _cell_average(term, x_k: float, t_center: float, t_lo: float, t_hi: float, h: float, h_t: float) -> float:
    """Time integral of f2(t) * (slice integral at level t) over [t_lo, t_hi]
    for the rhomb/triangle footprint centred at x_k with apex time t_center."""
    space, time = term.space, term.time
    width = lambda t: h * (1.0 - abs(t - t_center) / h_t)
    if isinstance(time, TimeDirac):
        if t_lo < time.t_star < t_hi:
            return term.coef * _slice_integral(space, x_k, width(time.t_star))
        return 0.0
    pts = {t_lo, t_hi}
    if t_lo < t_center < t_hi:
        pts.add(t_center)
    if t_lo < time.t_star < t_hi:
        pts.add(time.t_star)
    if isinstance(space, SpaceDirac):
        # levels where the slice endpoint meets the atom
        d = abs(x_k - space.location)
        if d < h:
            for s in (-1.0, 1.0):
                t_cross = t_center + s * h_t * (1.0 - d / h)
                if t_lo < t_cross < t_hi:
                    pts.add(t_cross)
    total = 0.0
    levels = sorted(pts)
    for lo, hi in zip(levels[:-1], levels[1:]):
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        t = mid + half * _GL_X
        vals = np.array([_slice_integral(space, x_k, width(tt)) for tt in t])
        total += half * float(np.sum(_GL_W * time.eval(t) * vals))
    return term.coef * total


def run_explicit_characteristic(
    problem,
    n_intervals: int,
    n_steps: int,
    observer: Callable[[int, float, np.ndarray], None] | None = None,
    store_trajectory: bool = False,
) -> tuple[RunResult, AxisMesh, TimeMesh]:
    """Four-point explicit scheme on the mesh aligned with the characteristics
    (h_t = h/a), with exact cell averages of the data; reproduces the exact
    solution at the nodes up to roundoff for the catalog problems.
    """
    if problem.ndim != 1:
        raise ValueError("the characteristic-mesh scheme is one-dimensional")
    a = problem.speeds[0]
    extent = problem.extents[0]
    axis = build_uniform_axis(n_intervals, extent, problem.origin[0])
    h = axis.h
    h_t = h / a
    tmesh = TimeMesh(np.arange(n_steps + 1) * h_t)
    nodes = axis.nodes

    if problem.f_fn is not None and problem.f_data is None:
        raise ValueError("cell averages require separable piecewise forcing (or none)")

    u1n = _char_velocity_table(problem, nodes, h)
    g = problem.g
    exact = problem.exact

    def boundary(t: float) -> tuple[float, float]:
        if g is not None:
            return float(np.asarray(g[0](t))), float(np.asarray(g[1](t)))
        if exact is not None:
            return float(exact(nodes[0], t)), float(exact(nodes[-1], t))
        return 0.0, 0.0

    def forcing_level(level: int) -> np.ndarray:
        out = np.zeros(nodes.size)
        if problem.f_data is None:
            return out
        t_m = tmesh.nodes[level]
        if level == 0:
            for k in range(1, nodes.size - 1):
                total = sum(
                    _cell_average(term, nodes[k], 0.0, 0.0, h_t, h, h_t)
                    for term in problem.f_data
                )
                out[k] = total / (h * h_t)
        else:
            for k in range(1, nodes.size - 1):
                total = sum(
                    _cell_average(term, nodes[k], t_m, t_m - h_t, t_m + h_t, h, h_t)
                    for term in problem.f_data
                )
                out[k] = total / (2.0 * h * h_t)
        return out

    v0 = np.array(problem.u0(nodes), dtype=float)
    trajectory = [v0.copy()] if store_trajectory else None
    if observer is not None:
        observer(0, 0.0, v0)

    f0 = forcing_level(0)
    v1 = np.empty_like(v0)
    v1[1:-1] = 0.5 * (v0[:-2] + v0[2:]) + h_t * u1n[1:-1] + 0.5 * h_t**2 * f0[1:-1]
    v1[0], v1[-1] = boundary(tmesh.nodes[1])
    if store_trajectory:
        trajectory.append(v1.copy())
    if observer is not None:
        observer(1, tmesh.nodes[1], v1)

    v_prev, v_curr = v0, v1
    for level in range(1, n_steps):
        f_m = forcing_level(level)
        v_next = np.empty_like(v_curr)
        v_next[1:-1] = v_curr[:-2] + v_curr[2:] - v_prev[1:-1] + h_t**2 * f_m[1:-1]
        v_next[0], v_next[-1] = boundary(tmesh.nodes[level + 1])
        v_prev, v_curr = v_curr, v_next
        if not np.all(np.isfinite(v_curr)) or np.max(np.abs(v_curr)) > BLOWUP_ABORT:
            return RunResult(level + 2, v_prev, v_curr, True, trajectory), axis, tmesh
        if store_trajectory:
            trajectory.append(v_curr.copy())
        if observer is not None:
            observer(level + 1, tmesh.nodes[level + 1], v_curr)
    return RunResult(n_steps + 1, v_prev, v_curr, False, trajectory), axis, tmesh
