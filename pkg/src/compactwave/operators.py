"""Discrete operators of the compact 4th-order wave-equation schemes.

All operators act on full node arrays (boundary values included) and return
full-shape arrays whose entries are meaningful on the interior node set; the
averaging operators act as the identity on their own boundary faces so that
tensor-product compositions read correct boundary data, while the stiffness
operators return zero on every face (their codomain is the zero-boundary
space).

Averaging conventions for non-smooth data follow the exact hat-function
averages: piecewise polynomials are integrated analytically (Gauss rules of
sufficient order per smooth piece) and Dirac atoms located at mesh nodes get
the weight 1/h_*.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .mesh import AxisMesh, MeshError, TimeMesh

__all__ = [
    "GridFunction",
    "TridiagonalFactor",
    "PPiece",
    "QPiece",
    "SpaceDirac",
    "TimeDirac",
    "SeparableTerm",
    "PiecewiseData",
    "second_diff",
    "axis_average",
    "sum_average",
    "sum_average_skip",
    "product_average",
    "product_average_skip",
    "stiffness_sum",
    "stiffness_product",
    "splitting_residual",
    "step_factor",
    "tridiag_second_diff",
    "tridiag_axis_average",
    "inner_h",
    "hat_average_x",
    "hat_average_t",
    "hat_average_t0",
    "initial_velocity",
    "initial_rhs",
    "RhsTable",
    "build_rhs_table",
]

_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(8)
NODE_SNAP_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Values at every node of a tensor-product spatial mesh."""

    meshes: tuple[AxisMesh, ...]
    values: np.ndarray

    def __post_init__(self):
        meshes = tuple(self.meshes)
        values = np.asarray(self.values, dtype=float)
        expected = tuple(m.nodes.size for m in meshes)
        if values.shape != expected:
            raise ValueError(f"value shape {values.shape} does not match mesh shape {expected}")
        object.__setattr__(self, "meshes", meshes)
        object.__setattr__(self, "values", values)

    @property
    def ndim(self) -> int:
        return len(self.meshes)

    @property
    def interior(self) -> np.ndarray:
        return self.values[tuple(slice(1, -1) for _ in self.meshes)]


def _interior_slices(n: int) -> tuple[slice, ...]:
    return tuple(slice(1, -1) for _ in range(n))


def _zero_faces(values: np.ndarray) -> np.ndarray:
    for axis in range(values.ndim):
        idx = [slice(None)] * values.ndim
        idx[axis] = 0
        values[tuple(idx)] = 0.0
        idx[axis] = -1
        values[tuple(idx)] = 0.0
    return values


def _coef_shape(coef: np.ndarray, ndim: int) -> np.ndarray:
    return coef.reshape((-1,) + (1,) * (ndim - 1))


def _second_diff_values(values: np.ndarray, mesh: AxisMesh, axis: int) -> np.ndarray:
    w = np.moveaxis(values, axis, 0)
    out = np.zeros_like(w)
    h_lo = _coef_shape(mesh.steps[:-1], w.ndim)
    h_hi = _coef_shape(mesh.steps[1:], w.ndim)
    h_c = 0.5 * (h_lo + h_hi)
    out[1:-1] = ((w[2:] - w[1:-1]) / h_hi - (w[1:-1] - w[:-2]) / h_lo) / h_c
    return np.moveaxis(out, 0, axis)


def _axis_average_values(values: np.ndarray, mesh: AxisMesh, axis: int) -> np.ndarray:
    w = np.moveaxis(values, axis, 0)
    out = w.copy()
    if mesh.uniform:
        out[1:-1] = (w[:-2] + 10.0 * w[1:-1] + w[2:]) / 12.0
    else:
        lo, di, hi = tridiag_axis_average(mesh)
        out[1:-1] = (
            _coef_shape(lo, w.ndim) * w[:-2]
            + _coef_shape(di, w.ndim) * w[1:-1]
            + _coef_shape(hi, w.ndim) * w[2:]
        )
    return np.moveaxis(out, 0, axis)


def second_diff(w: GridFunction, axis: int) -> GridFunction:
    """Three-point second difference along one axis (zero on its own faces)."""
    if not 0 <= axis < w.ndim:
        raise ValueError(f"axis {axis} out of range for dimension {w.ndim}")
    return GridFunction(w.meshes, _second_diff_values(w.values, w.meshes[axis], axis))


def axis_average(w: GridFunction, axis: int) -> GridFunction:
    """Compact single-axis average with weights (alpha, 10*gamma, beta)/12.

    Uniform steps give the (1, 10, 1)/12 stencil exactly; identity on the
    axis' own boundary faces.
    """
    if not 0 <= axis < w.ndim:
        raise ValueError(f"axis {axis} out of range for dimension {w.ndim}")
    return GridFunction(w.meshes, _axis_average_values(w.values, w.meshes[axis], axis))


def sum_average(w: GridFunction) -> GridFunction:
    """Additive compact average I + sum_i (h_i^2/12) Lambda_i (uniform axes)."""
    out = w.values.copy()
    for axis, mesh in enumerate(w.meshes):
        if not mesh.uniform:
            raise MeshError("additive compact average requires uniform axes")
        out += (mesh.h**2 / 12.0) * _second_diff_values(w.values, mesh, axis)
    return GridFunction(w.meshes, out)


def sum_average_skip(w: GridFunction, skip: int) -> GridFunction:
    """Additive compact average over every axis except `skip`."""
    out = w.values.copy()
    for axis, mesh in enumerate(w.meshes):
        if axis == skip:
            continue
        if not mesh.uniform:
            raise MeshError("additive compact average requires uniform axes")
        out += (mesh.h**2 / 12.0) * _second_diff_values(w.values, mesh, axis)
    return GridFunction(w.meshes, out)


def product_average(w: GridFunction) -> GridFunction:
    """Tensor-product compact average (factors commute on tensor grids)."""
    out = w.values
    for axis, mesh in enumerate(w.meshes):
        out = _axis_average_values(out, mesh, axis)
    return GridFunction(w.meshes, out)


def product_average_skip(w: GridFunction, skip: int) -> GridFunction:
    out = w.values
    for axis, mesh in enumerate(w.meshes):
        if axis != skip:
            out = _axis_average_values(out, mesh, axis)
    return GridFunction(w.meshes, out)


def stiffness_sum(w: GridFunction, speeds: Sequence[float]) -> GridFunction:
    """-sum_i a_i^2 (cross additive average) Lambda_i w, zero on all faces."""
    if w.ndim > 3:
        raise ValueError("supported for dimensions 1..3 only")
    out = np.zeros_like(w.values)
    for axis, mesh in enumerate(w.meshes):
        lam = _second_diff_values(w.values, mesh, axis)
        acc = lam.copy()
        for other, om in enumerate(w.meshes):
            if other == axis:
                continue
            acc += (om.h**2 / 12.0) * _second_diff_values(lam, om, other)
        out -= speeds[axis] ** 2 * acc
    return GridFunction(w.meshes, _zero_faces(out))


def stiffness_product(w: GridFunction, speeds: Sequence[float]) -> GridFunction:
    """-sum_i a_i^2 (cross product average) Lambda_i w, zero on all faces."""
    if w.ndim > 3:
        raise ValueError("supported for dimensions 1..3 only")
    out = np.zeros_like(w.values)
    for axis, mesh in enumerate(w.meshes):
        acc = _second_diff_values(w.values, mesh, axis)
        for other, om in enumerate(w.meshes):
            if other != axis:
                acc = _axis_average_values(acc, om, other)
        out -= speeds[axis] ** 2 * acc
    return GridFunction(w.meshes, _zero_faces(out))


def splitting_residual(w: GridFunction, speeds: Sequence[float], h_t: float) -> GridFunction:
    """Difference between the factorized step operator and its unsplit form.

    Zero for one dimension; for two and three dimensions the explicit
    mixed-difference expressions are used.
    """
    n = w.ndim
    if n == 1:
        return GridFunction(w.meshes, np.zeros_like(w.values))
    if n > 3:
        raise ValueError("supported for dimensions 1..3 only")
    c = h_t**2 / 12.0
    lam = lambda arr, ax: _second_diff_values(arr, w.meshes[ax], ax)
    sav = lambda arr, ax: _axis_average_values(arr, w.meshes[ax], ax)
    a2 = [s**2 for s in speeds]
    if n == 2:
        out = c**2 * a2[0] * a2[1] * lam(lam(w.values, 0), 1)
    else:
        out = c**2 * (
            a2[0] * a2[1] * sav(lam(lam(w.values, 0), 1), 2)
            + a2[0] * a2[2] * sav(lam(lam(w.values, 0), 2), 1)
            + a2[1] * a2[2] * sav(lam(lam(w.values, 1), 2), 0)
        )
        out -= c**3 * a2[0] * a2[1] * a2[2] * lam(lam(lam(w.values, 0), 1), 2)
    return GridFunction(w.meshes, _zero_faces(out))


def inner_h(u: GridFunction, w: GridFunction) -> float:
    """Mesh inner product h_1...h_n * sum over interior nodes (uniform axes)."""
    weight = 1.0
    for mesh in u.meshes:
        weight *= mesh.h
    return float(weight * np.sum(u.interior * w.interior))


# ---------------------------------------------------------------------------
# tridiagonal stencils


@dataclass(frozen=True, eq=False)
class TridiagonalFactor:
    """Per-interior-node stencil rows (lower, diag, upper) along one axis.

    lower[0] and upper[-1] are the couplings to the two boundary nodes; the
    strictly tridiagonal system uses lower[1:], diag, upper[:-1].
    """

    axis: int
    lower: np.ndarray
    diag: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        n = self.diag.size
        if self.lower.size != n or self.upper.size != n:
            raise ValueError("stencil arrays must have equal length (interior count)")

    @property
    def n_interior(self) -> int:
        return self.diag.size

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Stencil applied to a full 1-D node array; returns interior values."""
        return self.lower * values[:-2] + self.diag * values[1:-1] + self.upper * values[2:]

    def dense(self) -> np.ndarray:
        m = np.diag(self.diag)
        m += np.diag(self.lower[1:], k=-1)
        m += np.diag(self.upper[:-1], k=1)
        return m


def tridiag_second_diff(mesh: AxisMesh) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Interior stencil rows of the (possibly non-uniform) second difference."""
    h_lo = mesh.steps[:-1]
    h_hi = mesh.steps[1:]
    h_c = 0.5 * (h_lo + h_hi)
    lo = 1.0 / (h_c * h_lo)
    hi = 1.0 / (h_c * h_hi)
    return lo, -(lo + hi), hi


def tridiag_axis_average(mesh: AxisMesh) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Interior stencil rows of the compact single-axis average.

    Non-uniform coefficients: alpha = 2 - h_+^2/(h h_*), beta = 2 - h^2/(h_+ h_*),
    gamma = 1 + (h_+ - h)^2/(5 h h_+); they satisfy alpha + 10 gamma + beta = 12.
    Negative alpha/beta on strongly graded meshes are permitted.
    """
    if mesh.uniform:
        n = mesh.n_intervals - 1
        return (np.full(n, 1.0 / 12.0), np.full(n, 10.0 / 12.0), np.full(n, 1.0 / 12.0))
    h_lo = mesh.steps[:-1]
    h_hi = mesh.steps[1:]
    h_c = 0.5 * (h_lo + h_hi)
    alpha = 2.0 - h_hi**2 / (h_lo * h_c)
    beta = 2.0 - h_lo**2 / (h_hi * h_c)
    gamma = 1.0 + (h_hi - h_lo) ** 2 / (5.0 * h_lo * h_hi)
    return alpha / 12.0, 10.0 * gamma / 12.0, beta / 12.0


def step_factor(mesh: AxisMesh, h_t: float, speed: float, axis: int = 0) -> TridiagonalFactor:
    """Per-axis factor of the splitting step operator.

    Uniform steps give I + (1/12)(h^2 - h_t^2 a^2) Lambda; the factor reduces
    to the identity on the characteristic mesh h_t = h/a and to the compact
    average at h_t = 0.
    """
    s_lo, s_di, s_hi = tridiag_axis_average(mesh)
    l_lo, l_di, l_hi = tridiag_second_diff(mesh)
    c = h_t**2 * speed**2 / 12.0
    return TridiagonalFactor(axis, s_lo - c * l_lo, s_di - c * l_di, s_hi - c * l_hi)


# ---------------------------------------------------------------------------
# piecewise data and hat averages


def _signed_power(k: int, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if k == 0:
        return 0.5 * (np.sign(x) + 1.0)
    if k == 1:
        return 1.0 - 2.0 * np.abs(x)
    return np.sign(x) * (2.0 * x) ** k


def _signed_power_antideriv(k: int, x: np.ndarray) -> np.ndarray:
    """Antiderivative of the signed-power piece, vanishing at the breakpoint."""
    x = np.asarray(x, dtype=float)
    if k == 0:
        return np.maximum(x, 0.0)
    if k == 1:
        return x - x * np.abs(x)
    pos = (2.0 * x) ** (k + 1)
    neg = (-1.0) ** k * (-2.0 * x) ** (k + 1)
    return np.where(x >= 0, pos, neg) / (2.0 * (k + 1))


@dataclass(frozen=True)
class PPiece:
    """Signed-power spatial profile with a single breakpoint at x = 0.

    degree 0 is the Heaviside-type jump (value 1/2 at the breakpoint),
    degree 1 the even kink 1 - 2|x|, and degree k >= 2 the odd/even pair
    sign(x) (2x)^k.
    """

    degree: int

    def __post_init__(self):
        if self.degree < 0:
            raise ValueError("degree must be >= 0; use SpaceDirac for the atom")

    def eval(self, x: np.ndarray) -> np.ndarray:
        return _signed_power(self.degree, x)

    def antideriv(self, x: np.ndarray) -> np.ndarray:
        return _signed_power_antideriv(self.degree, x)

    breakpoint = 0.0


@dataclass(frozen=True)
class SpaceDirac:
    """Unit Dirac atom at a fixed spatial location."""

    location: float = 0.0


@dataclass(frozen=True)
class QPiece:
    """One-sided temporal profile (t - t_*)^l for t > t_*, zero before."""

    degree: int
    t_star: float

    def __post_init__(self):
        if self.degree < 0:
            raise ValueError("degree must be >= 0; use TimeDirac for the atom")

    def eval(self, t: np.ndarray) -> np.ndarray:
        dt = np.asarray(t, dtype=float) - self.t_star
        if self.degree == 0:
            return 0.5 * (np.sign(dt) + 1.0)
        return np.where(dt > 0, dt, 0.0) ** self.degree


@dataclass(frozen=True)
class TimeDirac:
    """Unit Dirac atom at time t_*."""

    t_star: float


SpaceProfile = Union[PPiece, SpaceDirac]
TimeProfile = Union[QPiece, TimeDirac]


@dataclass(frozen=True)
class SeparableTerm:
    """One summand coef * fx(x) * ft(t); ft None means time-independent."""

    coef: float
    space: SpaceProfile
    time: TimeProfile | None = None


@dataclass(frozen=True)
class PiecewiseData:
    """Sum of separable piecewise-polynomial / Dirac terms."""

    terms: tuple[SeparableTerm, ...]

    def __iter__(self):
        return iter(self.terms)

    @property
    def has_space_atom(self) -> bool:
        return any(isinstance(t.space, SpaceDirac) for t in self.terms)


def _nearest_node(nodes: np.ndarray, x: float, scale: float) -> int:
    idx = int(np.argmin(np.abs(nodes - x)))
    if abs(nodes[idx] - x) > NODE_SNAP_TOL * max(scale, 1.0):
        raise ValueError(f"atom at {x} is not located at a mesh node")
    return idx


def _hat_quad(fn: Callable, breakpoints: Sequence[float], mesh: AxisMesh, node: int) -> float:
    """Exact hat-weighted average of fn at an interior node (Gauss per piece)."""
    nodes = mesh.nodes
    xl, xc, xr = nodes[node - 1], nodes[node], nodes[node + 1]
    h_star = 0.5 * (xr - xl)
    total = 0.0
    for a, b, rise in ((xl, xc, True), (xc, xr, False)):
        pts = sorted({a, b, *(p for p in breakpoints if a < p < b)})
        for lo, hi in zip(pts[:-1], pts[1:]):
            mid = 0.5 * (lo + hi)
            half = 0.5 * (hi - lo)
            x = mid + half * _GAUSS_X
            weight = (x - xl) / (xc - xl) if rise else (xr - x) / (xr - xc)
            total += half * float(np.sum(_GAUSS_W * fn(x) * weight))
    return total / h_star


def hat_average_x(
    profile: SpaceProfile | Callable[[np.ndarray], np.ndarray], mesh: AxisMesh
) -> np.ndarray:
    """Exact hat-function average at every interior node (faces set to zero).

    Dirac atoms must sit on a mesh node and contribute 1/h_* there.
    """
    out = np.zeros(mesh.nodes.size)
    if isinstance(profile, SpaceDirac):
        idx = _nearest_node(mesh.nodes, profile.location, mesh.extent)
        if idx == 0 or idx == mesh.nodes.size - 1:
            raise ValueError("Dirac atom on the boundary is not supported")
        h_star = 0.5 * (mesh.nodes[idx + 1] - mesh.nodes[idx - 1])
        out[idx] = 1.0 / h_star
        return out
    if isinstance(profile, PPiece):
        fn, breaks = profile.eval, (profile.breakpoint,)
    else:
        fn, breaks = profile, ()
    for node in range(1, mesh.nodes.size - 1):
        out[node] = _hat_quad(fn, breaks, mesh, node)
    return out


def hat_average_t(profile: TimeProfile, tmesh: TimeMesh, level: int) -> float:
    """Hat average of a temporal profile at an interior time level.

    One-sided power profiles with the breakpoint on the mesh use the exact
    values: nodal samples for degree 0, the three-point (1, 10, 1)/12 sample
    average away from the hit level for degree >= 1, and
    h_t^degree / ((degree+1)(degree+2)) at the hit level.
    """
    if not 1 <= level <= tmesh.n_steps - 1:
        raise ValueError(f"level {level} is not an interior time level")
    h_t = tmesh.h_t
    if isinstance(profile, TimeDirac):
        idx = _nearest_node(tmesh.nodes, profile.t_star, tmesh.horizon)
        return 1.0 / h_t if idx == level else 0.0
    idx = _nearest_node(tmesh.nodes, profile.t_star, tmesh.horizon)
    t = tmesh.nodes[level]
    if profile.degree == 0:
        return float(profile.eval(t))
    if level == idx:
        return h_t**profile.degree / ((profile.degree + 1) * (profile.degree + 2))
    return float(
        (profile.eval(t - h_t) + 10.0 * profile.eval(t) + profile.eval(t + h_t)) / 12.0
    )


def hat_average_t0(profile: TimeProfile, h_t: float) -> float:
    """One-sided hat average (2/h_t) * int_0^{h_t} y(t) (1 - t/h_t) dt."""
    if isinstance(profile, TimeDirac):
        if 0.0 < profile.t_star < h_t:
            return (2.0 / h_t) * (1.0 - profile.t_star / h_t)
        return 0.0
    if profile.t_star >= h_t:
        return 0.0
    pts = sorted({0.0, h_t, profile.t_star})
    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        t = mid + half * _GAUSS_X
        total += half * float(np.sum(_GAUSS_W * profile.eval(t) * (1.0 - t / h_t)))
    return 2.0 * total / h_t


# ---------------------------------------------------------------------------
# right-hand-side constructions


def _meshgrid(meshes: Sequence[AxisMesh]) -> list[np.ndarray]:
    return np.meshgrid(*(m.nodes for m in meshes), indexing="ij")


def _compact_space_correction(values: np.ndarray, meshes: Sequence[AxisMesh]) -> np.ndarray:
    out = values.copy()
    for axis, mesh in enumerate(meshes):
        out += (mesh.h**2 / 12.0) * _second_diff_values(values, mesh, axis)
    return out


def initial_velocity(
    u1,
    meshes: Sequence[AxisMesh],
    h_t: float,
    speeds: Sequence[float],
    mode: str,
) -> np.ndarray:
    """Discrete initial-velocity data (full-shape array, faces zero).

    mode 'qx': exact hat average of piecewise data.
    mode 'compact': u1 + sum_i ((h_i^2 + h_t^2 a_i^2)/12) Lambda_i u1 from samples.
    mode 'samples': plain nodal samples (second-order reference choice).
    """
    meshes = list(meshes)
    shape = tuple(m.nodes.size for m in meshes)
    if mode == "qx":
        if not isinstance(u1, PiecewiseData):
            raise TypeError("hat averaging requires piecewise data")
        if len(meshes) != 1:
            raise ValueError("hat averaging of data is one-dimensional")
        out = np.zeros(shape)
        for term in u1:
            out += term.coef * hat_average_x(term.space, meshes[0])
        return out
    if isinstance(u1, PiecewiseData):
        if u1.has_space_atom:
            raise ValueError("sample-based initial velocity undefined for Dirac data")
        fn = lambda *xs: sum(t.coef * t.space.eval(xs[0]) for t in u1)
    elif callable(u1):
        fn = u1
    else:
        raise TypeError(f"unsupported initial-velocity data {type(u1)!r}")
    samples = fn(*_meshgrid(meshes))
    if mode == "samples":
        out = samples.copy()
    elif mode == "compact":
        out = samples.copy()
        for axis, mesh in enumerate(meshes):
            coef = (mesh.h**2 + h_t**2 * speeds[axis] ** 2) / 12.0
            out += coef * _second_diff_values(samples, mesh, axis)
    else:
        raise ValueError(f"unknown initial-velocity mode {mode!r}")
    return _zero_faces(out)


class RhsTable:
    """Per-level compact right-hand side f_N^m on the interior nodes."""

    def __init__(self, getter: Callable[[int], np.ndarray], n_levels: int):
        self._getter = getter
        self.n_levels = n_levels

    def __call__(self, level: int) -> np.ndarray:
        if not 1 <= level <= self.n_levels - 1:
            raise ValueError(f"level {level} outside 1..{self.n_levels - 1}")
        return self._getter(level)


def build_rhs_table(
    f,
    meshes: Sequence[AxisMesh],
    tmesh: TimeMesh,
    mode: str,
) -> RhsTable:
    """Compact forcing construction for the interior time levels.

    mode 'smooth' evaluates f + (h_t^2/12) Lambda_t f + sum_i (h_i^2/12)
    Lambda_i f pointwise from samples of a callable f(x..., t); mode
    'averaged' composes the exact spatial and temporal hat averages of
    separable piecewise data.
    """
    meshes = list(meshes)
    interior = _interior_slices(len(meshes))
    if f is None:
        shape = tuple(m.nodes.size - 2 for m in meshes)
        return RhsTable(lambda m: np.zeros(shape), tmesh.n_steps)
    if mode == "averaged":
        if not isinstance(f, PiecewiseData):
            raise TypeError("averaged mode requires separable piecewise data")
        if len(meshes) != 1:
            raise ValueError("averaged forcing is one-dimensional")
        parts = []
        for term in f:
            if term.time is None:
                raise ValueError("forcing terms need a temporal factor")
            qx = hat_average_x(term.space, meshes[0])[1:-1]
            parts.append((term.coef, qx, term.time))

        def averaged(level: int) -> np.ndarray:
            out = np.zeros(meshes[0].nodes.size - 2)
            for coef, qx, tprof in parts:
                out += coef * hat_average_t(tprof, tmesh, level) * qx
            return out

        return RhsTable(averaged, tmesh.n_steps)
    if mode == "smooth":
        if not callable(f):
            raise TypeError("smooth mode requires a callable forcing; "
                            "use averaged mode for distributional data")
        grids = _meshgrid(meshes)
        h_t = tmesh.h_t

        def smooth(level: int) -> np.ndarray:
            t = tmesh.nodes[level]
            fm = f(*grids, t)
            out = _compact_space_correction(fm, meshes)
            out += (f(*grids, t + h_t) - 2.0 * fm + f(*grids, t - h_t)) / 12.0
            return out[interior]

        return RhsTable(smooth, tmesh.n_steps)
    raise ValueError(f"unknown forcing mode {mode!r}")


def initial_rhs(
    f,
    meshes: Sequence[AxisMesh],
    h_t: float,
    mode: str,
) -> np.ndarray:
    """Forcing value entering the first-step equation (interior nodes).

    Smooth modes combine a third-order one-sided time approximation with the
    compact spatial correction:

    'three_level'    (7/12) f^0 + (1/2) f^1 - (1/12) f^2
    'two_level_half' (1/3) f^0 + (2/3) f(h_t/2)
    'centered'       -(1/12) f^{-1} + (5/6) f^0 + (1/4) f^1
    'graded'         product-average f^0 + (1/3)(f^1 - f^0)
    'averaged'       exact one-sided hat average of piecewise data
    """
    meshes = list(meshes)
    interior = _interior_slices(len(meshes))
    if f is None:
        return np.zeros(tuple(m.nodes.size - 2 for m in meshes))
    if mode == "averaged":
        if not isinstance(f, PiecewiseData):
            raise TypeError("averaged mode requires separable piecewise data")
        if len(meshes) != 1:
            raise ValueError("averaged forcing is one-dimensional")
        out = np.zeros(meshes[0].nodes.size - 2)
        for term in f:
            qx = hat_average_x(term.space, meshes[0])[1:-1]
            out += term.coef * hat_average_t0(term.time, h_t) * qx
        return out
    if not callable(f):
        raise TypeError(f"mode {mode!r} requires a callable forcing")
    grids = _meshgrid(meshes)
    f_at = lambda t: f(*grids, t)
    f0 = f_at(0.0)
    if mode == "three_level":
        time_part = (7.0 * f0 + 6.0 * f_at(h_t) - f_at(2.0 * h_t)) / 12.0
    elif mode == "two_level_half":
        time_part = f0 / 3.0 + 2.0 * f_at(0.5 * h_t) / 3.0
    elif mode == "centered":
        time_part = -f_at(-h_t) / 12.0 + 5.0 * f0 / 6.0 + f_at(h_t) / 4.0
    elif mode == "graded":
        out = f0
        for axis, mesh in enumerate(meshes):
            out = _axis_average_values(out, mesh, axis)
        return (out + (f_at(h_t) - f0) / 3.0)[interior]
    else:
        raise ValueError(f"unknown initial forcing mode {mode!r}")
    return (time_part + (_compact_space_correction(f0, meshes) - f0))[interior]
