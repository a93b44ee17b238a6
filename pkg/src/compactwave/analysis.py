"""Error norms, least-squares order fitting, theoretical order formulas, and
report assembly for convergence studies.

Three uniform-in-time mesh norms of the error r = u - v are tracked:

    L2h:  max_m ( h * sum_{interior} r_k^2 )^{1/2}
    Ch:   max over all nodes and levels of |r|
    Eh:   max_m max( || (r^m - r^{m-1})/h_t ||_h, || backward x-difference ||_h~ )

with the x-part summed over k = 1..N (one-sided difference at every node
pair).  Practical orders come from least squares on log10 error versus
log10 N, reported as ||r|| ~ c0 (X/N)^gamma.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .mesh import AxisMesh, TimeMesh
from .schemes import RunResult

__all__ = [
    "ErrorTriple",
    "ErrorObserver",
    "error_norms",
    "FitResult",
    "fit_order",
    "theoretical_orders",
    "OrderRangeWarning",
    "ConvergenceReport",
    "build_report",
    "NORM_NAMES",
]

NORM_NAMES = ("L2h", "Ch", "Eh")


class OrderRangeWarning(UserWarning):
    """Smoothness parameter outside the stated validity range of a formula."""


@dataclass(frozen=True)
class ErrorTriple:
    """The three run norms; infinite for unstable runs."""

    L2h: float
    Ch: float
    Eh: float

    def as_dict(self) -> dict[str, float]:
        return {"L2h": self.L2h, "Ch": self.Ch, "Eh": self.Eh}


class ErrorObserver:
    """Streams the three norms level by level against an exact evaluator.

    The quadrature weight is the mean spatial step, so on graded axes only
    the Ch norm is layout-independent (the graded-mesh studies report Ch).
    """

    def __init__(self, exact: Callable, axis: AxisMesh, tmesh: TimeMesh):
        self.exact = exact
        self.nodes = axis.nodes
        self.h = axis.extent / axis.n_intervals
        self.h_t = tmesh.horizon / tmesh.n_steps
        self._prev_r: np.ndarray | None = None
        self._l2 = 0.0
        self._c = 0.0
        self._e = 0.0
        self.blew_up = False

    def observe(self, level: int, t: float, values: np.ndarray) -> None:
        if not np.all(np.isfinite(values)):
            self.blew_up = True
            return
        r = self.exact(self.nodes, t) - values
        self._l2 = max(self._l2, math.sqrt(self.h * float(np.sum(r[1:-1] ** 2))))
        self._c = max(self._c, float(np.max(np.abs(r))))
        if level >= 1 and self._prev_r is not None:
            dt = (r - self._prev_r) / self.h_t
            e_time = math.sqrt(self.h * float(np.sum(dt[1:-1] ** 2)))
            dx = np.diff(r) / self.h
            e_space = math.sqrt(self.h * float(np.sum(dx**2)))
            self._e = max(self._e, e_time, e_space)
        self._prev_r = r

    __call__ = observe

    def result(self) -> ErrorTriple:
        if self.blew_up:
            return ErrorTriple(math.inf, math.inf, math.inf)
        return ErrorTriple(self._l2, self._c, self._e)


def error_norms(
    run: RunResult, exact: Callable, axis: AxisMesh, tmesh: TimeMesh
) -> ErrorTriple:
    """Norms of a stored-trajectory run (blown-up runs report infinities)."""
    if run.blew_up:
        return ErrorTriple(math.inf, math.inf, math.inf)
    if run.trajectory is None:
        raise ValueError("run was not stored; use an ErrorObserver during the run")
    obs = ErrorObserver(exact, axis, tmesh)
    for level, values in enumerate(run.trajectory):
        obs.observe(level, tmesh.nodes[level], values)
    return obs.result()


@dataclass(frozen=True)
class FitResult:
    """Power-law fit ||r|| ~ c0 (X/N)^gamma."""

    c0: float
    gamma: float
    n_points: int
    excluded: tuple[int, ...] = ()
    starred: bool = False


def fit_order(
    points: Sequence[tuple[int, float]],
    extent: float = 1.0,
    drop_below: int | None = None,
) -> FitResult:
    """Ordinary least squares on log10 error versus log10 N.

    Non-positive errors are excluded with a warning; `drop_below` removes the
    coarse resolutions (the starred fits of rough-data studies) and marks the
    result."""
    excluded: list[int] = []
    usable: list[tuple[int, float]] = []
    for n, err in points:
        if drop_below is not None and n < drop_below:
            excluded.append(n)
            continue
        if not err > 0.0 or not math.isfinite(err):
            warnings.warn(f"excluding non-positive error at N={n}", stacklevel=2)
            excluded.append(n)
            continue
        usable.append((n, err))
    if len(usable) < 3:
        raise ValueError("order fitting needs at least 3 usable points")
    log_n = np.log10([n for n, _ in usable])
    log_e = np.log10([e for _, e in usable])
    slope, intercept = np.polyfit(log_n, log_e, 1)
    gamma = -float(slope)
    c0 = 10.0 ** float(intercept) * extent ** (-gamma)
    return FitResult(c0, gamma, len(usable), tuple(excluded), drop_below is not None)


def theoretical_orders(alpha: float, method_order: int) -> tuple[float, float, float]:
    """Expected error orders (L2h, Ch, Eh) for data of smoothness alpha.

    4th-order scheme:  min(4a/5, 4);  4(a - 1/2)/5;  4(a - 1)/5.
    2nd-order scheme:  min(2a/3, 2);  min(2(a - 1/2)/3, 2);  min(2(a - 1)/3, 2).
    Values outside the stated validity ranges are returned with a warning.
    """
    if method_order == 4:
        # stated ranges: L2h for alpha >= 0, Ch for 1/2 < alpha <= 11/2,
        # Eh for 1 <= alpha <= 6
        if alpha < 0.0 or not 0.5 < alpha <= 5.5 or not 1.0 <= alpha <= 6.0:
            warnings.warn(
                f"alpha={alpha} outside a stated validity range",
                OrderRangeWarning,
                stacklevel=2,
            )
        return (min(0.8 * alpha, 4.0), 0.8 * (alpha - 0.5), 0.8 * (alpha - 1.0))
    if method_order == 2:
        if alpha < 0.0 or alpha <= 0.5 or alpha < 1.0:
            warnings.warn(
                f"alpha={alpha} outside a stated validity range",
                OrderRangeWarning,
                stacklevel=2,
            )
        return (
            min(2.0 * alpha / 3.0, 2.0),
            min(2.0 * (alpha - 0.5) / 3.0, 2.0),
            min(2.0 * (alpha - 1.0) / 3.0, 2.0),
        )
    raise ValueError("method order must be 2 or 4")


@dataclass
class ConvergenceReport:
    """Per-problem convergence study: error triples per N with fitted and
    theoretical orders per norm."""

    problem: str
    scheme: str
    alpha: float | None
    results: list[tuple[int, ErrorTriple]]
    fits: dict[str, FitResult] = field(default_factory=dict)
    gamma_th: dict[str, float] = field(default_factory=dict)
    gamma_th2: dict[str, float] = field(default_factory=dict)
    extras: dict[str, float] = field(default_factory=dict)

    def fit(self, drop_below: int | None = None, extent: float = 1.0) -> None:
        for norm in NORM_NAMES:
            points = [(n, triple.as_dict()[norm]) for n, triple in self.results]
            try:
                self.fits[norm] = fit_order(points, extent, drop_below)
            except ValueError:
                continue

    def attach_theory(self) -> None:
        if self.alpha is None:
            return
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", OrderRangeWarning)
            th4 = theoretical_orders(self.alpha, 4)
            th2 = theoretical_orders(self.alpha, 2)
        for norm, g4, g2 in zip(NORM_NAMES, th4, th2):
            self.gamma_th[norm] = g4
            self.gamma_th2[norm] = g2


def _sci(x: float | None) -> str:
    if x is None:
        return ""
    if not math.isfinite(x):
        return "inf"
    return f"{x:.3E}"


def _fixed(x: float | None) -> str:
    if x is None:
        return ""
    return f"{x:.3f}"


def build_report(reports: Sequence[ConvergenceReport], fmt: str = "csv") -> str:
    """Flatten convergence studies into one row per (problem, scheme, norm).

    Column order: problem, scheme, norm, c0, gamma_pr, gamma_th, gamma_th2,
    one error column per resolution, then any per-problem extras."""
    all_n = sorted({n for rep in reports for n, _ in rep.results})
    extra_keys = sorted({key for rep in reports for key in rep.extras})
    header = ["problem", "scheme", "norm", "c0", "gamma_pr", "gamma_th", "gamma_th2"]
    header += [f"err_{n}" for n in all_n] + extra_keys
    rows = [header]
    for rep in reports:
        by_n = {n: triple for n, triple in rep.results}
        for norm in NORM_NAMES:
            fit = rep.fits.get(norm)
            star = "*" if fit is not None and fit.starred else ""
            row = [
                rep.problem,
                rep.scheme,
                norm,
                _sci(fit.c0) + star if fit else "",
                _fixed(fit.gamma) + star if fit else "",
                _fixed(rep.gamma_th.get(norm)),
                _fixed(rep.gamma_th2.get(norm)),
            ]
            row += [
                _sci(by_n[n].as_dict()[norm]) if n in by_n else "" for n in all_n
            ]
            row += [_sci(rep.extras.get(key)) for key in extra_keys]
            rows.append(row)
    if fmt == "csv":
        return "\n".join(",".join(row) for row in rows) + "\n"
    if fmt == "md":
        out = ["| " + " | ".join(rows[0]) + " |"]
        out.append("|" + "---|" * len(rows[0]))
        for row in rows[1:]:
            out.append("| " + " | ".join(row) + " |")
        return "\n".join(out) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")
