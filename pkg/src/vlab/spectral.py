"""Radial Schrodinger spectra near coupling thresholds.

The half-line operator ``-(1-eps) u'' + [(1-eps) c_eff / r^2 + lam V(r)] u``
with Dirichlet ends is the reduction of ``-(1-eps) Delta + lam V`` in
dimension ``d`` at angular momentum ``l`` through ``u = r^{(d-1)/2} psi``;
the centrifugal constant is ``c_eff = (d-1)(d-3)/4 + l(l+d-2)``.  On top of
the finite-difference engine sit: Sturm counts of eigenvalues below an
energy, bisection for the critical coupling where the ground energy hits
zero, high-precision zero-energy solutions integrated in log radius with
power-law fits of their decay, sweeps of the kinetic-defect family, and
negative-mode counts for the critical inverse-square model on growing boxes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .hardy import ThresholdClass, eigenvalue_or_resonance

__all__ = [
    "SquareWell",
    "GaussianWell",
    "InverseSquareTail",
    "InversePowerTail",
    "make_shape",
    "potential_values",
    "RadialProblem",
    "TridiagonalOperator",
    "ResolutionError",
    "build_radial_operator",
    "lowest_eigenvalues",
    "negative_inertia",
    "sturm_count_below",
    "SpectralReport",
    "spectral_report",
    "CriticalCouplingResult",
    "critical_coupling",
    "ZeroEnergySolution",
    "zero_energy_solution",
    "DecayFit",
    "FitError",
    "fit_decay_exponent",
    "sweep_kinetic_defect",
    "ModeCountEntry",
    "inverse_square_mode_counts",
    "mode_count_slope",
]


# ---------------------------------------------------------------------------
# Potential shapes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SquareWell:
    """Attractive well ``-depth`` on ``[0, radius]``, zero beyond."""

    depth: float = 1.0
    radius: float = 1.0
    kind = "square_well"

    def core(self, r: np.ndarray) -> np.ndarray:
        return np.where(np.asarray(r, dtype=float) <= self.radius, -self.depth, 0.0)

    def fixed_tail(self, r: np.ndarray) -> np.ndarray:
        return np.zeros_like(np.asarray(r, dtype=float))

    @property
    def resolution_scale(self) -> float:
        return self.radius

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return (self.radius,)


@dataclass(frozen=True)
class GaussianWell:
    """Attractive Gaussian ``-depth * exp(-(r/width)^2)``."""

    depth: float = 1.0
    width: float = 1.0
    kind = "gaussian_well"

    def core(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return -self.depth * np.exp(-((r / self.width) ** 2))

    def fixed_tail(self, r: np.ndarray) -> np.ndarray:
        return np.zeros_like(np.asarray(r, dtype=float))

    @property
    def resolution_scale(self) -> float:
        return self.width

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return ()


@dataclass(frozen=True)
class InverseSquareTail:
    """Unit attractive core plus a fixed repulsive inverse-square tail.

    The coupling scales only the core ``-1`` on ``[0, inner_radius]``; the
    tail ``tail_strength / r^2`` beyond is part of the fixed background, so
    threshold solutions feel exactly this tail strength regardless of where
    the critical coupling lands.
    """

    tail_strength: float
    inner_radius: float = 1.0
    kind = "inverse_square_tail"

    def core(self, r: np.ndarray) -> np.ndarray:
        return np.where(np.asarray(r, dtype=float) <= self.inner_radius, -1.0, 0.0)

    def fixed_tail(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(r > self.inner_radius, self.tail_strength / r ** 2, 0.0)

    @property
    def resolution_scale(self) -> float:
        return self.inner_radius

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return (self.inner_radius,)


@dataclass(frozen=True)
class InversePowerTail:
    """Unit attractive core plus a fixed repulsive ``r^-tail_power`` tail."""

    tail_strength: float
    tail_power: float
    inner_radius: float = 1.0
    kind = "inverse_power_tail"

    def core(self, r: np.ndarray) -> np.ndarray:
        return np.where(np.asarray(r, dtype=float) <= self.inner_radius, -1.0, 0.0)

    def fixed_tail(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(r > self.inner_radius,
                            self.tail_strength * r ** (-self.tail_power), 0.0)

    @property
    def resolution_scale(self) -> float:
        return self.inner_radius

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return (self.inner_radius,)


PotentialShape = SquareWell | GaussianWell | InverseSquareTail | InversePowerTail

_SHAPE_KINDS = {
    "square_well": SquareWell,
    "gaussian_well": GaussianWell,
    "inverse_square_tail": InverseSquareTail,
    "inverse_power_tail": InversePowerTail,
}


def make_shape(kind: str, **params) -> PotentialShape:
    """Build a potential shape from its kind string and keyword fields."""
    try:
        cls = _SHAPE_KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown potential shape {kind!r}; "
                         f"known: {sorted(_SHAPE_KINDS)}") from None
    return cls(**params)


def shape_label(shape: PotentialShape) -> str:
    """Compact deterministic text form of a shape, used in CSV summaries."""
    fields = {k: v for k, v in vars(shape).items()}
    inner = ",".join(f"{k}={v:g}" for k, v in sorted(fields.items()))
    return f"{shape.kind}[{inner}]"


def potential_values(shape: PotentialShape, coupling: float, r: np.ndarray) -> np.ndarray:
    """Potential ``coupling * core + fixed_tail`` sampled at radii ``r``."""
    return coupling * shape.core(r) + shape.fixed_tail(r)


# ---------------------------------------------------------------------------
# Finite-difference operator
# ---------------------------------------------------------------------------


class ResolutionError(ValueError):
    """Raised when the radial grid cannot resolve the potential scale."""


def centrifugal_constant(d: int, angular: int) -> float:
    return (d - 1) * (d - 3) / 4.0 + angular * (angular + d - 2)


@dataclass(frozen=True)
class RadialProblem:
    """Radial operator specification: dimension, shape, coupling, grid.

    ``epsilon`` is the kinetic-defect parameter of the family
    ``-(1-epsilon) Delta + coupling * V``; ``angular`` the angular momentum.
    """

    d: int
    shape: PotentialShape
    coupling: float
    r_max: float
    points: int
    epsilon: float = 0.0
    angular: int = 0

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ValueError(f"dimension must be >= 1, got {self.d}")
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError(f"kinetic defect must lie in [0, 1), got {self.epsilon}")
        if self.angular < 0:
            raise ValueError(f"angular momentum must be >= 0, got {self.angular}")
        if self.r_max <= 0.0 or self.points < 3:
            raise ValueError("need r_max > 0 and at least 3 grid points")


@dataclass(frozen=True)
class TridiagonalOperator:
    """Symmetric tridiagonal matrix of the discretized radial operator."""

    diag: np.ndarray
    off: np.ndarray
    step: float
    radii: np.ndarray
    problem: RadialProblem

    @property
    def size(self) -> int:
        return int(self.diag.size)


def build_radial_operator(problem: RadialProblem) -> TridiagonalOperator:
    """Second-order finite differences on a uniform Dirichlet grid.

    Refuses to discretize when fewer than 10 grid steps fall across the
    shape's resolution scale, since spectra of under-resolved wells are
    meaningless.
    """
    h = problem.r_max / (problem.points + 1)
    scale = problem.shape.resolution_scale
    if h > scale / 10.0:
        raise ResolutionError(
            f"grid step {h:g} exceeds a tenth of the potential scale {scale:g}; "
            "increase points or reduce r_max")
    r = h * np.arange(1, problem.points + 1)
    factor = 1.0 - problem.epsilon
    c_eff = centrifugal_constant(problem.d, problem.angular)
    diag = factor * (2.0 / h ** 2 + c_eff / r ** 2) \
        + _grid_potential(problem.shape, problem.coupling, r, h)
    off = np.full(problem.points - 1, -factor / h ** 2)
    return TridiagonalOperator(diag=diag, off=off, step=h, radii=r, problem=problem)


def _grid_potential(shape: PotentialShape, coupling: float, r: np.ndarray,
                    h: float) -> np.ndarray:
    """Potential on the grid, cell-averaged where a cell straddles a breakpoint.

    Nodal sampling of a discontinuous potential misplaces its edge by up to
    half a grid step, an O(h) bias of well radii that dominates all other
    discretization errors.  Averaging the potential over the straddling cell
    (splitting the integral at the breakpoint, midpoint rule on each smooth
    piece) restores O(h^2) accuracy.
    """
    values = potential_values(shape, coupling, r)
    half = 0.5 * h
    for cut in shape.breakpoints:
        for j in np.nonzero(np.abs(r - cut) <= half)[0]:
            lo, hi = r[j] - half, r[j] + half
            edge = min(max(cut, lo), hi)
            average = 0.0
            if edge > lo:
                left = potential_values(shape, coupling,
                                        np.array([0.5 * (lo + edge)]))[0]
                average += (edge - lo) / h * left
            if hi > edge:
                right = potential_values(shape, coupling,
                                         np.array([0.5 * (edge + hi)]))[0]
                average += (hi - edge) / h * right
            values[j] = average
    return values


def lowest_eigenvalues(op: TridiagonalOperator, k: int) -> np.ndarray:
    """The ``k`` smallest eigenvalues, via LAPACK Sturm-count bisection."""
    if not 1 <= k <= op.size:
        raise ValueError(f"k must lie in [1, {op.size}], got {k}")
    vals = eigh_tridiagonal(op.diag, op.off, select="i", select_range=(0, k - 1),
                            check_finite=False)[0]
    return np.asarray(vals, dtype=float)


def negative_inertia(diag: Sequence[float], off: Sequence[float]) -> int:
    """Number of negative eigenvalues of a symmetric tridiagonal matrix.

    One Sturm/LDL pass: the sign pattern of the pivots ``d_i`` of the
    factorization ``A = L D L^T`` counts the negative eigenvalues exactly.
    Vanishing pivots are nudged to a tiny positive value, the standard
    bisection-count convention.
    """
    d_list = [float(v) for v in diag]
    e_list = [float(v) for v in off]
    if len(e_list) != len(d_list) - 1:
        raise ValueError("off-diagonal length must be diagonal length - 1")
    count = 0
    pivot = d_list[0]
    if pivot < 0.0:
        count += 1
    for i in range(1, len(d_list)):
        if pivot == 0.0:
            pivot = 1e-300
        pivot = d_list[i] - e_list[i - 1] * e_list[i - 1] / pivot
        if pivot < 0.0:
            count += 1
    return count


def sturm_count_below(op: TridiagonalOperator, energy: float) -> int:
    """Number of eigenvalues strictly below ``energy`` (own Sturm pass)."""
    return negative_inertia(op.diag - energy, op.off)


@dataclass(frozen=True)
class SpectralReport:
    """Low-lying spectrum summary of one discretized radial operator."""

    eigenvalues: tuple[float, ...]
    ground_energy: float
    negative_count: int
    metadata: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        return {"eigenvalues": list(self.eigenvalues),
                "ground_energy": self.ground_energy,
                "negative_count": self.negative_count,
                "metadata": dict(self.metadata)}


def _problem_metadata(problem: RadialProblem) -> dict:
    return {"d": problem.d, "shape": shape_label(problem.shape),
            "coupling": problem.coupling, "epsilon": problem.epsilon,
            "r_max": problem.r_max, "points": problem.points,
            "angular": problem.angular}


def spectral_report(problem: RadialProblem, k: int = 6) -> SpectralReport:
    op = build_radial_operator(problem)
    eigs = lowest_eigenvalues(op, min(k, op.size))
    return SpectralReport(eigenvalues=tuple(float(e) for e in eigs),
                          ground_energy=float(eigs[0]),
                          negative_count=sturm_count_below(op, 0.0),
                          metadata=_problem_metadata(problem))


# ---------------------------------------------------------------------------
# Critical coupling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CriticalCouplingResult:
    """Bisection outcome for the coupling where the ground energy vanishes."""

    coupling: float
    bracket: tuple[float, float]
    ground_energy: float
    iterations: int
    witness_epsilon: float
    witness_energy: float

    def to_record(self) -> dict:
        return {"coupling": self.coupling, "bracket": list(self.bracket),
                "ground_energy": self.ground_energy,
                "iterations": self.iterations,
                "witness_epsilon": self.witness_epsilon,
                "witness_energy": self.witness_energy}


def critical_coupling(shape: PotentialShape, d: int, r_max: float, points: int,
                      angular: int = 0, energy_tol: float = 1e-10,
                      coupling_high: float | None = None,
                      witness_epsilon: float = 1e-3) -> CriticalCouplingResult:
    """Locate the coupling at which the lowest eigenvalue crosses zero.

    The coupling is doubled until the ground energy turns negative, then
    bisected until ``|ground energy| <= energy_tol``.  The result carries
    the final bracket and, as a witness of the virtual-level mechanism, the
    ground energy of the kinetic-defect operator at ``witness_epsilon``,
    which is strictly negative at the critical coupling.
    """

    def ground(lam: float, eps: float = 0.0) -> float:
        problem = RadialProblem(d=d, shape=shape, coupling=lam, r_max=r_max,
                                points=points, epsilon=eps, angular=angular)
        op = build_radial_operator(problem)
        return float(lowest_eigenvalues(op, 1)[0])

    iterations = 0
    lo = 0.0
    if ground(lo) < -energy_tol:
        raise ValueError("ground energy already negative at zero coupling")
    hi = 1.0 if coupling_high is None else float(coupling_high)
    for _ in range(70):
        iterations += 1
        if ground(hi) < -energy_tol:
            break
        lo = hi
        hi *= 2.0
    else:
        raise RuntimeError("no negative ground energy up to huge couplings")
    mid, g_mid = hi, ground(hi)
    for _ in range(300):
        if abs(g_mid) <= energy_tol or (hi - lo) <= 1e-15 * max(1.0, hi):
            break
        iterations += 1
        mid = 0.5 * (lo + hi)
        g_mid = ground(mid)
        if g_mid < -energy_tol:
            hi = mid
        else:
            lo = mid
    witness = ground(mid, witness_epsilon)
    return CriticalCouplingResult(coupling=float(mid), bracket=(float(lo), float(hi)),
                                  ground_energy=float(g_mid), iterations=iterations,
                                  witness_epsilon=witness_epsilon,
                                  witness_energy=float(witness))


@dataclass(frozen=True)
class ShootingCriticalResult:
    """Critical coupling located by node counting on the zero-energy equation."""

    coupling: float
    bracket: tuple[float, float]
    probe_radius: float
    iterations: int

    def to_record(self) -> dict:
        return {"coupling": self.coupling, "bracket": list(self.bracket),
                "probe_radius": self.probe_radius,
                "iterations": self.iterations}


def shooting_critical_coupling(shape: PotentialShape, d: int, angular: int = 0,
                               probe_radius: float = 1e6,
                               coupling_high: float | None = None,
                               rel_tol: float = 1e-12,
                               steps_per_unit: int = 200) -> ShootingCriticalResult:
    """Bracket the critical coupling by watching for the first node.

    Below the critical coupling the zero-energy solution stays positive
    forever; at the critical value its first node comes in from infinity.
    Bisecting the coupling on "has a sign change before ``probe_radius``"
    therefore converges to the threshold of the continuum equation itself,
    with accuracy limited by the probe radius (the node of a slightly
    supercritical coupling sits near ``1/(coupling - critical)``), not by
    any eigenvalue grid.  Use this when a zero-energy profile is to be integrated
    afterwards: profile and threshold then come from the same equation and
    the same integrator, so the profile carries no spurious growing-mode
    admixture.  The returned coupling is the node-free bracket end, hence a
    profile integrated at it has no sign change.
    """
    if probe_radius <= shape.resolution_scale:
        raise ValueError("probe radius must exceed the potential scale")

    def has_node(lam: float) -> bool:
        sol = zero_energy_solution(shape, d, lam, r_end=probe_radius,
                                   angular=angular,
                                   steps_per_unit=steps_per_unit)
        return sol.sign_changes > 0

    if has_node(0.0):
        raise ValueError("zero-energy solution already oscillates at zero "
                         "coupling; the uncoupled shape is not of positive type")
    iterations = 0
    lo = 0.0
    hi = 1.0 if coupling_high is None else float(coupling_high)
    for _ in range(70):
        iterations += 1
        if has_node(hi):
            break
        lo = hi
        hi *= 2.0
    else:
        raise RuntimeError("no node appears up to huge couplings")
    for _ in range(200):
        if (hi - lo) <= rel_tol * hi:
            break
        iterations += 1
        mid = 0.5 * (lo + hi)
        if has_node(mid):
            hi = mid
        else:
            lo = mid
    return ShootingCriticalResult(coupling=float(lo),
                                  bracket=(float(lo), float(hi)),
                                  probe_radius=float(probe_radius),
                                  iterations=iterations)


# ---------------------------------------------------------------------------
# Zero-energy solutions and decay fits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ZeroEnergySolution:
    """Zero-energy radial solution sampled on a logarithmic grid.

    ``u`` is the half-line solution (regular at the origin), ``psi`` the
    reduced wave function ``u / r^{(d-1)/2}``.  Both are stored through sign
    and log magnitude so slow and fast growth alike survive long ranges; the
    running renormalization count is kept for diagnostics.
    """

    d: int
    angular: int
    coupling: float
    shape_text: str
    r: np.ndarray
    sign: np.ndarray
    log_abs_u: np.ndarray
    log_abs_psi: np.ndarray
    sign_changes: int
    renormalizations: int
    growing_tail: bool

    def u(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return self.sign * np.exp(self.log_abs_u)

    def psi(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return self.sign * np.exp(self.log_abs_psi)


def zero_energy_solution(shape: PotentialShape, d: int, coupling: float,
                         r_end: float, angular: int = 0,
                         r_start: float | None = None,
                         steps_per_unit: int = 400) -> ZeroEnergySolution:
    """Integrate the zero-energy radial equation out to ``r_end``.

    In ``x = log r`` the equation ``u'' = [c_eff/r^2 + V(r)] u`` becomes
    ``w'' - w' = (c_eff + r^2 V) w`` with bounded coefficients for all the
    supported shapes, so fixed-step fourth-order Runge-Kutta per smooth
    segment (segments split at potential discontinuities) integrates it
    accurately over hundreds of decades.  The initial data follow the
    regular power ``u ~ r^{(d-1)/2 + angular}``; the state is renormalized
    whenever it outgrows 1e100, tracked by a log offset.
    """
    if r_end <= 0.0:
        raise ValueError("r_end must be positive")
    c_eff = centrifugal_constant(d, angular)
    growth = (d - 1) / 2.0 + angular
    if r_start is None:
        r_start = shape.resolution_scale * 1e-4
    if not 0.0 < r_start < r_end:
        raise ValueError("need 0 < r_start < r_end")

    x_breaks = [math.log(r_start)]
    for b in sorted(shape.breakpoints):
        if r_start < b < r_end:
            x_breaks.append(math.log(b))
    x_breaks.append(math.log(r_end))

    xs: list[float] = [x_breaks[0]]
    ws: list[float] = [1.0]
    offsets: list[float] = [0.0]
    w, dw, offset = 1.0, growth, 0.0
    renorms = 0

    for a_x, b_x in zip(x_breaks[:-1], x_breaks[1:]):
        n = max(4, int(math.ceil((b_x - a_x) * steps_per_unit)))
        hstep = (b_x - a_x) / n
        # Sample the smooth coefficient on nodes and midpoints at once,
        # nudging radii off the segment ends so discontinuous potentials are
        # evaluated on the branch belonging to this segment.
        r_lo, r_hi = math.exp(a_x), math.exp(b_x)
        nodes_x = a_x + hstep * np.arange(n + 1)
        mids_x = nodes_x[:-1] + 0.5 * hstep
        r_nodes = np.clip(np.exp(nodes_x), r_lo * (1.0 + 1e-12), r_hi * (1.0 - 1e-12))
        r_mids = np.clip(np.exp(mids_x), r_lo * (1.0 + 1e-12), r_hi * (1.0 - 1e-12))
        g_nodes = (c_eff + r_nodes ** 2 * potential_values(shape, coupling, r_nodes)).tolist()
        g_mids = (c_eff + r_mids ** 2 * potential_values(shape, coupling, r_mids)).tolist()

        x = a_x
        for i in range(n):
            g1 = g_nodes[i]
            g2 = g_mids[i]
            g4 = g_nodes[i + 1]
            k1w, k1d = dw, dw + g1 * w
            k2w = dw + 0.5 * hstep * k1d
            k2d = k2w + g2 * (w + 0.5 * hstep * k1w)
            k3w = dw + 0.5 * hstep * k2d
            k3d = k3w + g2 * (w + 0.5 * hstep * k2w)
            k4w = dw + hstep * k3d
            k4d = k4w + g4 * (w + hstep * k3w)
            w += hstep * (k1w + 2.0 * k2w + 2.0 * k3w + k4w) / 6.0
            dw += hstep * (k1d + 2.0 * k2d + 2.0 * k3d + k4d) / 6.0
            x += hstep
            big = max(abs(w), abs(dw))
            if big > 1e100:
                w /= big
                dw /= big
                offset += math.log(big)
                renorms += 1
            xs.append(x)
            ws.append(w)
            offsets.append(offset)

    x_arr = np.asarray(xs)
    w_arr = np.asarray(ws)
    off_arr = np.asarray(offsets)
    sign = np.sign(w_arr)
    with np.errstate(divide="ignore"):
        log_u = off_arr + np.log(np.abs(w_arr))
    log_psi = log_u - 0.5 * (d - 1) * x_arr
    flips = int(np.sum(sign[1:] * sign[:-1] < 0.0))
    tail = x_arr >= x_arr[-1] - 0.1 * (x_arr[-1] - x_arr[0])
    tail_fit = np.polyfit(x_arr[tail], log_psi[tail], 1)
    return ZeroEnergySolution(d=d, angular=angular, coupling=coupling,
                              shape_text=shape_label(shape),
                              r=np.exp(x_arr), sign=sign, log_abs_u=log_u,
                              log_abs_psi=log_psi, sign_changes=flips,
                              renormalizations=renorms,
                              growing_tail=bool(tail_fit[0] > 0.0))


class FitError(RuntimeError):
    """Raised when a decay window cannot support a power-law fit."""


@dataclass(frozen=True)
class DecayFit:
    """Power-law fit ``psi ~ r^-s`` over a window, with quality flags."""

    decay_exponent: float
    stderr: float
    classification: ThresholdClass
    curvature: float
    rejected: bool
    short_window: bool
    window: tuple[float, float]
    points: int

    def to_record(self) -> dict:
        return {"decay_exponent": self.decay_exponent, "stderr": self.stderr,
                "classification": self.classification.to_record(),
                "curvature": self.curvature, "rejected": self.rejected,
                "short_window": self.short_window,
                "window": list(self.window), "points": self.points}


def fit_decay_exponent(solution: ZeroEnergySolution,
                       fit_window: tuple[float, float]) -> DecayFit:
    """Least-squares power-law fit of ``psi`` over a radial window.

    The fit runs in log-log variables.  A sign change inside the window
    invalidates a power-law form and raises :class:`FitError`.  The report
    flags windows shorter than one decade (exponent poorly constrained) and
    rejects fits whose quadratic curvature contributes more than 0.05 to the
    exponent across the half-window.
    """
    lo, hi = float(fit_window[0]), float(fit_window[1])
    if not 0.0 < lo < hi:
        raise ValueError("fit window must satisfy 0 < lo < hi")
    mask = (solution.r >= lo) & (solution.r <= hi)
    if int(mask.sum()) < 10:
        raise FitError(f"only {int(mask.sum())} samples in window [{lo}, {hi}]")
    sign = solution.sign[mask]
    if np.any(sign == 0.0) or np.any(sign[1:] * sign[:-1] < 0.0):
        raise FitError("solution changes sign inside the fit window; "
                       "no power law applies")
    x = np.log(solution.r[mask])
    y = solution.log_abs_psi[mask]
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    n = x.size
    denom = float(np.sum((x - x.mean()) ** 2))
    stderr = math.sqrt(float(np.sum(resid ** 2)) / max(n - 2, 1) / denom)
    quad = np.polyfit(x, y, 2)
    curvature = abs(float(quad[0])) * (0.5 * (x.max() - x.min())) ** 2
    exponent = -float(slope)
    # Classify with a band reflecting the fit's own uncertainty: statistical
    # error plus curvature drift, floored at a percent-level systematic.
    band = max(0.02, 4.0 * float(stderr) + 2.0 * float(curvature))
    return DecayFit(decay_exponent=exponent, stderr=float(stderr),
                    classification=eigenvalue_or_resonance(solution.d, exponent,
                                                           tolerance=band),
                    curvature=float(curvature),
                    rejected=bool(curvature > 0.05),
                    short_window=bool(x.max() - x.min() < math.log(10.0) * (1 - 1e-9)),
                    window=(lo, hi), points=int(n))


# ---------------------------------------------------------------------------
# Kinetic-defect sweep
# ---------------------------------------------------------------------------


def sweep_kinetic_defect(shape: PotentialShape, d: int, coupling: float,
                         defects: Sequence[float], r_max: float, points: int,
                         angular: int = 0, k: int = 4) -> list[SpectralReport]:
    """Spectral reports of ``-(1-eps) Delta + coupling V`` for each defect."""
    reports = []
    for eps in defects:
        problem = RadialProblem(d=d, shape=shape, coupling=coupling, r_max=r_max,
                                points=points, epsilon=float(eps), angular=angular)
        reports.append(spectral_report(problem, k=k))
    return reports


# ---------------------------------------------------------------------------
# Critical inverse-square model on growing boxes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModeCountEntry:
    box_size: float
    count: int

    def to_record(self) -> dict:
        return {"box_size": self.box_size, "count": self.count}


def inverse_square_mode_counts(strength: float, box_sizes: Sequence[float],
                               nodes_per_decade: int = 300) -> list[ModeCountEntry]:
    """Negative modes of ``-u'' - strength/r^2`` on ``[1, R]`` per box size.

    Piecewise-linear finite elements on a geometric grid make the form
    exactly computable per cell (the ``1/r^2`` moments of hat functions have
    closed forms), and one Sturm/LDL pass per box yields the count.  Because
    the elements are a conforming trial space, counts never exceed the true
    ones; with a few hundred nodes per decade they match them for all
    strengths away from exact transitions.
    """
    if strength < 0.0:
        raise ValueError(f"strength must be >= 0, got {strength}")
    if not 8 <= nodes_per_decade <= 10000:
        raise ValueError("nodes_per_decade must lie in [8, 10000]")
    out = []
    for box in box_sizes:
        box = float(box)
        if box <= 1.0:
            raise ValueError(f"box sizes must exceed 1, got {box}")
        decades = math.log10(box)
        nodes = int(math.ceil(decades * nodes_per_decade)) + 1
        r = np.geomspace(1.0, box, nodes)
        a, b = r[:-1], r[1:]
        width = b - a
        log_ratio = np.log(b / a)
        stiff = 1.0 / width
        # Closed-form cell integrals of hat-function products against 1/r^2.
        moment_ll = (b * width / a - 2.0 * b * log_ratio + width) / width ** 2
        moment_rr = (width - 2.0 * a * log_ratio + a * width / b) / width ** 2
        moment_lr = ((a + b) * log_ratio - 2.0 * width) / width ** 2
        diag = (stiff[:-1] + stiff[1:]
                - strength * (moment_rr[:-1] + moment_ll[1:]))
        off = -stiff[1:-1] - strength * moment_lr[1:-1]
        out.append(ModeCountEntry(box_size=box,
                                  count=negative_inertia(diag, off)))
    return out


def mode_count_slope(entries: Sequence[ModeCountEntry]) -> float:
    """Least-squares slope of the negative-mode count against ``log R``."""
    if len(entries) < 2:
        raise ValueError("need at least two box sizes for a slope")
    x = np.log([e.box_size for e in entries])
    y = np.asarray([e.count for e in entries], dtype=float)
    return float(np.polyfit(x, y, 1)[0])
