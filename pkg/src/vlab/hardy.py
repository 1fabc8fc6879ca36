"""Hardy-type constants, decay-rate bounds and threshold classification.

The catalogue collects the classical radial Hardy constant, its sharpening on
angular sectors, the sharp constant for three one-dimensional fermions, and
the supremum decay rates of threshold solutions for several potential-tail
classes, together with the eigenvalue/resonance dichotomy those rates decide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

__all__ = [
    "hardy_constant",
    "angular_hardy_constant",
    "FermionSectorResult",
    "three_fermion_1d_check",
    "DecayQuery",
    "DecayBoundResult",
    "decay_bound",
    "ThresholdClass",
    "eigenvalue_or_resonance",
]

_CLASSIFICATION_TOL = 1e-12


def hardy_constant(d: int) -> float:
    """Sharp constant in ``int |grad u|^2 >= C int |u|^2 / |x|^2`` on R^d.

    Defined for ``d >= 3``; the constant is ``(d-2)^2 / 4``.
    """
    d = int(d)
    if d < 3:
        raise ValueError(f"the radial Hardy constant needs dimension >= 3, got {d}")
    return (d - 2) ** 2 / 4.0


def angular_hardy_constant(angular_momentum: int, ambient_dim: int) -> float:
    """Improved Hardy constant on the sector of fixed angular momentum.

    On functions of angular momentum ``l`` in dimension ``n`` the radial
    inverse-square bound improves to ``L(L+1)`` with ``L = l + (n-3)/2``.
    """
    l = int(angular_momentum)
    n = int(ambient_dim)
    if l < 0:
        raise ValueError(f"angular momentum must be >= 0, got {l}")
    if n < 2:
        raise ValueError(f"ambient dimension must be >= 2, got {n}")
    big_l = l + (n - 3) / 2.0
    if big_l < -0.5:
        raise ValueError(f"sector parameter {big_l} below -1/2 is not admissible")
    return big_l * (big_l + 1.0)


@dataclass(frozen=True)
class FermionSectorResult:
    """Discrete Rayleigh-quotient scan of the antisymmetric 1D triple sector."""

    min_rayleigh: float
    minimizing_mode: int
    per_mode: tuple[float, ...]
    boundary: str
    log_span: float
    points: int

    def to_record(self) -> dict:
        return {"min_rayleigh": self.min_rayleigh,
                "minimizing_mode": self.minimizing_mode,
                "per_mode": list(self.per_mode), "boundary": self.boundary,
                "log_span": self.log_span, "points": self.points}


def three_fermion_1d_check(rho0: float = 1.0, rho1: float = 1.0e4,
                           points: int = 2000, modes: int = 10,
                           boundary: str = "natural") -> FermionSectorResult:
    """Minimal Rayleigh quotient of the inverse-square form on the fermionic sector.

    Three one-dimensional fermions reduce, after removing the centre of mass,
    to the plane, and antisymmetry restricts angular behaviour to the modes
    ``sin(3 k theta)``.  Writing radial trial functions in the logarithmic
    variable ``s = log rho`` over ``[log rho0, log rho1]`` turns the sector
    Rayleigh quotient ``int |grad psi|^2 / int |psi|^2 rho^-2`` at mode ``k``
    into

        ``9 k^2 + (int a'(s)^2 ds) / (int a(s)^2 ds)``,

    so the infimum over the sector is 9, attained in the lowest mode by
    constant radial profiles.  With ``boundary="natural"`` the discrete
    minimum is exactly ``9 k^2`` per mode; with ``boundary="dirichlet"`` the
    trial functions vanish at both ends and the minimum exceeds 9 by the
    lowest string eigenvalue ``(pi / log(rho1/rho0))^2``, decreasing to 9 as
    the annulus widens.
    """
    if not 0.0 < rho0 < rho1:
        raise ValueError("need 0 < rho0 < rho1")
    if points < 8:
        raise ValueError("need at least 8 radial points")
    if modes < 1:
        raise ValueError("need at least one angular mode")
    if boundary not in ("natural", "dirichlet"):
        raise ValueError(f"unknown boundary handling {boundary!r}")
    span = math.log(rho1 / rho0)
    h = span / (points - 1)
    # One-dimensional stiffness matrix of linear elements on a uniform grid.
    diag = np.full(points, 2.0 / h)
    diag[0] = diag[-1] = 1.0 / h
    off = np.full(points - 1, -1.0 / h)
    weights = np.full(points, h)
    weights[0] = weights[-1] = 0.5 * h
    if boundary == "dirichlet":
        diag, off, weights = diag[1:-1], off[1:-1], weights[1:-1]
    scale = 1.0 / np.sqrt(weights)
    sym_diag = diag * scale ** 2
    sym_off = off * scale[:-1] * scale[1:]
    string_min = float(eigh_tridiagonal(sym_diag, sym_off, select="i",
                                        select_range=(0, 0))[0][0])
    per_mode = tuple(9.0 * k * k + string_min for k in range(1, modes + 1))
    best = int(np.argmin(per_mode))
    return FermionSectorResult(min_rayleigh=float(per_mode[best]),
                               minimizing_mode=best + 1, per_mode=per_mode,
                               boundary=boundary, log_span=span, points=points)


@dataclass(frozen=True)
class DecayQuery:
    """Inputs for a decay-rate bound; unused fields stay ``None``.

    ``mode`` selects the setting: ``"short_range"`` (bounded potentials of
    compact support or faster-than-inverse-square decay), ``"critical_tail"``
    (repulsive tail ``tail_strength / r^2``), ``"subcritical_tail"``
    (repulsive tail ``~ r^-tail_power`` with ``0 < tail_power < 2``), or
    ``"n_body"`` (N particles in dimension n with short-range pair forces).
    """

    mode: str
    d: int | None = None
    n: int | None = None
    N: int | None = None
    tail_strength: float | None = None
    tail_power: float | None = None


@dataclass(frozen=True)
class DecayBoundResult:
    """Supremum decay rate of nonnegative threshold solutions.

    ``alpha_sup`` bounds power decay ``|x|^-alpha`` (kind ``"power"``);
    ``stretch_exponent`` bounds stretched-exponential decay
    ``exp(-c r^kappa)`` (kind ``"stretched"``).
    """

    kind: str
    alpha_sup: float | None = None
    stretch_exponent: float | None = None

    def to_record(self) -> dict:
        return {"kind": self.kind, "alpha_sup": self.alpha_sup,
                "stretch_exponent": self.stretch_exponent}


def decay_bound(query: DecayQuery) -> DecayBoundResult:
    """Best-possible decay rate for each potential-tail setting."""
    mode = query.mode
    if mode == "short_range":
        if query.d is None or query.d < 3:
            raise ValueError("short_range needs dimension d >= 3")
        return DecayBoundResult(kind="power", alpha_sup=(query.d - 2) / 2.0)
    if mode == "critical_tail":
        if query.d is None or query.d < 3:
            raise ValueError("critical_tail needs dimension d >= 3")
        if query.tail_strength is None or query.tail_strength < 0.0:
            raise ValueError("critical_tail needs tail_strength >= 0")
        return DecayBoundResult(
            kind="power",
            alpha_sup=math.sqrt(query.tail_strength + (query.d - 2) ** 2 / 4.0))
    if mode == "subcritical_tail":
        if query.tail_power is None or not 0.0 < query.tail_power < 2.0:
            raise ValueError("subcritical_tail needs tail_power in (0, 2)")
        if query.tail_strength is not None and query.tail_strength <= 0.0:
            raise ValueError("subcritical_tail needs a positive tail")
        return DecayBoundResult(kind="stretched",
                                stretch_exponent=1.0 - query.tail_power / 2.0)
    if mode == "n_body":
        if query.n is None or query.N is None or query.n < 3 or query.N < 3:
            raise ValueError("n_body needs n >= 3 and N >= 3")
        reduced_dim = query.n * (query.N - 1)
        return DecayBoundResult(kind="power", alpha_sup=(reduced_dim - 2) / 2.0)
    raise ValueError(f"unknown decay mode {mode!r}")


@dataclass(frozen=True)
class ThresholdClass:
    """Eigenvalue/resonance verdict for a threshold solution decay rate."""

    label: str
    marginal: bool

    @property
    def csv_label(self) -> str:
        return f"{self.label}-marginal" if self.marginal else self.label

    def to_record(self) -> dict:
        return {"label": self.label, "marginal": self.marginal}


def eigenvalue_or_resonance(d: int, alpha_decay: float,
                            tolerance: float | None = None) -> ThresholdClass:
    """Classify a threshold solution decaying like ``|x|^-alpha`` in R^d.

    Square-integrability of ``|x|^-alpha`` at infinity needs ``2 alpha > d``:
    then the solution is an eigenfunction; for ``2 alpha <= d`` it is a
    resonance, with the borderline ``2 alpha = d`` flagged as marginal.

    ``tolerance`` widens the marginal band on ``2 alpha - d``; pass the
    uncertainty of a fitted decay rate so borderline fits are reported as
    marginal rather than assigned to an arbitrary side.  By default only
    rounding-level coincidences count as marginal.
    """
    d = int(d)
    if d < 1:
        raise ValueError(f"dimension must be positive, got {d}")
    alpha = float(alpha_decay)
    gap = 2.0 * alpha - d
    scale = max(1.0, abs(d), 2.0 * abs(alpha))
    band = _CLASSIFICATION_TOL * scale if tolerance is None else float(tolerance)
    if abs(gap) <= band:
        return ThresholdClass(label="resonance", marginal=True)
    if gap > 0.0:
        return ThresholdClass(label="eigenvalue", marginal=False)
    return ThresholdClass(label="resonance", marginal=False)
