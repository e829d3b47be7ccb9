"""Closed-form properties of the sextic potential.

The potential family is

    V(lam, x) = (1 - 12 lam) x**2 + 8 lam x**4 + 16 lam**2 x**6,

so that H = p**2 + V has the exact eigenpair exp(-x**2/2 - lam x**4), E = 1,
whenever lam >= 0.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate

from .errors import DomainError

TRIPLE_WELL_EDGE = -1.0 / 36.0
DOUBLE_WELL_EDGE = 1.0 / 12.0
_BOUNDARIES = (TRIPLE_WELL_EDGE, 0.0, DOUBLE_WELL_EDGE)


class Regime(enum.Enum):
    SINGLE_WELL_BELOW = "single-well (lam < -1/36)"
    TRIPLE_WELL = "triple-well (-1/36 < lam < 0)"
    SINGLE_WELL = "single-well (0 < lam < 1/12)"
    DOUBLE_WELL = "double-well (lam > 1/12)"
    DEGENERATE_BOUNDARY = "degenerate boundary"


@dataclass(frozen=True)
class PotentialShape:
    lam: float
    regime: Regime
    x_m_sq: Optional[float] = None
    x_M_sq: Optional[float] = None
    V_at_xm: Optional[float] = None
    V_at_xM: Optional[float] = None
    curvature_origin: float = 0.0
    curvature_xm: Optional[float] = None
    curvature_xM: Optional[float] = None


@dataclass(frozen=True)
class StationaryPoints:
    """Side minima (x_m) and barrier tops (x_M) of the triple well."""

    x_m_sq: float
    x_M_sq: float
    V_xm: float
    V_xM: float
    curvature_origin: float
    curvature_xm: float
    curvature_xM: float

    @property
    def curvatures(self):
        return (self.curvature_origin, self.curvature_xm, self.curvature_xM)


def evaluate_potential(lam, x):
    """V(lam, x); broadcasts over array ``x``."""
    x = np.asarray(x, dtype=float) if not np.isscalar(x) else x
    x2 = x * x
    return (1.0 - 12.0 * lam) * x2 + 8.0 * lam * x2 * x2 + 16.0 * lam * lam * x2 * x2 * x2


def potential_derivative(lam, x):
    x = np.asarray(x, dtype=float) if not np.isscalar(x) else x
    x2 = x * x
    return x * (2.0 * (1.0 - 12.0 * lam) + 32.0 * lam * x2 + 96.0 * lam * lam * x2 * x2)


def potential_second_derivative(lam, x):
    x = np.asarray(x, dtype=float) if not np.isscalar(x) else x
    x2 = x * x
    return 2.0 * (1.0 - 12.0 * lam) + 96.0 * lam * x2 + 480.0 * lam * lam * x2 * x2


def _on_boundary(lam):
    for b in _BOUNDARIES:
        if lam == b or abs(lam - b) <= 4.0 * np.finfo(float).eps * abs(b):
            return True
    return False


def _outer_root_forms(lam):
    # x^2 = (s - 2) / (12 lam) together with its potential value and curvature;
    # barrier tops for lam < 0, outer minima for lam > 1/12.
    s = math.sqrt(36.0 * lam + 1.0)
    u = (s - 2.0) / (12.0 * lam)
    value = (s - 2.0) * (s - 36.0 * lam + 1.0) / (54.0 * lam)
    curv = 8.0 * (36.0 * lam + 1.0 - 2.0 * s) / 3.0
    return u, value, curv


def stationary_points(lam: float) -> StationaryPoints:
    """Stationary points of the triple well, from the square-root closed forms.

    Raises
    ------
    DomainError
        If ``lam`` is outside the open interval (-1/36, 0).
    """
    lam = float(lam)
    if not (TRIPLE_WELL_EDGE < lam < 0.0) or _on_boundary(lam):
        raise DomainError(f"stationary points require -1/36 < lam < 0, got {lam!r}")
    s = math.sqrt(36.0 * lam + 1.0)
    x_m_sq = -(s + 2.0) / (12.0 * lam)
    V_xm = (s + 2.0) * (s + 36.0 * lam - 1.0) / (54.0 * lam)
    curv_xm = 8.0 * (36.0 * lam + 1.0 + 2.0 * s) / 3.0
    x_M_sq, V_xM, curv_xM = _outer_root_forms(lam)
    return StationaryPoints(
        x_m_sq=x_m_sq,
        x_M_sq=x_M_sq,
        V_xm=V_xm,
        V_xM=V_xM,
        curvature_origin=2.0 * (1.0 - 12.0 * lam),
        curvature_xm=curv_xm,
        curvature_xM=curv_xM,
    )


def classify_potential(lam: float) -> PotentialShape:
    """Regime of the potential and the stationary points that exist in it.

    Values of ``lam`` sitting on -1/36, 0 or 1/12 are reported as
    ``Regime.DEGENERATE_BOUNDARY`` with no stationary-point data, since the
    closed forms collapse there.
    """
    lam = float(lam)
    if not math.isfinite(lam):
        raise DomainError(f"lam must be finite, got {lam!r}")
    curv0 = 2.0 * (1.0 - 12.0 * lam)
    if _on_boundary(lam):
        return PotentialShape(lam, Regime.DEGENERATE_BOUNDARY, curvature_origin=curv0)
    if lam < TRIPLE_WELL_EDGE:
        return PotentialShape(lam, Regime.SINGLE_WELL_BELOW, curvature_origin=curv0)
    if lam < 0.0:
        sp = stationary_points(lam)
        return PotentialShape(
            lam,
            Regime.TRIPLE_WELL,
            x_m_sq=sp.x_m_sq,
            x_M_sq=sp.x_M_sq,
            V_at_xm=sp.V_xm,
            V_at_xM=sp.V_xM,
            curvature_origin=curv0,
            curvature_xm=sp.curvature_xm,
            curvature_xM=sp.curvature_xM,
        )
    if lam < DOUBLE_WELL_EDGE:
        return PotentialShape(lam, Regime.SINGLE_WELL, curvature_origin=curv0)
    u, value, curv = _outer_root_forms(lam)
    return PotentialShape(
        lam,
        Regime.DOUBLE_WELL,
        x_m_sq=u,
        V_at_xm=value,
        curvature_origin=curv0,
        curvature_xm=curv,
    )


def _require_nonnegative(lam):
    if lam < 0:
        raise DomainError(
            f"exp(-x^2/2 - lam x^4) is not square integrable for lam < 0 (lam={lam!r})"
        )


def exact_ground_state_value(lam, x):
    """phi(x) = exp(-x**2/2 - lam x**4), unnormalised."""
    _require_nonnegative(lam)
    x = np.asarray(x, dtype=float) if not np.isscalar(x) else x
    x2 = x * x
    return np.exp(-0.5 * x2 - lam * x2 * x2)


def exact_ground_state_second_derivative(lam, x):
    _require_nonnegative(lam)
    x = np.asarray(x, dtype=float) if not np.isscalar(x) else x
    g1 = -x - 4.0 * lam * x**3
    g2 = -1.0 - 12.0 * lam * x**2
    return (g1 * g1 + g2) * exact_ground_state_value(lam, x)


def ground_state_cutoff(lam: float) -> float:
    """x_cut solving x**2/2 + lam x**4 = 40 (phi has dropped to e^-40)."""
    _require_nonnegative(lam)
    if lam == 0:
        return math.sqrt(80.0)
    u = (-0.5 + math.sqrt(0.25 + 160.0 * lam)) / (2.0 * lam)
    return math.sqrt(u)


def _phi_sq_integral(lam, power):
    xc = ground_state_cutoff(lam)
    f = lambda x: x ** (2 * power) * math.exp(-x * x - 2.0 * lam * x**4)
    val, _ = integrate.quad(f, 0.0, xc, epsabs=0.0, epsrel=1e-13, limit=400)
    return 2.0 * val


def ground_state_norm_sq(lam: float) -> float:
    """<phi|phi> by adaptive quadrature over |x| <= x_cut."""
    _require_nonnegative(lam)
    return _phi_sq_integral(float(lam), 0)


def ground_state_moment(lam: float, power: int) -> float:
    """Normalised <x^(2*power)> in the exact ground state."""
    _require_nonnegative(lam)
    return _phi_sq_integral(float(lam), power) / _phi_sq_integral(float(lam), 0)
