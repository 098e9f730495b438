"""Closed-form free-space couplings and the coupling spectral density.

Conventions (natural units shown; the unit system supplies mu0, hbar, c):

* classical / permanent coupling
      xi^P = (mu0 / 4 pi r^3) [m1.m2 - 3 (m1.e_r)(m2.e_r)]

* spectral density, k = omega / c, x = k r
      J(omega) = (mu0 hbar k^3 / 2 pi) * B(x)
      B(x) = A sin(x)/x - T [sin(x)/x^3 - cos(x)/x^2]
                         - R [sin(x)/x + 2 cos(x)/x^2 - 2 sin(x)/x^3]
      A = m1.m2,  R = (m1.e_r)(m2.e_r),  T = (m1 x e_r).(m2 x e_r) = A - R
  J is odd in omega and symmetric under swapping the dipole labels.

* resonant transition coupling, y = x_Omega = Omega r / c
      xi^T = (mu0 / 4 pi r^3) [ -(A - R) y^2 cos(y) + (A - 3R)(cos(y) + y sin(y)) ]
  This is the principal-value transform of J/(omega - Omega); it reduces to
  xi^P as y -> 0 with an O(y^2) remainder.  (The y sin(y) terms enter with a
  plus sign; the quadrature oracle in ``dipolekit.oracles`` pins this down.)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .model import (
    NATURAL,
    DipoleKind,
    PairGeometry,
    TransitionSpec,
    UnitSystem,
    dot3,
    moment_array,
    moment_kind,
    reduced_coupling,
)

# Below this |k r| the bracket functions lose digits to cancellation, so the
# closed forms switch to their power series (error < 1e-12 at the seam).
SMALL_X = 1e-2


@dataclass(frozen=True)
class SpectralPoint:
    omega: float
    value: float


@dataclass(frozen=True)
class CouplingResult:
    """A coupling strength plus its dimensionless reduced form.

    ``meta`` carries convergence/truncation information for estimators that
    have any (lattice sums, regulated quadratures); closed forms leave it None.
    """

    xi: float
    reduced: float
    meta: object = None


def _contractions(m1, m2, e_r: np.ndarray) -> tuple[float, float, float]:
    a = moment_array(m1)
    b = moment_array(m2)
    A = dot3(a, b)
    R = dot3(a, e_r) * dot3(b, e_r)
    T = dot3(np.cross(a, e_r), np.cross(b, e_r))
    return A, T, R


def spectral_braces(x, A: float, T: float, R: float):
    """B(x) as above; vectorized, with a series branch for small |x|.

    Even in x.  B(0) = A - (T + R)/3, which equals (2/3) A for T = A - R.
    """
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    small = ax < SMALL_X
    safe = np.where(small, 1.0, ax)
    s, c = np.sin(safe), np.cos(safe)
    direct = (A * s / safe
              - T * (s / safe**3 - c / safe**2)
              - R * (s / safe + 2.0 * c / safe**2 - 2.0 * s / safe**3))
    x2 = ax * ax
    x4 = x2 * x2
    series = (A * (1.0 - x2 / 6.0 + x4 / 120.0)
              - T * (1.0 / 3.0 - x2 / 30.0 + x4 / 840.0)
              - R * (1.0 / 3.0 - x2 / 10.0 + x4 / 168.0))
    out = np.where(small, series, direct)
    return out if out.ndim else float(out)


def classical_coupling(m1, m2, geom: PairGeometry,
                       units: UnitSystem = NATURAL) -> CouplingResult:
    """Static magnetic dipole-dipole interaction energy."""
    a = moment_array(m1)
    b = moment_array(m2)
    ang = dot3(a, b) - 3.0 * (dot3(a, geom.e_r) * dot3(b, geom.e_r))
    xi = units.mu0_over_4pi * ang / geom.r**3
    return CouplingResult(xi=xi, reduced=reduced_coupling(xi, m1, m2, geom, units))


def xi_permanent(m1, m2, geom: PairGeometry,
                 units: UnitSystem = NATURAL) -> CouplingResult:
    """Field-mediated coupling of two permanent moments.

    Identical to ``classical_coupling`` (same closed form, reused bit for bit);
    kept as a separate entry point because permanent and transition moments
    follow different formulas.
    """
    for m in (m1, m2):
        kind = moment_kind(m)
        if kind is DipoleKind.TRANSITION:
            raise ValidationError("xi_permanent expects permanent moments")
    return classical_coupling(m1, m2, geom, units)


def xi_transition(m1, m2, geom: PairGeometry, ts: TransitionSpec,
                  units: UnitSystem = NATURAL) -> CouplingResult:
    """Coherent coupling of two resonant transition moments.

    Only the principal-value (energy shift) part is computed; the decay
    partner of the transform is out of scope.
    """
    for m in (m1, m2):
        kind = moment_kind(m)
        if kind is not None and kind is not DipoleKind.TRANSITION:
            raise ValidationError("xi_transition expects transition moments")
    A, _, R = _contractions(m1, m2, geom.e_r)
    y = ts.x_omega(geom, units)
    bracket = (-(A - R) * y * y * np.cos(y)
               + (A - 3.0 * R) * (np.cos(y) + y * np.sin(y)))
    xi = units.mu0_over_4pi * bracket / geom.r**3
    return CouplingResult(xi=xi, reduced=reduced_coupling(xi, m1, m2, geom, units))


def spectral_density(omega: float, m1, m2, geom: PairGeometry,
                     units: UnitSystem = NATURAL) -> SpectralPoint:
    """Coupling spectral density J(omega) for the pair; odd in omega.

    Evaluated through |k| so that J(-omega) == -J(omega) holds exactly in
    floating point.  J(0) = 0 from the k^3 prefactor.
    """
    omega = float(omega)
    if omega == 0.0:
        return SpectralPoint(omega=0.0, value=0.0)
    A, T, R = _contractions(m1, m2, geom.e_r)
    k = abs(omega) / units.c
    braces = spectral_braces(k * geom.r, A, T, R)
    magnitude = units.mu0 * units.hbar * k**3 / (2.0 * np.pi) * braces
    return SpectralPoint(omega=omega, value=float(np.copysign(1.0, omega)) * magnitude)
