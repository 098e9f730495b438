"""Core geometry, moments, units, and the two angular contraction kernels.

Everything downstream is built from two scalar contractions of a pair of
moment vectors against a unit direction:

* ``angular_factor``    m1.m2 - 3 (m1.e)(m2.e)   (static dipole pattern)
* ``transverse_factor`` m1.m2 -   (m1.e)(m2.e)   (polarization-summed pattern)

Internally everything is evaluated in the unit system handed in; the default
is natural units with mu0/(4 pi) = hbar = c = 1, so couplings reduce to pure
geometry times moment magnitudes.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

_UNIT_TOL = 1e-12


class DipoleKind(enum.Enum):
    PERMANENT_E = "permanent-e"
    PERMANENT_G = "permanent-g"
    TRANSITION = "transition"


@dataclass(frozen=True)
class UnitSystem:
    """Physical constants used by every coupling formula.

    ``natural`` sets mu0/(4 pi) = hbar = c = 1.  Reduced couplings
    (xi * 4 pi r^3 / (mu0 |m1||m2|)) are identical in both systems.
    """

    name: str
    mu0: float
    hbar: float
    c: float

    @property
    def mu0_over_4pi(self) -> float:
        return self.mu0 / (4.0 * np.pi)


NATURAL = UnitSystem(name="natural", mu0=4.0 * np.pi, hbar=1.0, c=1.0)
SI = UnitSystem(name="si", mu0=4.0e-7 * np.pi, hbar=1.054571817e-34, c=299792458.0)

_UNIT_SYSTEMS = {"natural": NATURAL, "si": SI}


def unit_system(name: str) -> UnitSystem:
    try:
        return _UNIT_SYSTEMS[name.lower()]
    except KeyError:
        raise ValidationError(f"unknown unit system {name!r}; choose natural or si") from None


def _as_vector(v, name: str) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.shape != (3,):
        raise ValidationError(f"{name} must be a real 3-vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} has non-finite components: {arr}")
    return arr


@dataclass(frozen=True)
class DipoleVector:
    """A magnetic moment vector tagged with its physical role.

    Transition moments are real by phase convention, which the float
    array type enforces structurally.
    """

    m: np.ndarray
    kind: DipoleKind = DipoleKind.TRANSITION

    def __post_init__(self):
        vec = np.asarray(self.m)
        if np.iscomplexobj(vec):
            raise ValidationError("moment vector must be real (phase convention)")
        vec = _as_vector(vec, "moment")
        vec.setflags(write=False)
        object.__setattr__(self, "m", vec)

    @property
    def magnitude(self) -> float:
        return float(np.linalg.norm(self.m))


def moment_array(m) -> np.ndarray:
    """Accept a DipoleVector or any 3-vector; return the float array."""
    if isinstance(m, DipoleVector):
        return m.m
    return _as_vector(m, "moment")


def moment_kind(m) -> DipoleKind | None:
    return m.kind if isinstance(m, DipoleVector) else None


@dataclass(frozen=True)
class PairGeometry:
    """Two dipole positions and the derived separation data.

    Coincident dipoles are rejected: every coupling here is evaluated at
    r != 0 and the r = 0 contact term is excluded by construction.
    """

    x1: np.ndarray
    x2: np.ndarray
    r_vec: np.ndarray = field(init=False)
    r: float = field(init=False)
    e_r: np.ndarray = field(init=False)

    def __post_init__(self):
        x1 = _as_vector(self.x1, "x1")
        x2 = _as_vector(self.x2, "x2")
        r_vec = x2 - x1
        r = float(np.linalg.norm(r_vec))
        if r <= 0.0:
            raise ValidationError("coincident dipoles: separation must be nonzero")
        e_r = r_vec / r
        for arr in (x1, x2, r_vec, e_r):
            arr.setflags(write=False)
        object.__setattr__(self, "x1", x1)
        object.__setattr__(self, "x2", x2)
        object.__setattr__(self, "r_vec", r_vec)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "e_r", e_r)

    @classmethod
    def from_separation(cls, r_vec) -> "PairGeometry":
        """Geometry with dipole 1 at the origin and dipole 2 at r_vec."""
        return cls(np.zeros(3), _as_vector(r_vec, "r_vec"))


@dataclass(frozen=True)
class TransitionSpec:
    """Resonant transition frequency shared by both dipoles.

    The two dipoles are assumed resonant; detuned pairs are rejected at
    construction (a single Omega is the only way to build one).
    """

    omega: float

    def __post_init__(self):
        if not (self.omega > 0.0 and np.isfinite(self.omega)):
            raise ValidationError(f"transition frequency must be positive, got {self.omega}")

    def wavelength(self, units: UnitSystem = NATURAL) -> float:
        return 2.0 * np.pi * units.c / self.omega

    def x_omega(self, geom: PairGeometry, units: UnitSystem = NATURAL) -> float:
        """Dimensionless retardation parameter Omega r / c = 2 pi r / lambda."""
        return self.omega * geom.r / units.c


def _check_unit(e: np.ndarray, name: str) -> None:
    norm = float(np.linalg.norm(e))
    if abs(norm - 1.0) > _UNIT_TOL:
        raise ValidationError(f"{name} must be a unit vector; |{name}| = {norm!r}")


def dot3(u: np.ndarray, v: np.ndarray) -> float:
    # fixed-order elementwise product: exactly symmetric in (u, v), unlike
    # BLAS-backed np.dot, so swap-symmetry contracts hold bit for bit
    return float(u[0] * v[0] + (u[1] * v[1] + u[2] * v[2]))


def angular_factor(m1, m2, e_r) -> float:
    """m1.m2 - 3 (m1.e_r)(m2.e_r), the static dipole-dipole angular pattern."""
    a = moment_array(m1)
    b = moment_array(m2)
    e = _as_vector(e_r, "e_r")
    _check_unit(e, "e_r")
    return dot3(a, b) - 3.0 * (dot3(a, e) * dot3(b, e))


def transverse_factor(m1, m2, e_k) -> float:
    """m1.m2 - (m1.e_k)(m2.e_k): the two-polarization sum for propagation e_k."""
    a = moment_array(m1)
    b = moment_array(m2)
    e = _as_vector(e_k, "e_k")
    _check_unit(e, "e_k")
    return dot3(a, b) - dot3(a, e) * dot3(b, e)


def polarization_basis(e_k) -> tuple[np.ndarray, np.ndarray]:
    """Two orthonormal directions transverse to e_k.

    Built by Gram-Schmidt from whichever axis is least aligned with e_k;
    any valid choice gives the same polarization-summed contractions.
    """
    e = _as_vector(e_k, "e_k")
    _check_unit(e, "e_k")
    seed = np.zeros(3)
    seed[int(np.argmin(np.abs(e)))] = 1.0
    t1 = seed - (seed @ e) * e
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(e, t1)
    return t1, t2


def reduced_coupling(xi: float, m1, m2, geom: PairGeometry,
                     units: UnitSystem = NATURAL) -> float:
    """Dimensionless geometric part: xi * 4 pi r^3 / (mu0 |m1||m2|)."""
    a = moment_array(m1)
    b = moment_array(m2)
    scale = units.mu0_over_4pi * float(np.linalg.norm(a)) * float(np.linalg.norm(b))
    if scale == 0.0:
        raise ValidationError("reduced coupling undefined for a zero moment")
    return xi * geom.r**3 / scale
