import numpy as np
import pytest

from dipolekit import (
    NATURAL,
    SI,
    DipoleKind,
    DipoleVector,
    PairGeometry,
    TransitionSpec,
    ValidationError,
    angular_factor,
    polarization_basis,
    transverse_factor,
)
from conftest import random_rotation, random_unit

Z = np.array([0.0, 0.0, 1.0])
X = np.array([1.0, 0.0, 0.0])


class TestAngularFactor:
    def test_parallel_along_axis(self):
        assert angular_factor(Z, Z, Z) == -2.0

    def test_perpendicular(self):
        assert angular_factor(X, X, Z) == 1.0

    def test_magic_angle(self):
        # cos(theta) = 1/sqrt(3) kills 1 - 3 cos^2
        m = np.array([np.sqrt(2.0), 0.0, 1.0]) / np.sqrt(3.0)
        assert abs(angular_factor(m, m, Z)) < 1e-15

    def test_swap_symmetric(self, rng):
        for _ in range(20):
            m1, m2, e = rng.normal(size=3), rng.normal(size=3), random_unit(rng)
            assert angular_factor(m1, m2, e) == angular_factor(m2, m1, e)

    def test_non_unit_direction_rejected(self):
        with pytest.raises(ValidationError):
            angular_factor(Z, Z, np.array([0.0, 0.0, 1.5]))

    def test_bilinear(self, rng):
        m1, m2, e = rng.normal(size=3), rng.normal(size=3), random_unit(rng)
        base = angular_factor(m1, m2, e)
        assert np.isclose(angular_factor(2.5 * m1, m2, e), 2.5 * base, rtol=1e-14)
        assert np.isclose(angular_factor(m1, -0.3 * m2, e), -0.3 * base, rtol=1e-14)

    def test_rotation_invariant(self, rng):
        m1, m2, e = rng.normal(size=3), rng.normal(size=3), random_unit(rng)
        base = angular_factor(m1, m2, e)
        for _ in range(100):
            rot = random_rotation(rng)
            rotated = angular_factor(rot @ m1, rot @ m2, rot @ e)
            assert abs(rotated - base) < 1e-12 * max(1.0, abs(base))


class TestTransverseFactor:
    def test_longitudinal_removed(self):
        assert transverse_factor(Z, Z, Z) == 0.0

    def test_perpendicular(self):
        assert transverse_factor(X, X, Z) == 1.0

    def test_polarization_sum_oracle(self, rng):
        # closed kernel == explicit sum over any transverse polarization pair
        for _ in range(50):
            m1, m2, e = rng.normal(size=3), rng.normal(size=3), random_unit(rng)
            t1, t2 = polarization_basis(e)
            explicit = sum((m1 @ np.cross(e, t)) * (m2 @ np.cross(e, t))
                           for t in (t1, t2))
            assert abs(transverse_factor(m1, m2, e) - explicit) < 1e-14 * (
                1.0 + abs(explicit))

    def test_relation_to_angular(self, rng):
        for _ in range(50):
            m1, m2, e = rng.normal(size=3), rng.normal(size=3), random_unit(rng)
            lhs = transverse_factor(m1, m2, e)
            rhs = angular_factor(m1, m2, e) + 2.0 * (m1 @ e) * (m2 @ e)
            assert abs(lhs - rhs) < 1e-14 * (1.0 + abs(lhs))

    def test_non_unit_direction_rejected(self):
        with pytest.raises(ValidationError):
            transverse_factor(X, X, 0.9 * Z)


class TestPolarizationBasis:
    def test_orthonormal_transverse(self, rng):
        for _ in range(20):
            e = random_unit(rng)
            t1, t2 = polarization_basis(e)
            for t in (t1, t2):
                assert abs(np.linalg.norm(t) - 1.0) < 1e-14
                assert abs(t @ e) < 1e-14
            assert abs(t1 @ t2) < 1e-14


class TestGeometry:
    def test_separation_fields(self):
        geom = PairGeometry(np.array([1.0, 0, 0]), np.array([1.0, 0, 2.0]))
        assert geom.r == 2.0
        assert np.allclose(geom.e_r, Z)
        assert abs(np.linalg.norm(geom.e_r) - 1.0) < 1e-14

    def test_coincident_rejected(self):
        with pytest.raises(ValidationError):
            PairGeometry(np.zeros(3), np.zeros(3))

    def test_frozen_arrays(self):
        geom = PairGeometry.from_separation(Z)
        with pytest.raises(ValueError):
            geom.r_vec[0] = 1.0


class TestDipoleVector:
    def test_kind_tag(self):
        d = DipoleVector(Z, DipoleKind.PERMANENT_E)
        assert d.kind is DipoleKind.PERMANENT_E
        assert d.magnitude == 1.0

    def test_complex_rejected(self):
        with pytest.raises(ValidationError):
            DipoleVector(np.array([1.0 + 1.0j, 0, 0]), DipoleKind.TRANSITION)

    def test_non_finite_rejected(self):
        with pytest.raises(ValidationError):
            DipoleVector(np.array([np.inf, 0.0, 0.0]))


class TestTransitionSpec:
    def test_derived_quantities(self):
        ts = TransitionSpec(omega=2.0 * np.pi)
        geom = PairGeometry.from_separation(Z)
        assert np.isclose(ts.wavelength(NATURAL), 1.0)
        assert np.isclose(ts.x_omega(geom, NATURAL), 2.0 * np.pi)

    def test_positive_frequency_required(self):
        with pytest.raises(ValidationError):
            TransitionSpec(omega=0.0)
        with pytest.raises(ValidationError):
            TransitionSpec(omega=-1.0)


def test_unit_systems_consistent():
    assert NATURAL.mu0_over_4pi == 1.0
    assert NATURAL.hbar == 1.0 and NATURAL.c == 1.0
    assert np.isclose(SI.mu0, 4e-7 * np.pi)
