import numpy as np
import pytest

from dipolekit import (
    NATURAL,
    SI,
    DipoleKind,
    DipoleVector,
    PairGeometry,
    QuadratureSpec,
    TransitionSpec,
    ValidationError,
    classical_coupling,
    j12_angular_quadrature,
    spectral_density,
    xi_permanent,
    xi_transition,
    xi_transition_pv,
)
from dipolekit.freespace import spectral_braces
from conftest import random_rotation, random_unit

Z = np.array([0.0, 0.0, 1.0])
X = np.array([1.0, 0.0, 0.0])
GEOM_Z = PairGeometry.from_separation(Z)


class TestClassicalCoupling:
    def test_head_to_tail(self):
        assert classical_coupling(Z, Z, GEOM_Z).reduced == -2.0

    def test_side_by_side(self):
        assert classical_coupling(X, X, GEOM_Z).reduced == 1.0

    def test_magic_angle(self):
        m = np.array([np.sqrt(2.0), 0.0, 1.0]) / np.sqrt(3.0)
        assert abs(classical_coupling(m, m, GEOM_Z).reduced) < 1e-14

    def test_coincident_rejected(self):
        with pytest.raises(ValidationError):
            PairGeometry.from_separation(np.zeros(3))

    def test_si_matches_natural_reduced(self, rng):
        for _ in range(10):
            m1, m2 = rng.normal(size=3), rng.normal(size=3)
            nat = classical_coupling(m1, m2, GEOM_Z, NATURAL).reduced
            geom_si = PairGeometry.from_separation(1e-6 * Z)  # 1 um
            si = classical_coupling(1e-23 * m1, 1e-23 * m2, geom_si, SI).reduced
            assert np.isclose(si, nat, rtol=1e-12)


class TestXiPermanent:
    def test_identity_with_classical(self, rng):
        for _ in range(50):
            m1, m2 = rng.normal(size=3), rng.normal(size=3)
            geom = PairGeometry.from_separation(2.0 * random_unit(rng))
            assert xi_permanent(m1, m2, geom).xi == classical_coupling(m1, m2, geom).xi

    def test_transition_kind_rejected(self):
        d = DipoleVector(Z, DipoleKind.TRANSITION)
        with pytest.raises(ValidationError):
            xi_permanent(d, d, GEOM_Z)


class TestSpectralDensity:
    def test_zero_frequency(self):
        assert spectral_density(0.0, X, X, GEOM_Z).value == 0.0

    def test_perpendicular_at_kr_pi(self):
        # braces reduce to -T [sin/x^3 - cos/x^2] = -1/pi^2 at x = pi
        val = spectral_density(np.pi, X, X, GEOM_Z).value
        expected = (NATURAL.mu0 * NATURAL.hbar * np.pi**3 / (2 * np.pi)) * (-1.0 / np.pi**2)
        assert np.isclose(val, expected, rtol=1e-14)
        quad = j12_angular_quadrature(np.pi, X, X, GEOM_Z)
        assert abs(quad.value - val) <= 1e-8 * abs(val)

    def test_oddness_exact(self, rng):
        for _ in range(20):
            m1, m2 = rng.normal(size=3), rng.normal(size=3)
            geom = PairGeometry.from_separation(1.3 * random_unit(rng))
            w = float(rng.uniform(0.1, 20.0))
            assert spectral_density(-w, m1, m2, geom).value == -spectral_density(
                w, m1, m2, geom).value

    def test_label_swap_symmetry(self, rng):
        for _ in range(20):
            m1, m2 = rng.normal(size=3), rng.normal(size=3)
            e = random_unit(rng)
            g12 = PairGeometry.from_separation(e)
            g21 = PairGeometry.from_separation(-e)
            w = float(rng.uniform(0.1, 10.0))
            a = spectral_density(w, m1, m2, g12).value
            b = spectral_density(w, m2, m1, g21).value
            assert abs(a - b) <= 1e-14 * abs(a)

    def test_small_frequency_limit(self):
        # braces -> (2/3) m1.m2 as k r -> 0
        m1, m2 = np.array([0.3, -0.2, 0.9]), np.array([-1.1, 0.4, 0.2])
        val = spectral_density(1e-6, m1, m2, GEOM_Z).value
        pref = NATURAL.mu0 * NATURAL.hbar * (1e-6) ** 3 / (2 * np.pi)
        assert np.isclose(val, pref * (2.0 / 3.0) * (m1 @ m2), rtol=1e-9)

    def test_small_x_slope_is_cubic(self):
        m1, m2 = np.array([0.3, -0.2, 0.9]), np.array([-1.1, 0.4, 0.2])
        ws = np.logspace(-4, -2, 9)
        vals = [abs(spectral_density(w, m1, m2, GEOM_Z).value) for w in ws]
        slope = np.polyfit(np.log(ws), np.log(vals), 1)[0]
        assert abs(slope - 3.0) < 0.01

    def test_series_seam_continuity(self):
        # direct and series branches agree across the switch point
        A, T, R = 0.7, 0.4, 0.3
        lo = spectral_braces(0.01 * (1 - 1e-9), A, T, R)
        hi = spectral_braces(0.01 * (1 + 1e-9), A, T, R)
        assert abs(lo - hi) < 5e-12 * abs(hi)


class TestXiTransition:
    def test_perpendicular_at_x_pi(self):
        ts = TransitionSpec(omega=np.pi)
        res = xi_transition(X, X, GEOM_Z, ts)
        assert np.isclose(res.reduced, np.pi**2 - 1.0, rtol=1e-14)
        pv = xi_transition_pv(X, X, GEOM_Z, ts)
        assert abs(pv.xi - res.xi) <= 1e-4 * abs(res.xi)

    @pytest.mark.parametrize("x_om", [0.3, 1.0, 2.7])
    def test_longitudinal_form(self, x_om):
        # transverse cross-product term vanishes; reduced value is
        # -2 (cos x + x sin x), checked against the principal-value oracle
        ts = TransitionSpec(omega=x_om)
        res = xi_transition(Z, Z, GEOM_Z, ts)
        expected = -2.0 * (np.cos(x_om) + x_om * np.sin(x_om))
        assert np.isclose(res.reduced, expected, rtol=1e-13)
        pv = xi_transition_pv(Z, Z, GEOM_Z, ts)
        assert abs(pv.xi - res.xi) <= 1e-4 * max(abs(res.xi), 1e-6)

    def test_short_distance_limit(self, rng):
        for _ in range(10):
            m1, m2 = rng.normal(size=3), rng.normal(size=3)
            geom = PairGeometry.from_separation(random_unit(rng))
            if abs(classical_coupling(m1, m2, geom).reduced) < 0.3:
                continue
            ts = TransitionSpec(omega=1e-3)
            ratio = (xi_transition(m1, m2, geom, ts).xi
                     / xi_permanent(m1, m2, geom).xi)
            assert abs(ratio - 1.0) < 1e-5

    def test_remainder_quadratic(self):
        # longitudinal pair: xi_T / xi_P - 1 = x^2/2 + O(x^4)
        xs = np.logspace(-4, -2, 7)
        rems = []
        for x in xs:
            ts = TransitionSpec(omega=x)
            rems.append(abs(xi_transition(Z, Z, GEOM_Z, ts).xi
                            / xi_permanent(Z, Z, GEOM_Z).xi - 1.0))
        slope = np.polyfit(np.log(xs), np.log(rems), 1)[0]
        assert abs(slope - 2.0) < 0.05

    def test_exchange_symmetry(self, rng):
        for _ in range(10):
            m1, m2 = rng.normal(size=3), rng.normal(size=3)
            e = random_unit(rng)
            ts = TransitionSpec(omega=1.7)
            a = xi_transition(m1, m2, PairGeometry.from_separation(e), ts).xi
            b = xi_transition(m2, m1, PairGeometry.from_separation(-e), ts).xi
            assert np.isclose(a, b, rtol=1e-13, atol=1e-15)

    def test_rotational_covariance(self, rng):
        m1, m2 = rng.normal(size=3), rng.normal(size=3)
        e = random_unit(rng)
        ts = TransitionSpec(omega=2.2)
        base = xi_transition(m1, m2, PairGeometry.from_separation(e), ts).reduced
        for _ in range(20):
            rot = random_rotation(rng)
            rotated = xi_transition(rot @ m1, rot @ m2,
                                    PairGeometry.from_separation(rot @ e), ts).reduced
            assert abs(rotated - base) < 1e-12 * max(1.0, abs(base))

    def test_permanent_kind_rejected(self):
        d = DipoleVector(Z, DipoleKind.PERMANENT_G)
        with pytest.raises(ValidationError):
            xi_transition(d, d, GEOM_Z, TransitionSpec(omega=1.0))

    def test_nonpositive_omega_rejected(self):
        with pytest.raises(ValidationError):
            TransitionSpec(omega=-2.0)
