import numpy as np
import pytest

from dipolekit import (
    ConvergenceError,
    PairGeometry,
    QuadratureSpec,
    TransitionSpec,
    ValidationError,
    classical_coupling,
    j12_angular_quadrature,
    kernel_reduction_scale,
    retarded_kernel,
    spectral_density,
    xi_permanent_quadrature,
    xi_transition,
    xi_transition_pv,
)
from conftest import random_unit

Z = np.array([0.0, 0.0, 1.0])
X = np.array([1.0, 0.0, 0.0])
Y = np.array([0.0, 1.0, 0.0])
GEOM_Z = PairGeometry.from_separation(Z)


class TestQuadratureSpec:
    def test_minimum_nodes(self):
        with pytest.raises(ValidationError):
            QuadratureSpec(n_theta=4)

    def test_eta_schedule_must_decrease(self):
        with pytest.raises(ValidationError):
            QuadratureSpec(eta_schedule=(0.1, 0.2))
        with pytest.raises(ValidationError):
            QuadratureSpec(eta_schedule=(0.1, -0.05))


class TestAngularQuadrature:
    def test_matches_closed_form(self, rng):
        for _ in range(5):
            m1, m2 = rng.normal(size=3), rng.normal(size=3)
            geom = PairGeometry.from_separation(random_unit(rng))
            closed = spectral_density(1.0, m1, m2, geom).value
            est = j12_angular_quadrature(1.0, m1, m2, geom)
            assert abs(est.value - closed) <= 1e-10 * abs(closed)
            assert abs(est.value - closed) <= max(est.accuracy, 1e-14 * abs(closed))

    def test_longitudinal_branch(self, rng):
        # moments along the separation: only the longitudinal bracket survives
        for kr in (0.7, 3.0, 9.0):
            closed = spectral_density(kr, Z, Z, GEOM_Z).value
            est = j12_angular_quadrature(kr, Z, Z, GEOM_Z)
            assert abs(est.value - closed) <= 1e-10 * max(abs(closed), 1e-12)

    def test_small_frequency_series_limit(self):
        m1, m2 = np.array([0.2, 0.5, -0.4]), np.array([1.0, -0.3, 0.8])
        omega = 1e-3
        est = j12_angular_quadrature(omega, m1, m2, GEOM_Z)
        closed = spectral_density(omega, m1, m2, GEOM_Z).value
        assert abs(est.value - closed) <= 1e-6 * abs(closed)

    def test_node_rule_refusal(self):
        with pytest.raises(ValidationError, match="n_theta"):
            j12_angular_quadrature(50.0, X, X, GEOM_Z, QuadratureSpec())

    def test_doubling_within_reported_accuracy(self, rng):
        m1, m2 = rng.normal(size=3), rng.normal(size=3)
        geom = PairGeometry.from_separation(1.4 * random_unit(rng))
        spec = QuadratureSpec(n_theta=48, n_phi=96)
        est = j12_angular_quadrature(2.0, m1, m2, geom, spec)
        doubled = j12_angular_quadrature(
            2.0, m1, m2, geom, QuadratureSpec(n_theta=96, n_phi=192))
        assert abs(doubled.value - est.value) <= est.accuracy

    def test_deterministic(self):
        a = j12_angular_quadrature(2.37, X, Y, GEOM_Z)
        b = j12_angular_quadrature(2.37, X, Y, GEOM_Z)
        assert a.value == b.value and a.accuracy == b.accuracy


class TestPermanentQuadrature:
    def test_matches_classical(self, rng):
        for _ in range(5):
            m1, m2 = rng.normal(size=3), rng.normal(size=3)
            geom = PairGeometry.from_separation(random_unit(rng))
            closed = classical_coupling(m1, m2, geom)
            if abs(closed.reduced) < 0.3:
                continue
            quad = xi_permanent_quadrature(m1, m2, geom)
            assert abs(quad.xi - closed.xi) <= 1e-4 * abs(closed.xi)

    def test_magic_angle_zero(self):
        m = np.array([np.sqrt(2.0), 0.0, 1.0]) / np.sqrt(3.0)
        quad = xi_permanent_quadrature(m, m, GEOM_Z)
        assert abs(quad.reduced) < 1e-10

    def test_parallel_longitudinal(self):
        quad = xi_permanent_quadrature(Z, Z, GEOM_Z)
        assert abs(quad.reduced - (-2.0)) <= 2e-4

    def test_deterministic(self):
        a = xi_permanent_quadrature(X, Y + Z, GEOM_Z)
        b = xi_permanent_quadrature(X, Y + Z, GEOM_Z)
        assert a.xi == b.xi

    def test_tolerance_failure_raises(self):
        with pytest.raises(ConvergenceError) as err:
            xi_permanent_quadrature(Z, Z, GEOM_Z, tol=1e-16)
        assert len(err.value.series) > 0


class TestTransitionPv:
    def test_perpendicular_x2(self):
        ts = TransitionSpec(omega=2.0)
        pv = xi_transition_pv(X, X, GEOM_Z, ts)
        closed = xi_transition(X, X, GEOM_Z, ts)
        assert abs(pv.xi - closed.xi) <= 1e-4 * abs(closed.xi)
        assert pv.meta.residual < 1e-4 * abs(closed.xi)

    def test_short_distance_limit_matches_classical(self):
        ts = TransitionSpec(omega=1e-3)
        pv = xi_transition_pv(Z, Z, GEOM_Z, ts)
        classical = classical_coupling(Z, Z, GEOM_Z)
        assert abs(pv.xi - classical.xi) <= 2e-4 * abs(classical.xi)

    def test_fully_orthogonal_vanishes(self):
        # m1 . m2 = 0 with both transverse: every bilinear term of J is zero
        ts = TransitionSpec(omega=1.3)
        pv = xi_transition_pv(X, Y, GEOM_Z, ts)
        assert abs(pv.reduced) < 1e-10

    def test_window_independence(self):
        ts = TransitionSpec(omega=2.0)
        closed = xi_transition(X, X, GEOM_Z, ts)
        vals = []
        residuals = []
        for delta in (2.0 / 20.0, 2.0 / 50.0, 2.0 / 200.0):
            res = xi_transition_pv(X, X, GEOM_Z, ts, delta=delta)
            vals.append(res.xi)
            residuals.append(res.meta.residual)
        spread = max(vals) - min(vals)
        assert spread <= max(residuals) + 1e-12 * abs(closed.xi)

    def test_deterministic(self):
        ts = TransitionSpec(omega=0.9)
        a = xi_transition_pv(X + Z, Y, GEOM_Z, ts)
        b = xi_transition_pv(X + Z, Y, GEOM_Z, ts)
        assert a.xi == b.xi

    def test_bad_window_rejected(self):
        ts = TransitionSpec(omega=1.0)
        with pytest.raises(ValidationError):
            xi_transition_pv(X, X, GEOM_Z, ts, delta=2.0)

    def test_tolerance_failure_carries_sequence(self):
        ts = TransitionSpec(omega=2.0)
        with pytest.raises(ConvergenceError) as err:
            xi_transition_pv(X, X, GEOM_Z, ts, tol=1e-16)
        assert err.value.residual > 0
        assert len(err.value.series) == len(QuadratureSpec().eta_schedule)


class TestRetardedKernel:
    def test_zero_delay(self):
        pts = retarded_kernel(X, X, GEOM_Z, np.array([0.0, 0.5, 1.0]))
        assert pts[0].value == 0.0

    def test_odd_in_s(self):
        # mirrored grid, exact to the bit so only the kernel's parity is probed
        s_pos = np.linspace(0.1, 3.0, 30)
        s = np.concatenate([-s_pos[::-1], [0.0], s_pos])
        pts = retarded_kernel(X, X, GEOM_Z, s)
        vals = np.array([p.value for p in pts])
        assert np.max(np.abs(vals + vals[::-1])) <= 1e-14 * np.max(np.abs(vals))

    def test_light_cone_peak(self):
        s = np.linspace(0.0, 3.0, 301)
        spec = QuadratureSpec(omega_cut=50.0)  # omega_cut * r / c = 50
        pts = retarded_kernel(X, X, GEOM_Z, s, spec)
        vals = np.abs([p.value for p in pts])
        s_peak = s[int(np.argmax(vals))]
        assert 0.95 <= s_peak <= 1.05

    def test_unsorted_grid_rejected(self):
        with pytest.raises(ValidationError):
            retarded_kernel(X, X, GEOM_Z, np.array([1.0, 0.0]))

    def test_nonpositive_cutoff_rejected(self):
        with pytest.raises(ValidationError):
            QuadratureSpec(omega_cut=-5.0)

    def test_reduction_scale(self):
        # reduced kernel is dimensionless: scale has units 1/(K units)
        g = PairGeometry.from_separation(2.0 * Z)
        assert kernel_reduction_scale(X, X, g) == 4.0 * np.pi * 16.0 / (4.0 * np.pi)
