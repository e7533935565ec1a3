import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from services.exceptions import ConfigInvalid
from services.integrator import integrate
from services.relsym import (BoostedParticle, CylinderGeodesic, LightClock, Particle1D,
                             body_length, boosted_body, clock_dilation, commutation_residual, group_action,
                             momentum_transform, point_masses, quasi_periodicity_residual, rest_body,
                             simultaneity_check, velocity_add)

velocities = st.floats(min_value=-0.99, max_value=0.99)
rapidities = st.floats(min_value=-2.0, max_value=2.0)


class GroupTests(SimpleTestCase):
    @settings(max_examples=50)
    @given(u=velocities, v=velocities)
    def test_velocity_addition_adds_rapidities(self, u, v):
        self.assertAlmostEqual(velocity_add(u, v), np.tanh(np.arctanh(u) + np.arctanh(v)), delta=1e-12)

    def test_superluminal_velocity(self):
        with self.assertRaises(ConfigInvalid):
            velocity_add(1.5, 0.1)

    @settings(max_examples=30)
    @given(a=rapidities, b=rapidities, p=st.floats(min_value=-3, max_value=3), q=st.floats(min_value=-5, max_value=5))
    def test_boosts_compose(self, a, b, p, q):
        particle = Particle1D(p, q, 1.0)
        twice = group_action('N_eps', b, group_action('N_eps', a, particle))
        once = group_action('N_eps', a + b, particle)
        assert_allclose(twice.as_array(), once.as_array(), atol=1e-9, rtol=1e-9)

    def test_momentum_transform_matches_the_boost(self):
        particle = Particle1D(0.7, 1.0, 2.0)
        boosted = group_action('N_eps', 0.4, particle)
        energy, momentum = momentum_transform(0.4, particle.energy, particle.p)
        self.assertAlmostEqual(energy, boosted.energy, places=12)
        self.assertAlmostEqual(momentum, boosted.p, places=12)

    def test_translation_and_inertial_motion(self):
        particle = Particle1D(0.0, 1.0)
        self.assertEqual(group_action('P_h', 2.0, particle).q, 3.0)
        self.assertEqual(group_action('H_t', 5.0, particle).q, 1.0)

    def test_unknown_group(self):
        with self.assertRaises(ConfigInvalid):
            group_action('R_theta', 1.0, Particle1D(0.0, 0.0))

    def test_commutation(self):
        particles = [Particle1D(p, q, 1.0) for p, q in ((0.0, 0.0), (1.0, 2.0), (-0.5, -3.0))]
        self.assertLess(commutation_residual(particles, 2.5, 0.8), 1e-10)


class BodyTests(SimpleTestCase):
    def test_rest_body(self):
        body = rest_body(4, d=0.5)
        self.assertEqual(len(body), 5)
        self.assertEqual(body_length(body), 2.0)

    @settings(max_examples=20)
    @given(v=st.floats(min_value=0.05, max_value=0.99))
    def test_length_contraction(self, v):
        moving = boosted_body(rest_body(4), np.arctanh(v))
        self.assertAlmostEqual(moving.velocity, v, places=12)
        self.assertAlmostEqual(moving.length(t=3.0), 4.0 * np.sqrt(1 - v * v), delta=1e-9)

    def test_simultaneity_is_frame_dependent(self):
        report = simultaneity_check()
        self.assertTrue(report['simultaneous_moving'])
        self.assertFalse(report['simultaneous_stopped'])
        self.assertAlmostEqual(report['first_body_velocity'], 0.0, places=12)


class ClockTests(SimpleTestCase):
    def test_clock_at_rest(self):
        clock = LightClock(0.5)
        self.assertAlmostEqual(clock.period(), 1.0)
        self.assertAlmostEqual(clock_dilation(1.0, 0.0, 'light_clock_sim'), 1.0, places=12)

    def test_dilation_mechanisms_agree(self):
        for v in (0.1, 0.5, 0.9, 0.99):
            eps = np.arctanh(v)
            expected = 1.0 / np.sqrt(1 - v * v)
            self.assertAlmostEqual(clock_dilation(1.0, eps), expected, places=10)
            self.assertAlmostEqual(clock_dilation(1.0, eps, 'light_clock_sim'), expected, delta=1e-9)

    def test_quasi_periodicity(self):
        clock = LightClock(0.5, np.arctanh(0.6))
        times = np.linspace(0.1, 2.9, 15) * clock.period()
        self.assertLess(quasi_periodicity_residual(clock, times), 1e-9)

    def test_unknown_mechanism(self):
        with self.assertRaises(ConfigInvalid):
            clock_dilation(1.0, 0.5, 'pendulum')


class CylinderTests(SimpleTestCase):
    def test_unit_speed_along_geodesics(self):
        cylinder = CylinderGeodesic(point_masses([[0.0, 0.0, 0.0]], [1.0], 0.1))
        traj = cylinder.trajectory(np.array([3.0, 0.0, 0.0, 0.0, 0.4, 0.1, 0.0, 0.7, 0.0]), 20.0)
        self.assertLess(max(abs(cylinder.unit_speed_defect(x)) for x in traj.states), 1e-8)
        energies = [cylinder.hamiltonian(x) for x in traj.states]
        self.assertLess(np.ptp(energies), 1e-8)

    def test_massless_particle_does_not_age(self):
        cylinder = CylinderGeodesic()
        traj = cylinder.trajectory(np.array([0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]), 5.0)
        self.assertEqual(traj.final[8], 0.0)
        self.assertAlmostEqual(traj.final[0], 5.0, places=8)


class BoostedParticleTests(SimpleTestCase):
    def test_relaxation_rate_in_a_moving_frame(self):
        system = BoostedParticle(kappa=0.5, m=1.0, b=0.0, v=0.6)
        traj = integrate(system, np.array([1e-5, 0.0]), 0.0, 2.0, tol=1e-13)
        rate = -np.log(traj.final[0] / 1e-5) / 2.0
        self.assertAlmostEqual(rate, system.decay_rate(), delta=1e-3 * system.decay_rate())
        self.assertAlmostEqual(system.decay_rate(), 0.5 / 0.8)

    def test_frame_velocity_below_light(self):
        with self.assertRaises(ConfigInvalid):
            BoostedParticle(kappa=0.5, v=1.0)
