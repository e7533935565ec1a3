import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from services.cdcore import (CdSystem, QuadraticProbe, canonical_omega, canonical_system, compound,
                             contraction_defect, extended_lie_derivative, identity_residuals, kahler_as_cd,
                             kahler_field, poisson_bracket, potential_rate, quasi_integral_rate)
from services.exceptions import ConfigInvalid, DegenerateForm, KappaMismatch, QVanishes
from services.integrator import Trajectory, integrate
from services.systems import build_system
from services.systems.simple import EulerSystem, KahlerLogModel, LinearExample, Raindrop, ToyOscillator

seeds = st.integers(min_value=0, max_value=2 ** 32 - 1)


class SignConventionTests(SimpleTestCase):
    def test_canonical_bracket_of_momentum_and_position_is_one(self):
        omega = canonical_omega(1)
        assert_allclose(omega, [[0.0, -1.0], [1.0, 0.0]])
        # coordinates (q, p): dp = (0, 1), dq = (1, 0)
        self.assertAlmostEqual(poisson_bracket(omega, [0.0, 1.0], [1.0, 0.0]), 1.0)
        self.assertAlmostEqual(poisson_bracket(omega, [1.0, 0.0], [0.0, 1.0]), -1.0)

    def test_bracket_on_degenerate_form(self):
        with self.assertRaises(DegenerateForm):
            poisson_bracket(np.zeros((2, 2)), [1.0, 0.0], [0.0, 1.0])

    def test_canonical_system_field(self):
        kappa = 0.5
        system = canonical_system(lambda x: 0.5 * (x[0] ** 2 + x[1] ** 2), kappa, 1,
                                  dH=lambda x: np.array([x[0], x[1]]))
        q, p = 1.0, 2.0
        assert_allclose(system.field(np.array([q, p])), [p, -kappa * p - q], atol=1e-12)

    def test_euler_field_decays_momentum_only(self):
        system = EulerSystem(kappa=2.0)
        assert_allclose(system.field(np.array([3.0, 1.5])), [0.0, -3.0])

    def test_odd_dimension_is_rejected(self):
        with self.assertRaises(DegenerateForm):
            CdSystem(3, 1.0)

    def test_kappa_must_be_positive(self):
        with self.assertRaises(ConfigInvalid) as ctx:
            EulerSystem(kappa=0.0)
        self.assertEqual(ctx.exception.path, 'kappa')


class IdentityTests(SimpleTestCase):
    @settings(max_examples=10, deadline=None)
    @given(seed=seeds)
    def test_linear_example_identities(self, seed):
        rng = np.random.default_rng(seed)
        system = LinearExample(kappa=1.0)
        x = rng.uniform(-1, 1, 2)
        F, G = QuadraticProbe.random(2, rng), QuadraticProbe.random(2, rng)
        residuals = identity_residuals(system, x, F, G)
        for key, value in residuals.items():
            self.assertLess(value, 1e-6, key)

    @settings(max_examples=5, deadline=None)
    @given(seed=seeds)
    def test_toy_oscillator_identities(self, seed):
        rng = np.random.default_rng(seed)
        system = ToyOscillator(kappa=1.0)
        x = system.random_state(rng)
        F, G = QuadraticProbe.random(2, rng), QuadraticProbe.random(2, rng)
        for key, value in identity_residuals(system, x, F, G).items():
            self.assertLess(value, 1e-6, key)

    @settings(max_examples=5, deadline=None)
    @given(seed=seeds)
    def test_identities_with_steep_fields(self, seed):
        rng = np.random.default_rng(seed)
        for model_id in ('monopole', 'forced_oscillator', 'kahler_log'):
            system = build_system(model_id, 1.0)
            for _ in range(5):
                x = system.random_state(rng)
                F, G = QuadraticProbe.random(system.dim, rng), QuadraticProbe.random(system.dim, rng)
                for key, value in identity_residuals(system, x, F, G).items():
                    self.assertLess(value, 1e-6, f"{model_id}.{key}")

    def test_kahler_log_states_avoid_the_origin(self):
        system = build_system('kahler_log', 1.0)
        rng = np.random.default_rng(0)
        radii = [np.linalg.norm(system.random_state(rng)) for _ in range(200)]
        self.assertGreaterEqual(min(radii), 0.5)
        self.assertLessEqual(max(radii), 2.0)

    def test_bracket_scales_along_the_flow(self):
        rng = np.random.default_rng(3)
        system = LinearExample(kappa=0.5)
        F, G = QuadraticProbe.random(2, rng), QuadraticProbe.random(2, rng)
        residuals = identity_residuals(system, np.array([0.3, -0.2]), F, G, horizon=0.5, tol=1e-12)
        self.assertLess(residuals['bracket_scaling'], 1e-6)

    def test_symplectic_form_contracts_at_rate_kappa(self):
        system = build_system('raindrop', 1.0)
        pairs = [(np.array([1.0, 0.0]), np.array([0.0, 1.0]))]
        self.assertLess(contraction_defect(system, np.array([0.0, 1.0]), 3.0, pairs), 1e-6)

    def test_kahler_model_as_generic_system(self):
        system = build_system('kahler_log', 1.0)
        generic = kahler_as_cd(system)
        x = system.random_state(np.random.default_rng(5))
        assert_allclose(generic.field(x), system.field(x), atol=1e-6)


class CompoundTests(SimpleTestCase):
    def test_compound_stacks_fields(self):
        first, second = EulerSystem(1.0), LinearExample(1.0)
        system = compound(first, second)
        self.assertEqual(system.dim, 4)
        x = np.array([1.0, 2.0, 0.5, -0.5])
        assert_allclose(system.field(x), np.concatenate([first.field(x[:2]), second.field(x[2:])]))

    def test_kappa_mismatch(self):
        with self.assertRaises(KappaMismatch):
            compound(EulerSystem(1.0), EulerSystem(2.0))


class RaindropTests(SimpleTestCase):
    def test_terminal_momentum(self):
        system = Raindrop(kappa=0.5, g=2.0)
        traj = integrate(system, np.array([0.0, 1.0]), 0.0, 4.0, tol=1e-12)
        self.assertAlmostEqual(traj.final[1], system.exact_momentum(1.0, 4.0), places=9)

    def test_symmetry_algebra(self):
        system = Raindrop(kappa=0.7)
        for key, value in system.dynamic_symmetry_residuals(np.array([0.4, -1.2])).items():
            self.assertLess(value, 1e-5, key)


class QuasiIntegralRateTests(SimpleTestCase):
    def test_rate_of_toy_oscillator_action(self):
        system = ToyOscillator(kappa=0.8)
        traj = integrate(system, np.array([3.0, 0.0]), 0.0, 2.0, tol=1e-12, max_step=0.05)
        rate = quasi_integral_rate(traj, system.quasi_integrals()['Q'])
        self.assertAlmostEqual(rate, -0.8, places=6)

    def test_vanishing_quasi_integral(self):
        traj = Trajectory(np.linspace(0.0, 1.0, 5), np.zeros((5, 2)))
        with self.assertRaises(QVanishes):
            quasi_integral_rate(traj, lambda x, t=0.0: 0.0)


class ExtendedLieDerivativeTests(SimpleTestCase):
    def test_quasi_integral_is_annihilated(self):
        system = EulerSystem(kappa=1.5)
        x = np.array([0.7, -2.0])
        self.assertAlmostEqual(extended_lie_derivative(system.field, lambda y: y[1], x, system.kappa), 0.0,
                               places=8)
        # q does not move, so only kappa q survives
        self.assertAlmostEqual(extended_lie_derivative(system.field, lambda y: y[0], x, system.kappa), 1.05,
                               places=8)


class PotentialRateTests(SimpleTestCase):
    def test_matches_derivative_along_the_flow(self):
        ks = KahlerLogModel(kappa=0.6, c_re=-1.0, c_im=0.5, omega0=0.7)
        for z in (np.array([1.2 + 0.3j]), np.array([0.4 - 0.9j])):
            velocity = kahler_field(ks, z)
            h = 1e-6
            expected = (ks.potential(z + h * velocity) - ks.potential(z - h * velocity)) / (2 * h)
            self.assertAlmostEqual(potential_rate(ks, z), expected, delta=1e-6)

    def test_potential_decreases_without_hamiltonian(self):
        ks = KahlerLogModel(kappa=1.0, c_re=-1.0, c_im=0.0, omega0=0.0)
        self.assertLess(potential_rate(ks, np.array([2.0 + 0.5j])), 0.0)
