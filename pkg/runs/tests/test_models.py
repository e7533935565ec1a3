import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from services.exceptions import (BadIndexSet, ConfigInvalid, NoRoot, NoSuchLevel, SingularPoint, TailOverflow,
                                 UnknownModel)
from services.systems import MODELS, RUN_DEFAULTS, build_system, default_config, model_class, model_ids
from services.systems.matrix import fermion_energy, pauli_energies
from services.systems.oscillator import (CsOscillator, existence_bound, g_asymptotic, g_function, oscillator_root,
                                         root_seed)
from services.systems.particle import particle_phi, particle_phi_closed, particle_velocity
from services.systems.spin import SpinModel


class RegistryTests(SimpleTestCase):
    def test_every_model_has_run_defaults(self):
        self.assertEqual(len(MODELS), 16)
        self.assertEqual(set(model_ids()), set(RUN_DEFAULTS))

    def test_unknown_model(self):
        with self.assertRaises(UnknownModel):
            model_class('pendulum')

    def test_default_config(self):
        config = default_config('toy_oscillator')
        self.assertEqual(config['model'], 'toy_oscillator')
        self.assertEqual(config['kappa'], 1.0)
        self.assertEqual(config['t_end'], 40.0)
        self.assertIn('omega0', config['params'])

    def test_params_fall_back_to_defaults_key_by_key(self):
        system = build_system('forced_oscillator', 0.5, {'f': 2.0})
        self.assertEqual(system.f, 2.0)
        self.assertEqual(system.k, 1.0)

    def test_every_model_builds_and_evaluates(self):
        rng = np.random.default_rng(0)
        for model_id in model_ids():
            system = build_system(model_id, RUN_DEFAULTS[model_id]['kappa'], seed=1)
            x = system.random_state(rng)
            self.assertEqual(x.shape, (system.dim,), model_id)
            self.assertEqual(len(system.state_labels()), system.dim, model_id)
            self.assertTrue(np.all(np.isfinite(system.field(x, 0.0))), model_id)


class SimpleModelTests(SimpleTestCase):
    def test_toy_oscillator_cycle(self):
        system = build_system('toy_oscillator', 0.25)
        self.assertAlmostEqual(system.cycle_action(), 1.0)
        self.assertEqual(system.state_labels(), ['I', 'phi'])
        self.assertAlmostEqual(system.physical_hamiltonian(np.array([1.0, 0.3])), 1.0)

    def test_torus_labels_and_attractor(self):
        system = build_system('torus', 1.0, {'h': [1.0, 2.0], 'K': [[1.0, 0.0], [0.0, 1.0]], 'w': [0.0, 0.0]})
        self.assertEqual(system.state_labels(), ['phi1', 'phi2', 'I1', 'I2'])
        assert_allclose(system.field(np.array([0.0, 0.0, 1.0, 2.0]))[2:], [0.0, 0.0])

    def test_asymmetric_torus_hessian(self):
        with self.assertRaises(ConfigInvalid):
            build_system('torus', 1.0, {'h': [1.0, 1.0], 'K': [[1.0, 2.0], [0.0, 1.0]], 'w': [0.0, 0.0]})

    def test_forced_oscillator_steady_amplitude(self):
        system = build_system('forced_oscillator', 0.5, {'m': 1.0, 'k': 1.0, 'omega': 0.7, 'f': 1.0})
        expected = -1.0 / (1.0 - 0.49 + 0.35j)
        self.assertAlmostEqual(abs(system.steady_amplitude() - expected), 0.0, places=12)

    def test_monopole_singular_at_origin(self):
        system = build_system('monopole', 1.0)
        with self.assertRaises(SingularPoint):
            system.field(np.array([0.0, 1.0]))


class MatrixModelTests(SimpleTestCase):
    def test_state_labels(self):
        system = build_system('matrix', 1.0, {'levels': [0.0, 1.0, 2.5]}, seed=0)
        self.assertEqual(system.dim, 12)
        self.assertEqual(system.state_labels()[:2], ['psi1_re', 'psi1_im'])
        self.assertEqual(system.state_labels()[-1], 'chi3_im')
        self.assertEqual(sorted(system.quasi_integrals()), ['Q1', 'Q2'])

    def test_random_basis_keeps_the_spectrum(self):
        system = build_system('matrix', 1.0, {'levels': [2.5, 0.0, 1.0], 'random_basis': True}, seed=7)
        assert_allclose(system.levels, [0.0, 1.0, 2.5], atol=1e-12)

    def test_seed_levels(self):
        system = build_system('matrix', 1.0, seed=0)
        self.assertEqual(system.spectral_seed(2).omega, 2.5)
        with self.assertRaises(NoSuchLevel):
            system.spectral_seed(3)

    def test_pauli_energies(self):
        assert_allclose(pauli_energies([0.0, 1.0, 2.5, 4.5], 2), [1.0, 2.5, 3.5, 4.5, 5.5, 7.0])

    def test_bad_index_sets(self):
        for indices in ([2, 1], [1, 1], [0, 2], [1, 5]):
            with self.assertRaises(BadIndexSet):
                fermion_energy([0.0, 1.0, 2.5, 4.5], indices)

    def test_fermion_occupation_bound(self):
        with self.assertRaises(ConfigInvalid) as ctx:
            build_system('fermion', 1.0, {'levels': [0.0, 1.0], 'k': 3}, seed=0)
        self.assertEqual(ctx.exception.path, 'params.k')

    def fermion(self):
        return build_system('fermion', 1.0, {'levels': [0.0, 1.0, 2.5, 4.5], 'k': 2, 'random_basis': True}, seed=3)

    def test_projector_is_idempotent(self):
        system = self.fermion()
        projector = system.projector(system.random_state(np.random.default_rng(5)))
        assert_allclose(projector @ projector, projector, atol=1e-10)
        self.assertAlmostEqual(np.trace(projector).real, 2.0, places=10)

    def test_exact_state_rate_is_the_occupied_energy(self):
        system = self.fermion()
        state = system.exact_state([1, 3])
        self.assertAlmostEqual(system.action_rate(state), fermion_energy(system.levels, [1, 3]), places=10)
        self.assertAlmostEqual(system.action_rate(state), 2.5, places=10)
        assert_allclose(system.exact_frequency_matrix([1, 3]), np.diag([0.0, 2.5]), atol=1e-12)
        with self.assertRaises(BadIndexSet):
            system.exact_state([1])


class SpinModelTests(SimpleTestCase):
    def test_spin_of_level_seeds(self):
        model = SpinModel(kappa=0.04, m=3)
        for n in range(4):
            state = model.reconstruct_state(model.spectral_seed(n))
            self.assertAlmostEqual(model.spin(state)[2], 1.5 - n, places=12)
            self.assertAlmostEqual(np.linalg.norm(model.spin(state)), 1.5, places=12)

    def test_missing_level(self):
        with self.assertRaises(NoSuchLevel):
            SpinModel(kappa=0.04, m=3).spectral_seed(4)

    def test_degree_must_be_a_positive_integer(self):
        with self.assertRaises(ConfigInvalid):
            SpinModel(kappa=0.04, m=0)


class OscillatorTests(SimpleTestCase):
    def test_g_at_zero_momentum(self):
        self.assertAlmostEqual(abs(g_function(0.0, 0.5) - 2.0), 0.0, places=12)

    @settings(max_examples=15, deadline=None)
    @given(p=st.floats(min_value=0.25, max_value=8.0), q=st.floats(min_value=0.01, max_value=1.0))
    def test_g_series_matches_periodic_integral(self, p, q):
        self.assertLess(abs(g_function(p, q, 'series') - g_function(p, q, 'integral')), 1e-8)

    def test_g_domain(self):
        with self.assertRaises(ValueError):
            g_function(1.0, 0.0)

    def test_g_saddle_point_form_at_large_momentum(self):
        for p in (50.0, 200.0):
            exact = g_function(p, 0.2)
            self.assertLess(abs(g_asymptotic(p, 0.2) - exact), 0.1 * abs(exact))

    def test_existence_bound(self):
        self.assertAlmostEqual(existence_bound(1.0), np.sinh(2 * np.pi) / 3, places=10)
        self.assertLess(existence_bound(200.0), 1.0)

    def test_no_root_below_existence_bound(self):
        with self.assertRaises(NoRoot):
            oscillator_root(1, 1.0)

    def test_stable_roots_at_large_mu(self):
        mu = 200.0
        for n in (1, 2, 3):
            root = oscillator_root(n, mu, 'stable')
            self.assertLess(abs(root.p - n), 10 / mu ** 2)
            self.assertLess(abs(root.q - 1 / mu), 10 / mu ** 3)
            self.assertLess(root.residual, 1e-10)

    def test_lie_frequency_close_to_level(self):
        mu = 200.0
        model = CsOscillator(kappa=2.0 / mu)
        self.assertAlmostEqual(model.mu, mu)
        candidate = model.candidate_from_root(oscillator_root(2, mu, 'stable'))
        self.assertAlmostEqual(candidate.omega, 2.0, delta=2e-3)
        self.assertEqual(candidate.classification, 'non_spectral')

    def test_unstable_series_seed_sits_between_levels(self):
        p, _ = root_seed(3, 200.0, 'unstable')
        self.assertEqual(p, 3.5)

    def test_coherent_state_keeps_quasi_integrals(self):
        model = CsOscillator(kappa=0.01)
        state = model.initial_state(0.8 + 0.3j)
        self.assertEqual(state.shape, (model.dim,))
        for name, Q in model.quasi_integrals().items():
            self.assertAlmostEqual(Q(state), 0.0, places=10, msg=name)

    def test_tail_overflow(self):
        model = CsOscillator(kappa=0.01, Nmax=4)
        state = model.join(0.1 + 0j, np.ones(5, dtype=complex) / np.sqrt(5))
        with self.assertRaises(TailOverflow):
            model.field(state)

    def test_resized_keeps_parameters(self):
        model = CsOscillator(kappa=0.01, omega0=2.0, Nmax=8).resized(16)
        self.assertEqual(model.nmax, 16)
        self.assertEqual(model.omega0, 2.0)
        self.assertEqual(model.dim, 2 * 18)


class ParticleTests(SimpleTestCase):
    @settings(max_examples=15, deadline=None)
    @given(x=st.floats(min_value=0.05, max_value=20.0))
    def test_phi_closed_form(self, x):
        self.assertAlmostEqual(particle_phi(x), particle_phi_closed(x), delta=1e-9)

    def test_velocity_limits(self):
        for rho in (0.01, 1.0, 100.0):
            v = particle_velocity(rho)
            self.assertGreater(v, 0.5)
            self.assertLess(v, 1.0)
            self.assertAlmostEqual(v * (1 + particle_phi(v / rho)), 1.0, places=10)
        self.assertAlmostEqual(particle_velocity(1e-3), 1 - 1e-3 / np.sqrt(np.pi), delta=1e-5)
