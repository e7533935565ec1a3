from dataclasses import replace

import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from services.analysis import (constants_of_motion_check, detect_cycle, factorization_defect, hj_quadratic,
                               invariant_manifold_residual, isotropy_defect, lie_floquet, lyapunov_exponents,
                               manifold_distance, quantization_integral, retraction, retraction_commutes,
                               standard_gauge_residual, torus_phase_shift, torus_report)
from services.exceptions import InsufficientSamples, NoRecurrence, NoSolution, OpenLoop
from services.integrator import Trajectory, integrate
from services.systems import build_system
from services.systems.oscillator import CsOscillator, oscillator_root
from services.systems.simple import EulerSystem, LinearExample, NonautonomousOscillator, TorusSystem, ToyOscillator


class CycleTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.system = ToyOscillator(kappa=1.0)
        traj = integrate(cls.system, np.array([1.5, 0.0]), 0.0, 40.0, tol=1e-11, max_step=0.1)
        cls.report = detect_cycle(cls.system, traj, integrate_tol=1e-11)

    def test_period(self):
        self.assertAlmostEqual(self.report.period, 2 * np.pi, places=6)

    def test_energy_is_one_quantum(self):
        self.assertAlmostEqual(self.report.energy, 1.0, places=6)

    def test_loop_integral_is_quantized(self):
        assert_allclose(self.report.quantization_integrals, [2 * np.pi], rtol=1e-6)

    def test_floquet_multipliers(self):
        moduli = sorted(abs(m) for m in self.report.floquet_multipliers)
        assert_allclose(moduli, [np.exp(-2 * np.pi), 1.0], rtol=1e-5, atol=1e-7)
        self.assertLess(self.report.unit_multiplier_defect(), 1e-5)

    def test_report_serialises(self):
        data = self.report.to_dict()
        self.assertEqual(data['model'], 'toy_oscillator')
        self.assertEqual(len(data['floquet_multipliers']), 2)

    def test_fixed_point_is_not_a_cycle(self):
        system = EulerSystem(kappa=1.0)
        traj = integrate(system, np.array([0.0, 1.0]), 0.0, 30.0)
        with self.assertRaises(NoRecurrence) as ctx:
            detect_cycle(system, traj)
        self.assertEqual(ctx.exception.dimension, 0)

    def test_open_loop(self):
        loop = np.array([[1.0, 0.0], [1.0, 1.0], [1.0, 2.0]])
        with self.assertRaises(OpenLoop):
            quantization_integral(ToyOscillator(1.0), None, loops=[loop])


class LyapunovTests(SimpleTestCase):
    def test_linear_flow(self):
        exponents = lyapunov_exponents(LinearExample(kappa=1.0), np.array([0.1, 0.1]), 2.0, intervals=10,
                                       tol=1e-12)
        assert_allclose(exponents, [1.0, -2.0], atol=1e-6)


class RetractionTests(SimpleTestCase):
    def setUp(self):
        self.system = TorusSystem(1.0, h=[1.0], K=[[1.0]])

    @settings(max_examples=5, deadline=None)
    @given(phi=st.floats(min_value=0.0, max_value=6.0), action=st.floats(min_value=0.5, max_value=1.5))
    def test_closed_form(self, phi, action):
        system = TorusSystem(1.0, h=[1.0], K=[[1.0]])
        expected = system.wrap(np.array([phi + (action - 1.0), 1.0]))
        self.assertLess(system.state_distance(retraction(system, np.array([phi, action])), expected), 1e-6)

    def test_commutes_with_the_flow(self):
        self.assertLess(retraction_commutes(self.system, np.array([0.3, 1.4]), 1.0), 1e-6)

    def test_factorization_defect_decays(self):
        defects = factorization_defect(self.system, np.array([0.3, 1.4]), [1.0, 5.0, 12.0])
        self.assertTrue(defects[0] > defects[1] > defects[2])
        # both the action and the angle lag by 0.4 e^{-t}
        self.assertAlmostEqual(defects[0], 0.4 * np.sqrt(2) * np.exp(-1.0), delta=1e-6)
        self.assertLess(defects[2], 1e-4)

    def test_phase_shift_with_constant_hessian(self):
        shift = torus_phase_shift([1.4], [1.0], 2.0, lambda actions: np.array([[3.0]]))
        assert_allclose(shift, [3.0 * 0.4 / 2.0], rtol=1e-9)

    def test_phase_shift_with_cubic_term(self):
        system = TorusSystem(1.0, h=[1.0], K=[[1.0]], c3=[0.5])
        shift = torus_phase_shift([1.5], system.h, 1.0, system.hessian)
        # I(tau) = 1 + 0.5 e^{-tau}, H'' = 1 + I
        expected = 0.5 * (2 * 1.0 + 0.5 * 0.25)
        assert_allclose(shift, [expected], rtol=1e-9)


class HamiltonJacobiTests(SimpleTestCase):
    m, k, omega, f = 1.0, 1.0, 0.7, 1.0

    @settings(max_examples=10, deadline=None)
    @given(factor=st.floats(min_value=1.01, max_value=5.0))
    def test_both_surfaces_solve_the_equation(self, factor):
        threshold = 2 * np.sqrt(self.k / self.m)
        points = [(q, phi) for q in (-1.0, 0.3, 2.0) for phi in (0.0, 1.0, 4.0)]
        for solution in hj_quadratic(self.m, self.k, self.omega, self.f, factor * threshold):
            self.assertLess(solution.residual(points), 1e-10)

    def test_surfaces_merge_at_threshold(self):
        first, second = hj_quadratic(self.m, self.k, self.omega, self.f, 2.0)
        self.assertAlmostEqual(first.a, second.a, places=12)
        self.assertAlmostEqual(first.a, -0.5, places=12)

    def test_no_surface_below_threshold(self):
        with self.assertRaises(NoSolution):
            hj_quadratic(self.m, self.k, self.omega, self.f, 1.0)

    def surface(self, kappa=3.0):
        system = build_system('forced_oscillator', kappa, {'m': self.m, 'k': self.k, 'omega': self.omega, 'f': self.f})
        return system, hj_quadratic(self.m, self.k, self.omega, self.f, kappa)[0]

    def test_surface_is_an_invariant_manifold(self):
        system, solution = self.surface()
        points = [np.array([q, phi]) for q in (-1.0, 0.5, 2.0) for phi in (0.0, 2.0, 5.0)]
        self.assertLess(invariant_manifold_residual(system, solution, points), 1e-8)
        wrong = replace(solution, a=solution.a + 0.1)
        self.assertGreater(invariant_manifold_residual(system, wrong, points), 1e-3)

    def test_flow_stays_on_the_surface(self):
        system, solution = self.surface()
        start = solution.surface_state(0.5, 0.3)
        self.assertLess(manifold_distance(system, solution, start), 1e-14)
        traj = integrate(system, start, 0.0, 1.0, tol=1e-11)
        self.assertLess(manifold_distance(system, solution, traj.final), 1e-6)
        off = start + np.array([0.0, 0.0, 0.1, 0.0])
        self.assertAlmostEqual(manifold_distance(system, solution, off), 0.1, places=12)

    def test_shifted_form(self):
        system = TorusSystem(1.0, h=[1.0, 2.0], K=np.eye(2))
        points = [np.array([0.3, 1.0]), np.array([2.0, 5.0])]

        def S(q, t):
            return float(system.h @ q)

        self.assertLess(invariant_manifold_residual(system, S, points, form='shifted'), 1e-5)
        # the kappa S term is absent from the shifted equation
        self.assertAlmostEqual(invariant_manifold_residual(system, S, points), 2.0, places=4)
        with self.assertRaises(ValueError):
            invariant_manifold_residual(system, S, points, form='quotient')


class LieStabilityTests(SimpleTestCase):
    def test_root_series_stability(self):
        mu = 200.0
        model = CsOscillator(kappa=2.0 / mu)
        for series in ('stable', 'unstable'):
            candidate = model.candidate_from_root(oscillator_root(1, mu, series))
            self.assertEqual(lie_floquet(model, candidate).verdict, series)

    def test_spin_seed_stability_reports_multipliers(self):
        model = build_system('spin', 0.04)
        seed = model.spectral_seed(0)
        seed.epsilon = model.epsilon
        stability = lie_floquet(model, seed)
        self.assertIn(stability.verdict, ('stable', 'unstable'))
        self.assertEqual(len(stability.multipliers), model.dim)


def torus_grid(system, count=20):
    angles = np.linspace(0.0, 2 * np.pi, count, endpoint=False)
    return np.array([[a, b, *system.h] for a in angles for b in angles])


class IsotropyTests(SimpleTestCase):
    def setUp(self):
        self.torus = TorusSystem(1.0, h=[1.0, 2.0], K=np.eye(2))

    def test_invariant_torus_is_lagrangian(self):
        self.assertLess(isotropy_defect(self.torus, torus_grid(self.torus), dimension=2), 1e-10)

    def test_symplectic_plane_is_not(self):
        grid = np.linspace(0.0, 1.0, 10)
        states = np.array([[q, p] for q in grid for p in grid])
        self.assertAlmostEqual(isotropy_defect(EulerSystem(1.0), states, dimension=2), 1.0, places=10)

    def test_curves_are_isotropic(self):
        self.assertEqual(isotropy_defect(EulerSystem(1.0), np.zeros((3, 2)), dimension=1), 0.0)

    def test_too_few_samples(self):
        with self.assertRaises(InsufficientSamples):
            isotropy_defect(self.torus, torus_grid(self.torus, count=2), dimension=2)

    def test_torus_report(self):
        states = torus_grid(self.torus)
        report = torus_report(self.torus, Trajectory(np.arange(len(states), dtype=float), states))
        self.assertEqual(report['dimension'], 2)
        assert_allclose(report['quantization_integrals'], [2 * np.pi, 4 * np.pi], rtol=1e-12)
        self.assertEqual(report['quantum_numbers'], [1, 2])
        self.assertLess(report['isotropy_defect'], 1e-10)


class GaugeTests(SimpleTestCase):
    def test_standard_gauge_along_a_moving_attractor(self):
        system = NonautonomousOscillator(kappa=1.0)
        samples = [(np.array([1.5, 0.2]), t) for t in (0.0, 3.0, 5.0, 8.0)]
        self.assertLess(standard_gauge_residual(system, samples), 1e-12)

    def test_other_gauge(self):
        system = NonautonomousOscillator(kappa=1.0, omega0=2.0)
        samples = [(np.array([1.5, 0.2]), 1.0)]
        residual = standard_gauge_residual(system, samples, theta=lambda x, t: np.array([0.0, x[0], 0.0]))
        self.assertAlmostEqual(residual, 3.0, places=12)

    def test_autonomous_default(self):
        samples = [(np.array([1.0, 2.0]), 0.0), (np.array([-3.0, 0.5]), 0.0)]
        self.assertEqual(standard_gauge_residual(EulerSystem(2.0), samples), 0.0)


class ConstantsOfMotionTests(SimpleTestCase):
    def test_euler_position(self):
        system = EulerSystem(1.0)
        traj = integrate(system, np.array([1.0, 2.0]), 0.0, 10.0)
        functions = {'q': lambda x: x[0], 'p': lambda x: x[1]}
        report = constants_of_motion_check(system, functions, traj, basin=[np.array([0.5, 1.0])],
                                           attractor=[np.array([0.0, 0.0]), np.array([1.0, 0.0])])
        self.assertEqual(report['confirmed'], ['q'])
        self.assertFalse(report['functions']['p']['constant_along_flow'])
        self.assertLess(report['functions']['q']['retraction_drift'], 1e-6)
        self.assertAlmostEqual(report['functions']['q']['attractor_spread'], 1.0)
        self.assertEqual(list(report['brackets']), ['q,q'])
        self.assertLess(report['brackets']['q,q'], 1e-9)
