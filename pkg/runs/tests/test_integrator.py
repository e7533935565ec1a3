import numpy as np
from django.test import SimpleTestCase
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from services.exceptions import NonFinite, SingularityPersistent, SingularPoint, StepUnderflow
from services.integrator import integrate, monodromy, transport
from services.systems.simple import LinearExample, ToyOscillator


class Drift:
    """``x' = -1`` with the singular set at ``x <= 0.5``."""

    dim = 1
    guard_floor = 0.5
    model_id = 'drift'

    def field(self, x, t=0.0):
        return np.array([-1.0])

    def singular_guard(self, x):
        return float(x[0])


class Glitch:
    """``x' = -x`` whose guard reports one spurious dip below the floor, on its ``dip``-th call."""

    dim = 1
    guard_floor = 0.5
    model_id = 'glitch'

    def __init__(self, dip=3):
        self.dip = dip
        self.guard_calls = 0
        self.field_calls = 0

    def field(self, x, t=0.0):
        self.field_calls += 1
        return -np.asarray(x, dtype=float)

    def singular_guard(self, x):
        self.guard_calls += 1
        return 0.0 if self.guard_calls == self.dip else 1.0


class IntegrateTests(SimpleTestCase):
    @settings(max_examples=10, deadline=None)
    @given(action=st.floats(min_value=0.2, max_value=5.0), kappa=st.floats(min_value=0.2, max_value=2.0))
    def test_toy_oscillator_action_relaxes_exponentially(self, action, kappa):
        system = ToyOscillator(kappa=kappa)
        traj = integrate(system, np.array([action, 0.0]), 0.0, 3.0, tol=1e-11)
        self.assertAlmostEqual(traj.final[0], system.exact_action(action, 3.0), delta=1e-8)
        self.assertAlmostEqual(traj.final[1], 3.0, delta=1e-8)

    def test_linear_example_matches_closed_form(self):
        system = LinearExample(kappa=0.5)
        x0 = np.array([0.3, 1.2])
        traj = integrate(system, x0, 0.0, 2.0, tol=1e-12)
        assert_allclose(traj.final, system.exact_flow(x0, 2.0), rtol=1e-9)

    def test_samples_and_stats(self):
        traj = integrate(ToyOscillator(1.0), np.array([2.0, 0.0]), 0.0, 5.0, max_step=0.1)
        self.assertEqual(traj.t0, 0.0)
        self.assertAlmostEqual(traj.t1, 5.0)
        self.assertTrue(np.all(np.diff(traj.times) <= 0.1 + 1e-12))
        self.assertEqual(traj.stats['accepted'], len(traj) - 1)
        self.assertEqual(traj.stats['guard_rejected'], 0)

    def test_window_and_interpolation(self):
        traj = integrate(ToyOscillator(1.0), np.array([1.0, 0.0]), 0.0, 4.0, max_step=0.05)
        window = traj.window(1.0, 2.0)
        self.assertGreaterEqual(window.t0, 1.0)
        self.assertLessEqual(window.t1, 2.0)
        self.assertAlmostEqual(traj.at(2.5)[1], 2.5, places=6)
        resampled = traj.resample([0.5, 1.5])
        assert_allclose(resampled.states[:, 1], [0.5, 1.5], atol=1e-6)

    def test_zero_span(self):
        traj = integrate(ToyOscillator(1.0), np.array([1.0, 0.0]), 1.0, 1.0)
        self.assertEqual(len(traj), 1)

    def test_singular_initial_state(self):
        with self.assertRaises(SingularPoint):
            integrate(ToyOscillator(1.0), np.array([0.0, 0.0]), 0.0, 1.0)

    def test_non_finite_initial_state(self):
        with self.assertRaises(NonFinite):
            integrate(ToyOscillator(1.0), np.array([np.nan, 0.0]), 0.0, 1.0)

    def test_steps_into_the_singular_set_are_refused(self):
        with self.assertRaises((SingularityPersistent, StepUnderflow)):
            integrate(Drift(), np.array([2.0]), 0.0, 3.0)

    def test_evaluations_are_counted_across_guard_restarts(self):
        system = Glitch()
        traj = integrate(system, np.array([1.0]), 0.0, 5.0, max_step=0.5)
        self.assertEqual(traj.stats['guard_rejected'], 1)
        self.assertIn('singularity_guard', [kind for _, kind in traj.events])
        self.assertEqual(traj.stats['nfev'], system.field_calls)
        self.assertAlmostEqual(traj.final[0], np.exp(-5.0), delta=1e-8)


class VariationalTests(SimpleTestCase):
    def test_transport_of_linear_flow(self):
        system = LinearExample(kappa=1.0)
        _, moved = transport(system, np.array([0.5, 0.5]), 0.0, 1.0, np.eye(2), tol=1e-12)
        assert_allclose(moved, np.diag([np.e, np.exp(-2.0)]), rtol=1e-6, atol=1e-9)

    def test_monodromy_of_toy_cycle(self):
        system = ToyOscillator(kappa=0.5)
        matrix = monodromy(system, np.array([system.cycle_action(), 0.0]), 2 * np.pi, tol=1e-12)
        multipliers = sorted(abs(np.linalg.eigvals(matrix)))
        assert_allclose(multipliers, [np.exp(-0.5 * 2 * np.pi), 1.0], rtol=1e-6)
