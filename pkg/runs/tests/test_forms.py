import json
import tempfile
from pathlib import Path

from django.test import SimpleTestCase, override_settings

from runs.forms import load_config, validate_config, validate_params
from services.exceptions import ConfigInvalid, UnknownModel


class ValidateConfigTests(SimpleTestCase):
    def config(self, **overrides):
        base = {'model': 'toy_oscillator', 'kappa': 1.0, 'seed': 3}
        base.update(overrides)
        return base

    @override_settings(CD_LAB_DEFAULT_TOL=1e-9)
    def test_defaults_are_filled(self):
        config = validate_config(self.config(), 'simulate')
        self.assertEqual(config['tol'], 1e-9)
        self.assertEqual(config['t_end'], 40.0)
        self.assertEqual(config['params'], {})
        self.assertNotIn('continuation', config)

    def test_missing_kappa(self):
        raw = self.config()
        del raw['kappa']
        with self.assertRaises(ConfigInvalid) as ctx:
            validate_config(raw, 'simulate')
        self.assertEqual(ctx.exception.path, 'kappa')
        self.assertIn('Missing required key: kappa', str(ctx.exception))

    def test_non_positive_kappa(self):
        with self.assertRaises(ConfigInvalid) as ctx:
            validate_config(self.config(kappa=-1.0), 'simulate')
        self.assertEqual(ctx.exception.path, 'kappa')

    def test_unknown_model(self):
        with self.assertRaises(UnknownModel):
            validate_config(self.config(model='pendulum'), 'simulate')

    def test_command_line_overrides(self):
        config = validate_config(self.config(), 'simulate', seed=2 ** 64 - 1, tol=1e-6)
        self.assertEqual(config['seed'], 2 ** 64 - 1)
        self.assertEqual(config['tol'], 1e-6)

    def test_seed_range(self):
        with self.assertRaises(ConfigInvalid) as ctx:
            validate_config(self.config(seed=-1), 'simulate')
        self.assertEqual(ctx.exception.path, 'seed')

    def test_unknown_parameter(self):
        with self.assertRaises(ConfigInvalid) as ctx:
            validate_config(self.config(params={'omega0': 2.0, 'mass': 1.0}), 'simulate')
        self.assertEqual(ctx.exception.path, 'params.mass')

    def test_invalid_parameter(self):
        with self.assertRaises(ConfigInvalid) as ctx:
            validate_config(self.config(params={'omega0': -2.0}), 'simulate')
        self.assertEqual(ctx.exception.path, 'params.omega0')

    def test_phase_columns(self):
        with self.assertRaises(ConfigInvalid) as ctx:
            validate_config(self.config(phase_columns=[1, 1]), 'simulate')
        self.assertEqual(ctx.exception.path, 'phase_columns')

    def test_lie_needs_a_lie_model(self):
        with self.assertRaises(ConfigInvalid) as ctx:
            validate_config(self.config(), 'lie')
        self.assertEqual(ctx.exception.path, 'model')

    def test_spectrum_levels_default_to_empty(self):
        config = validate_config({'model': 'spin', 'kappa': 0.04, 'seed': 0}, 'spectrum')
        self.assertEqual(config['levels'], [])

    def test_mu_grid_only_for_the_oscillator(self):
        with self.assertRaises(ConfigInvalid) as ctx:
            validate_config({'model': 'spin', 'kappa': 0.04, 'seed': 0, 'mu': [100.0]}, 'spectrum')
        self.assertEqual(ctx.exception.path, 'mu')

    def test_sweep_needs_its_axis(self):
        raw = {'model': 'cs_oscillator', 'kappa': 0.01, 'seed': 0, 'kind': 'existence', 'grid': {'kappa': [0.1]}}
        with self.assertRaises(ConfigInvalid) as ctx:
            validate_config(raw, 'sweep')
        self.assertEqual(ctx.exception.path, 'grid')

    def test_sweep_grid_values(self):
        raw = {'model': 'toy_oscillator', 'kappa': 1.0, 'seed': 0, 'kind': 'energy', 'grid': {'kappa': []}}
        with self.assertRaises(ConfigInvalid) as ctx:
            validate_config(raw, 'sweep')
        self.assertEqual(ctx.exception.path, 'grid')

    def test_not_an_object(self):
        with self.assertRaises(ConfigInvalid):
            validate_config([1, 2], 'simulate')


class ParamsTests(SimpleTestCase):
    def test_matrix_size_shorthand(self):
        self.assertEqual(validate_params('matrix', {'N': 4}), {'levels': [0.0, 1.0, 2.0, 3.0]})

    def test_matrix_size_mismatch(self):
        with self.assertRaises(ConfigInvalid) as ctx:
            validate_params('matrix', {'N': 2, 'levels': [0.0, 1.0, 2.0]})
        self.assertEqual(ctx.exception.path, 'params.N')

    def test_fermion_occupation(self):
        with self.assertRaises(ConfigInvalid) as ctx:
            validate_params('fermion', {'levels': [0.0, 1.0], 'k': 3})
        self.assertEqual(ctx.exception.path, 'params.k')

    def test_torus_shape(self):
        with self.assertRaises(ConfigInvalid) as ctx:
            validate_params('torus', {'h': [1.0, 2.0], 'K': [[1.0]]})
        self.assertEqual(ctx.exception.path, 'params.K')

    def test_euler_takes_no_parameters(self):
        with self.assertRaises(ConfigInvalid):
            validate_params('euler', {'g': 1.0})


class LoadConfigTests(SimpleTestCase):
    def test_missing_file(self):
        with self.assertRaises(ConfigInvalid):
            load_config('/nonexistent/config.json')

    def test_bad_json(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'config.json'
            path.write_text('{"model": ')
            with self.assertRaises(ConfigInvalid):
                load_config(path)

    def test_round_trip(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'config.json'
            path.write_text(json.dumps({'model': 'euler'}))
            self.assertEqual(load_config(path), {'model': 'euler'})
