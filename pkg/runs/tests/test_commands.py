import json
import tempfile
from io import StringIO
from pathlib import Path
from unittest import mock

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import TestCase, override_settings

from runs.models import RunRecord
from services.results import ResultBundle, read_csv
from services.suites import Check


class CommandTestCase(TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.root = Path(self.tmp.name)
        self.out = self.root / 'out'

    def write_config(self, config):
        path = self.root / 'config.json'
        path.write_text(json.dumps(config))
        return str(path)

    def run_command(self, name, config=None, **options):
        if config is not None:
            options['config'] = self.write_config(config)
        call_command(name, out=str(self.out), stdout=StringIO(), **options)

    def assertExitCode(self, code, name, config=None, **options):
        with self.assertRaises(CommandError) as ctx:
            self.run_command(name, config, **options)
        self.assertEqual(ctx.exception.returncode, code)
        return ctx.exception


class SimulateCommandTests(CommandTestCase):
    config = {'model': 'toy_oscillator', 'kappa': 1.0, 'seed': 1, 't_end': 40.0, 'max_step': 0.1,
              'initial': [1.5, 0.0]}

    def test_writes_tables_and_bundle(self):
        self.run_command('simulate', self.config)
        header, rows = read_csv(self.out / 'trajectory.csv')
        self.assertEqual(header, ['t', 'I', 'phi', 'Q'])
        self.assertEqual(rows[0][:3], ['0', '1.5', '0'])
        phase_header, _ = read_csv(self.out / 'phase.csv')
        self.assertEqual(len(phase_header), 2)

        bundle = ResultBundle.load(self.out / 'result.json')
        self.assertEqual(bundle.command, 'simulate')
        self.assertEqual(len(bundle.cycles), 1)
        self.assertAlmostEqual(bundle.cycles[0]['energy'], 1.0, places=6)
        self.assertEqual(bundle.extra['guard_rejections'], 0)

    def test_ledger_row(self):
        self.run_command('simulate', self.config, seed=2 ** 64 - 1)
        record = RunRecord.objects.get()
        self.assertEqual(record.command, 'simulate')
        self.assertEqual(record.model_id, 'toy_oscillator')
        self.assertEqual(record.status, RunRecord.STATUS_OK)
        self.assertEqual(record.seed, str(2 ** 64 - 1))
        self.assertEqual(len(record.config_hash), 64)

    def test_same_config_same_hash(self):
        self.run_command('simulate', self.config)
        first = ResultBundle.load(self.out / 'result.json').config_hash
        self.run_command('simulate', self.config)
        self.assertEqual(ResultBundle.load(self.out / 'result.json').config_hash, first)

    def test_missing_kappa(self):
        config = dict(self.config)
        del config['kappa']
        error = self.assertExitCode(2, 'simulate', config)
        self.assertIn('kappa', str(error))
        self.assertEqual(RunRecord.objects.get().status, RunRecord.STATUS_CONFIG_ERROR)

    def test_unknown_model(self):
        self.assertExitCode(2, 'simulate', dict(self.config, model='pendulum'))

    def test_wrong_initial_size(self):
        self.assertExitCode(2, 'simulate', dict(self.config, initial=[1.0, 0.0, 0.0]))

    def test_singular_initial_state(self):
        config = {'model': 'monopole', 'kappa': 1.0, 'seed': 0, 'initial': [0.0, 1.0]}
        self.assertExitCode(3, 'simulate', config)
        self.assertEqual(RunRecord.objects.get().status, RunRecord.STATUS_RUNTIME_ERROR)

    def test_missing_config_file(self):
        with self.assertRaises(CommandError) as ctx:
            call_command('simulate', config=str(self.root / 'absent.json'), out=str(self.out), stdout=StringIO())
        self.assertEqual(ctx.exception.returncode, 2)


class VerifyCommandTests(CommandTestCase):
    def test_appendix_suite_passes(self):
        self.run_command('verify', suite='appendix1')
        bundle = ResultBundle.load(self.out / 'result.json')
        self.assertTrue(bundle.checks)
        self.assertTrue(bundle.passed)

    def test_retraction_suite_passes(self):
        self.run_command('verify', suite='retraction', seed=5)
        self.assertTrue(ResultBundle.load(self.out / 'result.json').passed)

    def test_unknown_suite(self):
        self.assertExitCode(2, 'verify', suite='everything')

    def test_failed_check(self):
        with mock.patch('services.lab_service.run_suite', return_value=[Check('broken', 1.0, 0.5)]):
            error = self.assertExitCode(1, 'verify', suite='hj')
        self.assertIn('broken', str(error))
        self.assertEqual(RunRecord.objects.get().status, RunRecord.STATUS_CHECK_FAILED)


class SpectrumCommandTests(CommandTestCase):
    def test_empty_levels(self):
        self.run_command('spectrum', {'model': 'spin', 'kappa': 0.04, 'seed': 0})
        header, rows = read_csv(self.out / 'spectrum.csv')
        self.assertEqual(header[:3], ['n', 'series', 'mu'])
        self.assertEqual(rows, [])

    def test_oscillator_rows(self):
        config = {'model': 'cs_oscillator', 'kappa': 0.01, 'seed': 0, 'levels': [1], 'mu': [1.0, 200.0],
                  'floquet': False}
        self.run_command('spectrum', config)
        header, rows = read_csv(self.out / 'spectrum.csv')
        records = [dict(zip(header, row)) for row in rows]
        mus = [float(record['mu']) for record in records]
        self.assertAlmostEqual(mus[0], 1.0)
        self.assertAlmostEqual(mus[1], 200.0, places=9)
        self.assertEqual(records[0]['no_root'], 'NoRoot')
        self.assertEqual(records[1]['no_root'], '')
        self.assertAlmostEqual(float(records[1]['p']), 1.0, delta=1e-3)
        self.assertEqual(records[1]['classification'], 'non_spectral')


class LieCommandTests(CommandTestCase):
    def test_oscillator_candidate_and_verdict(self):
        self.run_command('lie', {'model': 'cs_oscillator', 'kappa': 0.01, 'seed': 0, 'level': 1,
                                 'series': 'stable'})
        payload = json.loads((self.out / 'lie.json').read_text())
        self.assertEqual(payload['candidate']['level'], 1)
        self.assertAlmostEqual(payload['candidate']['omega'], 1.0, delta=1e-3)
        self.assertEqual(payload['floquet']['verdict'], 'stable')

    def test_model_without_lie_solutions(self):
        self.assertExitCode(2, 'lie', {'model': 'euler', 'kappa': 1.0, 'seed': 0})


class SweepCommandTests(CommandTestCase):
    def test_energy_rows_in_grid_order(self):
        config = {'model': 'toy_oscillator', 'kappa': 1.0, 'seed': 4, 't_end': 40.0, 'max_step': 0.1,
                  'kind': 'energy', 'grid': {'kappa': [2.0, 1.0]}}
        self.run_command('sweep', config)
        header, rows = read_csv(self.out / 'sweep.csv')
        records = [dict(zip(header, row)) for row in rows]
        self.assertEqual([float(record['kappa']) for record in records], [2.0, 1.0])
        for record in records:
            self.assertAlmostEqual(float(record['energy']), 1.0, places=6)

    def test_existence_onset(self):
        config = {'model': 'cs_oscillator', 'kappa': 0.01, 'seed': 0, 'kind': 'existence',
                  'grid': {'mu': [200.0]}, 'max_level': 3}
        self.run_command('sweep', config)
        header, rows = read_csv(self.out / 'sweep.csv')
        self.assertEqual(header, ['mu', 'onset', 'bound'])
        self.assertEqual(rows[0][1], '1')

    def test_deviation_follows_second_order_prediction(self):
        config = {'model': 'spin', 'kappa': 0.04, 'seed': 0, 'kind': 'deviation', 'level': 1,
                  'continuation': True, 'params': {'m': 3, 'lam': 1.0}, 'grid': {'epsilon': [0.02, 0.01]}}
        self.run_command('sweep', config)
        header, rows = read_csv(self.out / 'sweep.csv')
        self.assertEqual(header, ['epsilon', 'deviation', 'predicted'])
        records = [dict(zip(header, map(float, row))) for row in rows]
        self.assertEqual([record['epsilon'] for record in records], [0.02, 0.01])
        for record in records:
            self.assertLess(abs(record['deviation'] / record['predicted'] - 1), 0.1)

    @override_settings(CD_LAB_SWEEP_BUDGET=3)
    def test_budget_exceeded(self):
        config = {'model': 'toy_oscillator', 'kappa': 1.0, 'seed': 0, 'kind': 'energy',
                  'grid': {'kappa': [0.5, 1.0], 'omega0': [1.0, 2.0]}}
        self.assertExitCode(2, 'sweep', config)
        self.assertFalse((self.out / 'sweep.csv').exists())


class PhaseColumnsTests(CommandTestCase):
    def test_selected_columns(self):
        config = {'model': 'forced_oscillator', 'kappa': 0.5, 'seed': 0, 't_end': 1.0, 'phase_columns': [0, 2],
                  'analysis': {'cycle': False}}
        self.run_command('simulate', config)
        header, _ = read_csv(self.out / 'phase.csv')
        self.assertEqual(header, ['q', 'p'])

    def test_column_out_of_range(self):
        config = {'model': 'toy_oscillator', 'kappa': 1.0, 'seed': 0, 'phase_columns': [0, 5]}
        self.assertExitCode(2, 'simulate', config)


class ReproducibilityTests(CommandTestCase):
    def rerun(self, name, config, table):
        path = self.write_config(config)
        outputs = []
        for run in ('first', 'second'):
            call_command(name, config=path, out=str(self.root / run), stdout=StringIO())
            outputs.append((self.root / run / table).read_bytes())
        return outputs

    def test_simulate_tables_are_identical(self):
        config = {'model': 'circle_particle', 'kappa': 1.0, 'seed': 11, 't_end': 5.0, 'max_step': 0.1,
                  'analysis': {'cycle': False}}
        first, second = self.rerun('simulate', config, 'trajectory.csv')
        self.assertTrue(first)
        self.assertEqual(first, second)

    def test_sweep_tables_are_identical(self):
        config = {'model': 'toy_oscillator', 'kappa': 1.0, 'seed': 4, 't_end': 40.0, 'max_step': 0.1,
                  'kind': 'energy', 'grid': {'kappa': [2.0, 1.0]}}
        first, second = self.rerun('sweep', config, 'sweep.csv')
        self.assertEqual(first, second)
