import logging
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from itertools import product
from pathlib import Path

import numpy as np

from . import conf
from .analysis import detect_cycle, lie_floquet, torus_report
from .exceptions import (BudgetExceeded, CdLabError, ConfigInvalid, NoConvergence, NoRecurrence, NoRoot,
                         NotConverged, TailOverflow)
from .integrator import integrate
from .lie import deviation_second_order, solve_lie
from .results import ResultBundle, config_hash, write_csv, write_json, write_phase_csv, write_trajectory_csv
from .suites import run_suite
from .systems import build_system
from .systems.oscillator import CsOscillator, existence_bound, oscillator_root
from .systems.spin import SpinModel

logger = logging.getLogger(__name__)

SPECTRUM_COLUMNS = ['n', 'series', 'mu', 'p', 'q', 'omega', 'rate', 'S3', 'residual', 'classification',
                    'floquet', 'no_root']
SWEEP_KINDS = ('deviation', 'existence', 'energy')
# above this dimension the monodromy matrix is skipped in simulate
FLOQUET_MAX_DIM = 40


class LabService:
    """
    Orchestrates the runs behind the management commands: builds models from
    validated configs, drives the numerical services and writes the result files.
    """

    def __init__(self, output_dir=None, threads=None, budget=None):
        self.output_dir = Path(output_dir) if output_dir is not None else conf.output_dir()
        self.threads = threads or conf.dyn_threads()
        self.budget = budget or conf.sweep_budget()

    def _out(self, name=None):
        path = self.output_dir / name if name else self.output_dir
        path.mkdir(parents=True, exist_ok=True)
        return path

    @contextmanager
    def _run_context(self, command, config):
        model_id = config.get('model', '')
        digest = config_hash(config)
        try:
            yield digest
        except CdLabError as exc:
            logger.error(f"{command} failed for model={model_id} config_hash={digest[:12]}: {exc}")
            raise exc.with_context(model=model_id, config_hash=digest[:12])

    def _system(self, config):
        return build_system(config['model'], config['kappa'], config.get('params'), seed=config['seed'])

    def _initial_state(self, system, config):
        if config.get('initial') is not None:
            x0 = np.asarray(config['initial'], dtype=float)
            if x0.size != system.dim:
                raise ConfigInvalid(f"initial state has {x0.size} components, {system.model_id} needs {system.dim}",
                                    path='initial')
            return x0
        return system.random_state(np.random.default_rng(config['seed']))

    def _integrate(self, system, x0, config):
        """Integrate over the configured span; an oscillator whose Fock tail overflows is retried at twice ``Nmax``."""
        def run(model):
            return integrate(model, x0, 0.0, config['t_end'], tol=config['tol'], max_step=config.get('max_step'))

        try:
            return system, run(system)
        except TailOverflow as exc:
            if not isinstance(system, CsOscillator):
                raise
            bigger = system.resized(2 * system.nmax)
            logger.warning(f"{exc}; retrying with Nmax={bigger.nmax}")
            z, F = system.split(system.to_complex(x0))
            padded = np.concatenate([F, np.zeros(bigger.nmax - system.nmax, dtype=complex)])
            x0 = bigger.join(z, padded)
            return bigger, run(bigger)

    def simulate(self, config):
        """
        Integrate one model and analyse where it settles.

        Writes ``trajectory.csv``, ``phase.csv`` and ``result.json`` under the
        output directory.

        Returns:
            ResultBundle: the run summary
        """
        with self._run_context('simulate', config) as digest:
            system = self._system(config)
            logger.info(f"Simulating {system.model_id} (kappa={system.kappa:g}, t_end={config['t_end']:g}, "
                        f"config_hash={digest[:12]})")
            x0 = self._initial_state(system, config)
            columns = tuple(config.get('phase_columns') or (0, 1))
            if max(columns) >= system.dim:
                raise ConfigInvalid(f"phase_columns {list(columns)} out of range for dimension {system.dim}",
                                    path='phase_columns')
            system, traj = self._integrate(system, x0, config)
            out = self._out()
            write_trajectory_csv(out / 'trajectory.csv', system, traj)
            write_phase_csv(out / 'phase.csv', system, traj, columns)

            analysis = config.get('analysis', {})
            extra = {
                'accepted_steps': traj.stats.get('accepted', 0),
                'guard_rejections': traj.stats.get('guard_rejected', 0),
                'final_state': traj.final,
                'quasi_integrals': {name: Q(traj.final, traj.t1) for name, Q in system.quasi_integrals().items()},
            }
            cycles = []
            if analysis.get('cycle', True):
                with_floquet = analysis.get('floquet', system.dim <= FLOQUET_MAX_DIM)
                try:
                    report = detect_cycle(system, traj, tol=analysis.get('cycle_tol', 1e-6),
                                          with_floquet=with_floquet, integrate_tol=config['tol'])
                    cycles.append(report.to_dict())
                except (NoRecurrence, NotConverged) as exc:
                    logger.warning(f"No limit cycle for {system.model_id}: {exc}")
                    extra['cycle'] = str(exc)
                    if getattr(exc, 'dimension', 0) == 2:
                        extra['torus'] = torus_report(system, traj)
            bundle = ResultBundle('simulate', config, config['seed'], config_hash=digest, cycles=cycles, extra=extra)
            bundle.save(out / 'result.json')
            return bundle

    def _lie_candidate(self, system, level, config):
        if isinstance(system, CsOscillator):
            root = oscillator_root(level, system.mu, config.get('series', 'stable'), tol=min(config['tol'], 1e-12))
            return system.candidate_from_root(root), root
        seed = system.spectral_seed(level)
        candidate = solve_lie(system, seed, system.epsilon, tol=config['tol'],
                              continuation=config.get('continuation', False))
        return candidate, None

    def _stability(self, system, candidate, enabled=True):
        if not enabled:
            return None
        return lie_floquet(system, candidate)

    def lie(self, config):
        """Solve one Lie candidate and write ``lie.json`` with its Floquet verdict."""
        with self._run_context('lie', config) as digest:
            system = self._system(config)
            level = int(config.get('level', 1))
            candidate, _ = self._lie_candidate(system, level, config)
            stability = self._stability(system, candidate, config.get('floquet', True))
            payload = {'candidate': candidate.to_dict(),
                       'floquet': stability.to_dict() if stability is not None else None}
            out = self._out()
            write_json(out / 'lie.json', payload)
            bundle = ResultBundle('lie', config, config['seed'], config_hash=digest, candidates=[payload])
            bundle.save(out / 'result.json')
            return bundle

    def _spectrum_row(self, system, level, series, config):
        row = dict.fromkeys(SPECTRUM_COLUMNS)
        row.update(n=level, series=series, no_root='')
        if isinstance(system, CsOscillator):
            row['mu'] = system.mu
        try:
            candidate, root = self._lie_candidate(system, level, dict(config, series=series))
        except NoRoot as exc:
            logger.info(f"No root at n={level} ({series}): {exc}")
            row['no_root'] = 'NoRoot'
            return row
        if root is not None:
            row.update(p=root.p, q=root.q)
        row.update(omega=candidate.omega, rate=candidate.xi.rate, residual=candidate.residual,
                   classification=candidate.classification)
        if isinstance(system, SpinModel):
            row['S3'] = float(system.spin(system.reconstruct_state(candidate))[2])
        stability = self._stability(system, candidate, config.get('floquet', True))
        row['floquet'] = stability.verdict if stability is not None else ''
        return row

    def spectrum(self, config):
        """
        Tabulate Lie roots level by level.

        Oscillator grids run over ``mu`` and the two root series; other models
        over their levels only. An empty level list gives an empty table.
        """
        with self._run_context('spectrum', config) as digest:
            levels = [int(n) for n in config.get('levels', [])]
            rows = []
            if config['model'] == CsOscillator.model_id:
                base = dict(config.get('params') or {})
                omega0 = float(base.get('omega0', 1.0))
                mus = config.get('mu') or [2 * omega0 / config['kappa']]
                for mu in mus:
                    system = build_system(config['model'], 2 * omega0 / mu, base)
                    for series in config.get('series', ['stable']):
                        rows.extend(self._spectrum_row(system, n, series, config) for n in levels)
            else:
                system = self._system(config)
                rows = [self._spectrum_row(system, n, '', config) for n in levels]
            out = self._out()
            write_csv(out / 'spectrum.csv', SPECTRUM_COLUMNS, [[row[key] for key in SPECTRUM_COLUMNS] for row in rows])
            bundle = ResultBundle('spectrum', config, config['seed'], config_hash=digest, extra={'rows': rows})
            bundle.save(out / 'result.json')
            logger.info(f"Spectrum of {config['model']}: {len(rows)} rows")
            return bundle

    def verify(self, suite, seed=0):
        checks = run_suite(suite, seed)
        config = {'suite': suite, 'seed': seed}
        bundle = ResultBundle('verify', config, seed, checks=[check.to_dict() for check in checks])
        bundle.save(self._out() / 'result.json')
        return bundle

    def _grid(self, config):
        grid = config.get('grid', {})
        keys = sorted(grid)
        points = [dict(zip(keys, values)) for values in product(*(grid[key] for key in keys))]
        if len(points) > self.budget:
            raise BudgetExceeded(f"Sweep grid has {len(points)} points, budget is {self.budget}",
                                 points=len(points), budget=self.budget)
        return points

    def _sweep_point(self, config, index, point):
        kind = config['kind']
        if kind == 'deviation':
            return self._deviation_point(config, point)
        if kind == 'existence':
            return self._existence_point(config, point)
        return self._energy_point(config, index, point)

    def _deviation_point(self, config, point):
        params = dict(config.get('params') or {}, **{k: v for k, v in point.items() if k != 'epsilon'})
        epsilon = float(point['epsilon'])
        system = build_system(config['model'], 2 * epsilon, params, seed=config['seed'])
        level = int(config.get('level', 1))
        candidate = solve_lie(system, system.spectral_seed(level), epsilon, tol=config['tol'],
                              continuation=config.get('continuation', False))
        sd = system.spectral_data(candidate.z, candidate.xi)
        return {'epsilon': epsilon, 'deviation': candidate.omega - sd.levels[level],
                'predicted': deviation_second_order(level, epsilon, sd)}

    def _existence_point(self, config, point):
        mu = float(point['mu'])
        onset = None
        for n in range(1, int(config.get('max_level', 200)) + 1):
            try:
                oscillator_root(n, mu, config.get('series', 'stable'))
            except (NoRoot, NoConvergence):
                continue
            onset = n
            break
        return {'mu': mu, 'onset': onset, 'bound': existence_bound(mu)}

    def _energy_point(self, config, index, point):
        params = dict(config.get('params') or {})
        kappa = float(point.get('kappa', config['kappa']))
        params.update({k: v for k, v in point.items() if k != 'kappa'})
        seed = int(np.random.SeedSequence([config['seed'], index]).generate_state(1)[0])
        run = dict(config, kappa=kappa, params=params, seed=seed)
        system = self._system(run)
        system, traj = self._integrate(system, self._initial_state(system, run), run)
        row = dict(point, kappa=kappa, energy=None, period=None)
        try:
            report = detect_cycle(system, traj, with_floquet=False, integrate_tol=run['tol'])
            row.update(energy=report.energy, period=report.period)
        except (NoRecurrence, NotConverged) as exc:
            logger.warning(f"Sweep point {index}: {exc}")
        return row

    def sweep(self, config):
        """
        Evaluate one observable per grid point on a thread pool.

        Rows come back in grid order whatever the completion order.

        Raises:
            BudgetExceeded: the grid has more points than ``CD_LAB_SWEEP_BUDGET``
        """
        with self._run_context('sweep', config) as digest:
            if config.get('kind') not in SWEEP_KINDS:
                raise ConfigInvalid(f"Unknown sweep kind {config.get('kind')!r}", path='kind')
            points = self._grid(config)
            logger.info(f"Sweep {config['kind']} over {len(points)} points on {self.threads} workers")
            with ThreadPoolExecutor(max_workers=self.threads) as executor:
                rows = list(executor.map(lambda item: self._sweep_point(config, *item), enumerate(points)))
            header = list(rows[0]) if rows else sorted(config.get('grid', {}))
            write_csv(self._out() / 'sweep.csv', header, [[row.get(key) for key in header] for row in rows])
            bundle = ResultBundle('sweep', config, config['seed'], config_hash=digest, extra={'rows': rows})
            bundle.save(self._out() / 'result.json')
            return bundle
