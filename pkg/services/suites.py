"""
Verification suites run by ``manage.py verify``.

Each suite is a function of a ``numpy`` generator returning a list of
``Check`` rows; a run passes when every residual is within its threshold.
"""
import logging
from dataclasses import dataclass

import numpy as np

from .analysis import (action_rate, hamiltonian_on_attractor, hj_quadratic, lie_floquet, retraction,
                       retraction_commutes, torus_phase_shift)
from .cdcore import QuadraticProbe, contraction_defect, identity_residuals, kahler_as_cd, quasi_integral_rate
from .exceptions import CdLabError, NoSolution, UnknownSuite
from .integrator import integrate
from .lie import deviation_second_order, solve_lie
from .relsym import (CylinderGeodesic, LightClock, Particle1D, boosted_body, clock_dilation, commutation_residual,
                     group_action, momentum_transform, point_masses, quasi_periodicity_residual, rest_body,
                     simultaneity_check, velocity_add)
from .systems import RUN_DEFAULTS, build_system
from .systems.matrix import FermionModel, MatrixModel, matrix_rates, matrix_series2, pauli_energies
from .systems.oscillator import CsOscillator, g_function, low_freq_coefficients, oscillator_root
from .systems.particle import (ParticleLieSolution, ParticleParams, e_folding_length, particle_phi,
                               particle_phi_closed, particle_velocity, particle_wavetail, simulate_tail,
                               velocity_small_rho)
from .systems.simple import ReducedMatrixSystem, TorusSystem
from .systems.spin import SpinModel

logger = logging.getLogger(__name__)

IDENTITY_MODELS = ('euler', 'linear_example', 'raindrop', 'monopole', 'torus', 'circle_particle',
                   'forced_oscillator', 'toy_oscillator', 'kahler_log')
QUASI_INTEGRAL_MODELS = ('toy_oscillator', 'torus', 'circle_particle', 'matrix', 'fermion', 'spin')
BOOST_VELOCITIES = (0.1, 0.5, 0.9, 0.99)


@dataclass
class Check:
    name: str
    residual: float
    threshold: float

    @property
    def passed(self):
        return bool(np.isfinite(self.residual) and self.residual <= self.threshold)

    def to_dict(self):
        return {'name': self.name, 'residual': float(self.residual), 'threshold': self.threshold,
                'passed': self.passed}


def _flag(name, ok):
    return Check(name, 0.0 if ok else 1.0, 0.5)


def _default_system(model_id, seed):
    return build_system(model_id, RUN_DEFAULTS[model_id]['kappa'], seed=seed)


def identities(rng, points=100):
    checks = []
    for model_id in IDENTITY_MODELS:
        system = _default_system(model_id, int(rng.integers(2 ** 32)))
        worst = {}
        for _ in range(points):
            x = system.random_state(rng)
            F = QuadraticProbe.random(system.dim, rng)
            G = QuadraticProbe.random(system.dim, rng)
            for key, value in identity_residuals(system, x, F, G).items():
                worst[key] = max(worst.get(key, 0.0), value)
        checks.extend(Check(f"{model_id}.{key}", value, 1e-6) for key, value in sorted(worst.items()))

        x0 = system.random_state(rng)
        omega0 = system.omega(x0, 0.0)
        pairs = []
        while len(pairs) < 3:
            xi, eta = rng.standard_normal(system.dim), rng.standard_normal(system.dim)
            if abs(xi @ omega0 @ eta) > 1e-3:
                pairs.append((xi, eta))
        defect = contraction_defect(system, x0, 3.0 / system.kappa, pairs)
        checks.append(Check(f"{model_id}.contraction", defect, 1e-5))

    ks = _default_system('kahler_log', 0)
    generic = kahler_as_cd(ks)
    worst = max(float(np.max(np.abs(ks.field(x) - generic.field(x))))
                for x in (ks.random_state(rng) for _ in range(points)))
    checks.append(Check('kahler_log.generic_field', worst, 1e-6))
    return checks


def appendix1(rng):
    checks = []
    pairs = rng.uniform(-0.99, 0.99, size=(20, 2))
    worst = max(abs(velocity_add(u, v) - np.tanh(np.arctanh(u) + np.arctanh(v))) for u, v in pairs)
    checks.append(Check('velocity_addition', worst, 1e-12))

    body = rest_body(4, d=1.0)
    rest_length = 4.0
    for v in BOOST_VELOCITIES:
        eps = np.arctanh(v)
        length = boosted_body(body, eps).length(t=3.0)
        checks.append(Check(f"contraction.v={v}", abs(length - rest_length * np.sqrt(1 - v * v)), 1e-9))
        measured = clock_dilation(1.0, eps, mechanism='light_clock_sim')
        checks.append(Check(f"dilation.v={v}", abs(measured - 1.0 / np.sqrt(1 - v * v)), 1e-9))
        clock = LightClock(0.5, eps)
        residual = quasi_periodicity_residual(clock, np.linspace(0.1, 2.9, 15) * clock.period())
        checks.append(Check(f"quasi_periodicity.v={v}", residual, 1e-9))

    particles = [Particle1D(p, q, m) for p, q, m in
                 zip(rng.uniform(-3, 3, 20), rng.uniform(-5, 5, 20), rng.uniform(0.1, 2.0, 20))]
    worst = max(commutation_residual(particles, t, eps)
                for t, eps in zip(rng.uniform(-5, 5, 5), rng.uniform(-2, 2, 5)))
    checks.append(Check('commutation', worst, 1e-10))

    worst_group = worst_momentum = 0.0
    for particle in particles:
        a, b = rng.uniform(-1.5, 1.5, 2)
        twice = group_action('N_eps', b, group_action('N_eps', a, particle))
        once = group_action('N_eps', a + b, particle)
        worst_group = max(worst_group, float(np.max(np.abs(twice.as_array() - once.as_array()))))
        boosted = group_action('N_eps', a, particle)
        energy, momentum = momentum_transform(a, particle.energy, particle.p)
        worst_momentum = max(worst_momentum, abs(energy - boosted.energy), abs(momentum - boosted.p))
    checks.append(Check('boost_composition', worst_group, 1e-10))
    checks.append(Check('momentum_transform', worst_momentum, 1e-10))

    report = simultaneity_check()
    checks.append(_flag('simultaneity.moving', report['simultaneous_moving']))
    checks.append(_flag('simultaneity.broken_when_stopped', not report['simultaneous_stopped']))

    cylinder = CylinderGeodesic(point_masses([[0.0, 0.0, 0.0]], [1.0], 0.1))
    state = np.array([3.0, 0.0, 0.0, 0.0, 0.4, 0.1, 0.0, 0.7, 0.0])
    traj = cylinder.trajectory(state, 20.0)
    checks.append(Check('cylinder.unit_speed', max(abs(cylinder.unit_speed_defect(x)) for x in traj.states), 1e-8))
    massless = state.copy()
    massless[7] = 0.0
    checks.append(Check('cylinder.massless_proper_time', abs(cylinder.trajectory(massless, 20.0).final[8]), 1e-12))
    return checks


def quasi_integrals(rng):
    """Every declared quasi-integral decays at the rate ``-kappa`` on a transient."""
    checks = []
    for model_id in QUASI_INTEGRAL_MODELS:
        system = _default_system(model_id, int(rng.integers(2 ** 32)))
        x0 = system.random_state(rng)
        horizon = min(2.0, 1.0 / system.kappa)
        traj = integrate(system, x0, 0.0, horizon, max_step=horizon / 50)
        for name, Q in system.quasi_integrals().items():
            try:
                rate = quasi_integral_rate(traj, Q)
                defect = abs(rate + system.kappa) / system.kappa
            except CdLabError as exc:
                logger.warning(f"{model_id}.{name}: {exc}")
                defect = np.inf
            checks.append(Check(f"{model_id}.{name}", defect, 1e-3))
    return checks


def oscillator_spectrum(rng):
    mu = 200.0
    checks = []
    for n in range(1, 6):
        root = oscillator_root(n, mu, 'stable')
        checks.append(Check(f"stable.n={n}.p", abs(root.p - n), 10 / mu ** 2))
        checks.append(Check(f"stable.n={n}.q", abs(root.q - 1 / mu), 10 / mu ** 3))
    model = CsOscillator(kappa=2.0 / mu)
    for series, expected in (('stable', 'stable'), ('unstable', 'unstable')):
        candidate = model.candidate_from_root(oscillator_root(1, mu, series))
        checks.append(_flag(f"{series}.n=1.floquet", lie_floquet(model, candidate).verdict == expected))
    worst = 0.0
    for p, q in zip(rng.uniform(0.25, 8.0, 8), rng.uniform(0.01, 1.0, 8)):
        worst = max(worst, abs(g_function(p, q, 'series') - g_function(p, q, 'integral')))
    checks.append(Check('g_series_vs_integral', worst, 1e-8))
    return checks


def retraction_suite(rng):
    kappa = 1.0
    system = TorusSystem(kappa, h=[1.0], K=[[1.0]])
    worst_map = worst_idem = worst_commute = worst_shift = 0.0
    for _ in range(3):
        x = np.array([rng.uniform(0, 2 * np.pi), 1.0 + rng.uniform(-0.5, 0.5)])
        target = system.wrap(np.array([x[0] + (x[1] - 1.0) / kappa, 1.0]))
        rx = retraction(system, x)
        worst_map = max(worst_map, system.state_distance(rx, target))
        worst_idem = max(worst_idem, system.state_distance(retraction(system, rx), rx))
        worst_commute = max(worst_commute, retraction_commutes(system, x, 1.0))
        shift = torus_phase_shift(x[1:], system.h, kappa, system.hessian)
        worst_shift = max(worst_shift, abs(shift[0] - (x[1] - 1.0) / kappa))
    return [Check('retraction.closed_form', worst_map, 1e-6),
            Check('retraction.idempotent', worst_idem, 1e-6),
            Check('retraction.commutes', worst_commute, 1e-6),
            Check('retraction.phase_shift', worst_shift, 1e-9)]


def hj(rng):
    m, k, omega, f = 1.0, 1.0, 0.7, 1.0
    threshold = 2 * np.sqrt(k / m)
    points = list(zip(rng.uniform(-2, 2, 20), rng.uniform(0, 2 * np.pi, 20)))
    first, second = hj_quadratic(m, k, omega, f, 1.5 * threshold)
    checks = [Check('hj.first_residual', first.residual(points), 1e-10),
              Check('hj.second_residual', second.residual(points), 1e-10)]
    first, second = hj_quadratic(m, k, omega, f, threshold * (1 + 1e-14))
    checks.append(Check('hj.merge_at_threshold', abs(first.a - second.a), 1e-6))
    try:
        hj_quadratic(m, k, omega, f, 0.5 * threshold)
        below = False
    except NoSolution:
        below = True
    checks.append(_flag('hj.none_below_threshold', below))

    system = build_system('forced_oscillator', 0.5 * threshold, {'m': m, 'k': k, 'omega': omega, 'f': f})
    traj = integrate(system, np.array([1.0, 0.0, 0.0, 0.0]), 0.0, 40.0 / system.kappa, max_step=0.01)
    amplitude = abs(system.steady_amplitude())
    tail = traj.window(traj.t1 - 4 * np.pi / omega, traj.t1)
    checks.append(Check('hj.cycle_below_threshold', abs(np.ptp(tail.states[:, 0]) / 2 - amplitude), 1e-3))
    return checks


def _attractor_census(system, targets, rng, starts, t_end=60.0, settle=10.0, spread_tol=1e-8):
    """Integrate random starts; return (energy gaps to ``targets``, final states) of the converged ones."""
    gaps, finals = [], []
    for index in range(starts):
        try:
            traj = integrate(system, system.random_state(rng), 0.0, t_end)
        except CdLabError as exc:
            logger.warning(f"{system.model_id} start {index}: {exc}")
            continue
        energy, spread = hamiltonian_on_attractor(system, traj.window(t_min=t_end - settle))
        if spread is None or spread > spread_tol:
            logger.debug(f"{system.model_id} start {index} not settled (spread {spread})")
            continue
        gaps.append(float(np.min(np.abs(np.asarray(targets) - energy))))
        finals.append(traj.final)
    return gaps, finals


def matrix(rng, starts=20):
    levels = np.array([0.0, 2.0, 4.5, 7.0])
    system = MatrixModel(1.0, np.diag(levels))
    gaps, _ = _attractor_census(system, levels, rng, starts)
    checks = [_flag('attractors.found', bool(gaps))]
    checks.append(Check('attractors.energy_is_a_level', max(gaps, default=np.inf), 1e-6))

    mu, kappa = 0.3, 1.0
    reduced = ReducedMatrixSystem(kappa, [mu])
    x0 = np.array([np.arcsin(mu / kappa), 1e-4])
    traj = integrate(reduced, x0, 0.0, 80.0, max_step=0.5).window(t_min=10.0)
    rate = -np.polyfit(traj.times, np.log(traj.states[:, 1]), 1)[0]
    expected = matrix_rates(mu, kappa)[0]
    checks.append(Check('relaxation.near_degenerate', abs(rate - expected) / expected, 0.2))

    solution = matrix_series2(0, 1, [0.0, mu], kappa)
    point = reduced.series2_point(0)
    checks.append(Check('series2.phase', abs(np.angle(solution.phase) - point[0]), 1e-12))
    checks.append(Check('series2.stationary', float(np.max(np.abs(reduced.field(point)))), 1e-12))
    return checks


def fermion(rng, starts=20):
    levels = np.array([0.0, 2.0, 4.5, 7.0])
    system = FermionModel(1.0, np.diag(levels), k=2)
    gaps, finals = _attractor_census(system, pauli_energies(levels, 2), rng, starts)
    checks = [_flag('attractors.found', bool(gaps)),
              Check('attractors.pauli_energy', max(gaps, default=np.inf), 1e-5)]
    for name, Q in system.quasi_integrals().items():
        checks.append(Check(f"attractors.{name}", max((abs(Q(x)) for x in finals), default=np.inf), 1e-8))
    return checks


def spin(rng, starts=8):
    """Census of the spin basins at ``lambda / eps = 50`` and the spectral solutions it should find."""
    lam, kappa = 1.0, 0.04
    system = SpinModel(kappa, m=3, lam=lam)
    projections = np.arange(system.m + 1) - system.m / 2
    gaps, finals = _attractor_census(system, lam * projections, rng, starts, t_end=1000.0, settle=50.0,
                                     spread_tol=0.01 * lam)
    checks = [_flag('attractors.found', bool(gaps)),
              Check('attractors.s3_projection', max(gaps, default=np.inf) / lam, 0.05)]
    for name, Q in system.quasi_integrals().items():
        checks.append(Check(f"attractors.{name}", max((abs(Q(x)) for x in finals), default=np.inf), 1e-8))

    for level in (1, 2):
        candidate = solve_lie(system, system.spectral_seed(level), system.epsilon, continuation=True)
        sd = system.spectral_data(candidate.z, candidate.xi)
        predicted = deviation_second_order(level, system.epsilon, sd)
        deviation = candidate.omega - sd.levels[level]
        checks.append(Check(f"deviation.n={level}", abs(deviation / predicted - 1), 0.1))

    pair = SpinModel(kappa, m=2, lam=lam)
    candidate = solve_lie(pair, pair.spectral_seed(1), pair.epsilon, continuation=True)
    s3 = pair.spin(pair.reconstruct_state(candidate))[2]
    checks.append(Check('m=2.middle_level_s3', abs(s3), 10 * pair.epsilon ** 2))
    return checks


def particle(rng):
    rho = 0.01
    checks = [Check('velocity.small_rho', abs(particle_velocity(rho) - velocity_small_rho(rho)), 5 * rho ** 2)]
    x = 0.01
    checks.append(Check('phi.small_x', abs(particle_phi(x) - (1 - 4 * x * x)), 1e-4))
    x = 100.0
    checks.append(Check('phi.large_x', abs(particle_phi_closed(x) * x * np.sqrt(np.pi) - 1), 0.02))

    solution = ParticleLieSolution(ParticleParams(rho, 1.0))
    checks.append(Check('lie.residuals', float(np.max(np.abs(solution.residuals()))), 1e-10))
    times = np.linspace(0.0, 20.0, 401)
    checks.append(Check('lie.action_rate', abs(action_rate(solution, solution.trajectory(times)) - 1.0), 1e-10))

    params = ParticleParams(1.0, 1.0)
    distance = 3 * params.tail_length
    grid = np.array([-2 * distance, -distance])
    measured = e_folding_length(grid, particle_wavetail(grid, params), distance)
    checks.append(Check('tail.e_folding', abs(measured / params.tail_length - 1), 0.1))
    grid, profile = simulate_tail(params)
    measured = e_folding_length(grid, profile, distance)
    checks.append(Check('tail.simulated_e_folding', abs(measured / params.tail_length - 1), 0.1))
    return checks


def low_frequency(rng):
    """Ground-state drift of the oscillator at ``omega0 / eps = 0.01``."""
    system = CsOscillator(kappa=2.0, omega0=0.01, Nmax=16)
    traj = integrate(system, system.initial_state(1.0 + 0.0j), 0.0, 2000.0).window(t_min=50.0)
    z = np.array([system.split(system.to_complex(x))[0] for x in traj.states])
    rate = -np.polyfit(traj.times, np.log(np.abs(z)), 1)[0]
    frequency = np.polyfit(traj.times, np.unwrap(np.angle(z)), 1)[0]
    expected_frequency, expected_rate = low_freq_coefficients(system.omega0, system.epsilon)
    return [Check('frequency', abs(frequency / expected_frequency - 1), 0.05),
            Check('damping', abs(rate / expected_rate - 1), 0.25)]


SUITES = {
    'identities': identities,
    'appendix1': appendix1,
    'quasi_integrals': quasi_integrals,
    'oscillator_spectrum': oscillator_spectrum,
    'retraction': retraction_suite,
    'hj': hj,
    'matrix': matrix,
    'fermion': fermion,
    'spin': spin,
    'particle': particle,
    'low_frequency': low_frequency,
}


def suite_ids():
    return sorted(SUITES)


def run_suite(name, seed=0):
    """
    Run one suite and log a line per check.

    Raises:
        UnknownSuite: ``name`` is not registered
    """
    try:
        suite = SUITES[name]
    except KeyError:
        raise UnknownSuite(f"Unknown suite: {name}; available: {', '.join(suite_ids())}", suite=name)
    rng = np.random.default_rng(seed)
    logger.info(f"Running suite {name} (seed={seed})")
    checks = suite(rng)
    for check in checks:
        level = logging.INFO if check.passed else logging.ERROR
        logger.log(level, f"{name}.{check.name}: residual={check.residual:.3e} threshold={check.threshold:.1e} "
                          f"{'ok' if check.passed else 'FAILED'}")
    return checks
