"""
Attractor analysis: limit cycles, stability, energies, quantization
integrals, isotropy, retraction maps and invariant manifolds.

Every routine works on a system object (anything with ``field``, ``omega``
and the optional model hooks of ``CdSystem``) and on trajectories produced
by ``services.integrator``.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad_vec
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from . import numdiff
from .cdcore import poisson_bracket
from .exceptions import (BranchJump, InsufficientSamples, NoLimit, NoRecurrence, NoSolution, NotConverged,
                         OpenLoop)
from .integrator import Trajectory, integrate, monodromy, transport
from .lie import rotating_frame_jacobian
from .systems.simple import HBAR, TWO_PI, TorusSystem

logger = logging.getLogger(__name__)

FLOQUET_UNIT_TOL = 1e-6
DEFAULT_SAMPLES_PER_PERIOD = 400


def _delta(system, x, y):
    """``x - y`` with angle coordinates reduced to their nearest branch."""
    delta = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    for index, period in getattr(system, 'angle_periods', {}).items():
        delta[index] = (delta[index] + period / 2) % period - period / 2
    return delta


@dataclass
class CycleReport:
    period: float
    samples: Trajectory
    floquet_multipliers: list = field(default_factory=list)
    energy: float = None
    energy_defect: float = None
    quantization_integrals: list = field(default_factory=list)
    returns: int = 0
    return_spread: float = 0.0
    model_id: str = ''

    @property
    def start(self):
        return self.samples.states[0]

    def unit_multiplier_defect(self):
        """Distance of the closest Floquet multiplier to 1; the flow direction should give 0."""
        if not self.floquet_multipliers:
            return None
        return float(min(abs(m - 1.0) for m in self.floquet_multipliers))

    def to_dict(self):
        return {
            'model': self.model_id,
            'period': self.period,
            'returns': self.returns,
            'return_spread': self.return_spread,
            'samples': len(self.samples),
            'floquet_multipliers': [[float(np.real(m)), float(np.imag(m))] for m in self.floquet_multipliers],
            'unit_multiplier_defect': self.unit_multiplier_defect(),
            'energy': self.energy,
            'energy_defect': self.energy_defect,
            'quantization_integrals': list(self.quantization_integrals),
        }


def _fft_period(times, values):
    """Dominant period of one coordinate, from the FFT of a uniform resampling."""
    span = times[-1] - times[0]
    if span <= 0 or values.size < 16:
        return None
    grid = np.linspace(times[0], times[-1], 4096)
    signal = np.interp(grid, times, values)
    signal = signal - signal.mean()
    power = np.abs(np.fft.rfft(signal)) ** 2
    if power.size < 3 or not np.any(power[1:] > 0):
        return None
    k = 1 + int(np.argmax(power[1:]))
    return span * (grid.size - 1) / grid.size / k


def _crossing(system, traj, i, reference, normal):
    """Refine the section crossing inside step ``i`` with a cubic Hermite interpolant."""
    t0, t1 = traj.times[i], traj.times[i + 1]
    y0 = _delta(system, traj.states[i], reference)
    y1 = y0 + _delta(system, traj.states[i + 1], traj.states[i])
    slopes = [system.field(traj.states[i], t0), system.field(traj.states[i + 1], t1)]
    spline = CubicHermiteSpline([t0, t1], np.vstack([y0, y1]), np.vstack(slopes))
    section = lambda t: float(normal @ spline(t))
    lo, hi = section(t0), section(t1)
    if lo == 0.0:
        tc = t0
    elif hi == 0.0:
        tc = t1
    else:
        tc = brentq(section, t0, t1, xtol=1e-14, rtol=1e-14)
    return tc, reference + spline(tc)


def detect_cycle(system, traj, tol=1e-6, min_returns=3, with_floquet=True,
                 samples_per_period=DEFAULT_SAMPLES_PER_PERIOD, integrate_tol=None):
    """
    Find the limit cycle a trajectory has settled on.

    The section is the hyperplane through the final state orthogonal to the
    flow there. Returns to it (in the flow direction, near the final state)
    are refined by root bracketing; the cycle is accepted once successive
    returns agree to ``tol``. One period is then re-integrated from the last
    return to produce dense on-cycle samples.

    Args:
        system: the system that produced ``traj``
        traj (Trajectory): trajectory whose tail lies on the attractor
        tol (float): agreement required between successive returns
        min_returns (int): number of returns that must agree
        with_floquet (bool): compute the monodromy matrix of the cycle

    Returns:
        CycleReport

    Raises:
        NoRecurrence: the trajectory rests at a fixed point (dimension 0) or
            winds on a torus without closing (dimension 2)
        NotConverged: returns exist but still drift by more than ``tol``
    """
    reference = np.asarray(traj.final, dtype=float)
    t_ref = traj.t1
    velocity = np.asarray(system.field(reference, t_ref), dtype=float)
    speed = float(np.linalg.norm(velocity))
    if speed < tol:
        raise NoRecurrence(f"Trajectory rests at a fixed point (|V| = {speed:.3g})", dimension=0,
                           state=reference.tolist(), t=t_ref)
    normal = velocity / speed

    tail = traj.window(t_min=traj.t0 + 0.5 * (t_ref - traj.t0))
    offsets = np.array([_delta(system, x, reference) for x in tail.states])
    extent = float(np.max(np.linalg.norm(offsets, axis=1)))
    radius = max(0.25 * extent, 10 * tol)

    dominant = int(np.argmax(np.var(offsets, axis=0)))
    period_hint = _fft_period(tail.times, offsets[:, dominant])

    section = offsets @ normal
    crossings = []
    for i in range(len(tail) - 1):
        if section[i] < 0.0 <= section[i + 1]:
            tc, xc = _crossing(system, tail, i, reference, normal)
            if system.state_distance(xc, reference) < radius:
                crossings.append((tc, xc))
    if period_hint:
        kept = []
        for tc, xc in reversed(crossings):
            if not kept or kept[-1][0] - tc > 0.5 * period_hint:
                kept.append((tc, xc))
        crossings = kept[::-1]

    if len(crossings) < 2:
        raise NoRecurrence(f"No return to the section within {t_ref - tail.t0:.4g} time units",
                           dimension=2, period_hint=period_hint)
    recent = crossings[-min_returns:]
    spreads = [system.state_distance(b[1], a[1]) for a, b in zip(recent, recent[1:])]
    if len(recent) < min_returns or max(spreads) >= tol:
        distances = [system.state_distance(xc, reference) for _, xc in crossings[-min_returns - 2:-1]]
        shrinking = len(distances) >= 2 and distances[-1] < 0.9 * distances[0]
        if len(recent) < min_returns or shrinking:
            raise NotConverged(f"{len(crossings)} returns, last spread {max(spreads):.3g} above tol {tol:g}",
                               returns=len(crossings), spread=max(spreads))
        raise NoRecurrence(f"Returns do not close (spread {max(spreads):.3g}); attractor looks like a torus",
                           dimension=2, spread=max(spreads))

    t_start, x_start = recent[-2]
    period = float(recent[-1][0] - t_start)
    samples = integrate(system, x_start, t_start, t_start + period, tol=integrate_tol,
                        max_step=period / samples_per_period)
    report = CycleReport(period=period, samples=samples, returns=len(crossings),
                         return_spread=float(max(spreads)), model_id=getattr(system, 'model_id', ''))
    if with_floquet:
        report.floquet_multipliers = floquet(system, report, tol=integrate_tol)
    report.energy, report.energy_defect = hamiltonian_on_attractor(system, samples)
    try:
        report.quantization_integrals = quantization_integral(system, samples)
    except OpenLoop as exc:
        logger.warning(f"Cycle samples of {report.model_id} do not close: {exc}")
    logger.info(f"Cycle of {report.model_id}: T={period:.10g} after {len(crossings)} returns")
    return report


def floquet(system, cycle, tol=None):
    """Eigenvalues of the monodromy matrix around ``cycle``, largest modulus first."""
    matrix = monodromy(system, cycle.start, cycle.period, t0=cycle.samples.t0, tol=tol)
    values = np.linalg.eigvals(matrix)
    return sorted((complex(v) for v in values), key=abs, reverse=True)


@dataclass
class LieStability:
    exponents: list
    multipliers: list
    period: float
    verdict: str

    def to_dict(self):
        return {
            'period': self.period,
            'verdict': self.verdict,
            'max_modulus': max(abs(m) for m in self.multipliers),
            'multipliers': [[float(m.real), float(m.imag)] for m in self.multipliers],
        }


def lie_floquet(model, candidate, threshold=1e-4):
    """
    Stability of a Lie solution from the Jacobian of ``V - G`` in its rotating frame.

    Multipliers are ``exp(lambda T)`` over one orbit period; the solution is
    unstable when any of them exceeds ``1 + threshold`` in modulus.
    """
    jac = rotating_frame_jacobian(model, candidate)
    exponents = np.linalg.eigvals(np.real_if_close(jac))
    period = model.orbit_period(candidate)
    multipliers = sorted((complex(v) for v in np.exp(exponents * period)), key=abs, reverse=True)
    verdict = 'unstable' if abs(multipliers[0]) > 1 + threshold else 'stable'
    logger.debug(f"Lie solution of {model.model_id} at omega={candidate.omega:.8g}: {verdict}, "
                 f"max |m| = {abs(multipliers[0]):.8g}")
    return LieStability(sorted(exponents.tolist(), key=lambda v: v.real, reverse=True), multipliers,
                        period, verdict)


def lyapunov_exponents(system, x0, duration, t0=0.0, intervals=50, count=None, tol=None):
    """
    Leading Lyapunov exponents by repeated QR re-orthonormalisation of
    transported tangent vectors; used where the attractor is a torus.
    """
    count = system.dim if count is None else count
    basis = np.eye(system.dim)[:, :count]
    x, t = np.asarray(x0, dtype=float), float(t0)
    step = duration / intervals
    sums = np.zeros(count)
    for _ in range(intervals):
        traj, moved = transport(system, x, t, t + step, basis, tol=tol)
        basis, upper = np.linalg.qr(moved)
        sums += np.log(np.abs(np.diag(upper)))
        x, t = traj.final, traj.t1
    return np.sort(sums / duration)[::-1]


def quantization_integral(system, samples, loops=None, closure_tol=None):
    """
    Loop integrals of the model's action form over closed loops.

    Args:
        samples (Trajectory or None): one period of a cycle; used when ``loops`` is not given
        loops (list): arrays of states, one closed loop each

    Returns:
        list: one integral per loop

    Raises:
        OpenLoop: a loop's end point misses its start by more than ``closure_tol``
    """
    if loops is None:
        loops = [samples.states]
    results = []
    for index, loop in enumerate(loops):
        loop = np.asarray(loop, dtype=float)
        scale = 1.0 + float(np.max(np.abs(loop)))
        limit = 1e-5 * scale if closure_tol is None else closure_tol
        gap = system.loop_distance(loop[0], loop[-1])
        if gap > limit:
            raise OpenLoop(f"Loop {index} misses closure by {gap:.3g}", loop=index, gap=gap)
        forms = np.array([system.action_form(x) for x in loop])
        steps = np.array([_delta(system, b, a) for a, b in zip(loop[:-1], loop[1:])])
        results.append(float(np.sum(0.5 * (forms[:-1] + forms[1:]) * steps)))
    return results


def quantum_numbers(integrals, hbar=HBAR):
    """Nearest multiple ``n`` of ``2 pi hbar`` for each integral and the distance to it."""
    out = []
    for value in integrals:
        n = int(round(value / (TWO_PI * hbar)))
        out.append((n, float(value - n * TWO_PI * hbar)))
    return out


def torus_basis_loops(system, count=401):
    """The basis cycles of the torus ``I = h``: one full turn of each angle."""
    loops = []
    turn = np.linspace(0.0, TWO_PI, count)
    for k in range(system.n):
        states = np.zeros((count, system.dim))
        states[:, system.n:] = system.h
        states[:, k] = turn
        loops.append(states)
    return loops


def isotropy_defect(system, states, dimension=None, neighbours=None, t=0.0, centres=60):
    """
    Largest ``|omega(xi, eta)|`` over unit tangent pairs of a sampled attractor.

    Tangent planes come from local PCA over the nearest samples. When
    ``dimension`` is not given it is read off each neighbourhood's singular
    values. One-dimensional attractors are isotropic and give 0.

    Raises:
        InsufficientSamples: too few samples for the neighbourhood size
    """
    states = np.asarray(states, dtype=float)
    if dimension == 1:
        return 0.0
    k = min(20, len(states) // 10) if neighbours is None else int(neighbours)
    needed = (dimension or 2) + 1
    if len(states) < 10 * needed or k < needed:
        raise InsufficientSamples(f"{len(states)} samples cannot fix {needed - 1}-dimensional tangent planes",
                                  samples=len(states), neighbours=k)
    picks = np.linspace(0, len(states) - 1, min(centres, len(states))).astype(int)
    defect = 0.0
    pca_residual = 0.0
    for c in picks:
        offsets = np.array([_delta(system, x, states[c]) for x in states])
        nearest = np.argsort(np.linalg.norm(offsets, axis=1))[1:k + 1]
        local = offsets[nearest] - offsets[nearest].mean(axis=0)
        _, sv, vt = np.linalg.svd(local, full_matrices=False)
        d = int(np.sum(sv > 0.2 * sv[0])) if dimension is None else dimension
        if d < 2:
            continue
        tangents = vt[:d]
        omega = system.omega(states[c], t)
        products = np.abs(tangents @ omega @ tangents.T)
        defect = max(defect, float(np.max(np.triu(products, 1))))
        if d < sv.size:
            pca_residual = max(pca_residual, float(sv[d] / sv[0]))
    logger.debug(f"Isotropy defect {defect:.3g} (PCA residual {pca_residual:.3g})")
    return defect


def torus_report(system, traj, dimension=2):
    """
    Summary of an attractor that is not a cycle: the isotropy defect of the
    trajectory's second half and, for torus systems, the integrals over the
    basis cycles of ``I = h`` with their quantum numbers.
    """
    tail = traj.window(t_min=traj.t0 + 0.5 * (traj.t1 - traj.t0))
    report = {'dimension': dimension}
    try:
        report['isotropy_defect'] = isotropy_defect(system, tail.states, dimension)
    except InsufficientSamples as exc:
        logger.warning(f"Isotropy of {getattr(system, 'model_id', '')} skipped: {exc}")
    if isinstance(system, TorusSystem):
        integrals = quantization_integral(system, None, loops=torus_basis_loops(system))
        report['quantization_integrals'] = integrals
        report['quantum_numbers'] = [n for n, _ in quantum_numbers(integrals)]
    return report


def hamiltonian_on_attractor(system, samples):
    """Mean of the physical Hamiltonian over attractor samples and its largest deviation."""
    values = [system.physical_hamiltonian(x, t) for t, x in zip(samples.times, samples.states)]
    if not values or any(v is None for v in values):
        return None, None
    values = np.asarray(values, dtype=float)
    energy = float(values.mean())
    return energy, float(np.max(np.abs(values - energy)))


def action_rate(system, traj, t_min=None, phase=None):
    """
    Time average of ``dS0/dt`` along a trajectory, lifting the multivalued phase
    by nearest-branch continuation.

    Raises:
        BranchJump: consecutive samples differ by a quarter period or more
    """
    window = traj.window(t_min=t_min)
    phase = system.phase if phase is None else phase
    period = system.phase_period
    values = np.array([phase(x, t) for t, x in zip(window.times, window.states)], dtype=float)
    steps = np.diff(values)
    if np.isfinite(period):
        steps = (steps + period / 2) % period - period / 2
        jumps = np.nonzero(np.abs(steps) >= period / 4)[0]
        if jumps.size:
            t_at = float(window.times[jumps[0] + 1])
            raise BranchJump(f"Phase moved {steps[jumps[0]]:.3g} in one sample at t={t_at:.6g}", t=t_at)
    return float(np.sum(steps) / (window.t1 - window.t0))


def retraction(system, x, t_start=None, t_max=None, tol=1e-7, integrate_tol=1e-12):
    """
    ``r(x) = lim h_{-T} g_T (x)`` with ``g`` the dissipative flow and ``h`` the
    physical-Hamiltonian flow; ``T`` doubles until two values agree to ``tol``.

    Raises:
        NoLimit: the values are still moving at ``t_max``
    """
    x = np.asarray(x, dtype=float)
    T = 1.0 / system.kappa if t_start is None else float(t_start)
    t_max = 400.0 / system.kappa if t_max is None else float(t_max)
    previous = None
    while T <= t_max:
        moved = integrate(system, x, 0.0, T, tol=integrate_tol).final
        value = system.physical_flow(moved, -T)
        if previous is not None and system.state_distance(value, previous) < tol:
            return system.wrap(value)
        previous = value
        T *= 2
    raise NoLimit(f"Retraction of {system.model_id} not settled by T={t_max:g}", t_max=t_max)


def factorization_defect(system, x, times, retracted=None, integrate_tol=1e-12):
    """``|g_t(x) - h_t(r(x))|`` for each ``t``; it decays as ``t`` grows."""
    x = np.asarray(x, dtype=float)
    retracted = retraction(system, x) if retracted is None else retracted
    defects = []
    for t in times:
        moved = integrate(system, x, 0.0, t, tol=integrate_tol).final
        defects.append(system.state_distance(moved, system.physical_flow(retracted, t)))
    return np.array(defects)


def retraction_commutes(system, x, t, integrate_tol=1e-12):
    """``max(|r(g_t x) - h_t(r x)|, |g_t(r x) - h_t(r x)|)``."""
    x = np.asarray(x, dtype=float)
    rx = retraction(system, x)
    target = system.physical_flow(rx, t)
    moved = integrate(system, x, 0.0, t, tol=integrate_tol).final
    on_attractor = integrate(system, rx, 0.0, t, tol=integrate_tol).final
    return max(system.state_distance(retraction(system, moved), target),
               system.state_distance(on_attractor, target))


def torus_phase_shift(actions, h, kappa, hessian):
    """
    Angle shift of the torus retraction,
    ``kappa sum_j (I_j - h_j) int tau e^{-kappa tau} H_ij(I(tau)) d tau``
    along ``I(tau) = h + (I - h) e^{-kappa tau}``.
    """
    gap = np.asarray(actions, dtype=float) - np.asarray(h, dtype=float)
    h = np.asarray(h, dtype=float)

    def integrand(tau):
        decay = np.exp(-kappa * tau)
        return tau * decay * (np.asarray(hessian(h + gap * decay)) @ gap)

    value, _ = quad_vec(integrand, 0.0, np.inf, epsabs=1e-13, epsrel=1e-11)
    return kappa * value


@dataclass(frozen=True)
class HJSolution:
    """
    Quadratic action ``S(q, phi) = a q^2 + Re(b q e^{i phi} + c e^{2 i phi})`` of the forced oscillator.

    Points are ``(q, phi)`` pairs; the invariant surface is ``p = S_q``, ``I = S_phi``.
    """

    a: float
    b: complex
    c: complex
    m: float
    k: float
    omega: float
    f: float
    kappa: float

    def __call__(self, point, t=0.0):
        q, phi = point
        e = np.exp(1j * phi)
        return float(self.a * q * q + (self.b * q * e + self.c * e * e).real)

    def grad(self, point, t=0.0):
        q, phi = point
        e = np.exp(1j * phi)
        return np.array([2 * self.a * q + (self.b * e).real,
                         (1j * self.b * q * e + 2j * self.c * e * e).real])

    def dt(self, point, t=0.0):
        return 0.0

    def energy(self, point):
        """``H(S_q, q, S_phi, phi) + kappa S``, constant on a solution."""
        q, phi = point
        p, action = self.grad(point)
        H = p * p / (2 * self.m) + self.k * q * q / 2 + self.omega * action + self.f * q * np.cos(phi)
        return float(H + self.kappa * self(point))

    def energy_gradient(self, point):
        q, phi = point
        e = np.exp(1j * phi)
        s_q, s_phi = self.grad(point)
        s_qphi = (1j * self.b * e).real
        s_phiphi = (-self.b * q * e - 4 * self.c * e * e).real
        d_q = s_q * 2 * self.a / self.m + self.k * q + self.omega * s_qphi + self.f * np.cos(phi) + self.kappa * s_q
        d_phi = (s_q * s_qphi / self.m + self.omega * s_phiphi - self.f * q * np.sin(phi)
                 + self.kappa * s_phi)
        return np.array([d_q, d_phi])

    def residual(self, points):
        return float(max(np.max(np.abs(self.energy_gradient(p))) for p in points))

    def surface_state(self, q, phi):
        """Point of the invariant surface in forced-oscillator coordinates ``(q, phi, p, I)``."""
        p, action = self.grad((q, phi))
        return np.array([q, phi, p, action])

    def to_dict(self):
        return {'a': self.a, 'b': [self.b.real, self.b.imag], 'c': [self.c.real, self.c.imag]}


def hj_quadratic(m, k, omega, f, kappa):
    """
    Both quadratic invariant surfaces of the forced oscillator. They exist for
    ``kappa >= 2 sqrt(k / m)`` and coincide at equality.

    Raises:
        NoSolution: ``kappa`` below the threshold
    """
    threshold = 2 * np.sqrt(k / m)
    disc = kappa * kappa - 4 * k / m
    if abs(disc) <= 1e-12 * kappa * kappa:
        disc = 0.0
    if disc < 0:
        raise NoSolution(f"No quadratic invariant surface for kappa={kappa:g} < {threshold:g}",
                         kappa=kappa, threshold=threshold)
    solutions = []
    for sign in (1.0, -1.0):
        a = m * (-kappa + sign * np.sqrt(disc)) / 4
        b = -f / (2 * a / m + kappa + 1j * omega)
        c = -b * b / (4 * m * (kappa + 2j * omega))
        solutions.append(HJSolution(float(a), complex(b), complex(c), m, k, omega, f, kappa))
    return tuple(solutions)


def invariant_manifold_residual(system, S, points, t=0.0, form='dissipative', rel=1e-3):
    """
    Largest ``|d/dq (H(dS/dq, q, t) + dS/dt + kappa S)|`` over configuration points.

    ``form='shifted'`` drops the ``kappa S`` term, for systems whose form
    carries the shift ``(p - h) dq``. ``S`` is called as ``S(q, t)``; its
    ``grad`` and ``dt`` methods are used when present.
    """
    if form not in ('dissipative', 'shifted'):
        raise ValueError(f"Unknown form {form!r}")
    kappa = system.kappa if form == 'dissipative' else 0.0

    def momenta(q, when):
        if hasattr(S, 'grad'):
            return np.asarray(S.grad(q, when), dtype=float)
        return numdiff.gradient(lambda y: S(y, when), q)

    def time_rate(q, when):
        if hasattr(S, 'dt'):
            return float(S.dt(q, when))
        h = 1e-5 * (1.0 + abs(when))
        return (S(q, when + h) - S(q, when - h)) / (2 * h)

    def energy(q):
        state = np.concatenate([q, momenta(q, t)])
        return system.hamiltonian(state, t) + time_rate(q, t) + kappa * S(q, t)

    worst = 0.0
    for q in points:
        grad = numdiff.gradient(energy, np.asarray(q, dtype=float), rel)
        worst = max(worst, float(np.max(np.abs(grad))))
    return worst


def manifold_distance(system, S, x, t=0.0):
    """``|p - dS/dq|`` at a state ``x = (q, p)``."""
    x = np.asarray(x, dtype=float)
    n = system.dim // 2
    q, p = x[:n], x[n:]
    grad = S.grad(q, t) if hasattr(S, 'grad') else numdiff.gradient(lambda y: S(y, t), q)
    delta = p - grad
    return float(np.linalg.norm(delta))


def standard_gauge_residual(system, samples, theta=None):
    """
    Largest ``|theta(V, 1)|`` over ``(x, t)`` samples, with ``theta`` a covector
    on ``(x, t)``. Defaults to the model's ``extended_form``, or ``alpha`` with
    no ``dt`` component for autonomous systems.
    """
    if theta is None:
        theta = getattr(system, 'extended_form', None)
    if theta is None:
        theta = lambda x, t: np.append(system.alpha(x, t), 0.0)
    worst = 0.0
    for x, t in samples:
        extended = np.append(system.field(x, t), 1.0)
        worst = max(worst, abs(float(np.dot(theta(x, t), extended))))
    return worst


def _gradient_of(F, x):
    if hasattr(F, 'grad'):
        return np.asarray(F.grad(x), dtype=float)
    return numdiff.gradient(F, x)


def constants_of_motion_check(system, functions, traj, tol=1e-6, basin=None, attractor=None,
                              bracket_samples=20):
    """
    Sort candidate functions into constants of motion.

    For each ``F`` the report records its drift along the trajectory, its
    largest ``|F - F o r|`` over ``basin`` points, and its spread over
    ``attractor`` samples. Brackets are taken between every pair of confirmed
    constants (including each with itself).
    """
    report = {'functions': {}, 'brackets': {}}
    confirmed = []
    for name, F in functions.items():
        values = np.array([F(x) for x in traj.states])
        drift = float(np.max(np.abs(values - values[0])))
        entry = {'flow_drift': drift, 'constant_along_flow': drift < tol}
        if basin is not None:
            gaps, unsettled = [], 0
            for x in basin:
                try:
                    gaps.append(abs(F(x) - F(retraction(system, x))))
                except NoLimit as exc:
                    unsettled += 1
                    logger.warning(f"{name}: basin point skipped: {exc}")
            gap = float(max(gaps)) if gaps else float('nan')
            entry['retraction_drift'] = gap
            entry['retraction_unsettled'] = unsettled
            entry['equals_retracted'] = bool(gaps) and gap < tol
        if attractor is not None:
            on = np.array([F(x) for x in attractor])
            entry['attractor_spread'] = float(on.max() - on.min())
            entry['attractor_mean'] = float(on.mean())
        report['functions'][name] = entry
        if entry['constant_along_flow'] and entry.get('equals_retracted', True):
            confirmed.append(name)

    picks = np.linspace(0, len(traj) - 1, min(bracket_samples, len(traj))).astype(int)
    for i, first in enumerate(confirmed):
        for second in confirmed[i:]:
            F, G = functions[first], functions[second]
            worst = 0.0
            for j in picks:
                x, t = traj.states[j], traj.times[j]
                worst = max(worst, abs(poisson_bracket(system.omega(x, t), _gradient_of(F, x), _gradient_of(G, x))))
            report['brackets'][f"{first},{second}"] = worst
    report['confirmed'] = confirmed
    return report
