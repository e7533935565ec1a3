"""
Relativity as a dynamic symmetry of free particles on a line, the geodesic
cylinder model and the boosted CD-system of a free relativistic particle.

Units have c = 1. Particles are ``(p, q, m)``; the symmetry generators are
``H = sqrt(m^2 + p^2)``, ``p`` and ``N = -q H``.
"""
import logging
from dataclasses import dataclass, replace

import numpy as np

from .exceptions import ConfigInvalid, SurfaceReached
from .integrator import integrate

logger = logging.getLogger(__name__)

SURFACE_FLOOR = 1e-6
GROUP_KINDS = ('H_t', 'P_h', 'N_eps')


@dataclass(frozen=True)
class Particle1D:
    p: float
    q: float
    m: float = 1.0

    @property
    def energy(self):
        return float(np.hypot(self.m, self.p))

    @property
    def lorentz_momentum(self):
        return -self.q * self.energy

    @property
    def velocity(self):
        energy = self.energy
        return float(np.sign(self.p)) if energy == 0 else self.p / energy

    def as_array(self):
        return np.array([self.p, self.q])


def group_action(kind, param, particle):
    """
    One-parameter groups of the line:
    ``H_t: q -> q + t p / H``; ``P_h: q -> q + h``;
    ``N_eps: p -> ch(eps) p + sh(eps) H``, ``q -> q H / (ch(eps) H + sh(eps) p)``.
    """
    if kind == 'H_t':
        return replace(particle, q=particle.q + param * particle.velocity)
    if kind == 'P_h':
        return replace(particle, q=particle.q + param)
    if kind == 'N_eps':
        energy = particle.energy
        if not energy > 0:
            raise ConfigInvalid("N_eps needs a particle with positive energy", path='particle')
        ch, sh = np.cosh(param), np.sinh(param)
        boosted = ch * energy + sh * particle.p
        return replace(particle, p=ch * particle.p + sh * energy, q=particle.q * energy / boosted)
    raise ConfigInvalid(f"Unknown group action {kind!r}; expected one of {GROUP_KINDS}", path='kind')


def act(ensemble, kind, param):
    return [group_action(kind, param, particle) for particle in ensemble]


def momentum_transform(eps, energy, momentum):
    """The Lorentz vector ``(H, p)`` under ``N_eps``."""
    ch, sh = np.cosh(eps), np.sinh(eps)
    return ch * energy + sh * momentum, sh * energy + ch * momentum


def velocity_add(u, v):
    """``(u + v) / (1 + u v)``."""
    if abs(u) > 1 or abs(v) > 1:
        raise ConfigInvalid(f"Velocities must not exceed 1, got {u} and {v}", path='velocity')
    return (u + v) / (1 + u * v)


def rest_body(n, d=1.0, m=1.0):
    """Equilibrium lattice ``q_a = a d`` of ``n + 1`` particles at rest."""
    return [Particle1D(0.0, a * d, m) for a in range(n + 1)]


def body_length(ensemble):
    return ensemble[-1].q - ensemble[0].q


class BoostedBody:
    """A body moving by inertia: ``Z_eps(t) = H_t(N_eps Z)``."""

    def __init__(self, body, eps):
        self.eps = float(eps)
        self.initial = act(body, 'N_eps', self.eps)

    @property
    def velocity(self):
        return float(np.tanh(self.eps))

    def at(self, t):
        return act(self.initial, 'H_t', t)

    def length(self, t=0.0):
        return body_length(self.at(t))


def boosted_body(body, eps):
    return BoostedBody(body, eps)


def commutation_residual(particles, t, eps):
    """Largest ``|H_t N_eps x - P_{t th eps} N_eps H_{t / ch eps} x|`` over the particles."""
    worst = 0.0
    for particle in particles:
        lhs = group_action('H_t', t, group_action('N_eps', eps, particle))
        rhs = group_action('H_t', t / np.cosh(eps), particle)
        rhs = group_action('P_h', t * np.tanh(eps), group_action('N_eps', eps, rhs))
        worst = max(worst, float(np.max(np.abs(lhs.as_array() - rhs.as_array()))))
    return worst


class LightClock:
    """
    Massless particle bouncing between the end mirrors of a body of rest
    length ``L0`` moving with velocity ``v``. Motion is linear between
    reflections, so states are computed exactly from the reflection times.
    """

    def __init__(self, rest_length, eps=0.0):
        if not rest_length > 0:
            raise ConfigInvalid(f"rest length must be positive, got {rest_length}", path='T0')
        self.rest_length = float(rest_length)
        self.eps = float(eps)
        self.v = float(np.tanh(eps))
        # contracted length of the moving body
        self.length = self.rest_length / np.cosh(eps)

    def mirrors(self, t):
        return self.v * t, self.length + self.v * t

    def reflections(self, t_end):
        """Times at which the light pulse meets the rear mirror, starting there at ``t = 0``."""
        times = [0.0]
        t = 0.0
        while t < t_end:
            # forward leg to the front mirror, then back to the rear one
            t_front = t + self.length / (1 - self.v)
            x_front = self.length + self.v * t_front
            t = (x_front + t_front) / (1 + self.v)
            times.append(t)
        return np.array(times)

    def state(self, t):
        """``(rear mirror, front mirror, pulse position, pulse direction)`` at time ``t``."""
        rear, front = self.mirrors(t)
        round_trip = self.period()
        start = np.floor(t / round_trip) * round_trip
        outbound = self.length / (1 - self.v)
        local = t - start
        if local <= outbound:
            return np.array([rear, front, self.v * start + local, 1.0])
        x_front = self.v * start + outbound
        return np.array([rear, front, x_front - (local - outbound), -1.0])

    def period(self):
        return 2 * self.length / (1 - self.v * self.v)

    def measured_period(self, cycles=10):
        times = self.reflections(cycles * self.period() * (1 - 1e-12))
        return float(np.mean(np.diff(times)))


def clock_dilation(T0, eps, mechanism='abstract', cycles=10):
    """
    Period of a clock of rest period ``T0`` moving with rapidity ``eps``.

    ``abstract`` gives ``T0 ch(eps)``; ``light_clock_sim`` measures the mean
    round-trip time of a light clock of rest length ``T0 / 2``.
    """
    if not T0 > 0:
        raise ConfigInvalid(f"T0 must be positive, got {T0}", path='T0')
    if mechanism == 'abstract':
        return T0 * np.cosh(eps)
    if mechanism == 'light_clock_sim':
        return LightClock(T0 / 2, eps).measured_period(cycles)
    raise ConfigInvalid(f"Unknown clock mechanism {mechanism!r}", path='mechanism')


def quasi_periodicity_residual(clock, times):
    """
    Largest ``|Z(t + T) - P_{v T} Z(t)|`` over the sample times for a moving
    clock of period ``T``; only positions are shifted.
    """
    period = clock.period()
    shift = np.array([1.0, 1.0, 1.0, 0.0]) * clock.v * period
    return float(max(np.max(np.abs(clock.state(t + period) - clock.state(t) - shift)) for t in times))


def _coincidence_times(first, second):
    """Times at which respective particles of two inertial ensembles meet."""
    times = []
    for a, b in zip(first, second):
        closing = a.velocity - b.velocity
        times.append(np.inf if closing == 0 else (b.q - a.q) / closing)
    return np.array(times)


def simultaneity_check(n=4, d=1.0, m=1.0, v=0.6, gap=20.0, tol=1e-9):
    """
    Two equal bodies approach each other with velocities ``+v`` and ``-v``,
    so their respective points coincide at one instant. Adding the common
    velocity that stops the first body makes the coincidences non-simultaneous.
    """
    eps = float(np.arctanh(v))
    body = rest_body(n, d, m)
    first = BoostedBody(body, eps).initial
    second = act(BoostedBody(body, -eps).initial, 'P_h', gap)
    before = _coincidence_times(first, second)
    stopped_first = act(first, 'N_eps', -eps)
    stopped_second = act(second, 'N_eps', -eps)
    after = _coincidence_times(stopped_first, stopped_second)
    spread_before = float(np.ptp(before))
    spread_after = float(np.ptp(after))
    return {
        'coincidence_times_moving': before.tolist(),
        'coincidence_times_stopped': after.tolist(),
        'spread_moving': spread_before,
        'spread_stopped': spread_after,
        'simultaneous_moving': spread_before < tol,
        'simultaneous_stopped': spread_after < tol,
        'first_body_velocity': stopped_first[0].velocity,
    }


def point_masses(centres, energies, k):
    """``U(x) = -k sum E_a / |x - x_a|`` with its gradient."""
    centres = np.atleast_2d(np.asarray(centres, dtype=float))
    energies = np.atleast_1d(np.asarray(energies, dtype=float))

    def potential(x):
        offsets = np.asarray(x, dtype=float) - centres
        distances = np.linalg.norm(offsets, axis=1)
        value = -k * np.sum(energies / distances)
        grad = k * np.sum((energies / distances ** 3)[:, None] * offsets, axis=0)
        return float(value), grad
    return potential


def free_space(x):
    return 0.0, np.zeros(3)


class CylinderGeodesic:
    """
    Geodesic motion on ``R^3 x S^1`` with ``H0 = E (1 + U(x))``, ``E = sqrt(p^2 + m^2)``.

    State layout: ``(x1, x2, x3, p1, p2, p3, s, m, tau)``; ``m`` is the momentum
    conjugate to the circle coordinate ``s`` and ``tau`` accumulates ``|ds|``.
    """

    model_id = 'cylinder'
    dim = 9
    labels = ('x1', 'x2', 'x3', 'p1', 'p2', 'p3', 's', 'm', 'tau')

    def __init__(self, potential=free_space, floor=SURFACE_FLOOR):
        self.potential = potential
        self.guard_floor = floor

    def lapse(self, x):
        return 1.0 + self.potential(x[:3])[0]

    def singular_guard(self, state):
        return self.lapse(state)

    def energy(self, state):
        return float(np.sqrt(np.dot(state[3:6], state[3:6]) + state[7] ** 2))

    def hamiltonian(self, state):
        return self.energy(state) * self.lapse(state)

    def field(self, state, t=0.0):
        return cylinder_eom(state, self.potential, self.guard_floor)

    def unit_speed_defect(self, state):
        """``|x'|^2 + s'^2 - (1 + U)^2``."""
        rate = self.field(state)
        return float(np.dot(rate[:3], rate[:3]) + rate[6] ** 2 - self.lapse(state) ** 2)

    def trajectory(self, state, t_end, tol=1e-11, max_step=None):
        return integrate(self, state, 0.0, t_end, tol=tol, max_step=max_step)


def cylinder_eom(state, potential=free_space, floor=SURFACE_FLOOR):
    """
    Canonical equations of ``H0 = E (1 + U)`` plus ``tau' = |s'|``.

    Raises:
        SurfaceReached: ``1 + U`` is below ``floor``
    """
    state = np.asarray(state, dtype=float)
    x, p, m = state[:3], state[3:6], state[7]
    value, grad = potential(x)
    lapse = 1.0 + value
    if lapse < floor:
        raise SurfaceReached(f"1 + U = {lapse:.3g} below {floor:g}", x=x.tolist())
    energy = np.sqrt(np.dot(p, p) + m * m)
    out = np.zeros(9)
    if energy > 0:
        out[:3] = p / energy * lapse
        out[6] = m / energy * lapse
    out[3:6] = -energy * grad
    out[8] = abs(out[6])
    return out


class BoostedParticle:
    """
    Free relativistic particle relaxing to ``p = b``, seen from a frame moving
    with velocity ``v``: ``p' = -gamma kappa (p - b) + kappa gamma v (H(p) - E)``,
    ``q' = H_p``, where ``gamma = (1 - v^2)^(-1/2)`` and ``E = H(b)``.
    """

    model_id = 'boosted_particle'
    dim = 2
    labels = ('p', 'q')
    guard_floor = 0.0

    def __init__(self, kappa, m=1.0, b=0.0, v=0.0):
        if not kappa > 0:
            raise ConfigInvalid(f"kappa must be positive, got {kappa}", path='kappa')
        if not abs(v) < 1:
            raise ConfigInvalid(f"frame velocity must be below 1, got {v}", path='params.v')
        self.kappa = float(kappa)
        self.m = float(m)
        self.b = float(b)
        self.gamma = 1.0 / np.sqrt(1 - v * v)
        self.beta = self.gamma * v
        self.rest_energy = float(np.hypot(self.m, self.b))

    def hamiltonian(self, p):
        return float(np.hypot(self.m, p))

    def singular_guard(self, x):
        return 1.0

    def field(self, x, t=0.0):
        return boosted_cd_eom(x, self)

    def decay_rate(self):
        """Linear rate of ``p - b``: ``kappa (gamma - beta b / E)``."""
        return self.kappa * (self.gamma - self.beta * self.b / self.rest_energy)


def boosted_cd_eom(state, params):
    """
    ``p' = -H_q - gamma kappa (p - S_q) + kappa beta (H + S_t)``, ``q' = H_p`` with
    ``S = b q - E t``; on ``p = b`` only the Hamiltonian part survives.
    """
    p, _ = state
    energy = params.hamiltonian(p)
    dp = -params.gamma * params.kappa * (p - params.b) + params.kappa * params.beta * (energy - params.rest_energy)
    dq = p / energy if energy > 0 else float(np.sign(p))
    return np.array([dp, dq])
