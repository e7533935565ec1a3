"""
Massless particle of the Euclidean coherent-state model.

Lie solutions along the shift subgroup move the packet centre with a constant
velocity ``v`` that depends only on ``rho = a kappa`` (units with c = 1),
through ``1 = v (1 + Phi(v / rho))``. Behind the packet the vacuum component
forms a tail of length ``v / eps``.
"""
import logging
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.optimize import brentq
from scipy.special import erfcx, wofz

from ..exceptions import ConfigInvalid, QuadratureDiverges
from ..integrator import Trajectory

logger = logging.getLogger(__name__)


def _laplace_gauss(x, weight_t=False):
    def integrand(t):
        value = np.exp(-x * x * t * t - t)
        return t * value if weight_t else value
    # the integrand lives on a scale min(1, 1/x)
    cut = 50.0 / (1.0 + x)
    head = quad(integrand, 0, cut, limit=200, epsabs=0.0, epsrel=1e-13)[0]
    return head + quad(integrand, cut, np.inf, limit=200)[0]


def particle_phi(x):
    """``Phi(x) = int t exp(-x^2 t^2 - t) dt / int exp(-x^2 t^2 - t) dt`` over the half line."""
    if x < 0:
        raise ValueError(f"Phi is defined for x >= 0, got {x}")
    if x == 0:
        return 1.0
    return _laplace_gauss(x, weight_t=True) / _laplace_gauss(x)


def particle_phi_closed(x):
    """Closed form ``(1 - D) / (2 x^2 D)`` with ``D = (sqrt(pi) / 2x) erfcx(1 / 2x)``."""
    if x == 0:
        return 1.0
    d = np.sqrt(np.pi) / (2 * x) * erfcx(1 / (2 * x))
    return float((1 - d) / (2 * x * x * d))


def particle_velocity(rho):
    """Root of ``v (1 + Phi(v / rho)) = 1`` on ``(0, 1)``; ``v -> 1`` as ``rho -> 0`` and ``v -> 1/2`` as ``rho -> inf``."""
    if not rho > 0:
        raise ConfigInvalid(f"rho must be positive, got {rho}", path='params.rho')
    return float(brentq(lambda v: v * (1 + particle_phi(v / rho)) - 1, 1e-12, 1.0, xtol=1e-15, rtol=1e-14))


def velocity_small_rho(rho):
    """Leading small-``rho`` law ``v = 1 - rho / sqrt(pi)`` implied by ``Phi(x) ~ 1 / (x sqrt(pi))``."""
    return 1 - rho / np.sqrt(np.pi)


def particle_mu(omega, v):
    """Frequency law ``mu v^2 = omega``."""
    return omega / v ** 2


def particle_resolvent(p, v, a, omega, epsilon):
    """Closed form of ``-i int exp{-v^2 t^2 / 4a^2 - eps t + i (p v - omega) t} dt``."""
    alpha = v * v / (4 * a * a)
    beta = epsilon - 1j * (p * v - omega)
    return complex(-0.5j * np.sqrt(np.pi / alpha) * wofz(1j * beta / (2 * np.sqrt(alpha))))


def resolvent_kernel(p, v, a):
    def kernel(t):
        return np.exp(-v * v * t * t / (4 * a * a) + 1j * p * v * t)
    return kernel


@dataclass
class ParticleParams:
    rho: float
    kappa: float
    omega: float = 1.0
    q3: float = 0.0

    def __post_init__(self):
        if not self.rho > 0:
            raise ConfigInvalid(f"rho must be positive, got {self.rho}", path='params.rho')
        if not self.kappa > 0:
            raise ConfigInvalid(f"kappa must be positive, got {self.kappa}", path='kappa')

    @property
    def epsilon(self):
        return self.kappa / 2

    @property
    def a(self):
        return self.rho / self.kappa

    @property
    def velocity(self):
        return particle_velocity(self.rho)

    @property
    def mu(self):
        return particle_mu(self.omega, self.velocity)

    @property
    def p3(self):
        return self.mu * self.velocity

    @property
    def tail_length(self):
        return self.velocity / self.epsilon


def _tail_factor(xi, v, a, epsilon):
    peak = max(-xi / v, 0.0)
    width = a / v

    def integrand(t):
        return np.exp(-(xi + v * t) ** 2 / (2 * a * a) - epsilon * t)

    upper = peak + 40 * width
    pieces = [(0.0, peak), (peak, upper)] if peak > 0 else [(0.0, upper)]
    total = 0.0
    try:
        with warnings.catch_warnings():
            warnings.simplefilter('error', IntegrationWarning)
            for lo, hi in pieces:
                total += quad(integrand, lo, hi, limit=400, epsabs=0.0, epsrel=1e-12)[0]
            total += quad(integrand, upper, np.inf, limit=200, epsabs=1e-14 * abs(total), epsrel=1e-10)[0]
    except IntegrationWarning as exc:
        raise QuadratureDiverges(f"Wave-tail quadrature failed at xi={xi:g}: {exc}", xi=xi)
    if not np.isfinite(total):
        raise QuadratureDiverges(f"Wave-tail quadrature is not finite at xi={xi:g}", xi=xi)
    return total


def particle_wavetail(x3, params):
    """
    Longitudinal profile ``e^{i p3 x3} int_0^inf exp{-(x3 - q3 + v t)^2 / 2a^2 - eps t} dt``.

    Args:
        x3 (float or array): longitudinal positions
        params (ParticleParams): packet parameters

    Returns:
        complex or ndarray: the profile at ``x3``

    Raises:
        QuadratureDiverges: the quadrature did not reach its tolerance
    """
    v, a, eps = params.velocity, params.a, params.epsilon
    x3 = np.asarray(x3, dtype=float)
    factors = np.array([_tail_factor(x - params.q3, v, a, eps) for x in np.ravel(x3)])
    profile = np.exp(1j * params.p3 * np.ravel(x3)) * factors
    return complex(profile[0]) if x3.ndim == 0 else profile.reshape(x3.shape)


def simulate_tail(params, t_end=None, cells_per_width=10):
    """
    Evolve the longitudinal profile ``G(xi)`` in the frame of the packet,
    ``G_t = v G_xi - eps G + eps exp(-xi^2 / 2a^2)``, by first-order upwinding
    from ``G = 0``.

    The grid spans ``[-20 L, 10 a]`` with ``L = max(a, v / eps)``; the front
    edge is an inflow boundary with ``G = 0``, the rear edge is absorbing.

    Returns:
        tuple: (grid, profile at ``t_end``); the steady profile is ``eps`` times the wave-tail factor
    """
    v, a, eps = params.velocity, params.a, params.epsilon
    extent = max(a, v / eps)
    h = a / cells_per_width
    grid = np.arange(-20 * extent, 10 * a + h / 2, h)
    source = eps * np.exp(-grid ** 2 / (2 * a * a))
    t_end = (20 * extent) / v + 10 / eps if t_end is None else float(t_end)
    dt = 0.5 * h / v
    steps = int(np.ceil(t_end / dt))
    dt = t_end / steps
    G = np.zeros_like(grid)
    for _ in range(steps):
        ahead = np.append(G[1:], 0.0)
        G = G + dt * (v * (ahead - G) / h - eps * G + source)
    logger.debug(f"Tail simulation: {grid.size} cells, {steps} steps to t={t_end:g}")
    return grid, G


def e_folding_length(grid, profile, distance):
    """Length over which ``|profile|`` drops by ``e`` between ``-distance`` and ``-2 distance`` behind the packet."""
    near = abs(np.interp(-distance, grid, np.abs(profile)))
    far = abs(np.interp(-2 * distance, grid, np.abs(profile)))
    return distance / np.log(near / far)


class ParticleLieSolution:
    """
    Lie solution ``z(t) = z + v t``, ``F(t, x) = e^{i omega t} F(x - v t)`` of the shift subgroup.

    Sampled states are ``(q3, Re o, Im o)`` where ``o`` is the overlap of the
    coherent state at ``z(t)`` with ``F(t)``; its argument is the action phase.
    """

    model_id = 'particle'
    phase_period = 2 * np.pi
    labels = ('q3', 'overlap_re', 'overlap_im')

    def __init__(self, params):
        self.params = params
        self.velocity = params.velocity
        self.mu = params.mu
        self.p3 = params.p3
        # p v = omega, so the resolvent is evaluated on the mass shell
        self.overlap0 = particle_resolvent(self.p3, self.velocity, params.a, params.omega, params.epsilon)

    def state(self, t):
        overlap = np.exp(1j * self.params.omega * t) * self.overlap0
        return np.array([self.params.q3 + self.velocity * t, overlap.real, overlap.imag])

    def trajectory(self, times):
        times = np.asarray(times, dtype=float)
        return Trajectory(times, np.array([self.state(t) for t in times]))

    def phase(self, x, t=0.0):
        return float(np.mod(np.angle(x[1] + 1j * x[2]), self.phase_period))

    def residuals(self):
        """Mass-shell ``p v - omega`` and the velocity equation ``v (1 + Phi(v / rho)) - 1``."""
        v = self.velocity
        return np.array([self.p3 * v - self.params.omega, v * (1 + particle_phi(v / self.params.rho)) - 1])
