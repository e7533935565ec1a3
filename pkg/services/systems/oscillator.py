"""
Harmonic oscillator in the coherent-state representation.

The state is a point ``z`` of the complex plane together with the Fock
coefficients ``F_0 .. F_Nmax`` of a vector; ``F(z) = sum F_k z^k / sqrt(k!)``.
The potential is ``U = |F|^2 + |z|^2 - log|F(z)|^2`` and ``H = omega0 |z|^2``.

Its Lie solutions rotate ``z`` at rate ``xi``. With ``p = |z|^2`` and
``q = eps / xi`` the spectral equations reduce to a single complex equation on
``g(p, q) = sum_n pi_n(p) / (q + i (p - n))``, ``pi_n`` the Poisson weights.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.stats import poisson

from ..cdcore import KahlerSystem
from ..conf import guard_floor
from ..exceptions import ConfigInvalid, LeftDomain, NoRoot, NoSuchLevel, SingularPoint, TailOverflow
from ..lie import GeneratorSpec, LieCandidate, LieModel, SpectralData, newton_solve

logger = logging.getLogger(__name__)

DEFAULT_NMAX = 64
DEFAULT_TAIL_TOL = 1e-8
SERIES = ('stable', 'unstable')


def coherent_basis(z, size):
    """``e_k(z) = z^k / sqrt(k!)`` for ``k < size``."""
    e = np.empty(size, dtype=complex)
    e[0] = 1.0
    for k in range(1, size):
        e[k] = e[k - 1] * z / np.sqrt(k)
    return e


def coherent_state(z, nmax):
    """Unit Fock vector ``F_k = e^{-|z|^2/2} conj(z)^k / sqrt(k!)``, the maximiser of ``|F(z)|`` at fixed norm."""
    return np.exp(-abs(z) ** 2 / 2) * np.conj(coherent_basis(z, nmax + 1))


def tail_fraction(F):
    F = np.asarray(F, dtype=complex)
    return float(abs(F[-1]) ** 2 / np.vdot(F, F).real)


def cs_eom(z, F, omega0, epsilon, floor=None, tail_tol=DEFAULT_TAIL_TOL):
    """
    ``z' = (i omega0 - eps) z + eps conj(F'(z) / F(z))``,
    ``F_k' = -eps F_k + eps conj(z)^k / (sqrt(k!) conj(F(z)))``.

    Raises:
        SingularPoint: ``|F(z)|`` below the guard floor
        TailOverflow: the last Fock coefficient carries more than ``tail_tol`` of the norm
    """
    F = np.asarray(F, dtype=complex)
    floor = guard_floor() if floor is None else floor
    e = coherent_basis(z, F.size)
    value = F @ e
    if abs(value) < floor:
        raise SingularPoint(f"|F(z)| = {abs(value):.3g} below floor {floor:.3g}")
    fraction = tail_fraction(F)
    if fraction > tail_tol:
        raise TailOverflow(f"Fock tail fraction {fraction:.3g} exceeds {tail_tol:.3g}", nmax=F.size - 1)
    deriv = (F[1:] * np.sqrt(np.arange(1, F.size))) @ e[:-1]
    dz = (1j * omega0 - epsilon) * z + epsilon * np.conj(deriv / value)
    dF = -epsilon * F + epsilon * np.conj(e) / np.conj(value)
    return dz, dF


def _poisson_weights(p, cut=1e-16):
    kmax = int(p + 20 * np.sqrt(p) + 40)
    k = np.arange(kmax + 1)
    weights = poisson.pmf(k, p) if p > 0 else (k == 0).astype(float)
    keep = weights >= cut * weights.max()
    return k[keep], weights[keep]


def g_function(p, q, method='series'):
    """
    ``g(p, q)`` by its Poisson series or by the periodic integral
    ``int_0^{2 pi} exp{p (e^{it} - 1 - it) - q t} dt / (1 - e^{-2 pi (q + i p)})``.
    """
    if p < 0 or not q > 0:
        raise ValueError(f"g needs p >= 0 and q > 0, got p={p}, q={q}")
    if method == 'series':
        k, weights = _poisson_weights(p)
        return complex(np.sum(weights / (q + 1j * (p - k))))
    if method == 'integral':
        def integrand(t):
            return np.exp(p * (np.exp(1j * t) - 1 - 1j * t) - q * t)

        options = {'limit': 400, 'epsabs': 1e-15, 'epsrel': 1e-13}
        re, _ = quad(lambda t: integrand(t).real, 0, 2 * np.pi, **options)
        im, _ = quad(lambda t: integrand(t).imag, 0, 2 * np.pi, **options)
        return complex((re + 1j * im) / (1 - np.exp(-2 * np.pi * (q + 1j * p))))
    raise ValueError(f"Unknown method for g: {method}")


def g_asymptotic(p, q):
    """Saddle-point form of ``g`` for large ``p``; used for seeding and cross-checks only."""
    s = q + 1j * p
    coth = 1 / np.tanh(np.pi * s)
    return complex(np.sqrt(np.pi / (2 * p)) * (1 + (q ** 2 - 1 / 6 + 1j * q / 3) / p) * coth - q / p)


def existence_bound(mu):
    """Smallest level ``N(mu) = sh(2 pi / mu) / 3 mu`` that carries a non-spectral root."""
    with np.errstate(over='ignore'):
        return float(np.sinh(2 * np.pi / mu) / (3 * mu))


def root_seed(n, mu, series='stable'):
    """Large-``mu`` asymptotics of the two root series at level ``n``."""
    if series not in SERIES:
        raise ValueError(f"Unknown root series: {series}")
    if n < 1:
        raise NoSuchLevel(f"Root series start at n = 1, got {n}", level=n)
    if series == 'stable':
        return float(n), 1 / mu + np.sqrt(2 / (np.pi * n)) * np.tanh(np.pi / mu) / mu ** 2
    return n + 0.5, 1 / mu + np.sqrt(2 / (np.pi * n)) / np.tanh(np.pi / mu) / mu ** 2


def root_residual(p, q, mu, method='series'):
    g = g_function(p, q, method)
    return np.array([q ** 2 + mu * p * q - p - q / g.real, g.imag])


@dataclass
class OscillatorRoot:
    n: int
    mu: float
    series: str
    p: float
    q: float
    residual: float
    iterations: int = 0

    def frequency(self, epsilon):
        """Lie frequency ``omega = xi p`` with ``xi = eps / q``."""
        return epsilon * self.p / self.q

    def rate(self, epsilon):
        return epsilon / self.q

    def to_dict(self):
        return {'n': self.n, 'mu': self.mu, 'series': self.series, 'p': self.p, 'q': self.q,
                'residual': self.residual, 'iterations': self.iterations}


def oscillator_root(n, mu, series='stable', tol=1e-12, max_iter=60):
    """
    Solve the real pair ``q^2 + mu p q - p - q / Re g = 0``, ``Im g = 0`` from the asymptotic seed.

    ``n = 0`` is the ground state ``p = 0``, a solution for every ``q``; it is reported with ``q = 1/mu``.

    Raises:
        NoRoot: ``n`` lies below the existence bound or Newton leaves ``p, q > 0``
        NoConvergence: Newton iteration failed to converge
    """
    if not mu > 0:
        raise ConfigInvalid(f"mu must be positive, got {mu}", path='params.mu')
    if n == 0:
        return OscillatorRoot(n=0, mu=mu, series=series, p=0.0, q=1 / mu, residual=0.0)
    bound = existence_bound(mu)
    if n < bound:
        raise NoRoot(f"Level {n} lies below the existence bound N({mu:g}) = {bound:.4g}", n=n, mu=mu)
    p0, q0 = root_seed(n, mu, series)
    try:
        x, residual, iterations = newton_solve(
            lambda v: root_residual(v[0], v[1], mu), np.array([p0, q0]), tol=tol, max_iter=max_iter,
            in_domain=lambda v: bool(v[0] > 0 and v[1] > 0))
    except LeftDomain as exc:
        raise NoRoot(f"No {series} root near level {n} for mu={mu:g}: {exc}", n=n, mu=mu)
    root = OscillatorRoot(n=n, mu=mu, series=series, p=float(x[0]), q=float(x[1]),
                          residual=float(np.linalg.norm(residual)), iterations=iterations)
    logger.debug(f"Oscillator root n={n} mu={mu:g} {series}: p={root.p:.12g} q={root.q:.12g}")
    return root


def low_freq_coefficients(omega0, epsilon):
    """Effective frequency ``omega0 / 2`` and damping ``omega0^2 / 8 eps`` for ``omega0 << eps``."""
    return omega0 / 2, omega0 ** 2 / (8 * epsilon)


class CsOscillator(KahlerSystem, LieModel):
    model_id = 'cs_oscillator'
    flat_metric = True
    default_params = {'omega0': 1.0, 'Nmax': DEFAULT_NMAX, 'tail_tol': DEFAULT_TAIL_TOL}

    def __init__(self, kappa, omega0=1.0, Nmax=DEFAULT_NMAX, tail_tol=DEFAULT_TAIL_TOL):
        if Nmax < 2:
            raise ConfigInvalid(f"Nmax must be at least 2, got {Nmax}", path='params.Nmax')
        self.nmax = int(Nmax)
        super().__init__(self.nmax + 2, kappa)
        self.omega0 = float(omega0)
        self.tail_tol = float(tail_tol)
        self.phase_period = 2 * np.pi

    @classmethod
    def from_params(cls, kappa, params):
        return cls(kappa=kappa, **params)

    @property
    def mu(self):
        return self.omega0 / self.epsilon

    def resized(self, nmax):
        return type(self)(self.kappa, self.omega0, nmax, self.tail_tol)

    def state_labels(self):
        labels = ['z_re', 'z_im']
        for k in range(self.nmax + 1):
            labels += [f"F{k}_re", f"F{k}_im"]
        return labels

    def split(self, w):
        w = np.asarray(w, dtype=complex)
        return w[0], w[1:]

    def join(self, z, F):
        return self.to_real(np.concatenate([[z], F]))

    def initial_state(self, z0):
        """Coherent state at ``z0``: a point of the minimum set of ``U``."""
        return self.join(z0, coherent_state(z0, self.nmax))

    def _value(self, z, F):
        e = coherent_basis(z, F.size)
        return F @ e, e

    def potential(self, w):
        z, F = self.split(w)
        value, _ = self._value(z, F)
        return float(np.vdot(F, F).real + abs(z) ** 2 - np.log(abs(value) ** 2))

    def potential_dzbar(self, w):
        z, F = self.split(w)
        value, e = self._value(z, F)
        deriv = (F[1:] * np.sqrt(np.arange(1, F.size))) @ e[:-1]
        return np.concatenate([[z - np.conj(deriv) / np.conj(value)], F - np.conj(e) / np.conj(value)])

    def hamiltonian(self, w):
        z, _ = self.split(w)
        return float(self.omega0 * abs(z) ** 2)

    def hamiltonian_dzbar(self, w):
        z, F = self.split(w)
        return np.concatenate([[self.omega0 * z], np.zeros(F.size, dtype=complex)])

    def field(self, x, t=0.0):
        z, F = self.split(self.to_complex(x))
        dz, dF = cs_eom(z, F, self.omega0, self.epsilon, self.guard_floor, self.tail_tol)
        return self.join(dz, dF)

    def singular_guard(self, x):
        z, F = self.split(self.to_complex(x))
        return float(abs(self._value(z, F)[0]))

    def quasi_integrals(self):
        levels = np.arange(self.nmax + 1)

        def norm(x, t=0.0):
            _, F = self.split(self.to_complex(x))
            return float(np.vdot(F, F).real - 1.0)

        def number(x, t=0.0):
            z, F = self.split(self.to_complex(x))
            return float(abs(z) ** 2 - levels @ np.abs(F) ** 2)

        return {'Q1': norm, 'Q2': number}

    def physical_hamiltonian(self, x, t=0.0):
        return self.hamiltonian(self.to_complex(x))

    def phase(self, x, t=0.0):
        z, F = self.split(self.to_complex(x))
        return float(np.mod(np.angle(self._value(z, F)[0]), self.phase_period))

    def action_form(self, x):
        """Loops are taken in the oscillator coordinate ``z`` only."""
        form = np.zeros(self.dim)
        form[0], form[1] = -x[1], x[0]
        return form

    def loop_distance(self, x, y):
        return float(np.hypot(x[0] - y[0], x[1] - y[1]))

    def random_state(self, rng):
        decay = 0.5 ** np.arange(self.nmax + 1)
        for _ in range(100):
            z = rng.standard_normal() + 1j * rng.standard_normal()
            F = (rng.standard_normal(self.nmax + 1) + 1j * rng.standard_normal(self.nmax + 1)) * decay
            F /= np.linalg.norm(F)
            x = self.join(z, F)
            if self.singular_guard(x) > 10 * self.guard_floor:
                return x
        raise SingularPoint(f"Could not draw a nonsingular state for {self.model_id}")

    # Lie solutions: z = sqrt(p) (real gauge), xi the rotation rate

    def spectral_data(self, z, xi):
        z = complex(np.ravel(z)[0])
        k, weights = _poisson_weights(abs(z) ** 2)
        previous = np.concatenate([[0.0], weights[:-1]])
        if k.size and k[0] > 0:
            previous[0] = poisson.pmf(k[0] - 1, abs(z) ** 2)
        derivs = (np.conj(z) * (previous - weights))[:, None]
        return SpectralData(k * xi.rate, weights / weights.sum(), derivs)

    def lie_hamiltonian(self, z):
        return float(self.omega0 * abs(complex(np.ravel(z)[0])) ** 2)

    def lie_hamiltonian_dz(self, z):
        return np.conj(np.atleast_1d(np.asarray(z, dtype=complex))) * self.omega0

    def momentum(self, z, xi):
        return float(xi.rate * abs(complex(np.ravel(z)[0])) ** 2)

    def momentum_dz(self, z, xi):
        return np.conj(np.atleast_1d(np.asarray(z, dtype=complex))) * xi.rate

    def pack(self, candidate, gauge=None):
        z = complex(np.ravel(candidate.z)[0])
        return np.array([abs(z) ** 2, candidate.xi.rate, candidate.omega])

    def unpack(self, u, gauge=None):
        z = np.array([np.sqrt(max(u[0], 0.0)) + 0j])
        return z, GeneratorSpec('u1_rotation', (u[1],)), float(u[2])

    def in_domain(self, u):
        return bool(np.all(np.isfinite(u)) and u[0] > 0 and u[1] > 0)

    def level_gap(self, xi):
        return abs(xi.rate)

    def spectral_seed(self, n, series='stable', **params):
        p, q = root_seed(n, self.mu, series)
        xi = self.epsilon / q
        return LieCandidate(z=np.array([np.sqrt(p) + 0j]), xi=GeneratorSpec('u1_rotation', (xi,)),
                            omega=xi * p, level=n, extra={'series': series})

    def candidate_from_root(self, root):
        xi = root.rate(self.epsilon)
        return LieCandidate(z=np.array([np.sqrt(root.p) + 0j]), xi=GeneratorSpec('u1_rotation', (xi,)),
                            omega=root.frequency(self.epsilon), residual=root.residual,
                            classification='non_spectral', epsilon=self.epsilon, level=root.n,
                            extra={'series': root.series})

    def reconstruct_state(self, candidate):
        z = complex(np.ravel(candidate.z)[0])
        xi, omega = candidate.xi.rate, candidate.omega
        eps = candidate.epsilon if candidate.epsilon is not None else self.epsilon
        levels = np.arange(self.nmax + 1)
        weights = np.abs(coherent_basis(z, self.nmax + 1)) ** 2
        resolvent = np.sum(weights / (levels * xi - omega + 1j * eps))
        # gauge F(z) real and positive
        value = np.sqrt(-eps * resolvent.imag)
        F = eps * np.conj(coherent_basis(z, self.nmax + 1)) / (value * (eps + 1j * (omega - levels * xi)))
        return self.join(z, F)

    def generator_field(self, candidate):
        xi, omega = candidate.xi.rate, candidate.omega
        levels = np.arange(self.nmax + 1)

        def field(x):
            z, F = self.split(self.to_complex(x))
            return self.join(1j * xi * z, 1j * (omega - levels * xi) * F)
        return field
