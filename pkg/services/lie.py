"""
Lie solutions of coherent-state models.

A Lie solution is a steady auto-oscillation ``z(t) = exp(t xi) z``,
``F(t) = exp(i omega t) T(exp(t xi)) F``. Eliminating ``F`` leaves a finite
system on ``(z, xi, omega)`` built from the resolvent symbol

    R(z, xi, omega - i eps) = sum_j rho_j(z) / (omega_j(xi) - omega + i eps)

which is what this module evaluates and solves.
"""
import abc
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from . import numdiff
from .exceptions import (CdLabError, ConfigInvalid, DegenerateLevel, LeftDomain, NoConvergence, QuadratureDiverges,
                         ResolventZero, SingularJacobian)

logger = logging.getLogger(__name__)

GENERATOR_KINDS = ('u1_rotation', 'translation', 'euclidean', 'diagonal')


@dataclass
class GeneratorSpec:
    """Element of the symmetry algebra that drives a Lie solution."""

    kind: str
    payload: tuple

    def __post_init__(self):
        if self.kind not in GENERATOR_KINDS:
            raise ConfigInvalid(f"Unknown generator kind: {self.kind}", path='xi.kind')
        self.payload = tuple(float(v) for v in np.ravel(self.payload))
        if not np.all(np.isfinite(self.payload)):
            raise ConfigInvalid(f"Generator payload must be finite: {self.payload}", path='xi.payload')

    @property
    def rate(self):
        return self.payload[0]

    def to_dict(self):
        return {'kind': self.kind, 'payload': list(self.payload)}


@dataclass
class SpectralData:
    """
    Eigenvalues of the generator operator with the coherent-state weights at a point.

    ``weight_derivatives[j, k]`` is the holomorphic derivative of ``rho_j`` with
    respect to ``z_k``; it may be omitted when only the resolvent value is needed.
    """

    levels: np.ndarray
    weights: np.ndarray
    weight_derivatives: np.ndarray = None

    def __post_init__(self):
        self.levels = np.asarray(self.levels, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        order = np.argsort(self.levels, kind='stable')
        self.levels = self.levels[order]
        self.weights = self.weights[order]
        if self.weight_derivatives is not None:
            self.weight_derivatives = np.asarray(self.weight_derivatives, dtype=complex)[order]
        if np.any(self.weights < -1e-15):
            raise ConfigInvalid("Spectral weights must be nonnegative", path='weights')
        if abs(self.weights.sum() - 1.0) > 1e-12:
            raise ConfigInvalid(f"Spectral weights sum to {self.weights.sum():.15g}, expected 1", path='weights')


@dataclass
class LieCandidate:
    z: np.ndarray
    xi: GeneratorSpec
    omega: float
    residual: float = np.inf
    classification: str = 'unknown'
    epsilon: float = None
    level: int = None
    iterations: int = 0
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        z = np.atleast_1d(np.asarray(self.z, dtype=complex))
        return {
            'z': [[float(v.real), float(v.imag)] for v in z],
            'xi': self.xi.to_dict(),
            'omega': float(self.omega),
            'residual': float(self.residual),
            'classification': self.classification,
            'epsilon': self.epsilon,
            'level': self.level,
            'iterations': self.iterations,
            'extra': self.extra,
        }

    @classmethod
    def from_dict(cls, data):
        z = np.array([complex(re, im) for re, im in data['z']])
        return cls(z=z, xi=GeneratorSpec(data['xi']['kind'], tuple(data['xi']['payload'])),
                   omega=data['omega'], residual=data['residual'],
                   classification=data['classification'], epsilon=data['epsilon'],
                   level=data['level'], iterations=data['iterations'], extra=data.get('extra', {}))


class LieModel(abc.ABC):
    """
    What a model must expose to have its Lie solutions searched.

    ``z`` is always a complex vector (length ``lie_dim``); the unknown vector
    ``u`` handed to the Newton solver is real and already gauge fixed.
    """

    lie_dim = 1

    @abc.abstractmethod
    def spectral_data(self, z, xi):
        """SpectralData of the generator operator at the point ``z``."""

    @abc.abstractmethod
    def lie_hamiltonian(self, z):
        pass

    @abc.abstractmethod
    def lie_hamiltonian_dz(self, z):
        pass

    @abc.abstractmethod
    def momentum(self, z, xi):
        """Momentum ``A(z, xi)`` of the symmetry action."""

    @abc.abstractmethod
    def momentum_dz(self, z, xi):
        pass

    @abc.abstractmethod
    def pack(self, candidate, gauge=None):
        pass

    @abc.abstractmethod
    def unpack(self, u, gauge=None):
        """Gauge-fixed real unknowns back to ``(z, xi, omega)``."""

    def gauge_for(self, candidate):
        """Gauge data fixed once per solve from the seed; ``None`` when the model needs none."""
        return None

    @abc.abstractmethod
    def spectral_seed(self, n, **params):
        pass

    @abc.abstractmethod
    def reconstruct_state(self, candidate):
        """Full phase-space state (real vector) of the Lie solution at t = 0."""

    @abc.abstractmethod
    def generator_field(self, candidate):
        """Linear vector field of the one-parameter group carrying the Lie solution."""

    def in_domain(self, u):
        return bool(np.all(np.isfinite(u)))

    def level_gap(self, xi):
        sd = self.spectral_data(np.ones(self.lie_dim, dtype=complex), xi)
        gaps = np.diff(sd.levels)
        gaps = gaps[gaps > 1e-12]
        return float(gaps.min()) if gaps.size else 1.0

    def orbit_period(self, candidate):
        return 2 * np.pi / max(abs(candidate.omega), abs(candidate.xi.rate), 1e-12)


def resolvent_discrete(sd, omega, epsilon):
    """``sum_j rho_j / (omega_j - omega + i eps)``; its imaginary part lies in ``[-1/eps, 0)``."""
    if not epsilon > 0:
        raise ConfigInvalid(f"epsilon must be positive, got {epsilon}", path='epsilon')
    return complex(np.sum(sd.weights / (sd.levels - omega + 1j * epsilon)))


def resolvent_integral(kernel, omega, epsilon, rel_tol=1e-10, t_max=None):
    """
    Integral representation ``-i int_0^inf exp(-(i omega + eps) t) kernel(t) dt``.

    The half line is cut into chunks integrated with adaptive quadrature until
    the exponential envelope has decayed below ``rel_tol`` of the running value.

    Args:
        kernel (callable): complex kernel ``t -> B(e^{t xi} s, conj(s)) / B(s, conj(s))``
        omega (float): frequency
        epsilon (float): damping, must be positive
        rel_tol (float): relative accuracy of the result
        t_max (float): truncation budget, defaults to ``60 / eps``

    Returns:
        complex: the resolvent symbol

    Raises:
        QuadratureDiverges: the integrand has not decayed within ``t_max``
    """
    if not epsilon > 0:
        raise ConfigInvalid(f"epsilon must be positive, got {epsilon}", path='epsilon')
    t_max = 60.0 / epsilon if t_max is None else float(t_max)
    chunk = min(8 * np.pi / max(abs(omega), 1.0), 1.0 / epsilon)

    def integrand(t):
        return np.exp(-(1j * omega + epsilon) * t) * kernel(t)

    total = 0.0 + 0.0j
    a = 0.0
    while a < t_max:
        b = a + chunk
        re, _ = quad(lambda t: integrand(t).real, a, b, limit=200, epsabs=1e-15, epsrel=rel_tol * 1e-2)
        im, _ = quad(lambda t: integrand(t).imag, a, b, limit=200, epsabs=1e-15, epsrel=rel_tol * 1e-2)
        piece = re + 1j * im
        total += piece
        envelope = abs(integrand(b)) / epsilon
        if abs(piece) <= rel_tol * abs(total) * 1e-2 and envelope <= rel_tol * abs(total) * 1e-2:
            return -1j * total
        a = b
    logger.error(f"Resolvent quadrature did not converge by t={t_max:g} (omega={omega}, eps={epsilon})")
    raise QuadratureDiverges(f"Resolvent integrand not decaying within t_max={t_max:g}",
                             omega=omega, epsilon=epsilon)


def lie_residual(model, z, xi, omega, epsilon, form='momentum'):
    """
    Residual of the finite Lie equations.

    Components: ``Re R``; real and imaginary parts of
    ``d/dz_k (H - A + i eps log R)``; and ``A(z, xi) - omega`` when
    ``form == 'momentum'``.

    Raises:
        ResolventZero: ``R`` vanishes so ``log R`` is undefined
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    sd = model.spectral_data(z, xi)
    denom = sd.levels - omega + 1j * epsilon
    value = np.sum(sd.weights / denom)
    if not np.isfinite(value) or abs(value) < 1e-300:
        raise ResolventZero("Resolvent symbol vanishes", omega=omega)
    dvalue = np.sum(sd.weight_derivatives / denom[:, None], axis=0)
    grad = (np.asarray(model.lie_hamiltonian_dz(z), dtype=complex)
            - np.asarray(model.momentum_dz(z, xi), dtype=complex)
            + 1j * epsilon * dvalue / value)
    parts = [[value.real], grad.real, grad.imag]
    if form == 'momentum':
        parts.append([model.momentum(z, xi) - omega])
    return np.concatenate(parts)


def newton_solve(fun, x0, tol=1e-10, max_iter=60, rel_step=1e-7, in_domain=None, rank_tol=1e-11):
    """
    Damped Gauss-Newton iteration on a (possibly overdetermined) residual.

    Args:
        fun (callable): residual function of a real vector
        x0 (array-like): starting point
        tol (float): target residual norm
        max_iter (int): iteration cap
        rel_step (float): relative central-difference step of the Jacobian
        in_domain (callable): predicate rejecting trial points outside the model domain

    Returns:
        tuple: (solution, residual vector, iterations)

    Raises:
        NoConvergence: the iteration cap was reached or the line search stalled
        SingularJacobian: the Jacobian lost rank
        LeftDomain: every damped trial left the domain
    """
    x = np.array(x0, dtype=float)
    residual = np.asarray(fun(x), dtype=float)
    norm = np.linalg.norm(residual)
    for iteration in range(max_iter + 1):
        if norm < tol:
            return x, residual, iteration
        if iteration == max_iter:
            break
        jac = numdiff.jacobian(fun, x, rel_step)
        singular = np.linalg.svd(jac, compute_uv=False)
        if singular.size < x.size or singular[-1] <= rank_tol * singular[0]:
            raise SingularJacobian(f"Jacobian is rank deficient at iteration {iteration}",
                                   smallest=float(singular[-1]) if singular.size else 0.0)
        step = np.linalg.lstsq(jac, -residual, rcond=None)[0]

        damping = 1.0
        outside = 0
        accepted = False
        while damping > 1e-8:
            trial = x + damping * step
            if in_domain is not None and not in_domain(trial):
                outside += 1
                damping /= 2
                continue
            try:
                trial_residual = np.asarray(fun(trial), dtype=float)
            except CdLabError:
                damping /= 2
                continue
            trial_norm = np.linalg.norm(trial_residual)
            if np.isfinite(trial_norm) and trial_norm < (1 - 1e-4 * damping) * norm:
                x, residual, norm = trial, trial_residual, trial_norm
                accepted = True
                break
            damping /= 2
        if not accepted:
            if outside and in_domain is not None:
                raise LeftDomain(f"Newton steps leave the model domain at iteration {iteration}")
            raise NoConvergence(f"Line search stalled at residual {norm:.3e}", iteration=iteration)
    raise NoConvergence(f"No convergence after {max_iter} iterations (residual {norm:.3e})",
                        iteration=max_iter)


def classify(model, z, xi, omega, epsilon):
    """Spectral when ``omega`` lies within ``eps`` of an eigenvalue of the generator operator."""
    sd = model.spectral_data(z, xi)
    significant = sd.levels[sd.weights > 1e-12]
    if significant.size == 0:
        return 'unknown'
    return 'spectral' if np.min(np.abs(significant - omega)) <= epsilon else 'non_spectral'


def solve_lie(model, seed, epsilon, tol=1e-10, max_iter=60, continuation=False, eps_start=None,
              ratio=0.5):
    """
    Solve the Lie equations from a seed, optionally continuing in epsilon.

    With ``continuation`` the solve starts at ``eps_start`` (default 0.2 times
    the smallest level gap) and walks down geometrically by ``ratio`` to
    ``epsilon``, reusing every solution as the next seed.

    Returns:
        LieCandidate: converged candidate with ``omega = A(z, xi)``
    """
    schedule = [float(epsilon)]
    if continuation:
        start = eps_start if eps_start is not None else 0.2 * model.level_gap(seed.xi)
        schedule = []
        eps = float(start)
        while eps > epsilon:
            schedule.append(eps)
            eps *= ratio
        schedule.append(float(epsilon))

    gauge = model.gauge_for(seed)
    u = np.asarray(model.pack(seed, gauge), dtype=float)
    if not model.in_domain(u):
        raise LeftDomain("Seed lies outside the model domain")
    iterations = 0
    residual = None
    for eps in schedule:
        def fun(v, eps=eps):
            z, xi, omega = model.unpack(v, gauge)
            return lie_residual(model, z, xi, omega, eps)

        u, residual, used = newton_solve(fun, u, tol=tol, max_iter=max_iter, in_domain=model.in_domain)
        iterations += used
        logger.debug(f"Lie solve at eps={eps:.3g}: residual {np.linalg.norm(residual):.3e} after {used} iterations")

    z, xi, _ = model.unpack(u, gauge)
    omega = float(model.momentum(z, xi))
    candidate = LieCandidate(z=z, xi=xi, omega=omega, residual=float(np.linalg.norm(residual)),
                             epsilon=float(epsilon), level=seed.level, iterations=iterations,
                             extra=dict(seed.extra))
    candidate.classification = classify(model, z, xi, omega, epsilon)
    logger.info(f"Lie candidate converged: omega={omega:.10g}, residual={candidate.residual:.3e}, "
                f"{candidate.classification}")
    return candidate


def deviation_second_order(n, epsilon, sd):
    """
    Leading shift of the frequency away from the eigenvalue ``omega_n``:
    ``eps^2 * sum_{j != n} (rho_j / rho_n) / (omega_j - omega_n)``.

    ``n`` indexes ``sd.levels`` (ascending order).
    """
    levels, weights = sd.levels, sd.weights
    if not weights[n] > 0:
        raise DegenerateLevel(f"Level {n} carries no weight")
    others = np.arange(levels.size) != n
    gaps = levels[others] - levels[n]
    if np.any(np.abs(gaps) < 1e-14 * max(1.0, abs(levels[n]))):
        raise DegenerateLevel(f"Level {n} is degenerate")
    return float(epsilon ** 2 * np.sum(weights[others] / weights[n] / gaps))


def spectral_seed(model, n, **params):
    return model.spectral_seed(n, **params)


def reconstruct_state(model, candidate):
    return model.reconstruct_state(candidate)


def rotating_frame_jacobian(model, candidate, rel=1e-6):
    """
    Jacobian of ``V - G`` at the Lie solution, where ``G`` generates the
    one-parameter group carrying it. In that frame the solution is a fixed point.
    """
    state = model.reconstruct_state(candidate)
    generator = model.generator_field(candidate)
    return numdiff.jacobian(lambda x: model.field(x) - generator(x), state, rel)
