"""
Low-dimensional CD-systems with closed-form behaviour.

Canonical layouts store ``(q_1..q_n, p_1..p_n)``; the toy and nonautonomous
oscillators store ``(I, phi)`` so that their CSV columns read ``t, I, phi``.
"""
import numpy as np
from scipy.integrate import quad
from scipy.special import expit

from .. import numdiff
from ..cdcore import CdSystem, KahlerSystem, canonical_omega, hamilton_field, lie_bracket
from ..exceptions import ConfigInvalid, SingularPoint

HBAR = 1.0
TWO_PI = 2 * np.pi


class CanonicalSystem(CdSystem):
    """
    ``alpha = (p - h) dq + dH / kappa`` in canonical coordinates, so that
    ``q' = H_p`` and ``p' = -kappa (p - h) - H_q``.
    """

    default_params = {}

    def __init__(self, n, kappa, guard_floor_value=None):
        super().__init__(2 * n, kappa, guard_floor_value=guard_floor_value)
        self.n = int(n)
        self._omega_matrix = canonical_omega(self.n)

    @classmethod
    def from_params(cls, kappa, params):
        return cls(kappa=kappa, **params)

    def shift(self, t=0.0):
        return np.zeros(self.n)

    def hamiltonian(self, x, t=0.0):
        raise NotImplementedError

    def hamiltonian_grad(self, x, t=0.0):
        return numdiff.gradient(lambda y: self.hamiltonian(y, t), x)

    def alpha(self, x, t=0.0):
        x = np.asarray(x, dtype=float)
        form = np.zeros(self.dim)
        form[:self.n] = x[self.n:] - self.shift(t)
        return form + self.hamiltonian_grad(x, t) / self.kappa

    def omega(self, x, t=0.0):
        return self._omega_matrix

    def field(self, x, t=0.0):
        x = np.asarray(x, dtype=float)
        guard = self.singular_guard(x)
        if guard < self.guard_floor:
            raise SingularPoint(f"{self.model_id}: singular guard {guard:.3g} below floor")
        grad = self.hamiltonian_grad(x, t)
        out = np.empty(self.dim)
        out[:self.n] = grad[self.n:]
        out[self.n:] = -self.kappa * (x[self.n:] - self.shift(t)) - grad[:self.n]
        return out

    def physical_hamiltonian(self, x, t=0.0):
        return float(self.hamiltonian(x, t))

    def physical_flow(self, x, t):
        """Flow of the physical Hamiltonian, when it is known in closed form."""
        return None


class EulerSystem(CanonicalSystem):
    """``alpha = p dq``: the field is ``-kappa p d/dp``."""

    model_id = 'euler'
    labels = ('q', 'p')

    def __init__(self, kappa):
        super().__init__(1, kappa)

    def hamiltonian(self, x, t=0.0):
        return 0.0

    def hamiltonian_grad(self, x, t=0.0):
        return np.zeros(2)

    def quasi_integrals(self):
        return {'p': lambda x, t=0.0: x[1]}

    def physical_flow(self, x, t):
        return np.array(x, dtype=float)


class LinearExample(CanonicalSystem):
    """``alpha = p dq + d(pq) / kappa``; the flow is ``(q, p) -> (e^t q, e^{-(kappa+1)t} p)``."""

    model_id = 'linear_example'
    labels = ('q', 'p')

    def __init__(self, kappa):
        super().__init__(1, kappa)

    def hamiltonian(self, x, t=0.0):
        return float(x[0] * x[1])

    def hamiltonian_grad(self, x, t=0.0):
        return np.array([x[1], x[0]], dtype=float)

    def quasi_integrals(self):
        return {'pq': lambda x, t=0.0: x[0] * x[1]}

    def exact_flow(self, x, t):
        return np.array([np.exp(t) * x[0], np.exp(-(self.kappa + 1) * t) * x[1]])


class Raindrop(CanonicalSystem):
    """Falling drop with linear drag: ``H = p^2 / 2 + g q``."""

    model_id = 'raindrop'
    labels = ('q', 'p')
    default_params = {'g': 1.0}

    def __init__(self, kappa, g=1.0):
        super().__init__(1, kappa)
        self.g = float(g)

    def hamiltonian(self, x, t=0.0):
        return float(0.5 * x[1] ** 2 + self.g * x[0])

    def hamiltonian_grad(self, x, t=0.0):
        return np.array([self.g, x[1]], dtype=float)

    def quasi_integrals(self):
        return {'Q': lambda x, t=0.0: x[1] + self.g / self.kappa}

    def exact_momentum(self, p0, t):
        limit = -self.g / self.kappa
        return (p0 - limit) * np.exp(-self.kappa * t) + limit

    def symmetry_fields(self):
        """Hamilton fields of ``p`` and ``q``."""
        x1 = lambda x: hamilton_field(self, np.array([0.0, 1.0]), x)
        x2 = lambda x: hamilton_field(self, np.array([1.0, 0.0]), x)
        return x1, x2

    def dynamic_symmetry_residuals(self, x):
        """
        Violations of the Lie-algebra relations ``[V, X1] = 0``,
        ``[V, X2] = X1 + kappa X2`` and ``[X1, X2] = 0``.
        """
        x = np.asarray(x, dtype=float)
        x1, x2 = self.symmetry_fields()
        field = lambda y: self.field(y)
        return {
            'v_x1': float(np.max(np.abs(lie_bracket(field, x1, x)))),
            'v_x2': float(np.max(np.abs(lie_bracket(field, x2, x) - x1(x) - self.kappa * x2(x)))),
            'x1_x2': float(np.max(np.abs(lie_bracket(x1, x2, x)))),
        }


class Monopole(CanonicalSystem):
    """Radial reduction of a charge in a monopole field: ``H = p_r^2 / 2m + h^2 / 2 m r^2``."""

    model_id = 'monopole'
    labels = ('r', 'p_r')
    default_params = {'m': 1.0, 'h': 1.0}

    def __init__(self, kappa, m=1.0, h=1.0):
        super().__init__(1, kappa)
        if not m > 0:
            raise ConfigInvalid(f"mass must be positive, got {m}", path='params.m')
        self.m = float(m)
        self.h = float(h)

    def hamiltonian(self, x, t=0.0):
        r, p = x
        return float(p ** 2 / (2 * self.m) + self.h ** 2 / (2 * self.m * r ** 2))

    def hamiltonian_grad(self, x, t=0.0):
        r, p = x
        return np.array([-self.h ** 2 / (self.m * r ** 3), p / self.m])

    def singular_guard(self, x):
        return abs(float(x[0]))

    def random_state(self, rng):
        return np.array([1.0 + rng.random(), rng.standard_normal()])

    def drift_radius(self, r0, elapsed):
        """Slow growth of the radius once ``p_r`` has relaxed to ``h^2 / kappa m r^3``."""
        return (r0 ** 4 + 4 * self.h ** 2 * elapsed / (self.kappa * self.m ** 2)) ** 0.25


class TorusSystem(CanonicalSystem):
    """
    Integrable system on ``T^n x R^n`` with ``alpha = (I - h) dphi + dH(I) / kappa``.

    ``H(I) = I.K.I / 2 + w.I + sum(c3 I^3) / 3``; the torus ``I = h`` is the global attractor.
    """

    model_id = 'torus'
    default_params = {'h': [1.0], 'K': [[1.0]], 'w': [0.0], 'c3': None}

    def __init__(self, kappa, h, K=None, w=None, c3=None):
        h = np.atleast_1d(np.asarray(h, dtype=float))
        n = h.size
        super().__init__(n, kappa)
        self.h = h
        self.K = np.zeros((n, n)) if K is None else np.asarray(K, dtype=float).reshape(n, n)
        self.w = np.zeros(n) if w is None else np.asarray(w, dtype=float).reshape(n)
        self.c3 = np.zeros(n) if c3 is None else np.asarray(c3, dtype=float).reshape(n)
        if not np.allclose(self.K, self.K.T):
            raise ConfigInvalid("K must be symmetric", path='params.K')
        self.angle_periods = {i: TWO_PI for i in range(n)}

    def state_labels(self):
        return [f"phi{i + 1}" for i in range(self.n)] + [f"I{i + 1}" for i in range(self.n)]

    def shift(self, t=0.0):
        return self.h

    def hamiltonian_of_actions(self, actions):
        actions = np.asarray(actions, dtype=float)
        return float(0.5 * actions @ self.K @ actions + self.w @ actions + np.sum(self.c3 * actions ** 3) / 3)

    def frequencies(self, actions):
        actions = np.asarray(actions, dtype=float)
        return self.K @ actions + self.w + self.c3 * actions ** 2

    def hessian(self, actions):
        return self.K + np.diag(2 * self.c3 * np.asarray(actions, dtype=float))

    def hamiltonian(self, x, t=0.0):
        return self.hamiltonian_of_actions(np.asarray(x)[self.n:])

    def hamiltonian_grad(self, x, t=0.0):
        grad = np.zeros(self.dim)
        grad[self.n:] = self.frequencies(np.asarray(x)[self.n:])
        return grad

    def quasi_integrals(self):
        return {f"Q{k + 1}": (lambda x, t=0.0, k=k: x[self.n + k] - self.h[k]) for k in range(self.n)}

    def physical_flow(self, x, t):
        x = np.array(x, dtype=float)
        x[:self.n] = x[:self.n] + self.frequencies(x[self.n:]) * t
        return x

    def action_form(self, x):
        form = np.zeros(self.dim)
        form[:self.n] = np.asarray(x)[self.n:]
        return form

    def random_state(self, rng):
        return np.concatenate([rng.uniform(0, TWO_PI, self.n), self.h + rng.standard_normal(self.n)])


class CircleParticle(CanonicalSystem):
    """Free particle on a circle of length ``L`` relaxing to the cycle ``m q' = h``."""

    model_id = 'circle_particle'
    labels = ('q', 'p')
    default_params = {'m': 1.0, 'h': 1.0, 'L': TWO_PI}

    def __init__(self, kappa, m=1.0, h=1.0, L=TWO_PI):
        super().__init__(1, kappa)
        if not m > 0:
            raise ConfigInvalid(f"mass must be positive, got {m}", path='params.m')
        if not L > 0:
            raise ConfigInvalid(f"circumference must be positive, got {L}", path='params.L')
        self.m = float(m)
        self.h = float(h)
        self.L = float(L)
        self.angle_periods = {0: self.L}
        self.phase_period = abs(self.h) * self.L if self.h else np.inf

    def shift(self, t=0.0):
        return np.array([self.h])

    def hamiltonian(self, x, t=0.0):
        return float(x[1] ** 2 / (2 * self.m))

    def hamiltonian_grad(self, x, t=0.0):
        return np.array([0.0, x[1] / self.m])

    def quasi_integrals(self):
        return {'Q': lambda x, t=0.0: x[1] - self.h}

    def phase(self, x, t=0.0):
        return float(np.mod(self.h * x[0], self.phase_period))

    def physical_flow(self, x, t):
        return np.array([x[0] + x[1] / self.m * t, x[1]])


class ForcedOscillator(CanonicalSystem):
    """
    Oscillator driven through a clock subsystem ``(I, phi)``:
    ``H = p^2 / 2m + k q^2 / 2 + I omega + f q cos(phi)``.
    """

    model_id = 'forced_oscillator'
    labels = ('q', 'phi', 'p', 'I')
    default_params = {'m': 1.0, 'k': 1.0, 'omega': 0.7, 'f': 1.0}

    def __init__(self, kappa, m=1.0, k=1.0, omega=0.7, f=1.0):
        super().__init__(2, kappa)
        if not m > 0:
            raise ConfigInvalid(f"mass must be positive, got {m}", path='params.m')
        self.m = float(m)
        self.k = float(k)
        self.drive = float(omega)
        self.f = float(f)
        self.angle_periods = {1: TWO_PI}

    def hamiltonian(self, x, t=0.0):
        q, phi, p, action = x
        return float(p ** 2 / (2 * self.m) + self.k * q ** 2 / 2 + action * self.drive + self.f * q * np.cos(phi))

    def hamiltonian_grad(self, x, t=0.0):
        q, phi, p, action = x
        return np.array([self.k * q + self.f * np.cos(phi), -self.f * q * np.sin(phi), p / self.m, self.drive])

    def steady_amplitude(self):
        """Complex amplitude ``A`` of the forced response ``q = Re(A e^{i phi})``."""
        return -self.f / self.m / (self.k / self.m - self.drive ** 2 + 1j * self.kappa * self.drive)


class ToyOscillator(CdSystem):
    """
    Heuristic oscillator ``alpha = (I - E0 / kappa) dphi + d(I omega0) / kappa``.

    Its solution is ``I(t) = E0 / kappa + (I(0) - E0 / kappa) e^{-kappa t}``, ``phi' = omega0``.
    """

    model_id = 'toy_oscillator'
    labels = ('I', 'phi')
    default_params = {'omega0': 1.0, 'e0': None}

    def __init__(self, kappa, omega0=1.0, e0=None):
        super().__init__(2, kappa)
        self.omega0 = float(omega0)
        self.e0 = HBAR * self.kappa if e0 is None else float(e0)
        self.angle_periods = {1: TWO_PI}
        self.phase_period = TWO_PI * self.cycle_action()

    @classmethod
    def from_params(cls, kappa, params):
        return cls(kappa=kappa, **params)

    def cycle_action(self, t=0.0):
        return self.e0 / self.kappa

    def alpha(self, x, t=0.0):
        return np.array([self.omega0 / self.kappa, x[0] - self.cycle_action(t)])

    def omega(self, x, t=0.0):
        return np.array([[0.0, 1.0], [-1.0, 0.0]])

    def field(self, x, t=0.0):
        guard = self.singular_guard(x)
        if guard < self.guard_floor:
            raise SingularPoint(f"{self.model_id}: action {guard:.3g} below floor")
        return np.array([-self.kappa * (x[0] - self.cycle_action(t)), self.omega0])

    def singular_guard(self, x):
        return float(x[0])

    def quasi_integrals(self):
        return {'Q': lambda x, t=0.0: x[0] - self.cycle_action(t)}

    def physical_hamiltonian(self, x, t=0.0):
        return float(self.omega0 * x[0])

    def action_form(self, x):
        return np.array([0.0, x[0]])

    def phase(self, x, t=0.0):
        return float(np.mod(self.cycle_action() * x[1], self.phase_period))

    def random_state(self, rng):
        return np.array([self.cycle_action() * (0.5 + 2 * rng.random()), rng.uniform(0, TWO_PI)])

    def exact_action(self, action0, t):
        return self.cycle_action() + (action0 - self.cycle_action()) * np.exp(-self.kappa * t)


class NonautonomousOscillator(ToyOscillator):
    """
    Oscillator whose attracting action moves from ``h0`` to ``h1`` along a sigmoid
    centred at ``t_mid`` with time scale ``width``.
    """

    model_id = 'nonautonomous_oscillator'
    default_params = {'omega0': 1.0, 'h0': 1.0, 'h1': 2.0, 't_mid': 5.0, 'width': 1.0}

    def __init__(self, kappa, omega0=1.0, h0=1.0, h1=2.0, t_mid=5.0, width=1.0):
        if not width > 0:
            raise ConfigInvalid(f"schedule width must be positive, got {width}", path='params.width')
        self.h0 = float(h0)
        self.h1 = float(h1)
        self.t_mid = float(t_mid)
        self.width = float(width)
        super().__init__(kappa, omega0=omega0, e0=kappa * h0)

    def cycle_action(self, t=0.0):
        return self.h0 + (self.h1 - self.h0) * expit((t - self.t_mid) / self.width)

    def schedule_rate(self, t):
        s = expit((t - self.t_mid) / self.width)
        return (self.h1 - self.h0) * s * (1 - s) / self.width

    def attractor_action(self, t):
        """``f(t) = h(t) - int_{-inf}^t e^{-kappa (t - tau)} h'(tau) d tau``, the skeleton ``I = f(t)``."""
        lower = min(t, self.t_mid) - 40 * self.width - 40 / self.kappa
        lag, _ = quad(lambda tau: np.exp(-self.kappa * (t - tau)) * self.schedule_rate(tau), lower, t,
                      points=[self.t_mid] if lower < self.t_mid < t else None, limit=200,
                      epsabs=1e-13, epsrel=1e-12)
        return self.cycle_action(t) - lag

    def quasi_integrals(self):
        return {'Q': lambda x, t=0.0: x[0] - self.attractor_action(t)}

    def physical_hamiltonian(self, x, t=0.0):
        """Multivalued physical Hamiltonian ``I omega0 + kappa (f(t) - h(t)) phi``."""
        return float(self.omega0 * x[0] + self.kappa * (self.attractor_action(t) - self.cycle_action(t)) * x[1])

    def extended_form(self, x, t):
        """Standard-gauge form ``(I - f(t)) (dphi - omega0 dt)`` as a covector on ``(I, phi, t)``."""
        gap = x[0] - self.attractor_action(t)
        return np.array([0.0, gap, -self.omega0 * gap])


class KahlerLogModel(KahlerSystem):
    """
    ``U = |z|^2 + 2 Re(c log z)``, ``H = omega0 |z|^2``. For ``Re c < 0`` the circle
    ``|z|^2 = -Re c`` attracts; it is a limit cycle unless ``Im c = omega0 = 0``.
    """

    model_id = 'kahler_log'
    labels = ('x', 'y')
    flat_metric = True
    default_params = {'c_re': -1.0, 'c_im': 0.5, 'omega0': 0.0}

    def __init__(self, kappa, c_re=-1.0, c_im=0.5, omega0=0.0):
        super().__init__(1, kappa)
        self.c = complex(c_re, c_im)
        self.omega0 = float(omega0)

    @classmethod
    def from_params(cls, kappa, params):
        return cls(kappa=kappa, **params)

    def potential(self, z):
        z = complex(np.ravel(z)[0])
        return float(abs(z) ** 2 + 2 * (self.c * np.log(z)).real)

    def potential_dzbar(self, z):
        z = np.asarray(z, dtype=complex)
        return z + np.conj(self.c) / np.conj(z)

    def hamiltonian(self, z):
        return float(self.omega0 * np.sum(np.abs(z) ** 2))

    def hamiltonian_dzbar(self, z):
        return self.omega0 * np.asarray(z, dtype=complex)

    def singular_guard(self, x):
        return float(np.hypot(x[0], x[1]))

    def quasi_integrals(self):
        return {'Q': lambda x, t=0.0: x[0] ** 2 + x[1] ** 2 + self.c.real}

    def physical_hamiltonian(self, x, t=0.0):
        r2 = x[0] ** 2 + x[1] ** 2
        return float(self.omega0 * r2 + self.epsilon * self.c.imag * np.log(r2))

    def cycle_radius(self):
        return float(np.sqrt(-self.c.real)) if self.c.real < 0 else None

    def random_state(self, rng):
        # annulus around the cycle scale, away from the log singularity at z = 0
        scale = max(1.0, np.sqrt(abs(self.c.real)))
        r = scale * rng.uniform(0.5, 2.0)
        theta = rng.uniform(0, TWO_PI)
        return np.array([r * np.cos(theta), r * np.sin(theta)])


class ReducedMatrixSystem(CanonicalSystem):
    """
    Matrix model reduced by its residual phase symmetry, in action-angle
    coordinates ``(phi_k, I_k)`` relative to a chosen level ``a``:
    ``alpha = sum(I dphi + mu dI / kappa) - d arg(Phi)``,
    ``Phi = 1 + sum I_k (e^{i phi_k} - 1)``.
    """

    model_id = 'matrix_reduced'
    default_params = {'mu': [0.3]}

    def __init__(self, kappa, mu):
        mu = np.atleast_1d(np.asarray(mu, dtype=float))
        super().__init__(mu.size, kappa)
        self.mu = mu
        self.angle_periods = {i: TWO_PI for i in range(self.n)}

    def state_labels(self):
        return [f"phi{i + 1}" for i in range(self.n)] + [f"I{i + 1}" for i in range(self.n)]

    def _split(self, x):
        x = np.asarray(x, dtype=float)
        return x[:self.n], x[self.n:]

    def big_phi(self, x):
        phi, actions = self._split(x)
        return 1.0 + np.sum(actions * (np.exp(1j * phi) - 1.0))

    def singular_guard(self, x):
        return abs(self.big_phi(x))

    def _arg_grad(self, x):
        phi, actions = self._split(x)
        big = self.big_phi(x)
        d_phi = np.real(actions * np.exp(1j * phi) / big)
        d_actions = np.imag((np.exp(1j * phi) - 1.0) / big)
        return d_phi, d_actions

    def hamiltonian(self, x, t=0.0):
        phi, actions = self._split(x)
        return float(self.mu @ actions - self.kappa * np.angle(self.big_phi(x)))

    def hamiltonian_grad(self, x, t=0.0):
        d_phi, d_actions = self._arg_grad(x)
        return np.concatenate([-self.kappa * d_phi, self.mu - self.kappa * d_actions])

    def physical_hamiltonian(self, x, t=0.0):
        return None

    def random_state(self, rng):
        weights = rng.dirichlet(np.ones(self.n + 1))
        return np.concatenate([rng.uniform(0, TWO_PI, self.n), weights[:self.n]])

    def series2_point(self, index=0):
        """Two-level solution ``I_b = 1/2``, ``tan(phi_b / 2) = mu_b / 2 kappa``, other actions zero."""
        x = np.zeros(self.dim)
        x[index] = 2 * np.arctan(self.mu[index] / (2 * self.kappa))
        x[self.n + index] = 0.5
        return x


class ConstantsTorus(TorusSystem):
    """Two actions attracted to the same level ``h`` with ``H = omega0 I2``."""

    model_id = 'torus_constants'
    default_params = {'h': 1.0, 'omega0': 1.0}

    def __init__(self, kappa, h=1.0, omega0=1.0):
        super().__init__(kappa, [h, h], K=np.zeros((2, 2)), w=[0.0, omega0])
        self.omega0 = float(omega0)
