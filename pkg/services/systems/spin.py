"""
Spin in the representation by homogeneous polynomials of degree ``m``.

The state is a spinor ``s`` together with the coefficients ``F_0 .. F_m`` of a
polynomial in the basis ``e_k(x) = x1^k x2^(m-k) / sqrt(k! (m-k)!)``. The
potential is ``U = |F|^2 + s*s - log|F(s)|^2`` and the Kähler Hamiltonian is
``(m lambda / 2) s* sigma3 s``.
"""
import logging

import numpy as np
from scipy.special import gammaln
from scipy.stats import binom

from ..cdcore import KahlerSystem
from ..conf import guard_floor
from ..exceptions import ConfigInvalid, NoSuchLevel, SingularPoint, ZeroSpinor
from ..lie import GeneratorSpec, LieCandidate, LieModel, SpectralData

logger = logging.getLogger(__name__)

PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def _norms(m):
    k = np.arange(m + 1)
    return np.exp(0.5 * (gammaln(k + 1) + gammaln(m - k + 1)))


def monomials(s, m):
    """``e_k(s)`` for ``k = 0..m``."""
    s = np.asarray(s, dtype=complex)
    k = np.arange(m + 1)
    return s[0] ** k * s[1] ** (m - k) / _norms(m)


def monomial_gradients(s, m):
    """``d e_k / d s_j`` as an array of shape ``(m + 1, 2)``."""
    s = np.asarray(s, dtype=complex)
    k = np.arange(m + 1)
    norms = _norms(m)
    grad = np.zeros((m + 1, 2), dtype=complex)
    first = k > 0
    second = k < m
    grad[first, 0] = k[first] * s[0] ** (k[first] - 1) * s[1] ** (m - k[first]) / norms[first]
    grad[second, 1] = (m - k[second]) * s[0] ** k[second] * s[1] ** (m - k[second] - 1) / norms[second]
    return grad


def spin_eom(s, F, lam, m, epsilon, floor=None):
    """
    ``s' = (-eps + i m lambda sigma3 / 2) s + eps conj(dF(s)/ds / F(s))``,
    ``F_k' = -eps F_k + eps conj(e_k(s)) / conj(F(s))``.

    Raises:
        SingularPoint: ``|F(s)|`` below the guard floor
    """
    s = np.asarray(s, dtype=complex)
    F = np.asarray(F, dtype=complex)
    floor = guard_floor() if floor is None else floor
    e = monomials(s, m)
    value = F @ e
    if abs(value) < floor:
        raise SingularPoint(f"|F(s)| = {abs(value):.3g} below floor {floor:.3g}")
    grad = F @ monomial_gradients(s, m)
    ds = (-epsilon + 0.5j * m * lam * np.array([1.0, -1.0])) * s + epsilon * np.conj(grad / value)
    dF = -epsilon * F + epsilon * np.conj(e) / np.conj(value)
    return ds, dF


def spin_vector(s, m):
    """
    ``S_a = -(m/2) s* sigma_a s / s* s``; ``|S| = m/2`` for every nonzero spinor.

    Raises:
        ZeroSpinor: ``s`` vanishes
    """
    s = np.asarray(s, dtype=complex)
    norm = np.vdot(s, s).real
    if not norm > 0:
        raise ZeroSpinor("Spin vector of the zero spinor")
    return np.array([-(m / 2) * np.vdot(s, sigma @ s).real / norm for sigma in PAULI])


def resolvent_kernel(s, xi, m):
    """``t -> (x e^{i a1 t} + (1 - x) e^{i a2 t})^m`` for the diagonal generator ``(a1, a2)``."""
    s = np.asarray(s, dtype=complex)
    x = abs(s[0]) ** 2 / np.vdot(s, s).real
    a1, a2 = xi.payload

    def kernel(t):
        return (x * np.exp(1j * a1 * t) + (1 - x) * np.exp(1j * a2 * t)) ** m
    return kernel


class SpinModel(KahlerSystem, LieModel):
    model_id = 'spin'
    flat_metric = True
    default_params = {'m': 3, 'lam': 1.0}
    lie_dim = 2

    def __init__(self, kappa, m=3, lam=1.0):
        if int(m) != m or m < 1:
            raise ConfigInvalid(f"m must be a positive integer, got {m}", path='params.m')
        self.m = int(m)
        super().__init__(2 + self.m + 1, kappa)
        self.lam = float(lam)
        self.phase_period = 2 * np.pi

    @classmethod
    def from_params(cls, kappa, params):
        return cls(kappa=kappa, **params)

    def state_labels(self):
        labels = ['s1_re', 's1_im', 's2_re', 's2_im']
        for k in range(self.m + 1):
            labels += [f"F{k}_re", f"F{k}_im"]
        return labels

    def split(self, w):
        w = np.asarray(w, dtype=complex)
        return w[:2], w[2:]

    def join(self, s, F):
        return self.to_real(np.concatenate([s, F]))

    def potential(self, w):
        s, F = self.split(w)
        value = F @ monomials(s, self.m)
        return float(np.vdot(F, F).real + np.vdot(s, s).real - np.log(abs(value) ** 2))

    def potential_dzbar(self, w):
        s, F = self.split(w)
        e = monomials(s, self.m)
        value = F @ e
        grad = F @ monomial_gradients(s, self.m)
        return np.concatenate([s - np.conj(grad) / np.conj(value), F - np.conj(e) / np.conj(value)])

    def hamiltonian(self, w):
        s, _ = self.split(w)
        return float(0.5 * self.m * self.lam * np.vdot(s, PAULI[2] @ s).real)

    def hamiltonian_dzbar(self, w):
        s, F = self.split(w)
        return np.concatenate([0.5 * self.m * self.lam * (PAULI[2] @ s), np.zeros(F.size, dtype=complex)])

    def field(self, x, t=0.0):
        s, F = self.split(self.to_complex(x))
        ds, dF = spin_eom(s, F, self.lam, self.m, self.epsilon, self.guard_floor)
        return self.join(ds, dF)

    def singular_guard(self, x):
        s, F = self.split(self.to_complex(x))
        return float(abs(F @ monomials(s, self.m)))

    def quasi_integrals(self):
        def norm(x, t=0.0):
            _, F = self.split(self.to_complex(x))
            return float(np.vdot(F, F).real - 1.0)

        def spinor(x, t=0.0):
            s, _ = self.split(self.to_complex(x))
            return float(np.vdot(s, s).real - self.m)

        return {'Q1': norm, 'Q2': spinor}

    def spin(self, x):
        s, _ = self.split(self.to_complex(x))
        return spin_vector(s, self.m)

    def physical_hamiltonian(self, x, t=0.0):
        """``lambda S3`` with ``S3`` from ``spin_vector``."""
        return float(self.lam * self.spin(x)[2])

    def phase(self, x, t=0.0):
        s, F = self.split(self.to_complex(x))
        return float(np.mod(np.angle(F @ monomials(s, self.m)), self.phase_period))

    def random_state(self, rng):
        for _ in range(100):
            w = rng.standard_normal(self.n) + 1j * rng.standard_normal(self.n)
            x = self.to_real(w)
            if self.singular_guard(x) > 10 * self.guard_floor:
                return x
        raise SingularPoint(f"Could not draw a nonsingular state for {self.model_id}")

    # Lie solutions: s = sqrt(m) (sqrt(x), sqrt(1 - x)), generator diag(a1, a2)

    def _levels(self, xi):
        a1, a2 = xi.payload
        k = np.arange(self.m + 1)
        return k * a1 + (self.m - k) * a2

    def spectral_data(self, z, xi):
        s = np.asarray(z, dtype=complex)
        norm = np.vdot(s, s).real
        x = abs(s[0]) ** 2 / norm
        k = np.arange(self.m + 1)
        weights = binom.pmf(k, self.m, x)
        slope = self.m * (binom.pmf(k - 1, self.m - 1, x) - binom.pmf(k, self.m - 1, x))
        dx = np.array([np.conj(s[0]) * (1 - x), -x * np.conj(s[1])]) / norm
        return SpectralData(self._levels(xi), weights, slope[:, None] * dx[None, :])

    def lie_hamiltonian(self, z):
        s = np.asarray(z, dtype=complex)
        return float(0.5 * self.m * self.lam * (abs(s[0]) ** 2 - abs(s[1]) ** 2))

    def lie_hamiltonian_dz(self, z):
        s = np.asarray(z, dtype=complex)
        return 0.5 * self.m * self.lam * np.array([np.conj(s[0]), -np.conj(s[1])])

    def momentum(self, z, xi):
        s = np.asarray(z, dtype=complex)
        return float(np.dot(xi.payload, np.abs(s) ** 2))

    def momentum_dz(self, z, xi):
        s = np.asarray(z, dtype=complex)
        return np.asarray(xi.payload) * np.conj(s)

    def pack(self, candidate, gauge=None):
        s = np.asarray(candidate.z, dtype=complex)
        x = abs(s[0]) ** 2 / np.vdot(s, s).real
        a1, a2 = candidate.xi.payload
        return np.array([x, a1, a2, candidate.omega])

    def unpack(self, u, gauge=None):
        x = min(max(u[0], 0.0), 1.0)
        s = np.sqrt(self.m) * np.array([np.sqrt(x), np.sqrt(1 - x)], dtype=complex)
        return s, GeneratorSpec('diagonal', (u[1], u[2])), float(u[3])

    def in_domain(self, u):
        return bool(np.all(np.isfinite(u)) and 0.0 <= u[0] <= 1.0)

    def level_gap(self, xi):
        a1, a2 = xi.payload
        return abs(a1 - a2)

    def spectral_seed(self, n, **params):
        """Seed at the maximum ``x = n / m`` of the weight of ``e_n``; exact at the poles ``n = 0, m``."""
        if not 0 <= n <= self.m:
            raise NoSuchLevel(f"Spin of degree {self.m} has levels 0..{self.m}, asked for {n}", level=n)
        a = 0.5 * self.m * self.lam
        xi = GeneratorSpec('diagonal', (a, -a))
        x = n / self.m
        s = np.sqrt(self.m) * np.array([np.sqrt(x), np.sqrt(1 - x)], dtype=complex)
        return LieCandidate(z=s, xi=xi, omega=float(self._levels(xi)[n]), level=n)

    def reconstruct_state(self, candidate):
        s = np.asarray(candidate.z, dtype=complex)
        eps = candidate.epsilon if candidate.epsilon is not None else self.epsilon
        e = monomials(s, self.m)
        detuning = self._levels(candidate.xi) - candidate.omega
        weighted = np.sum(np.abs(e) ** 2 / (detuning + 1j * eps))
        # gauge F(s) real and positive
        value = np.sqrt(-eps * weighted.imag)
        F = eps * np.conj(e) / (value * (eps - 1j * detuning))
        return self.join(s, F)

    def generator_field(self, candidate):
        rates = np.asarray(candidate.xi.payload)
        detuning = candidate.omega - self._levels(candidate.xi)

        def field(x):
            s, F = self.split(self.to_complex(x))
            return self.join(1j * rates * s, 1j * detuning * F)
        return field
