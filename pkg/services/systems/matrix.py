"""
Matrix model and its fermionic generalisation.

The matrix model lives on pairs ``(psi, chi)`` of an N-vector and an
N-covector with potential ``U = psi*psi + chi chi* - log|chi psi|^2`` and
Hamiltonian ``H = psi* A psi``. The fermion model replaces them with N x k
and k x N matrices and the bilinear form by ``det(chi psi)``.

Lie solutions are searched in the eigenbasis of ``A``: the point is the
covector ``y`` and the generator is a real diagonal matrix ``C``.
"""
import itertools
import logging
from dataclasses import dataclass

import numpy as np
from scipy.stats import unitary_group

from ..cdcore import KahlerSystem
from ..conf import guard_floor
from ..exceptions import BadIndexSet, ConfigInvalid, DegeneratePair, NoSuchLevel, SingularPoint
from ..lie import GeneratorSpec, LieCandidate, LieModel, SpectralData

logger = logging.getLogger(__name__)


def _hermitian_from(levels, random_basis, seed):
    levels = np.asarray(levels, dtype=float)
    if random_basis:
        basis = unitary_group.rvs(levels.size, random_state=seed) if levels.size > 1 else np.eye(1)
    else:
        basis = np.eye(levels.size, dtype=complex)
    return basis @ np.diag(levels) @ basis.conj().T


def _check_hermitian(A, path):
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    if A.shape[0] != A.shape[1]:
        raise ConfigInvalid(f"Hamiltonian matrix must be square, got {A.shape}", path=path)
    if not np.allclose(A, A.conj().T, atol=1e-12):
        raise ConfigInvalid("Hamiltonian matrix must be Hermitian", path=path)
    return A


def matrix_eom(psi, chi, A, epsilon, floor=None):
    """
    ``psi' = i A psi - eps psi + eps conj(chi / chi psi)``,
    ``chi' = -eps chi + eps conj(psi / chi psi)``.

    Raises:
        SingularPoint: ``|chi psi|`` below the guard floor
    """
    psi = np.asarray(psi, dtype=complex)
    chi = np.asarray(chi, dtype=complex)
    floor = guard_floor() if floor is None else floor
    product = chi @ psi
    if abs(product) < floor:
        raise SingularPoint(f"|chi psi| = {abs(product):.3g} below floor {floor:.3g}")
    dpsi = 1j * (np.asarray(A) @ psi) - epsilon * psi + epsilon * np.conj(chi / product)
    dchi = -epsilon * chi + epsilon * np.conj(psi / product)
    return dpsi, dchi


def matrix_rates(mu, kappa):
    """Relaxation rate ``mu^2 / 2 kappa`` near a series-1 cycle and growth bound ``mu^2 / 4 kappa`` near series 2."""
    if not kappa > 0:
        raise ConfigInvalid(f"kappa must be positive, got {kappa}", path='kappa')
    return mu ** 2 / (2 * kappa), mu ** 2 / (4 * kappa)


@dataclass
class Series2Solution:
    """Exact two-level Lie solution, all vectors in the eigenbasis of ``A``."""

    a: int
    b: int
    lam: float
    phase: complex
    omega: float
    c: np.ndarray
    x: np.ndarray
    y: np.ndarray

    @property
    def actions(self):
        return 0.5, 0.5

    def candidate(self, epsilon):
        return LieCandidate(z=self.y.copy(), xi=GeneratorSpec('diagonal', self.c), omega=self.omega,
                            residual=0.0, classification='non_spectral', epsilon=epsilon,
                            extra={'gauge_index': self.a, 'series': 2})


def matrix_series2(a, b, omegas, kappa):
    """
    Two-level solution with ``I_a = I_b = 1/2``.

    Args:
        a (int): index of the first level (0-based, eigenbasis order)
        b (int): index of the second level
        omegas (array-like): eigenvalues of ``A``
        kappa (float): dissipative constant

    Returns:
        Series2Solution: ``lam = (w_a + w_b) / 2 kappa``, the relative phase factor and
        the lifted ``(x, y, C)`` with ``c_a = (w_a - w_b) / 4 = -c_b``

    Raises:
        DegeneratePair: the two levels coincide
    """
    omegas = np.asarray(omegas, dtype=float)
    if a == b or abs(omegas[a] - omegas[b]) < 1e-12 * max(1.0, abs(omegas[a])):
        raise DegeneratePair(f"Levels {a} and {b} are degenerate", a=a, b=b)
    detuning = (omegas[b] - omegas[a]) / (2 * kappa)
    phase = (1 + 1j * detuning) / (1 - 1j * detuning)
    c = np.zeros(omegas.size)
    c[a] = (omegas[a] - omegas[b]) / 4
    c[b] = -c[a]
    x = np.zeros(omegas.size, dtype=complex)
    y = np.zeros(omegas.size, dtype=complex)
    x[a] = y[a] = y[b] = 1 / np.sqrt(2)
    x[b] = phase / np.sqrt(2)
    return Series2Solution(a=a, b=b, lam=(omegas[a] + omegas[b]) / (2 * kappa), phase=phase,
                           omega=(omegas[a] + omegas[b]) / 2, c=c, x=x, y=y)


class MatrixModel(KahlerSystem, LieModel):
    model_id = 'matrix'
    flat_metric = True
    default_params = {'levels': [0.0, 1.0, 2.5], 'random_basis': False, 'C_diag': None}

    def __init__(self, kappa, A, C_diag=None):
        A = _check_hermitian(A, 'params.levels')
        self.N = A.shape[0]
        super().__init__(2 * self.N, kappa)
        self.A = A
        self.levels, self.basis = np.linalg.eigh(A)
        self.lie_dim = self.N
        self.C = None
        if C_diag is not None:
            C_diag = np.asarray(C_diag, dtype=float)
            if C_diag.size != self.N:
                raise ConfigInvalid(f"C_diag needs {self.N} entries", path='params.C_diag')
            self.C = self.basis @ np.diag(C_diag) @ self.basis.conj().T
        self.phase_period = 2 * np.pi

    @classmethod
    def from_params(cls, kappa, params, seed=None):
        A = _hermitian_from(params['levels'], params.get('random_basis', False), seed)
        return cls(kappa, A, C_diag=params.get('C_diag'))

    def state_labels(self):
        labels = []
        for name in ('psi', 'chi'):
            for j in range(1, self.N + 1):
                labels += [f"{name}{j}_re", f"{name}{j}_im"]
        return labels

    def split(self, z):
        z = np.asarray(z, dtype=complex)
        return z[:self.N], z[self.N:]

    def join(self, psi, chi):
        return self.to_real(np.concatenate([psi, chi]))

    def potential(self, z):
        psi, chi = self.split(z)
        return float(np.vdot(psi, psi).real + np.vdot(chi, chi).real - np.log(abs(chi @ psi) ** 2))

    def potential_dzbar(self, z):
        psi, chi = self.split(z)
        product = np.conj(chi @ psi)
        return np.concatenate([psi - np.conj(chi) / product, chi - np.conj(psi) / product])

    def hamiltonian(self, z):
        psi, _ = self.split(z)
        return float(np.vdot(psi, self.A @ psi).real)

    def hamiltonian_dzbar(self, z):
        psi, _ = self.split(z)
        return np.concatenate([self.A @ psi, np.zeros(self.N, dtype=complex)])

    def singular_guard(self, x):
        psi, chi = self.split(self.to_complex(x))
        return float(abs(chi @ psi))

    def quasi_integrals(self):
        def norm_psi(x, t=0.0):
            psi, _ = self.split(self.to_complex(x))
            return float(np.vdot(psi, psi).real - 1.0)

        def norm_chi(x, t=0.0):
            _, chi = self.split(self.to_complex(x))
            return float(np.vdot(chi, chi).real - 1.0)

        quasi = {'Q1': norm_psi, 'Q2': norm_chi}
        if self.C is not None:
            def commuting(x, t=0.0):
                psi, chi = self.split(self.to_complex(x))
                return float(np.vdot(psi, self.C @ psi).real - (chi @ self.C @ np.conj(chi)).real)
            quasi['Q_C'] = commuting
        return quasi

    def physical_hamiltonian(self, x, t=0.0):
        return self.hamiltonian(self.to_complex(x))

    def phase(self, x, t=0.0):
        psi, chi = self.split(self.to_complex(x))
        return float(np.mod(np.angle(chi @ psi), self.phase_period))

    def eom(self, x):
        psi, chi = self.split(self.to_complex(x))
        dpsi, dchi = matrix_eom(psi, chi, self.A, self.epsilon, self.guard_floor)
        return self.join(dpsi, dchi)

    def series1_state(self, m, angle=0.0):
        """Cycle ``psi = x_m``, ``chi = e^{i angle} x_m*``; ``angle`` moves along the torus of cycles."""
        psi = self.basis[:, m]
        chi = np.exp(1j * angle) * self.basis[:, m].conj()
        return self.join(psi, chi)

    def series2_state(self, solution):
        psi = self.basis @ solution.x
        chi = self.basis.conj() @ solution.y
        return self.join(psi, chi)

    # Lie solutions in the eigenbasis of A

    def _weights(self, y):
        norm = np.vdot(y, y).real
        rho = np.abs(y) ** 2 / norm
        derivs = (np.eye(self.N) - rho[:, None]) * np.conj(y)[None, :] / norm
        return rho, derivs

    def spectral_data(self, z, xi):
        rho, derivs = self._weights(np.asarray(z, dtype=complex))
        return SpectralData(self.levels - np.asarray(xi.payload), rho, derivs)

    def lie_hamiltonian(self, z):
        rho, _ = self._weights(np.asarray(z, dtype=complex))
        return float(self.levels @ rho)

    def lie_hamiltonian_dz(self, z):
        _, derivs = self._weights(np.asarray(z, dtype=complex))
        return self.levels @ derivs

    def momentum(self, z, xi):
        rho, _ = self._weights(np.asarray(z, dtype=complex))
        return float((self.levels - np.asarray(xi.payload)) @ rho)

    def momentum_dz(self, z, xi):
        _, derivs = self._weights(np.asarray(z, dtype=complex))
        return (self.levels - np.asarray(xi.payload)) @ derivs

    def gauge_for(self, candidate):
        return candidate.extra.get('gauge_index', int(np.argmax(np.abs(candidate.z))))

    def pack(self, candidate, gauge=None):
        g = self.gauge_for(candidate) if gauge is None else gauge
        y = np.asarray(candidate.z, dtype=complex)
        y = y / y[g]
        rest = [j for j in range(self.N) if j != g]
        c = np.asarray(candidate.xi.payload)
        return np.concatenate([y[rest].real, y[rest].imag, c[rest], [candidate.omega]])

    def unpack(self, u, gauge=None):
        g = 0 if gauge is None else gauge
        m = self.N - 1
        rest = [j for j in range(self.N) if j != g]
        y = np.ones(self.N, dtype=complex)
        y[rest] = u[:m] + 1j * u[m:2 * m]
        rho = np.abs(y) ** 2 / np.vdot(y, y).real
        c = np.zeros(self.N)
        c[rest] = u[2 * m:3 * m]
        # generator fixed up to a multiple of the identity: keep sum(c rho) = 0
        c[g] = -np.dot(c[rest], rho[rest]) / rho[g]
        return y, GeneratorSpec('diagonal', c), float(u[3 * m])

    def spectral_seed(self, n, **params):
        if not 0 <= n < self.N:
            raise NoSuchLevel(f"Matrix model has levels 0..{self.N - 1}, asked for {n}", level=n)
        y = np.zeros(self.N, dtype=complex)
        y[n] = 1.0
        return LieCandidate(z=y, xi=GeneratorSpec('diagonal', np.zeros(self.N)), omega=float(self.levels[n]),
                            level=n, extra={'gauge_index': n, 'series': 1})

    def level_gap(self, xi):
        gaps = np.diff(np.sort(self.levels))
        return float(gaps.min()) if gaps.size else 1.0

    def reconstruct_state(self, candidate):
        y = np.asarray(candidate.z, dtype=complex)
        y = y / np.linalg.norm(y)
        eps = candidate.epsilon if candidate.epsilon is not None else self.epsilon
        denom = self.levels - np.asarray(candidate.xi.payload) - candidate.omega + 1j * eps
        resolvent = np.sum(np.abs(y) ** 2 / denom)
        x = 1j * eps * np.conj(y) / denom / np.sqrt(-eps * resolvent.imag)
        return self.join(self.basis @ x, self.basis.conj() @ y)

    def generator_matrix(self, candidate):
        return self.basis @ np.diag(candidate.xi.payload) @ self.basis.conj().T

    def generator_field(self, candidate):
        C = self.generator_matrix(candidate)
        omega = candidate.omega

        def field(x):
            psi, chi = self.split(self.to_complex(x))
            return self.join(1j * (C @ psi + omega * psi), -1j * (C.T @ chi))
        return field


def fermion_eom(psi, chi, A, epsilon, floor=None):
    """
    ``psi' = i A psi - eps psi + eps chi* (psi* chi*)^-1``,
    ``chi' = -eps chi + eps (psi* chi*)^-1 psi*``.
    """
    psi = np.asarray(psi, dtype=complex)
    chi = np.asarray(chi, dtype=complex)
    floor = guard_floor() if floor is None else floor
    det = np.linalg.det(chi @ psi)
    if abs(det) < floor:
        raise SingularPoint(f"|det chi psi| = {abs(det):.3g} below floor {floor:.3g}")
    inverse = np.linalg.inv(psi.conj().T @ chi.conj().T)
    dpsi = 1j * (np.asarray(A) @ psi) - epsilon * psi + epsilon * chi.conj().T @ inverse
    dchi = -epsilon * chi + epsilon * inverse @ psi.conj().T
    return dpsi, dchi


def fermion_energy(levels, indices):
    """
    Sum of the selected eigenvalues; ``indices`` are 1-based and strictly increasing.

    Raises:
        BadIndexSet: indices out of range, repeated or unordered
    """
    levels = np.asarray(levels, dtype=float)
    indices = list(indices)
    if any(int(i) != i for i in indices):
        raise BadIndexSet(f"Indices must be integers: {indices}")
    if any(i < 1 or i > levels.size for i in indices):
        raise BadIndexSet(f"Indices must lie in 1..{levels.size}: {indices}")
    if any(b <= a for a, b in zip(indices, indices[1:])):
        raise BadIndexSet(f"Indices must be strictly increasing: {indices}")
    return float(sum(levels[i - 1] for i in indices))


def pauli_energies(levels, k):
    """Every sum of ``k`` distinct eigenvalues."""
    n = len(levels)
    return sorted(fermion_energy(levels, combo) for combo in itertools.combinations(range(1, n + 1), k))


class FermionModel(KahlerSystem):
    model_id = 'fermion'
    flat_metric = True
    default_params = {'levels': [0.0, 1.0, 2.5, 4.5], 'k': 2, 'random_basis': False, 'C_diag': None}

    def __init__(self, kappa, A, k, C_diag=None):
        A = _check_hermitian(A, 'params.levels')
        self.N = A.shape[0]
        if not 1 <= k <= self.N:
            raise ConfigInvalid(f"k must lie in 1..{self.N}, got {k}", path='params.k')
        self.k = int(k)
        super().__init__(2 * self.N * self.k, kappa)
        self.A = A
        self.levels, self.basis = np.linalg.eigh(A)
        self.C = None
        if C_diag is not None:
            self.C = self.basis @ np.diag(np.asarray(C_diag, dtype=float)) @ self.basis.conj().T
        self.phase_period = 2 * np.pi

    @classmethod
    def from_params(cls, kappa, params, seed=None):
        A = _hermitian_from(params['levels'], params.get('random_basis', False), seed)
        return cls(kappa, A, params.get('k', 1), C_diag=params.get('C_diag'))

    def state_labels(self):
        labels = []
        for i in range(1, self.N + 1):
            for j in range(1, self.k + 1):
                labels += [f"psi{i}{j}_re", f"psi{i}{j}_im"]
        for i in range(1, self.k + 1):
            for j in range(1, self.N + 1):
                labels += [f"chi{i}{j}_re", f"chi{i}{j}_im"]
        return labels

    def split(self, z):
        z = np.asarray(z, dtype=complex)
        size = self.N * self.k
        return z[:size].reshape(self.N, self.k), z[size:].reshape(self.k, self.N)

    def join(self, psi, chi):
        return self.to_real(np.concatenate([np.ravel(psi), np.ravel(chi)]))

    def _inverse(self, psi, chi):
        return np.linalg.inv(psi.conj().T @ chi.conj().T)

    def potential(self, z):
        psi, chi = self.split(z)
        return float(np.sum(np.abs(psi) ** 2) + np.sum(np.abs(chi) ** 2)
                     - np.log(abs(np.linalg.det(chi @ psi)) ** 2))

    def potential_dzbar(self, z):
        psi, chi = self.split(z)
        inverse = self._inverse(psi, chi)
        return np.concatenate([np.ravel(psi - chi.conj().T @ inverse), np.ravel(chi - inverse @ psi.conj().T)])

    def hamiltonian(self, z):
        psi, _ = self.split(z)
        return float(np.trace(psi.conj().T @ self.A @ psi).real)

    def hamiltonian_dzbar(self, z):
        psi, chi = self.split(z)
        return np.concatenate([np.ravel(self.A @ psi), np.zeros(chi.size, dtype=complex)])

    def singular_guard(self, x):
        psi, chi = self.split(self.to_complex(x))
        return float(abs(np.linalg.det(chi @ psi)))

    def quasi_integrals(self):
        eye = np.eye(self.k)

        def gram_psi(x, t=0.0):
            psi, _ = self.split(self.to_complex(x))
            return float(np.linalg.norm(psi.conj().T @ psi - eye))

        def gram_chi(x, t=0.0):
            _, chi = self.split(self.to_complex(x))
            return float(np.linalg.norm(chi @ chi.conj().T - eye))

        quasi = {'Q1': gram_psi, 'Q2': gram_chi}
        if self.C is not None:
            def commuting(x, t=0.0):
                psi, chi = self.split(self.to_complex(x))
                return float(np.trace(psi.conj().T @ self.C @ psi).real
                             - np.trace(chi @ self.C @ chi.conj().T).real)
            quasi['Q_C'] = commuting
        return quasi

    def physical_hamiltonian(self, x, t=0.0):
        return self.hamiltonian(self.to_complex(x))

    def phase(self, x, t=0.0):
        psi, chi = self.split(self.to_complex(x))
        return float(np.mod(np.angle(np.linalg.det(chi @ psi)), self.phase_period))

    def eom(self, x):
        psi, chi = self.split(self.to_complex(x))
        dpsi, dchi = fermion_eom(psi, chi, self.A, self.epsilon, self.guard_floor)
        return self.join(dpsi, dchi)

    def projector(self, x):
        """``Pi = psi (chi psi)^-1 chi``."""
        psi, chi = self.split(self.to_complex(x))
        return psi @ np.linalg.solve(chi @ psi, chi)

    def action_rate(self, x):
        """Instantaneous ``dS/dt = Re Tr(A Pi)``."""
        return float(np.trace(self.A @ self.projector(x)).real)

    def exact_state(self, indices, u=None, v=None):
        """
        Stationary family ``Psi = (e_i1 .. e_ik) u*``, ``chi = v Psi*`` for 1-based
        level indices; along the flow ``Psi(t) = Psi exp(i t w)`` with
        ``w = u diag(levels) u*``.
        """
        indices = list(indices)
        fermion_energy(self.levels, indices)
        if len(indices) != self.k:
            raise BadIndexSet(f"Need {self.k} indices, got {len(indices)}")
        u = np.eye(self.k) if u is None else np.asarray(u, dtype=complex)
        v = np.eye(self.k) if v is None else np.asarray(v, dtype=complex)
        columns = self.basis[:, [i - 1 for i in indices]]
        psi = columns @ u.conj().T
        chi = v @ psi.conj().T
        return self.join(psi, chi)

    def exact_frequency_matrix(self, indices, u=None):
        u = np.eye(self.k) if u is None else np.asarray(u, dtype=complex)
        return u @ np.diag(self.levels[[i - 1 for i in indices]]) @ u.conj().T

    def random_state(self, rng):
        for _ in range(100):
            psi = rng.standard_normal((self.N, self.k)) + 1j * rng.standard_normal((self.N, self.k))
            chi = rng.standard_normal((self.k, self.N)) + 1j * rng.standard_normal((self.k, self.N))
            x = self.join(psi, chi)
            if self.singular_guard(x) > 10 * self.guard_floor:
                return x
        raise SingularPoint(f"Could not draw a nonsingular state for {self.model_id}")
