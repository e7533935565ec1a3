"""
Conformally-dissipative systems: defining forms, dynamic fields, brackets and
the numerical checks of their defining identities.

Sign conventions (fixed here, used everywhere):

* ``omega[i, j] = d_i alpha_j - d_j alpha_i``; for canonical coordinates
  ordered ``(q, p)`` and ``alpha = p dq`` this is ``[[0, -1], [1, 0]]``.
* The dynamic field solves ``i_V omega = -kappa * alpha``, i.e.
  ``V = kappa * inv(omega) @ alpha``.
* Hamilton fields are ``X_F = inv(omega) @ dF`` and the bracket is
  ``{F, G} = dG . X_F``, so ``{p, q} = 1`` and ``dG/dt = {H, G}`` along ``X_H``.
* With ``alpha = p dq + dH / kappa`` the field is ``q' = H_p``,
  ``p' = -kappa p - H_q``.
"""
import logging

import numpy as np
import scipy.linalg

from . import numdiff
from .conf import guard_floor
from .exceptions import (ConfigInvalid, DegenerateForm, KappaMismatch, MetricDegenerate, QVanishes,
                         SingularPoint, ZeroBracket)
from .integrator import transport

logger = logging.getLogger(__name__)

FORM_FLOOR = 1e-12
# relative step for derivatives of the dynamic field itself, always taken with one Richardson step
OUTER_STEP = 1e-3


def canonical_omega(n):
    """Symplectic matrix of ``sum p dq`` in ``(q_1..q_n, p_1..p_n)`` ordering."""
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, -eye], [eye, zero]])


def omega_fd(alpha, x, t=0.0, rel=None):
    """``d alpha`` by central differences on the coefficients of ``alpha``."""
    jac = numdiff.jacobian(lambda y: alpha(y, t), x, rel)
    # jac[j, i] = d_i alpha_j
    return jac.T - jac


class CdSystem:
    """
    A CD-system given by its defining form.

    Subclasses override ``alpha`` (and, when known, ``omega`` and ``field``)
    analytically; the base class can also be built from plain callables.
    """

    model_id = 'generic'
    labels = ()
    angle_periods = {}

    def __init__(self, dim, kappa, alpha=None, omega=None, guard=None, guard_floor_value=None):
        if dim <= 0 or dim % 2:
            raise DegenerateForm(f"Phase space dimension must be even and positive, got {dim}")
        if not kappa > 0:
            raise ConfigInvalid(f"kappa must be positive, got {kappa}", path='kappa')
        self.dim = int(dim)
        self.kappa = float(kappa)
        self._alpha = alpha
        self._omega = omega
        self._guard = guard
        self.guard_floor = guard_floor() if guard_floor_value is None else float(guard_floor_value)

    @property
    def epsilon(self):
        return self.kappa / 2

    def alpha(self, x, t=0.0):
        if self._alpha is None:
            raise NotImplementedError(f"{type(self).__name__} has no defining form")
        return np.asarray(self._alpha(x, t), dtype=float)

    def omega(self, x, t=0.0):
        if self._omega is not None:
            return np.asarray(self._omega(x, t), dtype=float)
        return omega_fd(self.alpha, x, t)

    def singular_guard(self, x):
        if self._guard is None:
            return np.inf
        return float(self._guard(x))

    def field(self, x, t=0.0):
        return dynamic_field(self, x, t)

    def quasi_integrals(self):
        """Named quasi-integrals ``Q(x, t)``; every one decays like ``exp(-kappa t)``."""
        return {}

    def physical_hamiltonian(self, x, t=0.0):
        return None

    def action_form(self, x):
        """Covector of ``sum p dq`` used for loop integrals; canonical ``(q, p)`` layout by default."""
        n = self.dim // 2
        form = np.zeros(self.dim)
        form[:n] = x[n:]
        return form

    def phase(self, x, t=0.0):
        """Multivalued action phase ``S0``; ``None`` when the model does not register one."""
        return None

    def state_labels(self):
        if self.labels:
            return list(self.labels)
        return [f"x{i}" for i in range(self.dim)]

    def wrap(self, x):
        """Reduce angle coordinates into their fundamental period."""
        x = np.array(x, dtype=float)
        for index, period in self.angle_periods.items():
            x[index] = np.mod(x[index], period)
        return x

    def state_distance(self, x, y):
        delta = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        for index, period in self.angle_periods.items():
            delta[index] = (delta[index] + period / 2) % period - period / 2
        return float(np.linalg.norm(delta))

    def loop_distance(self, x, y):
        """Closure distance for loop integrals; the full state by default."""
        return self.state_distance(x, y)

    def random_state(self, rng):
        for _ in range(100):
            x = rng.standard_normal(self.dim)
            if self.singular_guard(x) > 10 * self.guard_floor:
                return x
        raise SingularPoint(f"Could not draw a nonsingular state for {self.model_id}")


class KahlerSystem(CdSystem):
    """
    Kähler CD-system on C^n given by a real potential U and Hamiltonian H.

    States are stored as interleaved real pairs ``(Re z_1, Im z_1, ...)``.
    Subclasses supply ``potential_dzbar`` and ``hamiltonian_dzbar``
    (derivatives with respect to conj(z)) and, when it is not the identity,
    the metric ``M[k, i] = d^2 U / d conj(z_k) d z_i``.
    """

    # set by models whose log terms are pluriharmonic, so that M is the identity
    flat_metric = False

    def __init__(self, n, kappa, guard_floor_value=None):
        super().__init__(2 * n, kappa, guard_floor_value=guard_floor_value)
        self.n = int(n)

    @staticmethod
    def to_complex(x):
        x = np.asarray(x, dtype=float)
        return x[0::2] + 1j * x[1::2]

    @staticmethod
    def to_real(z):
        z = np.asarray(z, dtype=complex)
        x = np.empty(2 * z.size)
        x[0::2] = z.real
        x[1::2] = z.imag
        return x

    def potential(self, z):
        raise NotImplementedError

    def hamiltonian(self, z):
        return 0.0

    def potential_dzbar(self, z):
        raise NotImplementedError

    def hamiltonian_dzbar(self, z):
        return np.zeros(self.n, dtype=complex)

    def metric(self, z):
        return np.eye(self.n, dtype=complex)

    def alpha(self, x, t=0.0):
        # alpha = Im dU + dH / kappa, written in real coordinates
        z = self.to_complex(x)
        u = self.potential_dzbar(z)
        h = self.hamiltonian_dzbar(z)
        a = np.empty(self.dim)
        a[0::2] = -u.imag + 2.0 * h.real / self.kappa
        a[1::2] = u.real + 2.0 * h.imag / self.kappa
        return a

    def omega(self, x, t=0.0):
        z = self.to_complex(x)
        basis = np.zeros((self.n, self.dim), dtype=complex)
        for k in range(self.n):
            basis[k, 2 * k] = 1.0
            basis[k, 2 * k + 1] = 1j
        return 2.0 * np.imag(basis.conj().T @ self.metric(z) @ basis)

    def field(self, x, t=0.0):
        return self.to_real(kahler_field(self, self.to_complex(x)))

    def potential_at(self, x):
        return float(self.potential(self.to_complex(x)))

    def action_form(self, x):
        """``Im(conj(z) dz)`` summed over the complex coordinates; ``d`` of it is ``omega`` for a flat metric."""
        z = self.to_complex(x)
        form = np.empty(self.dim)
        form[0::2] = -z.imag
        form[1::2] = z.real
        return form


def _check_guard(sys, x):
    guard = sys.singular_guard(x)
    if guard < sys.guard_floor:
        raise SingularPoint(f"{sys.model_id}: singular guard {guard:.3g} below floor {sys.guard_floor:.3g}")


def _checked_omega(sys, x, t):
    omega = sys.omega(x, t)
    scale = 1.0 + np.max(np.abs(omega))
    if np.max(np.abs(omega + omega.T)) > FORM_FLOOR * scale:
        raise DegenerateForm(f"{sys.model_id}: omega is not antisymmetric")
    smallest = np.linalg.svd(omega, compute_uv=False)[-1]
    if smallest < FORM_FLOOR * scale:
        raise DegenerateForm(f"{sys.model_id}: omega is degenerate (smallest singular value {smallest:.3g})")
    return omega


def dynamic_field(sys, x, t=0.0):
    """
    Dynamic field ``V`` defined by ``i_V d alpha = -kappa alpha``.

    Raises:
        SingularPoint: the singular guard is below its floor at ``x``
        DegenerateForm: ``d alpha`` is not invertible at ``x``
    """
    x = np.asarray(x, dtype=float)
    _check_guard(sys, x)
    omega = _checked_omega(sys, x, t)
    return sys.kappa * np.linalg.solve(omega, sys.alpha(x, t))


def hamilton_field(sys, dF, x, t=0.0):
    omega = _checked_omega(sys, np.asarray(x, dtype=float), t)
    return np.linalg.solve(omega, np.asarray(dF, dtype=float))


def poisson_bracket(omega, dF, dG, x=None):
    """``{F, G} = dG . inv(omega) dF``; ``x`` is accepted for call-site symmetry only."""
    omega = np.asarray(omega, dtype=float)
    try:
        return float(np.dot(dG, np.linalg.solve(omega, dF)))
    except np.linalg.LinAlgError as exc:
        raise DegenerateForm(f"Poisson bracket on a degenerate form: {exc}")


def lie_bracket(X, Y, x, rel=OUTER_STEP):
    """Commutator ``[X, Y] = (DY) X - (DX) Y`` of two vector fields at ``x``."""
    x = np.asarray(x, dtype=float)
    return (numdiff.directional(Y, x, X(x), rel, extrapolate=True)
            - numdiff.directional(X, x, Y(x), rel, extrapolate=True))


def extended_lie_derivative(V, F, x, kappa, rel=OUTER_STEP):
    """``L^kappa_V F = V.F + kappa F`` for a scalar function ``F``."""
    return float(numdiff.directional(F, x, V(x), rel, extrapolate=True)) + kappa * F(x)


def kahler_field(ks, z):
    """
    Solve ``M z' = i H_zbar - eps U_zbar`` for the Kähler velocity ``z'``.

    Raises:
        MetricDegenerate: the metric is not Hermitian positive definite at ``z``
    """
    z = np.asarray(z, dtype=complex)
    metric = ks.metric(z)
    rhs = 1j * ks.hamiltonian_dzbar(z) - ks.epsilon * ks.potential_dzbar(z)
    if getattr(ks, 'flat_metric', False):
        return rhs
    try:
        factor = scipy.linalg.cho_factor(metric)
    except np.linalg.LinAlgError as exc:
        raise MetricDegenerate(f"{ks.model_id}: metric is not positive definite: {exc}")
    return scipy.linalg.cho_solve(factor, rhs)


def potential_rate(ks, z):
    """
    Rate of change of the potential along the Kähler flow,
    ``dU/dt = {H, U} - eps |grad U|^2`` with ``|grad U|^2 = 2 U_zbar^H M^-1 U_zbar``.
    """
    z = np.asarray(z, dtype=complex)
    metric = ks.metric(z)
    u = ks.potential_dzbar(z)
    h = ks.hamiltonian_dzbar(z)
    try:
        inv_u = np.linalg.solve(metric, u)
        inv_h = np.linalg.solve(metric, h)
    except np.linalg.LinAlgError as exc:
        raise MetricDegenerate(f"{ks.model_id}: {exc}")
    bracket = -2.0 * np.imag(np.vdot(u, inv_h))
    grad_sq = 2.0 * np.real(np.vdot(u, inv_u))
    return float(bracket - ks.epsilon * grad_sq)


class QuadraticProbe:
    """Probe function ``F(x) = x.Qx/2 + b.x + c`` with an exact gradient."""

    def __init__(self, quad, lin, const=0.0):
        self.quad = np.asarray(quad, dtype=float)
        self.lin = np.asarray(lin, dtype=float)
        self.const = float(const)

    @classmethod
    def random(cls, dim, rng):
        a = rng.standard_normal((dim, dim))
        return cls(a + a.T, rng.standard_normal(dim), rng.standard_normal())

    @classmethod
    def coordinate(cls, dim, index):
        lin = np.zeros(dim)
        lin[index] = 1.0
        return cls(np.zeros((dim, dim)), lin)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ self.quad @ x + self.lin @ x + self.const)

    def grad(self, x):
        return self.quad @ np.asarray(x, dtype=float) + self.lin


def _grad(F, x):
    if hasattr(F, 'grad'):
        return np.asarray(F.grad(x), dtype=float)
    return numdiff.gradient(F, x)


def identity_residuals(sys, x, F, G, t=0.0, horizon=None, tol=None):
    """
    Absolute violations of the algebraic identities implied by ``i_V d alpha = -kappa alpha``.

    Keys:
        conformal_invariance: ``|L_V alpha + kappa alpha|``
        null_form: ``|alpha(V)|``
        hamilton_split: ``|V.F + kappa alpha(X_F)|``
        bracket_leibniz: ``|L^k_V {F,G} - {L^k_V F, G} - {F, L^k_V G}|``
        symmetry_derivation: ``|L^k_V alpha(X_G) - alpha([V, X_G])|``
        bracket_scaling: ``|g_t*{F,G} - e^{kappa t} {g_t*F, g_t*G}|`` (only with ``horizon``)
    """
    x = np.asarray(x, dtype=float)
    kappa = sys.kappa

    def V(y):
        return dynamic_field(sys, y, t)

    def X(fun):
        return lambda y: np.linalg.solve(sys.omega(y, t), _grad(fun, y))

    def bracket(f, g):
        return lambda y: poisson_bracket(sys.omega(y, t), _grad(f, y), _grad(g, y))

    def lifted(f):
        return lambda y: float(np.dot(V(y), _grad(f, y))) + kappa * f(y)

    def gradient_outer(f):
        return lambda y: numdiff.gradient(f, y, OUTER_STEP, extrapolate=True)

    class _Lifted:
        def __init__(self, f):
            self.f = lifted(f)

        def __call__(self, y):
            return self.f(y)

        def grad(self, y):
            return gradient_outer(self.f)(y)

    v = V(x)
    a = sys.alpha(x, t)
    results = {}

    jac_alpha = numdiff.jacobian(lambda y: sys.alpha(y, t), x, OUTER_STEP, extrapolate=True)
    jac_v = numdiff.jacobian(V, x, OUTER_STEP, extrapolate=True)
    lie_alpha = jac_alpha @ v + jac_v.T @ a
    results['conformal_invariance'] = float(np.max(np.abs(lie_alpha + kappa * a)))

    results['null_form'] = abs(float(np.dot(a, v)))

    xf = X(F)(x)
    results['hamilton_split'] = abs(float(np.dot(v, _grad(F, x)) + kappa * np.dot(a, xf)))

    fg = bracket(F, G)
    lhs = float(numdiff.directional(fg, x, v, OUTER_STEP, extrapolate=True)) + kappa * fg(x)
    rhs = bracket(_Lifted(F), G)(x) + bracket(F, _Lifted(G))(x)
    results['bracket_leibniz'] = abs(lhs - rhs)

    W = X(G)
    alpha_w = lambda y: float(np.dot(sys.alpha(y, t), W(y)))
    lhs = float(numdiff.directional(alpha_w, x, v, OUTER_STEP, extrapolate=True)) + kappa * alpha_w(x)
    rhs = float(np.dot(a, lie_bracket(V, W, x)))
    results['symmetry_derivation'] = abs(lhs - rhs)

    if horizon is not None:
        results['bracket_scaling'] = bracket_scaling_residual(sys, x, F, G, horizon, tol=tol)
    return results


def bracket_scaling_residual(sys, x, F, G, horizon, tol=None):
    """Compare ``{F, G}`` after the flow with ``e^{kappa t}`` times the bracket of pulled-back functions."""
    x = np.asarray(x, dtype=float)
    traj, phi = transport(sys, x, 0.0, horizon, np.eye(sys.dim), tol=tol)
    xt = traj.final
    dF, dG = _grad(F, xt), _grad(G, xt)
    lhs = poisson_bracket(sys.omega(xt, horizon), dF, dG)
    rhs = np.exp(sys.kappa * horizon) * poisson_bracket(sys.omega(x, 0.0), phi.T @ dF, phi.T @ dG)
    return abs(lhs - rhs)


def contraction_defect(sys, x0, T, pairs, tol=None):
    """
    Transport tangent pairs along the flow and measure how far
    ``omega(xi(T), eta(T))`` is from ``e^{-kappa T} omega(xi_0, eta_0)``.

    Args:
        pairs (list): tangent-vector pairs ``(xi_0, eta_0)``

    Returns:
        float: the largest relative defect over the pairs
    """
    x0 = np.asarray(x0, dtype=float)
    omega0 = sys.omega(x0, 0.0)
    columns = []
    initial = []
    for xi, eta in pairs:
        xi = np.asarray(xi, dtype=float)
        eta = np.asarray(eta, dtype=float)
        w0 = float(xi @ omega0 @ eta)
        if abs(w0) < 1e-14:
            raise ZeroBracket("Tangent pair has zero symplectic product", xi=xi.tolist(), eta=eta.tolist())
        initial.append(w0)
        columns.extend([xi, eta])
    traj, moved = transport(sys, x0, 0.0, T, np.column_stack(columns), tol=tol)
    omega_t = sys.omega(traj.final, T)
    decay = np.exp(-sys.kappa * T)
    defect = 0.0
    for i, w0 in enumerate(initial):
        wt = float(moved[:, 2 * i] @ omega_t @ moved[:, 2 * i + 1])
        defect = max(defect, abs(wt - decay * w0) / abs(w0))
    return defect


def quasi_integral_rate(traj, Q, t_min=None, t_max=None, floor=1e-12):
    """
    Least-squares exponential rate of ``|Q(x(t), t)|`` over a trajectory window.

    Raises:
        QVanishes: ``|Q|`` drops below ``floor`` inside the window
    """
    window = traj.window(t_min, t_max)
    values = np.abs(window.evaluate(Q))
    if values.size < 2:
        raise QVanishes("Not enough samples to fit a rate")
    if np.min(values) < floor:
        t_at = float(window.times[int(np.argmin(values))])
        raise QVanishes(f"Quasi-integral vanishes (|Q| < {floor:g}) at t={t_at:.6g}", t=t_at)
    slope, _ = np.polyfit(window.times, np.log(values), 1)
    return float(slope)


class CompoundSystem(CdSystem):
    """Direct product of two CD-systems with the same dissipative constant."""

    def __init__(self, first, second):
        if not np.isclose(first.kappa, second.kappa, rtol=1e-12, atol=0.0):
            raise KappaMismatch(f"Cannot compound kappa={first.kappa} with kappa={second.kappa}")
        super().__init__(first.dim + second.dim, first.kappa,
                         guard_floor_value=min(first.guard_floor, second.guard_floor))
        self.first = first
        self.second = second
        self.model_id = f"{first.model_id}+{second.model_id}"
        self.angle_periods = dict(first.angle_periods)
        self.angle_periods.update({first.dim + i: p for i, p in second.angle_periods.items()})

    def _split(self, x):
        x = np.asarray(x, dtype=float)
        return x[:self.first.dim], x[self.first.dim:]

    def alpha(self, x, t=0.0):
        a, b = self._split(x)
        return np.concatenate([self.first.alpha(a, t), self.second.alpha(b, t)])

    def omega(self, x, t=0.0):
        a, b = self._split(x)
        return scipy.linalg.block_diag(self.first.omega(a, t), self.second.omega(b, t))

    def field(self, x, t=0.0):
        a, b = self._split(x)
        return np.concatenate([self.first.field(a, t), self.second.field(b, t)])

    def singular_guard(self, x):
        a, b = self._split(x)
        return min(self.first.singular_guard(a), self.second.singular_guard(b))

    def physical_hamiltonian(self, x, t=0.0):
        a, b = self._split(x)
        ha, hb = self.first.physical_hamiltonian(a, t), self.second.physical_hamiltonian(b, t)
        if ha is None or hb is None:
            return None
        return ha + hb


def compound(first, second):
    return CompoundSystem(first, second)


def canonical_system(H, kappa, n, dH=None):
    """
    CD-system with ``alpha = p dq + dH / kappa`` in ``(q, p)`` coordinates.

    Its field is ``q' = H_p``, ``p' = -kappa p - H_q``.
    """
    grad = dH if dH is not None else (lambda x: numdiff.gradient(H, x))

    def alpha(x, t):
        form = np.zeros(2 * n)
        form[:n] = x[n:]
        return form + grad(x) / kappa

    omega = canonical_omega(n)
    system = CdSystem(2 * n, kappa, alpha=alpha, omega=lambda x, t: omega)
    system.model_id = 'canonical'
    system.physical_hamiltonian = lambda x, t=0.0: float(H(x))
    return system


def kahler_as_cd(ks):
    """The Kähler system seen as a generic CD-system: its form with ``d alpha`` by differences."""
    system = CdSystem(ks.dim, ks.kappa, alpha=ks.alpha, guard=ks.singular_guard,
                      guard_floor_value=ks.guard_floor)
    system.model_id = f"{ks.model_id}:generic"
    return system
