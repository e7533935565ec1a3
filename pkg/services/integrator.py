"""
Guarded adaptive integration.

Anything exposing ``dim``, ``field(x, t)`` and ``singular_guard(x)`` can be
integrated. Steps are taken with scipy's embedded Runge-Kutta pairs; a step
that lands below the singular-guard floor is thrown away and the solver is
restarted from the last accepted state with half the step.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import DOP853, RK45

from .conf import default_tol, fd_step, guard_floor
from .exceptions import NonFinite, SingularityPersistent, SingularPoint, StepUnderflow

logger = logging.getLogger(__name__)

METHODS = {
    'RK45': RK45,
    'DOP853': DOP853,
}

MAX_GUARD_REJECTIONS = 40


@dataclass(frozen=True)
class PhaseState:
    x: np.ndarray
    t: float = 0.0


@dataclass
class Trajectory:
    """Accepted steps of one integration run, in increasing time order."""

    times: np.ndarray
    states: np.ndarray
    events: list = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    @property
    def samples(self):
        return [(t, PhaseState(x, t)) for t, x in zip(self.times, self.states)]

    @property
    def t0(self):
        return float(self.times[0])

    @property
    def t1(self):
        return float(self.times[-1])

    @property
    def final(self):
        return self.states[-1]

    def at(self, t):
        """State at time ``t`` by linear interpolation between accepted steps."""
        return np.array([np.interp(t, self.times, self.states[:, i]) for i in range(self.states.shape[1])])

    def resample(self, times):
        times = np.asarray(times, dtype=float)
        states = np.column_stack([np.interp(times, self.times, self.states[:, i])
                                  for i in range(self.states.shape[1])])
        return Trajectory(times, states, list(self.events), dict(self.stats))

    def window(self, t_min=None, t_max=None):
        mask = np.ones(len(self.times), dtype=bool)
        if t_min is not None:
            mask &= self.times >= t_min
        if t_max is not None:
            mask &= self.times <= t_max
        events = [(t, kind) for t, kind in self.events
                  if (t_min is None or t >= t_min) and (t_max is None or t <= t_max)]
        return Trajectory(self.times[mask], self.states[mask], events, dict(self.stats))

    def evaluate(self, fun):
        """Apply ``fun(x, t)`` to every sample."""
        return np.array([fun(x, t) for t, x in zip(self.times, self.states)])


def _floor_for(system, floor):
    if floor is not None:
        return floor
    return getattr(system, 'guard_floor', None) or guard_floor()


def integrate(system, x0, t0, t1, tol=None, max_step=None, method='DOP853', floor=None,
              max_rejections=MAX_GUARD_REJECTIONS):
    """
    Integrate ``system`` from ``x0`` over ``[t0, t1]``.

    Args:
        system: object with ``field(x, t)`` and ``singular_guard(x)``
        x0 (array-like): initial state
        t0 (float): start time
        t1 (float): end time
        tol (float): absolute and relative local error tolerance
        max_step (float): largest accepted step, i.e. the maximum sample spacing
        method (str): 'DOP853' or 'RK45'
        floor (float): singular-guard floor, defaults to the system's floor

    Returns:
        Trajectory: every accepted step as a sample
    """
    tol = default_tol() if tol is None else float(tol)
    floor = _floor_for(system, floor)
    max_step = np.inf if max_step is None else float(max_step)
    solver_cls = METHODS[method]
    name = getattr(system, 'model_id', type(system).__name__)

    x = np.array(x0, dtype=float)
    if not np.all(np.isfinite(x)):
        raise NonFinite(f"Initial state of {name} is not finite", t=t0)
    if system.singular_guard(x) < floor:
        raise SingularPoint(f"Initial state of {name} is below the singular-guard floor", t=t0, floor=floor)

    def fun(t, y):
        return system.field(y, t)

    times, states, events = [t0], [x], []
    stats = {'accepted': 0, 'guard_rejected': 0, 'nfev': 0}
    if t1 == t0:
        return Trajectory(np.array(times), np.array(states), events, stats)

    solver = solver_cls(fun, t0, x, t1, rtol=tol, atol=tol, max_step=max_step)
    t_last, x_last = t0, x
    rejections = 0
    restricted = False

    while solver.status == 'running':
        solver.step()
        if solver.status == 'failed':
            events.append((solver.t, 'step_floor'))
            stats['nfev'] += solver.nfev
            logger.error(f"Integrator failed for {name} at t={solver.t}: step size underflow")
            raise StepUnderflow(f"Step size underflow for {name}", t=solver.t)

        y = solver.y
        if not np.all(np.isfinite(y)):
            raise NonFinite(f"Non-finite state in {name}", t=solver.t)

        if system.singular_guard(y) < floor:
            rejections += 1
            stats['guard_rejected'] += 1
            stats['nfev'] += solver.nfev
            events.append((solver.t, 'singularity_guard'))
            if rejections > max_rejections:
                raise SingularityPersistent(
                    f"Singular guard of {name} stayed below its floor for {rejections} attempts",
                    t=solver.t, floor=floor)
            h = abs(solver.t - t_last) / 2
            if h < 1e-14 * max(1.0, abs(t_last)):
                events.append((t_last, 'step_floor'))
                raise StepUnderflow(f"Step halving underflowed near the singular set of {name}", t=t_last)
            logger.warning(f"Guard rejection #{rejections} for {name} at t={solver.t:.6g}, retrying with h={h:.3g}")
            solver = solver_cls(fun, t_last, x_last, t1, rtol=tol, atol=tol, max_step=min(max_step, h),
                                first_step=h)
            restricted = True
            continue

        rejections = 0
        stats['accepted'] += 1
        t_last, x_last = solver.t, y.copy()
        times.append(t_last)
        states.append(x_last)

        if restricted and solver.status == 'running':
            stats['nfev'] += solver.nfev
            first = min(max(abs(solver.step_size or 0.0), 1e-12), abs(t1 - t_last))
            solver = solver_cls(fun, t_last, x_last, t1, rtol=tol, atol=tol, max_step=max_step,
                                first_step=first)
            restricted = False

    stats['nfev'] += solver.nfev
    return Trajectory(np.array(times), np.array(states), events, stats)


class _Variational:
    """Flow augmented with tangent vectors carried by the linearized field."""

    def __init__(self, system, k):
        self.system = system
        self.n = system.dim
        self.k = k
        self.dim = self.n * (1 + k)
        self.guard_floor = getattr(system, 'guard_floor', None)
        self.model_id = getattr(system, 'model_id', type(system).__name__)

    def field(self, y, t):
        n, k = self.n, self.k
        x = y[:n]
        vectors = y[n:].reshape(n, k)
        out = np.empty_like(y)
        out[:n] = self.system.field(x, t)
        base = fd_step() * (1.0 + np.linalg.norm(x))
        for j in range(k):
            w = vectors[:, j]
            norm = np.linalg.norm(w)
            if norm == 0.0:
                out[n + j::k] = 0.0
                continue
            h = base / norm
            out[n + j::k] = (self.system.field(x + h * w, t) - self.system.field(x - h * w, t)) / (2 * h)
        return out

    def singular_guard(self, y):
        return self.system.singular_guard(y[:self.n])


def transport(system, x0, t0, t1, vectors, tol=None, max_step=None, method='DOP853'):
    """
    Carry tangent vectors along the flow with the variational equations.

    Args:
        vectors (array-like): tangent vectors as columns, shape (dim, k)

    Returns:
        tuple: (Trajectory of the base flow, transported vectors of shape (dim, k))
    """
    vectors = np.asarray(vectors, dtype=float)
    if vectors.ndim == 1:
        vectors = vectors[:, None]
    n, k = vectors.shape
    augmented = _Variational(system, k)
    y0 = np.concatenate([np.asarray(x0, dtype=float), vectors.ravel()])
    traj = integrate(augmented, y0, t0, t1, tol=tol, max_step=max_step, method=method)
    base = Trajectory(traj.times, traj.states[:, :n], traj.events, traj.stats)
    return base, traj.final[n:].reshape(n, k)


def monodromy(system, x0, period, t0=0.0, tol=None):
    """Fundamental matrix of the variational equations after one period."""
    _, matrix = transport(system, x0, t0, t0 + period, np.eye(system.dim), tol=tol)
    return matrix
