"""
Central finite differences used wherever a model does not supply derivatives.

With ``extrapolate=True`` the quotients at ``h`` and ``h / 2`` are combined
by one Richardson step, which cancels the ``h^2`` term and leaves an
``O(h^4)`` error. Use it with a larger step (``1e-3`` rather than
``CD_LAB_FD_STEP``) when the function itself is only accurate to rounding.
"""
import numpy as np

from .conf import fd_step


def _step(x, rel):
    return rel * (1.0 + np.linalg.norm(x))


def _central(fun, x, e, h, extrapolate):
    coarse = (np.asarray(fun(x + e)) - np.asarray(fun(x - e))) / (2 * h)
    if not extrapolate:
        return coarse
    fine = (np.asarray(fun(x + e / 2)) - np.asarray(fun(x - e / 2))) / h
    return (4 * fine - coarse) / 3


def gradient(fun, x, rel=None, extrapolate=False):
    """
    Gradient of a scalar function by central differences.

    Args:
        fun (callable): scalar function of a real vector
        x (np.ndarray): evaluation point
        rel (float): relative step, defaults to CD_LAB_FD_STEP
        extrapolate (bool): apply one Richardson step

    Returns:
        np.ndarray: gradient vector, same length as ``x``
    """
    x = np.asarray(x, dtype=float)
    h = _step(x, fd_step() if rel is None else rel)
    grad = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        grad[i] = _central(fun, x, e, h, extrapolate)
    return grad


def jacobian(fun, x, rel=None, extrapolate=False):
    """
    Jacobian ``J[i, j] = d fun_i / d x_j`` by central differences.

    ``fun`` may return real or complex arrays.
    """
    x = np.asarray(x, dtype=float)
    h = _step(x, fd_step() if rel is None else rel)
    f0 = np.asarray(fun(x))
    jac = np.empty((f0.size, x.size), dtype=f0.dtype)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        jac[:, j] = _central(fun, x, e, h, extrapolate).ravel()
    return jac


def directional(fun, x, direction, rel=None, extrapolate=False):
    """Derivative of ``fun`` at ``x`` along ``direction`` (not normalized)."""
    x = np.asarray(x, dtype=float)
    direction = np.asarray(direction, dtype=float)
    norm = np.linalg.norm(direction)
    if norm == 0.0:
        return np.zeros_like(np.asarray(fun(x)), dtype=float)
    h = _step(x, fd_step() if rel is None else rel) / norm
    return _central(fun, x, h * direction, h, extrapolate)
