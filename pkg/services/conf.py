import os
from pathlib import Path

from django.conf import settings
from django.core.exceptions import ImproperlyConfigured


def lab_setting(name, default):
    """
    Read a lab setting from Django settings, falling back to ``default``.

    The numerical services are also imported outside a configured Django
    process (e.g. from a notebook), so an unconfigured settings object is
    treated like a missing attribute.
    """
    try:
        return getattr(settings, name, default)
    except ImproperlyConfigured:
        return default


def guard_floor():
    return float(lab_setting('CD_LAB_GUARD_FLOOR', 1e-10))


def default_tol():
    return float(lab_setting('CD_LAB_DEFAULT_TOL', 1e-10))


def fd_step():
    return float(lab_setting('CD_LAB_FD_STEP', 1e-6))


def sweep_budget():
    return int(lab_setting('CD_LAB_SWEEP_BUDGET', 400))


def dyn_threads():
    return max(1, int(lab_setting('CD_DYN_THREADS', os.cpu_count() or 1)))


def output_dir():
    return Path(lab_setting('CD_LAB_OUTPUT_DIR', Path.cwd() / 'output'))
