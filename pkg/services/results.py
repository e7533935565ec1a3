"""
Machine-readable run output: CSV tables and the JSON result bundle.

Numbers are written with 17 significant digits so that every float
survives a write/read cycle unchanged.
"""
import csv
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import django
import numpy as np
import scipy

from .exceptions import ConfigInvalid

logger = logging.getLogger(__name__)


def format_number(value):
    return f"{float(value):.17g}"


def plain(value):
    """Convert numpy scalars, arrays, tuples and complex numbers into JSON-ready values."""
    if isinstance(value, dict):
        return {str(key): plain(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(item) for item in value]
    if isinstance(value, np.ndarray):
        return plain(value.tolist())
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, Path):
        return str(value)
    return value


def canonical_json(config):
    return json.dumps(plain(config), sort_keys=True, separators=(',', ':'))


def config_hash(config):
    """sha256 hex digest of the canonical JSON form of a run configuration."""
    return hashlib.sha256(canonical_json(config).encode('utf-8')).hexdigest()


def versions():
    return {'numpy': np.__version__, 'scipy': scipy.__version__, 'django': django.get_version()}


def write_csv(path, header, rows):
    """Write a header row and numeric rows; non-numeric cells are written as text."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open('w', newline='') as handle:
        writer = csv.writer(handle, quoting=csv.QUOTE_MINIMAL, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(value) for value in row])
    logger.info(f"Wrote {path}")
    return path


def _cell(value):
    if value is None:
        return ''
    if isinstance(value, (bool, np.bool_, str)):
        return str(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format_number(value)


def read_csv(path):
    with Path(path).open(newline='') as handle:
        rows = list(csv.reader(handle))
    return rows[0], rows[1:]


def trajectory_table(system, traj):
    """Columns ``t``, the declared state components, then the declared quasi-integrals."""
    quasi = system.quasi_integrals()
    header = ['t'] + list(system.state_labels()) + list(quasi)
    rows = []
    for t, x in zip(traj.times, traj.states):
        rows.append([t, *x, *(Q(x, t) for Q in quasi.values())])
    return header, rows


def write_trajectory_csv(path, system, traj):
    header, rows = trajectory_table(system, traj)
    return write_csv(path, header, rows)


def write_phase_csv(path, system, traj, columns=(0, 1)):
    """Projection of a trajectory on two state coordinates, for phase portraits."""
    labels = list(system.state_labels())
    i, j = columns
    return write_csv(path, [labels[i], labels[j]], traj.states[:, [i, j]])


def write_json(path, payload):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(plain(payload), indent=2, sort_keys=True))
    logger.info(f"Wrote {path}")
    return path


@dataclass
class ResultBundle:
    """Everything one run produced: metadata, cycle reports, Lie candidates and checks."""

    command: str
    config: dict
    seed: int
    config_hash: str = ''
    versions: dict = field(default_factory=versions)
    cycles: list = field(default_factory=list)
    candidates: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.config = plain(self.config)
        if not self.config_hash:
            self.config_hash = config_hash(self.config)
        for name in ('cycles', 'candidates', 'checks', 'extra'):
            setattr(self, name, plain(getattr(self, name)))

    @property
    def passed(self):
        return all(check['passed'] for check in self.checks)

    def to_dict(self):
        return {
            'metadata': {'command': self.command, 'seed': self.seed, 'config_hash': self.config_hash,
                         'versions': self.versions},
            'config': self.config,
            'cycles': self.cycles,
            'candidates': self.candidates,
            'checks': self.checks,
            'extra': self.extra,
        }

    @classmethod
    def from_dict(cls, data):
        metadata = data['metadata']
        bundle = cls(command=metadata['command'], config=data['config'], seed=metadata['seed'],
                     config_hash=metadata['config_hash'], versions=metadata['versions'],
                     cycles=data.get('cycles', []), candidates=data.get('candidates', []),
                     checks=data.get('checks', []), extra=data.get('extra', {}))
        recomputed = config_hash(bundle.config)
        if recomputed != bundle.config_hash:
            raise ConfigInvalid(f"Stored config hash {bundle.config_hash[:12]} does not match {recomputed[:12]}",
                                path='metadata.config_hash')
        return bundle

    def save(self, path):
        return write_json(path, self.to_dict())

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))
