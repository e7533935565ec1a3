"""
Registry of the concrete models.

Every model class carries a ``model_id`` and ``default_params``; the registry
adds run defaults (kappa, time span) and builds instances from validated configs.
"""
import copy

from ..conf import default_tol
from ..exceptions import UnknownModel
from .matrix import FermionModel, MatrixModel
from .oscillator import CsOscillator
from .simple import (CircleParticle, ConstantsTorus, EulerSystem, ForcedOscillator, KahlerLogModel, LinearExample,
                     Monopole, NonautonomousOscillator, Raindrop, ReducedMatrixSystem, TorusSystem, ToyOscillator)
from .spin import SpinModel

MODELS = {cls.model_id: cls for cls in (
    EulerSystem, LinearExample, ToyOscillator, Raindrop, Monopole, TorusSystem, ConstantsTorus, CircleParticle,
    ForcedOscillator, NonautonomousOscillator, KahlerLogModel, ReducedMatrixSystem, MatrixModel, FermionModel,
    CsOscillator, SpinModel,
)}

# models whose construction draws from the run seed
SEEDED = {MatrixModel.model_id, FermionModel.model_id}

RUN_DEFAULTS = {
    'euler': {'kappa': 1.0, 't_end': 10.0},
    'linear_example': {'kappa': 1.0, 't_end': 10.0},
    'toy_oscillator': {'kappa': 1.0, 't_end': 40.0},
    'raindrop': {'kappa': 1.0, 't_end': 10.0},
    'monopole': {'kappa': 1.0, 't_end': 20.0},
    'torus': {'kappa': 1.0, 't_end': 30.0},
    'torus_constants': {'kappa': 1.0, 't_end': 30.0},
    'circle_particle': {'kappa': 1.0, 't_end': 30.0},
    'forced_oscillator': {'kappa': 0.5, 't_end': 80.0},
    'nonautonomous_oscillator': {'kappa': 1.0, 't_end': 30.0},
    'kahler_log': {'kappa': 1.0, 't_end': 30.0},
    'matrix_reduced': {'kappa': 1.0, 't_end': 200.0},
    'matrix': {'kappa': 1.0, 't_end': 60.0},
    'fermion': {'kappa': 1.0, 't_end': 60.0},
    'cs_oscillator': {'kappa': 0.01, 't_end': 2000.0},
    'spin': {'kappa': 0.04, 't_end': 1000.0},
}


def model_ids():
    return sorted(MODELS)


def model_class(model_id):
    try:
        return MODELS[model_id]
    except KeyError:
        raise UnknownModel(f"Unknown model: {model_id}", model=model_id)


def default_config(model_id):
    """Complete run configuration with the model's default parameters."""
    cls = model_class(model_id)
    run = RUN_DEFAULTS[model_id]
    return {
        'model': model_id,
        'kappa': run['kappa'],
        'seed': 0,
        'tol': default_tol(),
        't_end': run['t_end'],
        'params': copy.deepcopy(cls.default_params),
        'initial': None,
    }


def build_system(model_id, kappa, params=None, seed=None):
    """Instantiate a model; ``params`` falls back to the model defaults key by key."""
    cls = model_class(model_id)
    merged = copy.deepcopy(cls.default_params)
    merged.update(params or {})
    if model_id in SEEDED:
        return cls.from_params(kappa, merged, seed=seed)
    return cls.from_params(kappa, merged)
